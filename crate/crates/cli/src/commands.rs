//! Subcommand bodies, kept out of `main` for testing.

use crate::config::RunConfig;
use crate::error::{io_at, CliError, CliResult};
use crate::output::{
    checkpoint_path, emit_report, read_report, render, save_checkpoint, write_limit_rows, write_run,
};
use std::fs;
use std::path::Path;
use thinslab_core::data::build_initial_data;
use thinslab_core::experiment::{matched_limit_state, run_single_with, run_sweep, LimitRow, RunOutput, SweepReport};
use thinslab_core::snapshot::{write_field2d, Representation};
use thinslab_core::solver2d::{LimitParams, Solver2D};

/// Runs the selected member, writing logs and checkpoints to the output directory.
pub fn run3d(cfg: &RunConfig, out_dir: &Path) -> CliResult<RunOutput> {
    let settings = cfg.run_settings()?;
    let member = cfg.member()?;
    fs::create_dir_all(out_dir).map_err(io_at(out_dir))?;
    let every = cfg.output.snapshot_every;
    let mut io_err = None;
    let out = run_single_with(&settings, &member, &mut |n, state| {
        if every > 0 && n % every == 0 && io_err.is_none() {
            io_err = save_checkpoint(&checkpoint_path(out_dir, n), state).err();
        }
    })?;
    if let Some(e) = io_err {
        return Err(e);
    }
    if let Some(last) = out.samples.last() {
        if every == 0 || out.steps % every != 0 {
            save_checkpoint(&checkpoint_path(out_dir, out.steps), last)?;
        }
    }
    write_run(out_dir, &out)?;
    Ok(out)
}

/// Runs the limit system alone from the matched data of the selected member.
pub fn run2d(cfg: &RunConfig, out_dir: &Path) -> CliResult<Vec<LimitRow>> {
    let settings = cfg.run_settings()?;
    let member = cfg.member()?;
    let geom = settings.geometry(member.ell)?;
    let data = build_initial_data(&settings.data, &member, &geom, &settings.limits)?;
    let (mut state, mean) = matched_limit_state(&data)?;
    let mut params = LimitParams::new(member.lambda());
    params.mean_flow = mean;
    let raw = settings.dt.unwrap_or(settings.step.dt_max);
    let steps = (settings.t_final / raw).ceil().max(1.0) as usize;
    let mut solver = Solver2D::new(params, settings.t_final / steps as f64)?;
    let mut rows = vec![LimitRow::of(&state, &solver.params)];
    for n in 1..=steps {
        solver.step(&mut state).map_err(|e| thinslab_core::error::Error::RunFailed {
            epsilon: member.epsilon,
            step: n,
            source: Box::new(e),
        })?;
        if n % settings.diag_stride == 0 || n == steps {
            rows.push(LimitRow::of(&state, &solver.params));
        }
    }
    fs::create_dir_all(out_dir).map_err(io_at(out_dir))?;
    write_limit_rows(&out_dir.join("limit.csv"), &rows)?;
    let path = out_dir.join("limit_final.bin");
    let mut buf = Vec::new();
    write_field2d(&mut buf, &state.r0, Representation::Physical)?;
    write_field2d(&mut buf, &state.velocity(&solver.params), Representation::Physical)?;
    fs::write(&path, buf).map_err(io_at(&path))?;
    Ok(rows)
}

/// Runs every member, writes per-member logs and the report.
pub fn sweep(cfg: &RunConfig, out_dir: &Path) -> CliResult<SweepReport> {
    let (report, outputs) = run_sweep(&cfg.sweep_settings()?)?;
    for out in &outputs {
        write_run(&out_dir.join(format!("member_{:04}", out.regime.n)), out)?;
    }
    emit_report(&report, &out_dir.join("report"))?;
    Ok(report)
}

/// Admissibility of every member's data; returns the text report and overall status.
pub fn check_data(cfg: &RunConfig) -> CliResult<(String, bool)> {
    let settings = cfg.run_settings()?;
    let mut text = String::new();
    let mut all = true;
    for m in cfg.members()? {
        let geom = settings.geometry(m.ell)?;
        let data = build_initial_data(&settings.data, &m, &geom, &settings.limits)?;
        let ok = data.report.passed();
        all &= ok;
        text.push_str(&format!(
            "n = {} eps = {:.6e} ell = {:.6e} alpha = {:.6e}: {}\n",
            m.n,
            m.epsilon,
            m.ell,
            m.alpha,
            if ok { "admissible" } else { "inadmissible" }
        ));
        for c in &data.report.checks {
            text.push_str(&format!(
                "  {} {}: {}\n",
                if c.passed { "ok  " } else { "FAIL" },
                c.hypothesis,
                c.detail
            ));
        }
    }
    Ok((text, all))
}

/// Recomputes fits and verdicts from an emitted report directory.
pub fn report(dir: &Path) -> CliResult<(String, bool)> {
    let (limit, rows) = read_report(dir)?;
    if rows.is_empty() {
        return Err(CliError::Report("no members".into()));
    }
    let rep = SweepReport::from_rows(limit, rows)?;
    Ok((render(&rep), rep.passed()))
}
