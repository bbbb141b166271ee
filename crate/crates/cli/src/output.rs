//! CSV logs, checkpoints and the sweep report.

use crate::error::{csv_at, io_at, CliError, CliResult};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thinslab_core::experiment::{LimitRow, ResidualRow, RunOutput, SweepReport, SweepRow};
use thinslab_core::regime::LambdaLimit;
use thinslab_core::snapshot::{write_checkpoint, Checkpoint};
use thinslab_core::solver3d::{EnergyLedger, State3D};
use thinslab_core::diagnostics::DiagnosticsRecord;

pub const SUMMARY_FILE: &str = "summary.txt";
pub const VERDICTS_FILE: &str = "verdicts.csv";
pub const QUANTITY_HEADER: [&str; 3] = ["ell", "epsilon", "value"];

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_at(path))?;
    w.write_record(header).map_err(csv_at(path))?;
    for r in rows {
        w.write_record(r.iter().map(|&v| num(v))).map_err(csv_at(path))?;
    }
    w.flush().map_err(io_at(path))
}

pub fn write_ledger(path: &Path, ledger: &EnergyLedger) -> CliResult<()> {
    write_table(
        path,
        &["t", "kinetic", "dissipation", "boundary", "budget_slack"],
        ledger
            .rows
            .iter()
            .map(|r| vec![r.t, r.kinetic, r.dissipation, r.boundary, r.budget_slack]),
    )
}

pub fn write_records(path: &Path, records: &[DiagnosticsRecord]) -> CliResult<()> {
    write_table(path, &DiagnosticsRecord::COLUMNS, records.iter().map(|r| r.values().to_vec()))
}

pub fn write_limit_rows(path: &Path, rows: &[LimitRow]) -> CliResult<()> {
    write_table(path, &LimitRow::COLUMNS, rows.iter().map(|r| r.values().to_vec()))
}

pub fn write_residuals(path: &Path, rows: &[ResidualRow]) -> CliResult<()> {
    let mut header: Vec<String> = vec!["t".into(), "vorticity".into(), "mass".into()];
    if let Some(first) = rows.first() {
        for (m, _, _) in &first.wave {
            header.push(format!("wave_sigma_m{m}"));
            header.push(format!("wave_eta_m{m}"));
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        path,
        &header,
        rows.iter().map(|r| {
            let mut v = vec![r.t, r.vorticity, r.mass];
            for &(_, s, e) in &r.wave {
                v.push(s);
                v.push(e);
            }
            v
        }),
    )
}

pub fn checkpoint_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("checkpoint_{step:08}.bin"))
}

pub fn save_checkpoint(path: &Path, state: &State3D) -> CliResult<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(
        &mut w,
        &Checkpoint {
            regime: state.regime,
            t: state.t,
            rho: state.rho.clone(),
            u: state.u.clone(),
        },
    )?;
    w.flush().map_err(io_at(path))
}

/// Ledger, diagnostics, limit and residual logs of one run.
pub fn write_run(dir: &Path, out: &RunOutput) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    write_ledger(&dir.join("ledger.csv"), &out.ledger)?;
    write_records(&dir.join("diagnostics.csv"), &out.records)?;
    if !out.limit_rows.is_empty() {
        write_limit_rows(&dir.join("limit.csv"), &out.limit_rows)?;
    }
    if !out.residuals.is_empty() {
        write_residuals(&dir.join("residuals.csv"), &out.residuals)?;
    }
    Ok(())
}

fn limit_tag(l: LambdaLimit) -> String {
    match l {
        LambdaLimit::Finite(v) => format!("finite:{}", num(v)),
        LambdaLimit::Vanishing => "vanishing".into(),
        LambdaLimit::Divergent => "divergent".into(),
    }
}

fn parse_limit(s: &str) -> CliResult<LambdaLimit> {
    match s {
        "vanishing" => Ok(LambdaLimit::Vanishing),
        "divergent" => Ok(LambdaLimit::Divergent),
        _ => s
            .strip_prefix("finite:")
            .and_then(|v| v.parse().ok())
            .map(LambdaLimit::Finite)
            .ok_or_else(|| CliError::Report(format!("bad limit `{s}`"))),
    }
}

/// Summary lines, one `{ell, epsilon, value}` CSV per quantity and the verdict table.
pub fn emit_report(report: &SweepReport, dir: &Path) -> CliResult<()> {
    if report.rows.is_empty() {
        return Err(CliError::Report("refusing to emit an empty sweep".into()));
    }
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mut s = String::new();
    s.push_str(&format!("members = {}\n", report.rows.len()));
    s.push_str(&format!("limit = {}\n", limit_tag(report.limit)));
    s.push_str(&format!(
        "n = {}\n",
        report.rows.iter().map(|r| r.n.to_string()).collect::<Vec<_>>().join(",")
    ));
    for (name, f) in &report.fits {
        s.push_str(&format!("fit.{name}.exponent = {}\n", num(f.exponent)));
        s.push_str(&format!("fit.{name}.constant = {}\n", num(f.constant)));
        s.push_str(&format!("fit.{name}.residual = {}\n", num(f.residual)));
        s.push_str(&format!("fit.{name}.half_width = {}\n", num(f.half_width)));
    }
    for (name, c) in &report.constants {
        s.push_str(&format!("constant.{name}.min = {}\n", num(c.min)));
        s.push_str(&format!("constant.{name}.max = {}\n", num(c.max)));
        s.push_str(&format!("constant.{name}.ratio = {}\n", num(c.ratio())));
    }
    for v in &report.verdicts {
        s.push_str(&format!("verdict.{} = {}\n", v.name, if v.passed { "PASS" } else { "FAIL" }));
    }
    let summary = dir.join(SUMMARY_FILE);
    fs::write(&summary, s).map_err(io_at(&summary))?;

    for q in report.quantity_names() {
        let path = dir.join(format!("{q}.csv"));
        let rows = report
            .rows
            .iter()
            .filter_map(|r| r.quantities.get(&q).map(|&v| vec![r.ell, r.epsilon, v]));
        write_table(&path, &QUANTITY_HEADER, rows)?;
    }

    let path = dir.join(VERDICTS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_at(&path))?;
    w.write_record(["name", "passed", "detail"]).map_err(csv_at(&path))?;
    for v in &report.verdicts {
        w.write_record([v.name.as_str(), if v.passed { "true" } else { "false" }, v.detail.as_str()])
            .map_err(csv_at(&path))?;
    }
    w.flush().map_err(io_at(&path))
}

/// Parses `key = value` lines of a summary file.
pub fn read_summary(dir: &Path) -> CliResult<BTreeMap<String, String>> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(io_at(&path))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}

fn read_quantity(path: &Path) -> CliResult<Vec<[f64; 3]>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_at(path))?;
    let header = r.headers().map_err(csv_at(path))?.clone();
    if header.iter().collect::<Vec<_>>() != QUANTITY_HEADER {
        return Err(CliError::Report(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_at(path))?;
        let mut row = [0.0; 3];
        for (i, v) in row.iter_mut().enumerate() {
            *v = rec[i]
                .parse()
                .map_err(|_| CliError::Report(format!("{}: bad number `{}`", path.display(), &rec[i])))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Rebuilds the sweep table from an emitted report directory.
pub fn read_report(dir: &Path) -> CliResult<(LambdaLimit, Vec<SweepRow>)> {
    let summary = read_summary(dir)?;
    let limit = parse_limit(summary.get("limit").ok_or_else(|| CliError::Report("summary lacks `limit`".into()))?)?;
    let ns: Vec<u32> = summary
        .get("n")
        .ok_or_else(|| CliError::Report("summary lacks `n`".into()))?
        .split(',')
        .map(|v| v.parse().map_err(|_| CliError::Report(format!("bad member `{v}`"))))
        .collect::<CliResult<_>>()?;
    let mut rows: Vec<SweepRow> = ns
        .iter()
        .map(|&n| SweepRow {
            n,
            epsilon: 1.0 / n as f64,
            ell: f64::NAN,
            alpha: f64::NAN,
            quantities: BTreeMap::new(),
        })
        .collect();
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(io_at(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|f| f != VERDICTS_FILE))
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let table = read_quantity(&path)?;
        for [ell, eps, v] in table {
            let row = rows
                .iter_mut()
                .find(|r| r.epsilon == eps)
                .ok_or_else(|| CliError::Report(format!("{name}: eps = {eps} is not a member")))?;
            row.ell = ell;
            row.quantities.insert(name.clone(), v);
        }
    }
    Ok((limit, rows))
}

/// Human-readable summary printed by the report and sweep commands.
pub fn render(report: &SweepReport) -> String {
    let mut s = format!("{} members, limit {}\n", report.rows.len(), limit_tag(report.limit));
    for (name, f) in &report.fits {
        s.push_str(&format!(
            "  {name:<18} exponent {:+.3} +- {:.3}  constant {:.3e}\n",
            f.exponent, f.half_width, f.constant
        ));
    }
    for (name, c) in &report.constants {
        s.push_str(&format!("  {name:<18} in [{:.3e}, {:.3e}] ratio {:.2}\n", c.min, c.max, c.ratio()));
    }
    for v in &report.verdicts {
        s.push_str(&format!("{} {}: {}\n", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SweepRow> {
        (4..9)
            .map(|n| {
                let eps = 1.0 / n as f64;
                let mut q = BTreeMap::new();
                q.insert("v3".to_string(), 0.3 * eps.powf(1.1));
                q.insert("e".to_string(), 2.0 * eps / 3.0);
                SweepRow {
                    n,
                    epsilon: eps,
                    ell: eps,
                    alpha: eps,
                    quantities: q,
                }
            })
            .collect()
    }

    #[test]
    fn emitted_tables_parse_back_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let report = SweepReport::from_rows(LambdaLimit::Finite(1.0), rows()).unwrap();
        emit_report(&report, dir.path()).unwrap();
        let (limit, back) = read_report(dir.path()).unwrap();
        assert_eq!(limit, report.limit);
        assert_eq!(back.len(), report.rows.len());
        for (a, b) in back.iter().zip(&report.rows) {
            assert_eq!(a.n, b.n);
            assert_eq!(a.epsilon, b.epsilon);
            assert_eq!(a.ell, b.ell);
            assert_eq!(a.quantities, b.quantities);
        }
        let again = SweepReport::from_rows(limit, back).unwrap();
        assert_eq!(again.fits, report.fits);
    }

    #[test]
    fn single_quantity_gives_one_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rows();
        for row in &mut r {
            row.quantities.remove("e");
        }
        let report = SweepReport::from_rows(LambdaLimit::Vanishing, r).unwrap();
        emit_report(&report, dir.path()).unwrap();
        let mut csvs: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|f| f.ends_with(".csv") && f != VERDICTS_FILE)
            .collect();
        csvs.sort();
        assert_eq!(csvs, vec!["v3.csv".to_string()]);
        let text = fs::read_to_string(dir.path().join("v3.csv")).unwrap();
        assert!(text.starts_with("ell,epsilon,value\n"));
        let summary = read_summary(dir.path()).unwrap();
        assert_eq!(summary["limit"], "vanishing");
        assert_eq!(summary["members"], "5");
    }

    #[test]
    fn empty_report_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut report = SweepReport::from_rows(LambdaLimit::Finite(1.0), rows()).unwrap();
        report.rows.clear();
        assert!(matches!(emit_report(&report, dir.path()), Err(CliError::Report(_))));
    }

    #[test]
    fn limit_tags_roundtrip() {
        for l in [LambdaLimit::Finite(0.25), LambdaLimit::Vanishing, LambdaLimit::Divergent] {
            assert_eq!(parse_limit(&limit_tag(l)).unwrap(), l);
        }
        assert!(parse_limit("finite:x").is_err());
    }
}
