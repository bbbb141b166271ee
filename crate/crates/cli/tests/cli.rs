use std::fs;
use std::path::Path;
use std::process::Command;
use thinslab_cli::commands;
use thinslab_cli::config::RunConfig;
use thinslab_core::snapshot::read_checkpoint;

const SMALL: &str = r#"
[geometry]
nh = 8
nv = 5

[regime]
n_min = 4
n_max = 6

[data]
seed = 7
rho0 = { id = "constant", value = 1.0 }
r_in = { id = "layered", amplitude = 0.5, vertical = 0.25 }
u_in = { id = "ill_prepared", amplitude = 0.5, vertical = 0.25 }

[solver]
t_final = 0.1
dt = 0.01
dt_diag = 2

[output]
snapshot_every = 5
"#;

fn config() -> RunConfig {
    RunConfig::from_toml(SMALL, Path::new("small.toml")).unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn run3d_is_byte_reproducible() {
    let cfg = config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = commands::run3d(&cfg, a.path()).unwrap();
    commands::run3d(&cfg, b.path()).unwrap();
    assert_eq!(out.steps, 10);
    for f in ["ledger.csv", "diagnostics.csv", "limit.csv", "residuals.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let mut cps: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("checkpoint_"))
        .collect();
    cps.sort();
    assert_eq!(cps, ["checkpoint_00000000.bin", "checkpoint_00000005.bin", "checkpoint_00000010.bin"]);
    let last = read_checkpoint(&mut fs::read(a.path().join(&cps[2])).unwrap().as_slice()).unwrap();
    assert_eq!(last.regime.n, 4);
    assert!((last.t - 0.1).abs() < 1e-12);
    assert_eq!(last.u.phys(), out.samples.last().unwrap().u.phys());
}

#[test]
fn run2d_writes_limit_log() {
    let dir = tempfile::tempdir().unwrap();
    let rows = commands::run2d(&config(), dir.path()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-14));
    let text = fs::read_to_string(dir.path().join("limit.csv")).unwrap();
    assert!(text.starts_with("t,energy,enstrophy,r0_min,r0_max\n"));
    assert!(dir.path().join("limit_final.bin").exists());
}

#[test]
fn sweep_then_report_agree() {
    let dir = tempfile::tempdir().unwrap();
    let rep = commands::sweep(&config(), dir.path()).unwrap();
    assert_eq!(rep.rows.len(), 3);
    for n in 4..=6 {
        assert!(dir.path().join(format!("member_{n:04}/ledger.csv")).exists());
    }
    let (text, passed) = commands::report(&dir.path().join("report")).unwrap();
    assert_eq!(passed, rep.passed());
    assert!(text.contains("energy-inequality"));
}

#[test]
fn check_data_flags_vacuum_violation() {
    let (text, ok) = commands::check_data(&config()).unwrap();
    assert!(ok, "{text}");
    assert_eq!(text.matches("admissible").count(), 3);
    let bad = SMALL.replace("r_in = { id = \"layered\", amplitude = 0.5, vertical = 0.25 }", "r_in = { id = \"constant\", value = -5.0 }");
    let cfg = RunConfig::from_toml(&bad, Path::new("bad.toml")).unwrap();
    let (text, ok) = commands::check_data(&cfg).unwrap();
    assert!(!ok);
    assert!(text.contains("FAIL density-bounds"), "{text}");
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), SMALL);
    let bin = env!("CARGO_BIN_EXE_thinslab");
    let st = Command::new(bin).args(["check-data"]).arg(&good).output().unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));

    let typo = write_config(dir.path(), &SMALL.replace("t_final", "t_finale"));
    let st = Command::new(bin).args(["check-data"]).arg(&typo).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("t_finale"));

    let st = Command::new(bin).args(["report"]).arg(dir.path()).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
}
