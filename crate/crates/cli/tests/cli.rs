use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_steepfront"));
    c.env_remove("STEEPFRONT_OUT");
    c
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, cfg: &Path, out: &str) -> Output {
    bin()
        .args(["--quiet", "run", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(dir.join(out))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

const Q1: &str = "mode = TypeII\nlaw.q = 1\ndata.preset = symmetric-cos\n";
const Q_HALF: &str = "mode = TypeII\nlaw.q = 0.5\noutput.times = 0.05, 0.1, 0.15, 0.2, 0.3\n\
                      solver.max_relative_change = 0.01\noutput.plots = false\n";

#[test]
fn type_ii_heat_run_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "q1.cfg", Q1);
    let o = run(tmp.path(), &cfg, "out");
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    for f in ["profiles.csv", "interfaces.csv", "rates.csv", "manifest.cfg", "profile_000.svg", "profile_004.svg"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let (h, rows) = read_csv(&out.join("interfaces.csv"));
    assert_eq!(h, ["t", "l", "r", "mass"]);
    let r: Vec<f64> = rows.iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] <= w[0]));
    assert!(r[0] == 1.0 && *r.last().unwrap() < 0.06);
    let (h, _) = read_csv(&out.join("profiles.csv"));
    assert_eq!(h, ["t", "x", "u"]);
    let (_, rates) = read_csv(&out.join("rates.csv"));
    assert_eq!(rates[0][0], "half_width");
    assert_eq!(rates[0].last().unwrap(), "true");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "q1.cfg", Q1);
    assert!(run(tmp.path(), &cfg, "a").status.success());
    assert!(run(tmp.path(), &cfg, "b").status.success());
    for f in ["profiles.csv", "interfaces.csv", "rates.csv", "manifest.cfg"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn manifest_is_a_valid_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "q1.cfg", Q1);
    assert!(run(tmp.path(), &cfg, "out").status.success());
    let manifest = tmp.path().join("out/manifest.cfg");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("# status: ok") && text.contains("grid.n_cells = 400"));
    let o = bin().args(["validate", "--config"]).arg(&manifest).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn profile_mode_passes_symmetry_check() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "p.cfg", "mode = Profile\nlaw.q = 3\n");
    let o = run(tmp.path(), &cfg, "out");
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&tmp.path().join("out/eigenprofile.csv"));
    assert_eq!(h, ["u", "f", "f_mirror", "defect"]);
    assert_eq!(rows.len(), 401);
    let (_, checks) = read_csv(&tmp.path().join("out/checks.csv"));
    let sym = checks.iter().find(|c| c[0] == "symmetry_defect").unwrap();
    assert_eq!(sym[3], "true");
    assert!(checks.iter().all(|c| c[3] == "true"), "{checks:?}");
}

#[test]
fn empty_config_exits_with_validation_status() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "e.cfg", "");
    let o = run(tmp.path(), &cfg, "out");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mode is required"));
}

#[test]
fn validate_reports_constraints() {
    let tmp = TempDir::new().unwrap();
    let ok = write_cfg(tmp.path(), "ok.cfg", "mode = TypeII\nlaw.q = 1\ndata.preset = asymmetric-poly\n");
    let o = bin().args(["validate", "--config"]).arg(&ok).output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "ok");

    let cases = [
        ("mode = TypeII\nlaw.q = -1\n", "q > 0"),
        ("mode = TypeI\nlaw.m = -1\n", "do not exist"),
        ("mode = TypeII\nlaw.m = 1\n", "Φ(∞) finite"),
        ("mode = TypeII\nlaw.q = 1\nsolver.tolerance = 1\ncolor = red\n", "unknown keys: solver.tolerance (line 3), color (line 4)"),
        ("mode = TypeII\nlaw.q = 1\nsolver.dt_max = fast\n", "line 3: solver.dt_max"),
        ("mode = TypeII\nlaw.q = 1\njust words\n", "line 3: expected `key = value`"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let p = write_cfg(tmp.path(), &format!("bad{i}.cfg"), text);
        let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "case {i}");
        assert!(stderr(&o).contains(needle), "case {i}: {}", stderr(&o));
    }
}

#[test]
fn stalled_solver_exits_three_with_partial_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "s.cfg",
        "mode = TypeII\nlaw.q = 3\nsolver.newton_max_iter = 1\nsolver.newton_tol = 1e-300\n\
         solver.dt_init = 0.1\nsolver.dt_max = 0.1\noutput.plots = false\n",
    );
    let o = run(tmp.path(), &cfg, "out");
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let out = tmp.path().join("out");
    assert!(out.join("interfaces.csv").exists());
    let manifest = fs::read_to_string(out.join("manifest.cfg")).unwrap();
    assert!(manifest.contains("failed (exit 3)"));
}

#[test]
fn report_summarises_heat_and_extinction_runs() {
    let tmp = TempDir::new().unwrap();
    let c1 = write_cfg(tmp.path(), "q1.cfg", Q1);
    let c2 = write_cfg(tmp.path(), "qh.cfg", Q_HALF);
    assert!(run(tmp.path(), &c1, "q1").status.success());
    assert!(run(tmp.path(), &c2, "qh").status.success());

    let o = bin().arg("report").arg(tmp.path().join("q1")).output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("half_width")).unwrap();
    assert!(line.ends_with("PASS"), "{line}");
    let rate: f64 = line.split("fitted ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((rate + std::f64::consts::PI.powi(2)).abs() < 0.3, "{rate}");
    assert!(tmp.path().join("q1/report.svg").exists());

    let o = bin().arg("report").arg(tmp.path().join("qh")).output().unwrap();
    let text = stdout(&o);
    assert!(text.contains("extinction time T_est"), "{text}");
    let line = text.lines().find(|l| l.starts_with("half_width")).unwrap();
    let e: f64 = line.split("fitted ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((e - 2.0).abs() < 0.14, "{e}");
}

#[test]
fn report_on_empty_directory_only_warns() {
    let tmp = TempDir::new().unwrap();
    let o = bin().arg("report").arg(tmp.path()).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("warning: missing"));
}

#[test]
fn env_var_sets_output_root() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "p.cfg", "mode = Profile\nlaw.alpha = 1\noutput.plots = false\n");
    let target = tmp.path().join("from-env");
    let o = bin()
        .env("STEEPFRONT_OUT", &target)
        .args(["--quiet", "run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("similarity.csv").exists());
}

#[test]
fn sweep_runs_each_config_into_its_own_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("cfgs");
    fs::create_dir(&dir).unwrap();
    write_cfg(&dir, "heat.cfg", Q1);
    write_cfg(&dir, "prof.cfg", "mode = Profile\nlaw.q = 0.5\n");
    write_cfg(&dir, "broken.cfg", "mode = TypeII\n");
    let root = tmp.path().join("sweep");
    let o = bin()
        .args(["--quiet", "sweep", "--config"])
        .arg(&dir)
        .arg("--out")
        .arg(&root)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(root.join("heat/rates.csv").exists());
    assert!(root.join("prof/eigenprofile.csv").exists());
    assert!(stderr(&o).contains("broken.cfg"));
}

#[test]
fn type_i_and_coexist_runs() {
    let tmp = TempDir::new().unwrap();
    let c = write_cfg(
        tmp.path(),
        "t1.cfg",
        "mode = TypeI\nlaw.m = 2\ngrid.n_cells = 800\ngrid.x_min = -20\ngrid.x_max = 20\n\
         output.times = 1, 2, 5, 10, 20, 50, 100\nsolver.dt_max = 0.5\noutput.plots = false\n",
    );
    let o = run(tmp.path(), &c, "t1");
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rates) = read_csv(&tmp.path().join("t1/rates.csv"));
    assert_eq!(rates[0][0], "sup_norm");
    assert_eq!(rates[0].last().unwrap(), "true");

    let c = write_cfg(tmp.path(), "co.cfg", "mode = Coexist\nlaw.alpha = 1\noutput.times = 0.05, 0.1, 0.2\n");
    let o = run(tmp.path(), &c, "co");
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["type_ii/profiles.csv", "type_i/profiles.csv", "coexist.svg", "manifest.cfg"] {
        assert!(tmp.path().join("co").join(f).exists(), "missing {f}");
    }
}
