use std::fs;
use std::path::Path;
use std::process::Command;

use rnsa_cli::commands::{
    bounds_from_config, cmd_bounds, cmd_pair, cmd_simulate, pair_analysis, squeeze_analysis, tangent_analysis,
    RunOptions,
};
use rnsa_cli::{parse_config, read_checkpoint, CliError, ExperimentConfig, Setup};

const BASE: &str = r#"
seed = 11

[lattice]
n = [8, 8, 8]

[physics]
viscosity = 1.0
alpha = 0.05
coriolis = 10.0

[forcing]
norm0 = 2.0

[stepper]
dt = 0.01

[run]
t_final = 0.2
window = 0.1
"#;

fn config(extra: &str) -> ExperimentConfig {
    parse_config(&format!("{BASE}{extra}")).unwrap()
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out: Some(dir.to_path_buf()),
        resume: None,
    }
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let j = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[j].parse().unwrap()).collect()
}

#[test]
fn zero_duration_emits_initial_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("");
    cfg.run.t_final = 0.0;
    cmd_simulate(cfg, &opts(dir.path())).unwrap();
    let r = rows(&dir.path().join("trajectory.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][0], "0.0");
    let ck = read_checkpoint(&dir.path().join("final.ckpt")).unwrap();
    assert_eq!(ck.state.t, 0.0);
}

#[test]
fn unforced_alpha_energy_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("");
    cfg.forcing.norm0 = 0.0;
    cfg.run.sample_every = Some(0.01);
    cmd_simulate(cfg, &opts(dir.path())).unwrap();
    let e = column(&dir.path().join("trajectory.csv"), "alpha_energy");
    assert_eq!(e.len(), 21);
    for w in e.windows(2) {
        assert!(w[1] < w[0], "{e:?}");
    }
}

#[test]
fn csv_columns_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(config(""), &opts(dir.path())).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("trajectory.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "t",
            "norm0",
            "norm1",
            "norm_beta",
            "norm_beta_plus_1",
            "alpha_energy",
            "div_residual",
            "config_hash",
            "tool_version"
        ]
    );
    let hash = config("").hash();
    for row in rows(&dir.path().join("trajectory.csv")) {
        assert_eq!(row[7], hash);
        assert_eq!(row[8], rnsa_cli::TOOL_VERSION);
    }
    let effective = fs::read_to_string(dir.path().join("effective_config.toml")).unwrap();
    assert_eq!(parse_config(&effective).unwrap(), config(""));
}

#[test]
fn zero_perturbation_pair_has_zero_difference() {
    let mut cfg = config("[pair]\nduration = 0.1\nperturbation = 0.0\nn0 = 6\n");
    cfg.pair.c1 = Some(1.0);
    cfg.pair.c2 = Some(1.0);
    let (report, summary) = pair_analysis(&Setup::new(cfg).unwrap()).unwrap();
    assert!(report.records.iter().all(|r| r.w_norm0 == 0.0 && r.w_norm1 == 0.0 && r.w_norm_beta == 0.0));
    assert!(summary.passed && summary.k1_empirical.is_none());
}

#[test]
fn pair_chain_holds_and_csv_is_reproducible() {
    let extra = "[pair]\ntransient = 0.1\nduration = 0.2\nn0 = 6\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = cmd_pair(config(extra), &opts(a.path())).unwrap();
    cmd_pair(config(extra), &opts(b.path())).unwrap();
    assert!(first.passed, "{}", first.summary);
    for name in ["pair.csv", "pair_report.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn squeeze_vacuous_cases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("[squeeze]\npairs = 1\ntransient = 0.1\nperturbation = 0.0\nt_star = 0.05\nn0 = 6\n");
    let s = squeeze_analysis(&Setup::new(cfg).unwrap(), dir.path()).unwrap();
    let e = s.report.entries[0];
    assert!(e.holds && e.contraction == 0.0);

    let cfg = config("[squeeze]\npairs = 3\ntransient = 0.1\nt_star = 0.05\nn0 = 6\n");
    let s = squeeze_analysis(&Setup::new(cfg).unwrap(), dir.path()).unwrap();
    let last = s.report.scan.last().unwrap();
    assert_eq!(last.n0, rnsa_core::operators::StokesSpectrum::new(&Setup::new(config("")).unwrap().lattice).total_dof());
    assert_eq!((last.counterexamples, last.high_dominated), (0, 0));
    assert_eq!(s.report.minimal_n0.unwrap(), s.report.scan.iter().find(|r| r.counterexamples == 0).unwrap().n0);
    assert_eq!(s.poincare_violations, 0);
}

#[test]
fn tangent_hooks() {
    let mut cfg = config("[tangent]\nduration = 0.1\nscales = [1e-2, 1e-3]\ntail_t_star = 0.05\nprobes = 2\n");
    cfg.tangent.direction.norm0 = 0.0;
    let s = tangent_analysis(&Setup::new(cfg.clone()).unwrap()).unwrap();
    assert!(s.variants.iter().all(|v| v.frechet.indeterminate && v.frechet.fitted_order.is_none()));

    cfg.tangent.direction.norm0 = 1.0;
    cfg.physics.nonlinear = false;
    let s = tangent_analysis(&Setup::new(cfg).unwrap()).unwrap();
    let filtered = &s.variants[0].frechet;
    assert!(filtered.include_filter);
    for r in &filtered.ratios {
        assert!(*r <= 1e-12 * filtered.tangent_norm, "{r:e}");
    }
    assert!(s.tail.windows(2).all(|w| w[1].estimate <= w[0].estimate));
}

#[test]
fn bounds_modes() {
    let dir = tempfile::tempdir().unwrap();
    let unit = config("[bounds]\nlambda1 = 1.0\n");
    let r = bounds_from_config(&Setup::new(unit).unwrap(), dir.path()).unwrap();
    assert!((r.t_star - 1.0 / 15.5f64.sqrt()).abs() < 1e-12);
    assert!((r.c4 - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    assert_eq!(r.c5, 27.0 / 16.0);
    assert_eq!(r.source, "manual");

    let measured = "[bounds]\nmode = \"measured\"\n";
    let err = cmd_bounds(config(measured), &opts(dir.path())).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)) && err.to_string().contains("prior simulate run"), "{err}");

    let mut decay = config(measured);
    decay.forcing.norm0 = 0.0;
    decay.run.transient = 0.05;
    cmd_simulate(decay.clone(), &opts(dir.path())).unwrap();
    let r = bounds_from_config(&Setup::new(decay).unwrap(), dir.path()).unwrap();
    let traj = dir.path().join("trajectory.csv");
    let t = column(&traj, "t");
    let sup = |name: &str| {
        column(&traj, name)
            .iter()
            .zip(&t)
            .filter(|(_, t)| **t >= 0.05)
            .map(|(x, _)| *x)
            .fold(0.0, f64::max)
    };
    assert_eq!(r.input.rho_h, sup("norm0"));
    assert_eq!(r.input.rho_v, sup("norm1"));
    assert_eq!(r.source, "measured");
}

#[test]
fn inadmissible_theta_is_a_usage_error() {
    let e = parse_config(&format!("{BASE}[bounds]\ntheta = 1.5\n")).unwrap_err();
    assert_eq!(e.path, "bounds.theta");
    let mut input = rnsa_cli::commands::bounds_input(&Setup::new(config("")).unwrap(), (1.0, 1.0));
    input.theta = 1.0;
    let e = rnsa_cli::commands::bounds_analysis(&input, "manual", None).unwrap_err();
    assert!(e.to_string().contains("inadmissible"), "{e}");
    assert_eq!(e.exit_code(), rnsa_cli::exit::USAGE);
}

fn rnsa(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rnsa")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();
    fs::write(p("ok.toml"), BASE).unwrap();
    fs::write(p("typo.toml"), BASE.replace("viscosity", "viscocity")).unwrap();
    fs::write(
        p("blow.toml"),
        "[lattice]\nn = [8, 8, 8]\n[physics]\nviscosity = 0.01\n[initial]\nnorm0 = 1000.0\n\
         [stepper]\ndt = 0.5\n[run]\nt_final = 20.0\nsample_every = 0.5\n",
    )
    .unwrap();

    let (code, _) = rnsa(&["simulate", "--config", &p("ok.toml"), "--out", &p("a")]);
    assert_eq!(code, 0);
    let (code, err) = rnsa(&["simulate", "--config", &p("typo.toml"), "--out", &p("b")]);
    assert_eq!(code, 2);
    assert!(err.contains("physics.viscocity") && err.contains("`viscosity`"), "{err}");
    let (code, _) = rnsa(&["simulate", "--out", &p("b")]);
    assert_eq!(code, 2);

    let (code, err) = rnsa(&["simulate", "--config", &p("blow.toml"), "--out", &p("c")]);
    assert_eq!(code, 3, "{err}");
    let ck = read_checkpoint(&dir.path().join("c/final.ckpt")).unwrap();
    assert!(ck.state.v.is_finite());
    assert_eq!(ck.state.t, 0.0);
    let report = fs::read_to_string(dir.path().join("c/absorbing.json")).unwrap();
    assert!(report.contains("\"blow_up\": {"), "{report}");

    let (code, _) = rnsa(&["verify", "--fault-flip-bilinear"]);
    assert_eq!(code, 1);
    let (code, _) = rnsa(&["bounds", "--config", &p("ok.toml"), "--out", &p("d")]);
    assert_eq!(code, 0);
}

#[test]
fn verify_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a").display().to_string();
    let b = dir.path().join("b").display().to_string();
    assert_eq!(rnsa(&["verify", "--out", &a]).0, 0);
    assert_eq!(rnsa(&["verify", "--out", &b]).0, 0);
    assert_eq!(
        fs::read(dir.path().join("a/verify.json")).unwrap(),
        fs::read(dir.path().join("b/verify.json")).unwrap()
    );
}

#[test]
fn columns_helper() {
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(config(""), &opts(dir.path())).unwrap();
    let dat = dir.path().join("trajectory.dat");
    let csv = dir.path().join("trajectory.csv").display().to_string();
    assert_eq!(rnsa(&["columns", &csv, &dat.display().to_string()]).0, 0);
    let text = fs::read_to_string(dat).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# t norm0"));
    assert_eq!(lines.next().unwrap().split(' ').count(), 7);
}

#[test]
fn shipped_config_is_valid() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml");
    let cfg = parse_config(&fs::read_to_string(path).unwrap()).unwrap();
    Setup::new(cfg).unwrap();
}
