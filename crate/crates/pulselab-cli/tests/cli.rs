use std::path::Path;

use pulselab_cli::{main_with_args, Numerics, RunConfig, Summary};

fn run(dir: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["pulselab".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(dir.display().to_string());
    main_with_args(argv)
}

fn summary(dir: &Path) -> Vec<(String, String)> {
    Summary::parse(&std::fs::read_to_string(dir.join("summary.txt")).unwrap())
}

fn value(s: &[(String, String)], key: &str) -> String {
    s.iter().find(|e| e.0 == key).unwrap_or_else(|| panic!("missing {key}")).1.clone()
}

#[test]
fn construct_pulse_reports_u0_minus() {
    let d = tempfile::tempdir().unwrap();
    let code = run(d.path(), &["construct-pulse", "--a", "0.5", "--m", "0.45", "--D", "0.01", "--terrain", "flat"]);
    assert_eq!(code, 0);
    let s = summary(d.path());
    let mu: f64 = value(&s, "mu").parse().unwrap();
    let u0: f64 = value(&s, "u0_minus").parse().unwrap();
    // flat terrain: u_b(0) = 1, C^s(0) = -1
    let expect = (1.0 - (1.0 - 12.0 * mu).sqrt()) / (2.0 * mu);
    assert!((u0 - expect).abs() < 1e-8 * expect, "{u0} vs {expect}");
    assert!(d.path().join("profile.csv").exists());
    let text = std::fs::read_to_string(d.path().join("summary.txt")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("u0_minus=") && l.contains("# u0 =")));
}

#[test]
fn check_flags_large_gaussian() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["check", "--terrain", "gaussian:1:0.5"]), 0);
    assert_eq!(value(&summary(d.path()), "a3"), "false");
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["no-such-command"]), 2);
    assert_eq!(run(d.path(), &["check", "--terrain", "gaussian:1"]), 2);
    assert_eq!(run(d.path(), &["construct-pulse", "--branch", "sideways"]), 2);
}

#[test]
fn domain_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    // 12 mu > 1 leaves no real amplitude on flat terrain
    assert_eq!(run(d.path(), &["construct-pulse", "--a", "0.1", "--m", "0.45", "--D", "0.01"]), 1);
    assert_eq!(run(d.path(), &["dichotomy-bounds", "--delta", "0.3"]), 1);
}

#[test]
fn two_pulse_root_and_table() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["two-pulse", "--beta", "1", "--plot"]), 0);
    let p: f64 = value(&summary(d.path()), "P_star").parse().unwrap();
    assert!((p - 0.5108).abs() < 1e-3);
    assert!(d.path().join("two_pulse.gp").exists());
    let csv = std::fs::read_to_string(d.path().join("two_pulse.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("P,T"));
    assert_eq!(csv.lines().count(), 502);
}

#[test]
fn remaining_subcommands_run() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(run(p, &["dichotomy-bounds", "--terrain", "scaled:0.05:gaussian:1:1"]), 0);
    assert_eq!(run(p, &["slowfield", "--terrain", "lncosh:0.5", "--L", "20", "--n", "2001"]), 0);
    assert!(p.join("slowfield.csv").exists());
    assert_eq!(run(p, &["small-eig", "--terrain", "scaled:0.01:gaussian:1:1", "--form", "double-limit"]), 0);
    assert_eq!(run(p, &["pulse-ode", "--terrain", "gaussian:1:0.5", "--positions", "0.5", "--t-end", "100"]), 0);
    assert!(p.join("trajectory.csv").exists());
    assert_eq!(run(p, &["fixed-points", "--terrain", "gaussian:1:1.5", "--bracket", "-3:3"]), 0);
    let fp = value(&summary(p), "fixed_points");
    assert_eq!(fp.split(';').count(), 3, "{fp}");
    assert_eq!(run(p, &["bifurcate", "--family", "gaussian", "--A", "1", "--B-range", "0.1:2", "--samples", "8"]), 0);
    let bc: f64 = value(&summary(p), "B_c").parse().unwrap();
    assert!((bc - 0.933).abs() < 0.01, "{bc}");
    assert_eq!(run(p, &["spectrum", "--terrain", "flat", "--scan-points", "120"]), 0);
    assert!(p.join("t22_scan.csv").exists());
    assert_eq!(
        run(p, &["simulate", "--x-range=-3:3", "--t-end", "2", "--dt", "0.1", "--positions", "0"]),
        0
    );
    assert!(p.join("tracks.csv").exists() && p.join("final.csv").exists());
}

#[test]
fn config_round_trip_and_rejection() {
    let mut cfg = RunConfig { command: Some("simulate".into()), ..Default::default() };
    cfg.params.a = Some(0.5);
    cfg.params.d = Some(0.01);
    cfg.terrain.spec = Some("gaussian:1:1.5".into());
    cfg.numerics = Numerics {
        positions: Some(vec![0.5, -1.25]),
        x_range: Some((-30.0, 30.0)),
        dt: Some(0.1),
        boundary: Some("neumann".into()),
        ..Default::default()
    };
    cfg.output.dir = Some("out".into());
    let text = cfg.to_toml().unwrap();
    assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    assert!(RunConfig::parse("[params]\nalpha = 1.0\n").is_err());
    assert!(RunConfig::parse("[numerics]\nbogus = 1\n").is_err());
}

#[test]
fn config_file_and_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg_path = d.path().join("run.toml");
    std::fs::write(&cfg_path, "command = \"two-pulse\"\n[numerics]\nbeta = 0.5\n").unwrap();
    let c = cfg_path.display().to_string();
    assert_eq!(run(d.path(), &["two-pulse", "--config", &c]), 0);
    assert_eq!(value(&summary(d.path()), "beta"), "0.5");
    assert_eq!(run(d.path(), &["two-pulse", "--config", &c, "--beta", "2"]), 0);
    assert_eq!(value(&summary(d.path()), "beta"), "2");
    // a config written for another subcommand is a usage error
    assert_eq!(run(d.path(), &["check", "--config", &c]), 2);
    let saved = d.path().join("saved.toml");
    let s = saved.display().to_string();
    assert_eq!(run(d.path(), &["two-pulse", "--beta", "3", "--save-config", &s]), 0);
    let back = RunConfig::load(&saved).unwrap();
    assert_eq!(back.numerics.beta, Some(3.0));
}
