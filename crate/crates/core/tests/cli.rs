use std::f64::consts::PI;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasenoise"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SMALL: &[&str] = &[
    "--set",
    "snr_db=5,10",
    "--set",
    "l=2",
    "--set",
    "states=4,8",
    "--set",
    "nsymb=80",
    "--set",
    "replicas=2",
    "--set",
    "l_sim=8",
    "--set",
    "batches=4",
];

#[test]
fn sweep_is_byte_identical_for_a_seed() {
    let mut a = vec!["sweep", "--seed", "7", "--workers", "1"];
    a.extend_from_slice(SMALL);
    let mut b = vec!["sweep", "--seed", "7", "--workers", "4"];
    b.extend_from_slice(SMALL);
    let (x, y) = (run(&a), run(&b));
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
    let text = stdout(&x);
    assert!(text.lines().next().unwrap().ends_with("seed=7"));
    assert_eq!(rows(&text).len(), 2 * 2 * 2);
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "seed=3\nl=4\nsnr_db=20\n").unwrap();
    let p = path.to_str().unwrap();
    let o = run(&["bounds", "--config", p, "--seed", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# seed=5"));
    assert!(text.contains("# l=4"));
    assert_eq!(rows(&text)[0][..2], ["20".to_string(), "4".to_string()]);
}

#[test]
fn schedule_gap_at_high_snr() {
    let common = ["--set", "snr_db=100", "--set", "linewidth=0.5", "--nats"];
    let excess = |schedule: &str| {
        let mut args = vec!["bounds", "--schedule", schedule];
        args.extend_from_slice(&common);
        let o = run(&args);
        assert!(o.status.success());
        rows(&stdout(&o))[0][3].parse::<f64>().unwrap()
    };
    let gap = excess("cbrt") - excess("sqrt");
    assert!(
        (gap - (PI * PI / 36.0 - PI * PI / 45.0)).abs() < 1e-3,
        "gap {gap}"
    );
}

#[test]
fn bits_and_nats() {
    let b = run(&["bounds", "--set", "snr_db=30", "--bits"]);
    let n = run(&["bounds", "--set", "snr_db=30", "--nats"]);
    let vb: f64 = rows(&stdout(&b))[0][2].parse().unwrap();
    let vn: f64 = rows(&stdout(&n))[0][2].parse().unwrap();
    assert!((vb * std::f64::consts::LN_2 - vn).abs() < 1e-8);
}

#[test]
fn resource_guard_refuses() {
    let o = run(&[
        "sweep",
        "--set",
        "nsymb=100000",
        "--set",
        "states=512",
        "--set",
        "max_work=1e6",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("resource guard"));
}

#[test]
fn simulate_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.pndump");
    let p = path.to_str().unwrap();
    let mut args = vec!["simulate", "--out", p];
    args.extend_from_slice(SMALL);
    assert!(run(&args).status.success());
    let mut args = vec!["rate-lb", "--replay", p];
    args.extend_from_slice(SMALL);
    let o = run(&args);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn validate_passes() {
    let o = run(&["validate"]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn bad_key_is_an_error() {
    let o = run(&["moments", "--set", "nonsense=1"]);
    assert!(!o.status.success());
}
