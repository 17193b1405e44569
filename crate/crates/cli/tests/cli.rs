use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fermibath"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

const SMALL: &str = r#"
[model]
n_particles = 7
omega0 = 1.0
omega0_prime = 0.8

[bath]
kind = "ohmic"
eta = ETA
omega_c = 20.0

[time]
t_start = 0.0
t_end = 20.0
n_points = NPOINTS

[truncation]
slack = SLACK
verify = VERIFY

[[injection]]
n0 = 9
re = 1.0
"#;

fn small_config(name: &str, eta: f64, n_points: usize, slack: i32, verify: bool) -> PathBuf {
    let text = SMALL
        .replace("ETA", &format!("{eta:?}"))
        .replace("NPOINTS", &n_points.to_string())
        .replace("SLACK", &slack.to_string())
        .replace("VERIFY", &verify.to_string());
    let path = scratch(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn greens_preset_table() {
    let o = run(&["greens", "--preset", "fig2"]);
    assert!(o.status.success());
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["t", "n", "n_prime", "re", "im", "abs"]);
    // 50 times, levels n_F - 12 ..= n_F
    assert_eq!(rows.len(), 50 * 13);
    assert!(rows
        .iter()
        .all(|r| r[1] == r[2] && r[1] <= 30.0 && r[5] <= 1.0 + 1e-12));
}

#[test]
fn closed_form_matches_series() {
    let series = parse_csv(&stdout(&run(&["greens", "--preset", "fig2"]))).1;
    let closed = parse_csv(&stdout(&run(&[
        "greens",
        "--preset",
        "fig2",
        "--closed-form",
    ])))
    .1;
    assert_eq!(series.len(), closed.len());
    for (a, b) in series.iter().zip(&closed) {
        assert_eq!(a[..3], b[..3]);
        assert!((a[3] - b[3]).abs() < 1e-9 && (a[4] - b[4]).abs() < 1e-9);
    }
}

#[test]
fn output_is_deterministic() {
    let out = scratch("fig2_evolve.csv");
    let a = run(&["evolve", "--preset", "fig2", "--out", out.to_str().unwrap()]);
    assert!(a.status.success());
    assert!(a.stdout.is_empty());
    let first = std::fs::read(&out).unwrap();
    let b = run(&["evolve", "--preset", "fig2"]);
    assert_eq!(first, b.stdout);
}

#[test]
fn evolve_trace_column() {
    let (header, rows) = parse_csv(&stdout(&run(&["evolve", "--preset", "fig2"])));
    assert_eq!(header.last().unwrap(), "trace");
    assert!(rows.iter().all(|r| (r[6] - 32.0).abs() < 1e-6));
}

#[test]
fn limiting_and_window_flags() {
    let o = run(&[
        "evolve", "--preset", "fig3", "--window", "36:40", "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 51 * 25);
    assert_eq!(rows[0][1], serde_json::json!(36));
    // populations stay inside [0, 1]
    for r in rows.iter().filter(|r| r[1] == r[2]) {
        let p = r[3].as_f64().unwrap();
        assert!((-1e-12..=1.0 + 1e-12).contains(&p));
    }
}

#[test]
fn generic_relaxes_to_ground_state() {
    let (header, rows) = parse_csv(&stdout(&run(&["generic", "--preset", "fig4"])));
    assert_eq!(header, ["t", "n", "population"]);
    let last_t = rows.last().unwrap()[0];
    for r in rows.iter().filter(|r| r[0] == last_t) {
        if r[1] <= 31.0 {
            assert!(r[2] >= 0.98);
        } else {
            assert!(r[2] <= 0.02);
        }
    }
}

#[test]
fn show_config_round_trips() {
    let shown = stdout(&run(&["show-config", "--preset", "fig4"]));
    let path = scratch("fig4_roundtrip.toml");
    std::fs::write(&path, &shown).unwrap();
    let again = stdout(&run(&["show-config", "--config", path.to_str().unwrap()]));
    assert_eq!(shown, again);
}

#[test]
fn verify_passes_on_small_config() {
    let cfg = small_config("small_ok.toml", 1.0 / 70.0, 5, 8, false);
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("finite_bath_envelope,PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_failure_exits_1() {
    // Gamma = 0.35 w0: outside the golden-rule regime of the finite bath
    let cfg = small_config("small_strong.toml", 0.05, 5, 8, false);
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("finite_bath_envelope,FAIL"));
}

#[test]
fn numerical_failure_exits_3() {
    let cfg = small_config("small_tight.toml", 1.0 / 70.0, 5, 0, true);
    let o = run(&["evolve", "--exact-cm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncation"));
}

#[test]
fn usage_errors_exit_2() {
    let empty = small_config("small_empty.toml", 1.0 / 70.0, 0, 8, false);
    let o = run(&["greens", "--config", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty time grid"));

    assert_eq!(run(&["greens"]).status.code(), Some(2));
    assert_eq!(
        run(&["greens", "--config", "/nonexistent.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["greens", "--preset", "fig2", "--window", "9:3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["evolve", "--preset", "fig3", "--exact-cm"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    // closed-form hole propagator above the Fermi level
    let o = run(&[
        "greens",
        "--preset",
        "fig2",
        "--closed-form",
        "--window",
        "30:32",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
