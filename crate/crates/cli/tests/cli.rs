use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qmor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn derive_prints_ten_equations() {
    let o = qmor(&["derive", &scenario("two_spin.json")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let eqs: Vec<&str> = text.lines().filter(|l| l.starts_with("d<")).collect();
    assert_eq!(eqs.len(), 10);
    assert!(eqs
        .iter()
        .any(|l| l.starts_with("d<Z1>/dt") && l.contains("20.000000 <Y1X2>")));
}

#[test]
fn derive_writes_generator_json() {
    let path = scratch("generator.json");
    let o = qmor(&[
        "derive",
        &scenario("two_spin.json"),
        "--json",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["variables"].as_array().unwrap().len(), 10);
}

#[test]
fn reduce_reports_bounds_around_measured_error() {
    let o = qmor(&["reduce", &scenario("regime.json")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lo = v["lower_bound"].as_f64().unwrap();
    let hi = v["upper_bound"].as_f64().unwrap();
    let measured = v["hinf_measured"].as_f64().unwrap();
    assert_eq!(v["k"], 1);
    assert!(lo <= measured * (1.0 + 1e-6) && measured <= hi * (1.0 + 1e-6));
}

#[test]
fn single_cycle_matches_closed_form() {
    let (gamma, dt) = (0.1f64, 0.5f64);
    let o = qmor(&[
        "qec",
        "--model",
        "independent",
        "--gamma",
        "0.1",
        "--dt",
        "0.5",
        "--cycles",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cycle,xbar,ybar,zbar"));
    let last: Vec<f64> = lines
        .nth(1)
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    let exact = 0.5 * (3.0 * (-2.0 * gamma * dt).exp() - (-6.0 * gamma * dt).exp());
    assert!((last[3] - exact).abs() < 1e-8, "{} vs {exact}", last[3]);
}

#[test]
fn qec_report_lists_sector_sizes() {
    let path = scratch("qec_report.json");
    let out = scratch("qec.csv");
    let o = qmor(&[
        "qec",
        "--scenario",
        &scenario("qec_independent.json"),
        "--out",
        out.to_str().unwrap(),
        "--report",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let z = v["sectors"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "zbar")
        .unwrap();
    assert_eq!(z["auxiliary"], 1);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 22);
}

#[test]
fn schema_error_names_field_and_exits_one() {
    let path = scratch("bad.json");
    std::fs::write(
        &path,
        r#"{"n_sites": 2, "hamiltonian": [{"coeff": 1.0, "pauli": "XQ"}], "interest": ["ZI"]}"#,
    )
    .unwrap();
    let o = qmor(&["derive", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("hamiltonian[0].pauli"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(qmor(&["qec", "--gamma", "0.1"]).status.code(), Some(1));
    assert_eq!(qmor(&["nonsense"]).status.code(), Some(1));
    let o = qmor(&[
        "qec",
        "--model",
        "independent",
        "--gamma",
        "-1",
        "--dt",
        "1",
        "--cycles",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("qec.gamma"));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = qmor(&["simulate", &scenario("two_spin.json")]);
    let b = qmor(&["simulate", &scenario("two_spin.json")]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("t,X1,Y1,Z1\n"));
}

#[test]
fn simulate_reduced_writes_csv_and_svg() {
    let csv = scratch("fig.csv");
    let svg = scratch("fig.svg");
    let o = qmor(&[
        "simulate",
        &scenario("regime.json"),
        "--reduce",
        "1",
        "--svg",
        svg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,Z1,Z1_reduced\n"));
    assert_eq!(text.lines().count(), 502);
    let pic = std::fs::read_to_string(&svg).unwrap();
    assert!(pic.starts_with("<svg") && pic.contains("stroke-dasharray"));
}

#[test]
fn every_bundled_scenario_verifies() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let o = qmor(&["verify", path.to_str().unwrap()]);
            assert!(
                o.status.success(),
                "{}: {}{}",
                path.display(),
                stdout(&o),
                stderr(&o)
            );
            count += 1;
        }
    }
    assert!(count >= 8);
}

#[test]
fn verify_failure_exits_two() {
    let o = qmor(&[
        "verify",
        &scenario("qec_independent.json"),
        "--tol",
        "1e-30",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}
