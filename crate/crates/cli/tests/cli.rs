use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normground"))
        .args(args)
        .env("NORMGROUND_OUTPUT", root)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn solve_soliton(root: &Path, out: &Path) -> Output {
    run(
        &[
            "solve", "--preset", "frac_power", "--s", "1", "--N", "1", "--p", "4", "--lambda", "-1", "--out",
            out.to_str().unwrap(),
        ],
        root,
    )
}

#[test]
fn solve_soliton_has_mass_four() {
    let tmp = tempfile::tempdir().unwrap();
    let art = tmp.path().join("sol");
    let out = solve_soliton(tmp.path(), &art);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let doc = read_json(&art.join("solution.json"));
    let mass = doc["solution"]["mass"].as_f64().unwrap();
    assert!((mass - 4.0).abs() < 1e-4, "mass {mass}");
    assert_eq!(doc["format_version"].as_u64(), Some(1));
    assert!(art.join("profile.csv").exists());
}

#[test]
fn solve_ball_at_zero_frequency_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["solve", "--preset", "ball_hardy", "--N", "3", "--k", "1", "--p", "2.5", "--lambda", "0", "--n", "4096"],
        tmp.path(),
    );
    assert!(stdout(&out).contains("converged at λ = 0"), "{}", stdout(&out));
    assert_ne!(code(&out), 3);
}

#[test]
fn invalid_exponent_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["solve", "--preset", "frac_power", "--s", "1", "--N", "1", "--p", "7", "--lambda", "-1"],
        tmp.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("p"));
    assert!(std::fs::read_dir(tmp.path()).unwrap().next().is_none(), "no artifact expected");
}

#[test]
fn continue_reports_sign_of_mass_derivative() {
    let tmp = tempfile::tempdir().unwrap();
    let sub = run(
        &[
            "continue", "--preset", "frac_power", "--N", "1", "--p", "4", "--lambda-start", "-4", "--lambda-end",
            "-0.25", "--n", "2048", "--R", "40",
        ],
        tmp.path(),
    );
    assert_eq!(code(&sub), 0);
    let text = stdout(&sub);
    assert!(text.contains("mass_derivative < 0 on all"), "{text}");

    let sup = run(
        &[
            "continue", "--preset", "nls_potential", "--N", "1", "--p", "8", "--lambda-start", "-50", "--lambda-end",
            "-1", "--n", "2048", "--R", "40",
        ],
        tmp.path(),
    );
    assert_eq!(code(&sup), 0);
    assert!(stdout(&sup).contains("mass_derivative > 0 on all"), "{}", stdout(&sup));
}

#[test]
fn continue_rejects_empty_range() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["continue", "--preset", "frac_power", "--N", "1", "--p", "4", "--lambda-start", "-1", "--lambda-end", "-1"],
        tmp.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn masscurve_pure_power_has_no_kinks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "masscurve", "--preset", "frac_power", "--N", "1", "--p", "4", "--n", "2048", "--R", "40", "--c-count", "8",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let line = text.lines().find(|l| l.contains("kinks detected")).expect(&text);
    assert!(line.starts_with("0 kinks detected"), "{line}");
    let rel: f64 = line.rsplit("= ").next().unwrap().trim().parse().unwrap();
    assert!(rel < 1e-3, "{line}");
}

#[test]
fn masscurve_single_sample_makes_no_claims() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["masscurve", "--preset", "frac_power", "--N", "1", "--p", "4", "--n", "1024", "--R", "30", "--c-grid", "2"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("no kink claims"), "{text}");
    assert!(!text.contains("kinks detected") && !text.contains("kink detected"), "{text}");
}

#[test]
fn masscurve_asymmetric_power_has_one_kink() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "masscurve", "--preset", "appendixA", "--N", "1", "--s", "1", "--p", "4", "--q", "3", "--n", "2048", "--R",
            "40", "--c-count", "8",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("1 kink detected"), "{text}");
    assert!(text.contains("crossing ĉ"), "{text}");
}

#[test]
fn verify_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let art = tmp.path().join("sol");
    assert_eq!(code(&solve_soliton(tmp.path(), &art)), 0);

    let ok = run(&["verify", art.to_str().unwrap()], tmp.path());
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(stdout(&ok).contains("reproduced exactly"));

    let cfg = art.join("config.json");
    let same = run(&["verify", art.to_str().unwrap(), "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&same), 0);

    let bad = tmp.path().join("perturbed");
    std::fs::create_dir(&bad).unwrap();
    for entry in std::fs::read_dir(&art).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), bad.join(entry.file_name())).unwrap();
    }
    let mut rd = csv_lines(&bad.join("profile.csv"));
    let header = rd.remove(0);
    let body: Vec<String> = rd
        .iter()
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            let u: f64 = cols[1].parse().unwrap();
            format!("{},{:?},{}", cols[0], u * 1.01, cols[2])
        })
        .collect();
    std::fs::write(bad.join("profile.csv"), format!("{header}\n{}\n", body.join("\n"))).unwrap();
    let failed = run(&["verify", bad.to_str().unwrap()], tmp.path());
    assert_eq!(code(&failed), 4);
    assert!(stdout(&failed).contains("FAIL  pohozaev"), "{}", stdout(&failed));

    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&run(&["verify", empty.to_str().unwrap()], tmp.path())), 2);

    let other = tmp.path().join("other");
    let out = run(
        &[
            "solve", "--preset", "frac_power", "--s", "1", "--N", "1", "--p", "4", "--lambda", "-2", "--n", "512",
            "--out", other.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_ne!(code(&out), 2);
    let other_cfg = other.join("config.json");
    let mismatch = run(&["verify", art.to_str().unwrap(), "--config", other_cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&mismatch), 2);
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}
