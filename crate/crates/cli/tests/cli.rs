use std::process::{Command, Output};

use serde_json::Value;

fn copoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copoly"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Digits in the mantissa of a rendered number.
fn significant_digits(s: &str) -> usize {
    let mantissa = s.split(['e', 'E']).next().unwrap();
    mantissa
        .chars()
        .filter(char::is_ascii_digit)
        .collect::<String>()
        .trim_start_matches('0')
        .len()
}

#[test]
fn eval_reports_phase() {
    let v = json(&copoly(&["eval", "--omega", "++--", "--lambda", "0", "--h", "0.5"]));
    assert_eq!(v["b_tilde"], 0.0);
    assert_eq!(v["phase"], "Delocalized");
    assert!(v["mean_excursion"].is_null());

    let v = json(&copoly(&["eval", "--omega", "++--", "--lambda", "1", "--h", "0"]));
    assert_eq!(v["phase"], "Localized");
    assert_eq!(v["region"], "L");
    assert!(v["b_tilde"].as_f64().unwrap() > 0.0);
    assert!(v["mean_excursion"].as_f64().unwrap() > 2.0);
    for key in ["lambda", "h", "z_at_zero", "b_tilde", "free_energy", "phase", "mean_excursion"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn input_errors_exit_with_two() {
    let out = copoly(&["eval", "--omega", "+-+-", "--lambda", "1", "--h", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Trivial"));

    let out = copoly(&["eval", "--omega", "++-", "--lambda", "1", "--h", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = copoly(&["eval", "--omega", "++--", "--lambda", "-1", "--h", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = copoly(&["curve", "--omega", "++--", "--lambda-min", "1", "--lambda-max", "0.5", "--steps", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = copoly(&["oracle", "--omega", "++--", "--lambda", "1", "--h", "0", "--n-list", "100,200,50000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_requires_seed() {
    let out = copoly(&["sample", "--omega", "++--", "--lambda", "1", "--h", "0", "--n", "20", "--count", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_copoly"))
        .args(["asym", "--omega", "++--"])
        .env("COPOLY_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_copoly"))
        .args(["asym", "--omega", "++--"])
        .env("COPOLY_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn curve_csv() {
    let text = stdout(&copoly(&[
        "curve", "--omega", "++--", "--lambda-min", "0.1", "--lambda-max", "3", "--steps", "12",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,h_c,residual"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 12);
    let hc: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(hc.windows(2).all(|w| w[1] >= w[0]));
    assert!(hc.iter().all(|&h| (0.0..1.0).contains(&h)));
    for cell in rows.iter().flatten() {
        assert!(significant_digits(cell) <= 12, "{cell}");
    }
    // h_c ≈ 2λ³ at small coupling
    let ratio = hc[0] / 0.1f64.powi(3);
    assert!((ratio - 2.0).abs() < 0.1);
}

#[test]
fn sweep_csv() {
    let text = stdout(&copoly(&[
        "sweep", "--omega", "++--", "--lambda-min", "0", "--lambda-max", "2", "--lambda-steps", "3",
        "--h-steps", "3",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,h,phase,b_tilde");
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "0,0,Delocalized,0");
    assert!(lines.iter().any(|l| l.starts_with("2,0,Localized,")));
    assert!(lines.iter().any(|l| l.starts_with("1,1,Delocalized,0")));
}

#[test]
fn asym_reports_constants() {
    let v = json(&copoly(&["asym", "--omega", "++--"]));
    assert_eq!(v["T_omega"], 2);
    assert_eq!(v["xi_star"], 2);
    assert!((v["m_omega"].as_f64().unwrap() - 2.0).abs() < 1e-11);
    let mo = v["M_omega"].as_f64().unwrap();
    assert!((mo - (4.0 + 2.0 * 2f64.sqrt()).ln() / 4.0).abs() < 1e-11);
    assert_eq!(v["z_hat_at_zero_is_half"], false);
}

#[test]
fn omega_from_file_and_output_file() {
    let dir = std::env::temp_dir().join(format!("copoly-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let seq = dir.join("omega.txt");
    std::fs::write(&seq, "++--\n").unwrap();
    let out_file = dir.join("asym.json");
    let out = copoly(&[
        "asym",
        "--omega",
        seq.to_str().unwrap(),
        "--output",
        out_file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(v["T_omega"], 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sample_is_reproducible() {
    let dir = std::env::temp_dir().join(format!("copoly-sample-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let dump = dir.join("paths.txt");
    let args = |seed: &'static str, dump: Option<&str>| {
        let mut a = vec![
            "sample", "--omega", "++-+--", "--lambda", "0.8", "--h", "0.1", "--n", "500", "--count", "30",
            "--seed", seed, "--levels", "0,5",
        ];
        if let Some(d) = dump {
            a.extend(["--dump-paths", d]);
        }
        a.into_iter().map(str::to_string).collect::<Vec<_>>()
    };
    let run = |a: Vec<String>| copoly(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let first = run(args("42", Some(dump.to_str().unwrap())));
    let second = run(args("42", None));
    let other = run(args("43", None));
    assert_eq!(stdout(&first), stdout(&second));
    assert_ne!(stdout(&first), stdout(&other));
    let v = json(&first);
    assert_eq!(v["count"], 30);
    let fa = &v["frac_above"];
    assert!(fa["0"].as_f64().unwrap() >= fa["5"].as_f64().unwrap());
    let dumped = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = dumped.lines().collect();
    assert_eq!(lines.len(), 30);
    assert!(lines.iter().all(|l| l.split(' ').count() == 501 && l.starts_with("0 ")));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn oracle_reports_fit() {
    let v = json(&copoly(&[
        "oracle", "--omega", "++--", "--lambda", "0", "--h", "0.3", "--n-list", "100,200,400",
    ]));
    assert_eq!(v["f_est"], 0.0);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert_eq!(v["analytic_f"], 0.0);
}

#[test]
fn verify_passes() {
    let out = copoly(&["verify", "--omega", "++--"]);
    let v = json(&out);
    assert_eq!(v["all_passed"], true);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"derivative_identity"));
    assert!(names.contains(&"variational_identity"));
    assert!(names.contains(&"oracle_agreement"));
}
