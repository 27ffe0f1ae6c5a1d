use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const TRIANGLE: &str = "x,y\n0,0\n1,0\n0,1\n";

fn oja(args: &[&str], stdin: &str, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oja"));
    cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    cmd.env_remove("OJA_MAX_ENUM");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn oja");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn rows(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(f).collect()).collect()
}

/// Deterministic pseudo-normal sample as CSV.
fn sample_csv(n: usize, k: usize, seed: u64) -> String {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut out = String::new();
    for _ in 0..n {
        let row: Vec<String> = (0..k)
            .map(|_| {
                let (u, v) = (next().max(1e-12), next());
                ((-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()).to_string()
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn exact_median_of_triangle() {
    let v = json(&oja(&["median", "-", "--alg", "exact"], TRIANGLE, &[]));
    assert_eq!(v["algorithm"], "exact");
    assert!((f(&v["objective"]) - 0.5).abs() < 1e-12);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["algorithm", "point", "objective", "diagnostics", "seed"]);
}

#[test]
fn evolutionary_output_is_reproducible() {
    let data = sample_csv(15, 2, 3);
    let args = ["median", "-", "--alg", "evolutionary", "--seed", "1"];
    let a = oja(&args, &data, &[]);
    let b = oja(&args, &data, &[]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = oja(&["median", "-", "--alg", "evolutionary", "--seed", "2", "--sp", "3"], &data, &[]);
    assert!(c.status.success());
}

#[test]
fn printed_point_round_trips() {
    let data = sample_csv(9, 2, 11);
    let v = json(&oja(&["median", "-", "--alg", "exact"], &data, &[]));
    let rows: Vec<Vec<f64>> = data.lines().map(|l| l.split(',').map(|t| t.parse().unwrap()).collect()).collect();
    let x = oja_core::DataMatrix64::new(rows).unwrap();
    let want = oja_core::exact_median(&x, &oja_core::ExactConfig::default()).unwrap();
    let got: Vec<f64> = v["point"].as_array().unwrap().iter().map(f).collect();
    assert_eq!(got, want.point);
    for p in v["point"].as_array().unwrap() {
        let digits: String = p.to_string().split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
        assert_eq!(digits.trim_start_matches('0').len(), 17, "{p}");
    }
}

#[test]
fn enumeration_guard_exits_3() {
    let data = sample_csv(100, 5, 1);
    let out = oja(&["median", "-", "--alg", "exact"], &data, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("75287520"));

    let small = sample_csv(10, 2, 1);
    let out = oja(&["median", "-", "--alg", "exact"], &small, &[("OJA_MAX_ENUM", "10")]);
    assert_eq!(out.status.code(), Some(3));
    let out = oja(&["median", "-", "--alg", "exact"], &small, &[("OJA_MAX_ENUM", "lots")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_2() {
    let out = oja(&["median", "-"], "1,2\n3,\n4,5\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = oja(&["median", "-"], "1,2\n3,x\n4,5\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = oja(&["scores", "-", "--center", "middle"], TRIANGLE, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage") || String::from_utf8_lossy(&out.stderr).contains("--help"));
}

#[test]
fn univariate_signs_about_the_median() {
    let v = json(&oja(&["scores", "-", "--kind", "sign", "--center", "compMedian"], "1\n2\n3\n", &[]));
    assert_eq!(rows(&v["scores"]), vec![vec![-1.0], vec![0.0], vec![1.0]]);
    assert_eq!(f(&v["center"][0]), 2.0);
}

#[test]
fn triangle_ranks_sum_to_zero() {
    let v = json(&oja(&["scores", "-", "--kind", "rank"], TRIANGLE, &[]));
    let s = rows(&v["scores"]);
    assert_eq!(s.len(), 3);
    let sum: Vec<f64> = (0..2).map(|j| s.iter().map(|r| r[j]).sum()).collect();
    assert!(sum.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-9);
    assert_eq!(v["center"], Value::Null);
}

#[test]
fn scatter_matrices() {
    let v = json(&oja(&["scm", "-", "--center", "compMedian"], "1\n2\n3\n", &[]));
    assert!((rows(&v["matrix"])[0][0] - 2.0 / 3.0).abs() < 1e-15);

    let data = sample_csv(12, 2, 5);
    let m = rows(&json(&oja(&["scm", "-", "--type", "rank"], &data, &[]))["matrix"]);
    assert!((m[0][1] - m[1][0]).abs() <= 1e-12);

    // rank covariance of A X equals det(A)² A⁻ᵀ C A⁻¹
    let a = [[2.0, 1.0], [-0.5, 1.5]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    let moved: String = data
        .lines()
        .map(|l| {
            let x: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            format!("{},{}\n", a[0][0] * x[0] + a[0][1] * x[1] + 1.0, a[1][0] * x[0] + a[1][1] * x[1] - 2.0)
        })
        .collect();
    let mt = rows(&json(&oja(&["scm", "-", "--type", "rank"], &moved, &[]))["matrix"]);
    for i in 0..2 {
        for j in 0..2 {
            let mut want = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    want += inv[p][i] * m[p][q] * inv[q][j];
                }
            }
            want *= det * det;
            assert!((mt[i][j] - want).abs() <= 1e-8 * want.abs().max(1.0), "{i}{j}: {} vs {want}", mt[i][j]);
        }
    }
}

#[test]
fn one_sample_symmetric_pairs() {
    let data = "1,1\n-1,-1\n2,0.5\n-2,-0.5\n0.3,-1\n-0.3,1\n";
    let v = json(&oja(&["test1", "-", "--mu", "0,0"], data, &[]));
    assert!(f(&v["statistic"]).abs() < 1e-12);
    assert!((f(&v["p_value"]) - 1.0).abs() < 1e-12);
    assert_eq!(v["df"], 2);
}

#[test]
fn p_value_is_the_chi_square_tail() {
    let data = sample_csv(20, 2, 8);
    let v = json(&oja(&["test1", "-", "--mu", "0.4,-0.2"], &data, &[]));
    let q = f(&v["statistic"]);
    let p = f(&v["p_value"]);
    // two degrees of freedom: closed-form tail
    assert!((p - (-q / 2.0).exp()).abs() < 1e-12);
}

#[test]
fn permutation_runs_are_seeded() {
    let data = sample_csv(12, 2, 21);
    let args = ["test1", "-", "--scores", "signedrank", "--method", "permutation", "--B", "200", "--seed", "7"];
    let a = json(&oja(&args, &data, &[]));
    let b = json(&oja(&args, &data, &[]));
    assert_eq!(a["p_value"], b["p_value"]);
    let p = f(&a["p_value"]);
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn c_sample_test_with_group_column() {
    let mut data = String::from("x,grp,y\n");
    for (i, line) in sample_csv(18, 2, 31).lines().enumerate() {
        let (x, y) = line.split_once(',').unwrap();
        data.push_str(&format!("{x},{},{y}\n", ["a", "b", "c"][i % 3]));
    }
    let v = json(&oja(&["testc", "-", "--group", "grp", "--scores", "rank"], &data, &[]));
    assert_eq!(v["df"], 4);
    let args = ["testc", "-", "--group", "grp", "--method", "permutation", "--B", "99", "--seed", "3"];
    let a = json(&oja(&args, &data, &[]));
    let b = json(&oja(&args, &data, &[]));
    assert_eq!(a["p_value"], b["p_value"]);
    let out = oja(&["testc", "-", "--group", "nope"], &data, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_rows_cross_check() {
    let out = oja(&["bench", "--alg", "exact,bounded", "--n", "20", "--k", "2", "--reps", "5", "--seed", "4"], "", &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alg,n,k,rep,wall_time,objective,objective_gap_to_oracle"));
    let recs: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(recs.len(), 10);
    for pair in recs.chunks(2) {
        assert_eq!(pair[0][0], "exact");
        assert_eq!(pair[1][0], "bounded");
        let (e, b): (f64, f64) = (pair[0][5].parse().unwrap(), pair[1][5].parse().unwrap());
        assert!((e - b).abs() <= 1e-9 * e.abs().max(1.0));
        assert!(pair[0][6].parse::<f64>().unwrap().abs() <= 1e-9 * e.abs().max(1.0));
    }
}

#[test]
fn infeasible_oracle_leaves_gap_empty() {
    let out = oja(&["bench", "--alg", "evolutionary", "--n", "40", "--k", "3"], "", &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.ends_with(','), "{row}");
}
