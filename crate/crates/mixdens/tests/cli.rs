use std::path::Path;
use std::process::{Command, Output};

fn mixdens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixdens"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn basis_on_symmetric_interval() {
    let o = mixdens(&["basis", "--a", "-1", "--b", "1", "--m", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows[0], "k,q_1,q_2,q_3,q_4,q_5");
    let q: Vec<Vec<f64>> = rows[1..]
        .iter()
        .map(|r| r.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(q.len(), 5);
    assert!((q[0][0] - 0.5f64.sqrt()).abs() < 1e-15);
    assert_eq!(q[1][0], 0.0);
    assert!((q[1][1] - 1.5f64.sqrt()).abs() < 1e-15);
    // p_5 ∝ 35t⁴ - 30t² + 3 scaled by √(9/2)/8.
    let s = 4.5f64.sqrt() / 8.0;
    for (got, want) in q[4].iter().zip([3.0 * s, 0.0, -30.0 * s, 0.0, 35.0 * s]) {
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }
}

#[test]
fn usage_errors_are_machine_readable() {
    let o = mixdens(&[
        "estimate",
        "--family",
        "exp-indicator",
        "--a",
        "1",
        "--b",
        "2",
        "--m",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).starts_with("error kind=usage flag=--input message="),
        "{}",
        stderr(&o)
    );

    let o = mixdens(&[
        "simulate",
        "--family",
        "beta-scale",
        "--a",
        "1",
        "--b",
        "2",
        "--m",
        "2",
        "--n",
        "10",
        "--f-true",
        "uniform",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flag=--k"));

    let o = mixdens(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=usage"));
}

#[test]
fn invalid_selection_constant_is_reported() {
    let o = mixdens(&[
        "simulate",
        "--family",
        "exp-indicator",
        "--a",
        "1",
        "--b",
        "2",
        "--rule",
        "logn:0.5",
        "--n",
        "100",
        "--reps",
        "2",
        "--f-true",
        "uniform",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).starts_with("error kind=numeric"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn malformed_data_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("obs.txt");
    std::fs::write(&input, "0.5\n1.25\n1,5\n").unwrap();
    let o = mixdens(&[
        "estimate",
        "--family",
        "exp-indicator",
        "--a",
        "1",
        "--b",
        "2",
        "--m",
        "2",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error kind=parse"), "{err}");
    assert!(err.contains("obs.txt:3:"), "{err}");
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn dump_then_estimate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = mixdens(&[
        "simulate",
        "--family",
        "exp-moment",
        "--a",
        "1",
        "--b",
        "2",
        "--m",
        "4",
        "--n",
        "300,600",
        "--reps",
        "3",
        "--seed",
        "5",
        "--f-true",
        "beta-shaped(2,2)",
        "--out",
        sim.to_str().unwrap(),
        "--dump-data",
        "--sigma-samples",
        "1000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for file in [
        "ise.csv",
        "coefficients.csv",
        "summary.json",
        "data_n300.txt",
        "data_n600.txt",
    ] {
        let text = read(&sim.join(file));
        assert!(
            text.contains("seed") && text.contains("exp-moment"),
            "{file} lacks the config echo"
        );
    }
    let est = dir.path().join("est");
    let o = mixdens(&[
        "estimate",
        "--family",
        "exp-moment",
        "--a",
        "1",
        "--b",
        "2",
        "--m",
        "4",
        "--input",
        sim.join("data_n600.txt").to_str().unwrap(),
        "--out",
        est.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&read(&est.join("estimate.json"))).unwrap();
    let got: Vec<f64> = doc["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let coeffs = read(&sim.join("coefficients.csv"));
    let want: Vec<f64> = data_rows(&coeffs)
        .iter()
        .filter(|l| l.starts_with("600,0,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(got, want);
    let curve = read(&est.join("estimate.csv"));
    let rows = data_rows(&curve);
    assert_eq!(rows[0], "t,f_hat,f_hat_post");
    assert_eq!(rows.len(), 513);
}

#[test]
fn simulate_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}"));
        let o = mixdens(&[
            "simulate",
            "--family",
            "exp-indicator",
            "--a",
            "1",
            "--b",
            "2",
            "--n",
            "1000,10000",
            "--reps",
            "10",
            "--seed",
            "7",
            "--rule",
            "logn",
            "--f-true",
            "cosine-bump",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
            "--sigma-samples",
            "2000",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(["ise.csv", "coefficients.csv", "summary.json"].map(|f| read(&out.join(f))));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0][0].contains("# config: rule=logn:0.094"));
}

#[test]
fn other_commands_produce_tables() {
    let o = mixdens(&[
        "audit",
        "--family",
        "exp-indicator",
        "--a",
        "1",
        "--b",
        "2",
        "--f-true",
        "uniform",
        "--k-max",
        "4",
        "--n-mc",
        "5000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(data_rows(&text).len(), 5);

    let o = mixdens(&[
        "smoothness",
        "--a",
        "1",
        "--b",
        "3",
        "--f-true",
        "uniform",
        "--alpha",
        "1.5",
        "--c",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(data_rows(&text)[0], "t,omega,envelope");
    assert!(data_rows(&text)[1..]
        .iter()
        .all(|r| r.split(',').nth(1) == Some("0")));

    let dir = tempfile::tempdir().unwrap();
    let o = mixdens(&[
        "rates",
        "--family",
        "gamma-shape",
        "--a",
        "1",
        "--b",
        "2",
        "--rule",
        "loglog:0.2",
        "--n",
        "100,1000,10000",
        "--reps",
        "4",
        "--f-true",
        "cosine-bump",
        "--alpha",
        "2",
        "--sigma-samples",
        "1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rates = read(&dir.path().join("rates.csv"));
    assert_eq!(data_rows(&rates).len(), 4);
}
