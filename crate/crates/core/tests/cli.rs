use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cduality")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("one JSON report")
}

#[test]
fn solve_binomial_primal() {
    let cfg = config("binomial_log.json");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--x", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let u = r["value"]["value"].as_f64().unwrap();
    assert!((u - (0.5 * 1.5f64.ln() + 0.5 * 0.75f64.ln())).abs() < 1e-8);
    assert!((u - 0.05889).abs() < 1e-5);
}

#[test]
fn solve_binomial_dual() {
    let cfg = config("binomial_log.json");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--y", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    // v(1) = u(1) - 1 for log utility on the unit budget
    let v = r["value"]["value"].as_f64().unwrap();
    assert!((v - (0.5 * 1.5f64.ln() + 0.5 * 0.75f64.ln() - 1.0)).abs() < 1e-8);
    assert_eq!(r["attained_in_z"], serde_json::Value::Bool(true));
}

#[test]
fn solve_output_is_reproducible() {
    let cfg = config("trinomial_power.json");
    let a = run(&["solve", "--config", cfg.to_str().unwrap(), "--y", "0.5"]);
    let b = run(&["solve", "--config", cfg.to_str().unwrap(), "--y", "0.5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn missing_file_is_a_config_error() {
    let out = run(&["solve", "--config", "/nonexistent/binomial_log.json", "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));
}

#[test]
fn unknown_suite_exits_2() {
    assert_eq!(run(&["verify", "--suite", "lemma9"]).status.code(), Some(2));
}

#[test]
fn theorem2_on_trinomial_flags_non_attainment() {
    let cfg = config("trinomial_power.json");
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "theorem2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let z: Vec<serde_json::Value> =
        text.lines().map(|l| serde_json::from_str(l).unwrap()).filter(|r: &serde_json::Value| r["check"] == "z_infimum").collect();
    assert_eq!(z.len(), 1);
    assert_eq!(z[0]["attained_in_z"], serde_json::Value::Bool(false));
    assert_eq!(z[0]["pass"], serde_json::Value::Bool(true));
}

#[test]
fn sweep_geometric_grid() {
    let cfg = config("binomial_log.json");
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--x-grid", "geom:0.1:10:10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,point,u,u_prime,v,v_prime,status");
    assert_eq!(lines.len(), 11);
    // u'(x) = 1/x for this market
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        let x: f64 = f[1].parse().unwrap();
        let du: f64 = f[3].parse().unwrap();
        assert!((du * x - 1.0).abs() < 1e-6, "{l}");
    }
}

#[test]
fn sweep_empty_grid_exits_2() {
    let cfg = config("binomial_log.json");
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap(), "--x-grid", "lin:1:2:0"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn deflators_of_trinomial() {
    let cfg = config("trinomial_power.json");
    let out = run(&["deflators", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut dens: Vec<Vec<f64>> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["density"].as_array().unwrap().iter().map(|d| d.as_f64().unwrap()).collect()
        })
        .collect();
    dens.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    let expected = [[0.0, 3.0, 0.0], [1.0, 0.0, 2.0]];
    assert_eq!(dens.len(), 2);
    for (d, e) in dens.iter().zip(&expected) {
        assert!(d.iter().zip(e).all(|(a, b)| (a - b).abs() < 1e-12), "{d:?}");
    }
}

#[test]
fn config_with_unknown_key_exits_2() {
    let text = std::fs::read_to_string(config("binomial_log.json")).unwrap().replace("\"clock\"", "\"clok\": 1, \"clock\"");
    let path = std::env::temp_dir().join(format!("cduality-unknown-{}.json", std::process::id()));
    std::fs::write(&path, text).unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap(), "--x", "1"]);
    let _ = std::fs::remove_file(&path);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("clok"));
}
