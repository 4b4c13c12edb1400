//! End-to-end checks of the command-line interface: exit codes, file
//! formats and the wiring between subcommands.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hedgebound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).unwrap();
}

const CLEAN_QUOTES: &str = "maturity,moneyness,price\n\
    1.0,0.8,0.22\n1.0,1.0,0.08\n1.0,1.2,0.021\n\
    1.5,0.8,0.23\n1.5,1.0,0.10\n1.5,1.2,0.035\n";

#[test]
fn validate_clean_quotes_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = dir.path().join("q.csv");
    write(&quotes, CLEAN_QUOTES);
    let out = run(&["validate", "--quotes", quotes.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["passed"], true);
}

#[test]
fn validate_bad_price_exits_one_with_violation() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = dir.path().join("q.csv");
    write(
        &quotes,
        "maturity,moneyness,price\n1.0,0.8,1.0\n1.0,1.2,0.02\n",
    );
    let out = run(&["validate", "--quotes", quotes.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["passed"], false);
    assert!(json["violations"].as_array().unwrap().len() >= 1);
    assert_eq!(json["violations"][0]["condition"], "price-bound");
}

#[test]
fn validate_missing_file_exits_two() {
    let out = run(&["validate", "--quotes", "/nonexistent/q.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_heston_output_validates_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("heston.json");
    write(
        &config,
        r#"{"params":{"kappa":1.0,"theta":0.07,"xi":0.4,"v0":0.07,"rho":-0.8},
            "maturities":[1.0,1.5],"strikes":[0.8,0.9,1.0,1.1,1.2]}"#,
    );
    let quotes = dir.path().join("gen.csv");
    let out = run(&[
        "gen-heston",
        "--config",
        config.to_str().unwrap(),
        "--out",
        quotes.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let check = run(&["validate", "--quotes", quotes.to_str().unwrap()]);
    assert!(check.status.success());
    let content = fs::read_to_string(&quotes).unwrap();
    assert!(content.starts_with("maturity,moneyness,price\n"));
    assert_eq!(content.lines().count(), 11);
}

#[test]
fn extrapolate_zero_slopes_reproduce_flat_prices() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = dir.path().join("q.csv");
    // Flat 20% smile quotes at two strikes.
    write(
        &quotes,
        "maturity,moneyness,price\n1.0,0.9,0.1462410351\n1.0,1.1,0.0330747354\n",
    );
    let config = dir.path().join("c.json");
    write(
        &config,
        r#"{"model":"bs","sigma":0.2,"slopes":[0.0],"target_strikes":[0.9,1.0,1.1]}"#,
    );
    let out = run(&[
        "extrapolate",
        "--quotes",
        quotes.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("maturity,moneyness,price,total_variance\n"));
    let atm: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("1,1,") || l.starts_with("1.0,1.0,") || l.starts_with("1,1.0,"))
        .unwrap()
        .split(',')
        .collect();
    let price: f64 = atm[2].parse().unwrap();
    assert!((price - 0.07965567455).abs() < 1e-9);
    let w: f64 = atm[3].parse().unwrap();
    assert!((w - 0.04).abs() < 1e-12);
}

#[test]
fn bound_replicates_traded_call_and_dumps_measure() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = dir.path().join("q.csv");
    write(&quotes, CLEAN_QUOTES);
    let measure = dir.path().join("m.csv");
    let out = run(&[
        "bound",
        "--quotes",
        quotes.to_str().unwrap(),
        "--payoff",
        "traded-call",
        "--tc-maturity-index",
        "0",
        "--tc-strike",
        "1.0",
        "--side",
        "super",
        "--grid-points",
        "40",
        "--grid-max",
        "4.0",
        "--basis-degree",
        "2",
        "--measure-out",
        measure.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let bound = json["bound"].as_f64().unwrap();
    assert!((bound - 0.08).abs() < 1e-7, "bound {bound}");
    assert!(json["slack_min"].as_f64().unwrap() >= -1e-8);
    assert!(json["gap"].as_f64().unwrap() <= 1e-8);
    let m = fs::read_to_string(&measure).unwrap();
    assert!(m.starts_with("s1,s2,weight\n"));
    assert!(m.lines().count() > 1);
}

#[test]
fn bound_rejects_arbitrage_inputs_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = dir.path().join("q.csv");
    write(
        &quotes,
        "maturity,moneyness,price\n1.0,0.9,0.05\n1.0,1.1,0.06\n",
    );
    let out = run(&[
        "bound",
        "--quotes",
        quotes.to_str().unwrap(),
        "--payoff",
        "forward",
        "--grid-points",
        "20",
        "--grid-max",
        "3.0",
        "--basis-degree",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sensitivity_emits_the_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = dir.path().join("q.csv");
    // Strikes/maturities template for the family (prices regenerated).
    write(&quotes, CLEAN_QUOTES);
    let config = dir.path().join("c.json");
    write(&config, r#"{"family":"bs","sigma":0.2,"base":[0.0,0.0]}"#);
    let perts = dir.path().join("p.json");
    write(
        &perts,
        r#"[{"label":"1e-3","parameter":[0.001,0.001]},
            {"label":"0.9","parameter":[0.9,0.9]}]"#,
    );
    let out = run(&[
        "sensitivity",
        "--quotes",
        quotes.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--perturbations",
        perts.to_str().unwrap(),
        "--side",
        "super",
        "--grid-points",
        "40",
        "--grid-max",
        "4.0",
        "--basis-degree",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "perturbation,derivative,optimal_value,estimated_value,abs_diff"
    );
    let row1: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row1[0], "1e-3");
    assert!(row1[2] != "invalid");
    // Slope 0.9 is inadmissible: marked invalid, not solved.
    let row2: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row2[2], "invalid");
}

#[test]
fn reproduce_table_3_reports_moments_and_note() {
    let out = run(&["reproduce", "3", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("quantity,maturity,computed,published,deviation"));
    assert!(text.contains("q_t1"));
    assert!(text.contains("p_t2"));
    // The published labels disagree with the equation; the note says so.
    assert!(text.contains("maturity labels"));
}

#[test]
fn reproduce_echoes_overrides() {
    let out = run(&[
        "reproduce",
        "1",
        "--grid-points",
        "60",
        "--grid-max",
        "4.0",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# grid_points = 60 (override, default 500)"));
    assert!(text.contains("# grid_max = 4 (override, default 5)"));
    assert!(text.contains("perturbation,derivative,optimal_value"));
    // Six rows under the header and comments.
    let data_rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("perturbation"))
        .count();
    assert_eq!(data_rows, 6);
}

#[test]
fn reproduce_unknown_table_exits_two() {
    let out = run(&["reproduce", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure_region_demo_and_markers() {
    let out = run(&["figure-region", "--demo"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("kind,label,strike1,price1,strike2,price2\n"));
    assert!(text.contains("marker,square"));
    assert!(text.contains("marker,circle"));
    // Many chords for the 21-quote synthetic chain.
    assert!(text.matches("segment,chord").count() == 20);
}

#[test]
fn figure_region_empty_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = dir.path().join("q.csv");
    write(&quotes, "maturity,moneyness,price\n");
    let out = run(&["figure-region", "--quotes", quotes.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
