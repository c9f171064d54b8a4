use std::fs;
use std::path::PathBuf;

use cashval::cli::run;

struct Dir(PathBuf);

impl Dir {
    fn new(name: &str) -> Dir {
        let p = std::env::temp_dir().join(format!("cashval-cli-{}-{name}", std::process::id()));
        fs::create_dir_all(&p).unwrap();
        Dir(p)
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.0.join(name);
        fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    }
}

impl Drop for Dir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["cashval"];
    argv.extend_from_slice(args);
    let status = run(argv, &mut out, &mut err);
    (
        status,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

const FLAT05: &str = r#"{"type": "flat", "i": 0.05}"#;
const ANNUITY: &str = r#"{"atoms": [{"t": 1, "amount": 1}, {"t": 2, "amount": 1}, {"t": 3, "amount": 1},
  {"t": 4, "amount": 1}, {"t": 5, "amount": 1}, {"t": 6, "amount": 1}, {"t": 7, "amount": 1},
  {"t": 8, "amount": 1}, {"t": 9, "amount": 1}, {"t": 10, "amount": 1}]}"#;
const CONTINUOUS: &str = r#"{"density": [{"from": 0, "to": 10, "coeffs": [1]}]}"#;

#[test]
fn price_annuity() {
    let d = Dir::new("price");
    let curve = d.file("flat05.curve", FLAT05);
    let cf = d.file("annuity10.cf", ANNUITY);
    let (status, out, _) = call(&["price", "--curve", &curve, "--cashflow", &cf]);
    assert_eq!(status, 0);
    assert_eq!(out, "7.721735 [7.721735, 7.721735]\n");
    let (_, out2, _) = call(&["price", "--curve", &curve, "--cashflow", &cf]);
    assert_eq!(out, out2);
    let (_, out, _) = call(&[
        "price",
        "--curve",
        &curve,
        "--cashflow",
        &cf,
        "--precision",
        "3",
    ]);
    assert_eq!(out, "7.722 [7.722, 7.722]\n");
}

#[test]
fn curve_eval_rows() {
    let d = Dir::new("eval");
    let curve = d.file("flat05.curve", FLAT05);
    let (status, out, _) = call(&["curve-eval", "--curve", &curve, "--to", "2", "--step", "1"]);
    assert_eq!(status, 0);
    assert_eq!(
        out,
        "t,P_t,y_t,f_0t\n0,1.000000,-,-\n1,0.952381,0.050000,0.050000\n2,0.907029,0.050000,0.050000\n"
    );
}

#[test]
fn arbitrage_is_a_successful_outcome() {
    let d = Dir::new("arb");
    let q = d.file(
        "lop.quotes",
        r#"{"grid": [0, 1], "quotes": [
            {"left": {"atoms": [{"t": 1, "amount": 1}]}, "right": {"atoms": [{"t": 0, "amount": 0.95}]}},
            {"left": {"atoms": [{"t": 1, "amount": 1}]}, "right": {"atoms": [{"t": 0, "amount": 0.96}]}}]}"#,
    );
    let (status, out, _) = call(&["arbitrage-check", "--quotes", &q]);
    assert_eq!(status, 0);
    assert!(out.starts_with("ARBITRAGE\ncoefficients "), "{out}");
    let (_, out, _) = call(&["arbitrage-check", "--quotes", &q, "--format", "structured"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "ARBITRAGE");
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 2);
}

#[test]
fn fx_convert_feeds_price() {
    let d = Dir::new("fx");
    let market = d.file(
        "m.market",
        r#"{"domestic_curve": {"type": "flat", "i": 0.01},
            "foreign_curve": {"type": "flat", "i": 0.03}, "spot_fx": 0.9}"#,
    );
    let cf = d.file("c.cf", CONTINUOUS);
    let converted = d.0.join("conv.cf").to_string_lossy().into_owned();
    let (status, _, err) = call(&[
        "fx-convert",
        "--market",
        &market,
        "--cashflow",
        &cf,
        "--format",
        "structured",
        "--out",
        &converted,
    ]);
    assert_eq!(status, 0, "{err}");
    let dom = d.file("dom.curve", r#"{"type": "flat", "i": 0.01}"#);
    let (status, out, _) = call(&["price", "--curve", &dom, "--cashflow", &converted]);
    assert_eq!(status, 0);
    let dual = d.file("dual.cf", &format!(r#"{{"foreign": {CONTINUOUS}}}"#));
    let (status, direct, _) = call(&["fx-price", "--market", &market, "--cashflow", &dual]);
    assert_eq!(status, 0);
    let first = |s: &str| s.split_whitespace().next().unwrap().to_string();
    assert_eq!(first(&out), first(&direct));
}

#[test]
fn counterexample_and_irr() {
    let d = Dir::new("cx");
    let curve = d.file("flat05.curve", FLAT05);
    let cf = d.file("c.cf", CONTINUOUS);
    let (status, out, _) = call(&["counterexample", "--curve", &curve, "--cashflow", &cf]);
    assert_eq!(status, 0);
    assert!(out.contains("dual 15.826417"), "{out}");
    assert!(out.contains("gap 7.913209"), "{out}");
    let ann = d.file("a.cf", ANNUITY);
    let (status, out, _) = call(&["irr", "--cashflow", &ann, "--curve", &curve]);
    assert_eq!(status, 0);
    assert!(out.starts_with("0.050000\n"), "{out}");
}

#[test]
fn exit_statuses() {
    let d = Dir::new("status");
    let curve = d.file("flat05.curve", FLAT05);
    let far = d.file("far.cf", r#"{"atoms": [{"t": 150, "amount": 1}]}"#);
    let (status, _, err) = call(&["price", "--curve", &curve, "--cashflow", &far]);
    assert_eq!(status, 1);
    assert!(err.contains("horizon"));
    let bad = d.file(
        "bad.cf",
        r#"{"density": [{"from": 2, "to": 1, "coeffs": [1]}]}"#,
    );
    let (status, _, err) = call(&["price", "--curve", &curve, "--cashflow", &bad]);
    assert_eq!(status, 2);
    assert!(err.contains("bad.cf"), "{err}");
    let (status, _, _) = call(&["price", "--curve", &curve]);
    assert_eq!(status, 2);
    let (status, _, _) = call(&["price", "--curve", "/nonexistent", "--cashflow", &far]);
    assert_eq!(status, 2);
    let (status, _, _) = call(&["frobnicate"]);
    assert_eq!(status, 2);
}
