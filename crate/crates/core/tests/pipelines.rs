//! Small end-to-end runs of every experiment, parsing the outputs back.

use std::collections::HashMap;

use gwlab::experiments::{load_config, run, Experiment, OutputFile};
use gwlab::spectra::SpectralMeasureEstimate;
use gwlab::walks::{ReturnCurve, TimeAxis};
use serde_json::Value;

fn run_json(kind: Experiment, text: &str) -> HashMap<String, String> {
    let (config, _) = load_config(text, &[]).unwrap();
    let files: Vec<OutputFile> = run(kind, &config).unwrap();
    for f in &files {
        assert!(f.contents.ends_with('\n'), "{}", f.name);
    }
    files.into_iter().map(|f| (f.name, f.contents)).collect()
}

/// Rows of a comma-separated table keyed by header name.
fn table(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            let fields: Vec<&str> = l.split(',').collect();
            assert_eq!(fields.len(), header.len(), "{l}");
            header.iter().zip(fields).map(|(h, f)| (h.to_string(), f.to_string())).collect()
        })
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key}={}", row[key]))
}

#[test]
fn return_prob_curve_and_fit() {
    let out = run_json(
        Experiment::ReturnProb,
        r#"{"times": [2, 4, 8, 16, 32], "n_samples": 60, "seed": 1, "radius": 8, "fit_range": [2, 32]}"#,
    );
    let curve = ReturnCurve::from_csv(&out["return_prob.csv"]).unwrap();
    assert_eq!(curve.axis, TimeAxis::Discrete);
    assert_eq!(curve.times, vec![2.0, 4.0, 8.0, 16.0, 32.0]);
    assert!(curve.estimates.iter().all(|&p| p > 0.0 && p <= 1.0));
    assert!(curve.estimates.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(curve.n_trees, 60);
    let fit: Value = serde_json::from_str(&out["fit.json"]).unwrap();
    assert!(fit["slope"].as_f64().unwrap() > 0.0);
    assert_eq!(fit["even_estimates_positive"], true);
    assert_eq!(fit["truncation_radius"], 8);
}

#[test]
fn ct_return_and_identity() {
    let out = run_json(
        Experiment::CtReturn,
        r#"{"s_values": [0.5, 1.0, 2.0], "n_samples": 8, "seed": 2, "radius": 5, "variant": "normalized"}"#,
    );
    let curve = ReturnCurve::from_csv(&out["ct_return.csv"]).unwrap();
    assert_eq!(curve.axis, TimeAxis::Continuous);
    assert!(curve.estimates.windows(2).all(|w| w[1] < w[0]));
    let rows = table(&out["ct_identity.csv"]);
    assert_eq!(rows.len(), 8 * 3);
    for r in &rows {
        assert!(num(r, "abs_diff") <= num(r, "mixture_error") + num(r, "semigroup_error") + 1e-8, "{r:?}");
    }
}

#[test]
fn lifshits_extinct_outputs() {
    let out = run_json(Experiment::LifshitsExtinct, r#"{"lambda": 2.0, "grid": [0.5, 1.0, 2.0], "n_samples": 3000, "seed": 3}"#);
    let est = SpectralMeasureEstimate::from_csv(&out["spectral_measure.csv"]).unwrap();
    assert_eq!(est.grid, vec![0.5, 1.0, 2.0]);
    let total = est.atom_at_zero + est.masses.iter().sum::<f64>() + est.tail;
    assert!((total - 1.0).abs() < 1e-9);
    let bounds: Value = serde_json::from_str(&out["lifshits_bounds.json"]).unwrap();
    assert!(bounds.is_object());
    let rows = table(&out["lifshits_check.csv"]);
    assert_eq!(rows.len(), 3);
    for (r, cum) in rows.iter().zip(&est.cumulative) {
        assert!((num(r, "cumulative") - cum).abs() < 1e-12);
        assert!(num(r, "lower") <= num(r, "upper"));
        assert_eq!(r["within_3sigma"], "true");
    }
}

#[test]
fn dos_modes_write_the_same_file() {
    let text = |mode: &str| {
        format!(
            r#"{{"lambda": 2.0, "n_vertices": 150, "grid": [0.5, 1.0, 3.0, 4.21], "n_samples": 12, "seed": 4, "dos_mode": "{mode}", "giant_energies": [0.25, 0.5, 1.0]}}"#
        )
    };
    let dense = run_json(Experiment::Dos, &text("dense"));
    let inertia = run_json(Experiment::Dos, &text("inertia"));
    assert_eq!(dense["dos.csv"], inertia["dos.csv"]);
    let est = SpectralMeasureEstimate::from_csv(&dense["dos.csv"]).unwrap();
    let total = est.atom_at_zero + est.masses.iter().sum::<f64>() + est.tail;
    assert!((total - 1.0).abs() < 1e-9);
    let rows = table(&dense["giant_mass.csv"]);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r["trace_violations"], "0");
        assert!(num(r, "laplacian") <= num(r, "normalized"));
    }
    let fit: Value = serde_json::from_str(&dense["giant_fit.json"]).unwrap();
    assert!(fit.get("laplacian").is_some() && fit.get("normalized").is_some());
}

#[test]
fn atom_zero_report() {
    let out = run_json(Experiment::AtomZero, r#"{"lambda": 2.0, "n_vertices": 1000, "n_graphs": 20, "n_samples": 40000, "seed": 5}"#);
    let v: Value = serde_json::from_str(&out["atom_zero.json"]).unwrap();
    let (er, bgw) = (v["er_estimate"].as_f64().unwrap(), v["bgw_estimate"].as_f64().unwrap());
    let rel = v["relative_diff"].as_f64().unwrap();
    assert!((rel - (er - bgw).abs() / bgw).abs() < 1e-12);
    assert!(rel < 0.05, "{er} {bgw}");
    assert_eq!(v["er_graphs"], 20);
    assert_eq!(v["bgw_samples"], 40000);
}

#[test]
fn islands_audit_report() {
    let out = run_json(Experiment::IslandsAudit, r#"{"n_samples": 80, "seed": 6, "radius": 4}"#);
    let v: Value = serde_json::from_str(&out["islands_audit.json"]).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["oracle_hosts"], 80);
    assert_eq!(v["oracle_mismatches"], 0);
    assert_eq!(v["binary_islands"], 0);
    assert_eq!(v["q_ladder"], serde_json::json!([0.1, 0.2, 0.4]));
}

#[test]
fn norm_audit_report() {
    let out = run_json(
        Experiment::NormAudit,
        r#"{"q": "1/5", "radius": 4, "host_radius": 6, "n_samples": 6, "seed": 7, "binary_radii": [2, 3]}"#,
    );
    let rows = table(&out["norm_audit.csv"]);
    assert_eq!(rows.len(), 6);
    for r in rows.iter().filter(|r| r["norm"] != "nan") {
        assert!(num(r, "norm") < 1.0);
        assert_eq!(r["within"], "true");
    }
    let v: Value = serde_json::from_str(&out["norm_audit.json"]).unwrap();
    assert_eq!(v["violations"], 0);
    let binary = v["binary"].as_array().unwrap();
    assert_eq!(binary.len(), 2);
    assert!(binary[0]["norm"].as_f64().unwrap() < binary[1]["norm"].as_f64().unwrap());
}

#[test]
fn bad_event_tables() {
    let out = run_json(Experiment::BadEvent, r#"{"times": [8, 27], "n_samples": 15, "seed": 8, "radius": 5}"#);
    let hits = table(&out["bad_event.csv"]);
    assert_eq!(hits.len(), 2);
    assert!((num(&hits[1], "q") - 1.0 / 3.0).abs() < 1e-12);
    for r in &hits {
        let p = num(r, "probability");
        assert!((0.0..=1.0).contains(&p));
    }
    let induced = table(&out["induced_return.csv"]);
    for r in &induced {
        let examined = num(r, "examined");
        assert_eq!(examined, num(r, "qualifying") + num(r, "excluded_big") + num(r, "excluded_root"));
        assert_eq!(r["violations"], "0");
    }
}
