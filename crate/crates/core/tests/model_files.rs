use std::path::PathBuf;

use randrec::model::InducedModel;
use randrec::report::{theory_report, Regime, ReportOptions};
use randrec::spectral::SpectralError;

fn load(name: &str) -> InducedModel {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    InducedModel::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn shipped_models_round_trip() {
    for name in [
        "iid_grey.json",
        "worked.json",
        "signed.json",
        "kesten_lattice.json",
        "kesten.json",
        "degenerate.json",
        "contracting_light.json",
    ] {
        let model = load(name);
        let text = serde_json::to_string(&model.to_file()).unwrap();
        assert_eq!(InducedModel::from_json(&text).unwrap(), model, "{name}");
    }
}

#[test]
fn grey_models() {
    let r = theory_report(&load("iid_grey.json"), &ReportOptions::default()).unwrap();
    assert_eq!(r.regime, Regime::Grey);
    assert_eq!(r.alpha, Some(1.5));
    let k = 1.0 / (1.0 - 0.5f64.powf(1.5));
    assert!(close(r.k.as_deref().unwrap(), &[k], 1e-12));

    let r = theory_report(&load("worked.json"), &ReportOptions::default()).unwrap();
    assert!(close(r.k.as_deref().unwrap(), &[2.2, 2.6], 1e-12));
    assert!(close(r.k_minus.as_deref().unwrap(), &[0.0, 0.0], 1e-12));

    let r = theory_report(&load("signed.json"), &ReportOptions::default()).unwrap();
    assert!(r.k.is_none());
    assert!(close(r.k_plus.as_deref().unwrap(), &[4.0 / 3.0], 1e-12));
    assert!(close(r.k_minus.as_deref().unwrap(), &[2.0 / 3.0], 1e-12));
}

#[test]
fn kesten_models() {
    let r = theory_report(&load("kesten_lattice.json"), &ReportOptions::default()).unwrap();
    assert_eq!(r.regime, Regime::Kesten);
    assert!((r.alpha.unwrap() - 3f64.log2()).abs() < 1e-8);
    assert!(!r.assumptions.unwrap().kesten.lattice_free);

    let r = theory_report(&load("kesten.json"), &ReportOptions::default()).unwrap();
    assert_eq!(r.regime, Regime::Kesten);
    assert!((r.alpha.unwrap() - 1.540_778_605_323_295_4).abs() < 1e-9);
    assert!(r.assumptions.unwrap().kesten.lattice_free);
    assert!(r.rho_theta_alpha.unwrap() < r.rho_h_alpha.unwrap());
}

#[test]
fn degenerate_and_light_models() {
    let r = theory_report(&load("degenerate.json"), &ReportOptions::default()).unwrap();
    assert!(r.degenerate.is_degenerate);
    assert_eq!(r.degenerate.c, Some(2.0));

    let r = theory_report(&load("contracting_light.json"), &ReportOptions::default()).unwrap();
    assert_eq!(r.regime, Regime::Light);
    assert!(!r.degenerate.is_degenerate);
    assert_eq!(r.k, Some(vec![0.0]));
}

#[test]
fn expanding_multiplier_is_a_regime_error() {
    let text = r#"{"states": ["s"], "P": [[1.0]], "laws": {"s": {
        "q_law": {"type": "constant", "value": 1.0},
        "m_law": {"type": "constant", "value": 1.5},
        "coupling": {"type": "independent"}}}}"#;
    let model = InducedModel::from_json(text).unwrap();
    assert!(matches!(
        theory_report(&model, &ReportOptions::default()),
        Err(SpectralError::NotContracting { .. })
    ));
}
