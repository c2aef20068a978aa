use floquet::bloch::{track_bands, TrackOptions};
use floquet::fixtures;
use floquet::io::{num, read_bands_json, read_function, read_operator, read_reports_json, write_bands_json, write_function, write_operator, write_reports_json};
use floquet::singularity::{DegeneracyReport, Verdict};
use floquet::C64;
use proptest::prelude::*;

#[test]
fn operator_round_trip() {
    let spec = fixtures::perturbed(3, &[0.0, 1.0], 0.1);
    let text = write_operator(&spec);
    assert_eq!(write_operator(&read_operator(&text).unwrap()), text);
}

#[test]
fn function_round_trip() {
    for f in [fixtures::smooth_bump(2), fixtures::step(3)] {
        assert_eq!(read_function(&write_function(&f)).unwrap(), f);
    }
}

#[test]
fn bands_round_trip_is_exact() {
    let table = track_bands(&fixtures::perturbed(2, &[0.0, 1.0], 0.02), &[0.3, 0.31, 0.32], 4, &TrackOptions::default()).unwrap();
    let back = read_bands_json(&write_bands_json(&table)).unwrap();
    assert_eq!(back.grid, table.grid);
    assert_eq!(back.bands, table.bands);
    for (a, b) in table.spectra.iter().zip(&back.spectra) {
        for (p, q) in a.pairs.iter().zip(&b.pairs) {
            assert_eq!(p.lambda, q.lambda);
            assert_eq!(p.psi, q.psi);
            assert_eq!(p.x_left, q.x_left);
            assert_eq!(p.label, q.label);
        }
    }
}

#[test]
fn wrong_format_tag_is_rejected() {
    assert!(read_bands_json(r#"{"format":"other","version":"1","n":2,"m":1,"k_trunc":1,"grid":[],"nodes":[],"links":[]}"#).is_err());
}

#[test]
fn reports_round_trip() {
    let r = DegeneracyReport {
        t_j: 0.039788735772973836,
        lambda: C64::new(-41.5, 1e-17),
        multiplicity: 2,
        fits: vec![],
        t_set: vec![],
        b: vec![],
        s: vec![],
        indeterminate: vec![],
        ess: Verdict::Indeterminate,
    };
    let back = read_reports_json(&write_reports_json(&[r.clone()])).unwrap();
    assert_eq!(back[0].t_j, r.t_j);
    assert_eq!(back[0].lambda, r.lambda);
    assert_eq!(back[0].ess, r.ess);
}

proptest! {
    #[test]
    fn csv_numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL) {
        prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }
}
