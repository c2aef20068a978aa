use std::collections::BTreeMap;
use std::f64::consts::PI;

use floquet::fixtures;
use floquet::linalg::CMat;
use floquet::operator::{minimal_census_n0, unperturbed_eigenvalue, validate_spec, FourierMatrixSeries, OperatorSpec, DEFAULT_GAP_TOL};
use floquet::{Error, C64};
use proptest::prelude::*;

fn mat(m: usize, seed: f64) -> CMat {
    CMat::from_fn(m, m, |i, j| C64::new((seed + i as f64).sin(), (seed * 0.7 + j as f64).cos()))
}

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    let mut d: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

#[test]
fn order_below_two_is_rejected() {
    assert!(matches!(OperatorSpec::free(1, 2), Err(Error::MalformedSpec(_))));
    assert!(matches!(OperatorSpec::free(2, 0), Err(Error::MalformedSpec(_))));
}

#[test]
fn coefficient_index_and_dimension_are_checked() {
    let mut c = BTreeMap::new();
    c.insert(4, FourierMatrixSeries::constant(mat(2, 0.1)));
    assert!(matches!(OperatorSpec::new(3, 2, c), Err(Error::MalformedSpec(_))));
    let mut c = BTreeMap::new();
    c.insert(2, FourierMatrixSeries::constant(mat(3, 0.1)));
    assert!(matches!(OperatorSpec::new(2, 2, c), Err(Error::MalformedSpec(_))));
}

#[test]
fn repeated_mean_eigenvalues_are_degenerate() {
    let spec = fixtures::constant(2, &[1.0, 1.0]);
    assert!(matches!(validate_spec(&spec, DEFAULT_GAP_TOL), Err(Error::DegenerateMeanMatrix { .. })));
    let sys = validate_spec(&fixtures::constant(2, &[0.0, 1.0]), DEFAULT_GAP_TOL).unwrap();
    for j in 0..2 {
        let g = floquet::linalg::inner(&sys.u[j], &sys.v[j]);
        assert!((g - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn non_finite_entries_are_rejected() {
    let bad = CMat::from_fn(2, 2, |i, j| if i == j { C64::new(f64::NAN, 0.0) } else { C64::new(0.0, 0.0) });
    let spec = OperatorSpec::free(2, 2).unwrap().with_coeff(2, FourierMatrixSeries::constant(bad)).unwrap();
    assert!(matches!(validate_spec(&spec, DEFAULT_GAP_TOL), Err(Error::MalformedSpec(_))));
}

#[test]
fn unperturbed_eigenvalue_of_second_order() {
    // (i(2πk + t))² + μ
    let t = C64::new(0.3, 0.0);
    let v = unperturbed_eigenvalue(2, C64::new(1.0, 0.0), 2, t);
    let expect = -(4.0 * PI + 0.3f64).powi(2) + 1.0;
    assert!((v.re - expect).abs() < 1e-12 * expect.abs() && v.im.abs() < 1e-12);
}

#[test]
fn census_threshold_exists_for_small_h() {
    let sys = validate_spec(&fixtures::constant(2, &[0.0, 1.0]), DEFAULT_GAP_TOL).unwrap();
    let n0 = minimal_census_n0(&sys, 2, 0.02).unwrap();
    assert!(n0 >= 1);
}

proptest! {
    #[test]
    fn series_is_one_periodic(x in -3.0f64..3.0, seed in 0.0f64..5.0) {
        let s = FourierMatrixSeries::from_modes(2, [(1, mat(2, seed)), (-2, mat(2, seed + 1.0))]).unwrap();
        prop_assert!(max_diff(&s.eval(x), &s.eval(x + 1.0)) < 1e-12);
    }

    #[test]
    fn series_addition_is_pointwise(x in 0.0f64..1.0, seed in 0.0f64..5.0) {
        let a = FourierMatrixSeries::from_modes(2, [(1, mat(2, seed))]).unwrap();
        let b = FourierMatrixSeries::from_modes(2, [(1, mat(2, seed + 2.0)), (3, mat(2, seed - 1.0))]).unwrap();
        let sum = a.add(&b).unwrap();
        prop_assert_eq!(sum.bandwidth(), 3);
        prop_assert!(max_diff(&sum.eval(x), &(a.eval(x) + b.eval(x))) < 1e-12);
    }
}
