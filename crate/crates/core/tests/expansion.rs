use std::f64::consts::PI;

use floquet::expansion::{bracket_integral, plan_expansion, reconstruct, DeltaSchedule, ExpansionOptions, QuadratureRule, SyntheticPair};
use floquet::fixtures;
use floquet::singularity::{DegeneracyReport, Verdict};
use floquet::{Error, C64};
use proptest::prelude::*;

fn report(t_j: f64) -> DegeneracyReport {
    DegeneracyReport { t_j, lambda: C64::new(-1.0, 0.0), multiplicity: 2, fits: vec![], t_set: vec![], b: vec![], s: vec![], indeterminate: vec![], ess: Verdict::NotEss }
}

#[test]
fn invalid_parameters_are_rejected() {
    let q = QuadratureRule::default();
    assert!(matches!(plan_expansion(&[], 0.0, 1e-3, q), Err(Error::InvalidInput(_))));
    assert!(matches!(plan_expansion(&[], 2.0, 1e-3, q), Err(Error::InvalidInput(_))));
    assert!(matches!(plan_expansion(&[], 0.1, 0.0, q), Err(Error::InvalidInput(_))));
}

#[test]
fn too_many_windows_for_epsilon() {
    let reports: Vec<_> = (0..5).map(|i| report(0.5 + 0.3 * i as f64)).collect();
    assert!(matches!(plan_expansion(&reports, 0.04, 0.01, QuadratureRule::default()), Err(Error::EpsilonTooLarge { count: 5, .. })));
}

#[test]
fn reports_inside_paired_windows_are_absorbed() {
    let reports = [report(0.01), report(PI - 0.02), report(2.0 * PI - 0.03), report(1.0)];
    let plan = plan_expansion(&reports, 0.05, 1e-3, QuadratureRule::default()).unwrap();
    assert_eq!(plan.sq_windows.len(), 1);
    assert!((plan.sq_windows[0].t_j - 1.0).abs() < 1e-15);
}

#[test]
fn epsilon_shrinks_near_other_points() {
    let reports = [report(1.0), report(1.003), report(0.052)];
    let plan = plan_expansion(&reports, 0.05, 2e-3, QuadratureRule::default()).unwrap();
    let eps: Vec<f64> = plan.sq_windows.iter().map(|w| w.epsilon).collect();
    assert!((eps[0] - 1e-3).abs() < 1e-12, "{eps:?}");
    assert!((eps[1] - 1e-3).abs() < 1e-12 && (eps[2] - 1e-3).abs() < 1e-12, "{eps:?}");
    assert!((plan.total_length() - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn grouped_bracket_matches_exact_integral() {
    let pair = SyntheticPair { t_j: 0.4, c: 0.7, gamma: 1.5, n: 3 };
    let v = bracket_integral(&pair, &[0, 1], pair.t_j, 1e-2, &DeltaSchedule::default()).unwrap();
    let exact = pair.grouped_exact(1e-2);
    for (a, b) in v.value.iter().zip(&exact) {
        assert!((a - b).norm() < 1e-10);
    }
    assert!(matches!(bracket_integral(&pair, &[0], pair.t_j, 1e-2, &DeltaSchedule::default()), Err(Error::NotCauchy { .. })));
}

#[test]
fn reconstruction_is_linear_in_f() {
    let spec = fixtures::free(2, 1);
    let plan = plan_expansion(&[], 0.05, 1e-3, QuadratureRule::with_period_nodes(64, 16)).unwrap();
    let opts = ExpansionOptions { k_trunc: 8, plot_points: 5, cell_nodes: 16, ..Default::default() };
    let f = fixtures::smooth_bump(1);
    let g = floquet::gelfand::CellFunction::constant_cell(-3, vec![C64::new(0.3, 0.8)]);
    let a = C64::new(0.5, -1.5);
    let h = f.scale(a).add(&g).unwrap();
    let (rf, rg, rh) = (reconstruct(&spec, &f, &plan, 2.0, &opts).unwrap(), reconstruct(&spec, &g, &plan, 2.0, &opts).unwrap(), reconstruct(&spec, &h, &plan, 2.0, &opts).unwrap());
    for i in 0..rh.f_hat.len() {
        assert!((rh.f_hat[i] - (rf.f_hat[i] * a + rg.f_hat[i])).norm() < 1e-10);
    }
    assert!(rf.relative_error < 1e-3, "{}", rf.relative_error);
}

proptest! {
    #[test]
    fn plan_partitions_the_period(ts in proptest::collection::vec(0.2f64..6.0, 0..4), h in 0.03f64..0.15) {
        let reports: Vec<_> = ts.iter().map(|&t| report(t)).collect();
        match plan_expansion(&reports, h, 1e-3, QuadratureRule::default()) {
            Ok(plan) => {
                prop_assert!((plan.total_length() - 2.0 * PI).abs() < 1e-12);
                for (a, b) in &plan.regular_intervals {
                    prop_assert!(a <= b);
                }
                for w in &plan.sq_windows {
                    prop_assert!(w.epsilon > 0.0 && w.epsilon <= 1e-3);
                }
            }
            Err(e) => prop_assert!(matches!(e, Error::OverlappingWindows(_)), "{e}"),
        }
    }
}
