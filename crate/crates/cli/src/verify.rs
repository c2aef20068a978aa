//! Invariant suite on the built-in operators.

use std::f64::consts::PI;

use floquet::bloch::monodromy::newton_correction;
use floquet::bloch::solve_bloch;
use floquet::expansion::{plan_expansion, reconstruct, ExpansionOptions, QuadratureRule};
use floquet::fixtures;
use floquet::gelfand::{inversion_residual, parseval_residual, CellFunction, ParsevalResidual};
use floquet::operator::{unperturbed_eigenvalue, validate_spec, OperatorSpec, DEFAULT_GAP_TOL};
use floquet::quadrature::periodic_trapezoid;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::commands::builtin_operator;
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub fixture: String,
    pub check: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

fn check(fixture: &str, name: &str, value: f64, tol: f64) -> Check {
    Check { fixture: fixture.into(), check: name.into(), value, tol, pass: value <= tol && value.is_finite() }
}

const T_SAMPLES: [f64; 4] = [0.13, 1.1, 2.9, 4.4];

/// Fixtures whose spectrum is known in closed form.
fn is_exact(name: &str) -> bool {
    name.starts_with("free") || name.starts_with("constant")
}

fn fixture_checks(name: &str, spec: &OperatorSpec, k: usize) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let sys = validate_spec(spec, DEFAULT_GAP_TOL)?;
    let n = spec.order();
    let (mut exact, mut bio, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
    for &t in &T_SAMPLES {
        let s = solve_bloch(spec, C64::new(t, 0.0), k)?;
        bio = bio.max(s.biorthogonality_defect().0);
        if is_exact(name) {
            for p in s.pairs.iter().filter(|p| p.mode.0.unsigned_abs() as usize <= k / 2) {
                let mu = unperturbed_eigenvalue(n, sys.mu[p.mode.1], p.mode.0, C64::new(t, 0.0));
                exact = exact.max((p.lambda - mu).norm() / mu.norm().max(1.0));
            }
        }
        for p in s.pairs.iter().filter(|p| p.mode.0.abs() <= 2) {
            oracle = oracle.max(newton_correction(spec, p.lambda, s.t)? / (1.0 + p.lambda.norm()));
        }
    }
    if is_exact(name) {
        out.push(check(name, "exact-spectrum", exact, 1e-9));
    }
    out.push(check(name, "biorthogonality", bio, 1e-8));
    out.push(check(name, "determinant-oracle", oracle, 1e-6));

    let m = spec.dim();
    let f = fixtures::smooth_bump(m);
    let plan = plan_expansion(&[], 0.02, 0.002, QuadratureRule::with_period_nodes(128, 16))?;
    out.push(check(name, "partition-length", (plan.total_length() - 2.0 * PI).abs(), 1e-12));
    let opts = ExpansionOptions { k_trunc: 8, plot_points: 11, cell_nodes: 16, ..Default::default() };
    let zero = reconstruct(spec, &CellFunction::zero(m), &plan, 1.0, &opts)?;
    out.push(check(name, "zero-function", zero.f_hat.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0));
    let rule = periodic_trapezoid(64);
    let pr = match parseval_residual(&f, &rule) {
        ParsevalResidual::Relative(r) => r,
        ParsevalResidual::Exact => 0.0,
    };
    out.push(check(name, "parseval", pr, 1e-10));
    let xs: Vec<f64> = (0..17).map(|i| -2.0 + 0.25 * i as f64).collect();
    out.push(check(name, "gelfand-inversion", inversion_residual(&f, &rule, &xs), 1e-12));
    Ok(out)
}

pub fn run(only: Option<&str>, k: usize) -> Result<Vec<Check>, CliError> {
    let names: Vec<&str> = match only {
        Some(n) => vec![n],
        None => vec!["free", "free3", "constant", "constant3", "perturbed"],
    };
    let mut out = Vec::new();
    for name in names {
        let spec = builtin_operator(name)?;
        out.extend(fixture_checks(name, &spec, k)?);
    }
    Ok(out)
}
