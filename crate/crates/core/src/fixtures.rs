//! Reference operators and input functions shared by tests, the acceptance
//! suite and the `verify` command.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::gelfand::{CellData, CellFunction};
use crate::linalg::{CMat, ZERO};
use crate::operator::{FourierMatrixSeries, OperatorSpec};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn diag(vals: &[f64]) -> CMat {
    CMat::from_fn(vals.len(), vals.len(), |i, j| if i == j { c(vals[i], 0.0) } else { ZERO })
}

fn unit(m: usize, r: usize, s: usize) -> CMat {
    CMat::from_fn(m, m, |i, j| if i == r && j == s { c(1.0, 0.0) } else { ZERO })
}

/// `y^(n)` on `m` components.
pub fn free(n: usize, m: usize) -> OperatorSpec {
    OperatorSpec::free(n, m).unwrap()
}

/// Constant `P₂ = diag(mu)`.
pub fn constant(n: usize, mu: &[f64]) -> OperatorSpec {
    OperatorSpec::free(n, mu.len()).unwrap().with_coeff(2, FourierMatrixSeries::constant(diag(mu))).unwrap()
}

/// Fixed zero-mean band-1 matrix series used for generic perturbations.
pub fn band_one(m: usize) -> FourierMatrixSeries {
    let b1 = CMat::from_fn(m, m, |i, j| c(0.7 - 0.3 * i as f64 + 0.45 * j as f64, 0.2 + 0.1 * (i * j) as f64 - 0.35 * j as f64));
    let bm1 = CMat::from_fn(m, m, |i, j| c(-0.4 + 0.25 * (i + j) as f64, -0.15 + 0.3 * i as f64));
    FourierMatrixSeries::from_modes(m, [(1, b1), (-1, bm1)]).unwrap()
}

/// `P₂ = C + ε B(x)` with `C = diag(mu)` and `B` from [`band_one`]. For
/// `n ≥ 3` the same band-one series, scaled by `ε`, is also used for `P₃`.
pub fn perturbed(n: usize, mu: &[f64], eps: f64) -> OperatorSpec {
    let m = mu.len();
    let b = band_one(m);
    let scaled = |s: &FourierMatrixSeries| {
        FourierMatrixSeries::from_modes(m, s.nonzero_modes().map(|(q, c)| (q, c * faer::Scale(C64::new(eps, 0.0))))).unwrap()
    };
    let p2 = FourierMatrixSeries::constant(diag(mu)).add(&scaled(&b)).unwrap();
    let mut spec = OperatorSpec::free(n, m).unwrap().with_coeff(2, p2).unwrap();
    if n >= 3 {
        spec = spec.with_coeff(3, scaled(&b)).unwrap();
    }
    spec
}

/// `P₂ = diag(0, 1) + ε E₁₂ e^{-i4πx}`: the only coupling feeds the crossing
/// pair `(1, j=1)`/`(−1, j=0)` at `t = 1/(8π)` one way, so the Galerkin
/// matrix stays block triangular there.
pub fn one_sided_coupling(eps: f64) -> OperatorSpec {
    let p2 = FourierMatrixSeries::from_modes(2, [(0, diag(&[0.0, 1.0])), (-2, unit(2, 0, 1) * faer::Scale(c(eps, 0.0)))]).unwrap();
    OperatorSpec::free(2, 2).unwrap().with_coeff(2, p2).unwrap()
}

/// `P₂ = diag(0, 1) + ε (E₁₂ e^{-i4πx} − E₂₁ e^{i4πx})`: the crossing at
/// `1/(8π)` splits into two exceptional points at `(1 ∓ 2ε)/(8π)` with
/// square-root branching.
pub fn antisymmetric_coupling(eps: f64) -> OperatorSpec {
    let p2 = FourierMatrixSeries::from_modes(
        2,
        [(0, diag(&[0.0, 1.0])), (-2, unit(2, 0, 1) * faer::Scale(c(eps, 0.0))), (2, unit(2, 1, 0) * faer::Scale(c(-eps, 0.0)))],
    )
    .unwrap();
    OperatorSpec::free(2, 2).unwrap().with_coeff(2, p2).unwrap()
}

/// Couples every crossing pair `(k, 1)`/`(−k, 0)`, `1 ≤ k ≤ k_max`, with
/// `E₁₂` amplitude `ε_k k²` and `E₂₁` amplitude `−ε_k/k²`, `ε_k = 4πk w`.
/// Pair `k` has exceptional points at `1/(8πk) ∓ w`; the skew `k²` makes the
/// eigenvectors increasingly non-orthogonal, so `∫ 1/|α|` over a fixed
/// window grows with `k`.
pub fn growing_coupling(w: f64, k_max: i64) -> OperatorSpec {
    let mut modes = vec![(0, diag(&[0.0, 1.0]))];
    for k in 1..=k_max {
        let e = 4.0 * PI * k as f64 * w;
        let a = (k * k) as f64;
        modes.push((-2 * k, unit(2, 0, 1) * faer::Scale(c(e * a, 0.0))));
        modes.push((2 * k, unit(2, 1, 0) * faer::Scale(c(-e / a, 0.0))));
    }
    let p2 = FourierMatrixSeries::from_modes(2, modes).unwrap();
    OperatorSpec::free(2, 2).unwrap().with_coeff(2, p2).unwrap()
}

/// `v χ_[0,1)` with a fixed unit vector `v`.
pub fn step(m: usize) -> CellFunction {
    let v: Vec<C64> = (0..m).map(|s| c(1.0 / (m as f64).sqrt(), 0.1 * s as f64)).collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    CellFunction::constant_cell(0, v.into_iter().map(|x| x / n).collect())
}

/// `a_c sin⁴(πx)` on cells `c = −2..2` with `a = (0.5, 1, 1, 0.5)`: a `C³`
/// bump spanning four cells.
pub fn smooth_bump(m: usize) -> CellFunction {
    // sin⁴(πy) = 3/8 − cos(2πy)/2 + cos(4πy)/8.
    let amps = [0.5, 1.0, 1.0, 0.5];
    let cells = (-2..2).zip(amps).map(|(cell, a)| {
        let v = |w: f64| (0..m).map(|s| c(a * w * (1.0 - 0.3 * s as f64), 0.0)).collect::<Vec<_>>();
        (cell, CellData::Fourier(vec![(0, v(3.0 / 8.0)), (1, v(-0.25)), (-1, v(-0.25)), (2, v(1.0 / 16.0)), (-2, v(1.0 / 16.0))]))
    });
    CellFunction::new(m, cells).unwrap()
}
