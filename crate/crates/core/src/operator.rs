//! Periodic matrix differential expressions
//! `y^(n) + P_2 y^(n-2) + … + P_n y` and the mean-matrix eigensystem.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ONE};

/// Default relative simplicity threshold for the eigenvalues of `C`.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Band-limited 1-periodic matrix function `P(x) = Σ_q Ĉ_q e^{i2πqx}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMatrixSeries {
    m: usize,
    bandwidth: usize,
    /// `modes[q + bandwidth]` holds `Ĉ_q`.
    modes: Vec<CMat>,
}

impl FourierMatrixSeries {
    pub fn zero(m: usize) -> Self {
        Self { m, bandwidth: 0, modes: vec![CMat::zeros(m, m)] }
    }

    pub fn constant(c: CMat) -> Self {
        Self { m: c.nrows(), bandwidth: 0, modes: vec![c] }
    }

    /// Builds a series from `(q, Ĉ_q)` pairs; absent modes are zero.
    pub fn from_modes(m: usize, modes: impl IntoIterator<Item = (i64, CMat)>) -> Result<Self> {
        let modes: Vec<(i64, CMat)> = modes.into_iter().collect();
        let bandwidth = modes.iter().map(|(q, _)| q.unsigned_abs() as usize).max().unwrap_or(0);
        let mut out = vec![CMat::zeros(m, m); 2 * bandwidth + 1];
        let mut seen = vec![false; 2 * bandwidth + 1];
        for (q, c) in modes {
            if c.nrows() != m || c.ncols() != m {
                return Err(Error::MalformedSpec(format!("mode {q} is {}x{}, expected {m}x{m}", c.nrows(), c.ncols())));
            }
            let idx = (q + bandwidth as i64) as usize;
            if seen[idx] {
                return Err(Error::MalformedSpec(format!("mode {q} given twice")));
            }
            seen[idx] = true;
            out[idx] = c;
        }
        Ok(Self { m, bandwidth, modes: out })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `Ĉ_q`, or `None` outside the band.
    pub fn mode(&self, q: i64) -> Option<&CMat> {
        if q.unsigned_abs() as usize > self.bandwidth {
            return None;
        }
        Some(&self.modes[(q + self.bandwidth as i64) as usize])
    }

    /// Nonzero modes as `(q, Ĉ_q)`.
    pub fn nonzero_modes(&self) -> impl Iterator<Item = (i64, &CMat)> {
        let b = self.bandwidth as i64;
        self.modes
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - b, c))
            .filter(|(_, c)| linalg::fro(c) > 0.0)
    }

    /// Evaluates `P(x)`. The phase is reduced mod 1 so `P(x) = P(x+1)` holds
    /// bit for bit.
    pub fn eval(&self, x: f64) -> CMat {
        let xr = x - x.floor();
        let mut out = CMat::zeros(self.m, self.m);
        for (q, c) in self.nonzero_modes() {
            let ph = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (q as f64) * xr);
            out += c * faer::Scale(ph);
        }
        out
    }

    /// `self + other`, mode by mode.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::MalformedSpec("dimension mismatch in series sum".into()));
        }
        let b = self.bandwidth.max(other.bandwidth) as i64;
        let modes = (-b..=b).map(|q| {
            let mut c = CMat::zeros(self.m, self.m);
            if let Some(a) = self.mode(q) {
                c += a;
            }
            if let Some(a) = other.mode(q) {
                c += a;
            }
            (q, c)
        });
        Self::from_modes(self.m, modes)
    }
}

/// The operator: order `n`, matrix size `m` and coefficients `P_ν`, `2 ≤ ν ≤ n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    n: usize,
    m: usize,
    coeffs: BTreeMap<usize, FourierMatrixSeries>,
}

impl OperatorSpec {
    pub fn new(n: usize, m: usize, coeffs: BTreeMap<usize, FourierMatrixSeries>) -> Result<Self> {
        if n < 2 {
            return Err(Error::MalformedSpec(format!("order n = {n} must be at least 2")));
        }
        if m < 1 {
            return Err(Error::MalformedSpec("matrix dimension m must be at least 1".into()));
        }
        for (nu, s) in &coeffs {
            if *nu < 2 || *nu > n {
                return Err(Error::MalformedSpec(format!("coefficient index {nu} outside 2..={n}")));
            }
            if s.dim() != m {
                return Err(Error::MalformedSpec(format!("P_{nu} has dimension {}, expected {m}", s.dim())));
            }
        }
        Ok(Self { n, m, coeffs })
    }

    /// `y^(n)` with all coefficients zero.
    pub fn free(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, BTreeMap::new())
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn coeff(&self, nu: usize) -> Option<&FourierMatrixSeries> {
        self.coeffs.get(&nu)
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, FourierMatrixSeries> {
        &self.coeffs
    }

    /// Largest Fourier bandwidth over all coefficients.
    pub fn max_bandwidth(&self) -> usize {
        self.coeffs.values().map(|s| s.bandwidth()).max().unwrap_or(0)
    }

    /// `C = ∫₀¹ P₂`, the zero mode of `P₂`.
    pub fn mean_matrix(&self) -> CMat {
        self.coeff(2).and_then(|s| s.mode(0).cloned()).unwrap_or_else(|| CMat::zeros(self.m, self.m))
    }

    /// Copy with `P₂` replaced.
    pub fn with_coeff(&self, nu: usize, series: FourierMatrixSeries) -> Result<Self> {
        let mut c = self.coeffs.clone();
        c.insert(nu, series);
        Self::new(self.n, self.m, c)
    }
}

/// Eigensystem of the mean matrix `C`, ordered by `(Re μ, Im μ)`.
///
/// `v[j]` has unit norm, `u[j]` is the matching left eigenvector
/// (`u_j^H C = μ_j u_j^H`) scaled so `⟨u_j, v_j⟩ = 1`.
#[derive(Clone, Debug)]
pub struct MeanEigensystem {
    pub c: CMat,
    pub mu: Vec<C64>,
    pub v: Vec<Vec<C64>>,
    pub u: Vec<Vec<C64>>,
}

/// Checks the structural invariants and the simplicity of the eigenvalues of `C`.
pub fn validate_spec(spec: &OperatorSpec, gap_tol: f64) -> Result<MeanEigensystem> {
    let m = spec.dim();
    for (nu, s) in spec.coeffs() {
        for q in -(s.bandwidth() as i64)..=(s.bandwidth() as i64) {
            let c = s.mode(q).unwrap();
            if c.nrows() != m || c.ncols() != m {
                return Err(Error::MalformedSpec(format!("P_{nu} mode {q} has wrong shape")));
            }
            for j in 0..m {
                for i in 0..m {
                    if !c[(i, j)].re.is_finite() || !c[(i, j)].im.is_finite() {
                        return Err(Error::MalformedSpec(format!("P_{nu} mode {q} has a non-finite entry")));
                    }
                }
            }
        }
    }
    let c = spec.mean_matrix();
    let e = linalg::eig(c.as_ref())?;
    let scale = 1.0 + linalg::fro(&c);
    let mut gap = f64::INFINITY;
    for i in 0..m {
        for j in i + 1..m {
            gap = gap.min((e.values[i] - e.values[j]).norm());
        }
    }
    let threshold = gap_tol * scale;
    if gap <= threshold {
        return Err(Error::DegenerateMeanMatrix { gap, threshold });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (e.values[a], e.values[b]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    let mut mu = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    let mut u = Vec::with_capacity(m);
    for &k in &order {
        let mut vk = linalg::col(&e.right, k);
        let nv = linalg::norm(&vk);
        // Fix the phase: largest component real and positive.
        let big = vk.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ONE);
        let ph = big.conj() / big.norm();
        for x in vk.iter_mut() {
            *x = *x * ph / nv;
        }
        let mut uk = linalg::col(&e.left, k);
        let g = linalg::inner(&uk, &vk);
        if g.norm() == 0.0 {
            return Err(Error::DegenerateMeanMatrix { gap, threshold });
        }
        for x in uk.iter_mut() {
            *x /= g.conj();
        }
        mu.push(e.values[k]);
        v.push(vk);
        u.push(uk);
    }
    Ok(MeanEigensystem { c, mu, v, u })
}

/// `e(t) = (∫₀¹ |e^{itx}|² dx)^{-1/2}`; equals 1 for real `t`.
pub fn e_factor(t: C64) -> f64 {
    let s = -2.0 * t.im;
    if s == 0.0 {
        return 1.0;
    }
    // (e^s - 1)/s with expm1 keeps full accuracy as s -> 0.
    (s.exp_m1() / s).powf(-0.5)
}

/// `μ_{k,j}(t) = (i(2πk+t))^n + μ_j (i(2πk+t))^{n-2}`.
pub fn unperturbed_eigenvalue(n: usize, mu: C64, k: i64, t: C64) -> C64 {
    let z = crate::linalg::I * (2.0 * std::f64::consts::PI * k as f64 + t);
    z.powu(n as u32) + mu * z.powu(n as u32 - 2)
}

/// Single-mode eigenfunction profile `e(t) v_j e^{i(2πk+t)x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnperturbedProfile {
    /// Fourier index carrying the whole function.
    pub k: i64,
    /// The `m`-vector `e(t) v_j` at that mode.
    pub amplitude: Vec<C64>,
}

/// Closed-form eigenpair of the constant-coefficient fiber operator.
/// `j` is zero-based.
pub fn unperturbed_eigenpair(sys: &MeanEigensystem, n: usize, k: i64, j: usize, t: C64) -> Result<(C64, UnperturbedProfile)> {
    if j >= sys.mu.len() {
        return Err(Error::IndexOutOfRange(format!("band index {j} with m = {}", sys.mu.len())));
    }
    if n < 2 {
        return Err(Error::IndexOutOfRange(format!("order {n}")));
    }
    let e = e_factor(t);
    let amplitude = sys.v[j].iter().map(|x| x * e).collect();
    Ok((unperturbed_eigenvalue(n, sys.mu[j], k, t), UnperturbedProfile { k, amplitude }))
}

/// Smallest `N0` such that every `|k| ≥ N0` satisfies
/// `max|μ_j|·(2π|k|+|t|)^{n-2}`-type perturbation bounds used by the disk
/// census: `max|μ_j| + 4π|k|h + h² < |k|^{n-1}` for `n = 2`, and the analogous
/// relative bound for higher order. `None` when no `N0 < 10⁴` works, which
/// happens for `n ≥ 3` once `h` exceeds about `1/(n(2π)^{n−1})`.
pub fn minimal_census_n0(sys: &MeanEigensystem, n: usize, h: f64) -> Option<usize> {
    let mu_max = sys.mu.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let pi = std::f64::consts::PI;
    for k in 1..10_000usize {
        let ok = (k..k + 64).all(|kk| {
            let kk = kk as f64;
            // Distance from the shifted centre plus the μ-term must stay
            // inside the disk, for the centres of both families.
            [2.0 * pi * kk, 2.0 * pi * kk + pi].iter().all(|&c| {
                let shift = ((c + h).powi(n as i32) - c.powi(n as i32)).abs();
                let mu_term = mu_max * (c + h).powi(n as i32 - 2);
                shift + mu_term < kk.powi(n as i32 - 1)
            })
        });
        if ok {
            return Some(k);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(vals: &[f64]) -> CMat {
        CMat::from_fn(vals.len(), vals.len(), |i, j| if i == j { C64::new(vals[i], 0.0) } else { linalg::ZERO })
    }

    #[test]
    fn e_factor_limits() {
        assert_eq!(e_factor(C64::new(1.3, 0.0)), 1.0);
        let t = C64::new(0.0, 1e-12);
        assert!((e_factor(t) - 1.0).abs() < 1e-11);
        let t = C64::new(0.0, 0.5);
        let exact = (((-1.0f64).exp() - 1.0) / -1.0).powf(-0.5);
        assert!((e_factor(t) - exact).abs() < 1e-14);
    }

    #[test]
    fn series_periodic_eval() {
        let b = CMat::from_fn(2, 2, |i, j| C64::new(i as f64 + 0.5, j as f64 - 0.25));
        let s = FourierMatrixSeries::from_modes(2, [(0, diag(&[1.0, 4.0])), (1, b.clone()), (-2, b)]).unwrap();
        assert_eq!(s.eval(0.375), s.eval(1.375));
        assert_eq!(s.eval(0.375), s.eval(-2.625));
        let d = &s.eval(0.3) - &s.eval(1.3);
        assert!(linalg::fro(&d) < 1e-13);
    }

    #[test]
    fn duplicate_mode_rejected() {
        let r = FourierMatrixSeries::from_modes(1, [(1, diag(&[1.0])), (1, diag(&[2.0]))]);
        assert!(matches!(r, Err(Error::MalformedSpec(_))));
    }
}
