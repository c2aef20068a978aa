//! Fiber spectra of `L_t` by Fourier–Galerkin truncation.
//!
//! The basis is `e_s e^{i(2πp+t)x}` for `p = -K..=K`, `s = 0..m`, flattened
//! as `(p + K)·m + s`. Coefficient vectors pair with the dual basis
//! `e_s e^{i(2πp+t̄)x}`, so `Σ conj(x_i) ψ_i` is the exact `L²(0,1)` pairing
//! of a left and a right eigenfunction for every complex `t`.

mod asymptotics;
mod bands;
mod census;
pub mod monodromy;

pub use asymptotics::{asymptotic_residuals, linear_fit, loglog_slope, AsymptoticReport, ResidualEntry, ResidualOptions};
pub use bands::{track_bands, BandTable, TrackOptions};
pub use census::{disk_census, CensusFamily, CensusReport, DiskCount};
pub use monodromy::{characteristic_determinant, refine_eigenvalue, DeltaJet, Monodromy};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, I, ZERO};
use crate::operator::{unperturbed_eigenvalue, OperatorSpec};

pub const DEFAULT_K: usize = 24;

/// Band label in the spirit of the asymptotic/small-index split: pairs
/// inside a localization disk of radius `|k|^{n-1}` with `|k| ≥ N0` carry
/// `(k, j)`, the rest a running index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Small { index: usize },
    Asymptotic { k: i64, j: usize },
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Small { index } => write!(f, "s{index}"),
            Label::Asymptotic { k, j } => write!(f, "a{k}:{j}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlochPair {
    pub label: Label,
    /// Nearest unperturbed branch `(k, j)` from a global assignment against
    /// `μ_{k,j}(t)`; defined for every pair.
    pub mode: (i64, usize),
    pub lambda: C64,
    /// Right eigenvector, unit norm, largest component real positive.
    pub psi: Vec<C64>,
    /// Left eigenvector with `(x_left, psi) = 1`; unit norm when defective.
    pub x_left: Vec<C64>,
    /// `(ψ*, ψ)` with `ψ* = x_left/‖x_left‖`; real positive unless defective.
    pub alpha: C64,
    pub defective: bool,
}

impl BlochPair {
    /// `Σ conj(x_left) · g`: the expansion coefficient of `g` along `psi`.
    pub fn coefficient(&self, g: &[C64]) -> C64 {
        linalg::inner(&self.x_left, g)
    }
}

#[derive(Clone, Debug)]
pub struct BlochSpectrum {
    pub t: C64,
    /// Operator order.
    pub n: usize,
    pub k_trunc: usize,
    pub m: usize,
    /// Sorted by `(Re λ, Im λ)`.
    pub pairs: Vec<BlochPair>,
}

impl BlochSpectrum {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    /// Worst `|(x_i, ψ_j)|` for `i ≠ j` and `|(x_i, ψ_i) − 1|` over non-defective pairs.
    pub fn biorthogonality_defect(&self) -> (f64, f64) {
        let mut off: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for (i, a) in self.pairs.iter().enumerate() {
            if a.defective {
                continue;
            }
            for (j, b) in self.pairs.iter().enumerate() {
                let g = linalg::inner(&a.x_left, &b.psi);
                if i == j {
                    diag = diag.max((g - 1.0).norm());
                } else if !b.defective {
                    off = off.max(g.norm());
                }
            }
        }
        (off, diag)
    }

    /// Evaluates a coefficient vector as a function at `x`. Works for any real
    /// `x`; the quasi-periodic extension is built into the exponentials.
    pub fn eval(&self, coeffs: &[C64], x: f64) -> Vec<C64> {
        eval_bloch_series(coeffs, self.t, self.k_trunc, self.m, x)
    }
}

/// `Σ_p Σ_s c_{p,s} e_s e^{i(2πp+t)x}`.
pub fn eval_bloch_series(coeffs: &[C64], t: C64, k: usize, m: usize, x: f64) -> Vec<C64> {
    let mut out = vec![ZERO; m];
    let base = (I * t * x).exp();
    let step = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * x);
    let mut ph = base * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 * x);
    for p in 0..(2 * k + 1) {
        for s in 0..m {
            out[s] += coeffs[p * m + s] * ph;
        }
        ph *= step;
    }
    out
}

pub fn basis_index(k_trunc: usize, m: usize, p: i64, s: usize) -> usize {
    (p + k_trunc as i64) as usize * m + s
}

/// Matrix of `L_t` in the exponential basis. Exact: no quadrature.
pub fn assemble_bloch_matrix(spec: &OperatorSpec, t: C64, k_trunc: usize) -> Result<CMat> {
    let bw = spec.max_bandwidth();
    if k_trunc < bw {
        return Err(Error::TruncationTooSmall { k: k_trunc, bandwidth: bw });
    }
    let n = spec.order();
    let m = spec.dim();
    let kk = k_trunc as i64;
    let dim = m * (2 * k_trunc + 1);
    let mut a = CMat::zeros(dim, dim);
    let two_pi = 2.0 * std::f64::consts::PI;
    for p in -kk..=kk {
        let z = I * (two_pi * p as f64 + t);
        let zn = z.powu(n as u32);
        for s in 0..m {
            let d = basis_index(k_trunc, m, p, s);
            a[(d, d)] += zn;
        }
        for (&nu, series) in spec.coeffs() {
            let w = z.powu((n - nu) as u32);
            for (q, c) in series.nonzero_modes() {
                let row_mode = p + q;
                if row_mode.abs() > kk {
                    continue;
                }
                for r in 0..m {
                    for s in 0..m {
                        let v = c[(r, s)];
                        if v != ZERO {
                            a[(basis_index(k_trunc, m, row_mode, r), basis_index(k_trunc, m, p, s))] += w * v;
                        }
                    }
                }
            }
        }
    }
    Ok(a)
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// `|α|` at or below this marks a pair defective.
    pub defect_tol: f64,
    /// Relative eigenvalue distance under which pairs are re-biorthogonalized together.
    pub cluster_tol: f64,
    /// Smallest `|k|` eligible for an asymptotic label; `None` uses 1.
    pub n0: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { defect_tol: 1e-8, cluster_tol: 1e-8, n0: None }
    }
}

/// Eigenvalues of the mean matrix in canonical order, without the
/// simplicity check (labels only need a reference point).
pub(crate) fn mean_eigenvalues(spec: &OperatorSpec) -> Result<Vec<C64>> {
    let e = linalg::eig(spec.mean_matrix().as_ref())?;
    let mut mu = e.values;
    mu.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(mu)
}

pub fn solve_bloch(spec: &OperatorSpec, t: C64, k_trunc: usize) -> Result<BlochSpectrum> {
    solve_bloch_with(spec, t, k_trunc, &SolveOptions::default())
}

pub fn solve_bloch_with(spec: &OperatorSpec, t: C64, k_trunc: usize, opts: &SolveOptions) -> Result<BlochSpectrum> {
    let a = assemble_bloch_matrix(spec, t, k_trunc)?;
    let dim = a.nrows();
    let m = spec.dim();
    let e = linalg::eig_blocks(a.as_ref())?;

    let mut psi: Vec<Vec<C64>> = Vec::with_capacity(dim);
    let mut left: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut v = linalg::col(&e.right, i);
        let nv = linalg::norm(&v);
        let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let ph = big.conj() / big.norm();
        v.iter_mut().for_each(|x| *x = *x * ph / nv);
        psi.push(v);
        let mut l = linalg::col(&e.left, i);
        let nl = linalg::norm(&l);
        l.iter_mut().for_each(|x| *x /= nl);
        left.push(l);
    }

    // Group numerically coincident eigenvalues (union-find on sorted values).
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| e.values[i].re.total_cmp(&e.values[j].re));
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let n = p[c];
            p[c] = r;
            c = n;
        }
        r
    }
    for a_i in 0..dim {
        let i = order[a_i];
        let tol = opts.cluster_tol * (1.0 + e.values[i].norm());
        for &j in order.iter().skip(a_i + 1) {
            if e.values[j].re - e.values[i].re > tol {
                break;
            }
            if (e.values[i] - e.values[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..dim {
        let r = find(&mut parent, i);
        clusters.entry(r).or_default().push(i);
    }

    let mut x_left = vec![Vec::new(); dim];
    let mut alpha = vec![ZERO; dim];
    let mut defective = vec![false; dim];
    for members in clusters.values() {
        let s = members.len();
        let g = CMat::from_fn(s, s, |a, b| linalg::inner(&left[members[a]], &psi[members[b]]));
        let inv = if s == 1 {
            if g[(0, 0)].norm() > opts.defect_tol {
                let mut iv = CMat::zeros(1, 1);
                iv[(0, 0)] = 1.0 / g[(0, 0)];
                Some(iv)
            } else {
                None
            }
        } else {
            linalg::inverse(&g)
        };
        match inv {
            Some(inv) => {
                // X_S = L_S (G^{-1})^H gives X_S^H Ψ_S = I.
                for (a, &ia) in members.iter().enumerate() {
                    let mut x = vec![ZERO; dim];
                    for (b, &ib) in members.iter().enumerate() {
                        let c = inv[(a, b)].conj();
                        for r in 0..dim {
                            x[r] += left[ib][r] * c;
                        }
                    }
                    let nx = linalg::norm(&x);
                    let al = 1.0 / nx;
                    if al <= opts.defect_tol || !al.is_finite() {
                        x_left[ia] = left[ia].clone();
                        alpha[ia] = g[(a, a)];
                        defective[ia] = true;
                    } else {
                        x_left[ia] = x;
                        alpha[ia] = C64::new(al, 0.0);
                    }
                }
            }
            None => {
                for (a, &ia) in members.iter().enumerate() {
                    x_left[ia] = left[ia].clone();
                    alpha[ia] = g[(a, a)];
                    defective[ia] = true;
                }
            }
        }
    }

    let modes = assign_modes(spec, &e.values, t, k_trunc)?;
    let n0 = opts.n0.unwrap_or(1) as i64;
    let n = spec.order();

    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (e.values[i], e.values[j]);
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
    });
    let mut small = 0usize;
    let mut pairs = Vec::with_capacity(dim);
    for i in idx {
        let (k, j) = modes[i];
        let centre = (I * (2.0 * std::f64::consts::PI * k as f64 + t)).powu(n as u32);
        let inside = k.abs() >= n0 && (e.values[i] - centre).norm() < (k.abs() as f64).powi(n as i32 - 1);
        let label = if inside {
            Label::Asymptotic { k, j }
        } else {
            small += 1;
            Label::Small { index: small - 1 }
        };
        pairs.push(BlochPair {
            label,
            mode: (k, j),
            lambda: e.values[i],
            psi: std::mem::take(&mut psi[i]),
            x_left: std::mem::take(&mut x_left[i]),
            alpha: alpha[i],
            defective: defective[i],
        });
    }
    Ok(BlochSpectrum { t, n, k_trunc, m, pairs })
}

/// Optimal assignment of eigenvalues to unperturbed branches `(k, j)`,
/// `|k| ≤ K`.
fn assign_modes(spec: &OperatorSpec, values: &[C64], t: C64, k_trunc: usize) -> Result<Vec<(i64, usize)>> {
    let mu = mean_eigenvalues(spec)?;
    let m = spec.dim();
    let n = spec.order();
    let kk = k_trunc as i64;
    let targets: Vec<(i64, usize, C64)> = (-kk..=kk)
        .flat_map(|k| mu.iter().enumerate().map(move |(j, &mj)| (k, j, mj)))
        .map(|(k, j, mj)| (k, j, unperturbed_eigenvalue(n, mj, k, t)))
        .collect();
    debug_assert_eq!(targets.len(), values.len());
    let _ = m;
    let cost: Vec<Vec<f64>> = values.iter().map(|v| targets.iter().map(|(_, _, c)| (v - c).norm()).collect()).collect();
    let a = assignment::solve(&cost);
    Ok(a.into_iter().map(|c| (targets[c].0, targets[c].1)).collect())
}
