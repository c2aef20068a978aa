//! δ-limits of grouped integrals around a singular quasimomentum.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss, gauss_legendre};

/// Integrand split into terms, each sampled on a fixed set of points.
pub trait TermSource: Sync {
    /// Samples per term.
    fn len(&self) -> usize;
    fn terms(&self, t: f64) -> Result<Vec<Vec<C64>>>;
}

/// Excision radii `ε/2^i`, `i = 1..=stages`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaSchedule {
    pub stages: usize,
    /// Gauss–Legendre nodes per side of each annulus.
    pub order: usize,
    /// Cauchy tolerance relative to `max(1, ‖value‖∞)`.
    pub pv_tol: f64,
}

impl Default for DeltaSchedule {
    fn default() -> Self {
        Self { stages: 8, order: 16, pv_tol: 1e-6 }
    }
}

impl DeltaSchedule {
    pub fn deltas(&self, epsilon: f64) -> Vec<f64> {
        (1..=self.stages).map(|i| epsilon * 0.5f64.powi(i as i32)).collect()
    }

    /// One more halving stage.
    pub fn refined(&self) -> Self {
        Self { stages: self.stages + 1, ..*self }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketValue {
    pub value: Vec<C64>,
    /// `∫_{δ_i<|t−t_j|≤ε}` per stage.
    pub stages: Vec<Vec<C64>>,
    /// Three-stage Richardson values, one per stage from the third on.
    pub extrapolated: Vec<Vec<C64>>,
    /// `‖R_N − R_{N−1}‖∞` of the last two extrapolated values.
    pub spread: f64,
}

fn sup(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn axpy(acc: &mut [C64], w: f64, x: &[C64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += b * w);
}

/// Evaluates `Σ_{k∈group}` of the source terms at every node (in parallel)
/// and reduces with the weights in node order.
fn weighted_sums(source: &dyn TermSource, group: &[usize], nodes: &[(f64, f64)]) -> Result<Vec<Vec<C64>>> {
    let vals: Vec<Vec<Vec<C64>>> = nodes.par_iter().map(|&(t, _)| source.terms(t)).collect::<Result<_>>()?;
    let n = source.len();
    Ok(vals
        .iter()
        .zip(nodes)
        .map(|(terms, &(_, w))| {
            let mut s = vec![C64::new(0.0, 0.0); n];
            for &g in group {
                axpy(&mut s, w, &terms[g]);
            }
            s
        })
        .collect())
}

/// `lim_{δ→0} Σ_{k∈group} ∫_{δ<|t−t_j|≤ε}`, the summands combined at each
/// node before quadrature. Errors with `NotCauchy` when the extrapolated
/// stage values do not settle to `pv_tol`.
pub fn bracket_integral(source: &dyn TermSource, group: &[usize], t_j: f64, epsilon: f64, schedule: &DeltaSchedule) -> Result<BracketValue> {
    let v = bracket_stages(source, group, t_j, epsilon, schedule)?;
    let tol = schedule.pv_tol * sup(&v.value).max(1.0);
    if v.spread > tol || !v.spread.is_finite() {
        return Err(Error::NotCauchy { spread: v.spread, tol });
    }
    Ok(v)
}

/// [`bracket_integral`] without the Cauchy check.
pub fn bracket_stages(source: &dyn TermSource, group: &[usize], t_j: f64, epsilon: f64, schedule: &DeltaSchedule) -> Result<BracketValue> {
    if schedule.stages < 4 {
        return Err(Error::InvalidInput("δ-schedule needs at least four stages".into()));
    }
    let deltas = schedule.deltas(epsilon);
    let base = gauss_legendre(schedule.order);
    let mut nodes = Vec::with_capacity(2 * schedule.order * deltas.len());
    let mut outer = epsilon;
    for &d in &deltas {
        let (c, r) = (0.5 * (outer + d), 0.5 * (outer - d));
        for &(x, w) in &base {
            nodes.push((t_j + c + r * x, r * w));
            nodes.push((t_j - c - r * x, r * w));
        }
        outer = d;
    }
    let sums = weighted_sums(source, group, &nodes)?;
    let n = source.len();
    let per = 2 * schedule.order;
    let mut stages = Vec::with_capacity(deltas.len());
    let mut acc = vec![C64::new(0.0, 0.0); n];
    for chunk in sums.chunks(per) {
        for s in chunk {
            axpy(&mut acc, 1.0, s);
        }
        stages.push(acc.clone());
    }
    // Removes the O(δ) and O(δ²) remainders of an integrand bounded at t_j.
    let extrapolated: Vec<Vec<C64>> = (2..stages.len())
        .map(|i| (0..n).map(|q| (stages[i][q] * 8.0 - stages[i - 1][q] * 6.0 + stages[i - 2][q]) / 3.0).collect())
        .collect();
    let last = &extrapolated[extrapolated.len() - 1];
    let prev = &extrapolated[extrapolated.len() - 2];
    let spread = last.iter().zip(prev).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
    Ok(BracketValue { value: last.clone(), stages, extrapolated, spread })
}

/// `∫_{|t−t_j|≤ε}` of each listed term separately, as an improper integral
/// under `t = t_j ± ε s²`, which absorbs `|t−t_j|^{-1/2}` endpoint behaviour.
pub fn improper_term_integrals(source: &dyn TermSource, terms: &[usize], t_j: f64, epsilon: f64, panels: usize, order: usize) -> Result<Vec<Vec<C64>>> {
    let rule = composite_gauss(0.0, 1.0, panels, order);
    let mut nodes = Vec::with_capacity(2 * rule.len());
    for &(s, w) in &rule {
        let jac = 2.0 * epsilon * s * w;
        nodes.push((t_j + epsilon * s * s, jac));
        nodes.push((t_j - epsilon * s * s, jac));
    }
    let vals: Vec<Vec<Vec<C64>>> = nodes.par_iter().map(|&(t, _)| source.terms(t)).collect::<Result<_>>()?;
    let n = source.len();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; terms.len()];
    for (v, &(_, w)) in vals.iter().zip(&nodes) {
        for (o, &k) in out.iter_mut().zip(terms) {
            axpy(o, w, &v[k]);
        }
    }
    Ok(out)
}

/// Two terms `±c|t−t_j|^{-γ} u + smooth_k(t)` on `n` samples: each term is
/// non-integrable for `γ ≥ 1`, their sum is smooth. The smooth parts are
/// `cos(t + q)` and `sin(2t − q)` at sample `q`.
pub struct SyntheticPair {
    pub t_j: f64,
    pub c: f64,
    pub gamma: f64,
    pub n: usize,
}

impl SyntheticPair {
    /// Exact `∫_{t_j−ε}^{t_j+ε}` of the sum of both terms.
    pub fn grouped_exact(&self, epsilon: f64) -> Vec<C64> {
        let (a, b) = (self.t_j - epsilon, self.t_j + epsilon);
        (0..self.n)
            .map(|q| {
                let q = q as f64;
                C64::new((b + q).sin() - (a + q).sin() - ((2.0 * b - q).cos() - (2.0 * a - q).cos()) / 2.0, 0.0)
            })
            .collect()
    }
}

impl TermSource for SyntheticPair {
    fn len(&self) -> usize {
        self.n
    }
    fn terms(&self, t: f64) -> Result<Vec<Vec<C64>>> {
        let s = self.c * (t - self.t_j).abs().powf(-self.gamma);
        let a = (0..self.n).map(|q| C64::new(s + (t + q as f64).cos(), 0.0)).collect();
        let b = (0..self.n).map(|q| C64::new(-s + (2.0 * t - q as f64).sin(), 0.0)).collect();
        Ok(vec![a, b])
    }
}
