//! Reconstruction of `f` from its bracketed Bloch expansion.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::bracket::{bracket_integral, improper_term_integrals, BracketValue, DeltaSchedule, TermSource};
use super::coefficients::coefficients_of;
use super::plan::{ExpansionPlan, QuadratureRule, SqWindow, WindowKind};
use crate::bloch::{eval_bloch_series, solve_bloch_with, BlochSpectrum, SolveOptions};
use crate::error::{Error, Result};
use crate::gelfand::CellFunction;
use crate::operator::OperatorSpec;
use crate::quadrature::{composite_gauss, composite_gauss_width};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug)]
pub struct ExpansionOptions {
    pub k_trunc: usize,
    pub solve: SolveOptions,
    pub schedule: DeltaSchedule,
    /// Panels of the graded rule for term-by-term integrals.
    pub graded_panels: usize,
    /// Gauss–Legendre nodes per unit cell for the `L²(−p, p)` norms.
    pub cell_nodes: usize,
    /// Uniform plotting grid on `(−p, p)`.
    pub plot_points: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self { k_trunc: 16, solve: SolveOptions::default(), schedule: DeltaSchedule::default(), graded_panels: 4, cell_nodes: 48, plot_points: 201 }
    }
}

/// Solves fibers and samples expansion terms at a fixed set of `x`.
pub struct FieldSampler<'a> {
    pub spec: &'a OperatorSpec,
    pub f: &'a CellFunction,
    pub k_trunc: usize,
    pub xs: Vec<f64>,
    pub solve: SolveOptions,
    solves: AtomicUsize,
}

impl<'a> FieldSampler<'a> {
    pub fn new(spec: &'a OperatorSpec, f: &'a CellFunction, k_trunc: usize, xs: Vec<f64>, solve: SolveOptions) -> Result<Self> {
        if f.m != spec.dim() {
            return Err(Error::InvalidInput(format!("function has {} components, operator {}", f.m, spec.dim())));
        }
        Ok(Self { spec, f, k_trunc, xs, solve, solves: AtomicUsize::new(0) })
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.spec.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Fiber solves performed so far.
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Spectrum at `t` with the Galerkin coordinates of `f_t`.
    pub fn fiber(&self, t: f64) -> Result<(BlochSpectrum, Vec<C64>)> {
        self.solves.fetch_add(1, Ordering::Relaxed);
        let tc = C64::new(t, 0.0);
        let s = solve_bloch_with(self.spec, tc, self.k_trunc, &self.solve)?;
        let g = self.f.bloch_coefficients(tc, self.k_trunc);
        Ok((s, g))
    }

    /// Samples `Σ_p c_p e^{i(2πp+t)x}` on `xs`, flattened as `ix·m + s`.
    pub fn field(&self, t: f64, coords: &[C64]) -> Vec<C64> {
        let m = self.spec.dim();
        let tc = C64::new(t, 0.0);
        self.xs.iter().flat_map(|&x| eval_bloch_series(coords, tc, self.k_trunc, m, x)).collect()
    }

    /// `Σ_k a_k ψ_k` over the pairs selected by `keep`, in Galerkin coordinates.
    fn combine(spectrum: &BlochSpectrum, g: &[C64], keep: impl Fn(usize) -> bool) -> Vec<C64> {
        let mut out = vec![ZERO; g.len()];
        for (i, c) in coefficients_of(g, spectrum).iter().enumerate() {
            if keep(i) {
                let a = c.coefficient.value();
                out.iter_mut().zip(&spectrum.pairs[i].psi).for_each(|(o, p)| *o += a * p);
            }
        }
        out
    }

    /// All pairs at `t`.
    pub fn full(&self, t: f64) -> Result<Vec<C64>> {
        let (s, g) = self.fiber(t)?;
        Ok(self.field(t, &Self::combine(&s, &g, |_| true)))
    }

    fn integrate(&self, nodes: &[(f64, f64)]) -> Result<Vec<C64>> {
        let vals: Vec<Vec<C64>> = nodes.par_iter().map(|&(t, _)| self.full(t)).collect::<Result<_>>()?;
        let mut acc = vec![ZERO; self.len()];
        for (v, &(_, w)) in vals.iter().zip(nodes) {
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b * w);
        }
        Ok(acc)
    }
}

/// `∫_a^b Σ_k a_k(t) Ψ_{k,t} dt` with the plan's composite rule.
pub fn regular_integral(sampler: &FieldSampler, a: f64, b: f64, rule: &QuadratureRule) -> Result<Vec<C64>> {
    sampler.integrate(&composite_gauss_width(a, b, rule.max_panel_width, rule.order))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairedWindowResult {
    pub kind: WindowKind,
    pub total: Vec<C64>,
    /// `(key, ‖·‖∞)` per bracket.
    pub groups: Vec<(i64, f64)>,
}

/// Paired brackets over the window at `0` or `π`: for each key in
/// `k_range` (all keys when `None`), the `2m` terms of the key are summed at
/// each node and integrated together.
pub fn paired_window_integral(sampler: &FieldSampler, kind: WindowKind, plan: &ExpansionPlan, k_range: Option<(i64, i64)>) -> Result<PairedWindowResult> {
    let (a, b) = plan.window(kind);
    let rule = &plan.quadrature;
    let nodes = composite_gauss_width(a, b, rule.max_panel_width, rule.order);
    let keep = |key: i64| k_range.map_or(true, |(lo, hi)| key >= lo && key <= hi);
    let per_node: Vec<Vec<(i64, Vec<C64>)>> = nodes
        .par_iter()
        .map(|&(t, _)| {
            let (s, g) = sampler.fiber(t)?;
            let mut keys: Vec<i64> = s.pairs.iter().map(|p| kind.group_key(p.mode.0)).filter(|k| keep(*k)).collect();
            keys.sort_unstable();
            keys.dedup();
            Ok(keys
                .into_iter()
                .map(|key| {
                    let c = FieldSampler::combine(&s, &g, |i| kind.group_key(s.pairs[i].mode.0) == key);
                    (key, sampler.field(t, &c))
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut groups: std::collections::BTreeMap<i64, Vec<C64>> = Default::default();
    for (vals, &(_, w)) in per_node.iter().zip(&nodes) {
        for (key, v) in vals {
            let acc = groups.entry(*key).or_insert_with(|| vec![ZERO; sampler.len()]);
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b * w);
        }
    }
    let mut total = vec![ZERO; sampler.len()];
    for v in groups.values() {
        total.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
    let groups = groups.iter().map(|(k, v)| (*k, v.iter().fold(0.0f64, |a, z| a.max(z.norm())))).collect();
    Ok(PairedWindowResult { kind, total, groups })
}

/// Terms around one singular quasimomentum: the `p` eigenvalues nearest `Λ`
/// ranked along their direction of separation (fixed per side of `t_j`),
/// then everything else as one smooth term.
pub struct ClusterTerms<'s, 'a> {
    pub sampler: &'s FieldSampler<'a>,
    pub t_j: f64,
    pub lambda: C64,
    pub p: usize,
    axes: [C64; 2],
}

impl<'s, 'a> ClusterTerms<'s, 'a> {
    pub fn new(sampler: &'s FieldSampler<'a>, t_j: f64, lambda: C64, p: usize, epsilon: f64) -> Result<Self> {
        let mut axes = [C64::new(1.0, 0.0); 2];
        for (i, t) in [t_j + epsilon, t_j - epsilon].into_iter().enumerate() {
            let (s, _) = sampler.fiber(t)?;
            let members = Self::nearest(&s, lambda, p);
            let mut best = 0.0;
            for &a in &members {
                for &b in &members {
                    let d = s.pairs[a].lambda - s.pairs[b].lambda;
                    if d.norm() > best {
                        best = d.norm();
                        axes[i] = d / d.norm();
                    }
                }
            }
        }
        Ok(Self { sampler, t_j, lambda, p, axes })
    }

    fn nearest(s: &BlochSpectrum, lambda: C64, p: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..s.pairs.len()).collect();
        idx.sort_by(|&a, &b| (s.pairs[a].lambda - lambda).norm().total_cmp(&(s.pairs[b].lambda - lambda).norm()));
        idx.truncate(p);
        idx
    }
}

impl TermSource for ClusterTerms<'_, '_> {
    fn len(&self) -> usize {
        self.sampler.len()
    }

    fn terms(&self, t: f64) -> Result<Vec<Vec<C64>>> {
        let (s, g) = self.sampler.fiber(t)?;
        let ax = if t >= self.t_j { self.axes[0] } else { self.axes[1] };
        let mut members = Self::nearest(&s, self.lambda, self.p);
        members.sort_by(|&a, &b| {
            let pa = (ax.conj() * (s.pairs[a].lambda - self.lambda)).re;
            let pb = (ax.conj() * (s.pairs[b].lambda - self.lambda)).re;
            pa.total_cmp(&pb)
        });
        let mut out: Vec<Vec<C64>> = members.iter().map(|&i| self.sampler.field(t, &FieldSampler::combine(&s, &g, |q| q == i))).collect();
        out.push(self.sampler.field(t, &FieldSampler::combine(&s, &g, |q| !members.contains(&q))));
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SqWindowResult {
    pub t_j: f64,
    pub bracket: Option<BracketValue>,
    /// Term-by-term integrals of the integrable ranks.
    pub integrable_terms: Vec<Vec<C64>>,
    pub rest: Vec<C64>,
    pub total: Vec<C64>,
}

/// `∫_{|t−t_j|≤ε}`: δ-limit bracket over the non-integrable ranks,
/// improper integrals for the integrable ranks and the remaining spectrum.
pub fn sq_window_integral(sampler: &FieldSampler, w: &SqWindow, opts: &ExpansionOptions) -> Result<SqWindowResult> {
    let src = ClusterTerms::new(sampler, w.t_j, w.lambda, w.multiplicity, w.epsilon)?;
    let order = opts.schedule.order;
    let bracket = if w.bracket_ranks.is_empty() { None } else { Some(bracket_integral(&src, &w.bracket_ranks, w.t_j, w.epsilon, &opts.schedule)?) };
    let mut singles: Vec<usize> = w.integrable_ranks.clone();
    singles.push(w.multiplicity);
    let mut vals = improper_term_integrals(&src, &singles, w.t_j, w.epsilon, opts.graded_panels, order)?;
    let rest = vals.pop().unwrap_or_else(|| vec![ZERO; sampler.len()]);
    let mut total = rest.clone();
    for v in vals.iter().chain(bracket.iter().map(|b| &b.value)) {
        total.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
    Ok(SqWindowResult { t_j: w.t_j, bracket, integrable_terms: vals, rest, total })
}

#[derive(Clone, Debug, Serialize)]
pub struct Contribution {
    pub name: String,
    /// `L²(−p, p)` norm of this component's share of `f̂`.
    pub l2_norm: f64,
    /// Samples on the plotting grid, flattened as `ix·m + s`.
    pub values: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Truncation {
    pub k_trunc: usize,
    pub k_max: usize,
    pub nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    pub p: f64,
    pub m: usize,
    pub x: Vec<f64>,
    pub f: Vec<C64>,
    pub f_hat: Vec<C64>,
    pub contributions: Vec<Contribution>,
    pub norm_f: f64,
    pub error_l2: f64,
    pub relative_error: f64,
    /// `‖f − (1/2π)·(regular intervals only)‖`.
    pub regular_only_error: f64,
    pub truncation: Truncation,
}

/// Gauss–Legendre rule on `(−p, p)` with breakpoints at the integers.
fn x_rule(p: f64, per_cell: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = -p;
    while a < p {
        let b = (a.floor() + 1.0).min(p);
        if b > a {
            out.extend(composite_gauss(a, b, 1, per_cell));
        }
        a = b;
    }
    out
}

fn l2(v: &[C64], rule: &[(f64, f64)], m: usize) -> f64 {
    rule.iter().enumerate().map(|(i, (_, w))| w * v[i * m..(i + 1) * m].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
}

/// `f̂ = (1/2π)·[regular intervals + excised windows + paired windows]` on
/// `(−p, p)`, with the `L²` error against `f`.
pub fn reconstruct(spec: &OperatorSpec, f: &CellFunction, plan: &ExpansionPlan, p: f64, opts: &ExpansionOptions) -> Result<ReconstructionResult> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("reconstruction half-width p = {p} must be positive")));
    }
    let m = spec.dim();
    let rule = x_rule(p, opts.cell_nodes);
    let nq = rule.len();
    let plot: Vec<f64> = (0..opts.plot_points).map(|i| -p + 2.0 * p * i as f64 / (opts.plot_points.max(2) - 1) as f64).collect();
    let xs: Vec<f64> = rule.iter().map(|r| r.0).chain(plot.iter().copied()).collect();
    let sampler = FieldSampler::new(spec, f, opts.k_trunc, xs, opts.solve)?;

    let mut parts: Vec<(String, Vec<C64>)> = Vec::new();
    for &(a, b) in &plan.regular_intervals {
        parts.push((format!("regular [{a:.6}, {b:.6}]"), regular_integral(&sampler, a, b, &plan.quadrature)?));
    }
    let n_regular = parts.len();
    for w in &plan.sq_windows {
        parts.push((format!("sq t={:.6}", w.t_j), sq_window_integral(&sampler, w, opts)?.total));
    }
    for kind in [WindowKind::Zero, WindowKind::Pi] {
        let name = match kind {
            WindowKind::Zero => "window 0",
            WindowKind::Pi => "window pi",
        };
        parts.push((name.to_string(), paired_window_integral(&sampler, kind, plan, None)?.total));
    }
    let scale = 1.0 / (2.0 * PI);
    for (_, v) in parts.iter_mut() {
        v.iter_mut().for_each(|z| *z *= scale);
    }

    let f_all: Vec<C64> = sampler.xs.iter().flat_map(|&x| f.eval(x)).collect();
    let sum_parts = |range: std::ops::Range<usize>| {
        let mut acc = vec![ZERO; sampler.len()];
        for (_, v) in &parts[range] {
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        acc
    };
    let f_hat_all = sum_parts(0..parts.len());
    let regular_all = sum_parts(0..n_regular);
    let diff = |g: &[C64]| -> Vec<C64> { f_all[..nq * m].iter().zip(&g[..nq * m]).map(|(a, b)| a - b).collect() };
    let norm_f = l2(&f_all[..nq * m], &rule, m);
    let error_l2 = l2(&diff(&f_hat_all), &rule, m);
    let regular_only_error = l2(&diff(&regular_all), &rule, m);

    let contributions = parts
        .into_iter()
        .map(|(name, v)| Contribution { name, l2_norm: l2(&v[..nq * m], &rule, m), values: v[nq * m..].to_vec() })
        .collect();
    Ok(ReconstructionResult {
        p,
        m,
        x: plot,
        f: f_all[nq * m..].to_vec(),
        f_hat: f_hat_all[nq * m..].to_vec(),
        contributions,
        norm_f,
        error_l2,
        relative_error: if norm_f > 0.0 { error_l2 / norm_f } else { error_l2 },
        regular_only_error,
        truncation: Truncation { k_trunc: opts.k_trunc, k_max: opts.k_trunc, nodes: sampler.solves() },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproximationCheck {
    pub h: f64,
    /// `max |f_t(x)|` over the cell and the period.
    pub m_sup: f64,
    pub bound: f64,
    /// Error of the regular-interval partial expansion.
    pub measured: f64,
    /// Error of the full expansion at the same truncation.
    pub slack: f64,
    pub holds: bool,
}

/// Compares the regular-interval partial expansion with the `6Mh` bound.
/// The full expansion's own error is the slack for truncation and quadrature.
pub fn approximation_check(spec: &OperatorSpec, f: &CellFunction, plan: &ExpansionPlan, p: f64, opts: &ExpansionOptions) -> Result<ApproximationCheck> {
    Ok(approximation_check_from(&reconstruct(spec, f, plan, p, opts)?, f, plan))
}

/// [`approximation_check`] from an existing reconstruction.
pub fn approximation_check_from(r: &ReconstructionResult, f: &CellFunction, plan: &ExpansionPlan) -> ApproximationCheck {
    let m_sup = f.bloch_sup(64, 64);
    let bound = 6.0 * m_sup * plan.h;
    let slack = r.error_l2 + 1e-9;
    ApproximationCheck { h: plan.h, m_sup, bound, measured: r.regular_only_error, slack, holds: r.regular_only_error <= bound + slack }
}
