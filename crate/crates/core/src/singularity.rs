//! Multiple Bloch eigenvalues and their classification.
//!
//! Candidates come from near-collisions of tracked bands, are polished by
//! Newton's method on the characteristic determinant, and are classified by
//! the exponent `γ` of `|α_k(t)| ~ c|t − t_j|^γ`: `1/α` is integrable for
//! `γ < 1` and not for `γ > 1`.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::linear_fit;
use crate::bloch::{solve_bloch, BandTable, Label, Monodromy};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::operator::OperatorSpec;

#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyCandidate {
    pub t_star: f64,
    pub lambda_star: C64,
    /// Smallest separation seen along the interval.
    pub gap: f64,
    pub source_labels: Vec<Label>,
    /// Band indices in the table.
    pub bands: Vec<usize>,
    /// Grid interval `[grid[i], grid[i+1]]`.
    pub interval: usize,
}

/// Grid intervals on which two tracked bands come within `gap_tol`
/// (absolute). The linear interpolant of `λ_a − λ_b` is minimized on each
/// interval; `t_star` is its minimizer.
pub fn find_degeneracies(table: &BandTable, gap_tol: f64) -> Vec<DegeneracyCandidate> {
    let nb = table.band_count();
    let mut raw: Vec<DegeneracyCandidate> = Vec::new();
    for i in 0..table.grid.len().saturating_sub(1) {
        let l0: Vec<C64> = (0..nb).map(|b| table.pair(b, i).lambda).collect();
        let l1: Vec<C64> = (0..nb).map(|b| table.pair(b, i + 1).lambda).collect();
        for a in 0..nb {
            for b in a + 1..nb {
                let d0 = l0[a] - l0[b];
                let d1 = l1[a] - l1[b];
                let dd = d1 - d0;
                if d0.norm().min(d1.norm()) > dd.norm() + gap_tol {
                    continue;
                }
                let s = if dd.norm_sqr() > 0.0 { (-(d0.conj() * dd).re / dd.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
                let gap = (d0 + dd * s).norm();
                if gap <= gap_tol {
                    let la = l0[a] + (l1[a] - l0[a]) * s;
                    let lb = l0[b] + (l1[b] - l0[b]) * s;
                    raw.push(DegeneracyCandidate {
                        t_star: table.grid[i] + s * (table.grid[i + 1] - table.grid[i]),
                        lambda_star: (la + lb) / 2.0,
                        gap,
                        source_labels: vec![table.pair(a, i).label, table.pair(b, i).label],
                        bands: vec![a, b],
                        interval: i,
                    });
                }
            }
        }
    }
    // Runs of adjacent intervals for the same band pair collapse onto their
    // smallest gap.
    let mut chains: Vec<DegeneracyCandidate> = Vec::new();
    let mut open: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for c in raw {
        let key = (c.bands[0], c.bands[1]);
        match open.get_mut(&key) {
            Some((idx, last)) if *last + 1 >= c.interval => {
                *last = c.interval;
                let o = &mut chains[*idx];
                if c.gap < o.gap {
                    *o = c;
                }
            }
            _ => {
                open.insert(key, (chains.len(), c.interval));
                chains.push(c);
            }
        }
    }
    // Pairs whose minima coincide belong to one cluster.
    chains.sort_by(|x, y| x.t_star.total_cmp(&y.t_star));
    let mut out: Vec<DegeneracyCandidate> = Vec::new();
    for c in chains {
        let near = |o: &DegeneracyCandidate| {
            o.interval.abs_diff(c.interval) <= 1 && (o.lambda_star - c.lambda_star).norm() <= 0.5 * gap_tol + 1e-9 * (1.0 + c.lambda_star.norm())
        };
        match out.iter_mut().rev().find(|o| near(o)) {
            Some(o) => {
                for (b, l) in c.bands.iter().zip(&c.source_labels) {
                    if !o.bands.contains(b) {
                        o.bands.push(*b);
                        o.source_labels.push(*l);
                    }
                }
                if c.gap < o.gap {
                    o.gap = c.gap;
                    o.t_star = c.t_star;
                    o.lambda_star = c.lambda_star;
                    o.interval = c.interval;
                }
            }
            None => out.push(c),
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    /// Truncation for the multiplicity count.
    pub k_trunc: usize,
    pub max_iter: usize,
    /// Relative radius (times `1 + |Λ|`) within which Galerkin eigenvalues
    /// count as members of the cluster.
    pub cluster_rel: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { k_trunc: crate::bloch::DEFAULT_K, max_iter: 60, cluster_rel: 1e-5 }
    }
}

/// Which system produced the refined point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RefineStage {
    /// `Δ = ∂Δ/∂λ = 0`; regular at branch points of square-root type.
    DoubleRoot,
    /// `∂Δ/∂λ = ∂Δ/∂t = 0`; regular at transversal (conical) crossings.
    Saddle,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinedDegeneracy {
    pub t_j: f64,
    pub lambda: C64,
    pub multiplicity: usize,
    pub delta: f64,
    pub d_lambda: f64,
    pub stage: RefineStage,
}

struct Jet2 {
    f: [C64; 2],
    jac: CMat,
    delta: C64,
    d_lambda: C64,
}

fn second_jet(spec: &OperatorSpec, lam: C64, t: C64, stage: RefineStage) -> Result<Jet2> {
    let hl = 1e-4 * (1.0 + lam.norm().powf(1.0 / spec.order() as f64));
    let ht = 1e-5;
    let mono = Monodromy::compute(spec, lam)?;
    let jp = Monodromy::compute(spec, lam + hl)?.jet(t);
    let jm = Monodromy::compute(spec, lam - hl)?.jet(t);
    let j0 = mono.jet(t);
    let jtp = mono.jet(t + ht);
    let jtm = mono.jet(t - ht);
    let d_ll = (jp.d_lambda - jm.d_lambda) / (2.0 * hl);
    let d_lt = (jtp.d_lambda - jtm.d_lambda) / (2.0 * ht);
    let mut jac = CMat::zeros(2, 2);
    let f = match stage {
        RefineStage::DoubleRoot => {
            jac[(0, 0)] = j0.d_lambda;
            jac[(0, 1)] = j0.d_t;
            jac[(1, 0)] = d_ll;
            jac[(1, 1)] = d_lt;
            [j0.delta, j0.d_lambda]
        }
        RefineStage::Saddle => {
            let d_tl = (jp.d_t - jm.d_t) / (2.0 * hl);
            let d_tt = (jtp.d_t - jtm.d_t) / (2.0 * ht);
            jac[(0, 0)] = d_ll;
            jac[(0, 1)] = d_lt;
            jac[(1, 0)] = d_tl;
            jac[(1, 1)] = d_tt;
            [j0.d_lambda, j0.d_t]
        }
    };
    Ok(Jet2 { f, jac, delta: j0.delta, d_lambda: j0.d_lambda })
}

fn residual(spec: &OperatorSpec, lam: C64, t: C64, stage: RefineStage) -> Result<f64> {
    let j = Monodromy::compute(spec, lam)?.jet(t);
    Ok(match stage {
        RefineStage::DoubleRoot => j.delta.norm_sqr() + j.d_lambda.norm_sqr(),
        RefineStage::Saddle => j.d_lambda.norm_sqr() + j.d_t.norm_sqr(),
    })
}

/// Damped Newton on the selected 2×2 system. Returns the point, its `Δ`,
/// `∂Δ/∂λ`, and whether the step size fell below tolerance.
fn newton2(spec: &OperatorSpec, mut lam: C64, mut t: C64, stage: RefineStage, max_iter: usize) -> Result<(C64, C64, C64, C64, bool)> {
    let mut last = None;
    for _ in 0..max_iter {
        let j = second_jet(spec, lam, t, stage)?;
        last = Some((j.delta, j.d_lambda));
        let Some(step) = linalg::solve(&j.jac, &[-j.f[0], -j.f[1]]) else {
            return Ok((lam, t, j.delta, j.d_lambda, false));
        };
        let (mut dl, mut dt) = (step[0], step[1]);
        let cap = 0.05;
        if dt.norm() > cap {
            let r = cap / dt.norm();
            dl *= r;
            dt *= r;
        }
        let r0 = j.f[0].norm_sqr() + j.f[1].norm_sqr();
        let mut scale = 1.0;
        for _ in 0..12 {
            let r1 = residual(spec, lam + dl * scale, t + dt * scale, stage)?;
            if r1 < r0 || scale < 1e-3 {
                break;
            }
            scale *= 0.5;
        }
        lam += dl * scale;
        t += dt * scale;
        if (dl * scale).norm() <= 1e-13 * (1.0 + lam.norm()) && (dt * scale).norm() <= 1e-13 {
            let jj = Monodromy::compute(spec, lam)?.jet(t);
            return Ok((lam, t, jj.delta, jj.d_lambda, true));
        }
    }
    let (d, dl) = last.unwrap_or_default();
    Ok((lam, t, d, dl, false))
}

/// Polishes a candidate into `(t_j, Λ, p)`.
///
/// Newton on `(Δ, ∂Δ/∂λ)` converges quadratically at square-root branch
/// points but only linearly at transversal crossings, where its Jacobian is
/// singular. A second Newton run on `(∂Δ/∂λ, ∂Δ/∂t)` from the first result
/// handles that case; it is accepted when it converges to a root of `Δ`
/// close to the first result (or the first run did not converge).
pub fn refine_degeneracy(spec: &OperatorSpec, cand: &DegeneracyCandidate, opts: &RefineOptions) -> Result<RefinedDegeneracy> {
    let (l1, t1, d1, dl1, ok1) = newton2(spec, cand.lambda_star, C64::new(cand.t_star, 0.0), RefineStage::DoubleRoot, opts.max_iter)?;
    let (l2, t2, d2, dl2, ok2) = newton2(spec, l1, t1, RefineStage::Saddle, opts.max_iter)?;
    let scale = 1.0 + l2.norm();
    let near = (t2 - t1).norm() <= 1e-6 && (l2 - l1).norm() <= 1e-6 * scale;
    let (lam, t, delta, dlam, stage) = if ok2 && d2.norm() <= 1e-9 * scale && (near || !ok1) {
        (l2, t2, d2, dl2, RefineStage::Saddle)
    } else if ok1 {
        (l1, t1, d1, dl1, RefineStage::DoubleRoot)
    } else {
        return Err(Error::NoConvergence(format!("degeneracy refinement from t = {} did not converge", cand.t_star)));
    };
    if t.im.abs() > 1e-8 {
        return Err(Error::DegeneracyOffAxis(t.im));
    }
    let multiplicity = multiplicity_at(spec, t.re, lam, opts.k_trunc, opts.cluster_rel)?;
    Ok(RefinedDegeneracy { t_j: t.re, lambda: lam, multiplicity, delta: delta.norm(), d_lambda: dlam.norm(), stage })
}

/// Counts Galerkin eigenvalues clustered at `Λ`, checking that the count is
/// the same for radius `r` and `r/2`, `r` half the distance to the nearest
/// non-member.
pub fn multiplicity_at(spec: &OperatorSpec, t: f64, lambda: C64, k_trunc: usize, cluster_rel: f64) -> Result<usize> {
    let s = solve_bloch(spec, C64::new(t, 0.0), k_trunc)?;
    let mut d: Vec<f64> = s.pairs.iter().map(|p| (p.lambda - lambda).norm()).collect();
    d.sort_by(f64::total_cmp);
    let rho = cluster_rel * (1.0 + lambda.norm());
    let p = d.iter().take_while(|&&x| x <= rho).count();
    let r = d.get(p).copied().unwrap_or(f64::INFINITY) / 2.0;
    let count = |rad: f64| d.iter().filter(|&&x| x < rad).count();
    let (cr, ch) = (count(r), count(r / 2.0));
    if cr != ch {
        return Err(Error::MultiplicityUnstable { r, half: r / 2.0, count_r: cr, count_half: ch });
    }
    Ok(cr)
}

/// One eigenvalue with its `|α|` at a sample point.
#[derive(Clone, Copy, Debug)]
pub struct SampledPair {
    pub lambda: C64,
    pub alpha: f64,
    pub label: Label,
}

/// Source of spectra for [`classify_with_sampler`]; lets tests inject
/// synthetic `α(t)` behaviour.
pub trait AlphaSampler: Sync {
    fn sample(&self, t: f64) -> Result<Vec<SampledPair>>;
}

pub struct GalerkinSampler<'a> {
    pub spec: &'a OperatorSpec,
    pub k_trunc: usize,
}

impl AlphaSampler for GalerkinSampler<'_> {
    fn sample(&self, t: f64) -> Result<Vec<SampledPair>> {
        let s = solve_bloch(self.spec, C64::new(t, 0.0), self.k_trunc)?;
        Ok(s.pairs.iter().map(|p| SampledPair { lambda: p.lambda, alpha: p.alpha.norm(), label: p.label }).collect())
    }
}

/// Synthetic cluster: branch `r` is `Λ + slopes[r]·(t − t0)` with
/// `|α_r| = |t − t0|^{gammas[r]}`, plus one far-away simple eigenvalue.
pub struct PowerLawSampler {
    pub t0: f64,
    pub lambda0: C64,
    pub gammas: Vec<f64>,
    pub slopes: Vec<C64>,
}

impl AlphaSampler for PowerLawSampler {
    fn sample(&self, t: f64) -> Result<Vec<SampledPair>> {
        let d = t - self.t0;
        let mut v: Vec<SampledPair> = self
            .gammas
            .iter()
            .zip(&self.slopes)
            .enumerate()
            .map(|(r, (g, s))| SampledPair { lambda: self.lambda0 + s * d, alpha: d.abs().powf(*g), label: Label::Small { index: r } })
            .collect();
        v.push(SampledPair { lambda: self.lambda0 + 100.0, alpha: 1.0, label: Label::Small { index: self.gammas.len() } });
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrability {
    Integrable,
    NonIntegrable,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Ess,
    NotEss,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelFit {
    pub label: Label,
    pub gamma: f64,
    pub class: Integrability,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub t_j: f64,
    pub lambda: C64,
    pub multiplicity: usize,
    pub fits: Vec<LabelFit>,
    /// All colliding labels.
    pub t_set: Vec<Label>,
    pub b: Vec<Label>,
    pub s: Vec<Label>,
    pub indeterminate: Vec<Label>,
    pub ess: Verdict,
}

impl DegeneracyReport {
    /// Labels that must be integrated as one bracket: `S` plus the
    /// indeterminate ones.
    pub fn bracket_group(&self) -> Vec<Label> {
        self.s.iter().chain(&self.indeterminate).copied().collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    /// Offsets per side: `window · 2^{-i}`, `i < offsets`.
    pub offsets: usize,
    pub gamma_margin: f64,
    /// Cluster size; `None` counts members near `Λ` at the outermost offset
    /// using the eigenvalue gap.
    pub multiplicity: Option<usize>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { offsets: 8, gamma_margin: 0.15, multiplicity: None }
    }
}

pub fn classify_cluster(spec: &OperatorSpec, t_j: f64, lambda: C64, window: f64, k_trunc: usize, opts: &ClassifyOptions) -> Result<DegeneracyReport> {
    classify_with_sampler(&GalerkinSampler { spec, k_trunc }, t_j, lambda, window, opts)
}

fn nearest(sample: &[SampledPair], lambda: C64) -> Vec<(f64, SampledPair)> {
    let mut v: Vec<(f64, SampledPair)> = sample.iter().map(|p| ((p.lambda - lambda).norm(), *p)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

pub fn classify_with_sampler(sampler: &dyn AlphaSampler, t_j: f64, lambda: C64, window: f64, opts: &ClassifyOptions) -> Result<DegeneracyReport> {
    let offsets: Vec<f64> = (0..opts.offsets).map(|i| window * 0.5f64.powi(i as i32)).collect();
    let points: Vec<f64> = offsets.iter().flat_map(|d| [t_j + d, t_j - d]).collect();
    let samples: Vec<Vec<SampledPair>> = points.par_iter().map(|&t| sampler.sample(t)).collect::<Result<_>>()?;

    let p = match opts.multiplicity {
        Some(p) => p,
        None => {
            // Largest relative jump in the sorted distances at the outermost offsets.
            let mut best = 2usize;
            for s in &samples[..2] {
                let d = nearest(s, lambda);
                let lim = d.len().min(16);
                let mut jump = 0.0;
                let mut at = 2;
                for k in 2..lim {
                    let r = d[k].0 / d[k - 1].0.max(f64::MIN_POSITIVE);
                    if r > jump {
                        jump = r;
                        at = k;
                    }
                }
                best = best.max(at);
            }
            best
        }
    };

    // Members per sample, checked for intruders.
    let mut members: Vec<Vec<SampledPair>> = Vec::with_capacity(samples.len());
    for (s, &t) in samples.iter().zip(&points) {
        let d = nearest(s, lambda);
        if d.len() < p {
            return Err(Error::WindowContaminated(format!("fewer than {p} eigenvalues at t = {t}")));
        }
        let radius = d[p - 1].0;
        if let Some(next) = d.get(p) {
            if next.0 <= 1.5 * radius {
                return Err(Error::WindowContaminated(format!(
                    "eigenvalue {} intrudes into the cluster at t = {t} (radius {radius:.3e})",
                    next.1.lambda
                )));
            }
        }
        members.push(d[..p].iter().map(|x| x.1).collect());
    }

    // Order members along the direction of separation seen at the outermost offset of each side.
    let axis = |set: &[SampledPair]| -> C64 {
        let mut best = (0.0, C64::new(1.0, 0.0));
        for a in set {
            for b in set {
                let d = a.lambda - b.lambda;
                if d.norm() > best.0 {
                    best = (d.norm(), d / d.norm());
                }
            }
        }
        best.1
    };
    let axes = [axis(&members[0]), axis(&members[1])];
    for (idx, set) in members.iter_mut().enumerate() {
        let ax = axes[idx % 2];
        set.sort_by(|a, b| {
            let pa = (ax.conj() * (a.lambda - lambda)).re;
            let pb = (ax.conj() * (b.lambda - lambda)).re;
            pa.total_cmp(&pb)
        });
    }

    let mut fits = Vec::with_capacity(p);
    for r in 0..p {
        let mut pts = Vec::with_capacity(points.len());
        for (i, set) in members.iter().enumerate() {
            let d = offsets[i / 2];
            let a = set[r].alpha.max(f64::MIN_POSITIVE);
            pts.push((d.ln(), a.ln()));
        }
        let gamma = linear_fit(&pts).0.max(0.0);
        let class = if gamma < 1.0 - opts.gamma_margin {
            Integrability::Integrable
        } else if gamma > 1.0 + opts.gamma_margin {
            Integrability::NonIntegrable
        } else {
            Integrability::Indeterminate
        };
        fits.push(LabelFit { label: members[0][r].label, gamma, class });
    }
    let pick = |c: Integrability| fits.iter().filter(|f| f.class == c).map(|f| f.label).collect::<Vec<_>>();
    let (b, s, ind) = (pick(Integrability::Integrable), pick(Integrability::NonIntegrable), pick(Integrability::Indeterminate));
    let ess = if !s.is_empty() {
        Verdict::Ess
    } else if !ind.is_empty() {
        Verdict::Indeterminate
    } else {
        Verdict::NotEss
    };
    Ok(DegeneracyReport {
        t_j,
        lambda,
        multiplicity: p,
        t_set: fits.iter().map(|f| f.label).collect(),
        fits,
        b,
        s,
        indeterminate: ind,
        ess,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeOptions {
    pub growth_factor: f64,
    /// Largest `|k|` probed; `None` uses `K/2`.
    pub k_max: Option<i64>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { growth_factor: 1.5, k_max: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InfinityEntry {
    pub k: i64,
    pub j: usize,
    pub integral: f64,
    pub nodes_used: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct InfinityTrend {
    /// Sign of `k` for this sequence.
    pub sign: i8,
    pub j: usize,
    pub ks: Vec<i64>,
    pub values: Vec<f64>,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EssInfinityReport {
    pub entries: Vec<InfinityEntry>,
    pub trends: Vec<InfinityTrend>,
    pub flagged: bool,
}

/// `∫ 1/|α_{k,j}(t)| dt` over the table window per branch `(k, j)` with
/// `1 ≤ |k| ≤ k_max`, by the trapezoid rule on the grid (defective nodes
/// dropped), and the trend of these integrals in `|k|`.
pub fn probe_ess_at_infinity(table: &BandTable, opts: &ProbeOptions) -> EssInfinityReport {
    let half = opts.k_max.unwrap_or((table.k_trunc / 2) as i64);
    let m = table.spectra.first().map(|s| s.m).unwrap_or(0);
    let mut entries = Vec::new();
    for k in (-half..=half).filter(|k| *k != 0) {
        for j in 0..m {
            let mut pts: Vec<(f64, f64)> = Vec::new();
            for (node, s) in table.spectra.iter().enumerate() {
                if let Some(p) = s.pairs.iter().find(|p| p.mode == (k, j)) {
                    if !p.defective {
                        pts.push((table.grid[node], 1.0 / p.alpha.norm()));
                    }
                }
            }
            let integral = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
            entries.push(InfinityEntry { k, j, integral, nodes_used: pts.len() });
        }
    }
    let mut trends = Vec::new();
    for sign in [1i8, -1] {
        for j in 0..m {
            let mut seq: Vec<(i64, f64)> = entries.iter().filter(|e| e.j == j && e.k.signum() as i8 == sign).map(|e| (e.k.abs(), e.integral)).collect();
            seq.sort_by_key(|x| x.0);
            let top = &seq[seq.len() / 2..];
            let flagged = top.len() >= 2
                && top.windows(2).all(|w| w[1].1 > w[0].1)
                && top.last().unwrap().1 >= opts.growth_factor * top[0].1;
            trends.push(InfinityTrend { sign, j, ks: seq.iter().map(|x| x.0).collect(), values: seq.iter().map(|x| x.1).collect(), flagged });
        }
    }
    let flagged = trends.iter().any(|t| t.flagged);
    EssInfinityReport { entries, trends, flagged }
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub gap_tol: f64,
    /// Largest classification window; shrunk to stay clear of neighbouring
    /// singular quasimomenta.
    pub window: f64,
    pub refine: RefineOptions,
    pub classify: ClassifyOptions,
    /// Drop candidates within this distance of `0` or `π` (mod 2π), where
    /// the paired windows of the expansion take over.
    pub skip_windows: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { gap_tol: 0.5, window: 1e-3, refine: RefineOptions::default(), classify: ClassifyOptions::default(), skip_windows: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanFailure {
    pub t_star: f64,
    pub lambda_star: C64,
    pub error: String,
    pub numerical: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub candidates: Vec<DegeneracyCandidate>,
    pub refined: Vec<RefinedDegeneracy>,
    pub reports: Vec<DegeneracyReport>,
    pub failures: Vec<ScanFailure>,
}

/// Candidates → refinement → classification over a band table. Candidates
/// that fail are listed with their error instead of aborting the scan.
pub fn scan(spec: &OperatorSpec, table: &BandTable, opts: &ScanOptions) -> ScanResult {
    let outside = |t: f64| match opts.skip_windows {
        Some(h) => {
            let pi = std::f64::consts::PI;
            let t = t.rem_euclid(2.0 * pi);
            t.min(2.0 * pi - t) >= h && (t - pi).abs() >= h
        }
        None => true,
    };
    let mut candidates = find_degeneracies(table, opts.gap_tol);
    candidates.retain(|c| outside(c.t_star));
    let outcomes: Vec<Result<RefinedDegeneracy>> = candidates.par_iter().map(|c| refine_degeneracy(spec, c, &opts.refine)).collect();
    let mut refined: Vec<RefinedDegeneracy> = Vec::new();
    let mut failures = Vec::new();
    let fail = |c: &DegeneracyCandidate, e: &Error| ScanFailure { t_star: c.t_star, lambda_star: c.lambda_star, error: e.to_string(), numerical: e.is_numerical() };
    for (c, r) in candidates.iter().zip(outcomes) {
        match r {
            // A coarse candidate can polish onto a point inside a window.
            Ok(r) if !outside(r.t_j) => {}
            Ok(r) if r.multiplicity >= 2 => {
                let dup = refined.iter().any(|o| (o.t_j - r.t_j).abs() <= 1e-8 && (o.lambda - r.lambda).norm() <= 1e-6 * (1.0 + r.lambda.norm()));
                if !dup {
                    refined.push(r);
                }
            }
            Ok(r) => failures.push(ScanFailure {
                t_star: c.t_star,
                lambda_star: c.lambda_star,
                error: format!("rejected: refined point t = {} is not a multiple eigenvalue", r.t_j),
                numerical: false,
            }),
            Err(e) => failures.push(fail(c, &e)),
        }
    }
    refined.sort_by(|a, b| a.t_j.total_cmp(&b.t_j).then(a.lambda.re.total_cmp(&b.lambda.re)));
    let windows: Vec<f64> = refined
        .iter()
        .map(|r| {
            let gap = refined.iter().map(|o| (o.t_j - r.t_j).abs()).filter(|d| *d > 1e-8).fold(f64::INFINITY, f64::min);
            opts.window.min(0.4 * gap)
        })
        .collect();
    let classified: Vec<Result<DegeneracyReport>> = refined
        .par_iter()
        .zip(&windows)
        .map(|(r, &w)| {
            let co = ClassifyOptions { multiplicity: Some(r.multiplicity), ..opts.classify };
            classify_cluster(spec, r.t_j, r.lambda, w, opts.refine.k_trunc, &co)
        })
        .collect();
    let mut reports = Vec::new();
    for (r, c) in refined.iter().zip(classified) {
        match c {
            Ok(rep) => reports.push(rep),
            Err(e) => failures.push(ScanFailure { t_star: r.t_j, lambda_star: r.lambda, error: e.to_string(), numerical: e.is_numerical() }),
        }
    }
    ScanResult { candidates, refined, reports, failures }
}
