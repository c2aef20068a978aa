//! Partition of `(−h, 2π−h]` into regular intervals, excised windows around
//! singular quasimomenta, and the paired windows at `0` and `π`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::singularity::{DegeneracyReport, Integrability};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WindowKind {
    /// `[−h, h]`, brackets `{(±k, j)}`.
    Zero,
    /// `[π−h, π+h]`, brackets `{(k, j), (−k−1, j)}`.
    Pi,
}

impl WindowKind {
    /// Bracket key of branch index `k`.
    pub fn group_key(self, k: i64) -> i64 {
        match self {
            WindowKind::Zero => k.abs(),
            WindowKind::Pi => {
                if k >= 0 {
                    k
                } else {
                    -k - 1
                }
            }
        }
    }

    pub fn center(self) -> f64 {
        match self {
            WindowKind::Zero => 0.0,
            WindowKind::Pi => PI,
        }
    }
}

/// Excised neighbourhood `[t_j − ε, t_j + ε]` of one singular quasimomentum.
#[derive(Clone, Debug, Serialize)]
pub struct SqWindow {
    pub t_j: f64,
    pub lambda: C64,
    /// Half-width; at most the plan's `epsilon`.
    pub epsilon: f64,
    pub multiplicity: usize,
    /// Cluster ranks integrated as one δ-limit bracket (`S` and indeterminate).
    pub bracket_ranks: Vec<usize>,
    /// Cluster ranks with integrable `1/α`, integrated term by term.
    pub integrable_ranks: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadratureRule {
    pub order: usize,
    pub max_panel_width: f64,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self { order: 16, max_panel_width: 0.1 }
    }
}

impl QuadratureRule {
    /// Panel width giving about `nodes` nodes over a period.
    pub fn with_period_nodes(nodes: usize, order: usize) -> Self {
        let panels = (nodes as f64 / order as f64).max(1.0);
        Self { order, max_panel_width: 2.0 * PI / panels }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionPlan {
    pub h: f64,
    /// Requested excision half-width.
    pub epsilon: f64,
    pub regular_intervals: Vec<(f64, f64)>,
    pub sq_windows: Vec<SqWindow>,
    pub zero_window: (f64, f64),
    pub pi_window: (f64, f64),
    pub quadrature: QuadratureRule,
}

impl ExpansionPlan {
    /// Total measure of all components; `2π` for a valid plan.
    pub fn total_length(&self) -> f64 {
        let reg: f64 = self.regular_intervals.iter().map(|(a, b)| b - a).sum();
        let sq: f64 = self.sq_windows.iter().map(|w| 2.0 * w.epsilon).sum();
        reg + sq + (self.zero_window.1 - self.zero_window.0) + (self.pi_window.1 - self.pi_window.0)
    }

    pub fn window(&self, kind: WindowKind) -> (f64, f64) {
        match kind {
            WindowKind::Zero => self.zero_window,
            WindowKind::Pi => self.pi_window,
        }
    }
}

/// Builds the partition. Reports whose `t_j` (taken mod 2π into
/// `(−h, 2π−h]`) lies in `(−h, h)` or `(π−h, π+h)` are absorbed by the paired
/// windows; every other one gets an excised window of half-width
/// `min(ε, d_w/2, d_n/3)`, with `d_w` the distance to the nearest paired
/// window and `d_n` the distance to the nearest other singular point.
pub fn plan_expansion(reports: &[DegeneracyReport], h: f64, epsilon: f64, quadrature: QuadratureRule) -> Result<ExpansionPlan> {
    if !(h > 0.0 && h < PI / 2.0) {
        return Err(Error::InvalidInput(format!("window half-width h = {h} must lie in (0, π/2)")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("excision half-width ε = {epsilon} must be positive")));
    }
    let kept: Vec<(f64, &DegeneracyReport)> = reports
        .iter()
        .map(|r| ((r.t_j + h).rem_euclid(2.0 * PI) - h, r))
        .filter(|(t, _)| t.abs() >= h && (t - PI).abs() >= h)
        .collect();
    let mut sq: Vec<SqWindow> = Vec::new();
    for (i, &(t, r)) in kept.iter().enumerate() {
        let d_w = [0.0, PI, 2.0 * PI].iter().map(|c| (t - c).abs() - h).fold(f64::INFINITY, f64::min);
        let d_n = kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (o, _))| (t - o).abs()).fold(f64::INFINITY, f64::min);
        if !(d_w > 0.0 && d_n > 0.0) {
            return Err(Error::OverlappingWindows(format!("singular point t = {t} touches a paired window or another singular point")));
        }
        let eps = epsilon.min(d_w / 2.0).min(d_n / 3.0);
        let mut bracket_ranks = Vec::new();
        let mut integrable_ranks = Vec::new();
        for (i, f) in r.fits.iter().enumerate() {
            match f.class {
                Integrability::Integrable => integrable_ranks.push(i),
                _ => bracket_ranks.push(i),
            }
        }
        sq.push(SqWindow { t_j: t, lambda: r.lambda, epsilon: eps, multiplicity: r.multiplicity, bracket_ranks, integrable_ranks });
    }
    sq.sort_by(|a, b| a.t_j.total_cmp(&b.t_j));
    if epsilon * sq.len() as f64 >= h {
        return Err(Error::EpsilonTooLarge { epsilon, count: sq.len(), h });
    }
    let mut regular = Vec::new();
    for (a, b) in [(h, PI - h), (PI + h, 2.0 * PI - h)] {
        let mut lo = a;
        for w in sq.iter().filter(|w| w.t_j > a && w.t_j < b) {
            regular.push((lo, w.t_j - w.epsilon));
            lo = w.t_j + w.epsilon;
        }
        regular.push((lo, b));
    }
    Ok(ExpansionPlan { h, epsilon, regular_intervals: regular, sq_windows: sq, zero_window: (-h, h), pi_window: (PI - h, PI + h), quadrature })
}
