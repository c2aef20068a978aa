//! Residuals of the computed bands against the large-|k| asymptotic forms.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{basis_index, BandTable};
use crate::linalg::{self, ZERO};
use crate::operator::{e_factor, unperturbed_eigenvalue, MeanEigensystem};

#[derive(Clone, Copy, Debug)]
pub struct ResidualOptions {
    /// `|k|` range used for the log-log slope fits.
    pub k_fit: (i64, i64),
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self { k_fit: (4, 12) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualEntry {
    pub node: usize,
    pub t: f64,
    pub k: i64,
    pub j: usize,
    pub r_lambda: f64,
    pub r_psi: f64,
    pub r_x: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub entries: Vec<ResidualEntry>,
    /// `(|k|, max residual)` series used by the fits.
    pub series_lambda: Vec<(i64, f64)>,
    pub series_psi: Vec<(i64, f64)>,
    pub series_x: Vec<(i64, f64)>,
    /// Least-squares slopes of `ln r` against `ln |k|`; `None` when the
    /// residuals are at round-off level and carry no trend.
    pub slope_lambda: Option<f64>,
    pub slope_psi: Option<f64>,
    pub slope_x: Option<f64>,
}

pub fn asymptotic_residuals(table: &BandTable, sys: &MeanEigensystem, opts: &ResidualOptions) -> AsymptoticReport {
    let m = sys.mu.len();
    let kt = table.k_trunc;
    let mut entries = Vec::new();
    for (node, spec) in table.spectra.iter().enumerate() {
        let t = spec.t;
        let n = spec.n;
        let e = e_factor(t);
        for pair in &spec.pairs {
            let (k, j) = pair.mode;
            if k.unsigned_abs() as usize > kt / 2 {
                continue;
            }
            let r_lambda = (pair.lambda - unperturbed_eigenvalue(n, sys.mu[j], k, t)).norm();
            let mut target = vec![ZERO; pair.psi.len()];
            let mut target_x = vec![ZERO; pair.psi.len()];
            for s in 0..m {
                target[basis_index(kt, m, k, s)] = sys.v[j][s] * e;
                target_x[basis_index(kt, m, k, s)] = sys.u[j][s] / e;
            }
            // Phase-align ψ with the model; X follows the same phase.
            let g = linalg::inner(&pair.psi, &target);
            let ph = if g.norm() > 0.0 { g / g.norm() } else { C64::new(1.0, 0.0) };
            let r_psi = pair.psi.iter().zip(&target).map(|(a, b)| (a * ph - b).norm_sqr()).sum::<f64>().sqrt();
            let r_x = pair.x_left.iter().zip(&target_x).map(|(a, b)| (a * ph - b).norm_sqr()).sum::<f64>().sqrt();
            entries.push(ResidualEntry { node, t: t.re, k, j, r_lambda, r_psi, r_x });
        }
    }
    let series = |f: &dyn Fn(&ResidualEntry) -> f64| -> Vec<(i64, f64)> {
        (opts.k_fit.0..=opts.k_fit.1)
            .filter_map(|k| {
                let v = entries.iter().filter(|e| e.k.abs() == k).map(f).fold(f64::NAN, f64::max);
                v.is_finite().then_some((k, v))
            })
            .collect()
    };
    let series_lambda = series(&|e| e.r_lambda);
    let series_psi = series(&|e| e.r_psi);
    let series_x = series(&|e| e.r_x);
    AsymptoticReport {
        slope_lambda: loglog_slope(&series_lambda, 1e-9),
        slope_psi: loglog_slope(&series_psi, 1e-11),
        slope_x: loglog_slope(&series_x, 1e-11),
        entries,
        series_lambda,
        series_psi,
        series_x,
    }
}

/// Least-squares slope of `ln y` vs `ln x`; `None` if any value is below `floor`.
pub fn loglog_slope(series: &[(i64, f64)], floor: f64) -> Option<f64> {
    if series.len() < 2 || series.iter().any(|(_, y)| *y <= floor) {
        return None;
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|(k, y)| ((*k as f64).ln(), y.ln())).collect();
    Some(linear_fit(&pts).0)
}

/// `(slope, intercept)` of an ordinary least-squares line.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}
