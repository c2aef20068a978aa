//! Eigenvalue census in the localization disks around `(2πki)^n` and
//! `(2πki + iπ)^n`.
//!
//! For even `n` the branches `±k` share one centre and each disk should hold
//! `2m` eigenvalues. For odd `n` the two centres differ and each signed disk
//! holds `m`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{solve_bloch, BlochSpectrum};
use crate::error::Result;
use crate::linalg::I;
use crate::operator::OperatorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CensusFamily {
    /// Centres `(i·2πk)^n`, for `t` near 0.
    Zero,
    /// Centres `(i(2πk+π))^n`, for `t` near π.
    Pi,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskCount {
    pub k: i64,
    /// `0` for a shared `±k` disk (even `n`), otherwise the sign of the branch.
    pub sign: i8,
    pub center: C64,
    pub radius: f64,
    pub count: usize,
    pub expected: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub t: f64,
    pub family: CensusFamily,
    pub n0: usize,
    pub disks: Vec<DiskCount>,
    pub interior_count: usize,
    pub interior_expected: usize,
    /// Eigenvalues in no region at a modulus that the truncation resolves.
    pub escaped: Vec<C64>,
    /// Eigenvalues in no region beyond `|k| > K/2`: truncation artifacts.
    pub artifacts: Vec<C64>,
}

impl CensusReport {
    pub fn all_exact(&self) -> bool {
        self.escaped.is_empty() && self.interior_count == self.interior_expected && self.disks.iter().all(|d| d.count == d.expected)
    }
}

fn phase(family: CensusFamily, k: i64) -> f64 {
    let pi = std::f64::consts::PI;
    match family {
        CensusFamily::Zero => 2.0 * pi * k as f64,
        CensusFamily::Pi => 2.0 * pi * k as f64 + pi,
    }
}

pub fn disk_census(spec: &OperatorSpec, t: f64, k_trunc: usize, n0: usize, family: CensusFamily) -> Result<CensusReport> {
    let s = solve_bloch(spec, C64::new(t, 0.0), k_trunc)?;
    Ok(census_of(&s, spec.order(), spec.dim(), n0, family))
}

pub fn census_of(s: &BlochSpectrum, n: usize, m: usize, n0: usize, family: CensusFamily) -> CensusReport {
    let half = (s.k_trunc / 2) as i64;
    let n0 = n0.clamp(1, half as usize + 1);
    let nn = n as u32;
    let mut disks = Vec::new();
    for k in n0 as i64..=half {
        let radius = (k as f64).powi(n as i32 - 1);
        // The partner branch of +k: -k near 0, -k-1 near π.
        let partner = match family {
            CensusFamily::Zero => -k,
            CensusFamily::Pi => -k - 1,
        };
        let cp = (I * phase(family, k)).powu(nn);
        let cm = (I * phase(family, partner)).powu(nn);
        if n % 2 == 0 {
            disks.push(DiskCount { k, sign: 0, center: cp, radius, count: 0, expected: 2 * m });
        } else {
            disks.push(DiskCount { k, sign: 1, center: cp, radius, count: 0, expected: m });
            disks.push(DiskCount { k, sign: -1, center: cm, radius, count: 0, expected: m });
        }
    }
    let inner_ks: Vec<i64> = match family {
        CensusFamily::Zero => (-(n0 as i64) + 1..n0 as i64).collect(),
        CensusFamily::Pi => (-(n0 as i64)..n0 as i64).collect(),
    };
    let inner_r = (n0 as f64).powi(n as i32 - 1);
    let inner_centres: Vec<C64> = inner_ks.iter().map(|&k| (I * phase(family, k)).powu(nn)).collect();

    let mut interior_count = 0;
    let mut escaped = Vec::new();
    let mut artifacts = Vec::new();
    for p in &s.pairs {
        let lam = p.lambda;
        let mut hit = false;
        for d in disks.iter_mut() {
            if (lam - d.center).norm() < d.radius {
                d.count += 1;
                hit = true;
            }
        }
        if inner_centres.iter().any(|c| (lam - c).norm() < inner_r) {
            interior_count += 1;
            hit = true;
        }
        if !hit {
            let kk = lam.norm().powf(1.0 / n as f64) / (2.0 * std::f64::consts::PI);
            if kk > half as f64 {
                artifacts.push(lam);
            } else {
                escaped.push(lam);
            }
        }
    }
    CensusReport {
        t: s.t.re,
        family,
        n0,
        disks,
        interior_count,
        interior_expected: inner_ks.len() * m,
        escaped,
        artifacts,
    }
}
