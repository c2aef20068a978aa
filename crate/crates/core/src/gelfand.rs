//! Gelfand transform `f_t(x) = Σ_k f(x+k) e^{-ikt}` of finitely supported
//! cell functions, the `f = f⁺ + f⁻` split and the Parseval/inversion
//! identities.
//!
//! Frequencies use `f̂(ξ) = ∫ f(x) e^{-iξx} dx`, so that
//! `f_t(x) = Σ_p f̂(2πp+t) e^{i(2πp+t)x}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{I, ONE, ZERO};

/// Data on one unit cell `[c, c+1)`, written in the local variable `y ∈ [0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellData {
    /// Piecewise constant on `S` equal sub-intervals; one `m`-vector each.
    Samples(Vec<Vec<C64>>),
    /// `Σ_q d_q e^{i2πqy}` as `(q, d_q)` pairs.
    Fourier(Vec<(i64, Vec<C64>)>),
}

impl CellData {
    fn eval(&self, y: f64, m: usize) -> Vec<C64> {
        match self {
            CellData::Samples(v) => {
                let s = ((y * v.len() as f64).floor() as usize).min(v.len() - 1);
                v[s].clone()
            }
            CellData::Fourier(modes) => {
                let mut out = vec![ZERO; m];
                for (q, d) in modes {
                    let ph = C64::from_polar(1.0, 2.0 * PI * *q as f64 * y);
                    for (o, x) in out.iter_mut().zip(d) {
                        *o += x * ph;
                    }
                }
                out
            }
        }
    }

    /// `∫₀¹ g(y) e^{-iξy} dy` for complex `ξ`.
    fn transform(&self, xi: C64, m: usize) -> Vec<C64> {
        let mut out = vec![ZERO; m];
        match self {
            CellData::Samples(v) => {
                let s = v.len() as f64;
                let e = expint(-xi / s) / s;
                for (k, val) in v.iter().enumerate() {
                    let w = e * (-I * xi * (k as f64 / s)).exp();
                    for (o, x) in out.iter_mut().zip(val) {
                        *o += x * w;
                    }
                }
            }
            CellData::Fourier(modes) => {
                for (q, d) in modes {
                    let w = expint(2.0 * PI * *q as f64 - xi);
                    for (o, x) in out.iter_mut().zip(d) {
                        *o += x * w;
                    }
                }
            }
        }
        out
    }

    fn scaled(&self, a: C64) -> CellData {
        match self {
            CellData::Samples(v) => CellData::Samples(v.iter().map(|x| x.iter().map(|y| y * a).collect()).collect()),
            CellData::Fourier(md) => CellData::Fourier(md.iter().map(|(q, d)| (*q, d.iter().map(|y| y * a).collect())).collect()),
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        match self {
            CellData::Samples(v) => {
                let s = v.len() as f64;
                v.iter().enumerate().map(|(k, x)| Piece { a: k as f64 / s, b: (k + 1) as f64 / s, q: 0, d: x.clone() }).collect()
            }
            CellData::Fourier(md) => md.iter().map(|(q, d)| Piece { a: 0.0, b: 1.0, q: *q, d: d.clone() }).collect(),
        }
    }
}

/// `d · e^{i2πqy}` restricted to `[a, b)`.
struct Piece {
    a: f64,
    b: f64,
    q: i64,
    d: Vec<C64>,
}

/// `E(z) = ∫₀¹ e^{izy} dy = (e^{iz} − 1)/(iz)`, with its Taylor series near 0.
pub fn expint(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let iz = I * z;
        ONE + iz / 2.0 + iz * iz / 6.0 + iz * iz * iz / 24.0 + iz * iz * iz * iz / 120.0
    } else {
        ((I * z).exp() - 1.0) / (I * z)
    }
}

/// `∫_a^b e^{iωy} dy` for real `ω`.
fn segment_exp(omega: f64, a: f64, b: f64) -> C64 {
    if omega == 0.0 {
        return C64::new(b - a, 0.0);
    }
    let w = b - a;
    C64::from_polar(1.0, omega * a) * w * expint(C64::new(omega * w, 0.0))
}

/// An `m`-vector function supported on finitely many unit cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFunction {
    pub m: usize,
    pub cells: BTreeMap<i64, CellData>,
}

impl CellFunction {
    pub fn zero(m: usize) -> Self {
        Self { m, cells: BTreeMap::new() }
    }

    pub fn new(m: usize, cells: impl IntoIterator<Item = (i64, CellData)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (c, d) in cells {
            let ok = match &d {
                CellData::Samples(v) => !v.is_empty() && v.iter().all(|x| x.len() == m),
                CellData::Fourier(md) => md.iter().all(|(_, x)| x.len() == m),
            };
            if !ok {
                return Err(Error::InvalidInput(format!("cell {c} has inconsistent data for m = {m}")));
            }
            if map.insert(c, d).is_some() {
                return Err(Error::InvalidInput(format!("cell {c} given twice")));
            }
        }
        Ok(Self { m, cells: map })
    }

    /// `v · χ_[c, c+1)`.
    pub fn constant_cell(c: i64, v: Vec<C64>) -> Self {
        let m = v.len();
        Self::new(m, [(c, CellData::Samples(vec![v]))]).unwrap()
    }

    /// Half-open cell range `[a, b)`; `None` for the zero function.
    pub fn support(&self) -> Option<(i64, i64)> {
        let a = *self.cells.keys().next()?;
        let b = *self.cells.keys().next_back()? + 1;
        Some((a, b))
    }

    pub fn eval(&self, x: f64) -> Vec<C64> {
        let c = x.floor() as i64;
        match self.cells.get(&c) {
            Some(d) => d.eval(x - c as f64, self.m),
            None => vec![ZERO; self.m],
        }
    }

    /// `f̂(ξ) = ∫ f(x) e^{-iξx} dx`, exact, for complex `ξ`.
    pub fn fourier_transform(&self, xi: C64) -> Vec<C64> {
        let mut out = vec![ZERO; self.m];
        for (&c, d) in &self.cells {
            let ph = (-I * xi * c as f64).exp();
            for (o, x) in out.iter_mut().zip(d.transform(xi, self.m)) {
                *o += ph * x;
            }
        }
        out
    }

    /// Coefficients of `f_t` in the basis `e_s e^{i(2πp+t)x}`, `|p| ≤ K`,
    /// flattened as `(p+K)·m + s`.
    pub fn bloch_coefficients(&self, t: C64, k_trunc: usize) -> Vec<C64> {
        let kk = k_trunc as i64;
        let mut out = Vec::with_capacity(self.m * (2 * k_trunc + 1));
        for p in -kk..=kk {
            out.extend(self.fourier_transform(2.0 * PI * p as f64 + t));
        }
        out
    }

    /// `f_t(x)` from the defining finite sum.
    pub fn bloch_eval(&self, t: C64, x: f64) -> Vec<C64> {
        let mut out = vec![ZERO; self.m];
        let base = x.floor() as i64;
        let y = x - base as f64;
        for (&c, d) in &self.cells {
            let k = c - base;
            let w = (-I * t * k as f64).exp();
            for (o, v) in out.iter_mut().zip(d.eval(y, self.m)) {
                *o += w * v;
            }
        }
        out
    }

    /// `‖f‖²`, exact.
    pub fn norm_sq(&self) -> f64 {
        self.cells.values().map(|d| gram(d, d).re).sum()
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { m: self.m, cells: self.cells.iter().map(|(c, d)| (*c, d.scaled(a))).collect() }
    }

    /// `self + other`. Cells present in both are merged into one
    /// Fourier or sample representation when their kinds agree; otherwise
    /// sample data is refined onto a common grid and added.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        let mut cells = self.cells.clone();
        for (c, d) in &other.cells {
            let merged = match (cells.remove(c), d) {
                (None, d) => d.clone(),
                (Some(CellData::Fourier(a)), CellData::Fourier(b)) => {
                    let mut acc: BTreeMap<i64, Vec<C64>> = BTreeMap::new();
                    for (q, v) in a.iter().chain(b.iter()) {
                        let e = acc.entry(*q).or_insert_with(|| vec![ZERO; self.m]);
                        e.iter_mut().zip(v).for_each(|(x, y)| *x += y);
                    }
                    CellData::Fourier(acc.into_iter().collect())
                }
                (Some(CellData::Samples(a)), CellData::Samples(b)) => {
                    let s = lcm(a.len(), b.len());
                    let (ra, rb) = (s / a.len(), s / b.len());
                    CellData::Samples((0..s).map(|k| a[k / ra].iter().zip(&b[k / rb]).map(|(x, y)| x + y).collect()).collect())
                }
                _ => return Err(Error::InvalidInput(format!("cannot add sample and Fourier data in cell {c}"))),
            };
            cells.insert(*c, merged);
        }
        Ok(Self { m: self.m, cells })
    }

    /// Largest `|f_t(x)|` over a `nx × nt` grid of `[0,1) × [0,2π)`.
    pub fn bloch_sup(&self, nx: usize, nt: usize) -> f64 {
        let mut best: f64 = 0.0;
        for ix in 0..nx {
            let x = (ix as f64 + 0.5) / nx as f64;
            let vals: Vec<(i64, Vec<C64>)> = self.cells.iter().map(|(&c, d)| (c, d.eval(x, self.m))).collect();
            for it in 0..nt {
                let t = 2.0 * PI * it as f64 / nt as f64;
                let mut acc = vec![ZERO; self.m];
                for (c, v) in &vals {
                    let w = C64::from_polar(1.0, -t * *c as f64);
                    acc.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
                }
                best = best.max(acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
            }
        }
        best
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

/// `∫₀¹ ⟨g_a(y), g_b(y)⟩ dy = ∫ conj(g_a)·g_b`, exact.
fn gram(a: &CellData, b: &CellData) -> C64 {
    let mut s = ZERO;
    for pa in a.pieces() {
        for pb in b.pieces() {
            let lo = pa.a.max(pb.a);
            let hi = pa.b.min(pb.b);
            if hi <= lo {
                continue;
            }
            let ip: C64 = pa.d.iter().zip(&pb.d).map(|(x, y)| x.conj() * y).sum();
            if ip != ZERO {
                s += ip * segment_exp(2.0 * PI * (pb.q - pa.q) as f64, lo, hi);
            }
        }
    }
    s
}

/// Cell-periodic representation of `f_t` on `[0, 1)`:
/// `f_t(y) = Σ_{|q| ≤ M} D_q e^{i2πqy}`. Values elsewhere follow from
/// `f_t(x+1) = e^{it} f_t(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochField {
    pub t: C64,
    pub m: usize,
    pub modes: usize,
    /// `coeffs[q + M]` is the `m`-vector `D_q`.
    pub coeffs: Vec<Vec<C64>>,
}

impl BlochField {
    pub fn eval(&self, x: f64) -> Vec<C64> {
        let n = x.floor();
        let y = x - n;
        let w = (I * self.t * n).exp();
        let mut out = vec![ZERO; self.m];
        for (i, d) in self.coeffs.iter().enumerate() {
            let q = i as i64 - self.modes as i64;
            let ph = w * C64::from_polar(1.0, 2.0 * PI * q as f64 * y);
            out.iter_mut().zip(d).for_each(|(o, v)| *o += ph * v);
        }
        out
    }
}

/// `f_t` projected to cell modes `|q| ≤ M`. Exact when every cell carries
/// Fourier data of bandwidth `≤ M`.
pub fn gelfand_transform(f: &CellFunction, t: C64, modes: usize) -> BlochField {
    let mm = modes as i64;
    let coeffs = (-mm..=mm)
        .map(|q| {
            let mut acc = vec![ZERO; f.m];
            for (&c, d) in &f.cells {
                let w = (-I * t * c as f64).exp();
                let dq: Vec<C64> = match d {
                    CellData::Fourier(md) => md.iter().find(|(qq, _)| *qq == q).map(|(_, v)| v.clone()).unwrap_or_else(|| vec![ZERO; f.m]),
                    other => other.transform(C64::new(2.0 * PI * q as f64, 0.0), f.m),
                };
                acc.iter_mut().zip(dq).for_each(|(a, b)| *a += w * b);
            }
            acc
        })
        .collect();
    BlochField { t, m: f.m, modes, coeffs }
}

/// `(f⁺, f⁻)`: cells `< 0` and cells `≥ 0`.
pub fn split_support(f: &CellFunction) -> (CellFunction, CellFunction) {
    let plus = f.cells.range(..0).map(|(c, d)| (*c, d.clone())).collect();
    let minus = f.cells.range(0..).map(|(c, d)| (*c, d.clone())).collect();
    (CellFunction { m: f.m, cells: plus }, CellFunction { m: f.m, cells: minus })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ParsevalResidual {
    Relative(f64),
    /// Zero input: both sides vanish identically.
    Exact,
}

/// Relative mismatch of `∫|f|²` and `(1/2π) ∫∫ |f_t(x)|² dx dt` for a
/// t-rule on `[0, 2π)`. The x-integral is evaluated exactly.
pub fn parseval_residual(f: &CellFunction, rule: &[(f64, f64)]) -> ParsevalResidual {
    let lhs = f.norm_sq();
    if lhs == 0.0 {
        return ParsevalResidual::Exact;
    }
    let cells: Vec<(i64, &CellData)> = f.cells.iter().map(|(c, d)| (*c, d)).collect();
    // ∫₀¹ |f_t|² = Σ_{a,b} e^{i(c_a − c_b)t} G[a][b].
    let g: Vec<Vec<C64>> = cells.iter().map(|(_, a)| cells.iter().map(|(_, b)| gram(a, b)).collect()).collect();
    let mut rhs = 0.0;
    for &(t, w) in rule {
        let mut s = ZERO;
        for (ia, (ca, _)) in cells.iter().enumerate() {
            for (ib, (cb, _)) in cells.iter().enumerate() {
                s += C64::from_polar(1.0, (ca - cb) as f64 * t) * g[ia][ib];
            }
        }
        rhs += w * s.re;
    }
    rhs /= 2.0 * PI;
    ParsevalResidual::Relative((lhs - rhs).abs() / lhs)
}

/// Worst pointwise error of `(1/2π) ∫ f_t(x) dt` against `f(x)` at the given
/// points of cell 0.
pub fn inversion_residual(f: &CellFunction, rule: &[(f64, f64)], xs: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in xs {
        let mut acc = vec![ZERO; f.m];
        for &(t, w) in rule {
            let v = f.bloch_eval(C64::new(t, 0.0), x);
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
        }
        let exact = f.eval(x);
        let err = acc.iter().zip(&exact).map(|(a, e)| (a / (2.0 * PI) - e).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::periodic_trapezoid;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn single_cell_is_constant_in_t() {
        let v = vec![c(1.0, 2.0), c(-0.5, 0.0)];
        let f = CellFunction::constant_cell(0, v.clone());
        for &t in &[0.0, 1.0, 4.0] {
            let g = gelfand_transform(&f, c(t, 0.0), 4);
            let x = g.eval(0.3);
            assert!((x[0] - v[0]).norm() < 1e-14 && (x[1] - v[1]).norm() < 1e-14);
        }
    }

    #[test]
    fn two_cells_give_phase_sum() {
        let (a, b) = (c(1.5, 0.0), c(0.0, -2.0));
        let f = CellFunction::new(1, [(0, CellData::Samples(vec![vec![a]])), (1, CellData::Samples(vec![vec![b]]))]).unwrap();
        let t = 0.7;
        let want = a + b * C64::from_polar(1.0, -t);
        assert!((f.bloch_eval(c(t, 0.0), 0.4)[0] - want).norm() < 1e-14);
        let r = parseval_residual(&f, &periodic_trapezoid(64));
        assert!(matches!(r, ParsevalResidual::Relative(x) if x < 1e-12));
    }

    #[test]
    fn fourier_cells_reproduce_bloch_coefficients() {
        let f = CellFunction::new(1, [(-1, CellData::Fourier(vec![(0, vec![c(1.0, 0.0)]), (2, vec![c(0.3, 0.1)])])), (2, CellData::Samples(vec![vec![c(0.5, 0.0)], vec![c(-1.0, 0.0)]]))]).unwrap();
        let t = c(0.9, 0.0);
        let k = 40;
        let g = f.bloch_coefficients(t, k);
        // Smooth parts converge fast; compare at a point away from jumps.
        let x = 0.37;
        let series: C64 = (0..2 * k + 1).map(|i| g[i] * C64::from_polar(1.0, (2.0 * PI * (i as f64 - k as f64) + t.re) * x)).sum();
        assert!((series - f.bloch_eval(t, x)[0]).norm() < 2e-2);
    }

    #[test]
    fn split_partitions() {
        let f = CellFunction::new(1, [(-1, CellData::Samples(vec![vec![c(1.0, 0.0)]])), (0, CellData::Samples(vec![vec![c(2.0, 0.0)]]))]).unwrap();
        let (p, m) = split_support(&f);
        assert_eq!(p.support(), Some((-1, 0)));
        assert_eq!(m.support(), Some((0, 1)));
        assert_eq!(p.add(&m).unwrap(), f);
    }

    #[test]
    fn zero_function_parseval_is_exact() {
        assert_eq!(parseval_residual(&CellFunction::zero(2), &periodic_trapezoid(8)), ParsevalResidual::Exact);
    }
}
