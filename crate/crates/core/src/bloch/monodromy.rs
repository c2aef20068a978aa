//! Characteristic determinant `Δ(λ,t) = det(Φ(1,λ) − e^{it} I)` of the
//! first-order system `z = (y, y', …, y^{(n-1)})`, with its λ-derivative
//! from the variational equation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, I, ONE, ZERO};
use crate::ode::{self, OdeOptions};
use crate::operator::OperatorSpec;

/// `Φ(1, λ)` and `∂Φ(1, λ)/∂λ`. Independent of `t`, so every
/// t-derivative of `Δ` is algebraic once this is known.
#[derive(Clone, Debug)]
pub struct Monodromy {
    pub lambda: C64,
    pub phi: CMat,
    pub dphi: CMat,
}

/// `Δ`, `∂Δ/∂λ`, `∂Δ/∂t` at one point.
#[derive(Clone, Copy, Debug)]
pub struct DeltaJet {
    pub delta: C64,
    pub d_lambda: C64,
    pub d_t: C64,
}

impl Monodromy {
    pub fn compute(spec: &OperatorSpec, lambda: C64) -> Result<Self> {
        Self::compute_with(spec, lambda, &OdeOptions::default())
    }

    pub fn compute_with(spec: &OperatorSpec, lambda: C64, opts: &OdeOptions) -> Result<Self> {
        let n = spec.order();
        let m = spec.dim();
        let big = n * m;
        let nn = big * big;
        // Column-major flattening: Φ in [0, nn), Φ_λ in [nn, 2nn).
        let mut y0 = vec![ZERO; 2 * nn];
        for i in 0..big {
            y0[i * big + i] = ONE;
        }
        let coeffs: Vec<(usize, &crate::operator::FourierMatrixSeries)> =
            spec.coeffs().iter().map(|(nu, s)| (*nu, s)).collect();
        let last = (n - 1) * m;
        let rhs = |x: f64, y: &[C64], dy: &mut [C64]| {
            let ps: Vec<(usize, CMat)> = coeffs.iter().map(|(nu, s)| (*nu, s.eval(x))).collect();
            for half in 0..2 {
                let off = half * nn;
                for c in 0..big {
                    let col = &y[off + c * big..off + (c + 1) * big];
                    let out = &mut dy[off + c * big..off + (c + 1) * big];
                    // Shift rows: (y^{(r)})' = y^{(r+1)}.
                    out[..last].copy_from_slice(&col[m..]);
                    for s in 0..m {
                        let mut acc = lambda * col[s];
                        for (nu, p) in &ps {
                            let blk = (n - nu) * m;
                            for r in 0..m {
                                acc -= p[(s, r)] * col[blk + r];
                            }
                        }
                        out[last + s] = acc;
                    }
                }
            }
            // Φ_λ' gains A_λ Φ: identity block in the last block row, first block column.
            for c in 0..big {
                for s in 0..m {
                    dy[nn + c * big + last + s] += y[c * big + s];
                }
            }
        };
        let mut o = *opts;
        if o.h0.is_none() {
            let freq = lambda.norm().powf(1.0 / n as f64) + 1.0;
            o.h0 = Some((0.25 / freq).min(1.0 / 32.0));
        }
        let y1 = ode::integrate(rhs, 0.0, 1.0, &y0, &o)?;
        let phi = CMat::from_fn(big, big, |i, j| y1[j * big + i]);
        let dphi = CMat::from_fn(big, big, |i, j| y1[nn + j * big + i]);
        if phi.as_ref().has_nan() || dphi.as_ref().has_nan() {
            return Err(Error::IntegratorFailure("non-finite monodromy".into()));
        }
        Ok(Self { lambda, phi, dphi })
    }

    fn mismatch(&self, t: C64) -> CMat {
        let rho = (I * t).exp();
        let mut m = self.phi.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= rho;
        }
        m
    }

    pub fn delta(&self, t: C64) -> C64 {
        linalg::det(&self.mismatch(t))
    }

    pub fn jet(&self, t: C64) -> DeltaJet {
        let m = self.mismatch(t);
        let adj = linalg::adjugate(&m);
        let big = m.nrows();
        let mut d_lambda = ZERO;
        let mut tr_adj = ZERO;
        for i in 0..big {
            tr_adj += adj[(i, i)];
            for k in 0..big {
                d_lambda += adj[(i, k)] * self.dphi[(k, i)];
            }
        }
        let rho = (I * t).exp();
        DeltaJet { delta: linalg::det(&m), d_lambda, d_t: -I * rho * tr_adj }
    }
}

/// `Δ(λ, t)`.
pub fn characteristic_determinant(spec: &OperatorSpec, lambda: C64, t: C64) -> Result<C64> {
    Ok(Monodromy::compute(spec, lambda)?.delta(t))
}

/// Newton iteration on `Δ(·, t)` from `lambda0`.
pub fn refine_eigenvalue(spec: &OperatorSpec, t: C64, lambda0: C64) -> Result<C64> {
    refine_eigenvalue_with(spec, t, lambda0, 50)
}

pub fn refine_eigenvalue_with(spec: &OperatorSpec, t: C64, lambda0: C64, max_iter: usize) -> Result<C64> {
    let mut lam = lambda0;
    let mut jet = Monodromy::compute(spec, lam)?.jet(t);
    for _ in 0..max_iter {
        if jet.d_lambda == ZERO {
            return Err(Error::NoConvergence(format!("zero derivative at λ = {lam}")));
        }
        let step = jet.delta / jet.d_lambda;
        let tol = 1e-10 * (1.0 + lam.norm());
        if step.norm() <= tol {
            return Ok(lam - step);
        }
        // Backtrack while |Δ| grows.
        let mut scale = 1.0;
        let mut next = None;
        for _ in 0..20 {
            let cand = lam - step * scale;
            let j = Monodromy::compute(spec, cand)?.jet(t);
            if j.delta.norm() < jet.delta.norm() || step.norm() * scale <= tol {
                next = Some((cand, j));
                break;
            }
            scale *= 0.5;
        }
        let Some((l, j)) = next else {
            return Err(Error::NoConvergence(format!("line search failed near λ = {lam}")));
        };
        lam = l;
        jet = j;
    }
    Err(Error::NoConvergence(format!("Newton on Δ did not settle after {max_iter} steps (λ = {lam})")))
}

/// Newton correction `|Δ/Δ'|` at `(λ, t)`.
pub fn newton_correction(spec: &OperatorSpec, lambda: C64, t: C64) -> Result<f64> {
    let j = Monodromy::compute(spec, lambda)?.jet(t);
    Ok((j.delta / j.d_lambda).norm())
}
