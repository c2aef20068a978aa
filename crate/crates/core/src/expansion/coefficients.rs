//! Expansion coefficients `a_k(t) = (f_t, X_{k,t})`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bloch::{BlochSpectrum, Label};
use crate::gelfand::CellFunction;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Coefficient {
    Regular(C64),
    /// `(f_t, ψ*)` and `α = (ψ*, ψ)` kept apart: `α` is numerically zero.
    Defective { projection: C64, alpha: C64 },
}

impl Coefficient {
    /// `a_k(t)`; divides by `α` for defective pairs.
    pub fn value(&self) -> C64 {
        match *self {
            Coefficient::Regular(a) => a,
            Coefficient::Defective { projection, alpha } => projection / alpha,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LabeledCoefficient {
    pub label: Label,
    pub mode: (i64, usize),
    pub lambda: C64,
    pub coefficient: Coefficient,
}

/// Coefficients of the Galerkin data `g` of `f_t` along every pair.
pub fn coefficients_of(g: &[C64], spectrum: &BlochSpectrum) -> Vec<LabeledCoefficient> {
    spectrum
        .pairs
        .iter()
        .map(|p| {
            let c = p.coefficient(g);
            let coefficient = if p.defective { Coefficient::Defective { projection: c, alpha: p.alpha } } else { Coefficient::Regular(c) };
            LabeledCoefficient { label: p.label, mode: p.mode, lambda: p.lambda, coefficient }
        })
        .collect()
}

pub fn coefficients(f: &CellFunction, spectrum: &BlochSpectrum) -> Vec<LabeledCoefficient> {
    coefficients_of(&f.bloch_coefficients(spectrum.t, spectrum.k_trunc), spectrum)
}
