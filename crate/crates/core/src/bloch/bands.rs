//! Band tracking across a quasimomentum grid.
//!
//! Consecutive nodes are linked by a global minimum-cost assignment against
//! a linear extrapolation of each band, so transversal crossings continue
//! straight through instead of bouncing.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{solve_bloch_with, BlochPair, BlochSpectrum, SolveOptions};
use crate::assignment;
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::OperatorSpec;

#[derive(Clone, Copy, Debug)]
pub struct TrackOptions {
    pub solve: SolveOptions,
    /// Relative margin for the near-tie test on the best assignment.
    pub match_margin: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), match_margin: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct BandTable {
    pub k_trunc: usize,
    pub grid: Vec<f64>,
    pub spectra: Vec<BlochSpectrum>,
    /// `links[i][a]`: index at node `i + 1` continuing pair `a` of node `i`.
    pub links: Vec<Vec<usize>>,
    /// `bands[b][i]`: index of band `b` at node `i`. Bands are numbered by
    /// their canonical position at node 0.
    pub bands: Vec<Vec<usize>>,
}

impl BandTable {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn pair(&self, band: usize, node: usize) -> &BlochPair {
        &self.spectra[node].pairs[self.bands[band][node]]
    }

    pub fn band_eigenvalues(&self, band: usize) -> Vec<C64> {
        (0..self.grid.len()).map(|i| self.pair(band, i).lambda).collect()
    }

    /// Rebuilds the band index from stored spectra and links.
    pub fn from_parts(k_trunc: usize, grid: Vec<f64>, spectra: Vec<BlochSpectrum>, links: Vec<Vec<usize>>) -> Result<Self> {
        if spectra.len() != grid.len() || links.len() + 1 != grid.len().max(1) {
            return Err(Error::InvalidInput("band table parts have inconsistent lengths".into()));
        }
        let nb = spectra.first().map(|s| s.pairs.len()).unwrap_or(0);
        let mut bands: Vec<Vec<usize>> = (0..nb).map(|b| vec![b]).collect();
        for (i, l) in links.iter().enumerate() {
            if l.len() != nb || spectra[i + 1].pairs.len() != nb {
                return Err(Error::InvalidInput(format!("link {i} has wrong length")));
            }
            let mut seen = vec![false; nb];
            for &x in l {
                if x >= nb || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidInput(format!("link {i} is not a bijection")));
                }
            }
            for b in bands.iter_mut() {
                let cur = *b.last().unwrap();
                b.push(l[cur]);
            }
        }
        Ok(Self { k_trunc, grid, spectra, links, bands })
    }
}

/// Solves every node (in parallel) and links neighbours.
pub fn track_bands(spec: &OperatorSpec, grid: &[f64], k_trunc: usize, opts: &TrackOptions) -> Result<BandTable> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("quasimomentum grid must be strictly increasing".into()));
    }
    let spectra: Vec<BlochSpectrum> = grid
        .par_iter()
        .map(|&t| solve_bloch_with(spec, C64::new(t, 0.0), k_trunc, &opts.solve))
        .collect::<Result<_>>()?;
    link_spectra(k_trunc, grid.to_vec(), spectra, opts.match_margin)
}

/// Links precomputed spectra on `grid`. Costs are squared distances to the
/// predictions: with absolute distances, real eigenvalues lying on one side
/// of both predictions would tie exactly.
pub fn link_spectra(k_trunc: usize, grid: Vec<f64>, spectra: Vec<BlochSpectrum>, match_margin: f64) -> Result<BandTable> {
    let nodes = grid.len();
    let mut links = Vec::with_capacity(nodes.saturating_sub(1));
    // prev[a]: index at node i-1 of the band sitting at a on node i.
    let mut prev: Option<Vec<usize>> = None;
    for i in 0..nodes.saturating_sub(1) {
        let cur = &spectra[i].pairs;
        let next = &spectra[i + 1].pairs;
        let pred: Vec<C64> = (0..cur.len())
            .map(|a| match &prev {
                Some(pv) if i > 0 => {
                    let back = spectra[i - 1].pairs[pv[a]].lambda;
                    let r = (grid[i + 1] - grid[i]) / (grid[i] - grid[i - 1]);
                    cur[a].lambda + (cur[a].lambda - back) * r
                }
                _ => cur[a].lambda,
            })
            .collect();
        let cost: Vec<Vec<f64>> = pred.iter().map(|p| next.iter().map(|q| (q.lambda - p).norm_sqr()).collect()).collect();
        let mut sigma = assignment::solve(&cost);
        check_ambiguity(&cost, &mut sigma, cur, next, match_margin).map_err(|_| Error::AmbiguousMatching { node: i, next: i + 1 })?;
        let mut back = vec![0usize; sigma.len()];
        for (a, &b) in sigma.iter().enumerate() {
            back[b] = a;
        }
        prev = Some(back);
        links.push(sigma);
    }
    BandTable::from_parts(k_trunc, grid, spectra, links)
}

/// Resolves near-tied 2-swaps of the best assignment. A swap is immaterial,
/// and accepted, when the two sources or the two targets coincide to
/// eigensolver accuracy at a multiple eigenvalue (`~√ε` relative), or when
/// they form a complex-conjugate pair: a real pair turning complex at a branch
/// point has two equally valid continuations. Otherwise the eigenvector
/// overlaps decide (a crossing close to a node), and a tie in those is an
/// error. Costs are squared distances: a swap counts as tied when its excess
/// cost is within what an eigenvalue error of `margin·scale` can produce.
fn check_ambiguity(cost: &[Vec<f64>], sigma: &mut [usize], cur: &[BlochPair], next: &[BlochPair], margin: f64) -> std::result::Result<(), ()> {
    let n = sigma.len();
    let coincide = |x: C64, y: C64, tol: f64| (x - y).norm() <= tol || ((x - y.conj()).norm() <= tol && x.im.abs() > tol);
    let overlap = |x: &BlochPair, y: &BlochPair| linalg::inner(&x.psi, &y.psi).norm();
    for a in 0..n {
        for b in a + 1..n {
            let scale = 1.0 + cur[a].lambda.norm().max(cur[b].lambda.norm());
            let delta = cost[a][sigma[b]] + cost[b][sigma[a]] - cost[a][sigma[a]] - cost[b][sigma[b]];
            // Largest change of `delta` when every eigenvalue moves by `eta`.
            let eta = margin * scale;
            let spread: f64 = [cost[a][sigma[a]], cost[b][sigma[b]], cost[a][sigma[b]], cost[b][sigma[a]]].iter().map(|c| c.sqrt()).sum();
            if delta > 2.0 * eta * spread + 4.0 * eta * eta {
                continue;
            }
            let tol = (margin * scale).max(4.0 * f64::EPSILON.sqrt() * scale);
            if coincide(cur[a].lambda, cur[b].lambda, tol) || coincide(next[sigma[a]].lambda, next[sigma[b]].lambda, tol) {
                continue;
            }
            let keep = overlap(&cur[a], &next[sigma[a]]) + overlap(&cur[b], &next[sigma[b]]);
            let swap = overlap(&cur[a], &next[sigma[b]]) + overlap(&cur[b], &next[sigma[a]]);
            if swap > keep + OVERLAP_MARGIN {
                sigma.swap(a, b);
            } else if keep <= swap + OVERLAP_MARGIN {
                return Err(());
            }
        }
    }
    Ok(())
}

/// Minimum difference in summed eigenvector overlaps that settles a tie.
const OVERLAP_MARGIN: f64 = 0.1;
