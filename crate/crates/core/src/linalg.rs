//! Dense complex linear algebra helpers on top of `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{evd_cplx, evd_scratch, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, MatRef, Par};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigenvalues with right eigenvectors (columns, `A r = λ r`) and left
/// eigenvectors (columns, `l^H A = λ l^H`).
pub struct Eigen {
    pub values: Vec<C64>,
    pub right: CMat,
    pub left: CMat,
}

/// Full non-Hermitian eigendecomposition with left and right vectors taken
/// from the same Schur form, so they are paired index by index.
pub fn eig(a: MatRef<'_, C64>) -> Result<Eigen> {
    let n = a.nrows();
    let mut s = Diag::<C64>::zeros(n);
    let mut ul = CMat::zeros(n, n);
    let mut ur = CMat::zeros(n, n);
    let par = Par::Seq;
    let req = evd_scratch::<C64>(n, ComputeEigenvectors::Yes, ComputeEigenvectors::Yes, par, Default::default());
    let mut mem = MemBuffer::new(req);
    evd_cplx(a, s.as_mut(), Some(ul.as_mut()), Some(ur.as_mut()), par, MemStack::new(&mut mem), Default::default())
        .map_err(|_| Error::EigensolveFailure)?;
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::EigensolveFailure);
    }
    Ok(Eigen { values, right: ur, left: ul })
}

/// [`eig`] applied to each connected component of the sparsity graph of
/// `a` (a permutation similarity), with the vectors embedded back.
pub fn eig_blocks(a: MatRef<'_, C64>) -> Result<Eigen> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut comps: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    if comps.len() == 1 {
        return eig(a);
    }
    let mut values = Vec::with_capacity(n);
    let mut right = CMat::zeros(n, n);
    let mut left = CMat::zeros(n, n);
    let mut col0 = 0;
    for idx in comps.values() {
        let sub = CMat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])]);
        let e = eig(sub.as_ref())?;
        for c in 0..idx.len() {
            values.push(e.values[c]);
            for (r, &gi) in idx.iter().enumerate() {
                right[(gi, col0 + c)] = e.right[(r, c)];
                left[(gi, col0 + c)] = e.left[(r, c)];
            }
        }
        col0 += idx.len();
    }
    Ok(Eigen { values, right, left })
}

/// `Σ conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn col(m: &CMat, j: usize) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Determinant by Gaussian elimination with partial pivoting. Rows are
/// pre-scaled by their largest entry so large |λ| does not overflow early.
pub fn det(m: &CMat) -> C64 {
    let n = m.nrows();
    if n == 0 {
        return ONE;
    }
    let mut a: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    // Accumulate the result as mantissa * 2^exp to survive wide scale ranges.
    let mut mant = ONE;
    let mut exp: i32 = 0;
    let fold = |mant: &mut C64, exp: &mut i32, f: C64| {
        *mant *= f;
        let r = mant.norm();
        if r != 0.0 && r.is_finite() {
            let e = r.log2().floor() as i32;
            *mant /= 2f64.powi(e);
            *exp += e;
        }
    };
    for row in a.iter_mut() {
        let s = row.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return ZERO;
        }
        for x in row.iter_mut() {
            *x /= s;
        }
        fold(&mut mant, &mut exp, C64::new(s, 0.0));
    }
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
        if a[p][c].norm() == 0.0 {
            return ZERO;
        }
        if p != c {
            a.swap(p, c);
            mant = -mant;
        }
        let piv = a[c][c];
        fold(&mut mant, &mut exp, piv);
        for r in c + 1..n {
            let f = a[r][c] / piv;
            if f != ZERO {
                for k in c..n {
                    let v = a[c][k];
                    a[r][k] -= f * v;
                }
            }
        }
    }
    mant * 2f64.powi(exp)
}

/// Adjugate via cofactors (`adj(M) M = det(M) I`). Intended for the small
/// monodromy matrices where `n ≤ 8`.
pub fn adjugate(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut adj = CMat::zeros(n, n);
    if n == 1 {
        adj[(0, 0)] = ONE;
        return adj;
    }
    let mut minor = CMat::zeros(n - 1, n - 1);
    for i in 0..n {
        for j in 0..n {
            for (ri, r) in (0..n).filter(|&r| r != i).enumerate() {
                for (ci, c) in (0..n).filter(|&c| c != j).enumerate() {
                    minor[(ri, ci)] = m[(r, c)];
                }
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * det(&minor);
        }
    }
    adj
}

/// Solves `A x = b` for a small dense system; `None` if numerically singular.
pub fn solve(a: &CMat, b: &[C64]) -> Option<Vec<C64>> {
    let n = a.nrows();
    let mut m: Vec<Vec<C64>> = (0..n).map(|i| {
        let mut r: Vec<C64> = (0..n).map(|j| a[(i, j)]).collect();
        r.push(b[i]);
        r
    }).collect();
    let scale = fro(a).max(f64::MIN_POSITIVE);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm()))?;
        if m[p][c].norm() <= 1e-14 * scale {
            return None;
        }
        m.swap(p, c);
        let piv = m[c][c];
        for r in 0..n {
            if r != c {
                let f = m[r][c] / piv;
                for k in c..=n {
                    let v = m[c][k];
                    m[r][k] -= f * v;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Inverse of a small matrix, `None` when singular.
pub fn inverse(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    let mut inv = CMat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![ZERO; n];
        e[j] = ONE;
        let x = solve(a, &e)?;
        for i in 0..n {
            inv[(i, j)] = x[i];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        CMat::from_fn(4, 4, |i, j| C64::new((i * 3 + j) as f64 * 0.37 - 1.0, ((i + 2 * j) % 5) as f64 * 0.21))
    }

    #[test]
    fn eig_left_right_convention() {
        let a = sample();
        let e = eig(a.as_ref()).unwrap();
        for k in 0..4 {
            let r = col(&e.right, k);
            let l = col(&e.left, k);
            for i in 0..4 {
                let ar: C64 = (0..4).map(|j| a[(i, j)] * r[j]).sum();
                assert!((ar - e.values[k] * r[i]).norm() < 1e-10);
                let la: C64 = (0..4).map(|j| l[j].conj() * a[(j, i)]).sum();
                assert!((la - e.values[k] * l[i].conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn det_and_adjugate() {
        let a = sample();
        let d = det(&a);
        let adj = adjugate(&a);
        let prod = &adj * &a;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { d } else { ZERO };
                assert!((prod[(i, j)] - expect).norm() < 1e-10 * (1.0 + d.norm()));
            }
        }
        let inv = inverse(&a).unwrap();
        let id = &inv * &a;
        for i in 0..4 {
            assert!((id[(i, i)] - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn det_of_diagonal_with_huge_entries() {
        let mut a = CMat::zeros(3, 3);
        a[(0, 0)] = C64::new(1e200, 0.0);
        a[(1, 1)] = C64::new(1e-150, 0.0);
        a[(2, 2)] = C64::new(0.0, 2.0);
        let d = det(&a);
        assert!((d - C64::new(0.0, 2e50)).norm() < 1e38);
    }
}
