//! Dense and matrix-free solves for the interior systems.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::operator::OperatorSpec;

/// Largest interior size solved with dense factorizations.
pub const DENSE_LIMIT: usize = 5000;

/// Symmetric Toeplitz interior matrix `A` with `A_ii = -(2 sum w + tail_mass)`
/// and `A_{i,i+-m} = w_m`.
pub(crate) fn interior_matrix(spec: &OperatorSpec, n: usize) -> Mat<f64> {
    let mut col = vec![0.0; n];
    col[0] = spec.diagonal();
    for (m, c) in col.iter_mut().enumerate().skip(1) {
        *c = spec.weight(m);
    }
    Mat::from_fn(n, n, |r, c| col[r.abs_diff(c)])
}

/// `mat * v` for a dense matrix.
pub(crate) fn matvec(mat: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    from_column(&(mat * to_column(v)))
}

fn to_column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn from_column(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Cholesky factor of `-A`, reused across right-hand sides.
pub(crate) struct NegCholesky {
    llt: faer::linalg::solvers::Llt<f64>,
}

impl NegCholesky {
    pub fn new(spec: &OperatorSpec, n: usize) -> Result<Self> {
        let mut a = interior_matrix(spec, n);
        for j in 0..n {
            for i in 0..n {
                a[(i, j)] = -a[(i, j)];
            }
        }
        let llt = a.as_ref().llt(Side::Lower).map_err(|_| Error::SingularSystem {
            condition: f64::INFINITY,
        })?;
        Ok(NegCholesky { llt })
    }

    /// Solves `A x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let neg: Vec<f64> = rhs.iter().map(|v| -v).collect();
        let x = from_column(&self.llt.solve(&to_column(&neg)));
        check_finite(&x)?;
        Ok(x)
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::SingularSystem {
            condition: f64::INFINITY,
        })
    }
}

/// Solves a general dense system by partial-pivoting LU.
pub(crate) fn lu_solve(mat: &Mat<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = mat.as_ref().partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !condition.is_finite() {
        return Err(Error::SingularSystem { condition });
    }
    let x = from_column(&lu.solve(&to_column(rhs)));
    check_finite(&x).map_err(|_| Error::SingularSystem { condition })?;
    Ok(x)
}

/// Conjugate gradients for the symmetric negative definite `A`, run on `-A`.
pub(crate) fn cg_negative<F>(matvec: F, rhs: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = rhs.len();
    let neg_op = |v: &[f64]| -> Vec<f64> { matvec(v).into_iter().map(|y| -y).collect() };
    let b: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let mut x = x0.to_vec();
    let ax = neg_op(&x);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let bnorm = dot(&b, &b).sqrt().max(1e-300);
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let rel = rr.sqrt() / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok(x);
        }
        let ap = neg_op(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    let last = rr.sqrt() / bnorm;
    if last <= tol {
        return Ok(x);
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    #[test]
    fn cholesky_and_cg_agree() {
        let g = Grid1D::new(-1.0, 1.0, 40, 2.0).unwrap();
        let spec = OperatorSpec::build(0.7, &g, 100.0).unwrap();
        let n = g.n_interior();
        let a = interior_matrix(&spec, n);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let chol = NegCholesky::new(&spec, n).unwrap().solve(&rhs).unwrap();
        let lu = lu_solve(&a, &rhs).unwrap();
        let mv = |v: &[f64]| -> Vec<f64> {
            (0..n).map(|i| (0..n).map(|j| a[(i, j)] * v[j]).sum()).collect()
        };
        let cg = cg_negative(mv, &rhs, &vec![0.0; n], 1e-13, 500).unwrap();
        for i in 0..n {
            assert!((chol[i] - lu[i]).abs() < 1e-10);
            assert!((chol[i] - cg[i]).abs() < 1e-9);
        }
    }
}
