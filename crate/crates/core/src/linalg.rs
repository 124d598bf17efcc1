//! Linear solvers shared by the steady-state routes.

use faer::prelude::Solve;
use faer::sparse::{linalg::solvers::Lu, SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

use crate::hilbert::SparseOperator;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Sparse LU factorization of a square complex matrix.
pub struct SparseLu {
    lu: Lu<usize, Complex64>,
    dim: usize,
}

impl SparseLu {
    pub fn new(op: &SparseOperator) -> Result<Self> {
        if op.rows() != op.cols() {
            return Err(Error::DimensionMismatch { op: "SparseLu::new", left: (op.rows(), op.cols()), right: (op.cols(), op.rows()) });
        }
        let entries: Vec<_> = op.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let m = SparseColMat::<usize, Complex64>::try_new_from_triplets(op.rows(), op.cols(), &entries)
            .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Linalg(format!("{e:?}")))?;
        Ok(Self { lu, dim: op.rows() })
    }

    /// Solves `A x = b`; fails if the factorization produced non-finite values.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = Mat::from_fn(self.dim, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        let out: Vec<Complex64> = (0..self.dim).map(|i| x[(i, 0)]).collect();
        if out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Linalg("sparse LU produced non-finite values (singular matrix)".into()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    /// Target for `‖b − A x‖ / ‖b‖`.
    pub tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { restart: 80, max_iterations: 4000, tolerance: 1e-11 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with right preconditioning. `x` holds the initial guess on
/// entry and the solution on exit. The reported residual is recomputed
/// explicitly rather than taken from the Hessenberg recurrence.
pub fn gmres<A, M>(mut apply: A, mut precondition: M, b: &[Complex64], x: &mut [Complex64], opts: GmresOptions) -> GmresOutcome
where
    A: FnMut(&[Complex64], &mut [Complex64]),
    M: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(ZERO);
        return GmresOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut r = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![ZERO; m]; m + 1];
    let mut cs = vec![ZERO; m];
    let mut sn = vec![ZERO; m];
    let mut iterations = 0;

    let residual = |apply: &mut A, x: &[Complex64], r: &mut [Complex64]| {
        apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm(r)
    };

    let mut rnorm = residual(&mut apply, x, &mut r);
    loop {
        if rnorm / bnorm <= opts.tolerance || iterations >= opts.max_iterations {
            return GmresOutcome { iterations, relative_residual: rnorm / bnorm, converged: rnorm / bnorm <= opts.tolerance };
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / rnorm).collect());
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::from(rnorm);
        let mut k_used = 0;
        for k in 0..m {
            precondition(&basis[k], &mut z);
            apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(v, &w);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hik * vj;
                }
            }
            // one reorthogonalization pass keeps the basis clean for long cycles
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                h[i][k] += c;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= c * vj;
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = Complex64::from(wn);
            for i in 0..k {
                let (a, bb) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i].conj() * a + sn[i].conj() * bb;
                h[i + 1][k] = -sn[i] * a + cs[i] * bb;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = Complex64::from(1.0);
                sn[k] = ZERO;
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            h[k][k] = cs[k].conj() * a + sn[k].conj() * bb;
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            iterations += 1;
            k_used = k + 1;
            let estimate = g[k + 1].norm() / bnorm;
            if estimate <= opts.tolerance * 0.5 || wn == 0.0 || iterations >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] == ZERO { ZERO } else { s / h[i][i] };
        }
        w.fill(ZERO);
        for (yi, v) in y.iter().zip(&basis) {
            for (wj, vj) in w.iter_mut().zip(v) {
                *wj += yi * vj;
            }
        }
        precondition(&w, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        let previous = rnorm;
        rnorm = residual(&mut apply, x, &mut r);
        if !rnorm.is_finite() || (k_used == 0 && rnorm >= previous) {
            return GmresOutcome { iterations, relative_residual: rnorm / bnorm, converged: false };
        }
    }
}
