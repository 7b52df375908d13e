use thiserror::Error;

/// Symmetric positive definite operator applied matrix-free.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Diagonal operator, mostly useful in tests.
pub struct DiagonalOperator(pub Vec<f64>);

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = d * xi;
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("operator is not positive definite (curvature {curvature:e} at iteration {iteration})")]
    Indefinite { iteration: usize, curvature: f64 },
    #[error("dimension mismatch: operator {operator}, vector {vector}")]
    DimensionMismatch { operator: usize, vector: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub rel_tol: f64,
    /// Absolute residual floor; iteration stops once `‖r‖ ≤ max(rel_tol·‖b‖, abs_tol)`.
    pub abs_tol: f64,
    /// Iteration cap; `None` means 10 × dimension.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 0.0, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradient starting from the contents of `x`.
/// `inv_diag` is an optional Jacobi preconditioner (inverse diagonal).
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    rhs: &[f64],
    x: &mut [f64],
    inv_diag: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<CgStats, SolveError> {
    let n = op.dim();
    if rhs.len() != n || x.len() != n {
        return Err(SolveError::DimensionMismatch { operator: n, vector: rhs.len().min(x.len()) });
    }
    let bnorm = dot(rhs, rhs).sqrt();
    if bnorm == 0.0 && opts.abs_tol == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats { iterations: 0, residual: 0.0 });
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let precond = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    };

    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let thresh = (opts.rel_tol * bnorm).max(opts.abs_tol);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut res = dot(&r, &r).sqrt();
    for it in 0..max_iter {
        if res <= thresh {
            return Ok(CgStats { iterations: it, residual: res / scale });
        }
        op.apply(&p, &mut ap);
        let curv = dot(&p, &ap);
        if curv <= 0.0 {
            return Err(SolveError::Indefinite { iteration: it, curvature: curv });
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt();
    }
    if res <= thresh {
        Ok(CgStats { iterations: max_iter, residual: res / scale })
    } else {
        Err(SolveError::NotConverged { iterations: max_iter, residual: res / scale })
    }
}

/// Solves `A x = b` from a zero initial guess with default tolerances.
pub fn solve_spd(op: &dyn LinearOperator, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
    let mut x = vec![0.0; op.dim()];
    conjugate_gradient(op, rhs, &mut x, None, &CgOptions::default())?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense {
        n: usize,
        a: Vec<f64>,
    }

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.n {
                y[i] = (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum();
            }
        }
    }

    #[test]
    fn diagonal_system() {
        let op = DiagonalOperator(vec![2.0, 4.0, 0.5]);
        let x = solve_spd(&op, &[2.0, 2.0, 2.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 0.5, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let op = DiagonalOperator(vec![1.0; 4]);
        assert_eq!(solve_spd(&op, &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn tridiagonal_matches_thomas() {
        let n = 20;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.5;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let op = Dense { n, a };
        let x = solve_spd(&op, &b).unwrap();
        let mut r = vec![0.0; n];
        op.apply(&x, &mut r);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let op = DiagonalOperator((1..=50).map(|i| i as f64).collect());
        let mut x = vec![0.0; 50];
        let err = conjugate_gradient(&op, &[1.0; 50], &mut x, None, &CgOptions { rel_tol: 1e-14, abs_tol: 0.0, max_iter: Some(2) })
            .unwrap_err();
        assert!(matches!(err, SolveError::NotConverged { iterations: 2, residual } if residual > 0.0));
    }

    #[test]
    fn indefinite_is_detected() {
        let op = DiagonalOperator(vec![1.0, -1.0]);
        assert!(matches!(solve_spd(&op, &[0.0, 1.0]), Err(SolveError::Indefinite { .. })));
    }
}
