//! Dense operators between the discrete spaces.
//!
//! Matrices act on orthonormal coordinates `amplitude * sqrt(weight)`, so
//! the Hilbert-space adjoint is the conjugate transpose even between spaces
//! with different quadrature weights.

use faer::{Mat, Side as EigSide};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Space, StateVector};

/// Relative Hermiticity defect allowed for the `hermitian` flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LinOp {
    pub grid: GridSpec,
    pub domain: Space,
    pub codomain: Space,
    pub matrix: Mat<Complex64>,
    pub hermitian: bool,
}

impl LinOp {
    pub fn new(grid: GridSpec, domain: Space, codomain: Space, matrix: Mat<Complex64>) -> Result<Self> {
        if matrix.nrows() != grid.dim(codomain) || matrix.ncols() != grid.dim(domain) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for {:?} -> {:?}",
                matrix.nrows(),
                matrix.ncols(),
                domain,
                codomain
            )));
        }
        let mut op = LinOp {
            grid,
            domain,
            codomain,
            matrix,
            hermitian: false,
        };
        op.hermitian = domain == codomain && op.hermitian_defect() <= HERMITIAN_TOL;
        Ok(op)
    }

    pub fn identity(grid: GridSpec, space: Space) -> Self {
        let n = grid.dim(space);
        LinOp {
            grid,
            domain: space,
            codomain: space,
            matrix: Mat::identity(n, n),
            hermitian: true,
        }
    }

    pub fn zeros(grid: GridSpec, domain: Space, codomain: Space) -> Self {
        LinOp {
            grid,
            domain,
            codomain,
            matrix: Mat::zeros(grid.dim(codomain), grid.dim(domain)),
            hermitian: domain == codomain,
        }
    }

    /// `‖A − A*‖_F / ‖A‖_F` (0 for the zero matrix).
    pub fn hermitian_defect(&self) -> f64 {
        if self.matrix.nrows() != self.matrix.ncols() {
            return f64::INFINITY;
        }
        let scale = self.matrix.norm_l2();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.adjoint()).norm_l2() / scale
    }

    pub fn adjoint(&self) -> LinOp {
        LinOp {
            grid: self.grid,
            domain: self.codomain,
            codomain: self.domain,
            matrix: self.matrix.adjoint().to_owned(),
            hermitian: self.hermitian,
        }
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &LinOp) -> Result<LinOp> {
        if self.grid != rhs.grid {
            return Err(Error::GridMismatch);
        }
        if rhs.codomain != self.domain {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {:?} -> {:?} after {:?} -> {:?}",
                self.domain, self.codomain, rhs.domain, rhs.codomain
            )));
        }
        LinOp::new(self.grid, rhs.domain, self.codomain, &self.matrix * &rhs.matrix)
    }

    fn check_like(&self, other: &LinOp) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::DimensionMismatch("operands act between different spaces".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &LinOp) -> Result<LinOp> {
        self.check_like(other)?;
        LinOp::new(self.grid, self.domain, self.codomain, &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &LinOp) -> Result<LinOp> {
        self.check_like(other)?;
        LinOp::new(self.grid, self.domain, self.codomain, &self.matrix - &other.matrix)
    }

    pub fn scale(&self, c: f64) -> LinOp {
        LinOp {
            matrix: faer::Scale(Complex64::new(c, 0.0)) * &self.matrix,
            ..self.clone()
        }
    }

    pub fn apply(&self, f: &StateVector) -> Result<StateVector> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if f.space() != self.domain {
            return Err(Error::SpaceMismatch {
                expected: self.domain,
                found: f.space(),
            });
        }
        let y = matvec(&self.matrix, &f.coords());
        StateVector::from_coords(self.grid, self.codomain, y)
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &LinOp) -> Result<f64> {
        self.check_like(other)?;
        Ok((&self.matrix - &other.matrix).norm_l2())
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm_l2()
    }

    /// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
    pub fn eigh(&self) -> Result<(Vec<f64>, Mat<Complex64>)> {
        if self.domain != self.codomain {
            return Err(Error::DimensionMismatch("eigendecomposition of a non-square map".into()));
        }
        let e = self
            .matrix
            .self_adjoint_eigen(EigSide::Lower)
            .map_err(|_| Error::Decomposition("Hermitian eigendecomposition"))?;
        let s = e.S().column_vector();
        let vals = (0..s.nrows()).map(|i| s[i].re).collect();
        Ok((vals, e.U().to_owned()))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let s = self
            .matrix
            .singular_values()
            .map_err(|_| Error::Decomposition("singular value decomposition"))?;
        Ok(s)
    }
}

pub(crate) fn matvec(m: &Mat<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (yi, mij) in y.iter_mut().zip(m.col_as_slice(j)) {
            *yi += mij * xj;
        }
    }
    y
}

/// `A ⊗ I_k` in the `bin * k + a` layout.
pub(crate) fn kron_fiber(a: &Mat<Complex64>, k: usize) -> Mat<Complex64> {
    if k == 1 {
        return a.clone();
    }
    Mat::from_fn(a.nrows() * k, a.ncols() * k, |i, j| {
        if i % k == j % k {
            a[(i / k, j / k)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `V diag(d) V*` for real `d`.
pub(crate) fn spectral_synthesis(v: &Mat<Complex64>, d: &[f64]) -> Mat<Complex64> {
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * d[j]);
    &scaled * v.adjoint()
}

/// Frobenius norm of `A − I`.
pub(crate) fn identity_defect(a: &Mat<Complex64>) -> f64 {
    let n = a.nrows();
    (a - Mat::<Complex64>::identity(n, a.ncols())).norm_l2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, make_grid};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn adjoint_matches_inner_product_across_weights() {
        let g = make_grid(16, 3.0, 1).unwrap();
        let n = g.dim(Space::HalfLinePos);
        let m = Mat::from_fn(n, n, |i, j| c((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.05));
        let a = LinOp::new(g, Space::HalfLinePos, Space::HardyPlus, m).unwrap();
        assert!(!a.hermitian);
        let psi = StateVector::new(g, Space::HalfLinePos, (0..n).map(|i| c(i as f64, 1.0)).collect()).unwrap();
        let h = StateVector::new(g, Space::HardyPlus, (0..n).map(|i| c(1.0, -(i as f64))).collect()).unwrap();
        let lhs = inner(&h, &a.apply(&psi).unwrap()).unwrap();
        let rhs = inner(&a.adjoint().apply(&h).unwrap(), &psi).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    }

    #[test]
    fn flags_and_dimensions() {
        let g = make_grid(8, 1.0, 2).unwrap();
        let id = LinOp::identity(g, Space::FullLine);
        assert!(id.hermitian);
        assert_eq!(id.matrix.nrows(), 16);
        assert!(LinOp::new(g, Space::FullLine, Space::FullLine, Mat::zeros(3, 3)).is_err());
        let z = LinOp::zeros(g, Space::HalfLinePos, Space::HardyPlus);
        assert!(id.compose(&z).is_err());
        let k = kron_fiber(&Mat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 0.0)), 2);
        assert_eq!(k[(2, 0)], c(1.0, 0.0));
        assert_eq!(k[(3, 1)], c(1.0, 0.0));
        assert_eq!(k[(3, 0)], c(0.0, 0.0));
    }
}
