//! `Lambda_F = M_F^{1/2}`, the unitary `R` with `Omega_f = R Lambda_F`, and the
//! contraction semigroup `Z(t) = R* T_u(t) R`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{toeplitz_adjoint_shift, toeplitz_shift, unitary_evolve};
use crate::grid::{inner, GridSpec, LatticeTime, Space, StateVector};
use crate::linop::{spectral_synthesis, LinOp};
use crate::lyapunov::{build_m_f, build_omega};

/// Eigenvalues down to this value are treated as rounding noise and clipped to 0.
pub const NEGATIVE_EIG_TOL: f64 = 1e-10;

/// Positive square root through the Hermitian eigendecomposition.
pub fn build_lambda(m_f: &LinOp) -> Result<LinOp> {
    if m_f.domain != m_f.codomain {
        return Err(Error::DimensionMismatch("square root of a map between different spaces".into()));
    }
    let defect = m_f.hermitian_defect();
    if defect > NEGATIVE_EIG_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let (vals, vecs) = m_f.eigh()?;
    if vals[0] < -NEGATIVE_EIG_TOL {
        return Err(Error::NegativeEigenvalue(vals[0]));
    }
    let roots: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    LinOp::new(m_f.grid, m_f.domain, m_f.domain, spectral_synthesis(&vecs, &roots))
}

/// SVD `Omega_f = U S V*` and the polar factors built from it.
pub struct PolarFactors {
    pub u: Mat<Complex64>,
    pub s: Vec<f64>,
    pub v: Mat<Complex64>,
}

impl PolarFactors {
    pub fn new(omega: &LinOp) -> Result<Self> {
        if omega.matrix.nrows() != omega.matrix.ncols() {
            return Err(Error::DimensionMismatch("polar decomposition needs a square map".into()));
        }
        let a = &omega.matrix;
        let d = a.ncols();
        let tol = 1e-12 * a.norm_l2().max(1.0);
        // The SVD occasionally loses accuracy on this matrix family; column
        // phases D change nothing (a D = U S W* gives a = U S (D W)*) but
        // perturb the iteration enough to recover.
        for attempt in 0..4 {
            let phase = |k: usize| Complex64::from_polar(1.0, 0.7 * (attempt * k) as f64);
            let scrambled = Mat::from_fn(d, d, |i, j| a[(i, j)] * phase(j));
            let svd = scrambled
                .svd()
                .map_err(|_| Error::Decomposition("singular value decomposition"))?;
            let sv = svd.S().column_vector();
            let s: Vec<f64> = (0..sv.nrows()).map(|i| sv[i].re).collect();
            let u = svd.U().to_owned();
            let v = Mat::from_fn(d, d, |i, j| phase(i) * svd.V()[(i, j)]);
            let us = Mat::from_fn(d, d, |i, j| u[(i, j)] * s[j]);
            if (&us * v.adjoint() - a).norm_l2() <= tol {
                return Ok(PolarFactors { u, s, v });
            }
        }
        Err(Error::Decomposition("singular value decomposition did not reconstruct the input"))
    }

    /// `U V*`.
    pub fn unitary(&self) -> Mat<Complex64> {
        &self.u * self.v.adjoint()
    }

    /// `V S V* = (Omega_f* Omega_f)^{1/2}`.
    pub fn positive(&self) -> Mat<Complex64> {
        spectral_synthesis(&self.v, &self.s)
    }
}

/// The unitary polar factor `R` of `omega` (`HalfLinePos -> HardyPlus`).
///
/// `lambda` only fixes the grid and spaces: `R` is `U V*` from the SVD of
/// `omega`, never `omega * lambda^{-1}`.
pub fn build_isometry(omega: &LinOp, lambda: &LinOp) -> Result<LinOp> {
    if omega.grid != lambda.grid {
        return Err(Error::GridMismatch);
    }
    if lambda.domain != omega.domain || lambda.codomain != omega.domain {
        return Err(Error::DimensionMismatch("lambda must act on the domain of omega".into()));
    }
    let p = PolarFactors::new(omega)?;
    LinOp::new(omega.grid, omega.domain, omega.codomain, p.unitary())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntertwiningResidual {
    /// `max ‖Lambda u(t) psi − Z(t) Lambda psi‖ / ‖psi‖`.
    pub forward: f64,
    /// `max |(phi, u(−t) Lambda psi) − (phi, Lambda Z*(t) psi)| / (‖phi‖ ‖psi‖)`.
    pub adjoint: f64,
}

/// Dense-tier representation: `Omega_f`, `M_F`, `Lambda_F`, `R` on one grid.
pub struct IrreversibleRep {
    pub grid: GridSpec,
    pub omega: LinOp,
    pub m_f: LinOp,
    /// `Lambda_F` as the positive polar factor `V S V*`.
    pub lambda: LinOp,
    pub r: LinOp,
    /// Singular values of `Omega_f`, descending.
    pub singular_values: Vec<f64>,
}

impl IrreversibleRep {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        let omega = build_omega(grid);
        let m_f = build_m_f(grid);
        let p = PolarFactors::new(&omega)?;
        let lambda = LinOp::new(*grid, Space::HalfLinePos, Space::HalfLinePos, p.positive())?;
        let r = LinOp::new(*grid, Space::HalfLinePos, Space::HardyPlus, p.unitary())?;
        Ok(IrreversibleRep {
            grid: *grid,
            omega,
            m_f,
            lambda,
            r,
            singular_values: p.s,
        })
    }

    fn dim(&self) -> usize {
        self.grid.dim(Space::HalfLinePos)
    }

    fn shift_rows(&self, m: &Mat<Complex64>, t: LatticeTime, up: bool) -> Mat<Complex64> {
        let s = t.steps * self.grid.k_dim;
        let d = m.nrows();
        let zero = Complex64::new(0.0, 0.0);
        Mat::from_fn(d, m.ncols(), |i, j| {
            if up {
                if i + s < d {
                    m[(i + s, j)]
                } else {
                    zero
                }
            } else if i >= s {
                m[(i - s, j)]
            } else {
                zero
            }
        })
    }

    /// Dense `T_u(t)` on Hardy coordinates (truncated left shift).
    pub fn toeplitz_matrix(&self, t: LatticeTime) -> LinOp {
        let d = self.dim();
        let m = self.shift_rows(&Mat::identity(d, d), t, true);
        LinOp::new(self.grid, Space::HardyPlus, Space::HardyPlus, m).unwrap()
    }

    /// `Z(t) = R* T_u(t) R`.
    pub fn z_matrix(&self, t: LatticeTime) -> LinOp {
        let tr = self.shift_rows(&self.r.matrix, t, true);
        LinOp::new(self.grid, Space::HalfLinePos, Space::HalfLinePos, self.r.matrix.adjoint() * &tr).unwrap()
    }

    /// `Z*(t) = R* T_u(t)* R`.
    pub fn z_adjoint_matrix(&self, t: LatticeTime) -> LinOp {
        let tr = self.shift_rows(&self.r.matrix, t, false);
        LinOp::new(self.grid, Space::HalfLinePos, Space::HalfLinePos, self.r.matrix.adjoint() * &tr).unwrap()
    }

    fn z_apply(&self, psi: &StateVector, t: LatticeTime, up: bool) -> Result<StateVector> {
        psi.expect_space(Space::HalfLinePos)?;
        let h = self.r.apply(psi)?;
        let shifted = if up {
            toeplitz_shift(&h, t.steps)?
        } else {
            toeplitz_adjoint_shift(&h, t.steps)?
        };
        self.r.adjoint().apply(&shifted)
    }

    pub fn z_evolve(&self, psi: &StateVector, t: LatticeTime) -> Result<StateVector> {
        self.z_apply(psi, t, true)
    }

    pub fn z_adjoint(&self, psi: &StateVector, t: LatticeTime) -> Result<StateVector> {
        self.z_apply(psi, t, false)
    }

    /// `R* h`: carries a Hardy state into the irreversible representation.
    pub fn transport(&self, h: &StateVector) -> Result<StateVector> {
        self.r.adjoint().apply(h)
    }

    pub fn intertwining_residual(&self, t: LatticeTime, states: &[StateVector]) -> Result<IntertwiningResidual> {
        let mut forward: f64 = 0.0;
        let mut lhs_adj = Vec::with_capacity(states.len());
        let mut rhs_adj = Vec::with_capacity(states.len());
        for psi in states {
            let lp = self.lambda.apply(psi)?;
            let lhs = self.lambda.apply(&unitary_evolve(psi, t.time)?)?;
            let rhs = self.z_evolve(&lp, t)?;
            forward = forward.max(lhs.sub(&rhs)?.norm() / psi.norm());
            lhs_adj.push(unitary_evolve(&lp, -t.time)?);
            rhs_adj.push(self.lambda.apply(&self.z_adjoint(psi, t)?)?);
        }
        let mut adjoint: f64 = 0.0;
        for phi in states {
            for (i, psi) in states.iter().enumerate() {
                let d = inner(phi, &lhs_adj[i])? - inner(phi, &rhs_adj[i])?;
                adjoint = adjoint.max(d.norm() / (phi.norm() * psi.norm()));
            }
        }
        Ok(IntertwiningResidual { forward, adjoint })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::linop::identity_defect;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rep() -> IrreversibleRep {
        IrreversibleRep::new(&make_grid(128, 8.0, 1).unwrap()).unwrap()
    }

    #[test]
    fn square_root_and_polar_identities() {
        let rep = rep();
        let sq = rep.lambda.compose(&rep.lambda).unwrap();
        assert!(sq.distance(&rep.m_f).unwrap() < 1e-12);
        let r = &rep.r.matrix;
        assert!(identity_defect(&(r.adjoint() * r)) < 1e-12);
        assert!(identity_defect(&(r * r.adjoint())) < 1e-12);
        let rl = rep.r.compose(&rep.lambda).unwrap();
        assert!(rl.distance(&rep.omega).unwrap() < 1e-12);
        // eigen route agrees with the polar route
        let eig = build_lambda(&rep.m_f).unwrap();
        assert!(eig.compose(&eig).unwrap().distance(&rep.m_f).unwrap() < 1e-10);
        assert!(eig.distance(&rep.lambda).unwrap() < 1e-6);
        assert!(build_isometry(&rep.omega, &eig).unwrap().distance(&rep.r).unwrap() < 1e-12);
    }

    #[test]
    fn eigenvectors_scale_by_root() {
        let rep = rep();
        let lam = build_lambda(&rep.m_f).unwrap();
        let (vals, vecs) = rep.m_f.eigh().unwrap();
        for i in [0, 10, 40, 63] {
            let v = StateVector::from_coords(rep.grid, Space::HalfLinePos, vecs.col_as_slice(i).to_vec()).unwrap();
            let lv = lam.apply(&v).unwrap();
            let expect = v.scale(c(vals[i].max(0.0).sqrt(), 0.0));
            assert!(lv.sub(&expect).unwrap().norm() < 1e-10 * v.norm());
        }
    }

    #[test]
    fn r_extends_regularized_inverse() {
        let rep = rep();
        let (vals, vecs) = rep.lambda.eigh().unwrap();
        for (i, &l) in vals.iter().enumerate() {
            if l <= 1e-6 {
                continue;
            }
            let q = StateVector::from_coords(rep.grid, Space::HalfLinePos, vecs.col_as_slice(i).to_vec()).unwrap();
            let rq = rep.r.apply(&q).unwrap();
            let tilde = rep.omega.apply(&q).unwrap().scale(c(1.0 / l, 0.0));
            assert!(rq.sub(&tilde).unwrap().norm() < 1e-6, "lambda = {l}");
        }
    }

    #[test]
    fn bad_inputs() {
        let g = make_grid(16, 2.0, 1).unwrap();
        let m = Mat::from_fn(8, 8, |i, j| c(i as f64, j as f64));
        let op = LinOp::new(g, Space::HalfLinePos, Space::HalfLinePos, m).unwrap();
        assert!(matches!(build_lambda(&op), Err(Error::NotHermitian(_))));
        let neg = LinOp::identity(g, Space::HalfLinePos).scale(-1.0);
        assert!(matches!(build_lambda(&neg), Err(Error::NegativeEigenvalue(_))));
        let om = build_omega(&g);
        let other = LinOp::identity(make_grid(32, 2.0, 1).unwrap(), Space::HalfLinePos);
        assert!(build_isometry(&om, &other).is_err());
    }

    #[test]
    fn z_semigroup_matrix_identities() {
        let rep = rep();
        let z0 = rep.z_matrix(rep.grid.lattice_steps(0));
        assert!(identity_defect(&z0.matrix) < 1e-12);
        let (a, b) = (rep.grid.lattice_steps(5), rep.grid.lattice_steps(9));
        let zab = rep.z_matrix(a).compose(&rep.z_matrix(b)).unwrap();
        assert!(zab.distance(&rep.z_matrix(rep.grid.lattice_steps(14))).unwrap() < 1e-12);
        // R Z R* = T
        let t = rep.z_matrix(a);
        let back = &rep.r.matrix * &t.matrix * rep.r.matrix.adjoint();
        assert!((&back - &rep.toeplitz_matrix(a).matrix).norm_l2() < 1e-12);
        // adjoint matrix is the conjugate transpose
        assert!(rep.z_adjoint_matrix(a).distance(&t.adjoint()).unwrap() < 1e-13);
        assert_eq!(rep.z_matrix(rep.grid.lattice_steps(64)).frobenius(), 0.0);
    }

    proptest! {
        #[test]
        fn z_norms_never_grow(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64)) {
            let rep = rep();
            let psi = StateVector::new(rep.grid, Space::HalfLinePos, a.iter().map(|&(x, y)| c(x, y)).collect()).unwrap();
            let mut prev = psi.norm();
            for m in 0..=64 {
                let z = rep.z_evolve(&psi, rep.grid.lattice_steps(m)).unwrap();
                prop_assert!(z.norm() <= prev * (1.0 + 1e-12) + 1e-14);
                prev = z.norm();
            }
            prop_assert!(prev <= 1e-12);
            // matrix and vector routes agree
            let t = rep.grid.lattice_steps(7);
            let zm = rep.z_matrix(t).apply(&psi).unwrap();
            prop_assert!(zm.sub(&rep.z_evolve(&psi, t).unwrap()).unwrap().norm() <= 1e-12 * psi.norm());
            let za = rep.z_adjoint_matrix(t).apply(&psi).unwrap();
            prop_assert!(za.sub(&rep.z_adjoint(&psi, t).unwrap()).unwrap().norm() <= 1e-12 * psi.norm());
        }

        #[test]
        fn quadratic_form_through_lambda(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64)) {
            let rep = rep();
            let psi = StateVector::new(rep.grid, Space::HalfLinePos, a.iter().map(|&(x, y)| c(x, y)).collect()).unwrap();
            let q = inner(&psi, &rep.m_f.apply(&psi).unwrap()).unwrap().re;
            let l = rep.lambda.apply(&psi).unwrap().norm_sqr();
            prop_assert!((q - l).abs() <= 1e-10 * psi.norm_sqr());
        }
    }
}
