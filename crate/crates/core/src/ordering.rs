//! Past and future projections of the irreversible representation, the
//! spectral measure they generate and the temporal-ordering operator.
//!
//! `P_[t = Z*(t) Z(t) = R* T_u(t)* T_u(t) R` is an exact projection on the
//! lattice, and the past projection is its complement `P_t] = I − P_[t`. On the
//! finite window the commutator `[Z(t), Z*(t)]` differs from it by
//! `R* Q R`, with `Q` the projection onto the top `t / dtau` Hardy bins, so the
//! commutator form is checked on states that leave that band empty.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::unitary_evolve;
use crate::grid::{inner, LatticeTime, Space, StateVector};
use crate::lambda::IrreversibleRep;
use crate::linop::{spectral_synthesis, LinOp, HERMITIAN_TOL};

/// Eigenvalues of a computed projection must lie this close to 0 or 1.
pub const CLUSTER_GAP: f64 = 1e-4;

pub fn future_projection(rep: &IrreversibleRep, t: LatticeTime) -> LinOp {
    let z = rep.z_matrix(t);
    LinOp::new(rep.grid, Space::HalfLinePos, Space::HalfLinePos, z.matrix.adjoint() * &z.matrix).unwrap()
}

pub fn past_projection(rep: &IrreversibleRep, t: LatticeTime) -> LinOp {
    LinOp::identity(rep.grid, Space::HalfLinePos)
        .sub(&future_projection(rep, t))
        .unwrap()
}

/// `[Z(t), Z*(t)] = Z Z* − Z* Z`, evaluated literally.
pub fn commutator(rep: &IrreversibleRep, t: LatticeTime) -> LinOp {
    let z = rep.z_matrix(t);
    let m = &z.matrix * z.matrix.adjoint() - z.matrix.adjoint() * &z.matrix;
    LinOp::new(rep.grid, Space::HalfLinePos, Space::HalfLinePos, m).unwrap()
}

/// Rank of a projection by counting eigenvalues above 1/2.
///
/// Fails if any eigenvalue sits further than [`CLUSTER_GAP`] from both 0 and 1.
pub fn projection_rank(p: &LinOp) -> Result<usize> {
    let (vals, _) = p.eigh()?;
    if let Some(&bad) = vals.iter().find(|&&v| v.abs().min((v - 1.0).abs()) >= CLUSTER_GAP) {
        return Err(Error::ClusterGap(bad));
    }
    Ok(vals.iter().filter(|&&v| v > 0.5).count())
}

#[derive(Debug, Clone)]
pub struct ProjectionFamily {
    pub times: Vec<LatticeTime>,
    /// `P_t]` at each time.
    pub projections: Vec<LinOp>,
    /// `mu_T((t_k, t_{k+1}]) = P_{t_{k+1}]} − P_{t_k]}`.
    pub increments: Vec<LinOp>,
    pub ranks: Vec<usize>,
}

pub fn spectral_measure(rep: &IrreversibleRep, times: &[LatticeTime]) -> Result<ProjectionFamily> {
    if times.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if times[0].steps != 0 || times.windows(2).any(|w| w[1].steps <= w[0].steps) {
        return Err(Error::NonMonotoneGrid);
    }
    let projections: Vec<LinOp> = times.par_iter().map(|&t| past_projection(rep, t)).collect();
    let ranks = projections
        .iter()
        .map(projection_rank)
        .collect::<Result<Vec<usize>>>()?;
    let increments = projections
        .windows(2)
        .map(|w| w[1].sub(&w[0]))
        .collect::<Result<Vec<LinOp>>>()?;
    Ok(ProjectionFamily {
        times: times.to_vec(),
        projections,
        increments,
        ranks,
    })
}

#[derive(Debug, Clone)]
pub struct OrderingOperator {
    pub matrix: LinOp,
    pub time_grid: Vec<f64>,
    pub truncation_time: f64,
}

/// `T = Σ_k t_mid(k) mu_T((t_k, t_{k+1}]) + t_max (I − P_{t_max]})`.
///
/// The last term puts the future beyond the window at the truncation time,
/// so the spectral projections of `T` reproduce the whole family.
pub fn assemble_t(family: &ProjectionFamily) -> Result<OrderingOperator> {
    let last = family.projections.last().ok_or(Error::EmptyFamily)?;
    let grid = last.grid;
    let t_max = family.times.last().unwrap().time;
    let mut t = LinOp::identity(grid, Space::HalfLinePos).sub(last)?.scale(t_max);
    for (k, inc) in family.increments.iter().enumerate() {
        let mid = 0.5 * (family.times[k].time + family.times[k + 1].time);
        t = t.add(&inc.scale(mid))?;
    }
    Ok(OrderingOperator {
        matrix: t,
        time_grid: family.times.iter().map(|t| t.time).collect(),
        truncation_time: t_max,
    })
}

impl OrderingOperator {
    /// Spectral projection of `T` onto eigenvalues strictly below `t`.
    pub fn spectral_projection_below(&self, t: f64) -> Result<LinOp> {
        Ok(self.spectral_projections_below(&[t])?.pop().unwrap())
    }

    /// Same as [`Self::spectral_projection_below`] for many cuts, with one diagonalization.
    pub fn spectral_projections_below(&self, ts: &[f64]) -> Result<Vec<LinOp>> {
        let (vals, vecs) = self.matrix.eigh()?;
        ts.iter()
            .map(|&t| {
                let cut = t - 1e-9 * t.abs().max(1.0);
                let ind: Vec<f64> = vals.iter().map(|&v| if v < cut { 1.0 } else { 0.0 }).collect();
                LinOp::new(self.matrix.grid, Space::HalfLinePos, Space::HalfLinePos, spectral_synthesis(&vecs, &ind))
            })
            .collect()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.matrix.eigh()?.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MatrixElement {
    /// `(phi, u(−t) X u(t) psi)` with `X = Lambda x_lambda Lambda`.
    pub reversible: Complex64,
    /// `(phi⁺, Z*(t) x_lambda Z(t) psi⁺)` with `psi⁺ = P_[t Lambda psi`.
    pub irreversible: Complex64,
    pub difference: f64,
}

fn check_hermitian(x: &LinOp) -> Result<()> {
    if x.domain != Space::HalfLinePos || x.codomain != Space::HalfLinePos {
        return Err(Error::DimensionMismatch("observable must act on HalfLinePos".into()));
    }
    let d = x.hermitian_defect();
    if d > HERMITIAN_TOL {
        return Err(Error::NotHermitian(d));
    }
    Ok(())
}

/// `P_[t f = Z*(t) Z(t) f`.
pub fn future_part(rep: &IrreversibleRep, f: &StateVector, t: LatticeTime) -> Result<StateVector> {
    rep.z_adjoint(&rep.z_evolve(f, t)?, t)
}

pub fn irreversible_matrix_element(
    rep: &IrreversibleRep,
    phi: &StateVector,
    psi: &StateVector,
    x_lambda: &LinOp,
    t: LatticeTime,
) -> Result<MatrixElement> {
    check_hermitian(x_lambda)?;
    let x = rep.lambda.compose(x_lambda)?.compose(&rep.lambda)?;
    let (pt, st) = (unitary_evolve(phi, t.time)?, unitary_evolve(psi, t.time)?);
    let reversible = inner(&pt, &x.apply(&st)?)?;
    let phi_plus = future_part(rep, &rep.lambda.apply(phi)?, t)?;
    let psi_plus = future_part(rep, &rep.lambda.apply(psi)?, t)?;
    let zphi = rep.z_evolve(&phi_plus, t)?;
    let zpsi = rep.z_evolve(&psi_plus, t)?;
    let irreversible = inner(&zphi, &x_lambda.apply(&zpsi)?)?;
    Ok(MatrixElement {
        reversible,
        irreversible,
        difference: (reversible - irreversible).norm(),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Correspondence {
    /// `(psi_t, M_F psi_t)` through the dense `M_F`.
    pub reversible: f64,
    /// `(Lambda psi, P_[t Lambda psi)`.
    pub irreversible: f64,
    /// `|reversible − irreversible| / (psi, M_F psi)`.
    pub relative: f64,
}

pub fn correspondence_check(rep: &IrreversibleRep, psi: &StateVector, t: LatticeTime) -> Result<Correspondence> {
    let st = unitary_evolve(psi, t.time)?;
    let reversible = inner(&st, &rep.m_f.apply(&st)?)?.re;
    let lp = rep.lambda.apply(psi)?;
    let irreversible = inner(&lp, &future_part(rep, &lp, t)?)?.re;
    let scale = inner(psi, &rep.m_f.apply(psi)?)?.re;
    if scale <= 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(Correspondence {
        reversible,
        irreversible,
        relative: (reversible - irreversible).abs() / scale,
    })
}

/// Frobenius norm of `R P_t] R* − [T_u(t), T_u(t)*]`.
///
/// Nonzero on the finite window (the two sides differ by the top-band
/// projection), so it is reported as a diagnostic only.
pub fn transport_defect(rep: &IrreversibleRep, t: LatticeTime) -> f64 {
    let r = &rep.r.matrix;
    let lhs = r * past_projection(rep, t).matrix * r.adjoint();
    let tm = rep.toeplitz_matrix(t).matrix;
    let rhs: Mat<Complex64> = &tm * tm.adjoint() - tm.adjoint() * &tm;
    (&lhs - &rhs).norm_l2()
}
