//! The quasi-affine map `Omega_f = P_+|_{L^2(R+)}`, the Lyapunov operator
//! `M_F = P_{R+} P_+ P_{R+}` and expectation curves along `u_+(t)`.
//!
//! Two tiers: dense matrices for spectra and factorizations, and a
//! matrix-free FFT route for curves on large grids.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{toeplitz_step_with, unitary_evolve};
use crate::grid::{embed, GridSpec, LatticeTime, Space, StateVector};
use crate::hardy::{guard_band_leakage, to_hardy_with, Fourier};
use crate::lambda::PolarFactors;
use crate::linop::{kron_fiber, LinOp};

/// `exp(-i pi m / d)` with `m` reduced modulo `2d`.
fn phase(m: u64, d: u64) -> Complex64 {
    Complex64::from_polar(1.0, -PI * (m % (2 * d)) as f64 / d as f64)
}

/// Dense `Omega_f` from `HalfLinePos` to `HardyPlus`.
///
/// Entry `(k, j)` is `e^{-i sigma_j tau_k} / sqrt(N)` over the positive halves,
/// where `sigma_j tau_k = pi (2j+1)(2k+1) / (2N)`; the phase is reduced in
/// integers so every entry is correctly rounded.
pub fn build_omega(grid: &GridSpec) -> LinOp {
    let n = grid.half();
    let nn = grid.n_sigma as u64;
    let s = 1.0 / (grid.n_sigma as f64).sqrt();
    let m = Mat::from_fn(n, n, |k, j| phase((2 * j as u64 + 1) * (2 * k as u64 + 1), 2 * nn) * s);
    LinOp::new(*grid, Space::HalfLinePos, Space::HardyPlus, kron_fiber(&m, grid.k_dim)).unwrap()
}

/// Dense `M_F` assembled column by column as `P_{R+} P_+ P_{R+}` with FFTs.
pub fn build_m_f(grid: &GridSpec) -> LinOp {
    let fourier = Fourier::new(grid);
    let d = grid.dim(Space::HalfLinePos);
    let cut = d;
    let cols: Vec<Vec<Complex64>> = (0..d)
        .into_par_iter()
        .map(|l| {
            let mut x = vec![Complex64::new(0.0, 0.0); 2 * d];
            x[cut + l] = Complex64::new(1.0, 0.0);
            fourier.forward(&mut x);
            x[..cut].fill(Complex64::new(0.0, 0.0));
            fourier.inverse(&mut x);
            x.split_off(cut)
        })
        .collect();
    let m = Mat::from_fn(d, d, |i, j| cols[j][i]);
    LinOp::new(*grid, Space::HalfLinePos, Space::HalfLinePos, m).unwrap()
}

/// Exact full-rank certificate for `Omega_f`.
///
/// The positive-half block factors as `c D_1 V D_2` with diagonal phases and
/// the Vandermonde matrix `V_{kj} = z_j^k`, `z_j = e^{-2 pi i j / N}`. Its
/// nodes are distinct, so `Omega_f` is nonsingular whatever its smallest
/// computed singular value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankCertificate {
    /// Max-entry residual of `Omega_f − c D_1 V D_2`.
    pub factor_residual: f64,
    /// `min_{i≠j} |z_i − z_j| = 2 sin(pi / N)`.
    pub min_node_separation: f64,
    /// `ln |det Omega_f|` per fiber component.
    pub log_abs_det: f64,
}

impl RankCertificate {
    pub fn certifies_full_rank(&self, tol: f64) -> bool {
        self.factor_residual <= tol && self.min_node_separation > 0.0 && self.log_abs_det.is_finite()
    }
}

pub fn rank_certificate(omega: &LinOp) -> Result<RankCertificate> {
    let grid = omega.grid;
    if omega.domain != Space::HalfLinePos || omega.codomain != Space::HardyPlus {
        return Err(Error::DimensionMismatch("expected the map HalfLinePos -> HardyPlus".into()));
    }
    let n = grid.half();
    let k = grid.k_dim;
    let nn = grid.n_sigma as u64;
    let c = phase(1, 2 * nn) / (grid.n_sigma as f64).sqrt();
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for row in 0..n {
            let (jj, kk) = (j as u64, row as u64);
            let factored = c * phase(kk, nn) * phase((2 * jj * kk) % (2 * nn), nn) * phase(jj, nn);
            residual = residual.max((omega.matrix[(row * k, j * k)] - factored).norm());
        }
    }
    // ln|det V| = Σ_{i<j} ln|z_i − z_j| and |z_i − z_j| = 2 sin(pi |i − j| / N)
    let vandermonde: f64 = (1..n)
        .map(|d| (n - d) as f64 * (2.0 * (PI * d as f64 / grid.n_sigma as f64).sin()).ln())
        .sum();
    Ok(RankCertificate {
        factor_residual: residual,
        min_node_separation: 2.0 * (PI / grid.n_sigma as f64).sin(),
        log_abs_det: vandermonde - 0.5 * n as f64 * (grid.n_sigma as f64).ln(),
    })
}

/// Matrix-free `Omega_f psi`, in Hardy coordinates.
pub fn omega_apply(fourier: &Fourier, psi: &StateVector) -> Result<StateVector> {
    psi.expect_space(Space::HalfLinePos)?;
    to_hardy_with(fourier, &embed(psi)?)
}

/// `(psi_t, M_F psi_t) = ‖T_u(t) Omega_f psi‖²`, computed with FFTs only.
pub fn lyapunov_expectation(psi: &StateVector, t: LatticeTime) -> Result<f64> {
    let fourier = Fourier::new(psi.grid());
    let h = omega_apply(&fourier, psi)?;
    Ok(toeplitz_step_with(&fourier, &h, t)?.norm_sqr())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub times: Vec<f64>,
    pub expectations: Vec<f64>,
    /// `‖u_+(t) psi‖` at each time.
    pub norms: Vec<f64>,
    pub guard_band_leakage: f64,
    /// Largest increase between consecutive expectations (≤ 0 for a monotone curve).
    pub max_violation: f64,
}

pub fn lyapunov_curve(psi: &StateVector, times: &[LatticeTime]) -> Result<TrajectoryReport> {
    psi.expect_space(Space::HalfLinePos)?;
    if times.windows(2).any(|w| w[1].steps <= w[0].steps) {
        return Err(Error::NonMonotoneGrid);
    }
    let fourier = Fourier::new(psi.grid());
    let h = omega_apply(&fourier, psi)?;
    let expectations = times
        .par_iter()
        .map(|&t| Ok(toeplitz_step_with(&fourier, &h, t)?.norm_sqr()))
        .collect::<Result<Vec<f64>>>()?;
    let norms = times
        .iter()
        .map(|t| Ok(unitary_evolve(psi, t.time)?.norm()))
        .collect::<Result<Vec<f64>>>()?;
    let max_violation = expectations
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TrajectoryReport {
        times: times.iter().map(|t| t.time).collect(),
        expectations,
        norms,
        guard_band_leakage: guard_band_leakage(psi)?,
        max_violation: if times.len() < 2 { 0.0 } else { max_violation },
    })
}

/// Membership in the ordering set `F_m = {psi : (psi, M_F psi) ≤ m ‖psi‖²}`.
pub fn f_m_membership(psi: &StateVector, m: f64) -> Result<bool> {
    let n2 = psi.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(lyapunov_expectation(psi, LatticeTime { steps: 0, time: 0.0, snapped: false })? / n2 <= m)
}

/// Max over `states` of `‖Omega_f u_+(t) psi − T_u(t) Omega_f psi‖ / ‖psi‖`.
pub fn omega_intertwining_residual(t: LatticeTime, states: &[StateVector]) -> Result<f64> {
    let Some(first) = states.first() else {
        return Ok(0.0);
    };
    let fourier = Fourier::new(first.grid());
    states.iter().try_fold(0.0f64, |acc, psi| {
        let lhs = omega_apply(&fourier, &unitary_evolve(psi, t.time)?)?;
        let rhs = toeplitz_step_with(&fourier, &omega_apply(&fourier, psi)?, t)?;
        Ok(acc.max(lhs.sub(&rhs)?.norm() / psi.norm()))
    })
}

/// Frobenius norm of `u_+(−t) M_F u_+(t) − Omega_f* T_u(t)* T_u(t) Omega_f`.
///
/// The two sides differ by the part of `Omega_f u_+(t)` that wraps around the
/// time window, so this is a diagnostic: on the lattice the identity holds
/// state by state only for guard-banded states.
pub fn heisenberg_defect(omega: &LinOp, m_f: &LinOp, t: LatticeTime) -> Result<f64> {
    let grid = omega.grid;
    let k = grid.k_dim;
    let d = grid.dim(Space::HalfLinePos);
    let u = |i: usize| Complex64::from_polar(1.0, -grid.sigma(grid.half() + i / k) * t.time);
    let lhs = Mat::from_fn(d, d, |i, j| u(i).conj() * m_f.matrix[(i, j)] * u(j));
    let cut = (t.steps * k).min(d);
    let q = Mat::from_fn(d, d, |i, j| if i >= cut { omega.matrix[(i, j)] } else { Complex64::new(0.0, 0.0) });
    let rhs = q.adjoint() * &q;
    Ok((&lhs - &rhs).norm_l2())
}

/// Van Winter density surrogate: relative least-squares residual of
/// `P_{R+} h ≈ g` over `h ∈ H^2_+`, with singular values below `cutoff`
/// discarded.
pub fn density_residual(omega: &LinOp, g: &StateVector, cutoff: f64) -> Result<f64> {
    g.expect_space(Space::HalfLinePos)?;
    let polar = PolarFactors::new(omega)?;
    let (s, v) = (&polar.s, &polar.v);
    let x = g.coords();
    let mut proj = vec![Complex64::new(0.0, 0.0); x.len()];
    for i in 0..s.len() {
        if s[i] <= cutoff {
            break;
        }
        let col = v.col(i);
        let c: Complex64 = (0..x.len()).map(|r| col[r].conj() * x[r]).sum();
        for (p, r) in proj.iter_mut().zip(0..x.len()) {
            *p += col[r] * c;
        }
    }
    let num: f64 = x.iter().zip(&proj).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = x.iter().map(|a| a.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok((num / den).sqrt())
}
