//! Energy grid, dual time lattice and sampled states.
//!
//! Energies are bin-centred, `sigma_j = -L + (j + 1/2) dsigma`, so no sample
//! sits on `sigma = 0`. The dual lattice is centred the same way,
//! `tau_k = -T/2 + (k + 1/2) dtau`, which keeps `tau = 0` between bins and
//! splits the window into two halves of exactly `n_sigma / 2` bins.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative tolerance (in lattice steps) below which a time counts as on the lattice.
pub const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_sigma: usize,
    pub sigma_max: f64,
    pub delta_sigma: f64,
    pub k_dim: usize,
    pub t_window: f64,
    pub delta_tau: f64,
}

pub fn make_grid(n_sigma: usize, sigma_max: f64, k_dim: usize) -> Result<GridSpec> {
    if n_sigma < 8 || !n_sigma.is_power_of_two() {
        return Err(Error::InvalidBinCount(n_sigma));
    }
    if !(sigma_max.is_finite() && sigma_max > 0.0) {
        return Err(Error::InvalidCutoff(sigma_max));
    }
    if k_dim == 0 {
        return Err(Error::InvalidFiberDim(k_dim));
    }
    let delta_sigma = 2.0 * sigma_max / n_sigma as f64;
    let t_window = 2.0 * PI / delta_sigma;
    Ok(GridSpec {
        n_sigma,
        sigma_max,
        delta_sigma,
        k_dim,
        t_window,
        delta_tau: t_window / n_sigma as f64,
    })
}

impl GridSpec {
    /// Number of bins on each half line (and of the Hardy lattice).
    pub fn half(&self) -> usize {
        self.n_sigma / 2
    }

    pub fn sigma(&self, j: usize) -> f64 {
        -self.sigma_max + (j as f64 + 0.5) * self.delta_sigma
    }

    pub fn tau(&self, k: usize) -> f64 {
        -0.5 * self.t_window + (k as f64 + 0.5) * self.delta_tau
    }

    /// Number of amplitudes a state in `space` carries.
    pub fn dim(&self, space: Space) -> usize {
        match space {
            Space::FullLine => self.n_sigma * self.k_dim,
            Space::HalfLinePos | Space::HardyPlus => self.half() * self.k_dim,
        }
    }

    /// Quadrature weight of one sample in `space`.
    pub fn weight(&self, space: Space) -> f64 {
        match space {
            Space::FullLine | Space::HalfLinePos => self.delta_sigma,
            Space::HardyPlus => self.delta_tau,
        }
    }

    /// Energy of the bin carrying flat index `idx` of a state in `space`.
    ///
    /// Hardy states are stored by time, so they have no energy coordinate.
    pub fn energy_of(&self, space: Space, idx: usize) -> Option<f64> {
        let bin = idx / self.k_dim;
        match space {
            Space::FullLine => Some(self.sigma(bin)),
            Space::HalfLinePos => Some(self.sigma(bin + self.half())),
            Space::HardyPlus => None,
        }
    }

    /// Map `t` onto the dual lattice.
    pub fn lattice_time(&self, t: f64, policy: TimePolicy) -> Result<LatticeTime> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let x = t / self.delta_tau;
        let steps = x.round();
        let off = (x - steps).abs() > LATTICE_TOL * steps.max(1.0);
        if off && policy == TimePolicy::Reject {
            return Err(Error::OffLattice {
                time: t,
                step: self.delta_tau,
            });
        }
        Ok(LatticeTime {
            steps: steps as usize,
            time: steps * self.delta_tau,
            snapped: off,
        })
    }

    pub fn lattice_steps(&self, steps: usize) -> LatticeTime {
        LatticeTime {
            steps,
            time: steps as f64 * self.delta_tau,
            snapped: false,
        }
    }

    /// `n_steps + 1` equally spaced times on `[0, t_max]`, mapped to the lattice.
    ///
    /// Times that snap onto the same lattice point are merged, so the result
    /// is strictly increasing.
    pub fn lattice_grid(&self, t_max: f64, n_steps: usize, policy: TimePolicy) -> Result<Vec<LatticeTime>> {
        if n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        let mut out: Vec<LatticeTime> = Vec::with_capacity(n_steps + 1);
        for i in 0..=n_steps {
            let lt = self.lattice_time(t_max * i as f64 / n_steps as f64, policy)?;
            if out.last().map_or(true, |p| p.steps < lt.steps) {
                out.push(lt);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimePolicy {
    Reject,
    Snap,
}

/// A non-negative time `steps * delta_tau` on the dual lattice of one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeTime {
    pub steps: usize,
    pub time: f64,
    /// Set when the requested time was moved onto the lattice.
    pub snapped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    FullLine,
    HalfLinePos,
    /// Discrete H^2_+, stored as time-profile samples on the `tau > 0` half of
    /// the dual lattice with weight `delta_tau`.
    HardyPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Pos,
    Neg,
}

/// Complex amplitudes over grid bins x fiber, laid out as `bin * k_dim + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: GridSpec,
    space: Space,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(grid: GridSpec, space: Space, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = grid.dim(space);
        if amplitudes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        Ok(StateVector {
            grid,
            space,
            amplitudes,
        })
    }

    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        StateVector {
            grid,
            space,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.dim(space)],
        }
    }

    /// Sample `f(sigma) * v` on the bins of `space` (not Hardy).
    pub fn from_fn(
        grid: GridSpec,
        space: Space,
        v: &[Complex64],
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        if space == Space::HardyPlus {
            return Err(Error::SpaceMismatch {
                expected: Space::FullLine,
                found: space,
            });
        }
        check_fiber(&grid, v)?;
        let k = grid.k_dim;
        let amplitudes = (0..grid.dim(space))
            .map(|i| f(grid.energy_of(space, i).unwrap()) * v[i % k])
            .collect();
        Ok(StateVector {
            grid,
            space,
            amplitudes,
        })
    }

    /// Build a state from orthonormal coordinates `x_i = amplitude_i * sqrt(weight)`.
    pub fn from_coords(grid: GridSpec, space: Space, coords: Vec<Complex64>) -> Result<Self> {
        let s = 1.0 / grid.weight(space).sqrt();
        Self::new(grid, space, coords.into_iter().map(|c| c * s).collect())
    }

    pub fn coords(&self) -> Vec<Complex64> {
        let s = self.weight().sqrt();
        self.amplitudes.iter().map(|a| a * s).collect()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn weight(&self) -> f64 {
        self.grid.weight(self.space)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.weight()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> StateVector {
        StateVector {
            grid: self.grid,
            space: self.space,
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &StateVector) -> Result<StateVector> {
        self.check_same(other)?;
        Ok(StateVector {
            grid: self.grid,
            space: self.space,
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Rescaled to unit norm.
    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub(crate) fn expect_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::SpaceMismatch {
                expected: space,
                found: self.space,
            });
        }
        Ok(())
    }

    pub(crate) fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        other.expect_space(self.space)
    }
}

pub(crate) fn check_fiber(grid: &GridSpec, v: &[Complex64]) -> Result<()> {
    if v.len() != grid.k_dim {
        return Err(Error::LengthMismatch {
            expected: grid.k_dim,
            found: v.len(),
        });
    }
    Ok(())
}

/// Rectangle-rule inner product, conjugate-linear in `f`.
pub fn inner(f: &StateVector, g: &StateVector) -> Result<Complex64> {
    f.check_same(g)?;
    let s: Complex64 = f
        .amplitudes
        .iter()
        .zip(&g.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s * f.weight())
}

pub fn project_halfline(f: &StateVector, side: Side) -> Result<StateVector> {
    f.expect_space(Space::FullLine)?;
    let cut = f.grid.half() * f.grid.k_dim;
    let mut out = f.clone();
    let zeroed = match side {
        Side::Pos => &mut out.amplitudes[..cut],
        Side::Neg => &mut out.amplitudes[cut..],
    };
    zeroed.fill(Complex64::new(0.0, 0.0));
    Ok(out)
}

/// Pad the `sigma < 0` bins with zeros.
pub fn embed(f: &StateVector) -> Result<StateVector> {
    f.expect_space(Space::HalfLinePos)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); f.grid.dim(Space::HalfLinePos)];
    amplitudes.extend_from_slice(&f.amplitudes);
    StateVector::new(f.grid, Space::FullLine, amplitudes)
}

/// Drop the `sigma < 0` bins.
pub fn restrict(f: &StateVector) -> Result<StateVector> {
    f.expect_space(Space::FullLine)?;
    let cut = f.grid.half() * f.grid.k_dim;
    StateVector::new(f.grid, Space::HalfLinePos, f.amplitudes[cut..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_grid_arithmetic() {
        let g = make_grid(8, 4.0, 1).unwrap();
        assert_eq!(g.delta_sigma, 1.0);
        assert!((g.t_window - 2.0 * PI).abs() < 1e-15);
        assert!((g.delta_tau - PI / 4.0).abs() < 1e-15);
        assert_eq!(g.sigma(0), -3.5);
        assert_eq!(g.sigma(4), 0.5);
        assert!((g.tau(4) - PI / 8.0).abs() < 1e-15);

        let g = make_grid(1024, 100.0, 1).unwrap();
        assert!((g.delta_sigma - 0.1953125).abs() < 1e-15);
        assert!((g.delta_tau * g.delta_sigma - 2.0 * PI / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn bad_grids_rejected() {
        assert!(matches!(make_grid(10, 4.0, 1), Err(Error::InvalidBinCount(10))));
        assert!(make_grid(4, 4.0, 1).is_err());
        assert!(matches!(make_grid(8, 0.0, 1), Err(Error::InvalidCutoff(_))));
        assert!(make_grid(8, f64::NAN, 1).is_err());
        assert!(matches!(make_grid(8, 1.0, 0), Err(Error::InvalidFiberDim(0))));
    }

    #[test]
    fn unit_bin_has_unit_norm() {
        let g = make_grid(8, 4.0, 1).unwrap();
        let mut f = StateVector::zeros(g, Space::FullLine);
        f.amplitudes_mut()[3] = c(1.0, 0.0);
        assert_eq!(inner(&f, &f).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn lorentzian_norm_is_pi() {
        let g = make_grid(4096, 100.0, 1).unwrap();
        let f = StateVector::from_fn(g, Space::FullLine, &[c(1.0, 0.0)], |s| 1.0 / c(s, 1.0)).unwrap();
        let n2 = inner(&f, &f).unwrap().re;
        assert!((n2 / PI - 1.0).abs() < 0.01, "{n2}");
    }

    #[test]
    fn even_function_splits_in_half() {
        let g = make_grid(256, 8.0, 1).unwrap();
        let f = StateVector::from_fn(g, Space::FullLine, &[c(1.0, 0.0)], |s| c((-s * s).exp(), 0.0)).unwrap();
        let p = project_halfline(&f, Side::Pos).unwrap();
        assert!((p.norm_sqr() - 0.5 * f.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn mixing_spaces_is_an_error() {
        let g = make_grid(8, 4.0, 1).unwrap();
        let a = StateVector::zeros(g, Space::FullLine);
        let b = StateVector::zeros(g, Space::HalfLinePos);
        assert!(inner(&a, &b).is_err());
        assert!(embed(&a).is_err());
        assert!(restrict(&b).is_err());
        assert!(project_halfline(&b, Side::Pos).is_err());
        let h = make_grid(16, 4.0, 1).unwrap();
        assert!(matches!(inner(&a, &StateVector::zeros(h, Space::FullLine)), Err(Error::GridMismatch)));
    }

    #[test]
    fn lattice_policy() {
        let g = make_grid(64, 8.0, 1).unwrap();
        let t = g.lattice_time(3.0 * g.delta_tau, TimePolicy::Reject).unwrap();
        assert_eq!(t.steps, 3);
        assert!(!t.snapped);
        assert!(g.lattice_time(1.0, TimePolicy::Reject).is_err());
        let s = g.lattice_time(1.0, TimePolicy::Snap).unwrap();
        assert!(s.snapped);
        assert_eq!(s.steps, (1.0 / g.delta_tau).round() as usize);
        assert!(g.lattice_time(-1.0, TimePolicy::Snap).is_err());
        let grid = g.lattice_grid(1.0, 40, TimePolicy::Snap).unwrap();
        assert_eq!(grid[0].steps, 0);
        assert!(grid.windows(2).all(|w| w[0].steps < w[1].steps));
    }

    fn state(g: GridSpec, space: Space, v: &[(f64, f64)]) -> StateVector {
        StateVector::new(g, space, v.iter().map(|&(a, b)| c(a, b)).collect()).unwrap()
    }

    fn amps(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
    }

    proptest! {
        #[test]
        fn inner_product_axioms(a in amps(32), b in amps(32), re in -2.0..2.0f64, im in -2.0..2.0f64) {
            let g = make_grid(32, 5.0, 1).unwrap();
            let f = state(g, Space::FullLine, &a);
            let h = state(g, Space::FullLine, &b);
            let fh = inner(&f, &h).unwrap();
            let hf = inner(&h, &f).unwrap();
            prop_assert!((fh - hf.conj()).norm() < 1e-12);
            let ff = inner(&f, &f).unwrap();
            prop_assert!(ff.re >= 0.0 && ff.im.abs() < 1e-14);
            let z = c(re, im);
            let lin = inner(&f, &h.scale(z)).unwrap();
            prop_assert!((lin - z * fh).norm() < 1e-12);
            let anti = inner(&f.scale(z), &h).unwrap();
            prop_assert!((anti - z.conj() * fh).norm() < 1e-12);
        }

        #[test]
        fn halfline_projections_resolve_identity(a in amps(64)) {
            let g = make_grid(32, 3.0, 2).unwrap();
            let f = state(g, Space::FullLine, &a);
            let p = project_halfline(&f, Side::Pos).unwrap();
            let q = project_halfline(&f, Side::Neg).unwrap();
            prop_assert_eq!(p.add(&q).unwrap(), f.clone());
            prop_assert_eq!(project_halfline(&p, Side::Pos).unwrap(), p.clone());
            prop_assert!(inner(&p, &q).unwrap().norm() == 0.0);
            // Hermitian: (g, P f) = (P g, f)
            let h = q.add(&p.scale(c(0.3, -1.1))).unwrap();
            let lhs = inner(&h, &p).unwrap();
            let rhs = inner(&project_halfline(&h, Side::Pos).unwrap(), &f).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + h.norm() * f.norm()));
        }

        #[test]
        fn embed_restrict_roundtrip(a in amps(16), b in amps(32)) {
            let g = make_grid(32, 2.0, 1).unwrap();
            let f = state(g, Space::HalfLinePos, &a);
            let e = embed(&f).unwrap();
            prop_assert_eq!(restrict(&e).unwrap(), f.clone());
            prop_assert!((e.norm() - f.norm()).abs() <= 1e-14 * (1.0 + f.norm()));
            let h = state(g, Space::FullLine, &b);
            let r = restrict(&h).unwrap();
            prop_assert!(r.norm() <= h.norm() + 1e-14);
            prop_assert_eq!(embed(&r).unwrap(), project_halfline(&h, Side::Pos).unwrap());
        }
    }
}
