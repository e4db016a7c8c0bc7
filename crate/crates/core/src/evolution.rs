//! The multiplication group `u(t)`, the Toeplitz semigroup `T_u(t) = P_+ u(t)`
//! on H^2_+, and the kernel witness functions.
//!
//! Multiplying by `e^{-i sigma m dtau}` shifts the time profile left by `m`
//! bins, so on Hardy coordinates `T_u(m dtau)` is the truncated left shift and
//! its adjoint the truncated right shift. Both are exact on the lattice.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, LatticeTime, Space, StateVector};
use crate::hardy::{from_hardy_with, to_hardy_with, Fourier};

/// `[u(t) f](sigma) = e^{-i sigma t} f(sigma)` on energy-indexed states.
///
/// Hardy states are stored by time, where `u(t)` does not act bin-wise, so
/// they are rejected; use [`toeplitz_step`] for the compressed group.
pub fn unitary_evolve(f: &StateVector, t: f64) -> Result<StateVector> {
    if f.space() == Space::HardyPlus {
        return Err(Error::SpaceMismatch {
            expected: Space::FullLine,
            found: Space::HardyPlus,
        });
    }
    let grid = *f.grid();
    let space = f.space();
    let amplitudes = f
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a * Complex64::from_polar(1.0, -grid.energy_of(space, i).unwrap() * t))
        .collect();
    StateVector::new(grid, space, amplitudes)
}

/// Truncated left shift by `m` bins (the exact shift oracle for `T_u`).
pub fn toeplitz_shift(f: &StateVector, m: usize) -> Result<StateVector> {
    f.expect_space(Space::HardyPlus)?;
    let k = f.grid().k_dim;
    let a = f.amplitudes();
    let mut out = StateVector::zeros(*f.grid(), Space::HardyPlus);
    let s = (m * k).min(a.len());
    out.amplitudes_mut()[..a.len() - s].copy_from_slice(&a[s..]);
    Ok(out)
}

/// Truncated right shift by `m` bins (the shift oracle for `T_u*`).
pub fn toeplitz_adjoint_shift(f: &StateVector, m: usize) -> Result<StateVector> {
    f.expect_space(Space::HardyPlus)?;
    let k = f.grid().k_dim;
    let a = f.amplitudes();
    let mut out = StateVector::zeros(*f.grid(), Space::HardyPlus);
    let s = (m * k).min(a.len());
    out.amplitudes_mut()[s..].copy_from_slice(&a[..a.len() - s]);
    Ok(out)
}

fn spectral(fourier: &Fourier, f: &StateVector, t: LatticeTime, sign: f64) -> Result<StateVector> {
    f.expect_space(Space::HardyPlus)?;
    // The window holds no time beyond T/2: both maps vanish from there on,
    // while the periodic phase would wrap content back in.
    if t.steps >= f.grid().half() {
        return Ok(StateVector::zeros(*f.grid(), Space::HardyPlus));
    }
    let mut g = from_hardy_with(fourier, f)?;
    fourier.evolve_lattice(g.amplitudes_mut(), t.steps, sign);
    to_hardy_with(fourier, &g)
}

/// `T_u(t) f = P_+ u(t) f`, evaluated in the energy domain.
pub fn toeplitz_step(f: &StateVector, t: LatticeTime) -> Result<StateVector> {
    spectral(&Fourier::new(f.grid()), f, t, 1.0)
}

pub fn toeplitz_step_with(fourier: &Fourier, f: &StateVector, t: LatticeTime) -> Result<StateVector> {
    spectral(fourier, f, t, 1.0)
}

/// `T_u(t)* g = P_+ u(−t) g`.
pub fn toeplitz_adjoint(f: &StateVector, t: LatticeTime) -> Result<StateVector> {
    spectral(&Fourier::new(f.grid()), f, t, -1.0)
}

pub fn toeplitz_adjoint_with(fourier: &Fourier, f: &StateVector, t: LatticeTime) -> Result<StateVector> {
    spectral(fourier, f, t, -1.0)
}

/// `f(sigma) = (sigma − mu)^{-1} [1 − e^{i sigma t0} e^{−i mu t0}] v` on the full line.
///
/// Its time profile is `−i sqrt(2 pi) e^{−i mu tau} v` on `[0, t0]` and zero elsewhere.
pub fn witness_function(grid: &GridSpec, mu: Complex64, t0: LatticeTime, v: &[Complex64]) -> Result<StateVector> {
    if !(mu.im < 0.0) {
        return Err(Error::PoleNotInLowerHalfPlane(mu));
    }
    if t0.steps == 0 {
        return Err(Error::InvalidParameter("witness support t0 must be positive".into()));
    }
    let tail = (Complex64::new(0.0, -1.0) * mu * t0.time).exp();
    StateVector::from_fn(*grid, Space::FullLine, v, |s| {
        let z = Complex64::new(s, 0.0);
        (1.0 - Complex64::from_polar(1.0, s * t0.time) * tail) / (z - mu)
    })
}

/// The witness of `Ker T_u(t0)` in Hardy coordinates.
pub fn kernel_witness(grid: &GridSpec, mu: Complex64, t0: LatticeTime, v: &[Complex64]) -> Result<StateVector> {
    to_hardy_with(&Fourier::new(grid), &witness_function(grid, mu, t0, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, make_grid, TimePolicy};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hardy(g: GridSpec, a: &[(f64, f64)]) -> StateVector {
        StateVector::new(g, Space::HardyPlus, a.iter().map(|&(x, y)| c(x, y)).collect()).unwrap()
    }

    #[test]
    fn time_zero_is_identity() {
        let g = make_grid(64, 5.0, 1).unwrap();
        let f = hardy(g, &(0..32).map(|i| (i as f64, 1.0)).collect::<Vec<_>>());
        let z = g.lattice_steps(0);
        assert!(toeplitz_step(&f, z).unwrap().sub(&f).unwrap().norm() < 1e-12 * f.norm());
        assert!(toeplitz_adjoint(&f, z).unwrap().sub(&f).unwrap().norm() < 1e-12 * f.norm());
        let e = StateVector::from_fn(g, Space::FullLine, &[c(1.0, 0.0)], |s| c(s.cos(), s)).unwrap();
        assert_eq!(unitary_evolve(&e, 0.0).unwrap(), e);
    }

    #[test]
    fn hardy_states_need_the_compressed_group() {
        let g = make_grid(16, 2.0, 1).unwrap();
        assert!(unitary_evolve(&StateVector::zeros(g, Space::HardyPlus), 1.0).is_err());
    }

    #[test]
    fn beyond_half_window_is_zero() {
        let g = make_grid(32, 2.0, 1).unwrap();
        let f = hardy(g, &[(1.0, 0.0); 16]);
        assert_eq!(toeplitz_step(&f, g.lattice_steps(16)).unwrap().norm(), 0.0);
        assert_eq!(toeplitz_shift(&f, 40).unwrap().norm(), 0.0);
        assert_eq!(toeplitz_adjoint_shift(&f, 16).unwrap().norm(), 0.0);
    }

    #[test]
    fn witness_profile_and_ratios() {
        let g = make_grid(4096, 100.0, 1).unwrap();
        let t0 = g.lattice_time(1.0, TimePolicy::Snap).unwrap();
        let f = kernel_witness(&g, c(0.0, -1.0), t0, &[c(1.0, 0.0)]).unwrap();
        let n0 = f.norm();
        let r1 = toeplitz_step(&f, t0).unwrap().norm() / n0;
        let r2 = toeplitz_step(&f, g.lattice_time(2.0, TimePolicy::Snap).unwrap()).unwrap().norm() / n0;
        assert!(r1 <= 0.05, "{r1}");
        assert!(r2 <= r1);
        let half = g.lattice_time(0.5, TimePolicy::Snap).unwrap();
        let r05 = toeplitz_step(&f, half).unwrap().norm() / n0;
        // sqrt(∫_{0.5}^1 e^{-2τ} / ∫_0^1 e^{-2τ})
        let oracle = (((-1.0f64).exp() - (-2.0f64).exp()) / (1.0 - (-2.0f64).exp())).sqrt();
        assert!((oracle - 0.5186).abs() < 1e-4);
        assert!((r05 - oracle).abs() < 0.01, "{r05}");
    }

    #[test]
    fn witness_preconditions() {
        let g = make_grid(64, 5.0, 1).unwrap();
        let t = g.lattice_steps(3);
        assert!(kernel_witness(&g, c(0.0, 1.0), t, &[c(1.0, 0.0)]).is_err());
        assert!(kernel_witness(&g, c(0.0, -1.0), g.lattice_steps(0), &[c(1.0, 0.0)]).is_err());
        assert!(kernel_witness(&g, c(0.0, -1.0), t, &[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn evolution_is_a_unitary_group(
            a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
            t in -20.0..20.0f64, s in -20.0..20.0f64,
        ) {
            let g = make_grid(64, 6.0, 1).unwrap();
            let f = StateVector::new(g, Space::FullLine, a.iter().map(|&(x, y)| c(x, y)).collect()).unwrap();
            let ut = unitary_evolve(&f, t).unwrap();
            prop_assert!((ut.norm() - f.norm()).abs() <= 1e-12 * (1.0 + f.norm()));
            let back = unitary_evolve(&ut, -t).unwrap();
            prop_assert!(back.sub(&f).unwrap().norm() <= 1e-12 * (1.0 + f.norm()));
            let lhs = unitary_evolve(&unitary_evolve(&f, s).unwrap(), t).unwrap();
            let rhs = unitary_evolve(&f, t + s).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-12 * (1.0 + f.norm()));
        }

        #[test]
        fn spectral_route_matches_shift_oracle(
            a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
            m in 0usize..70,
        ) {
            let g = make_grid(128, 9.0, 1).unwrap();
            let f = hardy(g, &a);
            let t = g.lattice_steps(m);
            let fwd = toeplitz_step(&f, t).unwrap();
            prop_assert!(fwd.sub(&toeplitz_shift(&f, m).unwrap()).unwrap().norm() <= 1e-10 * f.norm());
            let adj = toeplitz_adjoint(&f, t).unwrap();
            prop_assert!(adj.sub(&toeplitz_adjoint_shift(&f, m).unwrap()).unwrap().norm() <= 1e-10 * f.norm());
            prop_assert!(fwd.norm() <= f.norm() * (1.0 + 1e-12));
            // adjoint pair
            let lhs = inner(&adj, &f).unwrap();
            let rhs = inner(&f, &fwd).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * f.norm_sqr());
        }

        #[test]
        fn shift_semigroup_law(
            a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 48),
            m1 in 0usize..30, m2 in 0usize..30,
        ) {
            let g = make_grid(32, 3.0, 3).unwrap();
            let f = hardy(g, &a);
            let lhs = toeplitz_shift(&toeplitz_shift(&f, m1).unwrap(), m2).unwrap();
            prop_assert_eq!(lhs, toeplitz_shift(&f, m1 + m2).unwrap());
            // T T* = I on states with an empty top band
            let mut top_free = f.clone();
            let cut = (16 - m1.min(16)) * 3;
            top_free.amplitudes_mut()[cut..].fill(c(0.0, 0.0));
            let back = toeplitz_shift(&toeplitz_adjoint_shift(&top_free, m1).unwrap(), m1).unwrap();
            prop_assert_eq!(back, top_free);
        }
    }
}
