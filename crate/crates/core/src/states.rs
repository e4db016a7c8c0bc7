//! Seeded test-state generators.
//!
//! * [`bump_state`]: a few Gaussian bumps on the positive half line, kept away
//!   from `sigma = 0` and `sigma = L`. Their time profiles are concentrated near
//!   `tau = 0`, so they are guard-banded for shifts well inside the window.
//! * [`compact_hardy_state`]: random Hardy coordinates vanishing beyond a
//!   given time, i.e. an exactly compact time profile.
//! * [`wavepacket_state`]: smooth full-line packets `e^{i sigma s}` times a
//!   Gaussian, whose profiles sit at `tau ≈ ±s`, well away from `tau = 0`.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Space, StateVector};
use crate::linop::LinOp;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn fiber<R: Rng>(grid: &GridSpec, rng: &mut R) -> Vec<Complex64> {
    (0..grid.k_dim).map(|_| gaussian_c(rng)).collect()
}

/// Normalized sum of three Gaussian bumps on `sigma > 0`.
pub fn bump_state<R: Rng>(grid: &GridSpec, rng: &mut R) -> StateVector {
    let l = grid.sigma_max;
    let w_min = 6.0 * grid.delta_sigma;
    let w_max = (l / 20.0).max(w_min);
    let bumps: Vec<(f64, f64, Vec<Complex64>)> = (0..3)
        .map(|_| {
            let w = rng.gen_range(w_min..=w_max);
            let (lo, hi) = (10.0 * w, l - 10.0 * w);
            let c = if lo < hi { rng.gen_range(lo..hi) } else { 0.5 * l };
            (w, c, fiber(grid, rng))
        })
        .collect();
    let k = grid.k_dim;
    let amplitudes = (0..grid.dim(Space::HalfLinePos))
        .map(|i| {
            let s = grid.energy_of(Space::HalfLinePos, i).unwrap();
            bumps
                .iter()
                .map(|(w, c, v)| v[i % k] * (-0.5 * ((s - c) / w).powi(2)).exp())
                .sum()
        })
        .collect();
    StateVector::new(*grid, Space::HalfLinePos, amplitudes)
        .unwrap()
        .normalized()
        .unwrap()
}

pub fn bump_states(grid: &GridSpec, count: usize, seed: u64) -> Vec<StateVector> {
    let mut r = rng(seed);
    (0..count).map(|_| bump_state(grid, &mut r)).collect()
}

/// Normalized Hardy coordinates, Gaussian on `0 < tau < tau_max` and zero beyond.
pub fn compact_hardy_state<R: Rng>(grid: &GridSpec, tau_max: f64, rng: &mut R) -> Result<StateVector> {
    let k = grid.k_dim;
    let bins = (0..grid.half()).filter(|&b| grid.tau(grid.half() + b) < tau_max).count();
    if bins == 0 {
        return Err(Error::InvalidParameter(format!("no Hardy bin below tau = {tau_max}")));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.dim(Space::HardyPlus)];
    for a in &mut amplitudes[..bins * k] {
        *a = gaussian_c(rng);
    }
    StateVector::new(*grid, Space::HardyPlus, amplitudes)?.normalized()
}

/// `Σ_i c_i e^{i sigma s_i} exp(−(sigma − a_i)² / (2 w_i²))` on the full line, normalized.
pub fn wavepacket_state<R: Rng>(grid: &GridSpec, rng: &mut R) -> StateVector {
    let packets: Vec<(f64, f64, f64, Vec<Complex64>)> = (0..3)
        .map(|_| {
            // profile width ~ 1/w, kept at least 9 widths from tau = 0
            let s = rng.gen_range(6.0..15.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let w = rng.gen_range(1.5..3.0);
            let a = rng.gen_range(-20.0..20.0);
            (s, w, a, fiber(grid, rng))
        })
        .collect();
    let k = grid.k_dim;
    let amplitudes = (0..grid.dim(Space::FullLine))
        .map(|i| {
            let x = grid.sigma(i / k);
            packets
                .iter()
                .map(|(s, w, a, v)| {
                    v[i % k] * Complex64::from_polar((-0.5 * ((x - a) / w).powi(2)).exp(), x * s)
                })
                .sum()
        })
        .collect();
    StateVector::new(*grid, Space::FullLine, amplitudes)
        .unwrap()
        .normalized()
        .unwrap()
}

/// Random Hermitian operator on `HalfLinePos` with unit Frobenius norm.
pub fn random_hermitian<R: Rng>(grid: &GridSpec, rng: &mut R) -> LinOp {
    let d = grid.dim(Space::HalfLinePos);
    let a = Mat::from_fn(d, d, |_, _| gaussian_c(rng));
    let h: Mat<Complex64> = &a + a.adjoint();
    let n = h.norm_l2();
    let h = Mat::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(h[(i, i)].re / n, 0.0)
        } else {
            h[(i, j)] / n
        }
    });
    LinOp::new(*grid, Space::HalfLinePos, Space::HalfLinePos, h).unwrap()
}
