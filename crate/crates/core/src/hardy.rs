//! Time profiles and the Hardy projections.
//!
//! Convention: `f(sigma) = (2 pi)^{-1/2} ∫ e^{i sigma tau} g(tau) dtau`, so
//! boundary values of H^2_+ have their time profile on `tau > 0`. On the grid
//! this is the unitary matrix `U_{jk} = e^{i sigma_j tau_k} / sqrt(N)` in
//! orthonormal coordinates, evaluated with one FFT and two phase ramps.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{check_fiber, GridSpec, Space, StateVector};

/// Fraction of the time window (split evenly between both edges) that guard-banded states must leave empty.
pub const GUARD_FRACTION: f64 = 0.1;

/// Guard-band leakage allowed for a state to count as guard-banded.
pub const GUARD_TOL: f64 = 1e-8;

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `exp(-i pi m / d)` with `m` reduced modulo `2d` first.
fn phase(m: u128, d: u128) -> Complex64 {
    cis(-PI * (m % (2 * d)) as f64 / d as f64)
}

/// Precomputed transform between energy samples and time samples of one grid.
pub struct Fourier {
    n: usize,
    k_dim: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `e^{-i b j dsigma}` applied before the FFT.
    pre: Vec<Complex64>,
    /// `e^{-i a b} e^{-i a k dtau} / sqrt(N)` applied after it.
    post: Vec<Complex64>,
    /// `e^{-i pi q / N}` for `q < 2N`.
    roots: Vec<Complex64>,
}

impl Fourier {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n_sigma;
        let mut planner = FftPlanner::new();
        let nn = n as u128;
        // a dtau = b dsigma = -(N-1) pi / N and a b = (N-1)^2 pi / (2N)
        let ab = phase((nn - 1) * (nn - 1), 2 * nn);
        let s = 1.0 / (n as f64).sqrt();
        let ramp: Vec<Complex64> = (0..nn).map(|j| phase(2 * nn - (j * (nn - 1)) % (2 * nn), nn)).collect();
        let post = ramp.iter().map(|r| ab * r * s).collect();
        Fourier {
            n,
            k_dim: grid.k_dim,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            pre: ramp,
            post,
            roots: (0..2 * nn).map(|q| phase(q, nn)).collect(),
        }
    }

    /// Multiplies energy samples by `e^{-i sign sigma_j m dtau}`, with the phase reduced exactly.
    ///
    /// `sigma_j dtau = -pi + (2j + 1) pi / N`.
    pub fn evolve_lattice(&self, data: &mut [Complex64], steps: usize, sign: f64) {
        let two_n = 2 * self.n;
        let flip = if steps % 2 == 1 { -1.0 } else { 1.0 };
        let m = steps % two_n;
        for (j, chunk) in data.chunks_mut(self.k_dim).enumerate() {
            let mut p = self.roots[(m * (2 * j + 1)) % two_n] * flip;
            if sign < 0.0 {
                p = p.conj();
            }
            for v in chunk {
                *v *= p;
            }
        }
    }

    fn fibers(&self, data: &mut [Complex64], mut f: impl FnMut(&mut [Complex64])) {
        if self.k_dim == 1 {
            f(data);
            return;
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for a in 0..self.k_dim {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = data[i * self.k_dim + a];
            }
            f(&mut buf);
            for (i, b) in buf.iter().enumerate() {
                data[i * self.k_dim + a] = *b;
            }
        }
    }

    /// Energy coordinates to time coordinates, in place (`y = U* x`).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.fibers(data, |x| {
            for (v, p) in x.iter_mut().zip(&self.pre) {
                *v *= p;
            }
            self.fwd.process(x);
            for (v, p) in x.iter_mut().zip(&self.post) {
                *v *= p;
            }
        });
    }

    /// Time coordinates to energy coordinates, in place (`x = U y`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.fibers(data, |y| {
            for (v, p) in y.iter_mut().zip(&self.post) {
                *v *= p.conj();
            }
            self.inv.process(y);
            for (v, p) in y.iter_mut().zip(&self.pre) {
                *v *= p.conj();
            }
        });
    }
}

/// Time-domain samples `g(tau_k)` on the full dual lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeProfile {
    pub grid: GridSpec,
    pub samples: Vec<Complex64>,
}

impl TimeProfile {
    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.delta_tau
    }

    /// Fraction of the norm² carried by the outer `GUARD_FRACTION` of the window.
    pub fn guard_band_leakage(&self) -> f64 {
        let total = self.norm_sqr();
        if total == 0.0 {
            return 0.0;
        }
        let edge = 0.5 * (1.0 - GUARD_FRACTION) * self.grid.t_window;
        let k = self.grid.k_dim;
        let outer: f64 = self
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.tau(i / k).abs() > edge)
            .map(|(_, s)| s.norm_sqr())
            .sum();
        outer * self.grid.delta_tau / total
    }
}

pub fn to_time(f: &StateVector) -> Result<TimeProfile> {
    to_time_with(&Fourier::new(f.grid()), f)
}

pub fn to_time_with(fourier: &Fourier, f: &StateVector) -> Result<TimeProfile> {
    f.expect_space(Space::FullLine)?;
    let grid = *f.grid();
    let mut x = f.coords();
    fourier.forward(&mut x);
    let s = 1.0 / grid.delta_tau.sqrt();
    Ok(TimeProfile {
        grid,
        samples: x.into_iter().map(|v| v * s).collect(),
    })
}

pub fn from_time(p: &TimeProfile) -> Result<StateVector> {
    from_time_with(&Fourier::new(&p.grid), p)
}

pub fn from_time_with(fourier: &Fourier, p: &TimeProfile) -> Result<StateVector> {
    let grid = p.grid;
    if p.samples.len() != grid.dim(Space::FullLine) {
        return Err(Error::LengthMismatch {
            expected: grid.dim(Space::FullLine),
            found: p.samples.len(),
        });
    }
    let s = grid.delta_tau.sqrt();
    let mut y: Vec<Complex64> = p.samples.iter().map(|v| v * s).collect();
    fourier.inverse(&mut y);
    StateVector::from_coords(grid, Space::FullLine, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Plus,
    Minus,
}

pub fn hardy_project(f: &StateVector, half: Half) -> Result<StateVector> {
    hardy_project_with(&Fourier::new(f.grid()), f, half)
}

pub fn hardy_project_with(fourier: &Fourier, f: &StateVector, half: Half) -> Result<StateVector> {
    let mut p = to_time_with(fourier, f)?;
    let cut = p.grid.half() * p.grid.k_dim;
    let zero = Complex64::new(0.0, 0.0);
    match half {
        Half::Plus => p.samples[..cut].fill(zero),
        Half::Minus => p.samples[cut..].fill(zero),
    }
    from_time_with(fourier, &p)
}

/// `P_+ f` expressed in Hardy coordinates (the `tau > 0` half of its time profile).
pub fn to_hardy(f: &StateVector) -> Result<StateVector> {
    to_hardy_with(&Fourier::new(f.grid()), f)
}

pub fn to_hardy_with(fourier: &Fourier, f: &StateVector) -> Result<StateVector> {
    let p = to_time_with(fourier, f)?;
    let cut = p.grid.half() * p.grid.k_dim;
    StateVector::new(p.grid, Space::HardyPlus, p.samples[cut..].to_vec())
}

/// The energy-domain function with the given Hardy coordinates.
pub fn from_hardy(h: &StateVector) -> Result<StateVector> {
    from_hardy_with(&Fourier::new(h.grid()), h)
}

pub fn from_hardy_with(fourier: &Fourier, h: &StateVector) -> Result<StateVector> {
    h.expect_space(Space::HardyPlus)?;
    let grid = *h.grid();
    let mut samples = vec![Complex64::new(0.0, 0.0); grid.dim(Space::HardyPlus)];
    samples.extend_from_slice(h.amplitudes());
    from_time_with(fourier, &TimeProfile { grid, samples })
}

/// Guard-band leakage of a full-line or Hardy state.
pub fn guard_band_leakage(f: &StateVector) -> Result<f64> {
    let profile = match f.space() {
        Space::FullLine => to_time(f)?,
        Space::HardyPlus => {
            let grid = *f.grid();
            let mut samples = vec![Complex64::new(0.0, 0.0); grid.dim(Space::HardyPlus)];
            samples.extend_from_slice(f.amplitudes());
            TimeProfile { grid, samples }
        }
        Space::HalfLinePos => to_time(&crate::grid::embed(f)?)?,
    };
    Ok(profile.guard_band_leakage())
}

/// `P_+ f = f/2 + (i/2) H f` with the Hilbert transform
/// `Hf(x) = pi^{-1} PV ∫ f(y) / (x - y) dy` summed directly on the grid.
///
/// Uses the odd-offset rule `Hf_j = (2/pi) Σ_{j-l odd} f_l / (j - l)`, which
/// is second-order accurate and has no diagonal term to regularize.
pub fn hardy_project_oracle(f: &StateVector) -> Result<StateVector> {
    f.expect_space(Space::FullLine)?;
    let grid = *f.grid();
    let n = grid.n_sigma;
    let k = grid.k_dim;
    let a = f.amplitudes();
    let out: Vec<Complex64> = (0..n * k)
        .into_par_iter()
        .map(|idx| {
            let (j, fiber) = (idx / k, idx % k);
            let mut h = Complex64::new(0.0, 0.0);
            let mut l = if j % 2 == 0 { 1 } else { 0 };
            while l < n {
                h += a[l * k + fiber] / (j as f64 - l as f64);
                l += 2;
            }
            let h = h * (2.0 / PI);
            0.5 * a[idx] + Complex64::new(0.0, 0.5) * h
        })
        .collect();
    StateVector::new(grid, Space::FullLine, out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub mu: Complex64,
    pub order: u32,
}

/// Samples of `Σ v / (sigma − mu)^order`.
pub fn rational_hardy(grid: &GridSpec, poles: &[Pole], v: &[Complex64]) -> Result<StateVector> {
    check_fiber(grid, v)?;
    for p in poles {
        if !(p.mu.im < 0.0) {
            return Err(Error::PoleNotInLowerHalfPlane(p.mu));
        }
        if p.order != 1 && p.order != 2 {
            return Err(Error::InvalidPoleOrder(p.order));
        }
    }
    StateVector::from_fn(*grid, Space::FullLine, v, |s| {
        poles
            .iter()
            .map(|p| (Complex64::new(s, 0.0) - p.mu).powi(-(p.order as i32)))
            .sum()
    })
}
