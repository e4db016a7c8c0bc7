//! The acceptance suite: twelve criteria split into an exact-algebra tier
//! (identities of the discrete model, rounding-level tolerances) and a
//! continuum tier (truncation-limited, checked under grid refinement).

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evolution::{kernel_witness, toeplitz_adjoint, toeplitz_shift, toeplitz_step, witness_function};
use crate::grid::{embed, inner, make_grid, project_halfline, restrict, GridSpec, LatticeTime, Side, Space, StateVector, TimePolicy};
use crate::hardy::{guard_band_leakage, hardy_project, hardy_project_oracle, rational_hardy, to_time, Half, Pole};
use crate::lambda::{build_lambda, IrreversibleRep};
use crate::linop::{identity_defect, LinOp};
use crate::lyapunov::{heisenberg_defect, lyapunov_curve, lyapunov_expectation, omega_intertwining_residual, rank_certificate};
use crate::ordering::{
    assemble_t, commutator, correspondence_check, future_part, irreversible_matrix_element, past_projection,
    spectral_measure, transport_defect,
};
use crate::states::{bump_states, compact_hardy_state, random_hermitian, rng, wavepacket_state};

/// `(1 − e^{−2}) / 2`, the witness norm² in the `∫ e^{i sigma tau} g dtau` normalization.
pub const WITNESS_NORM_SQR: f64 = 0.43233;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceClass {
    Algebraic,
    Continuum,
}

impl ToleranceClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ToleranceClass::Algebraic => "algebraic",
            ToleranceClass::Continuum => "continuum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// `value ≤ tolerance`.
    Bound,
    /// `|value − target| ≤ tolerance`.
    Target,
    /// A yes/no property, value 1 or 0.
    Holds,
    /// Reported only.
    Info,
    /// Wall-clock bound; the value is not reproducible.
    Timing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn bound(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Bound,
            value,
            target: 0.0,
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn target(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Target,
            value,
            target,
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Holds,
            value: if ok { 1.0 } else { 0.0 },
            target: 1.0,
            tolerance: 0.0,
            passed: ok,
        }
    }

    pub fn info(name: &str, value: f64) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Info,
            value,
            target: f64::NAN,
            tolerance: f64::NAN,
            passed: true,
        }
    }

    pub fn timing(name: &str, seconds: f64, budget: f64) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Timing,
            value: seconds,
            target: 0.0,
            tolerance: budget,
            passed: seconds <= budget,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub class: ToleranceClass,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub elapsed_s: f64,
}

impl CriterionResult {
    /// The check that failed by the widest margin, or the first one if all passed.
    pub fn headline(&self) -> Option<&Check> {
        self.checks
            .iter()
            .find(|c| !c.passed)
            .or_else(|| self.checks.iter().find(|c| c.kind != CheckKind::Info))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelftestConfig {
    /// Matrix-free grid (criteria 1, 8–10, 12).
    pub n_sigma: usize,
    pub sigma_max: f64,
    /// Half-line bins of the dense grid; it keeps the energy spacing of the main grid.
    pub n_dense: usize,
    /// Random states per sweep in the dense tier.
    pub n_states: usize,
    /// Lattice times per sweep in the dense tier.
    pub n_times: usize,
    /// Random states for the matrix-free monotonicity sweep.
    pub n_curve_states: usize,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            n_sigma: 4096,
            sigma_max: 100.0,
            n_dense: 512,
            n_states: 20,
            n_times: 20,
            n_curve_states: 50,
            seed: 20_240_601,
        }
    }
}

impl SelftestConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        make_grid(self.n_sigma, self.sigma_max, 1)
    }

    pub fn dense_grid(&self) -> Result<GridSpec> {
        let n = 2 * self.n_dense;
        make_grid(n, self.sigma_max * n as f64 / self.n_sigma as f64, 1)
    }

    /// Grids from a quarter to twice the main grid, doubling `L` at fixed `N / L`.
    pub fn refinement(&self) -> Result<Vec<GridSpec>> {
        [4usize, 2, 1]
            .iter()
            .map(|&d| make_grid(self.n_sigma / d, self.sigma_max / d as f64, 1))
            .chain(std::iter::once(make_grid(2 * self.n_sigma, 2.0 * self.sigma_max, 1)))
            .collect()
    }
}

pub const CRITERIA: [(u32, &str, ToleranceClass); 12] = [
    (1, "projection algebra", ToleranceClass::Algebraic),
    (2, "Lyapunov operator spectrum and factorization", ToleranceClass::Algebraic),
    (3, "square root and polar factor", ToleranceClass::Algebraic),
    (4, "intertwining relations", ToleranceClass::Algebraic),
    (5, "semigroup laws", ToleranceClass::Algebraic),
    (6, "past/future projection family", ToleranceClass::Algebraic),
    (7, "reversible/irreversible correspondence", ToleranceClass::Algebraic),
    (8, "Lyapunov monotonicity (matrix-free)", ToleranceClass::Algebraic),
    (9, "rational Hardy membership", ToleranceClass::Continuum),
    (10, "kernel witness", ToleranceClass::Continuum),
    (11, "FFT vs quadrature Hilbert oracle", ToleranceClass::Continuum),
    (12, "decay surrogates", ToleranceClass::Continuum),
];

/// Shared dense-tier data for criteria 2–7.
pub struct DenseContext {
    pub rep: IrreversibleRep,
    pub times: Vec<LatticeTime>,
    pub states: Vec<StateVector>,
    /// `R* h` for compact Hardy profiles `h` vanishing beyond `0.4 T`.
    pub transported: Vec<StateVector>,
}

impl DenseContext {
    pub fn new(cfg: &SelftestConfig) -> Result<Self> {
        let grid = cfg.dense_grid()?;
        let rep = IrreversibleRep::new(&grid)?;
        // up to a tenth of the window, so compact profiles keep an empty top band
        let last = grid.half() / 5;
        let times = (0..cfg.n_times)
            .map(|i| grid.lattice_steps(i * last / cfg.n_times.max(2).saturating_sub(1).max(1)))
            .collect();
        let states = bump_states(&grid, cfg.n_states, cfg.seed);
        let mut r = rng(cfg.seed ^ 0x5eed);
        let transported = (0..cfg.n_states)
            .map(|_| rep.transport(&compact_hardy_state(&grid, 0.4 * grid.t_window, &mut r)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseContext {
            rep,
            times,
            states,
            transported,
        })
    }
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn rel(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.sub(b)?.norm() / b.norm())
}

fn random_full(grid: &GridSpec, seed: u64) -> StateVector {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut r = rng(seed);
    let a = (0..grid.dim(Space::FullLine))
        .map(|_| Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
        .collect();
    StateVector::new(*grid, Space::FullLine, a).unwrap()
}

fn c1(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let (mut idem, mut herm, mut comp, mut orth) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in 0..4 {
        let f = random_full(&grid, cfg.seed + s);
        let g = random_full(&grid, cfg.seed + 100 + s);
        let scale = f.norm();
        let pairs: [(StateVector, StateVector, StateVector, StateVector); 2] = [
            (
                hardy_project(&f, Half::Plus)?,
                hardy_project(&f, Half::Minus)?,
                hardy_project(&g, Half::Plus)?,
                hardy_project(&hardy_project(&f, Half::Plus)?, Half::Plus)?,
            ),
            (
                project_halfline(&f, Side::Pos)?,
                project_halfline(&f, Side::Neg)?,
                project_halfline(&g, Side::Pos)?,
                project_halfline(&project_halfline(&f, Side::Pos)?, Side::Pos)?,
            ),
        ];
        for (pf, mf, pg, ppf) in &pairs {
            idem = idem.max(ppf.sub(pf)?.norm() / scale);
            comp = comp.max(pf.add(mf)?.sub(&f)?.norm() / scale);
            orth = orth.max(inner(pf, mf)?.norm() / (scale * scale));
            herm = herm.max((inner(&g, pf)? - inner(pg, &f)?).norm() / (scale * g.norm()));
        }
        // embed/restrict plumbing
        let h = restrict(&f)?;
        comp = comp.max(embed(&h)?.sub(&project_halfline(&f, Side::Pos)?)?.norm() / scale);
    }
    Ok(vec![
        Check::bound("idempotency", idem, 1e-12),
        Check::bound("hermiticity", herm, 1e-12),
        Check::bound("complementarity", comp, 1e-12),
        Check::bound("orthogonality", orth, 1e-12),
    ])
}

fn c2(ctx: &DenseContext) -> Result<Vec<Check>> {
    let rep = &ctx.rep;
    let (vals, _) = rep.m_f.eigh()?;
    let gram = rep.omega.adjoint().compose(&rep.omega)?;
    let cert = rank_certificate(&rep.omega)?;
    let n = vals.len();
    let numerical_rank = vals.iter().filter(|&&v| v > n as f64 * f64::EPSILON).count();
    Ok(vec![
        Check::bound("hermitian_defect", rep.m_f.hermitian_defect(), 1e-12),
        Check::bound("neg_min_eigenvalue", -vals[0], 1e-12),
        Check::bound("max_eigenvalue", vals[n - 1], 1.0 + 1e-10),
        Check::bound("gram_residual", rep.m_f.distance(&gram)?, 1e-12),
        Check::bound("vandermonde_factor_residual", cert.factor_residual, 1e-12),
        Check::holds("full_rank_certified", cert.certifies_full_rank(1e-12)),
        Check::info("log_abs_det_omega", cert.log_abs_det),
        Check::info("min_node_separation", cert.min_node_separation),
        Check::info("numerical_rank", numerical_rank as f64),
        Check::info("dimension", n as f64),
        Check::info("min_singular_value_omega", *rep.singular_values.last().unwrap()),
    ])
}

fn c3(ctx: &DenseContext) -> Result<Vec<Check>> {
    let rep = &ctx.rep;
    let r = &rep.r.matrix;
    let sq = rep.lambda.compose(&rep.lambda)?;
    let rl = rep.r.compose(&rep.lambda)?;
    let eig = build_lambda(&rep.m_f)?;
    Ok(vec![
        Check::bound("lambda_squared_residual", sq.distance(&rep.m_f)?, 1e-10),
        Check::bound("r_adj_r_identity", identity_defect(&(r.adjoint() * r)), 1e-10),
        Check::bound("r_r_adj_identity", identity_defect(&(r * r.adjoint())), 1e-10),
        Check::bound("r_lambda_omega", rl.distance(&rep.omega)?, 1e-8),
        Check::info("eigen_route_square_residual", eig.compose(&eig)?.distance(&rep.m_f)?),
        Check::info("eigen_vs_polar_lambda", eig.distance(&rep.lambda)?),
        Check::info("eigen_route_r_lambda_omega", rep.r.compose(&eig)?.distance(&rep.omega)?),
    ])
}

fn c4(ctx: &DenseContext) -> Result<Vec<Check>> {
    let (mut fwd, mut adj, mut om) = (0.0f64, 0.0f64, 0.0f64);
    for &t in &ctx.times {
        let r = ctx.rep.intertwining_residual(t, &ctx.states)?;
        fwd = fwd.max(r.forward);
        adj = adj.max(r.adjoint);
        om = om.max(omega_intertwining_residual(t, &ctx.states)?);
    }
    let leak = max_of(ctx.states.iter().map(|s| guard_band_leakage(s).unwrap_or(f64::INFINITY)));
    Ok(vec![
        Check::bound("lambda_forward", fwd, 1e-8),
        Check::bound("lambda_adjoint_weak", adj, 1e-8),
        Check::bound("omega_forward", om, 1e-8),
        Check::bound("guard_band_leakage", leak, 1e-8),
        Check::info("times", ctx.times.len() as f64),
        Check::info("states", ctx.states.len() as f64),
    ])
}

fn c5(ctx: &DenseContext) -> Result<Vec<Check>> {
    let rep = &ctx.rep;
    let grid = rep.grid;
    let z0 = identity_defect(&rep.z_matrix(grid.lattice_steps(0)).matrix);
    let n = grid.half();
    let pairs = [(1, 2), (3, 5), (8, 13), (n / 8, n / 5), (n / 4, n / 4), (n / 3, n / 2)];
    let mut semi: f64 = 0.0;
    for &(a, b) in &pairs {
        let lhs = rep.z_matrix(grid.lattice_steps(a)).compose(&rep.z_matrix(grid.lattice_steps(b)))?;
        semi = semi.max(lhs.distance(&rep.z_matrix(grid.lattice_steps(a + b)))?);
    }
    // Z Z* = I and T T* = I on states with an empty top band
    let (mut zz, mut tt, mut iso, mut mono) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut r = rng(0xc5);
    for (psi, t) in ctx.transported.iter().zip(ctx.times.iter().cycle()) {
        let back = rep.z_evolve(&rep.z_adjoint(psi, *t)?, *t)?;
        zz = zz.max(back.sub(psi)?.norm() / psi.norm());
        let h = compact_hardy_state(&grid, 0.4 * grid.t_window, &mut r)?;
        let adj = toeplitz_adjoint(&h, *t)?;
        tt = tt.max(toeplitz_step(&adj, *t)?.sub(&h)?.norm() / h.norm());
        iso = iso.max((adj.norm() - h.norm()).abs() / h.norm());
    }
    for psi in &ctx.states {
        let mut prev = psi.norm();
        for &t in &ctx.times {
            let now = rep.z_evolve(psi, t)?.norm();
            mono = mono.max(now - prev);
            prev = now;
        }
    }
    // T_u semigroup on Hardy images of the guard-banded states, spectral route
    let mut tsemi: f64 = 0.0;
    for psi in ctx.states.iter().take(5) {
        let h = rep.omega.apply(psi)?;
        for &(a, b) in &pairs[..4] {
            let lhs = toeplitz_step(&toeplitz_step(&h, grid.lattice_steps(a))?, grid.lattice_steps(b))?;
            let rhs = toeplitz_step(&h, grid.lattice_steps(a + b))?;
            tsemi = tsemi.max(lhs.sub(&rhs)?.norm() / h.norm());
            let oracle = toeplitz_shift(&h, a + b)?;
            tsemi = tsemi.max(rhs.sub(&oracle)?.norm() / h.norm());
        }
    }
    Ok(vec![
        Check::bound("z0_identity", z0, 1e-8),
        Check::bound("z_semigroup", semi, 1e-8),
        Check::bound("z_z_adj_identity", zz, 1e-8),
        Check::bound("t_t_adj_identity", tt, 1e-8),
        Check::bound("t_adj_isometry", iso, 1e-8),
        Check::bound("t_semigroup", tsemi, 1e-8),
        Check::bound("z_norm_increase", mono.max(0.0), 1e-12),
    ])
}

fn c6(ctx: &DenseContext) -> Result<Vec<Check>> {
    let rep = &ctx.rep;
    let fam = spectral_measure(rep, &ctx.times)?;
    let d = rep.grid.dim(Space::HalfLinePos);
    let id = LinOp::identity(rep.grid, Space::HalfLinePos);
    let (mut sum, mut idem, mut herm, mut nest) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, (p, &t)) in fam.projections.iter().zip(&ctx.times).enumerate() {
        let fut = crate::ordering::future_projection(rep, t);
        sum = sum.max(p.add(&fut)?.distance(&id)?);
        idem = idem.max(p.compose(p)?.distance(p)?);
        herm = herm.max(p.hermitian_defect() * p.frobenius());
        // consecutive pairs suffice by transitivity; the last one guards the chain
        for q in fam.projections[k..].iter().take(2).chain(fam.projections.last()) {
            nest = nest.max(p.compose(q)?.distance(p)?);
        }
    }
    let ranks_ok = fam.ranks.windows(2).all(|w| w[0] <= w[1]);
    let mut inc_min: f64 = 0.0;
    for inc in &fam.increments {
        inc_min = inc_min.min(inc.eigh()?.0[0]);
    }
    // range of Z*(t) is the future subspace; commutator form on transported states
    let (mut range, mut comm) = (0.0f64, 0.0f64);
    let mut comm_matrix: f64 = 0.0;
    for (psi, &t) in ctx.transported.iter().zip(&ctx.times) {
        let za = rep.z_adjoint(psi, t)?;
        range = range.max(za.sub(&future_part(rep, &za, t)?)?.norm() / psi.norm());
        let zz = rep.z_evolve(&rep.z_adjoint(psi, t)?, t)?;
        let lit = zz.sub(&future_part(rep, psi, t)?)?;
        let past = psi.sub(&future_part(rep, psi, t)?)?;
        comm = comm.max(lit.sub(&past)?.norm() / psi.norm());
    }
    for &t in ctx.times.iter().step_by(5) {
        comm_matrix = comm_matrix.max(commutator(rep, t).distance(&past_projection(rep, t))?);
    }
    let op = assemble_t(&fam)?;
    let vals = op.eigenvalues()?;
    let mut repro: f64 = 0.0;
    let mut commute: f64 = 0.0;
    let cuts: Vec<f64> = ctx.times.iter().map(|t| t.time).collect();
    for (p, below) in fam.projections.iter().zip(op.spectral_projections_below(&cuts)?) {
        repro = repro.max(below.distance(p)?);
        let c = op.matrix.compose(p)?.sub(&p.compose(&op.matrix)?)?;
        commute = commute.max(c.frobenius());
    }
    Ok(vec![
        Check::bound("past_plus_future_identity", sum, 1e-8),
        Check::bound("idempotency", idem, 1e-8),
        Check::bound("hermiticity", herm, 1e-8),
        Check::bound("nesting", nest, 1e-6),
        Check::holds("rank_non_decreasing", ranks_ok),
        Check::bound("rank_at_zero", fam.ranks[0] as f64, 0.0),
        Check::bound("neg_min_increment_eigenvalue", -inc_min, 1e-8),
        Check::bound("adjoint_range_in_future", range, 1e-8),
        Check::bound("commutator_on_transported_states", comm, 1e-8),
        Check::bound("t_reproduces_family", repro, 1e-6),
        Check::bound("t_commutes_with_family", commute, 1e-6),
        Check::bound("t_spectrum_below_truncation", vals[d - 1] - op.truncation_time, 1e-8),
        Check::bound("t_spectrum_nonnegative", (-vals[0]).max(0.0), 1e-8),
        Check::info("final_rank", *fam.ranks.last().unwrap() as f64),
        Check::info("commutator_matrix_defect", comm_matrix),
        Check::info("transport_matrix_defect", transport_defect(rep, ctx.times[1])),
    ])
}

fn c7(ctx: &DenseContext, cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let rep = &ctx.rep;
    let mut corr: f64 = 0.0;
    for psi in &ctx.states {
        for &t in &ctx.times {
            corr = corr.max(correspondence_check(rep, psi, t)?.relative);
        }
    }
    let x = random_hermitian(&rep.grid, &mut rng(cfg.seed ^ 0x7));
    let id = LinOp::identity(rep.grid, Space::HalfLinePos);
    let (mut elem, mut ident, mut past) = (0.0f64, 0.0f64, 0.0f64);
    for (i, &t) in ctx.times.iter().enumerate().step_by(4) {
        let phi = &ctx.states[i % ctx.states.len()];
        let psi = &ctx.states[(i + 1) % ctx.states.len()];
        let me = irreversible_matrix_element(rep, phi, psi, &x, t)?;
        elem = elem.max(me.difference / (phi.norm() * psi.norm() * x.frobenius()));
        let one = irreversible_matrix_element(rep, psi, psi, &id, t)?;
        let lyap = lyapunov_expectation(psi, t)?;
        ident = ident.max((one.reversible.re - lyap).abs().max((one.irreversible.re - lyap).abs()));
        // the past part of psi drops out of the irreversible side
        let lp = rep.lambda.apply(psi)?;
        let past_part = lp.sub(&future_part(rep, &lp, t)?)?;
        let zp = rep.z_evolve(&past_part, t)?;
        let zphi = rep.z_evolve(&future_part(rep, &rep.lambda.apply(phi)?, t)?, t)?;
        past = past.max(inner(&zphi, &x.apply(&zp)?)?.norm());
    }
    Ok(vec![
        Check::bound("correspondence_relative", corr, 1e-8),
        Check::bound("matrix_element_difference", elem, 1e-8),
        Check::bound("identity_observable_matches_curve", ident, 1e-8),
        Check::bound("past_part_irrelevant", past, 1e-8),
    ])
}

fn c8(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let start = Instant::now();
    let states = bump_states(&grid, cfg.n_curve_states, cfg.seed ^ 0x8);
    let n = grid.half();
    let times: Vec<LatticeTime> = (0..=n).step_by(8).map(|m| grid.lattice_steps(m)).collect();
    let quarter = times.iter().position(|t| t.steps == n / 2).unwrap();
    let reports = states
        .par_iter()
        .map(|psi| lyapunov_curve(psi, &times))
        .collect::<Result<Vec<_>>>()?;
    let violation = reports.iter().map(|r| r.max_violation).fold(f64::NEG_INFINITY, f64::max);
    let ratio = max_of(reports.iter().map(|r| r.expectations[quarter] / r.expectations[0]));
    let leak = max_of(reports.iter().map(|r| r.guard_band_leakage));
    let elapsed = start.elapsed().as_secs_f64();
    // cumulative-sum oracle: curve(t) = Σ_{tau_k ≥ t} |h_k|² dtau
    let mut oracle: f64 = 0.0;
    for (psi, rep) in states.iter().zip(&reports).take(10) {
        let p = to_time(&embed(psi)?)?;
        let h = &p.samples[n..];
        let mut tail = vec![0.0; n + 1];
        for k in (0..n).rev() {
            tail[k] = tail[k + 1] + h[k].norm_sqr() * grid.delta_tau;
        }
        for (t, e) in times.iter().zip(&rep.expectations) {
            oracle = oracle.max((tail[t.steps] - e).abs() / rep.expectations[0]);
        }
    }
    Ok(vec![
        Check::bound("max_monotonicity_violation", violation.max(0.0), 1e-10),
        Check::bound("quarter_window_ratio", ratio, 0.05),
        Check::bound("cumulative_oracle_relative", oracle, 1e-8),
        Check::bound("guard_band_leakage", leak, 1e-8),
        Check::timing("runtime_seconds", elapsed, 5.0),
        Check::info("states", states.len() as f64),
        Check::info("times", times.len() as f64),
    ])
}

fn pole_error(grid: &GridSpec, order: u32) -> Result<f64> {
    let mu = if order == 1 { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, -1.0) };
    let f = rational_hardy(grid, &[Pole { mu, order }], &[Complex64::new(1.0, 0.0)])?;
    rel(&hardy_project(&f, Half::Plus)?, &f)
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn c9(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let seq = cfg.refinement()?;
    let simple: Vec<f64> = seq.iter().map(|g| pole_error(g, 1)).collect::<Result<_>>()?;
    let double: Vec<f64> = seq.iter().map(|g| pole_error(g, 2)).collect::<Result<_>>()?;
    let order = |v: &[f64]| (v[v.len() - 2] / v[v.len() - 1]).log2();
    Ok(vec![
        Check::bound("simple_pole_error", pole_error(&grid, 1)?, 0.05),
        Check::bound("double_pole_error", pole_error(&grid, 2)?, 0.012),
        Check::holds("simple_pole_decreasing", decreasing(&simple)),
        Check::holds("double_pole_decreasing", decreasing(&double)),
        Check::info("simple_pole_order", order(&simple)),
        Check::info("double_pole_order", order(&double)),
    ])
}

struct WitnessRatios {
    r1: f64,
    r2: f64,
    r05: f64,
    norm_sqr: f64,
}

fn witness_ratios(grid: &GridSpec) -> Result<WitnessRatios> {
    let t0 = grid.lattice_time(1.0, TimePolicy::Snap)?;
    let f = kernel_witness(grid, Complex64::new(0.0, -1.0), t0, &[Complex64::new(1.0, 0.0)])?;
    let n = f.norm();
    let at = |t: f64| -> Result<f64> { Ok(toeplitz_step(&f, grid.lattice_time(t, TimePolicy::Snap)?)?.norm() / n) };
    Ok(WitnessRatios {
        r1: at(1.0)?,
        r2: at(2.0)?,
        r05: at(0.5)?,
        norm_sqr: f.norm_sqr(),
    })
}

fn c10(cfg: &SelftestConfig, ctx: &DenseContext) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let w = witness_ratios(&grid)?;
    let seq: Vec<f64> = cfg
        .refinement()?
        .iter()
        .map(|g| Ok(witness_ratios(g)?.r1))
        .collect::<Result<_>>()?;
    let oracle = (((-1.0f64).exp() - (-2.0f64).exp()) / (1.0 - (-2.0f64).exp())).sqrt();
    // transported witness in the dense tier: its future part vanishes after t0
    let rep = &ctx.rep;
    let dg = rep.grid;
    let t0 = dg.lattice_time(1.0, TimePolicy::Snap)?;
    let h = kernel_witness(&dg, Complex64::new(0.0, -1.0), t0, &[Complex64::new(1.0, 0.0)])?;
    let psi = rep.transport(&h)?;
    let mut future: f64 = 0.0;
    for t in [1.0, 1.5, 2.0] {
        let lt = dg.lattice_time(t, TimePolicy::Snap)?;
        future = future.max(future_part(rep, &psi, lt)?.norm() / psi.norm());
    }
    let lyap = |mu: Complex64| -> Result<f64> {
        let g = witness_function(&grid, mu, grid.lattice_time(1.0, TimePolicy::Snap)?, &[Complex64::new(1.0, 0.0)])?;
        let psi = restrict(&g)?;
        Ok(lyapunov_expectation(&psi, grid.lattice_time(2.0, TimePolicy::Snap)?)?
            / lyapunov_expectation(&psi, grid.lattice_steps(0))?)
    };
    Ok(vec![
        Check::bound("kernel_ratio_t1", w.r1, 0.05),
        Check::holds("kernel_ratio_decreasing_under_refinement", decreasing(&seq)),
        Check::holds("kernel_nesting_t2_le_t1", w.r2 <= w.r1),
        Check::target("ratio_t_half", w.r05, oracle, 0.01),
        Check::target("norm_sqr_over_2pi_relative", w.norm_sqr / (2.0 * PI) / WITNESS_NORM_SQR, 1.0, 0.02),
        Check::target("norm_sqr_unitary_relative", w.norm_sqr / (PI * (1.0 - (-2.0f64).exp())), 1.0, 0.02),
        Check::bound("transported_future_part", future, 0.05),
        Check::info("restricted_witness_curve_ratio_mu_-i", lyap(Complex64::new(0.0, -1.0))?),
        Check::info("restricted_witness_curve_ratio_mu_25-i", lyap(Complex64::new(25.0, -1.0))?),
    ])
}

fn c11(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let grid = make_grid(1024, 50.0, 1)?;
    let mut r = rng(cfg.seed ^ 0xb);
    let mut worst: f64 = 0.0;
    for _ in 0..6 {
        let f = wavepacket_state(&grid, &mut r);
        let d = hardy_project_oracle(&f)?.sub(&hardy_project(&f, Half::Plus)?)?;
        worst = worst.max(d.norm() / f.norm());
    }
    let f = rational_hardy(&grid, &[Pole { mu: Complex64::new(0.0, -1.0), order: 1 }], &[Complex64::new(1.0, 0.0)])?;
    Ok(vec![
        Check::bound("wavepacket_relative_difference", worst, 1e-3),
        Check::info("lorentzian_oracle_error", rel(&hardy_project_oracle(&f)?, &f)?),
        Check::info("lorentzian_fft_error", rel(&hardy_project(&f, Half::Plus)?, &f)?),
    ])
}

fn c12(cfg: &SelftestConfig, ctx: &DenseContext) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let n = grid.half();
    let mut r = rng(cfg.seed ^ 0xc);
    let (mut toe, mut lyap, mut z) = ([0.0f64; 2], [0.0f64; 2], [0.0f64; 2]);
    let marks = [n, (9 * n) / 10];
    for _ in 0..5 {
        let h = compact_hardy_state(&grid, 0.4 * grid.t_window, &mut r)?;
        for (i, &m) in marks.iter().enumerate() {
            toe[i] = toe[i].max(toeplitz_step(&h, grid.lattice_steps(m))?.norm() / h.norm());
        }
    }
    for psi in bump_states(&grid, 5, cfg.seed ^ 0xd) {
        let e0 = lyapunov_expectation(&psi, grid.lattice_steps(0))?;
        for (i, &m) in marks.iter().enumerate() {
            lyap[i] = lyap[i].max(lyapunov_expectation(&psi, grid.lattice_steps(m))? / e0);
        }
    }
    let dn = ctx.rep.grid.half();
    for psi in ctx.transported.iter().take(5) {
        for (i, &m) in [dn, (9 * dn) / 10].iter().enumerate() {
            z[i] = z[i].max(ctx.rep.z_evolve(psi, ctx.rep.grid.lattice_steps(m))?.norm() / psi.norm());
        }
    }
    Ok(vec![
        Check::bound("toeplitz_at_half_window", toe[0], 1e-6),
        Check::bound("lyapunov_at_half_window", lyap[0], 1e-6),
        Check::bound("z_at_half_window", z[0], 1e-6),
        Check::bound("toeplitz_at_0.45_window", toe[1], 1e-6),
        Check::bound("lyapunov_at_0.45_window", lyap[1], 1e-6),
        Check::bound("z_at_0.45_window", z[1], 1e-6),
    ])
}

/// Matrix-level form of the Heisenberg identity at a few dense-tier times (diagnostic).
pub fn heisenberg_diagnostic(ctx: &DenseContext) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in ctx.times.iter().step_by(5) {
        worst = worst.max(heisenberg_defect(&ctx.rep.omega, &ctx.rep.m_f, t)?);
    }
    Ok(worst)
}

pub fn run_criterion(id: u32, cfg: &SelftestConfig, dense: &mut Option<DenseContext>) -> Result<CriterionResult> {
    let (_, name, class) = CRITERIA[(id - 1) as usize];
    let start = Instant::now();
    if (2..=7).contains(&id) || id == 10 || id == 12 {
        if dense.is_none() {
            *dense = Some(DenseContext::new(cfg)?);
        }
    }
    let ctx = dense.as_ref();
    let mut checks = match id {
        1 => c1(cfg)?,
        2 => c2(ctx.unwrap())?,
        3 => c3(ctx.unwrap())?,
        4 => c4(ctx.unwrap())?,
        5 => c5(ctx.unwrap())?,
        6 => c6(ctx.unwrap())?,
        7 => c7(ctx.unwrap(), cfg)?,
        8 => c8(cfg)?,
        9 => c9(cfg)?,
        10 => c10(cfg, ctx.unwrap())?,
        11 => c11(cfg)?,
        12 => c12(cfg, ctx.unwrap())?,
        _ => return Err(crate::Error::InvalidParameter(format!("no criterion {id}"))),
    };
    if id == 4 {
        checks.push(Check::info("heisenberg_matrix_defect", heisenberg_diagnostic(ctx.unwrap())?));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(CriterionResult {
        id,
        name: name.into(),
        class,
        checks,
        passed,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_selftest(cfg: &SelftestConfig) -> Result<Vec<CriterionResult>> {
    let mut dense = None;
    (1..=12).map(|id| run_criterion(id, cfg, &mut dense)).collect()
}
