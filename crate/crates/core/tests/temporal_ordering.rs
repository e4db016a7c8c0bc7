use lyapunov_core::evolution::{kernel_witness, witness_function};
use lyapunov_core::lambda::IrreversibleRep;
use lyapunov_core::ordering::{
    assemble_t, commutator, correspondence_check, future_part, future_projection, irreversible_matrix_element,
    past_projection, projection_rank, spectral_measure, ProjectionFamily,
};
use lyapunov_core::states::{bump_states, compact_hardy_state, random_hermitian, rng};
use lyapunov_core::{inner, make_grid, restrict, Error, LatticeTime, LinOp, Space, StateVector, TimePolicy};
use faer::Mat;
use num_complex::Complex64;

fn rep() -> IrreversibleRep {
    IrreversibleRep::new(&make_grid(512, 12.5, 1).unwrap()).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn transported_witness(rep: &IrreversibleRep) -> StateVector {
    let g = rep.grid;
    let t0 = g.lattice_time(1.0, TimePolicy::Snap).unwrap();
    rep.transport(&kernel_witness(&g, c(0.0, -1.0), t0, &[c(1.0, 0.0)]).unwrap()).unwrap()
}

#[test]
fn projections_at_zero_and_complementarity() {
    let rep = rep();
    let g = rep.grid;
    let zero = g.lattice_steps(0);
    assert!(past_projection(&rep, zero).frobenius() <= 1e-8);
    let id = LinOp::identity(g, Space::HalfLinePos);
    assert!(future_projection(&rep, zero).distance(&id).unwrap() <= 1e-8);
    for steps in [3, 20, 60] {
        let t = g.lattice_steps(steps);
        let p = past_projection(&rep, t);
        assert!(p.add(&future_projection(&rep, t)).unwrap().distance(&id).unwrap() <= 1e-8);
        assert!(p.compose(&p).unwrap().distance(&p).unwrap() <= 1e-8);
        assert!(projection_rank(&p).unwrap() > 0);
    }
}

#[test]
fn commutator_equals_past_projection_on_transported_states() {
    let rep = rep();
    let g = rep.grid;
    let mut r = rng(2);
    for steps in [2, 10, 30] {
        let t = g.lattice_steps(steps);
        let c = commutator(&rep, t);
        let p = past_projection(&rep, t);
        for _ in 0..3 {
            let psi = rep.transport(&compact_hardy_state(&g, 0.4 * g.t_window, &mut r).unwrap()).unwrap();
            let d = c.apply(&psi).unwrap().sub(&p.apply(&psi).unwrap()).unwrap();
            assert!(d.norm() <= 1e-8 * psi.norm());
        }
    }
}

#[test]
fn witness_leaves_the_future() {
    let rep = rep();
    let g = rep.grid;
    let psi = transported_witness(&rep);
    for t in [1.0, 1.5, 2.5] {
        let lt = g.lattice_time(t, TimePolicy::Snap).unwrap();
        assert!(future_part(&rep, &psi, lt).unwrap().norm() <= 0.05 * psi.norm());
    }
}

fn family(rep: &IrreversibleRep, steps: &[usize]) -> ProjectionFamily {
    let times: Vec<LatticeTime> = steps.iter().map(|&m| rep.grid.lattice_steps(m)).collect();
    spectral_measure(rep, &times).unwrap()
}

#[test]
fn measure_is_additive_and_positive() {
    let rep = rep();
    let fam = family(&rep, &[0, 4, 9, 20, 40]);
    let sum = fam.increments[1].add(&fam.increments[2]).unwrap();
    let direct = fam.projections[3].sub(&fam.projections[1]).unwrap();
    assert!(sum.distance(&direct).unwrap() <= 1e-10);
    for inc in &fam.increments {
        let (vals, _) = inc.eigh().unwrap();
        assert!(vals[0] >= -1e-8 && *vals.last().unwrap() <= 1.0 + 1e-8);
    }
    let total = fam.increments.iter().skip(1).fold(fam.increments[0].clone(), |a, b| a.add(b).unwrap());
    assert!(total.distance(fam.projections.last().unwrap()).unwrap() <= 1e-10);
    assert!(fam.ranks.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn measure_exhausts_compact_states() {
    let rep = rep();
    let g = rep.grid;
    let fam = family(&rep, &[0, g.half() - 1]);
    let mut r = rng(5);
    for _ in 0..3 {
        let psi = rep.transport(&compact_hardy_state(&g, 0.4 * g.t_window, &mut r).unwrap()).unwrap();
        let d = fam.projections[1].apply(&psi).unwrap().sub(&psi).unwrap();
        assert!(d.norm() <= 1e-6 * psi.norm());
    }
}

#[test]
fn bad_time_grids() {
    let rep = rep();
    let g = rep.grid;
    assert!(matches!(spectral_measure(&rep, &[]), Err(Error::EmptyFamily)));
    let bad = [g.lattice_steps(0), g.lattice_steps(5), g.lattice_steps(5)];
    assert!(matches!(spectral_measure(&rep, &bad), Err(Error::NonMonotoneGrid)));
    assert!(matches!(spectral_measure(&rep, &bad[1..]), Err(Error::NonMonotoneGrid)));
}

#[test]
fn ordering_operator() {
    let rep = rep();
    let g = rep.grid;
    let steps = [0, 4, 8, 16, 32, 64];
    let fam = family(&rep, &steps);
    let t = assemble_t(&fam).unwrap();
    assert!(t.matrix.hermitian);
    let vals = t.eigenvalues().unwrap();
    assert!(vals[0] >= -1e-8 && *vals.last().unwrap() <= t.truncation_time + 1e-8);
    // eigenvalues sit on the midpoints (and the truncation time) with increment multiplicities
    let mut mids: Vec<(f64, usize)> = fam
        .increments
        .iter()
        .enumerate()
        .map(|(k, inc)| (0.5 * (fam.times[k].time + fam.times[k + 1].time), projection_rank(inc).unwrap()))
        .collect();
    mids.push((t.truncation_time, vals.len() - fam.ranks.last().unwrap()));
    for (m, mult) in mids {
        let count = vals.iter().filter(|v| (*v - m).abs() < 1e-6).count();
        assert_eq!(count, mult, "eigenvalue {m}");
    }
    for (p, lt) in fam.projections.iter().zip(&fam.times) {
        let comm = t.matrix.compose(p).unwrap().sub(&p.compose(&t.matrix).unwrap()).unwrap();
        assert!(comm.frobenius() <= 1e-6);
        assert!(t.spectral_projection_below(lt.time).unwrap().distance(p).unwrap() <= 1e-6);
    }
    // the transported witness has left by t0, so its ordering time is at most t0 plus a lattice cell
    let psi = transported_witness(&rep).normalized().unwrap();
    let fine: Vec<usize> = (0..=64).collect();
    let tf = assemble_t(&family(&rep, &fine)).unwrap();
    let expect = inner(&psi, &tf.matrix.apply(&psi).unwrap()).unwrap().re;
    let t0 = g.lattice_time(1.0, TimePolicy::Snap).unwrap().time;
    assert!(expect >= 0.0 && expect <= t0 + g.delta_tau + 0.05 * tf.truncation_time, "{expect}");
}

#[test]
fn single_interval_family() {
    let rep = rep();
    let g = rep.grid;
    let fam = family(&rep, &[0, g.half()]);
    let t = assemble_t(&fam).unwrap();
    // at T/2 every state has left the future
    let mid = 0.5 * g.lattice_steps(g.half()).time;
    let id = LinOp::identity(g, Space::HalfLinePos).scale(mid);
    assert!(t.matrix.distance(&id).unwrap() <= 1e-8);
}

#[test]
fn matrix_elements() {
    let rep = rep();
    let g = rep.grid;
    let states = bump_states(&g, 4, 17);
    let x = random_hermitian(&g, &mut rng(1));
    let id = LinOp::identity(g, Space::HalfLinePos);
    for steps in [0, 5, 16, 40] {
        let t = g.lattice_steps(steps);
        let me = irreversible_matrix_element(&rep, &states[0], &states[1], &x, t).unwrap();
        assert!(me.difference <= 1e-8 * x.frobenius());
        let one = irreversible_matrix_element(&rep, &states[2], &states[2], &id, t).unwrap();
        let corr = correspondence_check(&rep, &states[2], t).unwrap();
        assert!((one.irreversible.re - corr.reversible).abs() <= 1e-10);
        assert!(corr.relative <= 1e-8);
    }
    let zero = g.lattice_steps(0);
    let me = irreversible_matrix_element(&rep, &states[0], &states[1], &x, zero).unwrap();
    let xl = rep.lambda.compose(&x).unwrap().compose(&rep.lambda).unwrap();
    let direct = inner(&states[0], &xl.apply(&states[1]).unwrap()).unwrap();
    assert!((me.reversible - direct).norm() <= 1e-12 && (me.irreversible - direct).norm() <= 1e-10);
    let c0 = correspondence_check(&rep, &states[3], zero).unwrap();
    assert!((c0.irreversible - rep.lambda.apply(&states[3]).unwrap().norm_sqr()).abs() <= 1e-12);

    let mut m = Mat::<Complex64>::zeros(g.dim(Space::HalfLinePos), g.dim(Space::HalfLinePos));
    m[(0, 1)] = c(1.0, 0.0);
    let bad = LinOp::new(g, Space::HalfLinePos, Space::HalfLinePos, m).unwrap();
    assert!(matches!(
        irreversible_matrix_element(&rep, &states[0], &states[1], &bad, zero),
        Err(Error::NotHermitian(_))
    ));
}

#[test]
fn past_part_drops_out() {
    let rep = rep();
    let g = rep.grid;
    let x = random_hermitian(&g, &mut rng(4));
    for psi in bump_states(&g, 3, 8) {
        for steps in [4, 20] {
            let t = g.lattice_steps(steps);
            let lp = rep.lambda.apply(&psi).unwrap();
            let past = lp.sub(&future_part(&rep, &lp, t).unwrap()).unwrap();
            let z = rep.z_evolve(&past, t).unwrap();
            assert!(inner(&z, &x.apply(&z).unwrap()).unwrap().norm() <= 1e-10);
        }
    }
}

#[test]
fn witness_correspondence_vanishes_after_support() {
    let rep = rep();
    let g = rep.grid;
    // a carrier inside the band keeps the restriction to sigma > 0 close to the witness
    let t0 = g.lattice_time(1.0, TimePolicy::Snap).unwrap();
    let w = witness_function(&g, c(6.0, -1.0), t0, &[c(1.0, 0.0)]).unwrap();
    let psi = restrict(&w).unwrap();
    let scale = rep.lambda.apply(&psi).unwrap().norm_sqr();
    for t in [1.5, 2.0, 3.0] {
        let corr = correspondence_check(&rep, &psi, g.lattice_time(t, TimePolicy::Snap).unwrap()).unwrap();
        assert!(corr.reversible <= 0.05 * scale && corr.irreversible <= 0.05 * scale, "{corr:?}");
    }
}
