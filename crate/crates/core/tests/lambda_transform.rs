use lyapunov_core::lambda::{build_isometry, build_lambda, IrreversibleRep, PolarFactors};
use lyapunov_core::states::{bump_states, compact_hardy_state, rng};
use lyapunov_core::{inner, make_grid, Error, GridSpec, LinOp, Space};
use faer::Mat;
use num_complex::Complex64;

fn grid() -> GridSpec {
    make_grid(512, 12.5, 1).unwrap()
}

fn defect(m: &Mat<Complex64>) -> f64 {
    let id = Mat::<Complex64>::identity(m.nrows(), m.ncols());
    (m - &id).norm_l2()
}

#[test]
fn square_root_and_isometry() {
    let rep = IrreversibleRep::new(&grid()).unwrap();
    assert!(rep.lambda.compose(&rep.lambda).unwrap().distance(&rep.m_f).unwrap() <= 1e-10);
    let r = &rep.r.matrix;
    assert!(defect(&(r.adjoint() * r)) <= 1e-10);
    assert!(defect(&(r * r.adjoint())) <= 1e-10);
    assert!(rep.r.compose(&rep.lambda).unwrap().distance(&rep.omega).unwrap() <= 1e-8);
    let (vals, _) = rep.lambda.eigh().unwrap();
    assert!(vals[0] >= -1e-12 && *vals.last().unwrap() <= 1.0 + 1e-10);
}

#[test]
fn eigen_route_agrees_with_polar_route() {
    let rep = IrreversibleRep::new(&grid()).unwrap();
    let eig = build_lambda(&rep.m_f).unwrap();
    assert!(eig.compose(&eig).unwrap().distance(&rep.m_f).unwrap() <= 1e-10);
    // eigenvalues near zero are resolved only to sqrt(eps) by the square root
    assert!(eig.distance(&rep.lambda).unwrap() <= 1e-6);
    let (vals, vecs) = rep.m_f.eigh().unwrap();
    for i in [vals.len() - 1, vals.len() / 2] {
        let v: Vec<Complex64> = (0..vals.len()).map(|r| vecs[(r, i)]).collect();
        let lv = eig.matrix.as_ref() * faer::ColRef::from_slice(&v);
        for (r, x) in v.iter().enumerate() {
            assert!((lv[r] - x * vals[i].max(0.0).sqrt()).norm() < 1e-10);
        }
    }
}

#[test]
fn isometry_builders_agree() {
    let rep = IrreversibleRep::new(&grid()).unwrap();
    let r = build_isometry(&rep.omega, &rep.lambda).unwrap();
    assert!(r.distance(&rep.r).unwrap() <= 1e-10);
    let polar = PolarFactors::new(&rep.omega).unwrap();
    assert!((polar.unitary() - &rep.r.matrix).norm_l2() <= 1e-10);
    let bad = LinOp::identity(make_grid(64, 4.0, 1).unwrap(), Space::HalfLinePos);
    assert!(build_isometry(&rep.omega, &bad).is_err());
}

#[test]
fn regularized_inverse_on_well_conditioned_subspace() {
    let rep = IrreversibleRep::new(&grid()).unwrap();
    let (vals, vecs) = rep.lambda.eigh().unwrap();
    let g = rep.grid;
    let mut checked = 0;
    for i in (0..vals.len()).filter(|&i| vals[i] > 1e-6) {
        let v: Vec<Complex64> = (0..vals.len()).map(|r| vecs[(r, i)]).collect();
        let psi = lyapunov_core::StateVector::from_coords(g, Space::HalfLinePos, v).unwrap();
        // Omega Lambda^{-1} v = Omega v / lambda
        let oracle = rep.omega.apply(&psi).unwrap().scale(Complex64::new(1.0 / vals[i], 0.0));
        let r = rep.r.apply(&psi).unwrap();
        assert!(r.sub(&oracle).unwrap().norm() <= 1e-6 * psi.norm(), "lambda = {}", vals[i]);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let g = make_grid(8, 1.0, 1).unwrap();
    let mut m = Mat::<Complex64>::zeros(4, 4);
    m[(0, 1)] = Complex64::new(1.0, 0.0);
    let op = LinOp::new(g, Space::HalfLinePos, Space::HalfLinePos, m).unwrap();
    assert!(matches!(build_lambda(&op), Err(Error::NotHermitian(_))));
    let neg = LinOp::identity(g, Space::HalfLinePos).scale(-1.0);
    assert!(matches!(build_lambda(&neg), Err(Error::NegativeEigenvalue(_))));
}

#[test]
fn z_semigroup_and_unitary_equivalence() {
    let rep = IrreversibleRep::new(&grid()).unwrap();
    let g = rep.grid;
    assert!(defect(&rep.z_matrix(g.lattice_steps(0)).matrix) <= 1e-10);
    for (a, b) in [(1, 2), (10, 30), (64, 100), (128, 128)] {
        let lhs = rep.z_matrix(g.lattice_steps(a)).compose(&rep.z_matrix(g.lattice_steps(b))).unwrap();
        assert!(lhs.distance(&rep.z_matrix(g.lattice_steps(a + b))).unwrap() <= 1e-8);
        let t = g.lattice_steps(a);
        let back = rep.r.compose(&rep.z_matrix(t)).unwrap().compose(&rep.r.adjoint()).unwrap();
        assert!(back.distance(&rep.toeplitz_matrix(t)).unwrap() <= 1e-8);
    }
    for psi in bump_states(&g, 10, 6) {
        let mut prev = psi.norm();
        for steps in (0..=g.half()).step_by(16) {
            let now = rep.z_evolve(&psi, g.lattice_steps(steps)).unwrap().norm();
            assert!(now <= prev + 1e-12);
            prev = now;
        }
    }
}

#[test]
fn z_adjoint_is_a_right_inverse_and_transported_states_decay() {
    let rep = IrreversibleRep::new(&grid()).unwrap();
    let g = rep.grid;
    let mut r = rng(12);
    for steps in [1, 8, 25] {
        let psi = rep.transport(&compact_hardy_state(&g, 0.4 * g.t_window, &mut r).unwrap()).unwrap();
        let t = g.lattice_steps(steps);
        let back = rep.z_evolve(&rep.z_adjoint(&psi, t).unwrap(), t).unwrap();
        assert!(back.sub(&psi).unwrap().norm() <= 1e-8);
        assert!(rep.z_evolve(&psi, g.lattice_steps(g.half())).unwrap().norm() <= 1e-6 * psi.norm());
    }
}

#[test]
fn intertwining() {
    let rep = IrreversibleRep::new(&grid()).unwrap();
    let g = rep.grid;
    let states = bump_states(&g, 10, 21);
    let zero = rep.intertwining_residual(g.lattice_steps(0), &states).unwrap();
    assert!(zero.forward <= 1e-12 && zero.adjoint <= 1e-12);
    for steps in [1, 16, 40] {
        let res = rep.intertwining_residual(g.lattice_steps(steps), &states).unwrap();
        assert!(res.forward <= 1e-8 && res.adjoint <= 1e-8);
        assert!((res.forward - res.adjoint).abs() <= 1e-10);
    }
    // (psi, M_F psi) = ‖Lambda psi‖²
    for psi in &states {
        let q = inner(psi, &rep.m_f.apply(psi).unwrap()).unwrap().re;
        assert!((q - rep.lambda.apply(psi).unwrap().norm_sqr()).abs() <= 1e-10 * q.max(1e-300));
    }
}
