//! Equations of motion checked against an oracle built only from the
//! energy functions: `M = ∂²T/∂q̇²` by polarization, the remaining
//! Euler–Lagrange terms by central differences.

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use dipbat::dynamics::{kinetic_energy, mass_matrix, nonlinear_derivative, potential_energy, total_energy};
use dipbat::sim::Rk4;
use dipbat::{GeneralizedForce, PhysicalParams, PlantState};

fn state(q: [f64; 3], qd: [f64; 3]) -> PlantState {
    PlantState::from_array([q[0], q[1], q[2], qd[0], qd[1], qd[2]])
}

fn lagrangian(p: &PhysicalParams, q: [f64; 3], qd: [f64; 3]) -> f64 {
    let s = state(q, qd);
    kinetic_energy(p, &s) - potential_energy(p, &s)
}

/// `T` is quadratic in `q̇`, so polarization recovers `M(q)` up to rounding.
fn energy_mass_matrix(p: &PhysicalParams, q: [f64; 3]) -> Matrix3<f64> {
    let t = |v: [f64; 3]| kinetic_energy(p, &state(q, v));
    let unit = |i: usize| {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        e
    };
    Matrix3::from_fn(|i, j| {
        if i == j {
            2.0 * t(unit(i))
        } else {
            let mut v = unit(i);
            v[j] = 1.0;
            t(v) - t(unit(i)) - t(unit(j))
        }
    })
}

fn lagrange_accelerations(p: &PhysicalParams, x: [f64; 6], force: f64) -> Vector3<f64> {
    let q = [x[0], x[1], x[2]];
    let qd = Vector3::new(x[3], x[4], x[5]);
    let h = 1e-5;
    let shifted = |k: usize, d: f64| {
        let mut q2 = q;
        q2[k] += d;
        q2
    };
    let m = energy_mass_matrix(p, q);
    // ∂L/∂q and (∂(M·q̇)/∂q)·q̇ by central differences.
    let mut dl = Vector3::zeros();
    let mut dp = Matrix3::zeros();
    for k in 0..3 {
        let qd_arr = [x[3], x[4], x[5]];
        dl[k] = (lagrangian(p, shifted(k, h), qd_arr) - lagrangian(p, shifted(k, -h), qd_arr)) / (2.0 * h);
        let col = (energy_mass_matrix(p, shifted(k, h)) - energy_mass_matrix(p, shifted(k, -h))) * qd / (2.0 * h);
        dp.set_column(k, &col);
    }
    let generalized = Vector3::new(force - p.cart_friction * x[3], 0.0, 0.0);
    m.lu().solve(&(generalized + dl - dp * qd)).expect("mass matrix is invertible")
}

fn assert_matches_oracle(p: &PhysicalParams, x: [f64; 6], force: f64) {
    let d = nonlinear_derivative(p, &PlantState::from_array(x), GeneralizedForce::new(force)).unwrap();
    let oracle = lagrange_accelerations(p, x, force);
    for i in 0..3 {
        assert_eq!(d[i], x[i + 3]);
        let scale = oracle[i].abs().max(1.0);
        assert!((d[i + 3] - oracle[i]).abs() <= 1e-6 * scale, "accel {i}: {} vs oracle {}", d[i + 3], oracle[i]);
    }
}

#[test]
fn small_lower_tilt_matches_lagrangian() {
    let p = PhysicalParams::default();
    assert_matches_oracle(&p, [0.0, 0.01, 0.0, 0.0, 0.0, 0.0], 0.0);
    // A positive lower tilt accelerates the lower link further over, and
    // pushes the cart the other way.
    let d =
        nonlinear_derivative(&p, &PlantState { lower_angle: 0.01, ..Default::default() }, GeneralizedForce::default())
            .unwrap();
    assert!(d[4] > 0.0 && d[3] < 0.0);
}

#[test]
fn polarized_mass_matrix_matches() {
    let p = PhysicalParams::uniform_rods(1.3, 0.4, 0.7, 0.6, 0.9, 0.2, 9.81);
    let s = PlantState { lower_angle: 0.7, upper_angle: -1.9, ..Default::default() };
    let m = mass_matrix(&p, &s);
    let oracle = energy_mass_matrix(&p, [0.0, 0.7, -1.9]);
    assert!((m - oracle).amax() <= 1e-13 * m.amax());
}

#[test]
fn energy_is_conserved_without_friction() {
    let p = PhysicalParams { cart_friction: 0.0, ..Default::default() };
    let mut x = vec![0.1, 0.4, -0.3, 0.2, 0.5, -1.0];
    let e0 = total_energy(&p, &PlantState::from_slice(&x));
    let mut rk = Rk4::new();
    let mut f = |x: &[f64], dx: &mut [f64]| {
        dx.copy_from_slice(&nonlinear_derivative(&p, &PlantState::from_slice(x), GeneralizedForce::default())?);
        Ok(())
    };
    for _ in 0..20_000 {
        rk.step(&mut f, &mut x, 1e-4).unwrap();
    }
    let e = total_energy(&p, &PlantState::from_slice(&x));
    assert!(((e - e0) / e0).abs() < 1e-6, "drift {}", (e - e0) / e0);
}

#[test]
fn friction_only_dissipates() {
    let p = PhysicalParams { cart_friction: 0.5, ..Default::default() };
    let mut x = vec![0.0, 0.3, 0.2, 1.0, -0.4, 0.6];
    let mut rk = Rk4::new();
    let mut f = |x: &[f64], dx: &mut [f64]| {
        dx.copy_from_slice(&nonlinear_derivative(&p, &PlantState::from_slice(x), GeneralizedForce::default())?);
        Ok(())
    };
    let mut prev = total_energy(&p, &PlantState::from_slice(&x));
    for _ in 0..5_000 {
        rk.step(&mut f, &mut x, 1e-4).unwrap();
        let e = total_energy(&p, &PlantState::from_slice(&x));
        assert!(e <= prev + 1e-12, "energy rose from {prev} to {e}");
        prev = e;
    }
}

fn params_strategy() -> impl Strategy<Value = PhysicalParams> {
    (0.2..3.0, 0.05..2.0, 0.05..2.0, 0.1..2.0, 0.1..2.0, 0.0..1.0)
        .prop_map(|(mc, m1, m2, l1, l2, f)| PhysicalParams::uniform_rods(mc, m1, m2, l1, l2, f, 9.81))
}

fn state_strategy() -> impl Strategy<Value = [f64; 6]> {
    let angle = -std::f64::consts::PI..std::f64::consts::PI;
    (-2.0..2.0, angle.clone(), angle, -2.0..2.0, -3.0..3.0, -3.0..3.0).prop_map(|(a, b, c, d, e, f)| [a, b, c, d, e, f])
}

proptest! {
    #[test]
    fn accelerations_match_lagrangian(p in params_strategy(), x in state_strategy(), u in -5.0..5.0f64) {
        assert_matches_oracle(&p, x, u);
    }

    #[test]
    fn mass_matrix_is_symmetric_positive_definite(p in params_strategy(), x in state_strategy()) {
        let m = mass_matrix(&p, &PlantState::from_array(x));
        prop_assert!((m - m.transpose()).amax() == 0.0);
        prop_assert!(m.cholesky().is_some());
    }

    #[test]
    fn mirrored_state_mirrors_derivative(p in params_strategy(), x in state_strategy(), u in -5.0..5.0f64) {
        let d = nonlinear_derivative(&p, &PlantState::from_array(x), GeneralizedForce::new(u)).unwrap();
        let neg = x.map(|v| -v);
        let dm = nonlinear_derivative(&p, &PlantState::from_array(neg), GeneralizedForce::new(-u)).unwrap();
        for i in 0..6 {
            prop_assert!((d[i] + dm[i]).abs() <= 1e-12 * d[i].abs().max(1.0));
        }
    }

    #[test]
    fn cart_position_does_not_enter(p in params_strategy(), x in state_strategy(), shift in -10.0..10.0f64) {
        let d = nonlinear_derivative(&p, &PlantState::from_array(x), GeneralizedForce::default()).unwrap();
        let mut y = x;
        y[0] += shift;
        let ds = nonlinear_derivative(&p, &PlantState::from_array(y), GeneralizedForce::default()).unwrap();
        prop_assert_eq!(d, ds);
    }
}
