//! Cart + two-link pendulum: parameters, energies and nonlinear equations of motion.
//!
//! Angles are measured from the upward vertical, so `θ₁ = θ₂ = 0` is the
//! upright (unstable) equilibrium and `θ₁ = θ₂ = π` is the hanging one.
//! The state is ordered `[x_c, θ₁, θ₂, ẋ_c, θ̇₁, θ̇₂]`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Physical description of the cart and both links.
///
/// `link*_com` is the distance from the link's lower joint to its center of
/// mass; `link*_inertia` is the moment of inertia about that center of mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub cart_mass: f64,
    pub link1_mass: f64,
    pub link2_mass: f64,
    pub link1_length: f64,
    pub link2_length: f64,
    pub link1_com: f64,
    pub link2_com: f64,
    pub link1_inertia: f64,
    pub link2_inertia: f64,
    /// Viscous cart friction, N·s/m.
    pub cart_friction: f64,
    pub gravity: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::uniform_rods(1.0, 0.5, 0.5, 0.5, 0.5, 0.1, 9.81)
    }
}

impl PhysicalParams {
    /// Links modeled as uniform thin rods: `l = L/2`, `J = m·L²/12`.
    pub fn uniform_rods(
        cart_mass: f64,
        link1_mass: f64,
        link2_mass: f64,
        link1_length: f64,
        link2_length: f64,
        cart_friction: f64,
        gravity: f64,
    ) -> Self {
        Self {
            cart_mass,
            link1_mass,
            link2_mass,
            link1_length,
            link2_length,
            link1_com: link1_length / 2.0,
            link2_com: link2_length / 2.0,
            link1_inertia: link1_mass * link1_length * link1_length / 12.0,
            link2_inertia: link2_mass * link2_length * link2_length / 12.0,
            cart_friction,
            gravity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cart_mass", self.cart_mass),
            ("link1_mass", self.link1_mass),
            ("link2_mass", self.link2_mass),
            ("link1_length", self.link1_length),
            ("link2_length", self.link2_length),
            ("link1_com", self.link1_com),
            ("link2_com", self.link2_com),
            ("gravity", self.gravity),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams { field, reason: format!("must be finite and > 0, got {value}") });
            }
        }
        let non_negative = [
            ("link1_inertia", self.link1_inertia),
            ("link2_inertia", self.link2_inertia),
            ("cart_friction", self.cart_friction),
        ];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParams { field, reason: format!("must be finite and >= 0, got {value}") });
            }
        }
        if self.link1_com > self.link1_length {
            return Err(Error::InvalidParams {
                field: "link1_com",
                reason: "center of mass lies beyond the link".into(),
            });
        }
        if self.link2_com > self.link2_length {
            return Err(Error::InvalidParams {
                field: "link2_com",
                reason: "center of mass lies beyond the link".into(),
            });
        }
        Ok(())
    }
}

/// Cart position, link angles and their rates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlantState {
    pub cart_position: f64,
    pub lower_angle: f64,
    pub upper_angle: f64,
    pub cart_velocity: f64,
    pub lower_rate: f64,
    pub upper_rate: f64,
}

impl PlantState {
    pub const DIM: usize = 6;

    pub fn from_array(x: [f64; 6]) -> Self {
        Self {
            cart_position: x[0],
            lower_angle: x[1],
            upper_angle: x[2],
            cart_velocity: x[3],
            lower_rate: x[4],
            upper_rate: x[5],
        }
    }

    /// Reads the first six entries of `x`. Panics if `x` is shorter.
    pub fn from_slice(x: &[f64]) -> Self {
        Self::from_array([x[0], x[1], x[2], x[3], x[4], x[5]])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.cart_position, self.lower_angle, self.upper_angle, self.cart_velocity, self.lower_rate, self.upper_rate]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Horizontal force applied to the cart, N.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeneralizedForce {
    pub cart_force: f64,
}

impl GeneralizedForce {
    pub fn new(cart_force: f64) -> Self {
        Self { cart_force }
    }
}

pub fn total_mass(params: &PhysicalParams) -> f64 {
    params.cart_mass + params.link1_mass + params.link2_mass
}

pub fn kinetic_energy(params: &PhysicalParams, state: &PlantState) -> f64 {
    let p = params;
    let (t1, t2) = (state.lower_angle, state.upper_angle);
    let (xd, w1, w2) = (state.cart_velocity, state.lower_rate, state.upper_rate);

    let cart = 0.5 * p.cart_mass * xd * xd;

    let v1x = xd + p.link1_com * w1 * t1.cos();
    let v1y = p.link1_com * w1 * t1.sin();
    let link1 = 0.5 * p.link1_mass * (v1x * v1x + v1y * v1y) + 0.5 * p.link1_inertia * w1 * w1;

    let v2x = xd + p.link1_length * w1 * t1.cos() + p.link2_com * w2 * t2.cos();
    let v2y = p.link1_length * w1 * t1.sin() + p.link2_com * w2 * t2.sin();
    let link2 = 0.5 * p.link2_mass * (v2x * v2x + v2y * v2y) + 0.5 * p.link2_inertia * w2 * w2;

    cart + link1 + link2
}

/// Gravitational potential energy with the pivot height as datum.
pub fn potential_energy(params: &PhysicalParams, state: &PlantState) -> f64 {
    let p = params;
    let (c1, c2) = (state.lower_angle.cos(), state.upper_angle.cos());
    p.link1_mass * p.gravity * p.link1_com * c1 + p.link2_mass * p.gravity * (p.link1_length * c1 + p.link2_com * c2)
}

pub fn total_energy(params: &PhysicalParams, state: &PlantState) -> f64 {
    kinetic_energy(params, state) + potential_energy(params, state)
}

/// Lumped coefficients shared by the mass matrix and the force vector.
struct Coupling {
    total: f64,
    first_moment1: f64,
    first_moment2: f64,
    cross: f64,
    inertia1: f64,
    inertia2: f64,
}

impl Coupling {
    fn new(p: &PhysicalParams) -> Self {
        Self {
            total: total_mass(p),
            first_moment1: p.link1_mass * p.link1_com + p.link2_mass * p.link1_length,
            first_moment2: p.link2_mass * p.link2_com,
            cross: p.link2_mass * p.link1_length * p.link2_com,
            inertia1: p.link1_mass * p.link1_com * p.link1_com
                + p.link2_mass * p.link1_length * p.link1_length
                + p.link1_inertia,
            inertia2: p.link2_mass * p.link2_com * p.link2_com + p.link2_inertia,
        }
    }
}

/// Configuration-dependent generalized mass matrix over `(x_c, θ₁, θ₂)`.
pub fn mass_matrix(params: &PhysicalParams, state: &PlantState) -> Matrix3<f64> {
    let c = Coupling::new(params);
    let (t1, t2) = (state.lower_angle, state.upper_angle);
    let m12 = c.first_moment1 * t1.cos();
    let m13 = c.first_moment2 * t2.cos();
    let m23 = c.cross * (t1 - t2).cos();
    Matrix3::new(
        c.total, m12, m13, //
        m12, c.inertia1, m23, //
        m13, m23, c.inertia2,
    )
}

/// Time derivative `[ẋ_c, θ̇₁, θ̇₂, ẍ_c, θ̈₁, θ̈₂]` of the full nonlinear model.
///
/// Viscous friction `-f·ẋ_c` acts on the cart channel alongside `force`.
pub fn nonlinear_derivative(params: &PhysicalParams, state: &PlantState, force: GeneralizedForce) -> Result<[f64; 6]> {
    let c = Coupling::new(params);
    let (t1, t2) = (state.lower_angle, state.upper_angle);
    let (xd, w1, w2) = (state.cart_velocity, state.lower_rate, state.upper_rate);
    let g = params.gravity;
    let s12 = (t1 - t2).sin();

    let rhs = Vector3::new(
        force.cart_force - params.cart_friction * xd
            + c.first_moment1 * w1 * w1 * t1.sin()
            + c.first_moment2 * w2 * w2 * t2.sin(),
        c.first_moment1 * g * t1.sin() - c.cross * w2 * w2 * s12,
        c.first_moment2 * g * t2.sin() + c.cross * w1 * w1 * s12,
    );

    let accel = mass_matrix(params, state)
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?
        .solve(&rhs);

    if !accel.iter().all(|a| a.is_finite()) {
        return Err(Error::Numerical("non-finite acceleration".into()));
    }
    Ok([xd, w1, w2, accel[0], accel[1], accel[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_params() -> PhysicalParams {
        let mut p = PhysicalParams::uniform_rods(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 10.0);
        p.link1_inertia = 0.0;
        p.link2_inertia = 0.0;
        p
    }

    #[test]
    fn total_mass_sums() {
        let mut p = unit_params();
        assert_eq!(total_mass(&p), 3.0);
        p.link1_mass = 0.5;
        p.link2_mass = 0.5;
        assert_eq!(total_mass(&p), 2.0);
        p.cart_mass = 2.3;
        p.link1_mass = 0.1;
        p.link2_mass = 0.1;
        assert_relative_eq!(total_mass(&p), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn kinetic_energy_cases() {
        let p = unit_params();
        assert_eq!(kinetic_energy(&p, &PlantState::default()), 0.0);

        let sliding = PlantState { cart_velocity: 1.0, ..Default::default() };
        assert_relative_eq!(kinetic_energy(&p, &sliding), 1.5, epsilon = 1e-15);

        // Only the lower link rotates: m1 l1² + m2 L1² + J1, halved.
        let mut q = p;
        q.link1_inertia = 1.0 / 12.0;
        q.link2_inertia = 1.0 / 12.0;
        let spinning = PlantState { lower_rate: 1.0, ..Default::default() };
        let expected = 0.5 * (1.0 * 0.25) + 0.5 * (1.0 * 1.0) + 0.5 * (1.0 / 12.0);
        assert_relative_eq!(kinetic_energy(&q, &spinning), expected, epsilon = 1e-15);
    }

    #[test]
    fn potential_energy_cases() {
        let p = unit_params();
        let at = |a: f64| PlantState { lower_angle: a, upper_angle: a, ..Default::default() };
        assert_relative_eq!(potential_energy(&p, &at(0.0)), 20.0, epsilon = 1e-12);
        assert!(potential_energy(&p, &at(FRAC_PI_2)).abs() < 1e-12);
        assert_relative_eq!(potential_energy(&p, &at(PI)), -20.0, epsilon = 1e-12);
    }

    #[test]
    fn rest_equilibria_have_zero_derivative() {
        let p = PhysicalParams::default();
        // sin(π) is 1.2e-16 in floating point, so allow a few ulps of g/l.
        let tol = 16.0 * f64::EPSILON * p.gravity / p.link1_com.min(p.link2_com);
        for (a, b) in [(0.0, 0.0), (PI, PI), (0.0, PI), (PI, 0.0)] {
            let s = PlantState { lower_angle: a, upper_angle: b, ..Default::default() };
            let d = nonlinear_derivative(&p, &s, GeneralizedForce::default()).unwrap();
            assert_eq!(&d[..3], &[0.0; 3]);
            for v in d {
                assert!(v.abs() <= tol, "{a},{b}: {d:?}");
            }
        }
        let d = nonlinear_derivative(&p, &PlantState::default(), GeneralizedForce::default()).unwrap();
        assert_eq!(d, [0.0; 6]);
    }

    #[test]
    fn small_tilt_falls_away_from_vertical() {
        let p = unit_params();
        let s = PlantState { lower_angle: 0.01, ..Default::default() };
        let d = nonlinear_derivative(&p, &s, GeneralizedForce::default()).unwrap();
        assert_eq!(&d[..3], &[0.0, 0.0, 0.0]);
        assert!(d[4] > 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = PhysicalParams::default();
        p.link2_com = 2.0 * p.link2_length;
        assert!(matches!(p.validate(), Err(Error::InvalidParams { field: "link2_com", .. })));
        let p = PhysicalParams { cart_friction: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(PhysicalParams::default().validate().is_ok());
    }
}
