//! Small-signal models about the upright equilibrium.
//!
//! Two linear models are available and they are not expected to coincide:
//! [`paper_linear_model`] evaluates the closed-form `p₁..p₅`/`Den` ratios
//! verbatim, while [`jacobian_model`] differentiates the nonlinear equations
//! of motion numerically. [`ModelDiscrepancy`] quantifies the gap.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{nonlinear_derivative, total_mass, GeneralizedForce, PhysicalParams, PlantState};
use crate::error::{Error, Result};

/// Dense linear model `ẋ = A x + B u`, `y = C x + D u` with a single input.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpaceModel {
    /// Full-state output model (`C = I`, `D = 0`).
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::with_output(a, b, DMatrix::identity(n, n), DMatrix::zeros(n, 1))
    }

    pub fn with_output(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || b.ncols() != 1 {
            return Err(Error::DimensionMismatch(format!("B is {}x{}, expected {n}x1", b.nrows(), b.ncols())));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "D is {}x{}, expected {}x1",
                d.nrows(),
                d.ncols(),
                c.nrows()
            )));
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !(finite(&a) && finite(&b) && finite(&c) && finite(&d)) {
            return Err(Error::Numerical("state-space model has non-finite entries".into()));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn input(&self) -> DVector<f64> {
        self.b.column(0).into_owned()
    }
}

/// Composite mass-length products of the closed-form linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PCoefficients {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p5: f64,
    pub den: f64,
    /// Total mass `M_c + m₁ + m₂` used inside `den`.
    pub total_mass: f64,
}

pub fn p_coefficients(params: &PhysicalParams) -> Result<PCoefficients> {
    let (m1, m2) = (params.link1_mass, params.link2_mass);
    let (l1, l2) = (params.link1_length, params.link2_length);
    let m = total_mass(params);

    let p1 = (m1 + 2.0 * m2) * l1;
    let p2 = m2 * l2;
    let p3 = 2.0 * m2 * l1 * l2;
    let p4 = (m1 + 4.0 * m2) * l1 * l2;
    let p5 = m2 * l1 * l1;

    let terms = [m * p4 * p5, 2.0 * p1 * p2 * p3, -p2 * p2 * p4, -m * p3 * p3, -p1 * p1 * p5];
    let den: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if !den.is_finite() || den.abs() <= 1e-12 * scale {
        return Err(Error::Degenerate(format!("Den = {den} vanishes for these parameters")));
    }
    Ok(PCoefficients { p1, p2, p3, p4, p5, den, total_mass: m })
}

/// Six-state model built from the closed-form coefficient ratios, `C = I`, `D = 0`.
pub fn paper_linear_model(params: &PhysicalParams) -> Result<StateSpaceModel> {
    let PCoefficients { p1, p2, p3, p4, p5, den, total_mass: m } = p_coefficients(params)?;
    let g = params.gravity;
    let f = params.cart_friction;

    let mut a = position_selector();
    a[(3, 1)] = (p2 * p3 - p1 * p5) * p1 * g / den;
    a[(3, 2)] = (p1 * p3 + p2 * p4) * p2 * g / den;
    a[(3, 3)] = -(p4 * p5 - p3 * p3) * f / den;
    a[(4, 1)] = (m * p5 - p2 * p2) * p1 * g / den;
    a[(4, 2)] = -(m * p3 - p1 * p2) * p2 * g / den;
    a[(4, 3)] = -(p1 * p5 - p2 * p3) * f / den;
    a[(5, 1)] = (m * p3 - p1 * p2) * p1 * g / den;
    a[(5, 2)] = (m * p4 - p1 * p1) * p2 * g / den;
    a[(5, 3)] = -(p1 * p3 + p2 * p4) * f / den;

    let mut b = DMatrix::zeros(6, 1);
    b[(3, 0)] = (p4 * p5 - p3 * p3) / den;
    b[(4, 0)] = (p1 * p5 - p2 * p3) / den;
    b[(5, 0)] = (p1 * p3 + p2 * p4) / den;

    StateSpaceModel::new(a, b)
}

fn position_selector() -> DMatrix<f64> {
    let mut a = DMatrix::zeros(6, 6);
    for i in 0..3 {
        a[(i, i + 3)] = 1.0;
    }
    a
}

/// Central-difference Jacobian of [`nonlinear_derivative`] at an operating point.
pub fn numeric_jacobian(
    params: &PhysicalParams,
    operating_state: &PlantState,
    operating_force: GeneralizedForce,
    step: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Numerical(format!("finite-difference step must be > 0, got {step}")));
    }
    let x0 = operating_state.to_array();
    let mut a = DMatrix::zeros(6, 6);
    for j in 0..6 {
        let mut plus = x0;
        let mut minus = x0;
        plus[j] += step;
        minus[j] -= step;
        let fp = nonlinear_derivative(params, &PlantState::from_array(plus), operating_force)?;
        let fm = nonlinear_derivative(params, &PlantState::from_array(minus), operating_force)?;
        for i in 0..6 {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }

    let u = operating_force.cart_force;
    let fp = nonlinear_derivative(params, operating_state, GeneralizedForce::new(u + step))?;
    let fm = nonlinear_derivative(params, operating_state, GeneralizedForce::new(u - step))?;
    let b = DMatrix::from_fn(6, 1, |i, _| (fp[i] - fm[i]) / (2.0 * step));
    Ok((a, b))
}

/// Richardson-extrapolated Jacobian at the upright rest state, `C = I`, `D = 0`.
pub fn jacobian_model(params: &PhysicalParams) -> Result<StateSpaceModel> {
    params.validate()?;
    const STEP: f64 = 1e-4;
    let upright = PlantState::default();
    let force = GeneralizedForce::default();
    let (a_h, b_h) = numeric_jacobian(params, &upright, force, STEP)?;
    let (a_h2, b_h2) = numeric_jacobian(params, &upright, force, STEP / 2.0)?;
    let a = (a_h2 * 4.0 - a_h) / 3.0;
    let b = (b_h2 * 4.0 - b_h) / 3.0;
    StateSpaceModel::new(a, b)
}

/// Entrywise gap between two models of the same order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelDiscrepancy {
    pub max_abs_a: f64,
    pub max_abs_b: f64,
    /// `‖A₁ − A₂‖_F / ‖A₂‖_F`.
    pub relative_a: f64,
    /// `‖B₁ − B₂‖ / ‖B₂‖`.
    pub relative_b: f64,
}

pub fn model_discrepancy(model: &StateSpaceModel, reference: &StateSpaceModel) -> Result<ModelDiscrepancy> {
    if model.order() != reference.order() {
        return Err(Error::DimensionMismatch(format!("orders {} and {} differ", model.order(), reference.order())));
    }
    let da = &model.a - &reference.a;
    let db = &model.b - &reference.b;
    Ok(ModelDiscrepancy {
        max_abs_a: da.amax(),
        max_abs_b: db.amax(),
        relative_a: da.norm() / reference.a.norm(),
        relative_b: db.norm() / reference.b.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_params() -> PhysicalParams {
        // m₁ = m₂ = L₁ = L₂ = 1 with M_c = 1 gives total mass 3.
        PhysicalParams::uniform_rods(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 10.0)
    }

    #[test]
    fn unit_p_coefficients() {
        let p = p_coefficients(&unit_params()).unwrap();
        assert_eq!((p.p1, p.p2, p.p3, p.p4, p.p5), (3.0, 1.0, 2.0, 5.0, 1.0));
        assert_relative_eq!(p.den, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn massless_upper_link_is_degenerate() {
        let mut params = unit_params();
        params.link2_mass = 0.0;
        assert!(matches!(p_coefficients(&params), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mass_scaling_homogeneity() {
        let base = PhysicalParams::default();
        let c = 2.5;
        let mut scaled = base;
        scaled.cart_mass *= c;
        scaled.link1_mass *= c;
        scaled.link2_mass *= c;
        let p = p_coefficients(&base).unwrap();
        let q = p_coefficients(&scaled).unwrap();
        for (a, b) in [(p.p1, q.p1), (p.p2, q.p2), (p.p3, q.p3), (p.p4, q.p4), (p.p5, q.p5)] {
            assert_relative_eq!(b, c * a, max_relative = 1e-14);
        }
        assert_relative_eq!(q.den, c.powi(3) * p.den, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_model_structure() {
        let m = paper_linear_model(&unit_params()).unwrap();
        assert_relative_eq!(m.a[(3, 1)], -30.0, epsilon = 1e-12);
        for i in 3..6 {
            assert_eq!(m.a[(i, 3)], 0.0, "friction column must vanish at f = 0");
        }
        assert!(m.a.column(0).iter().all(|&v| v == 0.0));
        for i in 0..3 {
            for j in 0..6 {
                assert_eq!(m.a[(i, j)], if j == i + 3 { 1.0 } else { 0.0 });
            }
            assert_eq!(m.b[(i, 0)], 0.0);
        }
        assert_eq!(m.c, DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn a63_hand_arithmetic() {
        // Set 1: unit parameters → ((3·5 − 9)·1·10)/1 = 60.
        let m = paper_linear_model(&unit_params()).unwrap();
        assert_relative_eq!(m.a[(5, 2)], 60.0, epsilon = 1e-12);

        // Set 2: M_c = 2, m₁ = 1, m₂ = 0.5, L₁ = 1, L₂ = 2, g = 9.81.
        // p = (2, 1, 2, 6, 0.5), M = 3.5
        // Den = 3.5·6·0.5 + 2·2·1·2 − 1·6 − 3.5·4 − 4·0.5 = 10.5 + 8 − 6 − 14 − 2 = −3.5
        // A₆₃ = ((3.5·6 − 4)·1·9.81)/(−3.5) = 17·9.81/(−3.5)
        let params = PhysicalParams::uniform_rods(2.0, 1.0, 0.5, 1.0, 2.0, 0.0, 9.81);
        let m = paper_linear_model(&params).unwrap();
        assert_relative_eq!(m.a[(5, 2)], 17.0 * 9.81 / -3.5, max_relative = 1e-12);
    }

    #[test]
    fn jacobian_at_upright_has_selector_rows_and_free_cart() {
        let (a, b) =
            numeric_jacobian(&PhysicalParams::default(), &PlantState::default(), GeneralizedForce::default(), 1e-5)
                .unwrap();
        assert!(a.column(0).iter().all(|&v| v == 0.0));
        for i in 0..3 {
            for j in 0..6 {
                assert_eq!(a[(i, j)], if j == i + 3 { 1.0 } else { 0.0 });
            }
            assert_eq!(b[(i, 0)], 0.0);
        }
    }

    #[test]
    fn discrepancy_of_identical_models_is_zero() {
        let m = jacobian_model(&PhysicalParams::default()).unwrap();
        let d = model_discrepancy(&m, &m).unwrap();
        assert_eq!(d.max_abs_a, 0.0);
        assert_eq!(d.relative_b, 0.0);
    }

    #[test]
    fn rejects_bad_step_and_shapes() {
        let p = PhysicalParams::default();
        assert!(numeric_jacobian(&p, &PlantState::default(), GeneralizedForce::default(), 0.0).is_err());
        assert!(StateSpaceModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1)).is_err());
    }
}
