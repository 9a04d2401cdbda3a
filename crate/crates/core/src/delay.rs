//! First-order Padé model of a delayed cart-position measurement.
//!
//! The delayed measurement `x_m ≈ x₁(t − Γ)` satisfies
//! `x_m (1 + sΓ/2) = x₁ (1 − sΓ/2)`. With the auxiliary state
//! `x₇ = x_m + x₁` this becomes
//!
//! ```text
//! ẋ₇ = −(2/Γ)·x₇ + (4/Γ)·x₁,    x_m = x₇ − x₁
//! ```
//!
//! which is the [`PadeConvention::Stable`] row. [`PadeConvention::Unstable`]
//! keeps the transcribed row `ẋ₇ = (2/Γ)·x₇ − (4/Γ)·x₁` for comparison runs;
//! it places the delay pole in the right half plane.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linearization::StateSpaceModel;

/// Index of the delayed channel (cart position) in the plant state.
pub const DELAYED_CHANNEL: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySpec {
    /// Delay Γ in seconds; zero disables augmentation.
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PadeConvention {
    #[default]
    Stable,
    Unstable,
}

impl DelaySpec {
    pub fn new(delay: f64) -> Result<Self> {
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::InvalidDelay(delay));
        }
        Ok(Self { delay })
    }

    pub fn is_delayed(&self) -> bool {
        self.delay > 0.0
    }

    /// Augments `model` when the delay is positive, otherwise returns it unchanged.
    pub fn apply(&self, model: &StateSpaceModel, convention: PadeConvention) -> Result<StateSpaceModel> {
        if self.is_delayed() {
            pade_augment(model, *self, convention)
        } else {
            Ok(model.clone())
        }
    }

    /// Appends the Padé state to a plant state assuming the delay line has
    /// been seeing the current cart position forever (`x_m = x₁`, `x₇ = 2x₁`).
    pub fn extend_state(&self, plant: &[f64]) -> Vec<f64> {
        let mut x = plant.to_vec();
        if self.is_delayed() {
            x.push(2.0 * plant[DELAYED_CHANNEL]);
        }
        x
    }
}

/// First-order Padé approximant of `e^{−jωΓ}`.
pub fn pade_response(delay: f64, omega: f64) -> Complex64 {
    let half = Complex64::new(0.0, omega * delay / 2.0);
    (Complex64::new(1.0, 0.0) - half) / (Complex64::new(1.0, 0.0) + half)
}

/// Appends the Padé state `x₇` to an `n`-state model whose first state is
/// the delayed channel. Output `n + 1` reports the delayed measurement.
pub fn pade_augment(model: &StateSpaceModel, spec: DelaySpec, convention: PadeConvention) -> Result<StateSpaceModel> {
    let gamma = spec.delay;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidDelay(gamma));
    }
    let n = model.order();
    let aug = n + 1;

    let mut a = DMatrix::zeros(aug, aug);
    a.view_mut((0, 0), (n, n)).copy_from(&model.a);
    let mut b = DMatrix::zeros(aug, 1);
    b.view_mut((0, 0), (n, 1)).copy_from(&model.b);

    let outputs = model.c.nrows();
    let mut c = DMatrix::zeros(outputs + 1, aug);
    c.view_mut((0, 0), (outputs, n)).copy_from(&model.c);
    let mut d = DMatrix::zeros(outputs + 1, 1);
    d.view_mut((0, 0), (outputs, 1)).copy_from(&model.d);

    match convention {
        PadeConvention::Stable => {
            a[(n, n)] = -2.0 / gamma;
            a[(n, DELAYED_CHANNEL)] = 4.0 / gamma;
            c[(outputs, n)] = 1.0;
            c[(outputs, DELAYED_CHANNEL)] = -1.0;
        }
        PadeConvention::Unstable => {
            a[(n, n)] = 2.0 / gamma;
            a[(n, DELAYED_CHANNEL)] = -4.0 / gamma;
            c[(outputs, n)] = 1.0;
        }
    }
    StateSpaceModel::with_output(a, b, c, d)
}

/// Coordinate change `z = T x` that replaces the delayed channel by the
/// measurement `x_m = x_last − x₁`. `T` is an involution, so `T⁻¹ = T`.
pub fn measurement_transform(order: usize) -> DMatrix<f64> {
    let mut t = DMatrix::identity(order, order);
    let last = order - 1;
    t[(DELAYED_CHANNEL, DELAYED_CHANNEL)] = -1.0;
    t[(DELAYED_CHANNEL, last)] = 1.0;
    t
}

/// The augmented model expressed in measured coordinates `(x_m, x₂, …, x₇)`.
///
/// A gain placed on this model acts on what the controller actually reads,
/// so feeding it through [`crate::control::closed_loop`] with the delayed
/// wiring reproduces the requested poles.
pub fn measured_coordinates(model: &StateSpaceModel) -> Result<StateSpaceModel> {
    let n = model.order();
    if n < 2 {
        return Err(Error::DimensionMismatch("augmented model needs at least two states".into()));
    }
    let t = measurement_transform(n);
    StateSpaceModel::new(&t * &model.a * &t, &t * &model.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn free_cart() -> StateSpaceModel {
        StateSpaceModel::new(DMatrix::zeros(6, 6), DMatrix::zeros(6, 1)).unwrap()
    }

    #[test]
    fn dc_gain_is_one() {
        let g = pade_response(2.0, 0.0);
        assert_eq!(g, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn quarter_turn_at_unit_frequency() {
        let g = pade_response(2.0, 1.0);
        assert_relative_eq!(g.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(g.im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn augmented_row_for_two_seconds() {
        let m = pade_augment(&free_cart(), DelaySpec::new(2.0).unwrap(), PadeConvention::Stable).unwrap();
        assert_eq!(m.order(), 7);
        assert_eq!(m.a[(6, 6)], -1.0);
        assert_eq!(m.a[(6, 0)], 2.0);
        assert_eq!(m.b[(6, 0)], 0.0);
        // Output 7 is x₇ − x₁, the others untouched.
        assert_eq!(m.c[(6, 6)], 1.0);
        assert_eq!(m.c[(6, 0)], -1.0);
        assert_eq!(m.c.view((0, 0), (6, 6)), DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn unstable_convention_has_right_half_plane_pole() {
        let m = pade_augment(&free_cart(), DelaySpec::new(0.2).unwrap(), PadeConvention::Unstable).unwrap();
        assert_relative_eq!(m.a[(6, 6)], 10.0);
        assert_relative_eq!(m.a[(6, 0)], -20.0);
    }

    #[test]
    fn steady_state_tracks_held_position() {
        // ẋ₇ = 0 with x₁ = c gives x₇ = 2c, x_m = c.
        let gamma = 0.2;
        let m = pade_augment(&free_cart(), DelaySpec::new(gamma).unwrap(), PadeConvention::Stable).unwrap();
        let c = 0.7;
        let x7 = 2.0 * c;
        assert_relative_eq!(m.a[(6, 6)] * x7 + m.a[(6, 0)] * c, 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.c[(6, 6)] * x7 + m.c[(6, 0)] * c, c, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_positive_delay() {
        assert!(matches!(
            pade_augment(&free_cart(), DelaySpec { delay: 0.0 }, PadeConvention::Stable),
            Err(Error::InvalidDelay(_))
        ));
        assert!(DelaySpec::new(-1.0).is_err());
        let passthrough = DelaySpec::new(0.0).unwrap().apply(&free_cart(), PadeConvention::Stable).unwrap();
        assert_eq!(passthrough.order(), 6);
    }

    #[test]
    fn transform_is_involution() {
        let t = measurement_transform(7);
        assert_eq!(&t * &t, DMatrix::<f64>::identity(7, 7));
    }
}
