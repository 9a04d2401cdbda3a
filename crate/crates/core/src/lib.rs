//! Modeling and controller tuning for a cart-mounted double inverted pendulum.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: physical parameters, energies and the nonlinear equations of motion.
//! * [`linearization`]: the closed-form small-signal model and a finite-difference Jacobian.
//! * [`delay`]: first-order Padé approximation of a measurement delay and the 7-state model.
//! * [`control`]: pole sets from (damping, natural frequency), pole placement, stability.
//! * [`bat`]: a seeded bat-algorithm optimizer over a bounded box.
//! * [`sim`]: fixed-step RK4 integration, ISE fitness and settling time.

pub mod bat;
pub mod control;
pub mod delay;
pub mod dynamics;
mod error;
pub mod linearization;
pub mod sim;

pub use bat::{BatConfig, OptimizationResult, SearchBounds};
pub use control::{ControllerSpec, GainVector};
pub use delay::{DelaySpec, PadeConvention};
pub use dynamics::{GeneralizedForce, PhysicalParams, PlantState};
pub use error::{Error, Result};
pub use linearization::{PCoefficients, StateSpaceModel};
pub use sim::{FitnessWeights, SimConfig, Trajectory};
