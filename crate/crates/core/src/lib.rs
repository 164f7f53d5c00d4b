//! Rate regions of multiple-access channels with a common message,
//! conferencing encoders and fading with partial transmitter-side state
//! information.
//!
//! The fading and region code is generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix the scalar for the common cases. The coding
//! simulator works in `f64` only.

pub mod channel;
pub mod coding;
pub mod discrete;
pub mod equivalence;
pub mod error;
pub mod expectation;
pub mod fading;
pub mod region;
pub mod scalar;

pub use channel::{CsitMap, CsitQuantizer, FadingChannelSpec, FadingDistribution, StateSample, StateView};
pub use discrete::{DiscreteChannelSpec, InputLaw};
pub use error::{Error, ErrorClass, Result};
pub use expectation::{Engine, Ensemble, EstimateMethod, ExpectationEstimate};
pub use fading::{ConferencingSpec, TransmitPolicy};
pub use region::{RateConstraintSet, RatePoint, Subset, WeightVector};
pub use scalar::Real;

pub type FadingChannelSpec64 = FadingChannelSpec<f64>;
pub type FadingChannelSpec32 = FadingChannelSpec<f32>;
pub type RateConstraintSet64 = RateConstraintSet<f64>;
pub type RateConstraintSet32 = RateConstraintSet<f32>;
pub type RatePoint64 = RatePoint<f64>;
pub type RatePoint32 = RatePoint<f32>;
pub type WeightVector64 = WeightVector<f64>;
pub type TransmitPolicy64 = TransmitPolicy<f64>;
pub type TransmitPolicy32 = TransmitPolicy<f32>;
pub type CsitQuantizer64 = CsitQuantizer<f64>;
pub type ConferencingSpec64 = ConferencingSpec<f64>;
pub type DiscreteChannelSpec64 = DiscreteChannelSpec<f64>;
pub type InputLaw64 = InputLaw<f64>;
pub type ExpectationEstimate64 = ExpectationEstimate<f64>;
