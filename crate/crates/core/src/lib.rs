//! Encounter uncertainty ellipsoids and information-optimal spacecraft swarm
//! positioning.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the experiment harness and CLI use.

// `!(x > 0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod cost;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod rng;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{wrap_angle, Scalar};

pub type Vector3 = geometry::Vector3<f64>;
pub type ConeFov = geometry::ConeFov<f64>;
pub type UncertaintyEllipsoid = sampling::UncertaintyEllipsoid<f64>;
pub type PoiSet = sampling::PoiSet<f64>;
pub type SpacecraftPose = cost::SpacecraftPose<f64>;
pub type SwarmConfig = cost::SwarmConfig<f64>;
pub type CostOptions = cost::CostOptions<f64>;
pub type CostBreakdown = cost::CostBreakdown<f64>;
pub type ContractionParams = bound::ContractionParams<f64>;
pub type NoiseProfile = bound::NoiseProfile<f64>;
pub type BoundResult = bound::BoundResult<f64>;
pub type NelderMeadOptions = optimizer::NelderMeadOptions<f64>;
pub type OptResult = optimizer::OptResult<f64>;
pub type CostMode = optimizer::CostMode<f64>;
