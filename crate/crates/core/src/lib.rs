//! Physics-informed vessel trajectory prediction.
//!
//! The numerical core ([`geodesy`], [`kinematics`], [`losses`], [`metrics`],
//! [`interp`]) is generic over [`Scalar`] so it runs in `f32` or `f64`. The
//! AIS pipeline, the synthetic oracle and the trainable models work in `f64`
//! only; gradient checks need the precision.
//!
//! The aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geodesy;
pub mod geojson;
pub mod interp;
pub mod kinematics;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use kinematics::{Approx, Order, Rollout, Scheme};
pub use losses::{DataUnits, PhysicsOrder};
pub use scalar::Scalar;

pub type GeoPoint = geodesy::GeoPoint<f64>;
pub type EarthModel = geodesy::EarthModel<f64>;
pub type KinematicState = kinematics::KinematicState<f64>;
pub type Displacement = kinematics::Displacement<f64>;
pub type PhysicsConfig = losses::PhysicsConfig<f64>;
pub type PredictionBatch = losses::PredictionBatch<f64>;
pub type MetricsReport = metrics::MetricsReport<f64>;

pub type GeoPointF32 = geodesy::GeoPoint<f32>;
pub type KinematicStateF32 = kinematics::KinematicState<f32>;
pub type PhysicsConfigF32 = losses::PhysicsConfig<f32>;
