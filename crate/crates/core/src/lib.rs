//! Space-time implicit neural representations of evolving closed surfaces.
//!
//! A single ReLU multilayer perceptron `f(x, t)` is fitted so that, at every
//! time `t`, its zero level set is the surface observed in a sparse sequence
//! of time-stamped point clouds. Spatial and temporal gradients of the network
//! are regularized during training, which lets the model interpolate (and,
//! less reliably, extrapolate) the surface between scans.
//!
//! The crate is organised as:
//!
//! - [`nn`]: the network, its batched evaluation engine and the training loss
//!   with exact parameter gradients through the input-gradient terms.
//! - [`training`]: Monte Carlo batches, Adam and the fitting loop.
//! - [`geometry`]: normalization, rigid alignment, marching cubes, surface
//!   distances and centerline diameter profiles.
//! - [`synthetic`]: analytic signed distance oracles and point-cloud generators.
//! - [`harness`]: file formats, model persistence and experiment protocols.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod nn;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
pub use model::TemporalSdfModel;

/// Three-component vector used for all spatial quantities.
pub type Vec3 = nalgebra::Vector3<f64>;
