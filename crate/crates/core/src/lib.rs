//! Exact verification and rewriting of two-layer ReLU networks under
//! finite-group symmetry.
//!
//! The crate decides global equivariance and layer-wise equivariance of
//! bias-free ReLU networks with rational weights, extracts boundary
//! hyperplanes, certifies neuron-count lower bounds for layer-wise
//! equivariant networks, and implements the constructive rewrites between
//! general, equivariant and layer-wise equivariant architectures
//! (group averaging, orbit expansion, orbit compression). A small
//! gradient-descent harness in [`experiments`] measures the resulting
//! expressive-power gaps numerically.

pub mod arrangement;
pub mod cli;
pub mod equivariance;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod geometry;
pub mod group;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod relu_net;
pub mod transforms;

pub use error::{Error, Result};
pub use group::{FiniteGroup, OrbitClass, Representation};
pub use linalg::{Matrix, Rational};
pub use relu_net::{ExactNet, FloatNet, MultiLayerNet, TwoLayerNet};
