//! Semiclassical Schrödinger operators `-h²∂² + V` on the line with `V` a
//! finite signed measure: finite-element resolvents, Jost/transfer-matrix
//! scattering, Carleman and resolvent-bound checks, and wave decay.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carleman;
pub mod cli;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod measure;
pub mod ode;
pub mod par;
pub mod quad;
pub mod scattering;
pub mod wave;

pub use error::{Error, Result};
