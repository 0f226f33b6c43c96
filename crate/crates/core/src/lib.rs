//! Analysis toolkit for a diffusive predator-prey system with a multiple
//! Allee effect in the prey, square-root (herd) functional response and
//! quadratic predator mortality.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod equilibria;
pub mod io;
pub mod error;
pub mod local;
pub mod model;
pub mod normal_form;
pub mod reproduce;
pub mod scalar;
pub mod simulate;
pub mod spatial;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Params = model::ScaledParams<f64>;
pub type RawParams = model::RawParams<f64>;
pub type Equilibrium = equilibria::Equilibrium<f64>;
pub type Jacobian = local::Jacobian2<f64>;
pub type TaylorTable = model::TaylorTable<f64>;
