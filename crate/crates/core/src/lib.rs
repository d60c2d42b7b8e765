//! Closed-loop traffic simulation with a guided trajectory-diffusion model
//! for generating controllable safety-critical scenarios.

pub mod cli;
pub mod corpus;
pub mod diffusion;
pub mod dynamics;
mod error;
pub mod guidance;
pub mod library;
pub mod metrics;
pub mod planners;
pub mod proposals;
pub mod scene;
pub mod sim;

pub use error::{Error, Result};
