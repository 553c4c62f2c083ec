//! Simulation of the screen → diffuse wall → camera optical side channel and
//! a physics-regularized inversion toolkit built on top of it.

pub mod dissipation;
pub mod error;
pub mod harness;
pub mod icsr;
pub mod inversion;
pub mod io;
pub mod numerics;
pub mod optics;
pub mod scenegen;
pub mod upsampler;

pub use error::{Error, Result};
pub use numerics::{FeatureStack, Field2D, Rng, SpectralField};
