//! Pseudospectral simulator and steady-state machinery for 2D nematic
//! liquid-crystal flow under a constant magnetic field on the unit torus.
//!
//! The core is generic over the scalar type through [`real::Real`]
//! (`f32` or `f64`); the aliases below pin the default `f64` instantiation
//! used by the CLI and the file formats.

pub mod director;
pub mod dynamics;
pub mod material;
pub mod real;
pub mod spectral;

#[cfg(test)]
pub(crate) mod testutil;

pub use real::Real;

/// Default `f64` instantiations of the core field types.
pub type Grid = spectral::Grid;
pub type ScalarField64 = spectral::ScalarField<f64>;
pub type VectorField64 = spectral::VectorField2<f64>;
pub type AngleField64 = director::AngleField<f64>;
pub type DirectorField64 = director::DirectorField<f64>;
pub type MaterialParams64 = material::MaterialParams<f64>;
