//! Pseudo-spectral laboratory for the fractional Schrödinger map
//! `d_t u = -u ^ (-Delta)^s u` on the periodic torus and its stereographic
//! scalar reduction.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`, which every accuracy target in the test suites assumes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commutator;
pub mod datagen;
pub mod dispersion;
pub mod lab;
pub mod littlewood_paley;
pub mod nonlinearity;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod stereographic;

pub use scalar::Real;

pub type Grid = spectral::Grid<f64>;
pub type Field = spectral::ComplexField<f64>;
pub type RealField = spectral::RealField<f64>;
pub type Sphere = stereographic::SphereField<f64>;
pub type Grid32 = spectral::Grid<f32>;
pub type Field32 = spectral::ComplexField<f32>;
pub type Sphere32 = stereographic::SphereField<f32>;
