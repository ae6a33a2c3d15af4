//! Localized reduced-basis modelling for the 2D time-harmonic Maxwell equations.
//!
//! The crate covers the whole pipeline: a lowest-order edge-element discretization on a
//! structured criss-cross mesh ([`mesh`], [`fem`]), a direct decomposition of the discrete
//! space into volume and interface spaces ([`decomposition`]), randomized local training of
//! reduced local spaces ([`training`]), a block Galerkin reduced model ([`rom`]), stability and
//! approximability diagnostics ([`analysis`]), and the experiment driver used for re-simulation
//! after local geometry changes ([`experiments`]).

pub mod analysis;
pub mod bundle;
pub mod config;
pub mod decomposition;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod output;
pub mod rom;
pub mod sparse;
pub mod training;

pub use error::{Error, Result};
pub use faer::c64;
