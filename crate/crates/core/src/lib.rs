//! Numerical toolkit for transonic potential flow: elliptic/hyperbolic
//! classification, truncated power-series solutions of the steady system,
//! FBI transforms and analytic wave-front detection, the conjugation
//! identities behind FBI decay of analytic data, and Hadamard-type growth
//! experiments.

pub mod conjugation;
pub mod eigen;
pub mod illposedness;
pub mod gasdyn;
pub mod mat2;
pub mod microlocal;
pub mod quad;
pub mod series;
