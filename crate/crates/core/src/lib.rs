//! Spectral machinery for fractional semilinear heat equations and viscous
//! Hamilton-Jacobi equations on a periodic box: Fourier transforms, smooth
//! Littlewood-Paley blocks, local Morrey and inhomogeneous Besov-Morrey
//! norms, the fractional heat semigroup, and the Picard iteration for mild
//! solutions.

pub mod data;
pub mod error;
pub mod fbmf;
pub mod grid;
pub mod lp;
pub mod norms;
pub mod semigroup;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Domain, Field, GridSpec};
pub use lp::LpBank;
pub use norms::{MorreyGridPolicy, SpaceParams, SumKind};
pub use rustfft::num_complex::Complex64;
