//! Green's function of the three-dimensional transport equation with
//! isotropic scattering in an infinite medium.
//!
//! Three evaluators are provided and cross-checked against each other:
//!
//! * [`green_csf`]: rotated-frame singular eigenfunctions,
//! * [`green_fourier`]: the conventional Fourier inversion,
//! * [`green_ganapol`]: reconstruction from Chandrasekhar-polynomial moments.
//!
//! Lengths are in mean free paths. The source is a unit pencil beam at the
//! origin pointing along `omega0`.

// Negated comparisons are how NaN is rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod case1d;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod green_csf;
pub mod green_fourier;
pub mod green_ganapol;
pub mod quadrature;
pub mod rrf;
pub mod specfun;

pub use case1d::DispersionContext;
pub use error::{Error, Result};
pub use evaluation::{GreensEvaluation, Method, QuadConfig};
