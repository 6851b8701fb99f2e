//! Numerical toolkit for convex conjugation on asymmetrically normed spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`asymnorm`]: asymmetric norms on `R^n`, their reversals and
//!   symmetrizations, dual cones, dual norms and one-sided weak convergence.
//! * [`conjugate`]: discrete Legendre–Fenchel transforms on rectangular grids
//!   (brute force and a separable linear-time transform), biconjugates with
//!   dual-cone restriction, and the scalar gauge transforms `α ↦ α#`.
//! * [`smoothness`]: right (one-sided) Gâteaux and Fréchet derivative
//!   estimation.
//! * [`wellposed`]: minimisation, minimising sequences and the Tikhonov
//!   well-posedness diagnostics tying them to differentiability of the
//!   conjugate.
//! * [`cgf`]: the cumulant-generating function of a finite mean-zero
//!   probability space, its conjugate and the tilted minimisation problem.
//!
//! Inner loops (per dual grid point, per start, per trace) run on rayon when
//! the `parallel` feature is enabled (default) and sequentially otherwise.
//! Results are identical either way.

pub mod asymnorm;
pub mod cgf;
pub mod conjugate;
pub mod error;
pub mod par;
pub mod rng;
pub mod smoothness;
mod vecops;
pub mod wellposed;

pub use error::{Error, Result};
