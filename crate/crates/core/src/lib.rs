//! Discrete fractional Laplacians on bounded domains and the experiments
//! built on them.
//!
//! Grids live in [`grid`], kernel tables in [`kernel`], the operators in
//! [`operators`] and the Dirichlet solver in [`poisson`]. [`sobolev`] has the
//! Gagliardo seminorms and the Hardy constant, [`fixedpoint`] the Picard
//! driver and threshold constants, [`regularity`] the rational exponent
//! tables and the refinement probe, and [`nonexistence`] the `λ**`
//! certificates.
//!
//! ```
//! use fraclab_core::grid::{GridDomain, GridFunction, Shape};
//! use fraclab_core::poisson::FactorizedSolver;
//!
//! let d = GridDomain::build(Shape::ball(1, 1.0), 1, 64, 2, true).unwrap();
//! let u = FactorizedSolver::assemble(&d, 0.5).unwrap().solve(&GridFunction::constant(&d, 1.0)).unwrap();
//! assert!(u.values().iter().all(|&v| v >= 0.0));
//! ```

pub mod error;
pub mod fixedpoint;
pub mod grid;
pub mod kernel;
pub mod nonexistence;
pub mod operators;
pub mod poisson;
pub mod quadrature;
pub mod regularity;
pub mod sobolev;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    pub mod grids {}
    #[doc = include_str!("../../../book/src/operators.md")]
    pub mod operators {}
    #[doc = include_str!("../../../book/src/poisson.md")]
    pub mod poisson {}
    #[doc = include_str!("../../../book/src/hardy.md")]
    pub mod hardy {}
    #[doc = include_str!("../../../book/src/fixed_point.md")]
    pub mod fixed_point {}
    #[doc = include_str!("../../../book/src/exponents.md")]
    pub mod exponents {}
    #[doc = include_str!("../../../book/src/nonexistence.md")]
    pub mod nonexistence {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
