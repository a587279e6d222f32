//! Sigma functions of hyperelliptic curves `y² = f(x)` with `f` monic of odd
//! degree, their derivatives along the strata of the Jacobian, and numerical
//! checks of the addition formulae they satisfy.
//!
//! The pipeline is curve → periods → calibrated sigma → identities:
//!
//! ```
//! use strata_sigma::curve::CurveSpec;
//! use strata_sigma::periods::compute_periods;
//! use strata_sigma::sigma::SigmaContext;
//!
//! let curve = CurveSpec::from_real(&[0.0, 9.0, 0.0, -10.0, 0.0]).unwrap();
//! let periods = compute_periods(&curve).unwrap();
//! assert!(periods.legendre_residual < 1e-10);
//! let ctx = SigmaContext::new(&curve, &periods).unwrap();
//! let s = ctx.sigma(&[0.1.into(), 0.2.into()]).unwrap();
//! assert!(s.is_finite());
//! ```

pub mod abel;
pub mod addition;
pub mod checks;
pub mod curve;
pub mod error;
pub mod harness;
pub mod periods;
pub mod quadrature;
pub mod sampling;
pub mod scaled;
pub mod sigma;
pub mod theta;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/curves.md")]
    pub struct Curves;
    #[doc = include_str!("../../../book/src/periods.md")]
    pub struct Periods;
    #[doc = include_str!("../../../book/src/theta.md")]
    pub struct Theta;
    #[doc = include_str!("../../../book/src/sigma.md")]
    pub struct Sigma;
    #[doc = include_str!("../../../book/src/abel.md")]
    pub struct Abel;
    #[doc = include_str!("../../../book/src/addition.md")]
    pub struct Addition;
    #[doc = include_str!("../../../book/src/audit.md")]
    pub struct Audit;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
