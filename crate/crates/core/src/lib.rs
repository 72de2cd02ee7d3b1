//! Numerics for linear q-difference systems with integral slopes, `|q| > 1`.
//!
//! A module is given in block upper-triangular form (see
//! [`module_rep::BlockModule`]): pure diagonal blocks `z^{μᵢ}Aᵢ` with
//! `μ₁ < … < μ_k` and polynomial couplings `U_{ij}`. The crate provides
//!
//! - truncated two-sided Laurent series and series matrices ([`series`]);
//! - theta functions, q-Pochhammer symbols and the Tshakaloff series
//!   ([`special_fn`]);
//! - q-difference operators, Newton polygons, indices and the
//!   scalar/companion homotopy ([`newton`]);
//! - the two-slope reduction `Red` and q-Borel transforms ([`reduction`]);
//! - Birkhoff–Guenther normal forms, formal solutions and Gevrey cutoff
//!   forms ([`normal_form`]);
//! - q-Euler sums, algebraic summation in a direction and Borel–Ritt sums
//!   ([`summation`]);
//! - Stokes cocycles and the worked identities around them ([`stokes`]);
//! - the JSON format and the `qstokes` command line ([`cli`]).
//!
//! All arithmetic is in `f64` complex numbers.
//!
//! ```
//! use qstokes::cli::parse_module_str;
//! use qstokes::normal_form::bg_normal_form;
//!
//! let m = parse_module_str(r#"{
//!     "q": {"re": 2.0, "im": 0.0},
//!     "blocks": [
//!         {"slope": 0, "matrix": [[{"re": 1.0, "im": 0.0}]]},
//!         {"slope": 1, "matrix": [[{"re": 1.0, "im": 0.0}]]}
//!     ],
//!     "u": {"1,2": [{"exp": 0, "re": -1.0, "im": 0.0}, {"exp": 3, "re": 1.0, "im": 0.0}]}
//! }"#).unwrap();
//! let nf = bg_normal_form(&m, 48).unwrap();
//! assert!(nf.residual < 1e-12);
//! ```

pub mod cli;
pub mod error;
pub mod linalg;
pub mod module_rep;
pub mod newton;
pub mod normal_form;
pub mod reduction;
pub mod series;
pub mod special_fn;
pub mod stokes;
pub mod summation;

pub use error::{Error, Result};
pub use module_rep::{BlockModule, GaugeTransform, PureBlock};
pub use series::{CMatrix, Complex, Laurent, SeriesMatrix, Tail};

/// The user guide in `book/`, compiled here so its code blocks run as
/// doctests.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/series.md")]
    pub mod series {}
    #[doc = include_str!("../../../book/src/normal-forms.md")]
    pub mod normal_forms {}
    #[doc = include_str!("../../../book/src/summation.md")]
    pub mod summation {}
    #[doc = include_str!("../../../book/src/stokes.md")]
    pub mod stokes {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
