//! Continued-fraction and best-approximation statistics, the lattice observable
//! linking them to the diagonal flow on unimodular lattices, self-similar
//! measure sampling, and the experiment drivers that check the effective
//! Doeblin–Lenstra law, its rate and its central limit theorem numerically.
//!
//! Module map:
//!
//! * [`cf`] exact continued fractions, convergents, approximation coefficients
//!   and certified prefixes of truncated inputs.
//! * [`best_approx`] best approximations of `θ ∈ M_{m×n}` under configurable
//!   norms and the windowed Diophantine sums built from them.
//! * [`lattice`] unimodular lattices, the flow `a_t`, the set `S_Λ`, the
//!   observable `f` and the perturbation indicators.
//! * [`fractal`] iterated function systems, exact samplers and the conjugation
//!   identities used for fractal measures.
//! * [`reference`] the limiting law `ν`, Lévy's constant and the Birkhoff and
//!   long-run variance estimators.
//! * [`experiments`] seeded experiment drivers.
//! * [`io`] configuration, CSV/JSON records and run manifests.

pub mod best_approx;
pub mod cf;
pub mod error;
pub mod expbound;
pub mod experiments;
pub mod fractal;
pub mod io;
pub mod lattice;
pub mod norms;
pub mod observable;
pub mod rational;
pub mod reference;
pub mod stats;

pub use error::{Error, Result};
pub use num_rational::BigRational;

/// Arbitrary-precision rational scalar used for θ, convergents and residuals.
pub type ExactRational = BigRational;
