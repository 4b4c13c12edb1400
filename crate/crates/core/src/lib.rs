//! Model-independent super- and sub-hedging price bounds for exotic payoffs,
//! computed from finitely many European call quotes.
//!
//! The pipeline: ingest call quotes ([`market`]), check them for static
//! arbitrage ([`arbitrage`]), extend the total implied variance beyond the
//! quoted strikes with arbitrage-free linear wings ([`wing`]), assemble the
//! discretised hedging linear programme over a product state grid ([`hedge`]),
//! solve it with a column-generating revised simplex ([`lp`]), and study the
//! first-order sensitivity of the optimal bounds to the extrapolation
//! parameters ([`sensitivity`]).
//!
//! Prices are normalised throughout: `S0 = 1`, zero rates, no dividends.

// The numeric kernels index several arrays in lockstep and reject NaNs with
// negated comparisons; both read better here than the clippy suggestions.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbitrage;
pub mod experiment;
pub mod heston;
pub mod hedge;
pub mod lp;
pub mod market;
pub mod reference;
pub mod sensitivity;
pub mod wing;

pub use arbitrage::{ValidationReport, Violation};
pub use hedge::{DiscreteMeasure, HedgeSolution, PayoffSpec, Side, StateGrid};
pub use market::{BsParams, CallQuote, CallQuoteSet};
pub use wing::{HestonParams, TotalVarianceSurface};
