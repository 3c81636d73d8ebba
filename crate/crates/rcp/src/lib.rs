//! Robust clearing-price reserves for repeated second-price auctions.
//!
//! A seller who learns an anonymous reserve price from historical bids
//! invites strategic shading: lower bids today mean a lower reserve
//! tomorrow. This crate implements reserve policies built on the *clearing
//! price* of historical bid profiles — an exactly solvable, quantile-like
//! summary — together with two mechanisms that blunt the feedback loop:
//! adding fresh noise to the reserve in every auction (`dp_rcp`), or
//! smoothing the training bids once and using the resulting deterministic
//! price (`srcp`).
//!
//! Alongside the mechanisms the crate carries their evaluation apparatus:
//! closed-form and Monte Carlo expected revenue, the incentive metric that
//! quantifies the marginal gain from uniform bid shading, the local
//! sensitivities that drive it, numerical validation of the mechanisms'
//! revenue guarantees, and a seeded, thread-count-invariant experiment
//! harness producing CSV sweeps and Pareto summaries.
//!
//! ```
//! use rcp::clearing::{empirical_clearing_price, BidBatch, BidProfile};
//!
//! let stage1 = BidBatch::new(vec![
//!     BidProfile::new(vec![0.2]),
//!     BidProfile::new(vec![0.5]),
//!     BidProfile::new(vec![0.8]),
//! ])?;
//! assert_eq!(empirical_clearing_price(&stage1, 0.5)?, 0.5);
//! # Ok::<(), rcp::Error>(())
//! ```
//!
//! The `book/` directory holds a narrative guide (`mdbook serve book`);
//! its code listings compile and run as this crate's doctests.

pub mod clearing;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod mechanisms;
pub mod metrics;
pub mod numeric;

pub use error::{Error, Result};

// Every fenced Rust block in the book and the README is a doctest, so the
// prose can never drift from the API.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/clearing-prices.md")]
    mod clearing_prices {}
    #[doc = include_str!("../../../book/src/mechanisms.md")]
    mod mechanisms {}
    #[doc = include_str!("../../../book/src/revenue-and-incentives.md")]
    mod revenue_and_incentives {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
