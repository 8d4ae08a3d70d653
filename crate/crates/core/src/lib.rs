//! Lottery algebra, expected-utility calibration, and preference-axiom
//! testing on interval outcome spaces.
//!
//! The crate provides:
//!
//! - exact-rational simple lotteries and compact-support density measures
//!   ([`lottery`]);
//! - a catalog of utility functions with expectation operators ([`utility`]);
//! - preference oracles: trichotomous comparators over lotteries
//!   ([`preference`]);
//! - standard-gamble calibration that recovers a utility table from an
//!   oracle, unique up to positive affine transformation ([`calibration`]);
//! - property-based checkers and falsifiers for the preference axioms
//!   ([`axioms`]);
//! - a finite bounded-Lipschitz test-function family standing in for the
//!   weak* topology, plus counterexample net constructions ([`weakstar`]);
//! - nested closed exhaustions of the outcome space ([`exhaustion`]);
//! - a JSON-reporting CLI front end ([`cli`]).
//!
//! All values are immutable after construction and all operations are pure,
//! so everything is safe for unrestricted concurrent use.

pub mod axioms;
pub mod calibration;
pub mod cli;
pub mod error;
pub mod exhaustion;
pub mod lottery;
pub mod preference;
pub mod real;
pub mod space;
pub mod utility;
pub mod weakstar;

pub use error::{Result, VnmError};
pub use lottery::{DensityKind, DensityMeasure, Measure, SimpleLottery};
pub use preference::{OracleSpec, PreferenceOracle, Verdict};
pub use space::{Outcome, OutcomeSpace};
pub use utility::{expectation, expectation_density, UtilityFunction, UtilityKind, UtilitySpec};

/// Library version reported in CLI and FFI surfaces.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
