//! Allocation rules for dividing one divisible good among agents with
//! single-peaked preferences, and an engine that audits rules against
//! efficiency, the equal division guarantee, consistency, and non-obvious
//! manipulability.
//!
//! Everything is generic over [`Scalar`]; exact [`Rational`] arithmetic is the
//! default and `f64`/`f32` are supported with a comparison tolerance.
//!
//! ```
//! use uniform_rule::{rules, Economy, Rational};
//!
//! let peaks: Vec<Rational> = [2, 4, 6].iter().map(|&p| Rational::from_integer(p.into())).collect();
//! let econ = Economy::from_peaks(&peaks, Rational::from_integer(9.into())).unwrap();
//! let alloc = rules::uniform(&econ).unwrap();
//! assert_eq!(alloc.total(), Rational::from_integer(9.into()));
//! ```

pub mod axioms;
pub mod cli;
pub mod constructions;
pub mod economy;
pub mod error;
pub mod io;
pub mod option_sets;
pub mod prefs;
pub mod rules;
pub mod scalar;
pub mod solver;
pub mod suite;

pub use axioms::{Axiom, IncentiveGrid, Status, Verdict, Witness};
pub use economy::{AgentId, Allocation, Economy};
pub use error::{Error, Result};
pub use option_sets::{OptionSet, ProfileGrid};
pub use prefs::{Preference, Shape};
pub use rules::{Rule, RuleDescriptor};
pub use scalar::{Rational, Scalar};
pub use suite::AuditConfig;

pub type ExactPreference = Preference<Rational>;
pub type ExactEconomy = Economy<Rational>;
pub type ExactAllocation = Allocation<Rational>;
pub type ExactVerdict = Verdict<Rational>;
pub type FloatPreference = Preference<f64>;
pub type FloatEconomy = Economy<f64>;
pub type FloatAllocation = Allocation<f64>;
pub type Float32Economy = Economy<f32>;
