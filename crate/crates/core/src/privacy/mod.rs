//! Noise mechanisms, zCDP accounting, and (ε, δ) conversion.
//!
//! Neighboring datasets differ by adding or removing one record, so every
//! marginal has L2 sensitivity 1.

mod accountant;
mod ledger;
mod mechanisms;

pub use accountant::{dp_to_zcdp, zcdp_of_exponential, zcdp_of_gaussian, zcdp_to_dp, Rho};
pub use ledger::{PrivacyLedger, OVERSPEND_SLACK};
pub use mechanisms::{exponential_mechanism, exponential_probabilities, gaussian_mechanism};
