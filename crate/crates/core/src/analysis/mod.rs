//! Resilience, attack-complexity and template-protection statistics.
//!
//! Tail probabilities are carried as natural logarithms and only converted to
//! bits (`-log2`) at the report boundary.

mod binomial;
mod linkability;
mod rates;
mod security;
mod simulate;

pub use binomial::{binom_log_cdf_below, binom_log_pmf, binom_log_sf, log1m_exp, log_sum_exp};
pub use linkability::{histogram, linkability, LinkBin, Linkability, DEFAULT_BINS};
pub use rates::{compute_rates, ks_distance, RatePoint, RateTable, ScoreSet};
pub use security::{
    adv_ske_ind, brute_force_bits, check_fa_reference, fa_bits, fvc_reference, resilience_prob,
    security_report, Advantage, FaReferenceCheck, ReferenceEntry, ResilienceModel,
    ResiliencePoint, SecurityInputs, SecurityReport, DEFAULT_Q_EXPONENTS,
};
pub use simulate::{variance_vs_m, VarianceRow};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("score list is empty")]
    EmptyScores,
}

/// Natural-log probability to bits of work, `-log2 P`.
pub fn ln_to_bits(ln_p: f64) -> f64 {
    let bits = -ln_p / std::f64::consts::LN_2;
    // -0.0 and tiny negative rounding both read as zero bits
    bits.max(0.0)
}
