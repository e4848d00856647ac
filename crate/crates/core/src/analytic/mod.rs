//! Exact expected misclassification probabilities and the large-deviations
//! bound for minimum Hamming distance fusion.
//!
//! The coding evaluators enumerate every received vector, so they refuse
//! matrices wider than [`MAX_EXACT_WORKERS`]; larger systems go through the
//! Monte Carlo engine in [`crate::simkit`].

mod bound;
mod coding;
mod enumerate;
mod majority;

pub use bound::{chernoff_bound, BoundReport, PairMargin};
pub use coding::{
    grouped_assignment_mass, pe_coding_given_reliabilities, pe_grouped_coding,
    pe_grouped_paired_coding, pe_iid_coding, pe_paired_coding, Pairing,
};
pub use majority::{pe_iid_majority, pe_paired_majority, survival_binomial};

use serde::{Deserialize, Serialize};

use crate::codebook::DecisionProfile;

/// Widest matrix the `2^N` enumeration accepts.
pub const MAX_EXACT_WORKERS: usize = 22;

/// Upper limit on `L^N * 2^N * M`, the number of terms in the latent-group
/// formulas.
pub const MAX_GROUPED_TERMS: f64 = 68_719_476_736.0; // 2^36

/// Cost of deciding for class `true_class` given the decision profile of the
/// received vector: `1 - 1/tie_count` inside the tied set, `1` outside it.
pub fn cost(profile: &DecisionProfile, true_class: usize) -> f64 {
    if profile.contains(true_class) {
        1.0 - 1.0 / profile.tie_count() as f64
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposition {
    /// Hamming fusion, i.i.d. reliabilities.
    IidCoding,
    /// Bitwise majority, i.i.d. reliabilities.
    IidMajority,
    /// Hamming fusion, paired reliabilities.
    PairedCoding,
    /// Bitwise majority, paired reliabilities (partners in the same group).
    PairedMajority,
    /// Hamming fusion, latent groups.
    GroupedCoding,
    /// Hamming fusion, latent groups and pairing.
    GroupedPairedCoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactParams {
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

/// An exact expected misclassification probability and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPerfReport {
    pub value: f64,
    pub proposition: Proposition,
    pub params: ExactParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_fingerprint: Option<String>,
}

pub(crate) fn check_mu(mu: f64) -> crate::Result<()> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(crate::Error::param(format!(
            "mean reliability must lie in [0, 1], got {mu}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_cases() {
        let single = DecisionProfile {
            min_distance: 0,
            argmin_rows: vec![1],
        };
        assert_eq!(cost(&single, 1), 0.0);
        assert_eq!(cost(&single, 0), 1.0);
        let tie = DecisionProfile {
            min_distance: 1,
            argmin_rows: vec![0, 3],
        };
        assert_eq!(cost(&tie, 3), 0.5);
        assert_eq!(cost(&tie, 2), 1.0);
    }
}
