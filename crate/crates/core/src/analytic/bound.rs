use serde::{Deserialize, Serialize};

use crate::codebook::CodeMatrix;
use crate::error::{Error, Result};
use crate::numeric::golden_section_min;

/// Upper end of the search interval for the exponent `theta`.
const THETA_MAX: f64 = 50.0;

/// `sum_j (a_lj xor a_ij)(2 q_ij - 1)` for the ordered pair (true row `i`,
/// competitor `l`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMargin {
    pub i: usize,
    pub l: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `None` when the margin condition fails.
    pub value: Option<f64>,
    pub condition_holds: bool,
    pub margins: Vec<PairMargin>,
}

/// `log(q e^t + (1 - q) e^-t)` without overflow for large `t`.
fn log_mgf(q: f64, t: f64) -> f64 {
    if q <= 0.0 {
        -t
    } else if q >= 1.0 {
        t
    } else {
        let a = q.ln() + t;
        let b = (1.0 - q).ln() - t;
        let hi = a.max(b);
        hi + ((a - hi).exp() + (b - hi).exp()).ln()
    }
}

/// Large-deviations upper bound on the misclassification probability of
/// Hamming fusion for fixed worker reliabilities `p`.
///
/// `q_ij` is the probability that worker `j` sends the wrong bit for row `i`,
/// `(1 - p_j) d_ij / (M - 1)` with `d_ij` the number of rows disagreeing with
/// row `i` in column `j`.
pub fn chernoff_bound(a: &CodeMatrix, p: &[f64]) -> Result<BoundReport> {
    let (m, n) = (a.num_classes(), a.num_workers());
    if p.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: p.len() });
    }
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::param(format!("reliability {bad} outside [0, 1]")));
    }
    let q: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let ones = a.column_weight(j) as usize;
                    let d = if a.bit(i, j) == 1 { m - ones } else { ones };
                    (1.0 - p[j]) * d as f64 / (m - 1) as f64
                })
                .collect()
        })
        .collect();

    let mut margins = Vec::with_capacity(m * (m - 1));
    let mut holds = true;
    for i in 0..m {
        for l in (0..m).filter(|&l| l != i) {
            let margin: f64 = (0..n)
                .filter(|&j| a.bit(i, j) != a.bit(l, j))
                .map(|j| 2.0 * q[i][j] - 1.0)
                .sum();
            holds &= margin < 0.0;
            margins.push(PairMargin { i, l, margin });
        }
    }
    if !holds {
        return Ok(BoundReport {
            value: None,
            condition_holds: false,
            margins,
        });
    }

    let mut total = 0.0;
    for i in 0..m {
        for l in (0..m).filter(|&l| l != i) {
            let differing: Vec<f64> = (0..n)
                .filter(|&j| a.bit(i, j) != a.bit(l, j))
                .map(|j| q[i][j])
                .collect();
            let exponent = |t: f64| differing.iter().map(|&qj| log_mgf(qj, t)).sum::<f64>();
            let (_, best) = golden_section_min(exponent, 0.0, THETA_MAX, 1e-9);
            total += best.exp();
        }
    }
    Ok(BoundReport {
        value: Some(total / m as f64),
        condition_holds: true,
        margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{pe_coding_given_reliabilities, pe_iid_coding};
    use crate::codebook::known;

    fn fig3() -> CodeMatrix {
        CodeMatrix::from_column_ints(&known::M4_N10, 4).unwrap()
    }

    #[test]
    fn perfect_workers() {
        let r = chernoff_bound(&fig3(), &[1.0; 10]).unwrap();
        assert!(r.condition_holds);
        assert!(r.value.unwrap() <= 1e-9);
    }

    #[test]
    fn random_workers_fail_condition() {
        let r = chernoff_bound(&fig3(), &[0.25; 10]).unwrap();
        assert!(!r.condition_holds);
        assert!(r.value.is_none());
        assert_eq!(r.margins.len(), 12);
        assert!(r.margins.iter().any(|g| g.margin >= 0.0));
    }

    #[test]
    fn dominates_exact() {
        let a = fig3();
        let r = chernoff_bound(&a, &[0.9; 10]).unwrap();
        assert!(r.value.unwrap() >= pe_iid_coding(&a, 0.9).unwrap().value);
        let p = [0.95, 0.8, 0.9, 0.85, 0.99, 0.7, 0.9, 0.92, 0.88, 0.97];
        let r = chernoff_bound(&a, &p).unwrap();
        assert!(r.value.unwrap() >= pe_coding_given_reliabilities(&a, &p).unwrap());
    }

    #[test]
    fn margin_sign_matches_flag() {
        let a = fig3();
        for p in [0.3, 0.5, 0.6, 0.8] {
            let r = chernoff_bound(&a, &[p; 10]).unwrap();
            assert_eq!(r.condition_holds, r.margins.iter().all(|g| g.margin < 0.0));
        }
    }

    #[test]
    fn stable_mgf() {
        assert!((log_mgf(0.3, 0.0)).abs() < 1e-15);
        assert!((log_mgf(0.2, 800.0) - (0.2f64.ln() + 800.0)).abs() < 1e-9);
        assert_eq!(log_mgf(0.0, 3.0), -3.0);
    }
}
