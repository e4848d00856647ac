use super::enumerate::{total_cost, Block};
use super::{check_mu, ExactParams, ExactPerfReport, Proposition, MAX_EXACT_WORKERS, MAX_GROUPED_TERMS};
use crate::codebook::CodeMatrix;
use crate::crowd::{group_assignment_prob, GroupAssignment};
use crate::error::{Error, Result};
use crate::numeric::{binomial, CompensatedSum};

fn check_width(a: &CodeMatrix) -> Result<()> {
    if a.num_workers() > MAX_EXACT_WORKERS {
        return Err(Error::EnumerationCap {
            detail: format!(
                "N = {} exceeds the exact-enumeration cap of {MAX_EXACT_WORKERS} workers",
                a.num_workers()
            ),
        });
    }
    Ok(())
}

/// `sum_{k != l} a[k][j]` for every `(l, j)`, laid out `[l][j]`.
fn off_row_sums(a: &CodeMatrix) -> Vec<Vec<f64>> {
    let m = a.num_classes();
    (0..m)
        .map(|l| {
            (0..a.num_workers())
                .map(|j| (a.column_weight(j) - u32::from(a.bit(l, j))) as f64)
                .collect()
        })
        .collect()
}

/// `P(u_j = 1 | H_l)` for a worker of reliability `p`.
#[inline]
fn answer_one_prob(p: f64, a_lj: f64, off: f64, m: usize) -> f64 {
    p * a_lj + (1.0 - p) / (m - 1) as f64 * off
}

/// Blocks for independent workers with reliabilities `p`.
fn single_blocks(a: &CodeMatrix, p: &[f64]) -> Vec<Block> {
    let m = a.num_classes();
    let off = off_row_sums(a);
    (0..a.num_workers())
        .map(|j| {
            Block::new(vec![j], m, |l, o| {
                let one = answer_one_prob(p[j], f64::from(a.bit(l, j)), off[l][j], m);
                let i = o as f64;
                one * (2.0 * i - 1.0) + (1.0 - i)
            })
        })
        .collect()
}

/// Misclassification probability of Hamming fusion for workers with known
/// reliabilities `p` (equiprobable classes).
pub fn pe_coding_given_reliabilities(a: &CodeMatrix, p: &[f64]) -> Result<f64> {
    check_width(a)?;
    if p.len() != a.num_workers() {
        return Err(Error::LengthMismatch {
            expected: a.num_workers(),
            found: p.len(),
        });
    }
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::param(format!("reliability {bad} outside [0, 1]")));
    }
    let total = total_cost(a, &single_blocks(a, p));
    Ok((total / a.num_classes() as f64).clamp(0.0, 1.0))
}

fn report(a: &CodeMatrix, value: f64, proposition: Proposition, params: ExactParams) -> ExactPerfReport {
    ExactPerfReport {
        value,
        proposition,
        params,
        matrix_fingerprint: Some(a.fingerprint()),
    }
}

fn params(a: &CodeMatrix, mu: f64) -> ExactParams {
    ExactParams {
        m: a.num_classes(),
        n: a.num_workers(),
        mu,
        rho: None,
        kappa: None,
        truncation: None,
    }
}

/// Expected misclassification probability of Hamming fusion when the
/// reliabilities are i.i.d. with mean `mu`. The per-vector probability is
/// multilinear in the reliabilities, so only the mean matters.
pub fn pe_iid_coding(a: &CodeMatrix, mu: f64) -> Result<ExactPerfReport> {
    check_mu(mu)?;
    let value = pe_coding_given_reliabilities(a, &vec![mu; a.num_workers()])?;
    Ok(report(a, value, Proposition::IidCoding, params(a, mu)))
}

/// A perfect matching of workers into partner pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    /// Workers `(0, 1), (2, 3), ...`.
    pub fn adjacent(n: usize) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::param(format!(
                "pairing needs an even number of workers, got {n}"
            )));
        }
        Ok(Self {
            pairs: (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect(),
        })
    }

    pub fn new(pairs: Vec<(usize, usize)>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &(x, y) in &pairs {
            for w in [x, y] {
                if w >= n || std::mem::replace(&mut seen[w], true) {
                    return Err(Error::param(format!("worker {w} is out of range or paired twice")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::param("every worker must have a partner"));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn num_workers(&self) -> usize {
        2 * self.pairs.len()
    }
}

/// Range of pair covariances realisable by two `[0, 1]` variables of mean `mu`.
pub(crate) fn feasible_pair_covariance(mu: f64) -> (f64, f64) {
    let lo = (2.0 * mu - 1.0).max(0.0) - mu * mu;
    (lo, mu * (1.0 - mu))
}

fn paired_blocks(a: &CodeMatrix, mu: f64, rho: f64, pairing: &Pairing) -> Vec<Block> {
    let m = a.num_classes();
    let mf = m as f64;
    let off = off_row_sums(a);
    let r = (mf / (2.0 * (mf - 1.0))).powi(2) * ((1.0 - mu).powi(2) + rho);
    let both = rho + mu * mu;
    pairing
        .pairs()
        .iter()
        .map(|&(j, jp)| {
            Block::new(vec![j, jp], m, |l, o| {
                let i = (o & 1) as f64;
                let ip = ((o >> 1) & 1) as f64;
                let (alj, aljp) = (f64::from(a.bit(l, j)), f64::from(a.bit(l, jp)));
                let (sj, sjp) = (off[l][j], off[l][jp]);
                let xj = answer_one_prob(mu, alj, sj, m);
                let xjp = answer_one_prob(mu, aljp, sjp, m);
                let joint = both * alj * aljp
                    + (mu - both) / (mf - 1.0) * (alj * sjp + aljp * sj)
                    + 4.0 * r / (mf * mf) * sjp * sj;
                (1.0 - i) * (1.0 - ip)
                    + (1.0 - i) * (2.0 * ip - 1.0) * xjp
                    + (1.0 - ip) * (2.0 * i - 1.0) * xj
                    + (2.0 * i - 1.0) * (2.0 * ip - 1.0) * joint
            })
        })
        .collect()
}

fn check_pairing(a: &CodeMatrix, mu: f64, rho: f64, pairing: &Pairing) -> Result<()> {
    check_mu(mu)?;
    check_width(a)?;
    if pairing.num_workers() != a.num_workers() {
        return Err(Error::LengthMismatch {
            expected: a.num_workers(),
            found: pairing.num_workers(),
        });
    }
    let (lo, hi) = feasible_pair_covariance(mu);
    if rho < lo - 1e-12 || rho > hi + 1e-12 {
        return Err(Error::InfeasibleCovariance { rho, min: lo, max: hi });
    }
    Ok(())
}

/// Expected misclassification probability of Hamming fusion when partners'
/// reliabilities have covariance `rho` and pairs are mutually independent.
pub fn pe_paired_coding(
    a: &CodeMatrix,
    mu: f64,
    rho: f64,
    pairing: &Pairing,
) -> Result<ExactPerfReport> {
    check_pairing(a, mu, rho, pairing)?;
    let total = total_cost(a, &paired_blocks(a, mu, rho, pairing));
    let value = (total / a.num_classes() as f64).clamp(0.0, 1.0);
    Ok(report(
        a,
        value,
        Proposition::PairedCoding,
        ExactParams {
            rho: Some(rho),
            ..params(a, mu)
        },
    ))
}

fn check_grouped_budget(a: &CodeMatrix, truncation: usize) -> Result<()> {
    check_width(a)?;
    if truncation == 0 {
        return Err(Error::param("truncation L must be positive"));
    }
    let n = a.num_workers() as f64;
    let terms = (truncation as f64).powf(n) * 2f64.powf(n) * a.num_classes() as f64;
    if terms > MAX_GROUPED_TERMS {
        return Err(Error::EnumerationCap {
            detail: format!(
                "L^N 2^N M = {terms:.3e} terms exceeds the budget of {MAX_GROUPED_TERMS:.3e}"
            ),
        });
    }
    Ok(())
}

/// `sum_s P(S = s)` over all `L^N` labellings, grouped by the composition of
/// group sizes (the probability depends on the labels only through it).
pub fn grouped_assignment_mass(n: usize, kappa: f64, truncation: usize) -> Result<f64> {
    fn compositions(
        remaining: usize,
        slots: usize,
        current: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        if slots == 1 {
            current.push(remaining);
            let r = visit(current);
            current.pop();
            return r;
        }
        for k in 0..=remaining {
            current.push(k);
            compositions(remaining - k, slots - 1, current, visit)?;
            current.pop();
        }
        Ok(())
    }

    if truncation == 0 {
        return Err(Error::param("truncation L must be positive"));
    }
    let mut mass = CompensatedSum::new();
    compositions(n, truncation, &mut Vec::new(), &mut |sizes| {
        // Number of labellings with these group sizes.
        let mut ways = 1.0;
        let mut left = n as i64;
        for &s in sizes {
            ways *= binomial(left, s as i64);
            left -= s as i64;
        }
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
            .collect();
        let p = group_assignment_prob(&GroupAssignment::new(labels, truncation)?, kappa)?;
        mass.add(ways * p);
        Ok(())
    })?;
    Ok(mass.value())
}

/// Latent-group formula for Hamming fusion:
/// `(1/M) sum_{i,l,s} C_i^l P(S = s) prod_j [...]`, where the worker product
/// uses the crowd mean `mu` and therefore does not depend on `s`. The sum over
/// `s` factors out as [`grouped_assignment_mass`].
pub fn pe_grouped_coding(
    a: &CodeMatrix,
    mu: f64,
    kappa: f64,
    truncation: usize,
) -> Result<ExactPerfReport> {
    check_mu(mu)?;
    check_grouped_budget(a, truncation)?;
    let mass = grouped_assignment_mass(a.num_workers(), kappa, truncation)?;
    let inner = total_cost(a, &single_blocks(a, &vec![mu; a.num_workers()]));
    let value = (mass * inner / a.num_classes() as f64).clamp(0.0, 1.0);
    Ok(report(
        a,
        value,
        Proposition::GroupedCoding,
        ExactParams {
            kappa: Some(kappa),
            truncation: Some(truncation),
            ..params(a, mu)
        },
    ))
}

/// Latent-group formula with pairing; same structure as
/// [`pe_grouped_coding`] with the paired per-vector term.
pub fn pe_grouped_paired_coding(
    a: &CodeMatrix,
    mu: f64,
    rho: f64,
    kappa: f64,
    truncation: usize,
    pairing: &Pairing,
) -> Result<ExactPerfReport> {
    check_pairing(a, mu, rho, pairing)?;
    check_grouped_budget(a, truncation)?;
    let mass = grouped_assignment_mass(a.num_workers(), kappa, truncation)?;
    let inner = total_cost(a, &paired_blocks(a, mu, rho, pairing));
    let value = (mass * inner / a.num_classes() as f64).clamp(0.0, 1.0);
    Ok(report(
        a,
        value,
        Proposition::GroupedPairedCoding,
        ExactParams {
            rho: Some(rho),
            kappa: Some(kappa),
            truncation: Some(truncation),
            ..params(a, mu)
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{decision_profile, known, AnswerVector};
    use crate::analytic::cost;
    use approx::assert_abs_diff_eq;

    fn fig3() -> CodeMatrix {
        CodeMatrix::from_column_ints(&known::M4_N10, 4).unwrap()
    }

    /// Direct sum over every (class, received vector) pair.
    fn brute_force(a: &CodeMatrix, p: &[f64]) -> f64 {
        let (m, n) = (a.num_classes(), a.num_workers());
        let mut total = 0.0;
        for mask in 0..1u64 << n {
            let u = AnswerVector::from_mask(mask, n);
            let profile = decision_profile(a, &u).unwrap();
            for l in 0..m {
                let mut prob = 1.0;
                for j in 0..n {
                    // P(u_j = 1 | H_l) = sum_k a_kj P(y_j = k | H_l).
                    let one: f64 = (0..m)
                        .map(|k| {
                            let py = if k == l { p[j] } else { (1.0 - p[j]) / (m - 1) as f64 };
                            f64::from(a.bit(k, j)) * py
                        })
                        .sum();
                    prob *= if (mask >> j) & 1 == 1 { one } else { 1.0 - one };
                }
                total += prob * cost(&profile, l);
            }
        }
        total / m as f64
    }

    #[test]
    fn perfect_workers_never_err() {
        assert_eq!(pe_iid_coding(&fig3(), 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn random_crowd_is_random_guessing() {
        for (cols, m) in [(&known::M4_N10[..], 4), (&known::M8_N15[..], 8), (&[1u64, 1, 2][..], 2)] {
            let a = CodeMatrix::from_column_ints(cols, m).unwrap();
            let v = pe_iid_coding(&a, 1.0 / m as f64).unwrap().value;
            assert_abs_diff_eq!(v, (m - 1) as f64 / m as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn repetition_code_value() {
        let a = CodeMatrix::from_column_ints(&[2, 2, 2], 2).unwrap();
        let v = pe_iid_coding(&a, 0.9).unwrap().value;
        assert_abs_diff_eq!(v, brute_force(&a, &[0.9; 3]), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.028, epsilon = 1e-15);
    }

    #[test]
    fn heterogeneous_reliabilities_match_brute_force() {
        let a = fig3();
        let p = [0.9, 0.3, 0.7, 0.55, 1.0, 0.0, 0.25, 0.8, 0.6, 0.45];
        let v = pe_coding_given_reliabilities(&a, &p).unwrap();
        assert_abs_diff_eq!(v, brute_force(&a, &p), epsilon = 1e-12);
    }

    #[test]
    fn duplicate_rows_keep_error_floor() {
        // Two identical codewords can at best be split by a coin flip.
        let a = CodeMatrix::from_rows(&[vec![0, 0, 0], vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        let v = pe_iid_coding(&a, 1.0).unwrap().value;
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn wide_matrices_are_refused() {
        let a = CodeMatrix::from_column_ints(&known::M8_N15, 8).unwrap().concatenate(2).unwrap();
        assert!(matches!(pe_iid_coding(&a, 0.9), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn report_metadata() {
        let r = pe_iid_coding(&fig3(), 0.7).unwrap();
        assert_eq!(r.proposition, Proposition::IidCoding);
        assert_eq!((r.params.m, r.params.n), (4, 10));
        assert_eq!(r.matrix_fingerprint.as_deref(), Some(fig3().fingerprint().as_str()));
        assert!(pe_iid_coding(&fig3(), 1.2).is_err());
    }

    /// Enumerates a two-point joint law for each partner pair with moments
    /// `(mu, mu, rho + mu^2)`: `p, p'` in `{0, 1}`.
    fn two_point_oracle(a: &CodeMatrix, mu: f64, rho: f64) -> f64 {
        let both = rho + mu * mu;
        let joint = [(1.0, 1.0, both), (1.0, 0.0, mu - both), (0.0, 1.0, mu - both), (0.0, 0.0, 1.0 - 2.0 * mu + both)];
        let pairs = a.num_workers() / 2;
        let mut total = 0.0;
        for code in 0..4usize.pow(pairs as u32) {
            let mut weight = 1.0;
            let mut p = Vec::with_capacity(a.num_workers());
            for k in 0..pairs {
                let (x, y, w) = joint[code / 4usize.pow(k as u32) % 4];
                weight *= w;
                p.push(x);
                p.push(y);
            }
            if weight > 0.0 {
                total += weight * brute_force(a, &p);
            }
        }
        total
    }

    #[test]
    fn paired_matches_two_point_oracle() {
        let toy = CodeMatrix::from_column_ints(&[2, 2], 2).unwrap();
        let v = pe_paired_coding(&toy, 0.8, 0.05, &Pairing::adjacent(2).unwrap()).unwrap().value;
        assert_abs_diff_eq!(v, two_point_oracle(&toy, 0.8, 0.05), epsilon = 1e-14);

        let a = CodeMatrix::from_column_ints(&[5, 12, 3, 10, 12, 9], 4).unwrap();
        for (mu, rho) in [(0.7, 0.1), (0.4, -0.1), (0.9, 0.0)] {
            let v = pe_paired_coding(&a, mu, rho, &Pairing::adjacent(6).unwrap()).unwrap().value;
            assert_abs_diff_eq!(v, two_point_oracle(&a, mu, rho), epsilon = 1e-13);
        }
    }

    #[test]
    fn paired_reduces_to_iid() {
        let a = fig3();
        for mu in [0.3, 0.6, 0.95] {
            let paired = pe_paired_coding(&a, mu, 0.0, &Pairing::adjacent(10).unwrap()).unwrap().value;
            assert_abs_diff_eq!(paired, pe_iid_coding(&a, mu).unwrap().value, epsilon = 1e-12);
        }
    }

    #[test]
    fn paired_input_validation() {
        let a = fig3();
        assert!(Pairing::adjacent(9).is_err());
        assert!(Pairing::new(vec![(0, 1), (1, 2)], 4).is_err());
        assert!(Pairing::new(vec![(0, 3), (1, 2)], 4).is_ok());
        let bad_rho = pe_paired_coding(&a, 0.5, 0.3, &Pairing::adjacent(10).unwrap());
        assert!(matches!(bad_rho, Err(Error::InfeasibleCovariance { .. })));
    }

    #[test]
    fn assignment_mass_matches_label_enumeration() {
        for (n, l, kappa) in [(3usize, 2usize, 0.7), (4, 3, 2.0), (2, 4, 0.1)] {
            let mut direct = 0.0;
            for code in 0..l.pow(n as u32) {
                let labels: Vec<usize> = (0..n).map(|j| code / l.pow(j as u32) % l).collect();
                direct += group_assignment_prob(&GroupAssignment::new(labels, l).unwrap(), kappa).unwrap();
            }
            assert_abs_diff_eq!(grouped_assignment_mass(n, kappa, l).unwrap(), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn grouped_factorizes() {
        let a = CodeMatrix::from_column_ints(&[5, 12, 3, 10, 12, 9, 9, 10], 4).unwrap();
        for kappa in [0.1, 1.0, 10.0] {
            let g = pe_grouped_coding(&a, 0.7, kappa, 3).unwrap().value;
            let mass = grouped_assignment_mass(8, kappa, 3).unwrap();
            assert_abs_diff_eq!(g, pe_iid_coding(&a, 0.7).unwrap().value * mass, epsilon = 1e-13);
        }
    }

    #[test]
    fn grouped_single_label_limit() {
        let a = CodeMatrix::from_column_ints(&[5, 12, 3, 10], 4).unwrap();
        let iid = pe_iid_coding(&a, 0.6).unwrap().value;
        let mut last = f64::INFINITY;
        for kappa in [1.0, 10.0, 100.0, 1e4] {
            let all_zero = group_assignment_prob(&GroupAssignment::new(vec![0; 4], 1).unwrap(), kappa).unwrap();
            let g = pe_grouped_coding(&a, 0.6, kappa, 1).unwrap().value;
            assert_abs_diff_eq!(g, iid * all_zero, epsilon = 1e-14);
            assert!(g < last);
            last = g;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn grouped_budget() {
        let a = CodeMatrix::from_column_ints(&known::M8_N15, 8).unwrap();
        assert!(matches!(pe_grouped_coding(&a, 0.7, 1.0, 8), Err(Error::EnumerationCap { .. })));
    }
}
