use super::{check_mu, ExactParams, ExactPerfReport, Proposition};
use crate::codebook::log2_exact;
use crate::error::{Error, Result};
use crate::numeric::{binomial, CompensatedSum};

/// `S_{n,p}(k) = P(Binomial(n, p) > k) = sum_{j = floor(k + 1)}^{n} C(n, j) p^j (1 - p)^(n - j)`.
pub fn survival_binomial(n: u32, p: f64, k: f64) -> f64 {
    let start = (k + 1.0).floor().max(0.0);
    if start > n as f64 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for j in start as u32..=n {
        acc.add(binomial(n as i64, j as i64) * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32));
    }
    acc.value().clamp(0.0, 1.0)
}

/// Bit-flip probability of one worker: `q = M (1 - mu) / (2 (M - 1))`.
fn bit_error(m: usize, mu: f64) -> f64 {
    let mf = m as f64;
    mf * (1.0 - mu) / (2.0 * (mf - 1.0))
}

fn group_width(m: usize, n: usize, paired: bool) -> Result<(u32, usize)> {
    let bits = log2_exact(m).ok_or(Error::NotPowerOfTwo { what: "M", m })?;
    if bits == 0 {
        return Err(Error::param("majority fusion needs at least two classes"));
    }
    let divisor = if paired { 2 * bits } else { bits };
    if n == 0 || n % divisor != 0 {
        return Err(Error::Divisibility {
            what: if paired { "N by 2 log2 M" } else { "N by log2 M" },
            n,
            divisor,
        });
    }
    Ok((bits as u32, n / bits))
}

fn report(m: usize, n: usize, mu: f64, rho: Option<f64>, value: f64, proposition: Proposition) -> ExactPerfReport {
    ExactPerfReport {
        value: value.clamp(0.0, 1.0),
        proposition,
        params: ExactParams {
            m,
            n,
            mu,
            rho,
            kappa: None,
            truncation: None,
        },
        matrix_fingerprint: None,
    }
}

/// Expected misclassification probability of bitwise majority fusion with
/// i.i.d. reliabilities of mean `mu`; each bit is voted on by `N / log2 M`
/// workers and ties are broken by a fair coin.
pub fn pe_iid_majority(m: usize, n: usize, mu: f64) -> Result<ExactPerfReport> {
    check_mu(mu)?;
    let (bits, width) = group_width(m, n, false)?;
    let q = bit_error(m, mu);
    let half = width as f64 / 2.0;
    let w = width as u32;
    let base = 1.0 + survival_binomial(w, 1.0 - q, half) - survival_binomial(w, q, half);
    let value = 1.0 - base.powi(bits as i32) / m as f64;
    Ok(report(m, n, mu, None, value, Proposition::IidMajority))
}

/// Coefficient `b_j(Ñ, q, r)` of the paired-majority formula.
fn pair_coefficient(width: usize, j: usize, q: f64, r: f64) -> f64 {
    let nt = width as i64;
    let half = nt / 2;
    let j = j as i64;
    let mut acc = CompensatedSum::new();
    let mut g = 0;
    while 2 * g <= nt - j {
        let c = binomial(half, g) * binomial(half - g, j + g - half);
        if c != 0.0 {
            acc.add(c * (2.0 * (q - r)).powi((nt - j - 2 * g) as i32) * (r - 2.0 * q * r + r * r).powi(g as i32));
        }
        g += 1;
    }
    acc.value()
}

/// Expected misclassification probability of bitwise majority fusion when
/// partners share a bit group and their reliabilities have covariance `rho`.
pub fn pe_paired_majority(m: usize, n: usize, mu: f64, rho: f64) -> Result<ExactPerfReport> {
    check_mu(mu)?;
    let (bits, width) = group_width(m, n, true)?;
    let (lo, hi) = super::coding::feasible_pair_covariance(mu);
    if rho < lo - 1e-12 || rho > hi + 1e-12 {
        return Err(Error::InfeasibleCovariance { rho, min: lo, max: hi });
    }
    let mf = m as f64;
    let q = bit_error(m, mu);
    let r = (mf / (2.0 * (mf - 1.0))).powi(2) * ((1.0 - mu).powi(2) + rho);
    let half = width / 2;
    let mut sum = CompensatedSum::new();
    sum.add(1.0);
    for j in half + 1..=width {
        let e = (j - half) as i32;
        sum.add(pair_coefficient(width, j, q, r) * ((1.0 - 2.0 * q + r).powi(e) - r.powi(e)));
    }
    let value = 1.0 - sum.value().powi(bits as i32) / mf;
    Ok(report(m, n, mu, Some(rho), value, Proposition::PairedMajority))
}
