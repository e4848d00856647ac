//! Gaussian-copula coupling of two partner reliabilities.
//!
//! Both partners keep the exact marginal law; the latent normal correlation is
//! calibrated so that the induced linear covariance of the reliabilities
//! equals the requested value.

use rand::Rng;
use rand_distr::StandardNormal;

use super::ReliabilityDist;
use crate::error::{Error, Result};
use crate::numeric::{bisect_increasing, gauss_hermite, normal_cdf, normal_quantile};

const HERMITE_NODES: usize = 48;
const ORTHANT_STEPS: usize = 2000;

/// Latent normal correlation plus the marginal it drives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCopula {
    dist: ReliabilityDist,
    corr: f64,
}

impl PairCopula {
    /// Calibrates the copula so that `cov(p, p') = rho`.
    pub fn calibrate(dist: ReliabilityDist, rho: f64) -> Result<Self> {
        let var = dist.variance();
        if var <= 1e-15 {
            if rho.abs() > 1e-12 {
                return Err(Error::InfeasibleCovariance {
                    rho,
                    min: 0.0,
                    max: 0.0,
                });
            }
            return Ok(Self { dist, corr: 0.0 });
        }
        if rho == 0.0 {
            return Ok(Self { dist, corr: 0.0 });
        }
        let lo = induced_covariance(&dist, -1.0);
        let hi = var;
        let tol = 1e-9 * var;
        if rho < lo - tol || rho > hi + tol {
            return Err(Error::InfeasibleCovariance {
                rho,
                min: lo,
                max: hi,
            });
        }
        let corr = if rho <= lo {
            -1.0
        } else if rho >= induced_covariance(&dist, 1.0) {
            1.0
        } else {
            bisect_increasing(|c| induced_covariance(&dist, c), rho, -1.0, 1.0, 1e-12)
        };
        Ok(Self { dist, corr })
    }

    pub fn latent_correlation(&self) -> f64 {
        self.corr
    }

    /// Correlated uniforms `(Phi(z1), Phi(z2))`.
    pub fn sample_uniforms<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let z1: f64 = rng.sample(StandardNormal);
        let w: f64 = rng.sample(StandardNormal);
        let z2 = self.corr * z1 + (1.0 - self.corr * self.corr).max(0.0).sqrt() * w;
        (normal_cdf(z1), normal_cdf(z2))
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let (u1, u2) = self.sample_uniforms(rng);
        (self.dist.quantile(u1), self.dist.quantile(u2))
    }
}

/// Covariance of `(Q(Phi(Z1)), Q(Phi(Z2)))` for standard normals with
/// correlation `c`, where `Q` is the quantile function of `dist`.
pub fn induced_covariance(dist: &ReliabilityDist, c: f64) -> f64 {
    match *dist {
        ReliabilityDist::SpammerHammer {
            quality,
            p_spammer,
            p_hammer,
        } => {
            if quality <= 0.0 || quality >= 1.0 {
                return 0.0;
            }
            // Hammer iff Z > t.
            let t = normal_quantile(1.0 - quality);
            let both = upper_orthant(t, c);
            (p_hammer - p_spammer).powi(2) * (both - quality * quality)
        }
        ReliabilityDist::Beta { .. } => {
            let (x, w) = gauss_hermite(HERMITE_NODES);
            let s = (1.0 - c * c).max(0.0).sqrt();
            let g = |z: f64| dist.quantile(normal_cdf(z));
            let sqrt2 = std::f64::consts::SQRT_2;
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let g1 = g(sqrt2 * xi);
                let inner: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xk, wk)| wk * g(sqrt2 * (c * xi + s * xk)))
                    .sum();
                acc += wi * g1 * inner;
            }
            acc / std::f64::consts::PI - dist.mean().powi(2)
        }
    }
}

/// `P(Z1 > t, Z2 > t)` for standard normals with correlation `c`, via the
/// angular form of the bivariate normal integral.
fn upper_orthant(t: f64, c: f64) -> f64 {
    let h = -t;
    let base = normal_cdf(h).powi(2);
    let end = c.clamp(-1.0, 1.0).asin();
    let f = |theta: f64| {
        let denom = 1.0 + theta.sin();
        if denom <= 0.0 {
            if h == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-h * h / denom).exp()
        }
    };
    let steps = ORTHANT_STEPS;
    let step = end / steps as f64;
    let mut acc = f(0.0) + f(end);
    for k in 1..steps {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(k as f64 * step);
    }
    base + acc * step / 3.0 / (2.0 * std::f64::consts::PI)
}
