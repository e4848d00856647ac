//! Crowd reliability models: i.i.d. workers, paired workers with correlated
//! reliabilities, and workers sharing latent information sources.

mod copula;
mod sticks;

pub use copula::{induced_covariance, PairCopula};
pub use sticks::{
    group_assignment_prob, sample_group_assignment, GroupAssignment, LazySticks,
};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Group reliabilities are clamped to this distance from 0 and 1 before they
/// become the shape of a worker's `Beta(r / (1 - r), 1)` law.
pub const GROUP_RELIABILITY_CLAMP: f64 = 1e-6;

/// Distribution of a single worker's reliability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReliabilityDist {
    /// A fraction `quality` of hammers with reliability `p_hammer`, the rest
    /// spammers with reliability `p_spammer`.
    SpammerHammer {
        quality: f64,
        p_spammer: f64,
        p_hammer: f64,
    },
    Beta { alpha: f64, beta: f64 },
}

impl ReliabilityDist {
    /// Spammers guess uniformly (`1/M`), hammers are always right.
    pub fn spammer_hammer(quality: f64, m: usize) -> Self {
        ReliabilityDist::SpammerHammer {
            quality,
            p_spammer: 1.0 / m as f64,
            p_hammer: 1.0,
        }
    }

    /// Every worker has reliability `p`.
    pub fn constant(p: f64) -> Self {
        ReliabilityDist::SpammerHammer {
            quality: 1.0,
            p_spammer: p,
            p_hammer: p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ReliabilityDist::SpammerHammer {
                quality,
                p_spammer,
                p_hammer,
            } => {
                for (name, v) in [
                    ("quality", quality),
                    ("p_spammer", p_spammer),
                    ("p_hammer", p_hammer),
                ] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::param(format!("{name} must lie in [0, 1], got {v}")));
                    }
                }
            }
            ReliabilityDist::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::param(format!(
                        "beta shapes must be positive, got ({alpha}, {beta})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ReliabilityDist::SpammerHammer {
                quality,
                p_spammer,
                p_hammer,
            } => quality * p_hammer + (1.0 - quality) * p_spammer,
            ReliabilityDist::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ReliabilityDist::SpammerHammer {
                quality,
                p_spammer,
                p_hammer,
            } => quality * (1.0 - quality) * (p_hammer - p_spammer).powi(2),
            ReliabilityDist::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
        }
    }

    /// Inverse CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            ReliabilityDist::SpammerHammer {
                quality,
                p_spammer,
                p_hammer,
            } => {
                if u < 1.0 - quality {
                    p_spammer
                } else {
                    p_hammer
                }
            }
            ReliabilityDist::Beta { alpha, beta } => {
                let u = u.clamp(0.0, 1.0);
                if alpha == 0.5 && beta == 0.5 {
                    (std::f64::consts::FRAC_PI_2 * u).sin().powi(2)
                } else if beta == 1.0 {
                    u.powf(1.0 / alpha)
                } else if alpha == 1.0 {
                    1.0 - (1.0 - u).powf(1.0 / beta)
                } else {
                    statrs::function::beta::inv_beta_reg(alpha, beta, u)
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ReliabilityDist::SpammerHammer {
                quality,
                p_spammer,
                p_hammer,
            } => {
                if quality >= 1.0 || rng.random::<f64>() < quality {
                    p_hammer
                } else {
                    p_spammer
                }
            }
            ReliabilityDist::Beta { alpha, beta } => Beta::new(alpha, beta)
                .expect("validated shapes")
                .sample(rng),
        }
    }
}

/// How reliabilities depend on each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrowdModel {
    Iid,
    /// Workers `(0,1), (2,3), ...` are partners with reliability covariance
    /// `rho`.
    Paired { rho: f64 },
    LatentGroups { kappa: f64, truncation: usize },
    LatentGroupsPaired {
        rho: f64,
        kappa: f64,
        truncation: usize,
    },
}

impl CrowdModel {
    pub fn rho(&self) -> Option<f64> {
        match *self {
            CrowdModel::Paired { rho } | CrowdModel::LatentGroupsPaired { rho, .. } => Some(rho),
            _ => None,
        }
    }

    pub fn kappa(&self) -> Option<(f64, usize)> {
        match *self {
            CrowdModel::LatentGroups { kappa, truncation }
            | CrowdModel::LatentGroupsPaired {
                kappa, truncation, ..
            } => Some((kappa, truncation)),
            _ => None,
        }
    }

    pub fn is_paired(&self) -> bool {
        self.rho().is_some()
    }
}

/// Reliability-generating process of a crowd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrowdSpec {
    pub dist: ReliabilityDist,
    pub model: CrowdModel,
}

impl CrowdSpec {
    pub fn iid(dist: ReliabilityDist) -> Self {
        Self {
            dist,
            model: CrowdModel::Iid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if let Some((kappa, truncation)) = self.model.kappa() {
            if !(kappa > 0.0) || !kappa.is_finite() {
                return Err(Error::param(format!("concentration must be positive, got {kappa}")));
            }
            if truncation == 0 {
                return Err(Error::param("truncation L must be positive"));
            }
        }
        if let Some(rho) = self.model.rho() {
            let var = self.dist.variance();
            if rho.abs() > var + 1e-15 {
                return Err(Error::InfeasibleCovariance {
                    rho,
                    min: -var,
                    max: var,
                });
            }
        }
        Ok(())
    }

    pub fn mean_reliability(&self) -> f64 {
        mean_reliability(self)
    }
}

/// Mean worker reliability; under the latent-group model the group
/// reliabilities are drawn from `dist` and each worker's law has the group's
/// reliability as its mean, so the mean is unchanged.
pub fn mean_reliability(spec: &CrowdSpec) -> f64 {
    spec.dist.mean()
}

/// Pair covariance matching a correlation coefficient.
pub fn covariance_from_correlation(dist: &ReliabilityDist, rho_corr: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho_corr) {
        return Err(Error::param(format!(
            "correlation coefficient must lie in [-1, 1], got {rho_corr}"
        )));
    }
    Ok(rho_corr * dist.variance())
}

/// One draw of a crowd.
#[derive(Debug, Clone, PartialEq)]
pub struct CrowdDraw {
    pub reliabilities: Vec<f64>,
    pub groups: Option<GroupAssignment>,
}

/// Samples worker reliabilities for a fixed crowd spec. Construction performs
/// the (comparatively expensive) copula calibration once.
#[derive(Debug, Clone)]
pub struct CrowdSampler {
    spec: CrowdSpec,
    copula: Option<PairCopula>,
}

impl CrowdSampler {
    pub fn new(spec: CrowdSpec) -> Result<Self> {
        spec.validate()?;
        let copula = spec
            .model
            .rho()
            .map(|rho| PairCopula::calibrate(spec.dist, rho))
            .transpose()?;
        Ok(Self { spec, copula })
    }

    pub fn spec(&self) -> &CrowdSpec {
        &self.spec
    }

    pub fn check_size(&self, n: usize) -> Result<()> {
        if self.spec.model.is_paired() && n % 2 != 0 {
            return Err(Error::param(format!(
                "paired crowds need an even number of workers, got {n}"
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<CrowdDraw> {
        self.check_size(n)?;
        Ok(self.sample_unchecked(n, rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> CrowdDraw {
        let dist = &self.spec.dist;
        match self.spec.model {
            CrowdModel::Iid => CrowdDraw {
                reliabilities: (0..n).map(|_| dist.sample(rng)).collect(),
                groups: None,
            },
            CrowdModel::Paired { .. } => {
                let copula = self.copula.as_ref().expect("paired sampler has a copula");
                let mut p = Vec::with_capacity(n);
                for _ in 0..n / 2 {
                    let (a, b) = copula.sample_pair(rng);
                    p.push(a);
                    p.push(b);
                }
                CrowdDraw {
                    reliabilities: p,
                    groups: None,
                }
            }
            CrowdModel::LatentGroups { kappa, truncation }
            | CrowdModel::LatentGroupsPaired {
                kappa, truncation, ..
            } => {
                let mut sticks = LazySticks::new(kappa, truncation).expect("validated spec");
                let labels: Vec<usize> = (0..n).map(|_| sticks.draw_label(rng)).collect();
                let mut group_rel: Vec<Option<f64>> = Vec::new();
                let mut shapes = Vec::with_capacity(n);
                for &s in &labels {
                    if group_rel.len() <= s {
                        group_rel.resize(s + 1, None);
                    }
                    let r = *group_rel[s].get_or_insert_with(|| dist.sample(rng));
                    shapes.push(r);
                }
                let uniforms: Vec<f64> = match &self.copula {
                    None => (0..n).map(|_| rng.random::<f64>()).collect(),
                    Some(copula) => (0..n / 2)
                        .flat_map(|_| {
                            let (a, b) = copula.sample_uniforms(rng);
                            [a, b]
                        })
                        .collect(),
                };
                let reliabilities = shapes
                    .iter()
                    .zip(&uniforms)
                    .map(|(&r, &u)| worker_reliability(r, u))
                    .collect();
                CrowdDraw {
                    reliabilities,
                    groups: Some(GroupAssignment::new(labels, truncation).expect("labels in range")),
                }
            }
        }
    }
}

/// Quantile `u` of `Beta(r / (1 - r), 1)`, i.e. `u^((1 - r) / r)`.
fn worker_reliability(r: f64, u: f64) -> f64 {
    if r >= 1.0 {
        return 1.0;
    }
    let r = r.clamp(GROUP_RELIABILITY_CLAMP, 1.0 - GROUP_RELIABILITY_CLAMP);
    u.powf((1.0 - r) / r)
}

/// Reliabilities for `n` workers, reproducible from `seed`.
pub fn sample_reliabilities(spec: &CrowdSpec, n: usize, seed: u64) -> Result<CrowdDraw> {
    let sampler = CrowdSampler::new(*spec)?;
    sampler.sample(n, &mut stream_rng(seed, 0))
}

/// Serialized crowd description used by the CLI.
///
/// ```json
/// {"variant": "paired", "dist": {"kind": "beta", "alpha": 0.5, "beta": 0.5}, "rho_corr": -0.5}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdConfig {
    pub variant: CrowdVariant,
    pub dist: ReliabilityDist,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_corr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CrowdVariant {
    Iid,
    Paired,
    LatentGroups,
    LatentGroupsPaired,
}

/// Default truncation when a latent-group config leaves it out. Sticks are
/// broken lazily, so a large value costs nothing unless it is reached.
pub const DEFAULT_TRUNCATION: usize = 1000;

impl CrowdConfig {
    pub fn to_spec(&self) -> Result<CrowdSpec> {
        self.dist.validate()?;
        let rho = || covariance_from_correlation(&self.dist, self.rho_corr.unwrap_or(0.0));
        let kappa = || {
            self.kappa
                .ok_or_else(|| Error::param("latent-group crowds need a concentration (kappa)"))
        };
        let truncation = self.truncation.unwrap_or(DEFAULT_TRUNCATION);
        let model = match self.variant {
            CrowdVariant::Iid => CrowdModel::Iid,
            CrowdVariant::Paired => CrowdModel::Paired { rho: rho()? },
            CrowdVariant::LatentGroups => CrowdModel::LatentGroups {
                kappa: kappa()?,
                truncation,
            },
            CrowdVariant::LatentGroupsPaired => CrowdModel::LatentGroupsPaired {
                rho: rho()?,
                kappa: kappa()?,
                truncation,
            },
        };
        let spec = CrowdSpec {
            dist: self.dist,
            model,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn means() {
        let sh = ReliabilityDist::SpammerHammer {
            quality: 0.6,
            p_spammer: 0.25,
            p_hammer: 1.0,
        };
        assert_abs_diff_eq!(sh.mean(), 0.7, epsilon = 1e-15);
        assert_eq!(ReliabilityDist::spammer_hammer(0.6, 4), sh);
        let b = ReliabilityDist::Beta {
            alpha: 0.5,
            beta: 0.5,
        };
        assert_eq!(b.mean(), 0.5);
        assert_eq!(ReliabilityDist::spammer_hammer(1.0, 8).mean(), 1.0);
        assert_eq!(mean_reliability(&CrowdSpec::iid(b)), 0.5);
    }

    #[test]
    fn covariance_from_correlation_examples() {
        let b = ReliabilityDist::Beta {
            alpha: 0.5,
            beta: 0.5,
        };
        assert_abs_diff_eq!(b.variance(), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(covariance_from_correlation(&b, -0.5).unwrap(), -0.0625, epsilon = 1e-15);
        assert_eq!(covariance_from_correlation(&b, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(covariance_from_correlation(&b, 1.0).unwrap(), 0.125, epsilon = 1e-15);
        assert!(covariance_from_correlation(&b, 1.5).is_err());
        // Mixture variance: Q(1-Q)(p_h - p_s)^2 = E[p^2] - mu^2.
        let sh = ReliabilityDist::spammer_hammer(0.3, 4);
        let second = 0.3 * 1.0 + 0.7 * 0.0625;
        assert_abs_diff_eq!(sh.variance(), second - sh.mean().powi(2), epsilon = 1e-15);
    }

    #[test]
    fn all_hammers() {
        let spec = CrowdSpec::iid(ReliabilityDist::spammer_hammer(1.0, 4));
        assert_eq!(sample_reliabilities(&spec, 5, 1).unwrap().reliabilities, vec![1.0; 5]);
    }

    #[test]
    fn paired_needs_even_workers() {
        let spec = CrowdSpec {
            dist: ReliabilityDist::Beta {
                alpha: 0.5,
                beta: 0.5,
            },
            model: CrowdModel::Paired { rho: 0.01 },
        };
        assert!(sample_reliabilities(&spec, 5, 1).is_err());
        assert_eq!(sample_reliabilities(&spec, 6, 1).unwrap().reliabilities.len(), 6);
    }

    #[test]
    fn infeasible_pair_covariance() {
        let spec = CrowdSpec {
            dist: ReliabilityDist::Beta {
                alpha: 0.5,
                beta: 0.5,
            },
            model: CrowdModel::Paired { rho: 0.2 },
        };
        assert!(matches!(spec.validate(), Err(Error::InfeasibleCovariance { .. })));
    }

    #[test]
    fn reliabilities_stay_in_unit_interval() {
        let dists = [
            ReliabilityDist::Beta {
                alpha: 0.5,
                beta: 0.5,
            },
            ReliabilityDist::Beta {
                alpha: 3.0,
                beta: 0.7,
            },
            ReliabilityDist::spammer_hammer(0.4, 8),
        ];
        for dist in dists {
            let rho = -0.3 * dist.variance();
            for model in [
                CrowdModel::Iid,
                CrowdModel::Paired { rho },
                CrowdModel::LatentGroups {
                    kappa: 1.0,
                    truncation: 10,
                },
                CrowdModel::LatentGroupsPaired {
                    rho,
                    kappa: 2.0,
                    truncation: 50,
                },
            ] {
                let draw = sample_reliabilities(&CrowdSpec { dist, model }, 200, 5).unwrap();
                assert!(draw.reliabilities.iter().all(|p| (0.0..=1.0).contains(p)));
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{"variant":"paired","dist":{"kind":"beta","alpha":0.5,"beta":0.5},"rho_corr":-0.5}"#;
        let cfg: CrowdConfig = serde_json::from_str(text).unwrap();
        assert_eq!(serde_json::to_string(&cfg).unwrap(), text);
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.model, CrowdModel::Paired { rho: -0.0625 });

        let text = r#"{"variant":"latent-groups","dist":{"kind":"spammer-hammer","quality":0.5,"p_spammer":0.125,"p_hammer":1.0},"kappa":2.0,"truncation":20}"#;
        let cfg: CrowdConfig = serde_json::from_str(text).unwrap();
        assert_eq!(
            cfg.to_spec().unwrap().model,
            CrowdModel::LatentGroups {
                kappa: 2.0,
                truncation: 20
            }
        );
        let missing_kappa = CrowdConfig {
            kappa: None,
            ..cfg
        };
        assert!(missing_kappa.to_spec().is_err());
    }

    #[test]
    fn group_reliability_edges() {
        assert_eq!(worker_reliability(1.0, 0.3), 1.0);
        assert!(worker_reliability(0.0, 0.999) < 1e-100);
        assert_abs_diff_eq!(worker_reliability(0.5, 0.3), 0.3, epsilon = 1e-15);
    }
}
