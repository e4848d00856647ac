//! Monte Carlo engine: end-to-end trials of the crowd, both fusion rules,
//! estimates with standard errors, and parameter sweeps with the exact values
//! attached where an evaluator exists.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    chernoff_bound, pe_iid_coding, pe_iid_majority, pe_paired_coding, pe_paired_majority,
    Pairing, MAX_EXACT_WORKERS,
};
use crate::codebook::{log2_exact, AnswerVector, CodeMatrix};
use crate::crowd::{covariance_from_correlation, CrowdModel, CrowdSampler, CrowdSpec, ReliabilityDist};
use crate::error::{Error, Result};
use crate::fusion::{binary_answer, decode_hamming, decode_majority, local_decision, GroupMap};
use crate::seed::{derive_seed, stream_rng};

/// Whether every trial draws a fresh crowd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ResamplePolicy {
    #[default]
    ReliabilitiesPerTrial,
    /// One crowd drawn up front and reused by every trial.
    FixedCrowd,
}

/// Where majority voting puts the partners `(2k, 2k + 1)` of a paired crowd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PartnerPlacement {
    /// Contiguous bit groups, so partners vote on the same bit.
    #[default]
    SameBitGroup,
    /// Round-robin bit groups, so partners vote on different bits.
    Independent,
}

impl PartnerPlacement {
    pub fn group_map(self, m: usize, n: usize) -> Result<GroupMap> {
        match self {
            PartnerPlacement::SameBitGroup => GroupMap::contiguous(m, n),
            PartnerPlacement::Independent => GroupMap::round_robin(m, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub n: usize,
    /// Matrix for Hamming fusion; `None` skips the coding estimate.
    pub code: Option<CodeMatrix>,
    /// Whether to also run bitwise majority voting.
    pub majority: bool,
    pub crowd: CrowdSpec,
    pub trials: u64,
    pub seed: u64,
    pub resample: ResamplePolicy,
    pub placement: PartnerPlacement,
    pub record_trace: bool,
}

impl SimConfig {
    /// Hamming fusion with `code` and majority voting (when `M` is a power
    /// of two), fresh crowd per trial.
    pub fn new(code: CodeMatrix, crowd: CrowdSpec, trials: u64, seed: u64) -> Self {
        let (m, n) = (code.num_classes(), code.num_workers());
        Self {
            m,
            n,
            majority: log2_exact(m).is_some() && n >= log2_exact(m).unwrap_or(0),
            code: Some(code),
            crowd,
            trials,
            seed,
            resample: ResamplePolicy::default(),
            placement: PartnerPlacement::default(),
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("at least one trial is required"));
        }
        if self.m < 2 || self.n == 0 {
            return Err(Error::param(format!("invalid system size M = {}, N = {}", self.m, self.n)));
        }
        if let Some(a) = &self.code {
            if (a.num_classes(), a.num_workers()) != (self.m, self.n) {
                return Err(Error::param(format!(
                    "matrix is {} x {}, configuration says {} x {}",
                    a.num_classes(),
                    a.num_workers(),
                    self.m,
                    self.n
                )));
            }
        }
        if self.code.is_none() && !self.majority {
            return Err(Error::param("nothing to simulate: no matrix and majority disabled"));
        }
        if self.majority {
            self.placement.group_map(self.m, self.n)?;
        }
        CrowdSampler::new(self.crowd)?.check_size(self.n)
    }
}

/// Error-rate estimate from Bernoulli trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub errors: u64,
    pub trials: u64,
    pub pe: f64,
    /// `sqrt(pe (1 - pe) / trials)`.
    pub stderr: f64,
}

impl Estimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let pe = errors as f64 / trials as f64;
        Self {
            errors,
            trials,
            pe,
            stderr: (pe * (1.0 - pe) / trials as f64).sqrt(),
        }
    }

    /// Whether `value` lies within `k` standard errors. A zero standard error
    /// demands an exact match up to rounding.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.pe - value).abs() <= k * self.stderr + 1e-12
    }
}

/// One trial of the optional trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trial: u64,
    pub true_class: usize,
    /// Coding answers as `0`, `1` or `-`; majority bits when there is no
    /// matrix.
    pub answers: String,
    pub decoded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub coding: Option<Estimate>,
    pub majority: Option<Estimate>,
    pub trace: Option<Vec<TraceRow>>,
}

struct TrialOutcome {
    coding_error: bool,
    majority_error: bool,
    trace: Option<TraceRow>,
}

/// Runs `config.trials` independent trials. Trial `t` draws from its own
/// stream keyed by `(seed, t)`, so the result does not depend on scheduling.
pub fn run_mc(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let sampler = CrowdSampler::new(config.crowd)?;
    let group_map = if config.majority {
        Some(config.placement.group_map(config.m, config.n)?)
    } else {
        None
    };
    let fixed = match config.resample {
        ResamplePolicy::FixedCrowd => {
            Some(sampler.sample(config.n, &mut stream_rng(derive_seed(config.seed, u64::MAX), 0))?)
        }
        ResamplePolicy::ReliabilitiesPerTrial => None,
    };

    let trial = |t: u64| -> Result<TrialOutcome> {
        let mut rng = stream_rng(config.seed, t);
        let (m, n) = (config.m, config.n);
        let truth = rng.random_range(0..m);
        let fresh;
        let p = match &fixed {
            Some(draw) => &draw.reliabilities,
            None => {
                fresh = sampler.sample_unchecked(n, &mut rng);
                &fresh.reliabilities
            }
        };
        let y: Vec<usize> = p.iter().map(|&pj| local_decision(truth, pj, m, &mut rng)).collect();

        let mut outcome = TrialOutcome {
            coding_error: false,
            majority_error: false,
            trace: None,
        };
        let mut shown: Option<(String, usize)> = None;
        if let Some(a) = &config.code {
            let bits: Vec<u8> = y.iter().zip(a.columns()).map(|(&yj, &c)| binary_answer(yj, c)).collect();
            let u = AnswerVector::from_bits(&bits);
            let d = decode_hamming(a, &u, &mut rng)?;
            outcome.coding_error = d.class != truth;
            if config.record_trace {
                shown = Some((u.to_string(), d.class));
            }
        }
        if let Some(g) = &group_map {
            let bits: Vec<u8> = y.iter().enumerate().map(|(j, &yj)| g.answer_bit(j, yj)).collect();
            let u = AnswerVector::from_bits(&bits);
            let d = decode_majority(m, g, &u, &mut rng)?;
            outcome.majority_error = d.class != truth;
            if config.record_trace && shown.is_none() {
                shown = Some((u.to_string(), d.class));
            }
        }
        outcome.trace = shown.map(|(answers, decoded)| TraceRow {
            trial: t,
            true_class: truth,
            answers,
            decoded,
        });
        Ok(outcome)
    };

    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(trial)
        .collect::<Result<_>>()?;
    let coding_errors = outcomes.iter().filter(|o| o.coding_error).count() as u64;
    let majority_errors = outcomes.iter().filter(|o| o.majority_error).count() as u64;
    let trace = config
        .record_trace
        .then(|| outcomes.into_iter().filter_map(|o| o.trace).collect());
    Ok(SimResult {
        coding: config.code.as_ref().map(|_| Estimate::from_counts(coding_errors, config.trials)),
        majority: group_map.map(|_| Estimate::from_counts(majority_errors, config.trials)),
        trace,
    })
}

/// Writes trace rows as CSV with columns `trial,true_class,answers,decoded`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::param(format!("CSV output failed: {other:?}")),
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Every worker has the same reliability `p`.
    Reliability,
    /// Spammer-hammer quality `Q`.
    Quality,
    /// Second shape parameter of a beta crowd.
    Beta,
    /// Partner correlation coefficient.
    RhoCorr,
    /// Stick-breaking concentration.
    Kappa,
}

impl SweepAxis {
    /// The crowd at grid value `v`, starting from `base`.
    pub fn apply(self, base: &CrowdSpec, m: usize, v: f64) -> Result<CrowdSpec> {
        let mut spec = *base;
        match self {
            SweepAxis::Reliability => spec.dist = ReliabilityDist::constant(v),
            SweepAxis::Quality => spec.dist = ReliabilityDist::spammer_hammer(v, m),
            SweepAxis::Beta => match spec.dist {
                ReliabilityDist::Beta { alpha, .. } => spec.dist = ReliabilityDist::Beta { alpha, beta: v },
                _ => return Err(Error::param("a beta sweep needs a beta crowd")),
            },
            SweepAxis::RhoCorr => {
                let rho = covariance_from_correlation(&spec.dist, v)?;
                spec.model = match spec.model {
                    CrowdModel::LatentGroups { kappa, truncation }
                    | CrowdModel::LatentGroupsPaired { kappa, truncation, .. } => {
                        CrowdModel::LatentGroupsPaired { rho, kappa, truncation }
                    }
                    _ => CrowdModel::Paired { rho },
                }
            }
            SweepAxis::Kappa => {
                spec.model = match spec.model {
                    CrowdModel::LatentGroups { truncation, .. } => CrowdModel::LatentGroups { kappa: v, truncation },
                    CrowdModel::LatentGroupsPaired { rho, truncation, .. } => {
                        CrowdModel::LatentGroupsPaired { rho, kappa: v, truncation }
                    }
                    _ => return Err(Error::param("a kappa sweep needs a latent-group crowd")),
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// One grid point of a sweep. Empty fields were not computed or have no
/// evaluator at this size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub pe_code_mc: Option<f64>,
    pub se_code: Option<f64>,
    pub pe_maj_mc: Option<f64>,
    pub se_maj: Option<f64>,
    pub pe_code_exact: Option<f64>,
    pub pe_maj_exact: Option<f64>,
    pub bound: Option<f64>,
}

/// Exact values available for a configuration: `(coding, majority, bound)`.
pub fn exact_values(config: &SimConfig) -> Result<(Option<f64>, Option<f64>, Option<f64>)> {
    let (m, n) = (config.m, config.n);
    let mu = config.crowd.mean_reliability();
    let per_trial = config.resample == ResamplePolicy::ReliabilitiesPerTrial;
    let code = config.code.as_ref().filter(|_| n <= MAX_EXACT_WORKERS && per_trial);
    let bits = log2_exact(m);
    let mut out = (None, None, None);
    match config.crowd.model {
        CrowdModel::Iid => {
            if let Some(a) = code {
                out.0 = Some(pe_iid_coding(a, mu)?.value);
                out.2 = chernoff_bound(a, &vec![mu; n])?.value;
            }
            if config.majority && per_trial && bits.is_some_and(|k| n % k == 0) {
                out.1 = Some(pe_iid_majority(m, n, mu)?.value);
            }
        }
        CrowdModel::Paired { rho } => {
            if let Some(a) = code {
                out.0 = Some(pe_paired_coding(a, mu, rho, &Pairing::adjacent(n)?)?.value);
            }
            if config.majority
                && per_trial
                && config.placement == PartnerPlacement::SameBitGroup
                && bits.is_some_and(|k| n % (2 * k) == 0)
            {
                out.1 = Some(pe_paired_majority(m, n, mu, rho)?.value);
            }
        }
        CrowdModel::LatentGroups { .. } | CrowdModel::LatentGroupsPaired { .. } => {}
    }
    Ok(out)
}

/// Runs `base` at every grid value of `axis`. Point `k` uses the seed
/// `derive_seed(base.seed, k)`.
pub fn sweep(base: &SimConfig, axis: SweepAxis, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::param("sweep grid is empty"));
    }
    grid.iter()
        .enumerate()
        .map(|(k, &v)| {
            let config = SimConfig {
                crowd: axis.apply(&base.crowd, base.m, v)?,
                seed: derive_seed(base.seed, k as u64),
                record_trace: false,
                ..base.clone()
            };
            let mc = run_mc(&config)?;
            let (code_exact, maj_exact, bound) = exact_values(&config)?;
            Ok(SweepRow {
                param: v,
                pe_code_mc: mc.coding.map(|e| e.pe),
                se_code: mc.coding.map(|e| e.stderr),
                pe_maj_mc: mc.majority.map(|e| e.pe),
                se_maj: mc.majority.map(|e| e.stderr),
                pe_code_exact: code_exact,
                pe_maj_exact: maj_exact,
                bound,
            })
        })
        .collect()
}

/// Writes sweep rows as CSV. With `series`, a leading `series` column
/// carrying that label is added.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], series: Option<&str>, out: W) -> Result<()> {
    match series {
        Some(label) => write_series_csv(&[(label.to_string(), rows.to_vec())], out),
        None => write_rows(rows.iter().map(|r| (None, r)), false, out),
    }
}

/// Several labelled sweeps in one CSV with a leading `series` column.
pub fn write_series_csv<W: Write>(series: &[(String, Vec<SweepRow>)], out: W) -> Result<()> {
    let rows = series
        .iter()
        .flat_map(|(label, rows)| rows.iter().map(move |r| (Some(label.as_str()), r)));
    write_rows(rows, true, out)
}

fn write_rows<'a, W: Write>(
    rows: impl Iterator<Item = (Option<&'a str>, &'a SweepRow)>,
    labelled: bool,
    out: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut header = vec![
        "param", "pe_code_mc", "se_code", "pe_maj_mc", "se_maj", "pe_code_exact", "pe_maj_exact", "bound",
    ];
    if labelled {
        header.insert(0, "series");
    }
    w.write_record(&header).map_err(csv_error)?;
    for (label, row) in rows {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut record = vec![
            row.param.to_string(),
            cell(row.pe_code_mc),
            cell(row.se_code),
            cell(row.pe_maj_mc),
            cell(row.se_maj),
            cell(row.pe_code_exact),
            cell(row.pe_maj_exact),
            cell(row.bound),
        ];
        if labelled {
            record.insert(0, label.unwrap_or_default().to_string());
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::known;

    fn fig3() -> CodeMatrix {
        CodeMatrix::from_column_ints(&known::M4_N10, 4).unwrap()
    }

    #[test]
    fn perfect_crowd_never_errs() {
        let cfg = SimConfig::new(fig3(), CrowdSpec::iid(ReliabilityDist::spammer_hammer(1.0, 4)), 2000, 4);
        let r = run_mc(&cfg).unwrap();
        assert_eq!(r.coding.unwrap().errors, 0);
        assert_eq!(r.majority.unwrap().errors, 0);
    }

    #[test]
    fn deterministic() {
        let cfg = SimConfig::new(fig3(), CrowdSpec::iid(ReliabilityDist::Beta { alpha: 2.0, beta: 1.0 }), 3000, 9);
        assert_eq!(run_mc(&cfg).unwrap(), run_mc(&cfg).unwrap());
    }

    #[test]
    fn matches_exact_iid() {
        let cfg = SimConfig::new(fig3(), CrowdSpec::iid(ReliabilityDist::constant(0.7)), 40_000, 1);
        let r = run_mc(&cfg).unwrap();
        let (code, maj, bound) = exact_values(&cfg).unwrap();
        assert!(r.coding.unwrap().agrees_with(code.unwrap(), 3.0));
        assert!(r.majority.unwrap().agrees_with(maj.unwrap(), 3.0));
        assert!(bound.is_none() || bound.unwrap() >= code.unwrap());
    }

    #[test]
    fn trace_rows() {
        let mut cfg = SimConfig::new(fig3(), CrowdSpec::iid(ReliabilityDist::constant(0.8)), 50, 2);
        cfg.record_trace = true;
        let r = run_mc(&cfg).unwrap();
        let rows = r.trace.unwrap();
        assert_eq!(rows.len(), 50);
        assert!(rows.iter().enumerate().all(|(t, row)| row.trial == t as u64 && row.answers.len() == 10));
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial,true_class,answers,decoded\n"));
    }

    #[test]
    fn fixed_crowd_reuses_reliabilities() {
        let mut cfg = SimConfig::new(fig3(), CrowdSpec::iid(ReliabilityDist::spammer_hammer(0.5, 4)), 500, 3);
        cfg.resample = ResamplePolicy::FixedCrowd;
        let (code, _, _) = exact_values(&cfg).unwrap();
        assert!(code.is_none());
        assert!(run_mc(&cfg).unwrap().coding.is_some());
    }

    #[test]
    fn sweep_rows_and_csv() {
        let base = SimConfig::new(fig3(), CrowdSpec::iid(ReliabilityDist::spammer_hammer(0.5, 4)), 500, 5);
        let rows = sweep(&base, SweepAxis::Quality, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].pe_code_mc, Some(0.0));
        assert!(rows.iter().all(|r| r.pe_code_exact.is_some() && r.pe_maj_exact.is_some()));
        let mut buf = Vec::new();
        write_sweep_csv(&rows, Some("demo"), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "series,param,pe_code_mc,se_code,pe_maj_mc,se_maj,pe_code_exact,pe_maj_exact,bound"
        );
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn axis_requirements() {
        let sh = CrowdSpec::iid(ReliabilityDist::spammer_hammer(0.5, 4));
        assert!(SweepAxis::Beta.apply(&sh, 4, 2.0).is_err());
        assert!(SweepAxis::Kappa.apply(&sh, 4, 2.0).is_err());
        let paired = SweepAxis::RhoCorr.apply(&CrowdSpec::iid(ReliabilityDist::Beta { alpha: 0.5, beta: 0.5 }), 8, -0.5).unwrap();
        assert!(matches!(paired.model, CrowdModel::Paired { rho } if (rho + 0.0625).abs() < 1e-15));
    }

    #[test]
    fn validation() {
        let mut cfg = SimConfig::new(fig3(), CrowdSpec::iid(ReliabilityDist::constant(0.8)), 0, 2);
        assert!(run_mc(&cfg).is_err());
        cfg.trials = 10;
        cfg.crowd.model = CrowdModel::Paired { rho: 0.0 };
        cfg.code = Some(CodeMatrix::from_column_ints(&known::M4_N10[..9], 4).unwrap());
        cfg.n = 9;
        assert!(run_mc(&cfg).is_err());
    }

    #[test]
    fn stderr_formula() {
        let e = Estimate::from_counts(25, 100);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }
}
