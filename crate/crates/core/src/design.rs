//! Code matrix search: simulated annealing and cyclic column replacement
//! against an exact misclassification objective.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    pe_grouped_coding, pe_grouped_paired_coding, pe_iid_coding, pe_paired_coding, Pairing,
};
use crate::codebook::{balanced_columns, random_balanced_column, random_balanced_matrix, CodeMatrix};
use crate::crowd::{CrowdModel, CrowdSpec};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream_rng};

/// Anything that scores a code matrix; lower is better.
pub trait Objective {
    fn evaluate(&self, a: &CodeMatrix) -> Result<f64>;
}

impl<F: Fn(&CodeMatrix) -> f64> Objective for F {
    fn evaluate(&self, a: &CodeMatrix) -> Result<f64> {
        Ok(self(a))
    }
}

/// Exact expected misclassification probability of Hamming fusion under one
/// of the crowd models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignObjective {
    IidCoding { mu: f64 },
    PairedCoding { mu: f64, rho: f64 },
    GroupedCoding { mu: f64, kappa: f64, truncation: usize },
    GroupedPairedCoding { mu: f64, rho: f64, kappa: f64, truncation: usize },
}

impl DesignObjective {
    pub fn from_crowd(spec: &CrowdSpec) -> Result<Self> {
        spec.validate()?;
        let mu = spec.mean_reliability();
        Ok(match spec.model {
            CrowdModel::Iid => DesignObjective::IidCoding { mu },
            CrowdModel::Paired { rho } => DesignObjective::PairedCoding { mu, rho },
            CrowdModel::LatentGroups { kappa, truncation } => {
                DesignObjective::GroupedCoding { mu, kappa, truncation }
            }
            CrowdModel::LatentGroupsPaired { rho, kappa, truncation } => {
                DesignObjective::GroupedPairedCoding { mu, rho, kappa, truncation }
            }
        })
    }
}

impl Objective for DesignObjective {
    fn evaluate(&self, a: &CodeMatrix) -> Result<f64> {
        let report = match *self {
            DesignObjective::IidCoding { mu } => pe_iid_coding(a, mu)?,
            DesignObjective::PairedCoding { mu, rho } => {
                pe_paired_coding(a, mu, rho, &Pairing::adjacent(a.num_workers())?)?
            }
            DesignObjective::GroupedCoding { mu, kappa, truncation } => {
                pe_grouped_coding(a, mu, kappa, truncation)?
            }
            DesignObjective::GroupedPairedCoding { mu, rho, kappa, truncation } => {
                pe_grouped_paired_coding(a, mu, rho, kappa, truncation, &Pairing::adjacent(a.num_workers())?)?
            }
        };
        Ok(report.value)
    }
}

/// Neighbourhood used by the annealer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnealMove {
    /// Flip one uniformly chosen entry.
    #[default]
    FlipBit,
    /// Replace one uniformly chosen column by a random balanced column.
    ResampleBalancedColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    /// Multiplier applied to the temperature after every epoch.
    pub cooling: f64,
    pub moves_per_temperature: usize,
    pub min_temperature: f64,
    pub seed: u64,
    #[serde(default)]
    pub moves: AnnealMove,
}

impl AnnealSchedule {
    /// `T0 = 0.1`, cooling `0.95`, `50 N` moves per temperature, `Tmin = 1e-4`.
    pub fn standard(n: usize, seed: u64) -> Self {
        Self {
            initial_temperature: 0.1,
            cooling: 0.95,
            moves_per_temperature: 50 * n,
            min_temperature: 1e-4,
            seed,
            moves: AnnealMove::FlipBit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::param(format!("cooling factor must lie in (0, 1), got {}", self.cooling)));
        }
        if !(self.min_temperature > 0.0) || !(self.initial_temperature >= self.min_temperature) {
            return Err(Error::param("temperatures must satisfy 0 < T_min <= T0"));
        }
        if self.moves_per_temperature == 0 {
            return Err(Error::param("at least one move per temperature is required"));
        }
        Ok(())
    }
}

/// Result of a search: the best matrix seen and the best objective after
/// every epoch (annealing) or column step (replacement). The first trace
/// entry is the starting objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub matrix: CodeMatrix,
    pub objective: f64,
    pub trace: Vec<f64>,
}

/// Simulated annealing from a seeded random balanced matrix.
pub fn anneal<O: Objective + ?Sized>(
    m: usize,
    n: usize,
    objective: &O,
    schedule: &AnnealSchedule,
) -> Result<DesignOutcome> {
    schedule.validate()?;
    let start = random_balanced_matrix(m, n, schedule.seed)?;
    anneal_from(start, objective, schedule)
}

/// Simulated annealing from a given matrix.
pub fn anneal_from<O: Objective + ?Sized>(
    start: CodeMatrix,
    objective: &O,
    schedule: &AnnealSchedule,
) -> Result<DesignOutcome> {
    schedule.validate()?;
    let (m, n) = (start.num_classes(), start.num_workers());
    let mut rng = stream_rng(schedule.seed, 1);
    let mut current = start;
    let mut current_value = objective.evaluate(&current)?;
    let mut best = current.clone();
    let mut best_value = current_value;
    let mut trace = vec![best_value];

    let mut t = schedule.initial_temperature;
    while t >= schedule.min_temperature {
        for _ in 0..schedule.moves_per_temperature {
            let j = rng.random_range(0..n);
            let column = match schedule.moves {
                AnnealMove::FlipBit => current.columns()[j] ^ (1u64 << rng.random_range(0..m)),
                AnnealMove::ResampleBalancedColumn => random_balanced_column(m, &mut rng),
            };
            if column == current.columns()[j] {
                continue;
            }
            let candidate = current.with_column(j, column)?;
            let value = objective.evaluate(&candidate)?;
            let delta = value - current_value;
            if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                current = candidate;
                current_value = value;
                if current_value < best_value {
                    best = current.clone();
                    best_value = current_value;
                }
            }
        }
        trace.push(best_value);
        t *= schedule.cooling;
    }
    Ok(DesignOutcome {
        matrix: best,
        objective: best_value,
        trace,
    })
}

/// Independent annealing chains with seeds derived from `schedule.seed`,
/// run concurrently; returns the best (earliest chain on ties).
pub fn anneal_restarts<O: Objective + Sync + ?Sized>(
    m: usize,
    n: usize,
    objective: &O,
    schedule: &AnnealSchedule,
    restarts: usize,
) -> Result<DesignOutcome> {
    if restarts == 0 {
        return Err(Error::param("at least one annealing chain is required"));
    }
    let outcomes: Vec<Result<DesignOutcome>> = (0..restarts as u64)
        .into_par_iter()
        .map(|k| {
            let s = AnnealSchedule {
                seed: derive_seed(schedule.seed, k),
                ..*schedule
            };
            anneal(m, n, objective, &s)
        })
        .collect();
    let mut best: Option<DesignOutcome> = None;
    for outcome in outcomes {
        let outcome = outcome?;
        if best.as_ref().is_none_or(|b| outcome.objective < b.objective) {
            best = Some(outcome);
        }
    }
    Ok(best.expect("restarts > 0"))
}

/// Candidate columns for [`cyclic_column_replacement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnSpace {
    /// Columns with `ceil(M/2)` ones.
    #[default]
    Balanced,
    /// All `2^M` columns.
    All,
}

impl ColumnSpace {
    fn candidates(self, m: usize) -> Result<Vec<u64>> {
        if m > 20 {
            return Err(Error::param(format!("column search over M = {m} classes is impractical")));
        }
        Ok(match self {
            ColumnSpace::Balanced => balanced_columns(m),
            ColumnSpace::All => (0..1u64 << m).collect(),
        })
    }
}

/// Greedy descent: visit the columns cyclically, replace each by the best
/// candidate (keeping the incumbent on ties), and stop after a full sweep
/// without improvement.
pub fn cyclic_column_replacement<O: Objective + ?Sized>(
    start: CodeMatrix,
    objective: &O,
    space: ColumnSpace,
) -> Result<DesignOutcome> {
    let candidates = space.candidates(start.num_classes())?;
    let mut current = start;
    let mut value = objective.evaluate(&current)?;
    let mut trace = vec![value];
    loop {
        let mut improved = false;
        for j in 0..current.num_workers() {
            let incumbent = current.columns()[j];
            let mut best: Option<(u64, f64)> = None;
            for &c in candidates.iter().filter(|&&c| c != incumbent) {
                let v = objective.evaluate(&current.with_column(j, c)?)?;
                if v < best.map_or(value, |b| b.1) {
                    best = Some((c, v));
                }
            }
            if let Some((c, v)) = best {
                current = current.with_column(j, c)?;
                value = v;
                improved = true;
            }
            trace.push(value);
        }
        if !improved {
            break;
        }
    }
    Ok(DesignOutcome {
        matrix: current,
        objective: value,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crowd::ReliabilityDist;

    fn quick(seed: u64) -> AnnealSchedule {
        AnnealSchedule {
            initial_temperature: 0.05,
            cooling: 0.8,
            moves_per_temperature: 20,
            min_temperature: 1e-3,
            seed,
            moves: AnnealMove::FlipBit,
        }
    }

    fn non_increasing(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] <= w[0])
    }

    #[test]
    fn constant_objective() {
        let out = anneal(4, 5, &|_: &CodeMatrix| 0.5, &quick(3)).unwrap();
        assert_eq!((out.matrix.num_classes(), out.matrix.num_workers()), (4, 5));
        assert!(out.trace.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn annealing_is_deterministic_and_monotone() {
        let obj = DesignObjective::IidCoding { mu: 0.7 };
        let a = anneal(4, 6, &obj, &quick(11)).unwrap();
        let b = anneal(4, 6, &obj, &quick(11)).unwrap();
        assert_eq!(a, b);
        assert!(non_increasing(&a.trace));
        assert!(a.objective <= a.trace[0]);
        assert_eq!(a.objective, obj.evaluate(&a.matrix).unwrap());
    }

    #[test]
    fn resample_moves_keep_columns_balanced() {
        let s = AnnealSchedule {
            moves: AnnealMove::ResampleBalancedColumn,
            ..quick(2)
        };
        let out = anneal(4, 6, &DesignObjective::IidCoding { mu: 0.8 }, &s).unwrap();
        assert!((0..6).all(|j| out.matrix.column_weight(j) == 2));
    }

    #[test]
    fn replacement_improves_zero_matrix() {
        let zero = CodeMatrix::from_column_ints(&[0; 6], 4).unwrap();
        let obj = DesignObjective::from_crowd(&CrowdSpec::iid(ReliabilityDist::spammer_hammer(0.8, 4))).unwrap();
        let out = cyclic_column_replacement(zero.clone(), &obj, ColumnSpace::Balanced).unwrap();
        assert!(out.objective < obj.evaluate(&zero).unwrap());
        assert!(non_increasing(&out.trace));
    }

    #[test]
    fn replacement_fixed_point() {
        let obj = DesignObjective::IidCoding { mu: 0.75 };
        let start = CodeMatrix::from_column_ints(&[3, 5, 6, 3, 5, 6], 4).unwrap();
        let first = cyclic_column_replacement(start, &obj, ColumnSpace::All).unwrap();
        let again = cyclic_column_replacement(first.matrix.clone(), &obj, ColumnSpace::All).unwrap();
        assert_eq!(again.matrix, first.matrix);
        assert_eq!(again.trace.len(), 1 + 6);
    }

    #[test]
    fn restarts_pick_best_chain() {
        let obj = DesignObjective::IidCoding { mu: 0.6 };
        let best = anneal_restarts(4, 5, &obj, &quick(5), 3).unwrap();
        for k in 0..3 {
            let single = anneal(4, 5, &obj, &AnnealSchedule { seed: derive_seed(5, k), ..quick(5) }).unwrap();
            assert!(best.objective <= single.objective);
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealSchedule { cooling: 1.0, ..quick(0) }.validate().is_err());
        assert!(AnnealSchedule { moves_per_temperature: 0, ..quick(0) }.validate().is_err());
        assert!(AnnealSchedule::standard(10, 0).validate().is_ok());
    }

    #[test]
    fn objective_from_paired_crowd() {
        let spec = CrowdSpec {
            dist: ReliabilityDist::Beta { alpha: 2.0, beta: 1.0 },
            model: CrowdModel::Paired { rho: 0.01 },
        };
        let obj = DesignObjective::from_crowd(&spec).unwrap();
        assert!(matches!(obj, DesignObjective::PairedCoding { rho, .. } if rho == 0.01));
    }
}
