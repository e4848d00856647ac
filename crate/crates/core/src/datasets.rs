//! Gold-labelled rating data: loading, quantization to classes, and the
//! coding-versus-majority comparison on real or planted tasks.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{AnswerVector, CodeMatrix};
use crate::design::{anneal, cyclic_column_replacement, AnnealMove, AnnealSchedule, ColumnSpace, DesignObjective};
use crate::error::{Error, Result};
use crate::fusion::{decode_hamming, decode_majority, Answer, GroupMap};
use crate::seed::stream_rng;

/// Upper end of the rating scale.
pub const RATING_MAX: f64 = 100.0;

/// Seed of the annealing run that produces the default dataset matrix.
pub const DATASET_DESIGN_SEED: u64 = 8_10;

/// Mean reliability the default dataset matrix is designed for.
pub const DATASET_DESIGN_MU: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub gold: f64,
    /// `None` marks a worker who did not rate the task.
    pub workers: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub coding_error_fraction: f64,
    pub majority_error_fraction: f64,
    pub tasks: usize,
    pub matrix_fingerprint: String,
}

fn check_rating(v: f64) -> Result<()> {
    if !(0.0..=RATING_MAX).contains(&v) {
        return Err(Error::param(format!("rating {v} outside [0, {RATING_MAX}]")));
    }
    Ok(())
}

/// Class of a rating: `floor(v M / 100)`, with 100 mapped to `M - 1`.
pub fn quantize(value: f64, m: usize) -> Result<usize> {
    check_rating(value)?;
    Ok(((value * m as f64 / RATING_MAX).floor() as usize).min(m - 1))
}

/// Reads records from a CSV file with header `task_id,gold,w1,...,wN`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<TaskRecord>> {
    let path = path.as_ref();
    read_csv(std::fs::File::open(path)?, path)
}

/// Like [`load_csv`], from any reader; `path` only labels error messages.
pub fn read_csv<R: Read>(input: R, path: &Path) -> Result<Vec<TaskRecord>> {
    let fail = |line: u64, msg: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = reader.headers().map_err(|e| fail(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names.len() < 3 || names[0] != "task_id" || names[1] != "gold" {
        return Err(fail(1, "header must be task_id,gold,w1,...,wN".into()));
    }
    for (k, name) in names[2..].iter().enumerate() {
        if *name != format!("w{}", k + 1) {
            return Err(fail(1, format!("expected column w{}, found {name:?}", k + 1)));
        }
    }
    let n = names.len() - 2;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| fail(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != n + 2 {
            return Err(fail(line, format!("expected {} fields, found {}", n + 2, row.len())));
        }
        let parse = |cell: &str, what: &str| -> Result<f64> {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| fail(line, format!("{what}: {cell:?} is not a number")))?;
            check_rating(v).map_err(|e| fail(line, format!("{what}: {e}")))?;
            Ok(v)
        };
        let gold = parse(&row[1], "gold")?;
        let workers = (0..n)
            .map(|k| {
                let cell = &row[k + 2];
                if cell.trim().is_empty() {
                    Ok(None)
                } else {
                    parse(cell, &format!("w{}", k + 1)).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if workers.iter().all(Option::is_none) {
            return Err(fail(line, "task has no worker ratings".into()));
        }
        records.push(TaskRecord {
            task_id: row[0].trim().to_string(),
            gold,
            workers,
        });
    }
    Ok(records)
}

/// Decodes every task with both fusion rules and compares the decisions
/// with the quantized gold value. Tie-breaks for task `t` draw from the
/// stream `(seed, t)`.
pub fn evaluate_dataset(
    dataset: &str,
    records: &[TaskRecord],
    a: &CodeMatrix,
    group_map: &GroupMap,
    seed: u64,
) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (m, n) = (a.num_classes(), a.num_workers());
    if group_map.num_workers() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: group_map.num_workers(),
        });
    }
    let errors: Vec<(bool, bool)> = records
        .par_iter()
        .enumerate()
        .map(|(t, rec)| {
            if rec.workers.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: rec.workers.len(),
                });
            }
            let mut rng = stream_rng(seed, t as u64);
            let gold = quantize(rec.gold, m)?;
            let mut coded = AnswerVector::missing(n);
            let mut bits = AnswerVector::missing(n);
            for (j, v) in rec.workers.iter().enumerate() {
                if let Some(v) = *v {
                    let y = quantize(v, m)?;
                    coded.set(j, Answer::from_bit(a.bit(y, j)));
                    bits.set(j, Answer::from_bit(group_map.answer_bit(j, y)));
                }
            }
            let coding = decode_hamming(a, &coded, &mut rng)?;
            let majority = decode_majority(m, group_map, &bits, &mut rng)?;
            Ok((coding.class != gold, majority.class != gold))
        })
        .collect::<Result<_>>()?;
    let total = records.len() as f64;
    Ok(EvalReport {
        dataset: dataset.to_string(),
        coding_error_fraction: errors.iter().filter(|e| e.0).count() as f64 / total,
        majority_error_fraction: errors.iter().filter(|e| e.1).count() as f64 / total,
        tasks: records.len(),
        matrix_fingerprint: a.fingerprint(),
    })
}

/// Synthetic tasks: gold uniform on `[0, 100]`; each worker rates inside the
/// gold interval with probability `p_correct`, otherwise uniformly on the
/// whole scale.
pub fn planted_dataset(tasks: usize, m: usize, n: usize, p_correct: f64, seed: u64) -> Result<Vec<TaskRecord>> {
    if !(0.0..=1.0).contains(&p_correct) {
        return Err(Error::param(format!("p_correct must lie in [0, 1], got {p_correct}")));
    }
    if m < 2 {
        return Err(Error::param("at least two classes are required"));
    }
    let width = RATING_MAX / m as f64;
    Ok((0..tasks)
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let gold = rng.random_range(0.0..RATING_MAX);
            let class = quantize(gold, m).expect("in range");
            let workers = (0..n)
                .map(|_| {
                    Some(if rng.random::<f64>() < p_correct {
                        width * (class as f64 + rng.random::<f64>())
                    } else {
                        rng.random_range(0.0..RATING_MAX)
                    })
                    .map(|v: f64| v.min(RATING_MAX))
                })
                .collect();
            TaskRecord {
                task_id: format!("t{t}"),
                gold,
                workers,
            }
        })
        .collect())
}

/// Matrix used when no matrix file is given: a short annealing run for
/// i.i.d. workers of mean reliability [`DATASET_DESIGN_MU`], polished by
/// column replacement.
pub fn dataset_matrix(m: usize, n: usize, seed: u64) -> Result<CodeMatrix> {
    let objective = DesignObjective::IidCoding { mu: DATASET_DESIGN_MU };
    let schedule = AnnealSchedule {
        initial_temperature: 0.05,
        cooling: 0.9,
        moves_per_temperature: 20 * n,
        min_temperature: 1e-3,
        seed,
        moves: AnnealMove::FlipBit,
    };
    let annealed = anneal(m, n, &objective, &schedule)?;
    Ok(cyclic_column_replacement(annealed.matrix, &objective, ColumnSpace::Balanced)?.matrix)
}
