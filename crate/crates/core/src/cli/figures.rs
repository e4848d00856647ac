//! Data behind the reference figures. Each figure is one or more labelled
//! sweeps; the CSV has the sweep columns preceded by `series`.

use clap::ValueEnum;
use serde::Serialize;

use crate::codebook::{known, random_balanced_matrix, CodeMatrix};
use crate::crowd::{CrowdModel, CrowdSpec, ReliabilityDist, DEFAULT_TRUNCATION};
use crate::error::Result;
use crate::seed::derive_seed;
use crate::simkit::{sweep, write_series_csv, SimConfig, SweepAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Coding error against a common worker reliability (M=4, N=10).
    Fig2,
    /// Spammer-hammer quality sweep (M=4, N=10).
    Fig3,
    /// Spammer-hammer quality sweep (M=8, N=15 and N=90).
    Fig4,
    /// Beta(0.5, beta) sweep (M=4, N=10 and M=8, N=15/90).
    Fig5,
    /// Designed versus random balanced matrix (M=8, N=15).
    Fig6,
    /// Partner correlation sweep, Beta(0.5, 0.5) (M=8, N=30).
    Fig7,
    /// Concentration sweep, latent groups, Beta(0.5, 0.5) (M=8, N=15).
    Fig8,
    /// Concentration sweep, latent groups with pairing at correlation -0.5 (M=8, N=30).
    Fig9,
}

fn steps(from: f64, to: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let v = from + (to - from) * k as f64 / (count - 1) as f64;
            (v * 1e10).round() / 1e10
        })
        .collect()
}

struct Series {
    label: &'static str,
    code: CodeMatrix,
    crowd: CrowdSpec,
    axis: SweepAxis,
    grid: Vec<f64>,
}

fn m4n10() -> CodeMatrix {
    CodeMatrix::from_column_ints(&known::M4_N10, 4).expect("reference matrix")
}

fn m8n15(times: usize) -> CodeMatrix {
    CodeMatrix::from_column_ints(&known::M8_N15, 8)
        .and_then(|a| a.concatenate(times))
        .expect("reference matrix")
}

const HALF_BETA: ReliabilityDist = ReliabilityDist::Beta { alpha: 0.5, beta: 0.5 };

fn series(figure: Figure, seed: u64) -> Result<Vec<Series>> {
    let quality = steps(0.0, 1.0, 11);
    let sh = |m| CrowdSpec::iid(ReliabilityDist::spammer_hammer(0.5, m));
    let betas = vec![0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let kappas = vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0];
    let one = |label, code, crowd, axis, grid| Series { label, code, crowd, axis, grid };
    Ok(match figure {
        Figure::Fig2 => vec![one(
            "m4n10",
            m4n10(),
            CrowdSpec::iid(ReliabilityDist::constant(0.5)),
            SweepAxis::Reliability,
            steps(0.25, 1.0, 16),
        )],
        Figure::Fig3 => vec![one("m4n10", m4n10(), sh(4), SweepAxis::Quality, quality)],
        Figure::Fig4 => vec![
            one("n15", m8n15(1), sh(8), SweepAxis::Quality, quality.clone()),
            one("n90", m8n15(6), sh(8), SweepAxis::Quality, quality),
        ],
        Figure::Fig5 => vec![
            one("m4n10", m4n10(), CrowdSpec::iid(HALF_BETA), SweepAxis::Beta, betas.clone()),
            one("m8n15", m8n15(1), CrowdSpec::iid(HALF_BETA), SweepAxis::Beta, betas.clone()),
            one("m8n90", m8n15(6), CrowdSpec::iid(HALF_BETA), SweepAxis::Beta, betas),
        ],
        Figure::Fig6 => vec![
            one("designed", m8n15(1), sh(8), SweepAxis::Quality, quality.clone()),
            one("random", random_balanced_matrix(8, 15, seed)?, sh(8), SweepAxis::Quality, quality),
        ],
        Figure::Fig7 => vec![one(
            "m8n30",
            m8n15(2),
            CrowdSpec::iid(HALF_BETA),
            SweepAxis::RhoCorr,
            steps(-0.9, 0.9, 7),
        )],
        Figure::Fig8 => vec![one(
            "m8n15",
            m8n15(1),
            CrowdSpec {
                dist: HALF_BETA,
                model: CrowdModel::LatentGroups { kappa: 1.0, truncation: DEFAULT_TRUNCATION },
            },
            SweepAxis::Kappa,
            kappas,
        )],
        Figure::Fig9 => vec![one(
            "m8n30",
            m8n15(2),
            CrowdSpec {
                dist: HALF_BETA,
                model: CrowdModel::LatentGroupsPaired {
                    rho: -0.5 * HALF_BETA.variance(),
                    kappa: 1.0,
                    truncation: DEFAULT_TRUNCATION,
                },
            },
            SweepAxis::Kappa,
            kappas,
        )],
    })
}

/// CSV bytes for `figure`; series `k` runs with seed `derive_seed(seed, k)`.
pub fn reproduce(figure: Figure, trials: u64, seed: u64) -> Result<Vec<u8>> {
    let tables = series(figure, seed)?
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            let base = SimConfig::new(s.code, s.crowd, trials, derive_seed(seed, k as u64));
            Ok((s.label.to_string(), sweep(&base, s.axis, &s.grid)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_series_csv(&tables, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(steps(0.0, 1.0, 11)[3], 0.3);
        assert_eq!(steps(-0.9, 0.9, 7), vec![-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9]);
    }

    #[test]
    fn every_figure_is_well_formed() {
        for fig in Figure::value_variants() {
            for s in series(*fig, 1).unwrap() {
                assert!(!s.grid.is_empty());
                for &v in &s.grid {
                    s.axis.apply(&s.crowd, s.code.num_classes(), v).unwrap();
                }
            }
        }
    }

    #[test]
    fn small_figure_csv() {
        let text = String::from_utf8(reproduce(Figure::Fig3, 200, 4).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines[0].starts_with("series,param,"));
        assert!(lines[1].starts_with("m4n10,0,"));
    }
}
