//! Truncated stick-breaking (GEM) group membership.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

/// Labels `s_1..s_N` in `0..L` and the induced group sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl GroupAssignment {
    pub fn new(labels: Vec<usize>, truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::param("truncation L must be positive"));
        }
        let mut sizes = vec![0; truncation];
        for &s in &labels {
            if s >= truncation {
                return Err(Error::param(format!(
                    "group label {s} outside 0..{truncation}"
                )));
            }
            sizes[s] += 1;
        }
        Ok(Self { labels, sizes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_workers(&self) -> usize {
        self.labels.len()
    }

    pub fn truncation(&self) -> usize {
        self.sizes.len()
    }

    /// Size of the largest group divided by the number of workers.
    pub fn largest_fraction(&self) -> f64 {
        let max = self.sizes.iter().copied().max().unwrap_or(0);
        max as f64 / self.labels.len().max(1) as f64
    }
}

/// Probability of a labelling under GEM(kappa) with `L` explicit sticks:
///
/// `prod_l B(n_l + 1, N + kappa - sum_{g<=l} n_g) / B(1, kappa)`.
///
/// The residual stick is not folded into the last label, so the values sum
/// to slightly less than one over all `L^N` labellings.
pub fn group_assignment_prob(s: &GroupAssignment, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::param(format!("concentration must be positive, got {kappa}")));
    }
    let n = s.num_workers() as f64;
    let ln_norm = ln_beta(1.0, kappa);
    let mut cumulative = 0usize;
    let mut log_p = 0.0;
    for &size in s.sizes() {
        cumulative += size;
        log_p += ln_beta(size as f64 + 1.0, n + kappa - cumulative as f64) - ln_norm;
    }
    Ok(log_p.exp())
}

/// Lazily broken sticks. Weights are only generated when a draw reaches them;
/// the `L`-th label absorbs whatever stick is left.
#[derive(Debug, Clone)]
pub struct LazySticks {
    breaker: Beta<f64>,
    truncation: usize,
    cumulative: Vec<f64>,
}

impl LazySticks {
    pub fn new(kappa: f64, truncation: usize) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::param(format!("concentration must be positive, got {kappa}")));
        }
        if truncation == 0 {
            return Err(Error::param("truncation L must be positive"));
        }
        let breaker = Beta::new(1.0, kappa).map_err(|e| Error::param(e.to_string()))?;
        Ok(Self {
            breaker,
            truncation,
            cumulative: Vec::new(),
        })
    }

    /// Mixing weights generated so far (the last explicit label's weight
    /// includes the residual only once it has been reached).
    pub fn weights(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let w = c - prev;
                prev = c;
                w
            })
            .collect()
    }

    pub fn draw_label<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        if let Some(l) = self.cumulative.iter().position(|&c| u < c) {
            return l;
        }
        loop {
            let broken = self.cumulative.len();
            let covered = self.cumulative.last().copied().unwrap_or(0.0);
            if broken + 1 == self.truncation {
                self.cumulative.push(1.0);
                return broken;
            }
            let gamma = self.breaker.sample(rng);
            let next = covered + gamma * (1.0 - covered);
            self.cumulative.push(next);
            if u < next {
                return broken;
            }
        }
    }
}

/// Draws a group assignment for `n` workers.
pub fn sample_group_assignment<R: Rng + ?Sized>(
    kappa: f64,
    truncation: usize,
    n: usize,
    rng: &mut R,
) -> Result<GroupAssignment> {
    let mut sticks = LazySticks::new(kappa, truncation)?;
    let labels = (0..n).map(|_| sticks.draw_label(rng)).collect();
    GroupAssignment::new(labels, truncation)
}
