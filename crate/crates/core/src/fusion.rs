//! Worker observation model and the two fusion rules.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use crate::codebook::{Answer, AnswerVector};
use crate::codebook::{decision_profile, log2_exact, CodeMatrix};
use crate::error::{Error, Result};

/// Local M-ary decision of a worker with reliability `p`: the true class with
/// probability `p`, otherwise one of the other `M - 1` classes uniformly.
pub fn local_decision<R: Rng + ?Sized>(true_class: usize, p: f64, m: usize, rng: &mut R) -> usize {
    if rng.random::<f64>() < p {
        return true_class;
    }
    let k = rng.random_range(0..m - 1);
    if k >= true_class {
        k + 1
    } else {
        k
    }
}

/// Answer of a worker who decided class `y` to the question encoded by
/// `column` (bit `l` of `column` is the entry for class `l`).
#[inline]
pub fn binary_answer(y: usize, column: u64) -> u8 {
    ((column >> y) & 1) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionDecision {
    pub class: usize,
    /// Number of classes the decision was drawn from.
    pub tie_count: usize,
}

impl FusionDecision {
    pub fn was_tie(&self) -> bool {
        self.tie_count > 1
    }
}

/// Minimum Hamming distance decoding with uniform random tie-breaking.
pub fn decode_hamming<R: Rng + ?Sized>(
    a: &CodeMatrix,
    u: &AnswerVector,
    rng: &mut R,
) -> Result<FusionDecision> {
    let profile = decision_profile(a, u)?;
    let tie_count = profile.tie_count();
    let class = if tie_count == 1 {
        profile.argmin_rows[0]
    } else {
        profile.argmin_rows[rng.random_range(0..tie_count)]
    };
    Ok(FusionDecision { class, tie_count })
}

/// Assignment of workers to the `log2 M` bit groups of majority voting.
/// Group 0 carries the most significant bit of the class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMap {
    groups: Vec<usize>,
    num_groups: usize,
}

impl GroupMap {
    pub fn new(groups: Vec<usize>, m: usize) -> Result<Self> {
        let num_groups = log2_exact(m).ok_or(Error::NotPowerOfTwo {
            what: "majority voting",
            m,
        })?;
        if let Some(&g) = groups.iter().find(|&&g| g >= num_groups) {
            return Err(Error::param(format!("bit group {g} outside 0..{num_groups}")));
        }
        if let Some(group) = (0..num_groups).find(|g| !groups.contains(g)) {
            return Err(Error::EmptyGroup { group });
        }
        Ok(Self { groups, num_groups })
    }

    /// Contiguous blocks whose sizes differ by at most one, larger blocks on
    /// the more significant bits.
    pub fn contiguous(m: usize, n: usize) -> Result<Self> {
        let k = log2_exact(m).ok_or(Error::NotPowerOfTwo {
            what: "majority voting",
            m,
        })?;
        let (base, extra) = (n / k, n % k);
        let groups = (0..k)
            .flat_map(|g| std::iter::repeat_n(g, base + usize::from(g < extra)))
            .collect();
        Self::new(groups, m)
    }

    /// Worker `j` goes to group `j mod log2 M`, so adjacent partners land in
    /// different groups.
    pub fn round_robin(m: usize, n: usize) -> Result<Self> {
        let k = log2_exact(m).ok_or(Error::NotPowerOfTwo {
            what: "majority voting",
            m,
        })?;
        Self::new((0..n).map(|j| j % k).collect(), m)
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn num_workers(&self) -> usize {
        self.groups.len()
    }

    pub fn group_of(&self, worker: usize) -> usize {
        self.groups[worker]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_groups];
        for &g in &self.groups {
            sizes[g] += 1;
        }
        sizes
    }

    /// The bit worker `worker` reports for local decision `y`.
    #[inline]
    pub fn answer_bit(&self, worker: usize, y: usize) -> u8 {
        ((y >> (self.num_groups - 1 - self.groups[worker])) & 1) as u8
    }
}

/// Bitwise majority voting: each bit is decided by the present answers of its
/// group, ties broken uniformly at random, and the bits are concatenated
/// most significant first.
pub fn decode_majority<R: Rng + ?Sized>(
    m: usize,
    group_map: &GroupMap,
    u: &AnswerVector,
    rng: &mut R,
) -> Result<FusionDecision> {
    if log2_exact(m) != Some(group_map.num_groups()) {
        return Err(Error::param(format!(
            "group map has {} bit groups, which does not match M = {m}",
            group_map.num_groups()
        )));
    }
    if u.len() != group_map.num_workers() {
        return Err(Error::LengthMismatch {
            expected: group_map.num_workers(),
            found: u.len(),
        });
    }
    let k = group_map.num_groups();
    let mut ones = vec![0usize; k];
    let mut zeros = vec![0usize; k];
    for (j, a) in u.iter().enumerate() {
        match a {
            Answer::One => ones[group_map.group_of(j)] += 1,
            Answer::Zero => zeros[group_map.group_of(j)] += 1,
            Answer::Missing => {}
        }
    }
    let mut class = 0usize;
    let mut tie_count = 1usize;
    for g in 0..k {
        let bit = match ones[g].cmp(&zeros[g]) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => {
                tie_count *= 2;
                rng.random_range(0..2usize)
            }
        };
        class = (class << 1) | bit;
    }
    Ok(FusionDecision { class, tie_count })
}
