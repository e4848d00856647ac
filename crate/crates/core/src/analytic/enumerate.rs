//! Enumeration of all received vectors for a code matrix.
//!
//! Workers are grouped into independent blocks (single workers, or partner
//! pairs). Each block has a table of outcome probabilities per class, and the
//! walk multiplies them along a depth-first traversal while accumulating the
//! Hamming distance to every row. At each leaf the cost-weighted probability
//! mass is added with compensated summation.

use rayon::prelude::*;

use crate::codebook::CodeMatrix;
use crate::numeric::CompensatedSum;

/// Workers whose answers are jointly distributed, independent of all other
/// blocks given the class.
pub(crate) struct Block {
    workers: Vec<usize>,
    /// `probs[o * m + l]`: probability of outcome `o` (bit `k` of `o` is the
    /// answer of `workers[k]`) given class `l`.
    probs: Vec<f64>,
}

impl Block {
    /// `prob(l, outcome)` for `outcome` in `0..2^workers.len()`.
    pub(crate) fn new(workers: Vec<usize>, m: usize, prob: impl Fn(usize, usize) -> f64) -> Self {
        let outcomes = 1usize << workers.len();
        let mut probs = vec![0.0; outcomes * m];
        for o in 0..outcomes {
            for l in 0..m {
                probs[o * m + l] = prob(l, o);
            }
        }
        Self { workers, probs }
    }

    fn outcomes(&self) -> usize {
        1 << self.workers.len()
    }
}

struct Prepared<'a> {
    m: usize,
    blocks: &'a [Block],
    /// `deltas[b][o * m + l]`: distance contributed by outcome `o` of block
    /// `b` to row `l`.
    deltas: Vec<Vec<u32>>,
}

impl<'a> Prepared<'a> {
    fn new(a: &CodeMatrix, blocks: &'a [Block]) -> Self {
        let m = a.num_classes();
        let deltas = blocks
            .iter()
            .map(|b| {
                let mut d = vec![0u32; b.outcomes() * m];
                for o in 0..b.outcomes() {
                    for l in 0..m {
                        d[o * m + l] = b
                            .workers
                            .iter()
                            .enumerate()
                            .filter(|&(k, &w)| ((o >> k) & 1) as u8 != a.bit(l, w))
                            .count() as u32;
                    }
                }
                d
            })
            .collect();
        Self { m, blocks, deltas }
    }

    /// Applies outcome `o` of block `b` to the state in `src`, writing `dst`.
    #[inline]
    fn step(&self, b: usize, o: usize, src: (&[f64], &[u32]), dst: (&mut [f64], &mut [u32])) -> bool {
        let m = self.m;
        let probs = &self.blocks[b].probs[o * m..(o + 1) * m];
        let delta = &self.deltas[b][o * m..(o + 1) * m];
        let mut any = false;
        for l in 0..m {
            let p = src.0[l] * probs[l];
            dst.0[l] = p;
            dst.1[l] = src.1[l] + delta[l];
            any |= p != 0.0;
        }
        any
    }

    fn leaf(&self, probs: &[f64], dists: &[u32], acc: &mut CompensatedSum) {
        let min = *dists.iter().min().expect("at least two classes");
        let ties = dists.iter().filter(|&&d| d == min).count();
        let in_region = 1.0 - 1.0 / ties as f64;
        for (p, d) in probs.iter().zip(dists) {
            if *p != 0.0 {
                acc.add(p * if *d == min { in_region } else { 1.0 });
            }
        }
    }

    fn walk(&self, depth: usize, probs: &mut [f64], dists: &mut [u32], acc: &mut CompensatedSum) {
        let m = self.m;
        if depth == self.blocks.len() {
            self.leaf(&probs[depth * m..], &dists[depth * m..], acc);
            return;
        }
        for o in 0..self.blocks[depth].outcomes() {
            let (ps, pd) = probs.split_at_mut((depth + 1) * m);
            let (ds, dd) = dists.split_at_mut((depth + 1) * m);
            let live = self.step(
                depth,
                o,
                (&ps[depth * m..], &ds[depth * m..]),
                (&mut pd[..m], &mut dd[..m]),
            );
            if live {
                self.walk(depth + 1, probs, dists, acc);
            }
        }
    }
}

/// `sum_{i, l} P(u = i | H_l) C_i^l`, i.e. `M` times the expected error.
pub(crate) fn total_cost(a: &CodeMatrix, blocks: &[Block]) -> f64 {
    let prep = Prepared::new(a, blocks);
    let m = prep.m;
    let depth_count = blocks.len();

    // Split the first few blocks into independent prefixes for the thread
    // pool; partial sums are merged in prefix order so the result does not
    // depend on scheduling.
    let mut split = 0;
    let mut prefixes = 1usize;
    while split < depth_count && prefixes < 256 {
        prefixes *= blocks[split].outcomes();
        split += 1;
    }

    let partials: Vec<CompensatedSum> = (0..prefixes)
        .into_par_iter()
        .map(|mut code| {
            let mut probs = vec![0.0; (depth_count + 1) * m];
            let mut dists = vec![0u32; (depth_count + 1) * m];
            probs[..m].fill(1.0);
            let mut acc = CompensatedSum::new();
            for b in 0..split {
                let outcomes = blocks[b].outcomes();
                let o = code % outcomes;
                code /= outcomes;
                let (ps, pd) = probs.split_at_mut((b + 1) * m);
                let (ds, dd) = dists.split_at_mut((b + 1) * m);
                if !prep.step(b, o, (&ps[b * m..], &ds[b * m..]), (&mut pd[..m], &mut dd[..m])) {
                    return acc;
                }
            }
            prep.walk(split, &mut probs, &mut dists, &mut acc);
            acc
        })
        .collect();

    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}
