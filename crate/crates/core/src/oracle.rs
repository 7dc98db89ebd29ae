//! Ground truth that does not go through the solvers.
//!
//! [`brute_force_bounds`] solves the linear system for every matrix whose
//! rows are extreme points of their credal rows and takes componentwise
//! extremes; linear objectives over polytopes are optimised at vertices, so
//! this enumerates every candidate optimum. [`simulate_hitting`] samples
//! trajectories and averages the accumulated weight.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Model, RowCredalSet};
use crate::precise::{hitting_times_precise, HittingTimeVector, TransitionMatrix};

pub const DEFAULT_EXTREME_CAP: usize = 10_000;
pub const DEFAULT_SELECTION_CAP: u128 = 1_000_000;
pub const DEFAULT_STEP_CAP: usize = 1_000_000;

/// Bound patterns beyond this are refused before enumeration starts.
const PATTERN_CAP: u128 = 1 << 28;
const SNAP_TOL: f64 = 1e-12;

pub fn enumerate_row_extremes(row: &RowCredalSet) -> Result<Vec<Vec<f64>>> {
    enumerate_row_extremes_capped(row, DEFAULT_EXTREME_CAP)
}

/// Extreme points of a row, in a deterministic order.
///
/// For interval rows every extreme point has all coordinates at a bound
/// except at most one, so all such patterns are tried and the feasible ones
/// kept.
pub fn enumerate_row_extremes_capped(row: &RowCredalSet, cap: usize) -> Result<Vec<Vec<f64>>> {
    let blowup = |count: u128| Error::CombinatorialBlowup {
        count,
        cap: cap as u128,
    };
    match row {
        RowCredalSet::Precise { p } => Ok(vec![p.clone()]),
        RowCredalSet::Vertices { vertices } => {
            if vertices.len() > cap {
                return Err(blowup(vertices.len() as u128));
            }
            Ok(vertices.clone())
        }
        RowCredalSet::Interval { lower, upper } => {
            let free: Vec<usize> = (0..lower.len()).filter(|&y| upper[y] > lower[y]).collect();
            if free.is_empty() {
                return Ok(vec![lower.clone()]);
            }
            let m = free.len();
            let patterns = if m >= 100 {
                u128::MAX
            } else {
                (m as u128) << (m - 1)
            };
            if patterns > PATTERN_CAP {
                return Err(blowup(patterns));
            }
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            for (slot_pos, &slot) in free.iter().enumerate() {
                let others: Vec<usize> = free
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != slot_pos)
                    .map(|(_, &y)| y)
                    .collect();
                for mask in 0u64..(1u64 << others.len()) {
                    let mut p = lower.clone();
                    for (bit, &y) in others.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            p[y] = upper[y];
                        }
                    }
                    let rest: f64 = (0..p.len()).filter(|&y| y != slot).map(|y| p[y]).sum();
                    let v = 1.0 - rest;
                    if v < lower[slot] - SNAP_TOL || v > upper[slot] + SNAP_TOL {
                        continue;
                    }
                    p[slot] = if (v - lower[slot]).abs() <= SNAP_TOL {
                        lower[slot]
                    } else if (v - upper[slot]).abs() <= SNAP_TOL {
                        upper[slot]
                    } else {
                        v
                    };
                    let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
                    if seen.insert(key) {
                        out.push(p);
                        if out.len() > cap {
                            return Err(blowup(out.len() as u128));
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// One extreme point index per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSelection(pub Vec<usize>);

impl VertexSelection {
    pub fn matrix(&self, extremes: &[Vec<Vec<f64>>]) -> Result<TransitionMatrix> {
        TransitionMatrix::from_rows(
            self.0
                .iter()
                .zip(extremes)
                .map(|(&i, e)| e[i].clone())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceBounds {
    pub lower: HittingTimeVector,
    pub upper: HittingTimeVector,
    pub argmin: TransitionMatrix,
    pub argmax: TransitionMatrix,
    pub selections: u128,
}

pub fn brute_force_bounds(m: &Model) -> Result<BruteForceBounds> {
    brute_force_bounds_capped(m, DEFAULT_EXTREME_CAP, DEFAULT_SELECTION_CAP)
}

struct Acc {
    lower: Vec<f64>,
    upper: Vec<f64>,
    best_low: (f64, u128),
    best_high: (f64, u128),
    unbounded: Vec<bool>,
}

impl Acc {
    fn empty(n: usize) -> Self {
        Self {
            lower: vec![f64::INFINITY; n],
            upper: vec![f64::NEG_INFINITY; n],
            best_low: (f64::INFINITY, u128::MAX),
            best_high: (f64::NEG_INFINITY, u128::MAX),
            unbounded: vec![false; n],
        }
    }

    fn add(mut self, index: u128, h: &HittingTimeVector) -> Self {
        let total: f64 = h.iter().sum();
        for (x, &v) in h.iter().enumerate() {
            self.lower[x] = self.lower[x].min(v);
            self.upper[x] = self.upper[x].max(v);
            self.unbounded[x] |= v.is_infinite();
        }
        self.best_low = better(self.best_low, (total, index), |a, b| a < b);
        self.best_high = better(self.best_high, (total, index), |a, b| a > b);
        self
    }

    fn merge(mut self, other: Self) -> Self {
        for x in 0..self.lower.len() {
            self.lower[x] = self.lower[x].min(other.lower[x]);
            self.upper[x] = self.upper[x].max(other.upper[x]);
            self.unbounded[x] |= other.unbounded[x];
        }
        self.best_low = better(self.best_low, other.best_low, |a, b| a < b);
        self.best_high = better(self.best_high, other.best_high, |a, b| a > b);
        self
    }
}

/// Picks the better of two `(value, index)` pairs, lower index on ties.
fn better(a: (f64, u128), b: (f64, u128), wins: impl Fn(f64, f64) -> bool) -> (f64, u128) {
    if wins(b.0, a.0) || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn decode(mut index: u128, radix: &[usize]) -> VertexSelection {
    let mut choice = vec![0; radix.len()];
    for (x, &r) in radix.iter().enumerate().rev() {
        choice[x] = (index % r as u128) as usize;
        index /= r as u128;
    }
    VertexSelection(choice)
}

/// Componentwise minimum and maximum of `h^{T,W}` over every vertex selection.
///
/// Target rows are never read, so they contribute a single representative.
/// Fails with `R1Violated` if some selection leaves a state with infinite
/// expected hitting time.
pub fn brute_force_bounds_capped(m: &Model, extreme_cap: usize, selection_cap: u128) -> Result<BruteForceBounds> {
    let n = m.len();
    let extremes = (0..n)
        .map(|x| {
            if m.target().contains(x) {
                Ok(vec![m.row(x).representative()])
            } else {
                enumerate_row_extremes_capped(m.row(x), extreme_cap)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let radix: Vec<usize> = extremes.iter().map(Vec::len).collect();
    let mut count: u128 = 1;
    for &r in &radix {
        count = count.saturating_mul(r as u128);
        if count > selection_cap {
            return Err(Error::CombinatorialBlowup {
                count,
                cap: selection_cap,
            });
        }
    }
    let acc = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let t = decode(i as u128, &radix).matrix(&extremes)?;
            Ok((i as u128, hitting_times_precise(&t, m.target(), m.weights())?))
        })
        .try_fold(|| Acc::empty(n), |acc, r: Result<_>| r.map(|(i, h)| acc.add(i, &h)))
        .try_reduce(|| Acc::empty(n), |a, b| Ok(a.merge(b)))?;
    if acc.unbounded.iter().any(|&b| b) {
        return Err(Error::R1Violated {
            trap: (0..n)
                .filter(|&x| acc.unbounded[x])
                .map(|x| m.space().name(x).to_owned())
                .collect(),
        });
    }
    Ok(BruteForceBounds {
        lower: HittingTimeVector::new(acc.lower),
        upper: HittingTimeVector::new(acc.upper),
        argmin: decode(acc.best_low.1, &radix).matrix(&extremes)?,
        argmax: decode(acc.best_high.1, &radix).matrix(&extremes)?,
        selections: count,
    })
}

/// One sampled trajectory, stopped at the first visit to the target or at the step cap.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub path: Vec<usize>,
    pub accumulated_weight: f64,
    pub hit: bool,
}

/// Cumulative row sums for inverse-CDF sampling.
struct Sampler {
    n: usize,
    cumulative: Vec<f64>,
    last_positive: Vec<usize>,
}

impl Sampler {
    fn new(t: &TransitionMatrix) -> Self {
        let n = t.dim();
        let mut cumulative = Vec::with_capacity(n * n);
        let mut last_positive = Vec::with_capacity(n);
        for x in 0..n {
            let mut acc = 0.0;
            let mut last = 0;
            for (y, &p) in t.row(x).iter().enumerate() {
                acc += p;
                cumulative.push(acc);
                if p > 0.0 {
                    last = y;
                }
            }
            last_positive.push(last);
        }
        Self {
            n,
            cumulative,
            last_positive,
        }
    }

    #[inline]
    fn next(&self, x: usize, u: f64) -> usize {
        let row = &self.cumulative[x * self.n..(x + 1) * self.n];
        let y = row.partition_point(|&c| c <= u);
        y.min(self.last_positive[x])
    }
}

fn walk<R: Rng>(
    m: &Model,
    sampler: &Sampler,
    x0: usize,
    rng: &mut R,
    step_cap: usize,
    mut path: Option<&mut Vec<usize>>,
) -> (f64, bool) {
    let mut x = x0;
    let mut total = 0.0;
    if let Some(p) = path.as_deref_mut() {
        p.push(x);
    }
    for _ in 0..step_cap {
        if m.target().contains(x) {
            return (total, true);
        }
        let y = sampler.next(x, rng.gen::<f64>());
        total += m.weights().get(x, y);
        if let Some(p) = path.as_deref_mut() {
            p.push(y);
        }
        x = y;
    }
    (total, m.target().contains(x))
}

/// Samples a single trajectory from `x0` under `t`, recording the path.
pub fn sample_trajectory<R: Rng>(
    m: &Model,
    t: &TransitionMatrix,
    x0: usize,
    rng: &mut R,
    step_cap: usize,
) -> TrajectorySample {
    let sampler = Sampler::new(t);
    let mut path = Vec::new();
    let (accumulated_weight, hit) = walk(m, &sampler, x0, rng, step_cap, Some(&mut path));
    TrajectorySample {
        path,
        accumulated_weight,
        hit,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub mean: f64,
    pub stderr: f64,
    /// Runs that hit the step cap; they are excluded from the mean.
    pub truncated: usize,
    pub samples: usize,
    pub seed: u64,
}

/// Monte Carlo estimate of `h^{T,W}(x0)`.
///
/// Trajectory `i` draws from the ChaCha stream `i` of `seed`, so the result
/// does not depend on how the work is split across threads.
pub fn simulate_hitting(
    m: &Model,
    t: &TransitionMatrix,
    x0: usize,
    n_samples: usize,
    seed: u64,
    step_cap: usize,
) -> SimulationSummary {
    let sampler = Sampler::new(t);
    let runs: Vec<(f64, bool)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            walk(m, &sampler, x0, &mut rng, step_cap, None)
        })
        .collect();
    let kept: Vec<f64> = runs.iter().filter(|r| r.1).map(|r| r.0).collect();
    let k = kept.len();
    let mean = kept.iter().sum::<f64>() / k as f64;
    let stderr = if k > 1 {
        let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else {
        0.0
    };
    SimulationSummary {
        mean,
        stderr,
        truncated: n_samples - k,
        samples: n_samples,
        seed,
    }
}
