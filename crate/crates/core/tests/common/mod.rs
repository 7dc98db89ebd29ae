#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wimc::model::{Model, RowCredalSet, WeightMatrix};
use wimc::oracle::enumerate_row_extremes;
use wimc::precise::TransitionMatrix;

/// Knobs for the random model generator.
#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub min_states: usize,
    pub max_states: usize,
    /// Every admissible row keeps at least this much mass on a designated
    /// successor one step closer to the target, so R1 always holds.
    pub route_mass: f64,
    /// Upper bound on the number of vertex selections the oracle walks through.
    pub max_selections: u128,
    pub precise_only: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            min_states: 2,
            max_states: 5,
            route_mass: 0.1,
            max_selections: 20_000,
            precise_only: false,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_distribution<R: Rng>(rng: &mut R, n: usize, sparsity: f64) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(sparsity) { 0.0 } else { -rng.gen::<f64>().max(1e-12).ln() })
        .collect();
    let s: f64 = p.iter().sum();
    if s <= 0.0 {
        p[rng.gen_range(0..n)] = 1.0;
        return p;
    }
    p.iter_mut().for_each(|v| *v /= s);
    p
}

/// A distribution with at least `floor` on `d`.
fn routed<R: Rng>(rng: &mut R, n: usize, d: usize, floor: f64) -> Vec<f64> {
    let lead = floor + (1.0 - floor) * rng.gen::<f64>() * 0.5;
    let mut p: Vec<f64> = random_distribution(rng, n, 0.3)
        .into_iter()
        .map(|v| v * (1.0 - lead))
        .collect();
    p[d] += lead;
    p
}

fn interval_row<R: Rng>(rng: &mut R, n: usize, d: usize, floor: f64) -> RowCredalSet {
    let centre = routed(rng, n, d, floor);
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for y in 0..n {
        match rng.gen_range(0..6) {
            // pinned coordinate
            0 => {
                lower[y] = centre[y];
                upper[y] = centre[y];
            }
            _ => {
                lower[y] = (centre[y] - rng.gen::<f64>() * 0.5).max(0.0);
                upper[y] = (centre[y] + rng.gen::<f64>() * 0.5).min(1.0);
            }
        }
    }
    lower[d] = lower[d].max(floor);
    RowCredalSet::interval(lower, upper)
}

fn vertices_row<R: Rng>(rng: &mut R, n: usize, d: usize, floor: f64) -> RowCredalSet {
    let k = rng.gen_range(2..=3);
    RowCredalSet::vertices((0..k).map(|_| routed(rng, n, d, floor)).collect())
}

fn selection_count(rows: &[RowCredalSet], target: &[usize]) -> u128 {
    rows.iter()
        .enumerate()
        .filter(|(x, _)| !target.contains(x))
        .map(|(_, r)| enumerate_row_extremes(r).map_or(u128::MAX, |e| e.len() as u128))
        .fold(1u128, |a, b| a.saturating_mul(b))
}

/// A random model satisfying R1, with mixed row types and weights in [0.1, 10].
pub fn random_model<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Model {
    loop {
        // bias towards the larger sizes, where the row problems are less trivial
        let n = rng.gen_range(cfg.min_states..=cfg.max_states + 1).min(cfg.max_states);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let n_target = if n > 2 && rng.gen_bool(0.3) { 2 } else { 1 };
        let target: Vec<usize> = order[..n_target].to_vec();
        let rows: Vec<RowCredalSet> = (0..n)
            .map(|x| {
                let pos = order.iter().position(|&s| s == x).unwrap();
                if pos < n_target {
                    return RowCredalSet::precise(random_distribution(rng, n, 0.3));
                }
                let d = order[rng.gen_range(0..pos)];
                let kind = if cfg.precise_only { 0 } else { rng.gen_range(0..3) };
                match kind {
                    0 => RowCredalSet::precise(routed(rng, n, d, cfg.route_mass)),
                    1 => interval_row(rng, n, d, cfg.route_mass),
                    _ => vertices_row(rng, n, d, cfg.route_mass),
                }
            })
            .collect();
        if selection_count(&rows, &target) > cfg.max_selections {
            continue;
        }
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0.1..=10.0)).collect())
            .collect();
        let weights = WeightMatrix::from_rows(weights).unwrap();
        return Model::numbered(&target, Some(weights), rows).expect("generated model is valid");
    }
}

pub fn random_models(seed: u64, count: usize, cfg: &GenConfig) -> Vec<Model> {
    let mut rng = rng(seed);
    (0..count).map(|_| random_model(&mut rng, cfg)).collect()
}

/// A random member of the credal set: a random mixture of row extreme points.
pub fn random_feasible_matrix<R: Rng>(rng: &mut R, m: &Model) -> TransitionMatrix {
    let rows = m
        .rows()
        .iter()
        .map(|row| {
            let extremes = enumerate_row_extremes(row).unwrap();
            let mix = random_distribution(rng, extremes.len(), 0.2);
            let mut p = vec![0.0; m.len()];
            for (e, w) in extremes.iter().zip(&mix) {
                for (py, ey) in p.iter_mut().zip(e) {
                    *py += w * ey;
                }
            }
            p
        })
        .collect();
    TransitionMatrix::from_rows(rows).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() / x.abs().max(y.abs()) })
        .fold(0.0, f64::max)
}
