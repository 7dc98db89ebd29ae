//! Reduction of a weighted chain to an unweighted one on a larger state space.
//!
//! Every support edge `(x, y)` gets a relay state `z_xy`. The mass that row
//! `x` sent to `y` now goes to `z_xy`, and `z_xy` moves on to `y` with
//! probability `1 / (W'(x,y) - 1)`, otherwise staying put. The geometric
//! dwell time makes `h'(z_xy) = h'(y) + W'(x,y) - 1`, so one unit step into
//! the relay plus the dwell reproduces the edge weight `W'(x,y)`.
//!
//! The construction needs `W' >= 2`, so weights are first scaled by
//! `c = max(1, 2 / w_min)` and hitting times divided by `c` afterwards.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::credal::Direction;
use crate::error::{Error, Result};
use crate::model::{Model, RowCredalSet};
use crate::precise::{HittingTimeVector, TransitionMatrix};
use crate::solvers::{check_r1, fixed_point_residual, solve, SolveOptions, SolveReport};

/// The unweighted model on `X ∪ Z` together with the bookkeeping to map back.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedModel {
    model: Model,
    z_index: BTreeMap<(usize, usize), usize>,
    edges: Vec<(usize, usize)>,
    scaled_weights: Vec<f64>,
    scale: f64,
    original_n: usize,
}

/// Sidecar describing the relay states of an augmented model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSidecar {
    pub scale_c: f64,
    pub original_states: Vec<String>,
    pub z_states: Vec<RelayState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayState {
    pub name: String,
    pub from: String,
    pub to: String,
    pub weight: f64,
    pub scaled_weight: f64,
}

pub fn relay_name(from: &str, to: &str) -> String {
    format!("z:{from}->{to}")
}

/// Builds the augmented unweighted model.
pub fn augment(m: &Model) -> Result<AugmentedModel> {
    let n = m.len();
    let graph = m.support_graph();
    let edges = graph.edges().to_vec();
    if let Some(&(x, y)) = edges.iter().find(|&&(x, y)| m.weights().get(x, y) <= 0.0) {
        return Err(Error::NonpositiveSupportWeight {
            from: m.space().name(x).to_owned(),
            to: m.space().name(y).to_owned(),
            weight: m.weights().get(x, y),
        });
    }
    let w_min = m.min_support_weight();
    let scale = (2.0 / w_min).max(1.0);
    let total = n + edges.len();
    let z_index: BTreeMap<(usize, usize), usize> = edges
        .iter()
        .enumerate()
        .map(|(k, &e)| (e, n + k))
        .collect();
    // rounding in c * w_min must not push the smallest weight below 2
    let scaled_weights: Vec<f64> = edges
        .iter()
        .map(|&(x, y)| (scale * m.weights().get(x, y)).max(2.0))
        .collect();

    let relay = |x: usize, v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; total];
        for &y in graph.successors(x) {
            out[z_index[&(x, y)]] = v[y];
        }
        out
    };
    let mut rows = Vec::with_capacity(total);
    for x in 0..n {
        rows.push(match m.row(x) {
            RowCredalSet::Precise { p } => RowCredalSet::precise(relay(x, p)),
            RowCredalSet::Interval { lower, upper } => {
                RowCredalSet::interval(relay(x, lower), relay(x, upper))
            }
            RowCredalSet::Vertices { vertices } => {
                RowCredalSet::vertices(vertices.iter().map(|v| relay(x, v)).collect())
            }
        });
    }
    for (k, &(_, y)) in edges.iter().enumerate() {
        let z = n + k;
        let leave = 1.0 / (scaled_weights[k] - 1.0);
        let mut p = vec![0.0; total];
        p[y] = leave;
        p[z] = 1.0 - leave;
        rows.push(RowCredalSet::precise(p));
    }
    let mut names = m.space().names().to_vec();
    names.extend(
        edges
            .iter()
            .map(|&(x, y)| relay_name(m.space().name(x), m.space().name(y))),
    );
    let model = Model::new(names, m.target().members(), None, rows)?;
    Ok(AugmentedModel {
        model,
        z_index,
        edges,
        scaled_weights,
        scale,
        original_n: n,
    })
}

impl AugmentedModel {
    /// The unweighted model over `X ∪ Z`.
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn original_len(&self) -> usize {
        self.original_n
    }

    /// Support edges in the order of their relay states.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Index of `z_xy` in the augmented model.
    pub fn relay(&self, x: usize, y: usize) -> Option<usize> {
        self.z_index.get(&(x, y)).copied()
    }

    /// Scaled weight `W'(x, y) = c W(x, y)` of a support edge.
    pub fn scaled_weight(&self, x: usize, y: usize) -> Option<f64> {
        self.relay(x, y)
            .map(|z| self.scaled_weights[z - self.original_n])
    }

    /// Hitting times of the original states: `h(x) = h'(x) / c`.
    pub fn pull_back_times(&self, h: &HittingTimeVector) -> HittingTimeVector {
        HittingTimeVector::new(
            h.as_slice()[..self.original_n]
                .iter()
                .map(|v| v / self.scale)
                .collect(),
        )
    }

    /// The original-space matrix `T(x, y) = T'(x, z_xy)`.
    pub fn pull_back_matrix(&self, t: &TransitionMatrix) -> Result<TransitionMatrix> {
        let n = self.original_n;
        let rows = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| self.relay(x, y).map_or(0.0, |z| t.get(x, z)))
                    .collect()
            })
            .collect();
        TransitionMatrix::from_rows(rows)
    }

    /// The augmented matrix of a single original matrix `T` whose support
    /// lies in the model's support graph.
    pub fn lift_matrix(&self, t: &TransitionMatrix) -> Result<TransitionMatrix> {
        let n = self.original_n;
        if t.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {0}x{0}, model has {n} states",
                t.dim()
            )));
        }
        let total = self.model.len();
        let mut rows = Vec::with_capacity(total);
        for x in 0..n {
            let mut row = vec![0.0; total];
            for (y, &p) in t.row(x).iter().enumerate() {
                if p > 0.0 {
                    let z = self.relay(x, y).ok_or_else(|| {
                        Error::InvalidMatrix(format!("edge ({x}, {y}) is outside the support graph"))
                    })?;
                    row[z] = p;
                }
            }
            rows.push(row);
        }
        for z in n..total {
            let RowCredalSet::Precise { p } = self.model.row(z) else {
                unreachable!("relay rows are precise");
            };
            rows.push(p.clone());
        }
        TransitionMatrix::from_rows(rows)
    }

    pub fn sidecar(&self, original: &Model) -> AugmentSidecar {
        let names = original.space();
        AugmentSidecar {
            scale_c: self.scale,
            original_states: names.names().to_vec(),
            z_states: self
                .edges
                .iter()
                .zip(&self.scaled_weights)
                .map(|(&(x, y), &w)| RelayState {
                    name: relay_name(names.name(x), names.name(y)),
                    from: names.name(x).to_owned(),
                    to: names.name(y).to_owned(),
                    weight: original.weights().get(x, y),
                    scaled_weight: w,
                })
                .collect(),
        }
    }

    /// Pulls an augmented-space solve back to the original model.
    pub fn pull_back_report(&self, original: &Model, inner: &SolveReport, dir: Direction) -> Result<SolveReport> {
        let h = self.pull_back_times(&inner.h);
        let residual = fixed_point_residual(original, &h, dir);
        Ok(SolveReport {
            argopt: self.pull_back_matrix(&inner.argopt)?,
            iterations: inner.iterations,
            residual,
            r1_satisfied: inner.r1_satisfied,
            trace: inner.trace.iter().map(|t| self.pull_back_times(t)).collect(),
            h,
        })
    }
}

/// Solves the weighted problem by running the unweighted solver on the augmented model.
pub fn solve_via_augmentation(m: &Model, opts: &SolveOptions) -> Result<SolveReport> {
    let cert = check_r1(m);
    if !cert.satisfied {
        return Err(Error::R1Violated {
            trap: cert.trap_names(m),
        });
    }
    let aug = augment(m)?;
    let inner = solve(aug.model(), opts)?;
    aug.pull_back_report(m, &inner, opts.direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightMatrix;
    use crate::precise::{hitting_times_precise, hitting_times_unweighted};
    use crate::solvers::Method;

    fn single_edge(w: f64) -> Model {
        let weights = WeightMatrix::from_rows(vec![vec![1.0, w], vec![1.0, w]]).unwrap();
        Model::numbered(
            &[1],
            Some(weights),
            vec![
                RowCredalSet::precise(vec![0.0, 1.0]),
                RowCredalSet::precise(vec![0.0, 1.0]),
            ],
        )
        .unwrap()
    }

    fn relay_row(aug: &AugmentedModel, x: usize, y: usize) -> Vec<f64> {
        let z = aug.relay(x, y).unwrap();
        match aug.model().row(z) {
            RowCredalSet::Precise { p } => p.clone(),
            other => panic!("relay row {other:?}"),
        }
    }

    #[test]
    fn relay_rows_follow_the_weight() {
        let aug = augment(&single_edge(2.0)).unwrap();
        assert_eq!(aug.scale(), 1.0);
        let z = aug.relay(0, 1).unwrap();
        let p = relay_row(&aug, 0, 1);
        assert_eq!((p[1], p[z]), (1.0, 0.0));

        let aug = augment(&single_edge(3.0)).unwrap();
        let z = aug.relay(0, 1).unwrap();
        let p = relay_row(&aug, 0, 1);
        assert_eq!((p[1], p[z]), (0.5, 0.5));
    }

    #[test]
    fn relay_dwell_reproduces_the_weight() {
        let m = single_edge(4.0);
        let aug = augment(&m).unwrap();
        assert_eq!(aug.scale(), 1.0);
        // states: s0, s1, z:s0->s1, z:s1->s1
        assert_eq!(aug.model().len(), 2 + 2);
        assert_eq!(aug.model().space().name(2), "z:s0->s1");
        let t = aug.model().rows().iter().map(RowCredalSet::representative).collect();
        let h = hitting_times_unweighted(&TransitionMatrix::from_rows(t).unwrap(), aug.model().target()).unwrap();
        let z = aug.relay(0, 1).unwrap();
        assert!((h[z] - 3.0).abs() < 1e-12);
        assert!((h[0] - 4.0).abs() < 1e-12);
        let report = solve_via_augmentation(&m, &SolveOptions::default()).unwrap();
        assert!((report.h[0] - 4.0).abs() < 1e-12);
        let direct = hitting_times_precise(&report.argopt, m.target(), m.weights()).unwrap();
        assert!((direct[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unit_weights_use_scale_two() {
        let m = Model::numbered(
            &[2],
            None,
            vec![
                RowCredalSet::precise(vec![0.2, 0.5, 0.3]),
                RowCredalSet::precise(vec![0.4, 0.0, 0.6]),
                RowCredalSet::precise(vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let aug = augment(&m).unwrap();
        assert_eq!(aug.scale(), 2.0);
        assert_eq!(aug.model().len(), 3 + m.support_graph().len());
        let via = solve_via_augmentation(&m, &SolveOptions::default()).unwrap();
        let direct = solve(&m, &SolveOptions::default()).unwrap();
        assert!(via.h.max_abs_diff(&direct.h) < 1e-12);
    }

    #[test]
    fn imprecise_rows_are_reindexed() {
        let m = Model::numbered(
            &[2],
            Some(WeightMatrix::constant(3, 0.5)),
            vec![
                RowCredalSet::interval(vec![0.1, 0.0, 0.2], vec![0.5, 0.0, 0.9]),
                RowCredalSet::vertices(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]]),
                RowCredalSet::precise(vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let aug = augment(&m).unwrap();
        assert_eq!(aug.scale(), 4.0);
        let RowCredalSet::Interval { lower, upper } = aug.model().row(0) else {
            panic!()
        };
        let (z00, z02) = (aug.relay(0, 0).unwrap(), aug.relay(0, 2).unwrap());
        assert!(aug.relay(0, 1).is_none());
        // validation already raised l(2) to 1 - u(0) = 0.5
        assert_eq!((lower[z00], upper[z00], lower[z02], upper[z02]), (0.1, 0.5, 0.5, 0.9));
        assert!(check_r1(aug.model()).satisfied);
        for dir in [Direction::Lower, Direction::Upper] {
            let opts = SolveOptions::new(Method::PolicyIteration, dir);
            let via = solve_via_augmentation(&m, &opts).unwrap();
            let direct = solve(&m, &opts).unwrap();
            assert!(via.h.max_abs_diff(&direct.h) < 1e-9, "{dir:?}");
        }
    }

    #[test]
    fn sidecar_lists_relays() {
        let m = single_edge(1.0);
        let aug = augment(&m).unwrap();
        let side = aug.sidecar(&m);
        assert_eq!(side.scale_c, 2.0);
        assert_eq!(side.z_states[0].name, "z:s0->s1");
        assert_eq!(side.z_states[0].scaled_weight, 2.0);
        // the augmented model survives a JSON round trip
        let again = Model::from_json_str(&aug.model().to_json_pretty()).unwrap();
        assert_eq!(&again, aug.model());
    }
}
