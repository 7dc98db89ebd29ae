//! Lower and upper expectations over credal rows, and the operators built from them.
//!
//! Because the credal set has separately specified rows, every infimum or
//! supremum over transition matrices splits into independent per-row
//! problems. Each row problem is a linear objective over a polytope:
//!
//! * precise rows have nothing to optimise,
//! * vertex rows take the best vertex,
//! * interval rows use the greedy fill: start from the lower bounds and pour
//!   the remaining mass into the cheapest (or dearest) coordinates first.
//!
//! [`apply_operator_reference`] evaluates the same operator through the
//! Choquet integral of the interval lower probability, which shares no code
//! with the greedy path and serves as a cross-check.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, RowCredalSet};
use crate::precise::HittingTimeVector;

/// Leftover mass above this after a greedy fill means the row was infeasible.
const FILL_TOL: f64 = 1e-9;

/// Which envelope to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        }
    }

    /// `true` if `candidate` is strictly better than `incumbent`.
    #[inline]
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Direction::Lower => candidate < incumbent,
            Direction::Upper => candidate > incumbent,
        }
    }

    fn order(self, a: f64, b: f64) -> Ordering {
        match self {
            Direction::Lower => a.total_cmp(&b),
            Direction::Upper => b.total_cmp(&a),
        }
    }
}

/// Optimal value of a linear objective over a row, with a distribution attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct RowOptimum {
    pub value: f64,
    pub distribution: Vec<f64>,
}

/// `sum_y p(y) c(y)`, skipping coordinates without mass so that costs there may be infinite.
#[inline]
pub fn masked_dot(p: &[f64], costs: &[f64]) -> f64 {
    p.iter()
        .zip(costs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, c)| p * c)
        .sum()
}

pub fn row_lower_expectation(row: &RowCredalSet, costs: &[f64]) -> Result<RowOptimum> {
    row_optimum(row, costs, Direction::Lower)
}

pub fn row_upper_expectation(row: &RowCredalSet, costs: &[f64]) -> Result<RowOptimum> {
    row_optimum(row, costs, Direction::Upper)
}

/// Optimises `sum_y p(y) c(y)` over the row. Ties go to the lowest vertex or state index.
pub fn row_optimum(row: &RowCredalSet, costs: &[f64], dir: Direction) -> Result<RowOptimum> {
    if costs.len() != row.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cost vector has length {}, row has {}",
            costs.len(),
            row.dim()
        )));
    }
    match row {
        RowCredalSet::Precise { p } => Ok(RowOptimum {
            value: masked_dot(p, costs),
            distribution: p.clone(),
        }),
        RowCredalSet::Vertices { vertices } => {
            let mut best = 0;
            let mut best_value = masked_dot(&vertices[0], costs);
            for (i, v) in vertices.iter().enumerate().skip(1) {
                let value = masked_dot(v, costs);
                if dir.improves(value, best_value) {
                    best = i;
                    best_value = value;
                }
            }
            Ok(RowOptimum {
                value: best_value,
                distribution: vertices[best].clone(),
            })
        }
        RowCredalSet::Interval { lower, upper } => greedy_fill(lower, upper, costs, dir),
    }
}

fn greedy_fill(lower: &[f64], upper: &[f64], costs: &[f64], dir: Direction) -> Result<RowOptimum> {
    let mut p = lower.to_vec();
    let mut free = 1.0 - lower.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..p.len()).filter(|&y| upper[y] > lower[y]).collect();
    // stable sort keeps ascending state index among equal costs
    order.sort_by(|&a, &b| dir.order(costs[a], costs[b]));
    for y in order {
        if free <= 0.0 {
            break;
        }
        let take = (upper[y] - lower[y]).min(free);
        p[y] += take;
        free -= take;
    }
    if free > FILL_TOL {
        return Err(Error::InfeasibleRow(format!(
            "{free} of the mass cannot be placed within the upper bounds"
        )));
    }
    Ok(RowOptimum {
        value: masked_dot(&p, costs),
        distribution: p,
    })
}

/// The row costs `W(x, y) + f(y)` of state `x`.
pub fn row_costs(m: &Model, f: &[f64], x: usize) -> Vec<f64> {
    m.weights()
        .row(x)
        .iter()
        .zip(f)
        .map(|(w, v)| w + v)
        .collect()
}

/// The weighted hitting-time operator and, per non-target state, an optimal row.
///
/// Target states map to zero and get `None`.
pub fn apply_operator_with_rows(
    m: &Model,
    f: &HittingTimeVector,
    dir: Direction,
) -> (HittingTimeVector, Vec<Option<RowOptimum>>) {
    let n = m.len();
    let mut g = vec![0.0; n];
    let mut rows = vec![None; n];
    for x in m.transient_states() {
        let costs = row_costs(m, f.as_slice(), x);
        let opt = row_optimum(m.row(x), &costs, dir)
            .expect("validated rows always admit a distribution");
        g[x] = opt.value;
        rows[x] = Some(opt);
    }
    (HittingTimeVector::new(g), rows)
}

/// `(L f)(x) = 0` on the target, else the optimum of `sum_y T(x,y)(W(x,y) + f(y))` over the row.
pub fn apply_operator(m: &Model, f: &HittingTimeVector, dir: Direction) -> HittingTimeVector {
    apply_operator_with_rows(m, f, dir).0
}

pub fn apply_lower_operator(m: &Model, f: &HittingTimeVector) -> HittingTimeVector {
    apply_operator(m, f, Direction::Lower)
}

pub fn apply_upper_operator(m: &Model, f: &HittingTimeVector) -> HittingTimeVector {
    apply_operator(m, f, Direction::Upper)
}

/// Lower or upper transition operator `[T f](x)` on every state, target included.
pub fn transition_envelope(m: &Model, f: &[f64], dir: Direction) -> Vec<f64> {
    m.rows()
        .iter()
        .map(|row| {
            row_optimum(row, f, dir)
                .expect("validated rows always admit a distribution")
                .value
        })
        .collect()
}

/// Same operator as [`apply_operator`], computed through a separate route:
/// interval rows use the Choquet integral of their lower probability and
/// vertex rows an explicit scan, without touching the greedy fill.
pub fn apply_operator_reference(m: &Model, f: &HittingTimeVector, dir: Direction) -> HittingTimeVector {
    let n = m.len();
    let mut g = vec![0.0; n];
    for x in m.transient_states() {
        let w = m.weights().row(x);
        let costs: Vec<f64> = (0..n).map(|y| w[y] + f[y]).collect();
        g[x] = row_reference_value(m.row(x), &costs, dir);
    }
    HittingTimeVector::new(g)
}

fn row_reference_value(row: &RowCredalSet, costs: &[f64], dir: Direction) -> f64 {
    match row {
        RowCredalSet::Precise { p } => p
            .iter()
            .zip(costs)
            .map(|(&p, &c)| if p > 0.0 { p * c } else { 0.0 })
            .sum(),
        RowCredalSet::Vertices { vertices } => {
            let values = vertices.iter().map(|v| {
                v.iter()
                    .zip(costs)
                    .map(|(&p, &c)| if p > 0.0 { p * c } else { 0.0 })
                    .sum::<f64>()
            });
            match dir {
                Direction::Lower => values.fold(f64::INFINITY, f64::min),
                Direction::Upper => values.fold(f64::NEG_INFINITY, f64::max),
            }
        }
        RowCredalSet::Interval { lower, upper } => match dir {
            Direction::Lower => choquet_lower(lower, upper, costs),
            Direction::Upper => {
                let neg: Vec<f64> = costs.iter().map(|c| -c).collect();
                -choquet_lower(lower, upper, &neg)
            }
        },
    }
}

/// Choquet integral of `costs` against the lower probability
/// `P(B) = max(sum_B l, 1 - sum_{not B} u)` of a reachable interval row.
fn choquet_lower(lower: &[f64], upper: &[f64], costs: &[f64]) -> f64 {
    let mut support: Vec<usize> = (0..lower.len()).filter(|&y| upper[y] > 0.0).collect();
    support.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    let m = support.len();
    // suffix sums of l over the upper level sets, prefix sums of u over their complements
    let mut l_suffix = vec![0.0; m + 1];
    for k in (0..m).rev() {
        l_suffix[k] = l_suffix[k + 1] + lower[support[k]];
    }
    let mut value = costs[support[0]];
    let mut u_prefix = 0.0;
    for k in 1..m {
        u_prefix += upper[support[k - 1]];
        let step = costs[support[k]] - costs[support[k - 1]];
        if step != 0.0 {
            let lower_prob = l_suffix[k].max(1.0 - u_prefix).clamp(0.0, 1.0);
            value += step * lower_prob;
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tighten_interval, WeightMatrix};
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    /// Extreme points of `{l <= p <= u, sum p = 1}`: every coordinate at a
    /// bound except at most one.
    fn brute_extremes(l: &[f64], u: &[f64]) -> Vec<Vec<f64>> {
        let n = l.len();
        let mut out = Vec::new();
        for free in 0..n {
            for mask in 0u32..(1 << n) {
                let mut p: Vec<f64> = (0..n)
                    .map(|y| if mask >> y & 1 == 1 { u[y] } else { l[y] })
                    .collect();
                let rest: f64 = (0..n).filter(|&y| y != free).map(|y| p[y]).sum();
                p[free] = 1.0 - rest;
                if p[free] >= l[free] - 1e-12 && p[free] <= u[free] + 1e-12 {
                    out.push(p);
                }
            }
        }
        out
    }

    fn brute_opt(l: &[f64], u: &[f64], c: &[f64], dir: Direction) -> f64 {
        let values = brute_extremes(l, u)
            .into_iter()
            .map(|p| masked_dot(&p, c));
        match dir {
            Direction::Lower => values.fold(f64::INFINITY, f64::min),
            Direction::Upper => values.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    #[test]
    fn precise_row() {
        let opt = row_lower_expectation(&RowCredalSet::precise(vec![0.3, 0.7]), &[10.0, 0.0]).unwrap();
        assert!(close(opt.value, 3.0));
        assert_eq!(opt.distribution, vec![0.3, 0.7]);
        let up = row_upper_expectation(&RowCredalSet::precise(vec![0.3, 0.7]), &[10.0, 0.0]).unwrap();
        assert_eq!(up, opt);
    }

    #[test]
    fn vacuous_interval_row() {
        let row = RowCredalSet::interval(vec![0.0, 0.0], vec![1.0, 1.0]);
        let lo = row_lower_expectation(&row, &[5.0, 2.0]).unwrap();
        assert_eq!((lo.value, lo.distribution), (2.0, vec![0.0, 1.0]));
        let up = row_upper_expectation(&row, &[5.0, 2.0]).unwrap();
        assert_eq!((up.value, up.distribution), (5.0, vec![1.0, 0.0]));
    }

    #[test]
    fn three_state_interval_row_matches_extreme_points() {
        let (l, u) = (vec![0.2, 0.1, 0.0], vec![0.6, 0.8, 0.5]);
        let c = [3.0, 1.0, 2.0];
        let oracle_lo = brute_opt(&l, &u, &c, Direction::Lower);
        let oracle_up = brute_opt(&l, &u, &c, Direction::Upper);
        assert!(close(oracle_lo, 1.4));
        let row = RowCredalSet::interval(l, u);
        let lo = row_lower_expectation(&row, &c).unwrap();
        assert!(close(lo.value, oracle_lo));
        for (a, b) in lo.distribution.iter().zip([0.2, 0.8, 0.0]) {
            assert!(close(*a, b));
        }
        let up = row_upper_expectation(&row, &c).unwrap();
        assert!(close(up.value, oracle_up));
        // dearest first: 0.6 on state 0, then 0.4 on state 2
        assert!(close(oracle_up, 0.6 * 3.0 + 0.1 + 0.3 * 2.0));
    }

    #[test]
    fn vertex_row_and_ties() {
        let row = RowCredalSet::vertices(vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        let lo = row_lower_expectation(&row, &[4.0, 0.0]).unwrap();
        assert_eq!((lo.value, lo.distribution), (2.0, vec![0.5, 0.5]));
        // equal values: lowest vertex index wins
        let tie = row_lower_expectation(&row, &[1.0, 1.0]).unwrap();
        assert_eq!(tie.distribution, vec![1.0, 0.0]);
        // equal costs in an interval row: lowest state index is filled first
        let row = RowCredalSet::interval(vec![0.0; 3], vec![0.5; 3]);
        let opt = row_lower_expectation(&row, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(opt.distribution, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn infinite_costs_off_support_are_masked() {
        let row = RowCredalSet::interval(vec![0.0, 0.3, 0.0], vec![0.0, 1.0, 1.0]);
        let costs = [f64::INFINITY, 1.0, 2.0];
        assert!(close(row_lower_expectation(&row, &costs).unwrap().value, 1.0));
        assert!(close(row_upper_expectation(&row, &costs).unwrap().value, 0.3 + 1.4));
        let row = RowCredalSet::precise(vec![0.0, 1.0, 0.0]);
        assert_eq!(row_lower_expectation(&row, &costs).unwrap().value, 1.0);
    }

    #[test]
    fn infeasible_interval_is_reported() {
        let row = RowCredalSet::interval(vec![0.0, 0.0], vec![0.3, 0.3]);
        assert!(matches!(
            row_lower_expectation(&row, &[1.0, 1.0]),
            Err(Error::InfeasibleRow(_))
        ));
    }

    fn small_model(weights: Option<WeightMatrix>) -> Model {
        Model::numbered(
            &[2],
            weights,
            vec![
                RowCredalSet::interval(vec![0.1, 0.2, 0.1], vec![0.5, 0.6, 0.7]),
                RowCredalSet::vertices(vec![vec![0.5, 0.0, 0.5], vec![0.0, 0.2, 0.8]]),
                RowCredalSet::precise(vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn operator_at_zero_is_one_step_weight() {
        let m = small_model(None);
        for dir in [Direction::Lower, Direction::Upper] {
            let g = apply_operator(&m, &HittingTimeVector::zeros(3), dir);
            assert!(close(g[0], 1.0) && close(g[1], 1.0) && g[2] == 0.0, "{g:?}");
        }

        let w = WeightMatrix::from_rows(vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let m = small_model(Some(w));
        let g = apply_lower_operator(&m, &HittingTimeVector::zeros(3));
        // row 0: l = [.1,.2,.1], the free .6 goes to state 0 up to .5, then .2 to state 1
        assert!(close(g[0], 0.5 * 1.0 + 0.4 * 2.0 + 0.1 * 3.0));
        assert!(close(g[1], (0.5 * 4.0 + 0.5 * 6.0f64).min(0.2 * 5.0 + 0.8 * 6.0)));
        let g = apply_upper_operator(&m, &HittingTimeVector::zeros(3));
        assert!(close(g[0], 0.1 * 1.0 + 0.2 * 2.0 + 0.7 * 3.0));
        assert!(close(g[1], 5.8));
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn transition_envelope_ignores_target_pinning() {
        let m = small_model(None);
        let f = [3.0, 1.0, 0.0];
        let lo = transition_envelope(&m, &f, Direction::Lower);
        assert!(close(lo[2], 0.0));
        assert!(close(lo[0], 0.1 * 3.0 + 0.2 * 1.0 + 0.7 * 0.0));
    }

    fn interval_row(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(prop::bool::weighted(0.2), n),
        )
            .prop_filter_map("nonempty polytope", |(a, b, zero)| {
                let sa: f64 = a.iter().sum();
                let l: Vec<f64> = a.iter().zip(&zero).map(|(v, z)| if *z { 0.0 } else { v / sa * 0.6 }).collect();
                let u: Vec<f64> = l
                    .iter()
                    .zip(&b)
                    .zip(&zero)
                    .map(|((l, b), z)| if *z { 0.0 } else { (l + b).min(1.0) })
                    .collect();
                let su: f64 = u.iter().sum();
                let sl: f64 = l.iter().sum();
                (sl <= 1.0 && su >= 1.0).then(|| tighten_interval(&l, &u))
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn greedy_equals_extreme_point_enumeration(
            (n, (l, u), c) in (2usize..=6).prop_flat_map(|n| (Just(n), interval_row(n), prop::collection::vec(-5.0f64..5.0, n)))
        ) {
            prop_assume!(n == l.len());
            let row = RowCredalSet::interval(l.clone(), u.clone());
            for dir in [Direction::Lower, Direction::Upper] {
                let opt = row_optimum(&row, &c, dir).unwrap();
                let oracle = brute_opt(&l, &u, &c, dir);
                prop_assert!((opt.value - oracle).abs() <= 1e-12, "{:?}: {} vs {}", dir, opt.value, oracle);
                let reference = row_reference_value(&row, &c, dir);
                prop_assert!((reference - oracle).abs() <= 1e-12, "choquet {:?}: {} vs {}", dir, reference, oracle);
                // the minimizer is feasible
                let p = &opt.distribution;
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for y in 0..n {
                    prop_assert!(p[y] >= l[y] - 1e-12 && p[y] <= u[y] + 1e-12);
                }
                prop_assert!((masked_dot(p, &c) - opt.value).abs() < 1e-12);
            }
        }

        #[test]
        fn operator_is_monotone_and_ordered(
            f in prop::collection::vec(0.0f64..20.0, 3),
            bump in prop::collection::vec(0.0f64..5.0, 3),
            c in 0.05f64..20.0,
        ) {
            let m = small_model(None);
            let f = HittingTimeVector::new(f);
            let g = HittingTimeVector::new(f.iter().zip(&bump).map(|(a, b)| a + b).collect());
            let (lf, lg) = (apply_lower_operator(&m, &f), apply_lower_operator(&m, &g));
            let (uf, ug) = (apply_upper_operator(&m, &f), apply_upper_operator(&m, &g));
            for x in 0..3 {
                prop_assert!(lf[x] <= lg[x] + 1e-12);
                prop_assert!(uf[x] <= ug[x] + 1e-12);
                prop_assert!(lf[x] <= uf[x] + 1e-12);
            }
            // scaling commutes: L^{cW}(c f) = c L^W f
            let scaled = m.with_scaled_weights(c).unwrap();
            for dir in [Direction::Lower, Direction::Upper] {
                let lhs = apply_operator(&scaled, &f.scaled(c), dir);
                let rhs = apply_operator(&m, &f, dir).scaled(c);
                prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(*b))));
                let reference = apply_operator_reference(&m, &f, dir);
                prop_assert!(reference.max_abs_diff(&apply_operator(&m, &f, dir)) <= 1e-12);
            }
        }
    }
}
