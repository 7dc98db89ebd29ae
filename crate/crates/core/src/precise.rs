//! Expected (weighted) hitting times of a single Markov chain.
//!
//! The expected hitting time is the minimal nonnegative solution of
//! `h(x) = sum_y T(x,y) (W(x,y) + h(y))` off the target, `h = 0` on it.
//! States that can wander off to a region from which the target is
//! unreachable get `+inf`; on the remaining states the system is nonsingular
//! and solved by dense LU.

use std::collections::VecDeque;
use std::ops::Index;

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::model::{renormalize, TargetSet, WeightMatrix};

const ROW_SUM_TOL: f64 = 1e-9;

/// A row-stochastic N×N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds a matrix from rows, renormalizing sums that are off by at most `1e-9`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (x, mut row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "matrix row {x} has length {}, expected {n}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= -ROW_SUM_TOL)) {
                return Err(Error::InvalidMatrix(format!("row {x} has entry {v}")));
            }
            row.iter_mut().for_each(|v| *v = v.max(0.0));
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMatrix(format!("row {x} sums to {sum}")));
            }
            renormalize(&mut row);
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n..(x + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Replaces row `x`; the caller guarantees it is a distribution.
    pub(crate) fn set_row(&mut self, x: usize, p: &[f64]) {
        self.data[x * self.n..(x + 1) * self.n].copy_from_slice(p);
    }

    fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.n];
        for x in 0..self.n {
            for (y, &p) in self.row(x).iter().enumerate() {
                if p > 0.0 {
                    pred[y].push(x);
                }
            }
        }
        pred
    }
}

/// Expected hitting time per state; entries lie in `[0, +inf]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimeVector(Vec<f64>);

impl HittingTimeVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Indices holding `+inf`.
    pub fn infinite_states(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i].is_infinite()).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }

    /// Sup-norm distance; matching infinities count as zero.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for HittingTimeVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for HittingTimeVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// States from which the target is reached with positive probability,
/// by backward breadth-first search on the support of `t`.
pub fn reachable_to_target(t: &TransitionMatrix, target: &TargetSet) -> Vec<bool> {
    let pred = t.predecessors();
    let mut seen = vec![false; t.dim()];
    let mut queue: VecDeque<usize> = target.members().iter().copied().collect();
    for &a in target.members() {
        seen[a] = true;
    }
    while let Some(y) = queue.pop_front() {
        for &x in &pred[y] {
            if !seen[x] {
                seen[x] = true;
                queue.push_back(x);
            }
        }
    }
    seen
}

/// States whose expected hitting time is infinite: those that can reach,
/// without passing through the target, a state from which the target is
/// unreachable.
pub fn infinite_hitting_states(t: &TransitionMatrix, target: &TargetSet) -> Vec<bool> {
    let reach = reachable_to_target(t, target);
    let pred = t.predecessors();
    let mut bad: Vec<bool> = reach.iter().map(|r| !r).collect();
    let mut queue: VecDeque<usize> = (0..t.dim()).filter(|&x| bad[x]).collect();
    while let Some(y) = queue.pop_front() {
        for &x in &pred[y] {
            if !bad[x] && !target.contains(x) {
                bad[x] = true;
                queue.push_back(x);
            }
        }
    }
    bad
}

/// Expected weighted hitting times `h^{T,W}`.
pub fn hitting_times_precise(
    t: &TransitionMatrix,
    target: &TargetSet,
    weights: &WeightMatrix,
) -> Result<HittingTimeVector> {
    let n = t.dim();
    if weights.dim() != n || target.mask().len() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {n}x{n}, weights {0}x{0}, target over {1} states",
            weights.dim(),
            target.mask().len()
        )));
    }
    let infinite = infinite_hitting_states(t, target);
    let mut h = vec![0.0; n];
    let mut slot = vec![usize::MAX; n];
    let mut solve_for = Vec::new();
    for x in 0..n {
        if infinite[x] {
            h[x] = f64::INFINITY;
        } else if !target.contains(x) {
            slot[x] = solve_for.len();
            solve_for.push(x);
        }
    }
    let k = solve_for.len();
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (i, &x) in solve_for.iter().enumerate() {
        a[i * k + i] += 1.0;
        for (y, &p) in t.row(x).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            b[i] += p * weights.get(x, y);
            if slot[y] != usize::MAX {
                a[i * k + slot[y]] -= p;
            }
        }
    }
    let sol = solve_dense(a, b)?;
    for (i, &x) in solve_for.iter().enumerate() {
        h[x] = sol[i].max(0.0);
    }
    Ok(HittingTimeVector(h))
}

/// Unweighted hitting times `h^T`: the weighted solver with unit weights.
pub fn hitting_times_unweighted(t: &TransitionMatrix, target: &TargetSet) -> Result<HittingTimeVector> {
    hitting_times_precise(t, target, &WeightMatrix::ones(t.dim()))
}

/// Returns `(h^{T,cW}, c * h^{T,W})`, which agree by linearity in the weights.
pub fn rescale_check(
    t: &TransitionMatrix,
    target: &TargetSet,
    weights: &WeightMatrix,
    c: f64,
) -> Result<(HittingTimeVector, HittingTimeVector)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidOption(format!("scale {c} must be positive")));
    }
    let scaled = hitting_times_precise(t, target, &weights.scaled(c))?;
    let base = hitting_times_precise(t, target, weights)?;
    Ok((scaled, base.scaled(c)))
}

/// `sup_x |h(x) - sum_y T(x,y)(W(x,y) + h(y))|` over finite non-target states.
pub fn equation_residual(
    t: &TransitionMatrix,
    target: &TargetSet,
    weights: &WeightMatrix,
    h: &HittingTimeVector,
) -> f64 {
    (0..t.dim())
        .filter(|&x| !target.contains(x) && h[x].is_finite())
        .map(|x| {
            let rhs: f64 = t
                .row(x)
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(y, p)| p * (weights.get(x, y) + h[y]))
                .sum();
            (h[x] - rhs).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tm(rows: Vec<Vec<f64>>) -> TransitionMatrix {
        TransitionMatrix::from_rows(rows).unwrap()
    }

    fn target(n: usize, members: &[usize]) -> TargetSet {
        TargetSet::new(n, members).unwrap()
    }

    #[test]
    fn reachability_examples() {
        let a = target(2, &[0]);
        assert_eq!(reachable_to_target(&TransitionMatrix::identity(2), &a), vec![true, false]);

        let t = tm(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(reachable_to_target(&t, &target(2, &[1])), vec![true, true]);

        let t = tm(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(reachable_to_target(&t, &target(3, &[2])), vec![true; 3]);
    }

    #[test]
    fn single_step_chains() {
        let t = tm(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let a = target(2, &[1]);
        let h = hitting_times_precise(&t, &a, &WeightMatrix::ones(2)).unwrap();
        assert_eq!(h.as_slice(), &[1.0, 0.0]);

        let w = WeightMatrix::from_rows(vec![vec![1.0, 3.5], vec![1.0, 1.0]]).unwrap();
        let h = hitting_times_precise(&t, &a, &w).unwrap();
        assert_eq!(h.as_slice(), &[3.5, 0.0]);
    }

    #[test]
    fn geometric_waiting_time() {
        // Oracle: sum_{n>=1} n (1/2)^n = 2.
        let series: f64 = (1..200).map(|n| n as f64 * 0.5f64.powi(n)).sum();
        let t = tm(vec![vec![0.5, 0.5], vec![0.0, 1.0]]);
        let h = hitting_times_unweighted(&t, &target(2, &[1])).unwrap();
        assert!((h[0] - series).abs() < 1e-12);
        assert!((h[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unreachable_target_gives_infinity() {
        let h = hitting_times_unweighted(&TransitionMatrix::identity(2), &target(2, &[1])).unwrap();
        assert_eq!(h[0], f64::INFINITY);
        assert_eq!(h[1], 0.0);
    }

    #[test]
    fn leaking_into_a_trap_gives_infinity() {
        // s0 reaches the target with probability 1/2 only.
        let t = tm(vec![
            vec![0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let a = target(3, &[2]);
        assert_eq!(reachable_to_target(&t, &a), vec![true, false, true]);
        let h = hitting_times_unweighted(&t, &a).unwrap();
        assert_eq!(h.as_slice(), &[f64::INFINITY, f64::INFINITY, 0.0]);
    }

    #[test]
    fn rescaling_examples() {
        let t = tm(vec![vec![0.5, 0.5], vec![0.0, 1.0]]);
        let a = target(2, &[1]);
        let w = WeightMatrix::ones(2);
        let (lhs, rhs) = rescale_check(&t, &a, &w, 1.0).unwrap();
        assert_eq!(lhs, rhs);
        let (lhs, rhs) = rescale_check(&t, &a, &w, 2.0).unwrap();
        assert!((lhs[0] - 4.0).abs() < 1e-12 && (rhs[0] - 4.0).abs() < 1e-12);
        let (lhs, rhs) = rescale_check(&t, &a, &w, 0.1).unwrap();
        assert!((lhs[0] / rhs[0] - 1.0).abs() < 1e-12);
        assert!(rescale_check(&t, &a, &w, 0.0).is_err());
    }

    #[test]
    fn rejects_non_stochastic_matrices() {
        assert!(TransitionMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![1.0], vec![1.0]]).is_err());
    }

    fn random_chain() -> impl Strategy<Value = (TransitionMatrix, TargetSet, WeightMatrix)> {
        (2usize..=6).prop_flat_map(|n| {
            let rows = prop::collection::vec(
                prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..1.0], n),
                n,
            );
            let weights = prop::collection::vec(0.1f64..10.0, n * n);
            (Just(n), rows, weights, 0..n)
        })
        .prop_filter_map("rows need mass", |(n, rows, w, a)| {
            let rows: Option<Vec<Vec<f64>>> = rows
                .into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    (s > 0.0).then(|| r.iter().map(|v| v / s).collect())
                })
                .collect();
            let t = TransitionMatrix::from_rows(rows?).ok()?;
            let w = WeightMatrix::from_rows(w.chunks(n).map(<[f64]>::to_vec).collect()).ok()?;
            Some((t, TargetSet::new(n, &[a]).ok()?, w))
        })
    }

    proptest! {
        #[test]
        fn value_iteration_agrees_with_the_linear_solve((t, a, w) in random_chain()) {
            let h = hitting_times_precise(&t, &a, &w).unwrap();
            let scale = h.iter().filter(|v| v.is_finite()).fold(1.0f64, |m, v| m.max(*v));
            prop_assert!(equation_residual(&t, &a, &w, &h) <= 1e-10 * scale);
            // Value iteration from zero, accelerated by doubling:
            // v_{2k} = v_k + Q^k v_k, so 64 doublings cover 2^64 plain sweeps.
            let n = t.dim();
            let mut q = vec![0.0; n * n];
            let mut v = vec![0.0; n];
            for x in (0..n).filter(|&x| !a.contains(x)) {
                for y in 0..n {
                    v[x] += t.get(x, y) * w.get(x, y);
                    if !a.contains(y) {
                        q[x * n + y] = t.get(x, y);
                    }
                }
            }
            for _ in 0..64 {
                let qv: Vec<f64> = (0..n)
                    .map(|x| (0..n).filter(|&y| q[x * n + y] != 0.0).map(|y| q[x * n + y] * v[y]).sum())
                    .collect();
                v.iter_mut().zip(qv).for_each(|(a, b)| *a += b);
                let mut q2 = vec![0.0; n * n];
                for i in 0..n {
                    for k in 0..n {
                        let f = q[i * n + k];
                        if f != 0.0 {
                            for j in 0..n {
                                q2[i * n + j] += f * q[k * n + j];
                            }
                        }
                    }
                }
                q = q2;
            }
            for x in 0..n {
                if h[x].is_finite() {
                    prop_assert!((v[x] - h[x]).abs() <= 1e-8 * h[x].max(1.0), "x={} vi={} lu={}", x, v[x], h[x]);
                } else {
                    prop_assert!(v[x] > 1e6, "x={} should diverge, got {}", x, v[x]);
                }
            }
        }

        #[test]
        fn unit_weights_match_unweighted((t, a, _w) in random_chain()) {
            let h1 = hitting_times_unweighted(&t, &a).unwrap();
            let h2 = hitting_times_precise(&t, &a, &WeightMatrix::ones(t.dim())).unwrap();
            prop_assert_eq!(h1, h2);
        }
    }
}
