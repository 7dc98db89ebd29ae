//! Lower and upper expected hitting times of a weighted imprecise chain.
//!
//! Two solvers share one contract. Policy iteration alternates an exact
//! linear solve for the current matrix with a row-wise improvement step.
//! Value iteration applies the hitting-time operator from zero until it
//! settles. Both refuse models that violate R1, the condition that every
//! admissible matrix reaches the target from every state.

use serde::{Deserialize, Serialize};

use crate::credal::{
    apply_operator, apply_operator_reference, apply_operator_with_rows, masked_dot, row_costs,
    row_optimum, transition_envelope, Direction,
};
use crate::error::{Error, Result};
use crate::model::{Model, RowCredalSet};
use crate::precise::{hitting_times_precise, HittingTimeVector, TransitionMatrix};

/// Slack used when deciding whether an interval row fits inside a set.
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PolicyIteration,
    ValueIteration,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::PolicyIteration => "policy-iteration",
            Method::ValueIteration => "value-iteration",
        }
    }

    pub fn default_max_iters(self) -> usize {
        match self {
            Method::PolicyIteration => 10_000,
            Method::ValueIteration => 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub direction: Direction,
    pub tol: f64,
    /// `None` picks the method's default.
    pub max_iters: Option<usize>,
    /// Keep every policy-iteration iterate in [`SolveReport::trace`].
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::PolicyIteration,
            direction: Direction::Lower,
            tol: 1e-10,
            max_iters: None,
            record_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn new(method: Method, direction: Direction) -> Self {
        Self {
            method,
            direction,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
            .unwrap_or_else(|| self.method.default_max_iters())
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidOption("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub h: HittingTimeVector,
    /// A matrix in the credal set whose hitting times equal `h`.
    pub argopt: TransitionMatrix,
    pub iterations: usize,
    /// `sup_x |h(x) - (L h)(x)|` off the target.
    pub residual: f64,
    pub r1_satisfied: bool,
    /// Policy-iteration iterates `h_0, h_1, ...` when requested.
    pub trace: Vec<HittingTimeVector>,
}

/// Outcome of the R1 check. When violated, `trap` is a nonempty set of
/// non-target states that some admissible matrix never leaves, and each
/// trap state has a witness distribution supported inside the trap.
#[derive(Debug, Clone, PartialEq)]
pub struct R1Certificate {
    pub satisfied: bool,
    pub trap: Vec<usize>,
    pub witnesses: Vec<(usize, Vec<f64>)>,
}

impl R1Certificate {
    /// A matrix of the credal set that keeps the chain inside the trap forever.
    pub fn witness_matrix(&self, m: &Model) -> Result<TransitionMatrix> {
        let mut rows: Vec<Vec<f64>> = m.rows().iter().map(RowCredalSet::representative).collect();
        for (x, p) in &self.witnesses {
            rows[*x] = p.clone();
        }
        TransitionMatrix::from_rows(rows)
    }

    pub fn trap_names(&self, m: &Model) -> Vec<String> {
        self.trap
            .iter()
            .map(|&x| m.space().name(x).to_owned())
            .collect()
    }
}

/// A distribution of `row` supported inside `inside`, if one exists.
fn distribution_inside(row: &RowCredalSet, inside: &[bool]) -> Option<Vec<f64>> {
    let within = |p: &[f64]| p.iter().zip(inside).all(|(p, &b)| b || *p <= 0.0);
    match row {
        RowCredalSet::Precise { p } => within(p).then(|| p.clone()),
        RowCredalSet::Vertices { vertices } => vertices.iter().find(|v| within(v)).cloned(),
        RowCredalSet::Interval { lower, upper } => {
            if !within(lower) {
                return None;
            }
            let room: f64 = (0..upper.len()).filter(|&y| inside[y]).map(|y| upper[y]).sum();
            if room < 1.0 - SUPPORT_TOL {
                return None;
            }
            let mut p = lower.clone();
            let mut free = 1.0 - lower.iter().sum::<f64>();
            for y in (0..p.len()).filter(|&y| inside[y]) {
                if free <= 0.0 {
                    break;
                }
                let add = (upper[y] - lower[y]).min(free);
                p[y] += add;
                free -= add;
            }
            Some(p)
        }
    }
}

/// Checks R1 by computing the largest set of non-target states that some
/// admissible row choice can keep the chain inside.
pub fn check_r1(m: &Model) -> R1Certificate {
    let mut inside: Vec<bool> = (0..m.len()).map(|x| !m.target().contains(x)).collect();
    loop {
        let drop: Vec<usize> = (0..m.len())
            .filter(|&x| inside[x] && distribution_inside(m.row(x), &inside).is_none())
            .collect();
        if drop.is_empty() {
            break;
        }
        for x in drop {
            inside[x] = false;
        }
    }
    let trap: Vec<usize> = (0..m.len()).filter(|&x| inside[x]).collect();
    let witnesses = trap
        .iter()
        .map(|&x| {
            let p = distribution_inside(m.row(x), &inside).expect("trap states keep a witness");
            (x, p)
        })
        .collect();
    R1Certificate {
        satisfied: trap.is_empty(),
        trap,
        witnesses,
    }
}

fn require_r1(m: &Model) -> Result<()> {
    let cert = check_r1(m);
    if cert.satisfied {
        Ok(())
    } else {
        Err(Error::R1Violated {
            trap: cert.trap_names(m),
        })
    }
}

/// Runs the method selected in `opts`.
pub fn solve(m: &Model, opts: &SolveOptions) -> Result<SolveReport> {
    match opts.method {
        Method::PolicyIteration => solve_policy_iteration(m, opts),
        Method::ValueIteration => solve_value_iteration(m, opts),
    }
}

/// Starting matrix: per row, the optimiser of `W(x,y) + d(y)` with `d` the
/// hop distance to the target in the support graph.
fn initial_matrix(m: &Model, dir: Direction) -> Result<TransitionMatrix> {
    let dist: Vec<f64> = m
        .support_graph()
        .distances_to(m.target())
        .into_iter()
        .map(|d| d.map_or(f64::MAX, |d| d as f64))
        .collect();
    let rows = (0..m.len())
        .map(|x| {
            if m.target().contains(x) {
                Ok(m.row(x).representative())
            } else {
                row_optimum(m.row(x), &row_costs(m, &dist, x), dir).map(|o| o.distribution)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TransitionMatrix::from_rows(rows)
}

/// Policy iteration: solve for the current matrix, then switch every row
/// that can be improved by more than `tol` (relative to the row's value).
pub fn solve_policy_iteration(m: &Model, opts: &SolveOptions) -> Result<SolveReport> {
    opts.check()?;
    require_r1(m)?;
    let dir = opts.direction;
    let max_iters = opts.max_iters();
    let mut t = initial_matrix(m, dir)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let h = hitting_times_precise(&t, m.target(), m.weights())?;
        if opts.record_trace {
            trace.push(h.clone());
        }
        let mut changed = false;
        for x in m.transient_states() {
            let costs = row_costs(m, h.as_slice(), x);
            let current = masked_dot(t.row(x), &costs);
            let opt = row_optimum(m.row(x), &costs, dir)?;
            let gain = (opt.value - current).abs();
            if dir.improves(opt.value, current) && gain > opts.tol * current.abs().max(1.0) {
                t.set_row(x, &opt.distribution);
                changed = true;
            }
        }
        if !changed {
            let residual = fixed_point_residual(m, &h, dir);
            return Ok(SolveReport {
                h,
                argopt: t,
                iterations,
                residual,
                r1_satisfied: true,
                trace,
            });
        }
        if iterations >= max_iters {
            return Err(Error::MaxItersExceeded {
                iterations,
                last_change: f64::NAN,
                partial: h.into_vec(),
            });
        }
    }
}

/// Value iteration from zero. Stops once successive iterates differ by at
/// most `tol` and the contraction estimate from the last two differences
/// bounds the remaining error by `tol` as well.
pub fn solve_value_iteration(m: &Model, opts: &SolveOptions) -> Result<SolveReport> {
    opts.check()?;
    require_r1(m)?;
    let dir = opts.direction;
    let max_iters = opts.max_iters();
    let mut f = HittingTimeVector::zeros(m.len());
    let mut prev_delta = f64::INFINITY;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let g = apply_operator(m, &f, dir);
        let delta = g.max_abs_diff(&f);
        f = g;
        if delta <= opts.tol {
            let rate = delta / prev_delta;
            if delta == 0.0 || (rate < 1.0 && delta * rate / (1.0 - rate) <= opts.tol) {
                break;
            }
        }
        if iterations >= max_iters {
            return Err(Error::MaxItersExceeded {
                iterations,
                last_change: delta,
                partial: f.into_vec(),
            });
        }
        prev_delta = delta;
    }
    let (_, rows) = apply_operator_with_rows(m, &f, dir);
    let matrix_rows: Vec<Vec<f64>> = rows
        .into_iter()
        .enumerate()
        .map(|(x, r)| r.map_or_else(|| m.row(x).representative(), |r| r.distribution))
        .collect();
    let residual = fixed_point_residual(m, &f, dir);
    Ok(SolveReport {
        h: f,
        argopt: TransitionMatrix::from_rows(matrix_rows)?,
        iterations,
        residual,
        r1_satisfied: true,
        trace: Vec::new(),
    })
}

/// `sup_x |h(x) - (L h)(x)|` with the operator evaluated by the reference route.
pub fn fixed_point_residual(m: &Model, h: &HittingTimeVector, dir: Direction) -> f64 {
    apply_operator_reference(m, h, dir).max_abs_diff(h)
}

/// The unweighted fixed-point map `1_{A^c} + 1_{A^c} * T h`, with `T` the
/// lower or upper transition operator. Weights of `m` are ignored.
pub fn unweighted_fixed_point_map(m: &Model, h: &HittingTimeVector, dir: Direction) -> HittingTimeVector {
    let th = transition_envelope(m, h.as_slice(), dir);
    let mask = m.target().mask();
    HittingTimeVector::new(
        th.into_iter()
            .zip(mask)
            .map(|(v, &in_target)| if in_target { 0.0 } else { 1.0 + v })
            .collect(),
    )
}
