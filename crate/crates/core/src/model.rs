//! Model description: states, target set, weights and one credal set per row.
//!
//! A [`Model`] is only obtainable through validation, so every value of the
//! type satisfies the invariants the solvers rely on: rows are probability
//! distributions (or nonempty sets of them), interval rows are tightened to
//! their reachable bounds, and every support edge carries a positive weight.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the row sum of an input distribution.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Rows whose sum is this close to one are left untouched by renormalization.
const RENORMALIZE_SKIP: f64 = 1e-14;

/// Interval bounds move only if tightening changes them by more than this.
const TIGHTEN_EPS: f64 = 1e-14;

/// Ordered, duplicate-free list of state identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateState(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    /// States named `s0`, `s1`, ...
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("s{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

/// Nonempty set of target states, stored both as a mask and a sorted list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    mask: Vec<bool>,
    members: Vec<usize>,
}

impl TargetSet {
    pub fn new(n: usize, members: &[usize]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyTarget);
        }
        let mut mask = vec![false; n];
        for &m in members {
            if m >= n {
                return Err(Error::DimensionMismatch(format!(
                    "target index {m} out of range for {n} states"
                )));
            }
            mask[m] = true;
        }
        let members = (0..n).filter(|&i| mask[i]).collect();
        Ok(Self { mask, members })
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask[x]
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `true` when every state is a target, in which case all hitting times are zero.
    pub fn covers_all(&self) -> bool {
        self.members.len() == self.mask.len()
    }
}

/// Dense N×N matrix of edge weights, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    pub fn ones(n: usize) -> Self {
        Self::constant(n, 1.0)
    }

    pub fn constant(n: usize, w: f64) -> Self {
        Self {
            n,
            entries: vec![w; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "weight row {i} has length {} but there are {n} rows",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Ok(Self { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.n..(x + 1) * self.n]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|w| w * c).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

/// The set of admissible outgoing distributions of one state.
///
/// `Vertices` denotes the convex hull of the listed distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RowCredalSet {
    Precise { p: Vec<f64> },
    Interval { lower: Vec<f64>, upper: Vec<f64> },
    Vertices { vertices: Vec<Vec<f64>> },
}

impl RowCredalSet {
    pub fn precise(p: Vec<f64>) -> Self {
        Self::Precise { p }
    }

    pub fn interval(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self::Interval { lower, upper }
    }

    pub fn vertices(vertices: Vec<Vec<f64>>) -> Self {
        Self::Vertices { vertices }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Precise { p } => p.len(),
            Self::Interval { lower, .. } => lower.len(),
            Self::Vertices { vertices } => vertices.first().map_or(0, Vec::len),
        }
    }

    /// Upper probability of the singleton `{y}`.
    pub fn upper_mass(&self, y: usize) -> f64 {
        match self {
            Self::Precise { p } => p[y],
            Self::Interval { upper, .. } => upper[y],
            Self::Vertices { vertices } => vertices.iter().map(|v| v[y]).fold(0.0, f64::max),
        }
    }

    /// Whether some admissible distribution puts positive mass on `y`.
    pub fn supports(&self, y: usize) -> bool {
        self.upper_mass(y) > 0.0
    }

    /// Some distribution from the set; used for rows whose content is never read.
    pub fn representative(&self) -> Vec<f64> {
        match self {
            Self::Precise { p } => p.clone(),
            Self::Vertices { vertices } => vertices[0].clone(),
            Self::Interval { lower, upper } => {
                let mut p = lower.clone();
                let mut free = 1.0 - lower.iter().sum::<f64>();
                for y in 0..p.len() {
                    if free <= 0.0 {
                        break;
                    }
                    let add = (upper[y] - lower[y]).min(free);
                    p[y] += add;
                    free -= add;
                }
                p
            }
        }
    }

    /// Checks and normalizes the row. `state` is only used in error messages.
    pub fn validated(&self, n: usize, state: &str) -> Result<Self> {
        let dims = |len: usize, what: &str| -> Result<()> {
            if len == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "{what} of state `{state}` has length {len}, expected {n}"
                )))
            }
        };
        match self {
            Self::Precise { p } => {
                dims(p.len(), "row")?;
                Ok(Self::Precise {
                    p: normalized_distribution(p, state)?,
                })
            }
            Self::Vertices { vertices } => {
                if vertices.is_empty() {
                    return Err(Error::EmptyCredalRow {
                        state: state.to_owned(),
                        detail: "vertex list is empty".into(),
                    });
                }
                let mut kept: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
                for v in vertices {
                    dims(v.len(), "vertex")?;
                    let v = normalized_distribution(v, state)?;
                    let duplicate = kept.iter().any(|k| {
                        k.iter()
                            .zip(&v)
                            .all(|(a, b)| (a - b).abs() <= STOCHASTIC_TOL)
                    });
                    if !duplicate {
                        kept.push(v);
                    }
                }
                Ok(Self::Vertices { vertices: kept })
            }
            Self::Interval { lower, upper } => {
                dims(lower.len(), "lower bound")?;
                dims(upper.len(), "upper bound")?;
                let (lower, upper) = validated_interval(lower, upper, state)?;
                Ok(Self::Interval { lower, upper })
            }
        }
    }
}

fn normalized_distribution(p: &[f64], state: &str) -> Result<Vec<f64>> {
    let bad = |detail: String| Error::NonStochasticVertex {
        state: state.to_owned(),
        detail,
    };
    let mut q = Vec::with_capacity(p.len());
    for (y, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < -STOCHASTIC_TOL {
            return Err(bad(format!("entry {y} is {v}")));
        }
        q.push(v.max(0.0));
    }
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(bad(format!("entries sum to {sum}")));
    }
    renormalize(&mut q);
    Ok(q)
}

/// Rescales to unit sum and puts the rounding residue on the largest entry.
pub(crate) fn renormalize(p: &mut [f64]) {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() <= RENORMALIZE_SKIP || sum <= 0.0 {
        return;
    }
    p.iter_mut().for_each(|v| *v /= sum);
    let k = argmax(p);
    let rest: f64 = p
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, v)| v)
        .sum();
    p[k] = (1.0 - rest).max(0.0);
}

fn argmax(p: &[f64]) -> usize {
    let mut k = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[k] {
            k = i;
        }
    }
    k
}

fn validated_interval(lower: &[f64], upper: &[f64], state: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let empty = |detail: String| Error::EmptyCredalRow {
        state: state.to_owned(),
        detail,
    };
    let n = lower.len();
    let mut l = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for y in 0..n {
        let (a, b) = (lower[y], upper[y]);
        if !a.is_finite() || !b.is_finite() {
            return Err(empty(format!("bounds at {y} are not finite")));
        }
        if a < -STOCHASTIC_TOL || b > 1.0 + STOCHASTIC_TOL {
            return Err(empty(format!("bounds [{a}, {b}] at {y} leave [0, 1]")));
        }
        if a > b + STOCHASTIC_TOL {
            return Err(empty(format!("lower {a} exceeds upper {b} at {y}")));
        }
        let a = a.clamp(0.0, 1.0);
        l.push(a);
        u.push(b.clamp(a, 1.0));
    }
    let sum_l: f64 = l.iter().sum();
    let sum_u: f64 = u.iter().sum();
    if sum_l > 1.0 + STOCHASTIC_TOL {
        return Err(empty(format!("lower bounds sum to {sum_l} > 1")));
    }
    if sum_u < 1.0 - STOCHASTIC_TOL {
        return Err(empty(format!("upper bounds sum to {sum_u} < 1")));
    }
    // Degenerate polytopes collapse onto a single distribution.
    if sum_l >= 1.0 - STOCHASTIC_TOL {
        renormalize(&mut l);
        return Ok((l.clone(), l));
    }
    if sum_u <= 1.0 + STOCHASTIC_TOL {
        renormalize(&mut u);
        return Ok((u.clone(), u));
    }
    Ok(tighten_interval(&l, &u))
}

/// Reachable bounds: `l(y) <- max(l(y), 1 - sum_{y' != y} u(y'))` and
/// `u(y) <- min(u(y), 1 - sum_{y' != y} l(y'))`, applied simultaneously.
pub fn tighten_interval(lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let others = |v: &[f64], y: usize| -> f64 {
        v.iter()
            .enumerate()
            .filter(|&(i, _)| i != y)
            .map(|(_, a)| a)
            .sum()
    };
    let mut l = lower.to_vec();
    let mut u = upper.to_vec();
    for y in 0..lower.len() {
        let lo = 1.0 - others(upper, y);
        if lo > lower[y] + TIGHTEN_EPS {
            l[y] = lo.min(upper[y]);
        }
        let hi = 1.0 - others(lower, y);
        if hi < upper[y] - TIGHTEN_EPS {
            u[y] = hi.max(lower[y]);
        }
    }
    (l, u)
}

/// Directed edges `(x, y)` with positive upper transition probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    successors: Vec<Vec<usize>>,
}

impl SupportGraph {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn successors(&self, x: usize) -> &[usize] {
        &self.successors[x]
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.successors[x].binary_search(&y).is_ok()
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    /// Hop distance to the target along edges, `None` if unreachable.
    pub fn distances_to(&self, target: &TargetSet) -> Vec<Option<usize>> {
        let mut predecessors = vec![Vec::new(); self.n];
        for &(x, y) in &self.edges {
            predecessors[y].push(x);
        }
        let mut dist = vec![None; self.n];
        let mut queue = std::collections::VecDeque::new();
        for &a in target.members() {
            dist[a] = Some(0);
            queue.push_back(a);
        }
        while let Some(y) = queue.pop_front() {
            let d = dist[y].unwrap_or(0) + 1;
            for &x in &predecessors[y] {
                if dist[x].is_none() {
                    dist[x] = Some(d);
                    queue.push_back(x);
                }
            }
        }
        dist
    }
}

/// A validated weighted imprecise Markov chain with separately specified rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    space: StateSpace,
    target: TargetSet,
    weights: WeightMatrix,
    rows: Vec<RowCredalSet>,
}

impl Model {
    /// Validates the parts and assembles a model. Absent weights mean unit weights.
    pub fn new(
        states: Vec<String>,
        target: &[usize],
        weights: Option<WeightMatrix>,
        rows: Vec<RowCredalSet>,
    ) -> Result<Self> {
        let space = StateSpace::new(states)?;
        let n = space.len();
        let target = TargetSet::new(n, target)?;
        if rows.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} rows for {n} states",
                rows.len()
            )));
        }
        let rows = rows
            .iter()
            .enumerate()
            .map(|(x, row)| row.validated(n, space.name(x)))
            .collect::<Result<Vec<_>>>()?;
        let weights = weights.unwrap_or_else(|| WeightMatrix::ones(n));
        if weights.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "weight matrix is {0}x{0} for {n} states",
                weights.dim()
            )));
        }
        for x in 0..n {
            for y in 0..n {
                let w = weights.get(x, y);
                let edge = || (space.name(x).to_owned(), space.name(y).to_owned());
                if !w.is_finite() || w < 0.0 {
                    let (from, to) = edge();
                    return Err(Error::InvalidWeight {
                        from,
                        to,
                        weight: w,
                    });
                }
                if w <= 0.0 && rows[x].supports(y) {
                    let (from, to) = edge();
                    return Err(Error::NonpositiveSupportWeight {
                        from,
                        to,
                        weight: w,
                    });
                }
            }
        }
        Ok(Self {
            space,
            target,
            weights,
            rows,
        })
    }

    /// Same as [`Model::new`] with states named `s0..s{N-1}`.
    pub fn numbered(
        target: &[usize],
        weights: Option<WeightMatrix>,
        rows: Vec<RowCredalSet>,
    ) -> Result<Self> {
        let names = (0..rows.len()).map(|i| format!("s{i}")).collect();
        Self::new(names, target, weights, rows)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        validate_model(&raw)
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            states: self.space.names().to_vec(),
            target: self
                .target
                .members()
                .iter()
                .map(|&a| self.space.name(a).to_owned())
                .collect(),
            weights: Some(self.weights.to_rows()),
            rows: self.rows.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("model serializes")
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn target(&self) -> &TargetSet {
        &self.target
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn rows(&self) -> &[RowCredalSet] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &RowCredalSet {
        &self.rows[x]
    }

    /// Non-target states in index order.
    pub fn transient_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&x| !self.target.contains(x))
    }

    /// The same model with every weight multiplied by `c > 0`.
    pub fn with_scaled_weights(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidOption(format!("scale {c} must be positive")));
        }
        Ok(Self {
            weights: self.weights.scaled(c),
            ..self.clone()
        })
    }

    pub fn with_weights(&self, weights: WeightMatrix) -> Result<Self> {
        Self::new(
            self.space.names().to_vec(),
            self.target.members(),
            Some(weights),
            self.rows.clone(),
        )
    }

    pub fn with_unit_weights(&self) -> Self {
        Self {
            weights: WeightMatrix::ones(self.len()),
            ..self.clone()
        }
    }

    pub fn support_graph(&self) -> SupportGraph {
        support_graph(self)
    }

    /// Smallest weight over support edges.
    pub fn min_support_weight(&self) -> f64 {
        self.support_graph()
            .edges()
            .iter()
            .map(|&(x, y)| self.weights.get(x, y))
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "model with {} states, {} targets, {} support edges",
            self.len(),
            self.target.members().len(),
            self.support_graph().len()
        )
    }
}

/// The JSON interchange form of a model, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawModel {
    pub states: Vec<String>,
    pub target: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    pub rows: Vec<RowCredalSet>,
}

/// Turns a parsed description into a [`Model`], resolving state names.
pub fn validate_model(raw: &RawModel) -> Result<Model> {
    let space = StateSpace::new(raw.states.clone())?;
    let target = raw
        .target
        .iter()
        .map(|name| {
            space
                .index_of(name)
                .ok_or_else(|| Error::UnknownState(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = raw
        .weights
        .clone()
        .map(WeightMatrix::from_rows)
        .transpose()?;
    Model::new(raw.states.clone(), &target, weights, raw.rows.clone())
}

pub fn support_graph(m: &Model) -> SupportGraph {
    let n = m.len();
    let mut edges = Vec::new();
    let mut successors = vec![Vec::new(); n];
    for (x, row) in m.rows().iter().enumerate() {
        for y in 0..n {
            if row.supports(y) {
                edges.push((x, y));
                successors[x].push(y);
            }
        }
    }
    SupportGraph {
        n,
        edges,
        successors,
    }
}
