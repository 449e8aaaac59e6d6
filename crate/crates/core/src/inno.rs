//! Iterative nearest-neighborhood oversampling.
//!
//! Starting from an imbalanced labeled set, [`inno_balance`] repeatedly picks
//! the class with the fewest (effective) labels and converts the unlabeled
//! sample most similar to one of that class's labeled samples, skipping any
//! candidate adjacent to a sample labeled with a different class. A class
//! whose candidates are all blocked is *saturated*: its effective count is
//! pinned to the current maximum and it receives no further labels.
//!
//! The loop stops once the dispersion of the effective counts
//! ([`imbalance_variance`]) drops to the stop parameter or every class is
//! saturated.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::{Dataset, LabeledSplit};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Denominator of the count dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceDivisor {
    /// Sample form, `c - 1`.
    #[default]
    ClassesMinusOne,
    /// Population form, `c`.
    Classes,
}

impl VarianceDivisor {
    fn value(self, c: usize) -> f64 {
        match self {
            VarianceDivisor::ClassesMinusOne => (c - 1) as f64,
            VarianceDivisor::Classes => c as f64,
        }
    }
}

/// Standard deviation of per-class labeled counts.
pub fn imbalance_variance(counts: &[usize], divisor: VarianceDivisor) -> Result<f64> {
    let c = counts.len();
    if c < 2 {
        return Err(Error::Config(format!("dispersion needs at least 2 classes, got {c}")));
    }
    let mean = counts.iter().sum::<usize>() as f64 / c as f64;
    let ss: f64 = counts.iter().map(|&r| (r as f64 - mean).powi(2)).sum();
    Ok((ss / divisor.value(c)).sqrt())
}

/// Nonnegative stopping threshold on [`imbalance_variance`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StopParameter(f64);

impl StopParameter {
    pub fn new(s: f64) -> Result<Self> {
        if s >= 0.0 && !s.is_nan() {
            Ok(Self(s))
        } else {
            Err(Error::Config(format!("stop parameter must be >= 0, got {s}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Seed,
    InnoAdded,
}

/// Label assignment plus the per-class bookkeeping the balancing loop mutates.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelState {
    assignment: Vec<Option<usize>>,
    provenance: Vec<Option<Provenance>>,
    members: Vec<Vec<usize>>,
    true_counts: Vec<usize>,
    effective_counts: Vec<usize>,
    saturated: Vec<bool>,
}

impl LabelState {
    /// State with the given `(sample, class)` seed labels; everything else unlabeled.
    pub fn from_labels(n: usize, class_count: usize, labels: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut state = Self {
            assignment: vec![None; n],
            provenance: vec![None; n],
            members: vec![Vec::new(); class_count],
            true_counts: vec![0; class_count],
            effective_counts: vec![0; class_count],
            saturated: vec![false; class_count],
        };
        for (i, class) in labels {
            if i >= n || class >= class_count {
                return Err(Error::Config(format!(
                    "label ({i}, {class}) out of range for {n} samples and {class_count} classes"
                )));
            }
            if state.assignment[i].is_some() {
                return Err(Error::Config(format!("sample {i} labeled twice")));
            }
            state.assign(i, class, Provenance::Seed);
        }
        Ok(state)
    }

    pub fn from_split(dataset: &Dataset, split: &LabeledSplit) -> Result<Self> {
        let labels = dataset.labels();
        Self::from_labels(
            dataset.len(),
            dataset.class_count(),
            split.labeled_indices.iter().map(|&i| (i, labels[i])),
        )
    }

    fn assign(&mut self, i: usize, class: usize, provenance: Provenance) {
        self.assignment[i] = Some(class);
        self.provenance[i] = Some(provenance);
        self.members[class].push(i);
        self.true_counts[class] += 1;
        if !self.saturated[class] {
            self.effective_counts[class] += 1;
        }
    }

    fn saturate(&mut self, class: usize) {
        let max = self.effective_counts.iter().copied().max().unwrap_or(0);
        self.saturated[class] = true;
        self.effective_counts[class] = max;
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.true_counts.len()
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn provenance(&self, i: usize) -> Option<Provenance> {
        self.provenance[i]
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.assignment[i].is_some()
    }

    /// Labeled samples of `class` in the order they were labeled.
    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn true_counts(&self) -> &[usize] {
        &self.true_counts
    }

    pub fn effective_counts(&self) -> &[usize] {
        &self.effective_counts
    }

    pub fn saturated(&self) -> &[bool] {
        &self.saturated
    }

    pub fn labeled_mask(&self) -> Vec<bool> {
        self.assignment.iter().map(Option::is_some).collect()
    }

    pub fn inno_added(&self) -> impl Iterator<Item = usize> + '_ {
        self.provenance
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Some(Provenance::InnoAdded))
            .map(|(i, _)| i)
    }
}

/// Non-saturated class with the fewest effective labels (lowest index on ties).
pub fn find_minority_class(state: &LabelState) -> Option<usize> {
    state
        .effective_counts
        .iter()
        .enumerate()
        .filter(|&(j, _)| !state.saturated[j])
        .min_by_key(|&(j, &r)| (r, j))
        .map(|(j, _)| j)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub sample: usize,
    pub weight: f64,
}

/// Heaviest edge from a labeled sample of `class` to an admissible unlabeled
/// neighbor; `blocked(u)` rejects neighbors adjacent to other-class labels.
fn scan_candidates(
    graph: &Graph,
    state: &LabelState,
    class: usize,
    blocked: impl Fn(usize) -> bool,
) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for &x in &state.members[class] {
        for &(u, w) in graph.neighbors(x) {
            if state.is_labeled(u) || blocked(u) {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => w > b.weight || (w == b.weight && u < b.sample),
            };
            if better {
                best = Some(Candidate { sample: u, weight: w });
            }
        }
    }
    best
}

fn touches_other_class(graph: &Graph, state: &LabelState, u: usize, class: usize) -> bool {
    graph
        .neighbors(u)
        .iter()
        .any(|&(v, _)| matches!(state.assignment[v], Some(other) if other != class))
}

/// The unlabeled sample INNO would add to `class` next, if any.
///
/// Ties on weight go to the lower sample index.
pub fn best_candidate(graph: &Graph, state: &LabelState, class: usize) -> Result<Option<Candidate>> {
    if class >= state.class_count() || state.members[class].is_empty() {
        return Err(Error::Config(format!("class {class} has no labeled sample")));
    }
    Ok(scan_candidates(graph, state, class, |u| {
        touches_other_class(graph, state, u, class)
    }))
}

/// Per-vertex count of adjacent labeled samples, by class.
struct AdjacentLabels {
    class_count: usize,
    by_class: Vec<u32>,
    total: Vec<u32>,
}

impl AdjacentLabels {
    fn new(graph: &Graph, state: &LabelState) -> Self {
        let c = state.class_count();
        let mut this = Self {
            class_count: c,
            by_class: vec![0; graph.len() * c],
            total: vec![0; graph.len()],
        };
        for (v, label) in state.assignment.iter().enumerate() {
            if let Some(j) = *label {
                this.record(graph, v, j);
            }
        }
        this
    }

    fn record(&mut self, graph: &Graph, v: usize, class: usize) {
        for &(u, _) in graph.neighbors(v) {
            self.by_class[u * self.class_count + class] += 1;
            self.total[u] += 1;
        }
    }

    fn blocked(&self, u: usize, class: usize) -> bool {
        self.total[u] > self.by_class[u * self.class_count + class]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnoAction {
    Added { sample: usize, weight: f64 },
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnoEvent {
    pub iteration: usize,
    pub class: usize,
    pub action: InnoAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnoOutcome {
    pub state: LabelState,
    pub log: Vec<InnoEvent>,
}

impl InnoOutcome {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }

    pub fn additions(&self) -> usize {
        self.log
            .iter()
            .filter(|e| matches!(e.action, InnoAction::Added { .. }))
            .count()
    }

    /// Writes `iteration,sample_index,class,edge_weight,action` rows.
    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "iteration,sample_index,class,edge_weight,action").map_err(io)?;
        for e in &self.log {
            match e.action {
                InnoAction::Added { sample, weight } => {
                    writeln!(out, "{},{},{},{:e},added", e.iteration, sample, e.class, weight)
                }
                InnoAction::Saturated => writeln!(out, "{},,{},,saturated", e.iteration, e.class),
            }
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Re-checks the log against `initial`: every addition was boundary-clean
    /// when made, the loop ended balanced to `stop` or with every deficient
    /// class saturated, and the iteration budget held. Returns the violations.
    pub fn audit(
        &self,
        graph: &Graph,
        initial: &LabelState,
        stop: StopParameter,
        divisor: VarianceDivisor,
    ) -> Vec<InnoViolation> {
        let mut violations = Vec::new();
        let mut replay = initial.clone();
        for e in &self.log {
            match e.action {
                InnoAction::Added { sample, .. } => {
                    if replay.is_labeled(sample) || touches_other_class(graph, &replay, sample, e.class) {
                        violations.push(InnoViolation::BoundaryAddition {
                            iteration: e.iteration,
                            sample,
                        });
                    }
                    replay.assign(sample, e.class, Provenance::InnoAdded);
                }
                InnoAction::Saturated => replay.saturate(e.class),
            }
        }
        if replay != self.state {
            violations.push(InnoViolation::ReplayMismatch);
        }

        let var = imbalance_variance(&self.state.effective_counts, divisor).unwrap_or(f64::INFINITY);
        let max = self.state.true_counts.iter().copied().max().unwrap_or(0);
        let deficient_saturated =
            (0..self.state.class_count()).all(|j| self.state.true_counts[j] == max || self.state.saturated[j]);
        if var > stop.value() && !deficient_saturated {
            violations.push(InnoViolation::Unbalanced { var });
        }

        let bound = iteration_bound(initial);
        if self.iterations() > bound {
            violations.push(InnoViolation::TooManyIterations {
                iterations: self.iterations(),
                bound,
            });
        }
        violations
    }
}

/// `c * (r_max - r_min) + c` for the initial true counts.
pub fn iteration_bound(initial: &LabelState) -> usize {
    let counts = initial.true_counts();
    let max = counts.iter().copied().max().unwrap_or(0);
    let min = counts.iter().copied().min().unwrap_or(0);
    counts.len() * (max - min) + counts.len()
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnoViolation {
    BoundaryAddition { iteration: usize, sample: usize },
    ReplayMismatch,
    Unbalanced { var: f64 },
    TooManyIterations { iterations: usize, bound: usize },
}

impl fmt::Display for InnoViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnoViolation::BoundaryAddition { iteration, sample } => write!(
                f,
                "iteration {iteration}: sample {sample} was labeled or adjacent to another class"
            ),
            InnoViolation::ReplayMismatch => write!(f, "replaying the log does not reproduce the final state"),
            InnoViolation::Unbalanced { var } => {
                write!(f, "stopped at dispersion {var} with an unsaturated deficient class")
            }
            InnoViolation::TooManyIterations { iterations, bound } => {
                write!(f, "{iterations} iterations exceed the bound {bound}")
            }
        }
    }
}

/// Balances `initial` by converting unlabeled samples into minority-class labels.
/// Seed labels are never changed.
pub fn inno_balance(
    graph: &Graph,
    initial: &LabelState,
    stop: StopParameter,
    divisor: VarianceDivisor,
) -> Result<InnoOutcome> {
    if graph.len() != initial.len() {
        return Err(Error::Config(format!(
            "graph has {} vertices but label state has {} samples",
            graph.len(),
            initial.len()
        )));
    }
    if let Some(j) = initial.true_counts.iter().position(|&r| r == 0) {
        return Err(Error::Config(format!("class {j} has no labeled sample")));
    }

    let mut state = initial.clone();
    let mut adjacent = AdjacentLabels::new(graph, &state);
    let mut log = Vec::new();
    let mut iteration = 0;
    while imbalance_variance(&state.effective_counts, divisor)? > stop.value() {
        let Some(class) = find_minority_class(&state) else {
            break;
        };
        let found = scan_candidates(graph, &state, class, |u| adjacent.blocked(u, class));
        let action = match found {
            Some(Candidate { sample, weight }) => {
                state.assign(sample, class, Provenance::InnoAdded);
                adjacent.record(graph, sample, class);
                InnoAction::Added { sample, weight }
            }
            None => {
                state.saturate(class);
                InnoAction::Saturated
            }
        };
        log.push(InnoEvent {
            iteration,
            class,
            action,
        });
        iteration += 1;
    }
    Ok(InnoOutcome { state, log })
}
