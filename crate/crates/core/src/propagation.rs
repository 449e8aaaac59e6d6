//! Transductive label propagation: harmonic functions (GFHF), local and
//! global consistency (LGC), class mass normalization and argmax decoding.

use std::collections::VecDeque;

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::inno::LabelState;

/// Binary `n x c` label matrix; a row is one-hot for labeled samples, zero otherwise.
#[derive(Debug, Clone)]
pub struct LabelMatrix {
    values: Mat<f64>,
    labels: Vec<Option<usize>>,
}

impl LabelMatrix {
    pub fn from_assignment(assignment: &[Option<usize>], class_count: usize) -> Result<Self> {
        let mut values = Mat::zeros(assignment.len(), class_count);
        for (i, label) in assignment.iter().enumerate() {
            if let Some(j) = *label {
                if j >= class_count {
                    return Err(Error::Config(format!("sample {i} has class {j} >= {class_count}")));
                }
                values[(i, j)] = 1.0;
            }
        }
        Ok(Self {
            values,
            labels: assignment.to_vec(),
        })
    }

    /// Seed and INNO-added labels are treated alike.
    pub fn from_state(state: &LabelState) -> Self {
        Self::from_assignment(state.assignment(), state.class_count()).expect("label state classes are in range")
    }

    pub fn values(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.values.ncols()
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn labeled_mask(&self) -> Vec<bool> {
        self.labels.iter().map(Option::is_some).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMethod {
    Gfhf,
    Lgc,
}

/// Real-valued `n x c` class scores.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    pub values: Mat<f64>,
    pub method: ScoreMethod,
}

impl ScoreMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// Class proportions used by [`cmn_adjust`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrior(Vec<f64>);

impl ClassPrior {
    pub fn new(proportions: Vec<f64>) -> Result<Self> {
        let sum: f64 = proportions.iter().sum();
        if proportions.iter().any(|&p| !(p >= 0.0 && p.is_finite())) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "class prior must be nonnegative and sum to 1, got {proportions:?}"
            )));
        }
        Ok(Self(proportions))
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::Config("class prior from all-zero counts".into()));
        }
        Self::new(counts.iter().map(|&r| r as f64 / total as f64).collect())
    }

    pub fn proportions(&self) -> &[f64] {
        &self.0
    }
}

fn check_shapes(graph: &Graph, labels: &LabelMatrix) -> Result<()> {
    if graph.len() != labels.len() {
        return Err(Error::Config(format!(
            "graph has {} vertices, label matrix has {} rows",
            graph.len(),
            labels.len()
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn cholesky(a: &Mat<f64>, what: &str) -> Result<Llt<f64>> {
    a.llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{what}: Cholesky factorization failed ({e:?})")))
}

/// Harmonic solution with labeled rows clamped to `Y`.
///
/// Solves `(D_UU - W_UU) F_U = W_UL Y_L` for unlabeled vertices connected to
/// some labeled vertex; unlabeled vertices in label-free components get the
/// uniform row `1/c`.
pub fn gfhf_propagate(graph: &Graph, labels: &LabelMatrix, labeled_mask: &[bool]) -> Result<ScoreMatrix> {
    check_shapes(graph, labels)?;
    let n = graph.len();
    let c = labels.class_count();
    if labeled_mask.len() != n {
        return Err(Error::Config(format!(
            "labeled mask has {} entries for {n} vertices",
            labeled_mask.len()
        )));
    }
    if let Some(i) = (0..n).find(|&i| labeled_mask[i] != labels.label(i).is_some()) {
        return Err(Error::Config(format!(
            "labeled mask disagrees with label matrix at row {i}"
        )));
    }
    if !labeled_mask.iter().any(|&l| l) {
        return Err(Error::Config(
            "harmonic propagation needs at least one labeled sample".into(),
        ));
    }

    // Unlabeled vertices reachable from a labeled one.
    let mut reached = labeled_mask.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| labeled_mask[i]).collect();
    while let Some(v) = queue.pop_front() {
        for &(u, _) in graph.neighbors(v) {
            if !reached[u] {
                reached[u] = true;
                queue.push_back(u);
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let free: Vec<usize> = (0..n).filter(|&i| reached[i] && !labeled_mask[i]).collect();
    for (a, &u) in free.iter().enumerate() {
        slot[u] = a;
    }

    let m = free.len();
    let mut system = Mat::<f64>::zeros(m, m);
    let mut rhs = Mat::<f64>::zeros(m, c);
    for (a, &u) in free.iter().enumerate() {
        for &(v, w) in graph.neighbors(u) {
            system[(a, a)] += w;
            match labels.label(v) {
                Some(j) => rhs[(a, j)] += w,
                None => system[(a, slot[v])] -= w,
            }
        }
    }

    let mut values = Mat::<f64>::from_fn(n, c, |i, j| match labels.label(i) {
        Some(_) => labels.values[(i, j)],
        None => 1.0 / c as f64,
    });
    if m > 0 {
        let solution = cholesky(&system, "harmonic system")?.solve(&rhs);
        for (a, &u) in free.iter().enumerate() {
            for j in 0..c {
                let v = solution[(a, j)];
                if !v.is_finite() {
                    return Err(Error::Numerical(format!("non-finite harmonic score at vertex {u}")));
                }
                values[(u, j)] = v;
            }
        }
    }
    Ok(ScoreMatrix {
        values,
        method: ScoreMethod::Gfhf,
    })
}

/// Factorization of `I - alpha S`, reusable across label matrices on one graph.
pub struct LgcSolver {
    alpha: f64,
    n: usize,
    factor: Llt<f64>,
}

impl LgcSolver {
    pub fn new(graph: &Graph, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let n = graph.len();
        let mut system = Mat::<f64>::identity(n, n);
        for (i, row) in graph.normalized_weights().into_iter().enumerate() {
            for (j, s) in row {
                system[(i, j)] -= alpha * s;
            }
        }
        Ok(Self {
            alpha,
            n,
            factor: cholesky(&system, "I - alpha S")?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `F = (1 - alpha) (I - alpha S)^-1 Y`.
    pub fn solve(&self, labels: &LabelMatrix) -> Result<ScoreMatrix> {
        if labels.len() != self.n {
            return Err(Error::Config(format!(
                "solver built for {} vertices, label matrix has {} rows",
                self.n,
                labels.len()
            )));
        }
        let mut values = self.factor.solve(labels.values());
        let scale = 1.0 - self.alpha;
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                values[(i, j)] *= scale;
                if !values[(i, j)].is_finite() {
                    return Err(Error::Numerical(format!("non-finite LGC score at vertex {i}")));
                }
            }
        }
        Ok(ScoreMatrix {
            values,
            method: ScoreMethod::Lgc,
        })
    }
}

/// Closed-form LGC scores.
pub fn lgc_propagate(graph: &Graph, labels: &LabelMatrix, alpha: f64) -> Result<ScoreMatrix> {
    check_shapes(graph, labels)?;
    LgcSolver::new(graph, alpha)?.solve(labels)
}

#[derive(Debug, Clone)]
pub struct LgcIteration {
    pub scores: ScoreMatrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed-point iteration `F <- alpha S F + (1 - alpha) Y` from `F = Y`, until the
/// largest entry change drops below `tol` or `max_iter` sweeps have run.
pub fn lgc_iterate(graph: &Graph, labels: &LabelMatrix, alpha: f64, tol: f64, max_iter: usize) -> Result<LgcIteration> {
    check_shapes(graph, labels)?;
    check_alpha(alpha)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let s = graph.normalized_weights();
    let y = labels.values();
    let (n, c) = (y.nrows(), y.ncols());
    let mut f = y.clone();
    let mut next = Mat::<f64>::zeros(n, c);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut change: f64 = 0.0;
        for (i, row) in s.iter().enumerate() {
            for j in 0..c {
                let spread: f64 = row.iter().map(|&(k, w)| w * f[(k, j)]).sum();
                let v = alpha * spread + (1.0 - alpha) * y[(i, j)];
                change = change.max((v - f[(i, j)]).abs());
                next[(i, j)] = v;
            }
        }
        std::mem::swap(&mut f, &mut next);
        iterations += 1;
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(LgcIteration {
        scores: ScoreMatrix {
            values: f,
            method: ScoreMethod::Lgc,
        },
        iterations,
        converged,
    })
}

/// Class mass normalization of the unlabeled rows:
/// `F'_uj = prior_j * F_uj / sum_u' F_u'j`. Labeled rows are copied unchanged.
pub fn cmn_adjust(scores: &ScoreMatrix, unlabeled_mask: &[bool], prior: &ClassPrior) -> Result<ScoreMatrix> {
    let (n, c) = (scores.nrows(), scores.ncols());
    if unlabeled_mask.len() != n || prior.proportions().len() != c {
        return Err(Error::Config(format!(
            "CMN shape mismatch: {n}x{c} scores, {} mask entries, {} prior entries",
            unlabeled_mask.len(),
            prior.proportions().len()
        )));
    }
    let mut mass = vec![0.0; c];
    for i in (0..n).filter(|&i| unlabeled_mask[i]) {
        for (j, m) in mass.iter_mut().enumerate() {
            *m += scores.values[(i, j)];
        }
    }
    if let Some(j) = mass.iter().position(|&m| m.is_nan() || m <= 0.0) {
        return Err(Error::Numerical(format!("class {j} has no unlabeled score mass")));
    }
    let mut values = scores.values.clone();
    for i in (0..n).filter(|&i| unlabeled_mask[i]) {
        for j in 0..c {
            values[(i, j)] = prior.proportions()[j] * scores.values[(i, j)] / mass[j];
        }
    }
    Ok(ScoreMatrix {
        values,
        method: scores.method,
    })
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn predict(scores: &ScoreMatrix) -> Vec<usize> {
    (0..scores.nrows())
        .map(|i| {
            let mut best = 0;
            for j in 1..scores.ncols() {
                if scores.values[(i, j)] > scores.values[(i, best)] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// `max_u |D_u F_u - sum_v W_uv F_v|` over unlabeled rows.
pub fn harmonic_residual(graph: &Graph, labeled_mask: &[bool], scores: &ScoreMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for u in (0..graph.len()).filter(|&u| !labeled_mask[u]) {
        let degree = graph.degree(u);
        for j in 0..scores.ncols() {
            let flow: f64 = graph.neighbors(u).iter().map(|&(v, w)| w * scores.values[(v, j)]).sum();
            worst = worst.max((degree * scores.values[(u, j)] - flow).abs());
        }
    }
    worst
}

/// `max |(I - alpha S) F - (1 - alpha) Y|`.
pub fn lgc_residual(graph: &Graph, labels: &LabelMatrix, alpha: f64, scores: &ScoreMatrix) -> f64 {
    let s = graph.normalized_weights();
    let mut worst: f64 = 0.0;
    for (i, row) in s.iter().enumerate() {
        for j in 0..scores.ncols() {
            let spread: f64 = row.iter().map(|&(k, w)| w * scores.values[(k, j)]).sum();
            let r = scores.values[(i, j)] - alpha * spread - (1.0 - alpha) * labels.values()[(i, j)];
            worst = worst.max(r.abs());
        }
    }
    worst
}
