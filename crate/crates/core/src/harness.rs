//! Seeded experiment runner: imbalance, neighbor-count and stop-parameter
//! sweeps over repeated labeled splits, aggregated into CSV rows.
//!
//! Run `r` of every schedule point uses split seed `base_seed + r`, and all
//! method arms of that run share the split, so INNO and non-INNO arms are
//! paired. The graph depends only on the dataset and is built once per
//! [`Experiment`].

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::dataset::{
    load_csv_dataset, load_idx_mnist, make_two_moons, sample_labeled_split, subsample_per_class, ClassMap, Dataset,
    LabelColumn,
};
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, Graph};
use crate::inno::{imbalance_variance, inno_balance, InnoOutcome, LabelState, StopParameter, VarianceDivisor};
use crate::metrics::{confusion, overall_accuracy};
use crate::propagation::{
    cmn_adjust, gfhf_propagate, harmonic_residual, predict, ClassPrior, LabelMatrix, LgcSolver, ScoreMatrix,
};

/// Directory holding the bundled datasets.
pub fn default_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

/// MNIST samples drawn per digit.
pub const MNIST_PER_CLASS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Iris,
    Ionosphere,
    /// Digits 5 to 9.
    Mnist5,
    /// Digits 0 to 9.
    Mnist10,
    TwoMoons {
        n_per_class: usize,
        noise: f64,
        seed: u64,
    },
}

impl DatasetSpec {
    pub const TWO_MOONS_DEFAULT: DatasetSpec = DatasetSpec::TwoMoons {
        n_per_class: 200,
        noise: 0.03,
        seed: 7,
    };

    pub fn name(&self) -> &'static str {
        match self {
            DatasetSpec::Iris => "iris",
            DatasetSpec::Ionosphere => "ionosphere",
            DatasetSpec::Mnist5 => "mnist5",
            DatasetSpec::Mnist10 => "mnist10",
            DatasetSpec::TwoMoons { .. } => "two-moons",
        }
    }

    /// RBF bandwidth and neighbor count used when none is given.
    pub fn default_graph_params(&self) -> (f64, usize) {
        match self {
            DatasetSpec::Iris => (0.26, 5),
            DatasetSpec::Ionosphere => (1.0, 10),
            DatasetSpec::Mnist5 | DatasetSpec::Mnist10 => (380.0, 10),
            DatasetSpec::TwoMoons { .. } => (0.4, 60),
        }
    }

    /// Loads the dataset; MNIST subsets are drawn with `subsample_seed`.
    pub fn load(&self, data_dir: &Path, subsample_seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::Iris => load_csv_dataset(&data_dir.join("iris.csv"), &LabelColumn::Last, &ClassMap::iris()),
            DatasetSpec::Ionosphere => load_csv_dataset(
                &data_dir.join("ionosphere.data"),
                &LabelColumn::Last,
                &ClassMap::ionosphere(),
            ),
            DatasetSpec::Mnist5 | DatasetSpec::Mnist10 => {
                let digits: Vec<usize> = if *self == DatasetSpec::Mnist5 {
                    (5..10).collect()
                } else {
                    (0..10).collect()
                };
                let pool = load_mnist_pool(data_dir)?.restrict_classes(&digits, self.name())?;
                subsample_per_class(&pool, MNIST_PER_CLASS, subsample_seed)
            }
            DatasetSpec::TwoMoons {
                n_per_class,
                noise,
                seed,
            } => make_two_moons(*n_per_class, *noise, *seed),
        }
    }
}

/// Train and test IDX pairs concatenated when present, else the bundled 5k subset.
fn load_mnist_pool(data_dir: &Path) -> Result<Dataset> {
    let pair = |images: &str, labels: &str| {
        let (i, l) = (data_dir.join(images), data_dir.join(labels));
        (i.exists() && l.exists()).then_some((i, l))
    };
    match pair("train-images-idx3-ubyte", "train-labels-idx1-ubyte") {
        Some((images, labels)) => {
            let train = load_idx_mnist(&images, &labels)?;
            match pair("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte") {
                Some((images, labels)) => train.concat(&load_idx_mnist(&images, &labels)?, "mnist"),
                None => Ok(train),
            }
        }
        None => load_idx_mnist(
            &data_dir.join("mnist-5k-images-idx3-ubyte"),
            &data_dir.join("mnist-5k-labels-idx1-ubyte"),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gfhf,
    Lgc,
    GfhfCmn,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Gfhf => "gfhf",
            Method::Lgc => "lgc",
            Method::GfhfCmn => "gfhf+cmn",
        }
    }
}

/// One propagation method, with or without INNO in front of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arm {
    pub method: Method,
    pub inno: bool,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inno {
            write!(f, "inno+{}", self.method.label())
        } else {
            f.write_str(self.method.label())
        }
    }
}

pub const STANDARD_ARMS: [Arm; 5] = [
    Arm {
        method: Method::Gfhf,
        inno: false,
    },
    Arm {
        method: Method::Lgc,
        inno: false,
    },
    Arm {
        method: Method::Gfhf,
        inno: true,
    },
    Arm {
        method: Method::Lgc,
        inno: true,
    },
    Arm {
        method: Method::GfhfCmn,
        inno: false,
    },
];

/// How the INNO stop parameter is chosen for a counts vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Fixed(StopParameter),
    /// Stop once minority classes reach the dataset's class ratio relative to
    /// the largest labeled class.
    MatchClassRatio,
}

impl StopRule {
    pub fn resolve(&self, counts: &[usize], class_sizes: &[usize], divisor: VarianceDivisor) -> Result<StopParameter> {
        match *self {
            StopRule::Fixed(s) => Ok(s),
            StopRule::MatchClassRatio => {
                let reference = (0..counts.len())
                    .max_by_key(|&j| (counts[j], std::cmp::Reverse(j)))
                    .unwrap_or(0);
                let target: Vec<usize> = counts
                    .iter()
                    .zip(class_sizes)
                    .map(|(&r, &size)| {
                        let scaled = counts[reference] as f64 * size as f64 / class_sizes[reference] as f64;
                        r.max(scaled.round() as usize)
                    })
                    .collect();
                StopParameter::new(imbalance_variance(&target, divisor)?)
            }
        }
    }
}

/// Labeled-count schedule for imbalance sweeps.
pub fn imbalance_schedule(dataset: &DatasetSpec) -> Vec<Vec<usize>> {
    match dataset {
        DatasetSpec::Iris => (1..=10).map(|i| vec![10, 11 - i, 9 + i]).collect(),
        DatasetSpec::Ionosphere => (1..=10).map(|i| vec![11 + i, 12 - i]).collect(),
        DatasetSpec::Mnist5 => minority_majority_schedule(5),
        DatasetSpec::Mnist10 => minority_majority_schedule(10),
        DatasetSpec::TwoMoons { .. } => (1..=10).map(|i| vec![11 - i, 10]).collect(),
    }
}

/// Ten labels per class; class 1 shrinks to 1 while the last class grows to 19.
fn minority_majority_schedule(c: usize) -> Vec<Vec<usize>> {
    (1..=10)
        .map(|i| {
            let mut counts = vec![10; c];
            counts[1] = 11 - i;
            counts[c - 1] = 9 + i;
            counts
        })
        .collect()
}

/// Counts held fixed by the k and s sweeps.
pub fn fixed_sweep_counts(dataset: &DatasetSpec) -> Vec<usize> {
    match dataset {
        DatasetSpec::Iris => vec![10, 1, 20],
        DatasetSpec::Ionosphere => vec![23, 2],
        other => imbalance_schedule(other).pop().unwrap_or_default(),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub data_dir: PathBuf,
    pub arms: Vec<Arm>,
    pub k: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub stop: StopRule,
    pub divisor: VarianceDivisor,
    /// Fixed counts; `None` means the dataset's imbalance schedule.
    pub counts: Option<Vec<usize>>,
    pub runs: usize,
    pub base_seed: u64,
    /// When false, runtimes are reported as zero so output is byte-reproducible.
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Standard arms and the dataset's default graph parameters.
    pub fn new(dataset: DatasetSpec) -> Self {
        let (sigma, k) = dataset.default_graph_params();
        Self {
            dataset,
            data_dir: default_data_dir(),
            arms: STANDARD_ARMS.to_vec(),
            k,
            sigma,
            alpha: 0.99,
            stop: StopRule::Fixed(StopParameter::new(0.0).expect("zero is a valid stop parameter")),
            divisor: VarianceDivisor::ClassesMinusOne,
            counts: None,
            runs: 50,
            base_seed: 0,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.arms.is_empty() {
            return Err(Error::Config("no method arms selected".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<Vec<usize>> {
        match &self.counts {
            Some(counts) => vec![counts.clone()],
            None => imbalance_schedule(&self.dataset),
        }
    }
}

/// Result of one arm on one split.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub arm: Arm,
    /// Accuracy over every initially unlabeled sample.
    pub accuracy: f64,
    /// Accuracy over initially unlabeled samples INNO did not convert.
    pub accuracy_never_labeled: f64,
    pub inno_additions: usize,
    pub final_counts: Vec<usize>,
    pub runtime: Duration,
    pub inno_time: Duration,
    /// INNO audit findings, empty when the balancing loop behaved.
    pub inno_violations: Vec<String>,
    /// Harmonic residual divided by the maximum degree (GFHF arms only).
    pub harmonic_residual: Option<f64>,
}

struct Propagated {
    scores: ScoreMatrix,
    elapsed: Duration,
    residual: Option<f64>,
}

/// Dataset, graph and (when needed) LGC factorization for one configuration.
pub struct Experiment {
    config: ExperimentConfig,
    dataset: Dataset,
    graph: Graph,
    lgc: Option<LgcSolver>,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dataset = config.dataset.load(&config.data_dir, config.base_seed)?;
        Self::with_dataset(config, dataset)
    }

    /// Like [`Experiment::prepare`] but reuses an already loaded dataset.
    pub fn with_dataset(config: ExperimentConfig, dataset: Dataset) -> Result<Self> {
        config.validate()?;
        let graph = build_knn_graph(dataset.features(), dataset.dim(), config.k, config.sigma)?;
        let lgc = if config.arms.iter().any(|a| a.method == Method::Lgc) {
            Some(LgcSolver::new(&graph, config.alpha)?)
        } else {
            None
        };
        Ok(Self {
            config,
            dataset,
            graph,
            lgc,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    fn propagate(&self, state: &LabelState, method: Method, run: usize) -> Result<Propagated> {
        let start = Instant::now();
        let labels = LabelMatrix::from_state(state);
        let (scores, residual) = match method {
            Method::Lgc => {
                let solver = self
                    .lgc
                    .as_ref()
                    .ok_or_else(|| Error::Config("LGC arm without an LGC factorization".into()))?;
                (solver.solve(&labels), None)
            }
            Method::Gfhf | Method::GfhfCmn => {
                let mask = state.labeled_mask();
                match gfhf_propagate(&self.graph, &labels, &mask) {
                    Ok(scores) => {
                        let residual = harmonic_residual(&self.graph, &mask, &scores) / self.graph.max_degree();
                        (Ok(scores), Some(residual))
                    }
                    Err(e) => (Err(e), None),
                }
            }
        };
        Ok(Propagated {
            scores: scores.map_err(|e| e.in_stage("propagate", run))?,
            elapsed: start.elapsed(),
            residual,
        })
    }

    /// Runs a single arm.
    pub fn run_single(&self, arm: Arm, counts: &[usize], run_index: usize) -> Result<RunOutcome> {
        self.run_arms_with(&[arm], counts, run_index, self.resolve_stop(counts)?)
            .map(|mut v| v.remove(0))
    }

    /// Runs every configured arm on the split of `run_index`.
    pub fn run_arms(&self, counts: &[usize], run_index: usize) -> Result<Vec<RunOutcome>> {
        self.run_arms_with(&self.config.arms, counts, run_index, self.resolve_stop(counts)?)
    }

    fn resolve_stop(&self, counts: &[usize]) -> Result<StopParameter> {
        self.config
            .stop
            .resolve(counts, &self.dataset.class_sizes(), self.config.divisor)
    }

    fn run_arms_with(
        &self,
        arms: &[Arm],
        counts: &[usize],
        run: usize,
        stop: StopParameter,
    ) -> Result<Vec<RunOutcome>> {
        let seed = self.config.base_seed.wrapping_add(run as u64);

        let start = Instant::now();
        let split = sample_labeled_split(&self.dataset, counts, seed).map_err(|e| e.in_stage("split", run))?;
        let initial = LabelState::from_split(&self.dataset, &split).map_err(|e| e.in_stage("split", run))?;
        let split_time = start.elapsed();

        let balanced: Option<(InnoOutcome, Duration, Vec<String>)> = if arms.iter().any(|a| a.inno) {
            let start = Instant::now();
            let outcome =
                inno_balance(&self.graph, &initial, stop, self.config.divisor).map_err(|e| e.in_stage("inno", run))?;
            let elapsed = start.elapsed();
            let violations = outcome
                .audit(&self.graph, &initial, stop, self.config.divisor)
                .iter()
                .map(ToString::to_string)
                .collect();
            Some((outcome, elapsed, violations))
        } else {
            None
        };

        // GFHF scores are shared between the plain and CMN arms of one state.
        let mut cache: Vec<(bool, bool, Propagated)> = Vec::new();
        let mut outcomes = Vec::with_capacity(arms.len());
        for &arm in arms {
            let state = match (&balanced, arm.inno) {
                (Some((outcome, _, _)), true) => &outcome.state,
                _ => &initial,
            };
            let is_lgc = arm.method == Method::Lgc;
            let pos = match cache
                .iter()
                .position(|(inno, lgc, _)| *inno == arm.inno && *lgc == is_lgc)
            {
                Some(pos) => pos,
                None => {
                    cache.push((arm.inno, is_lgc, self.propagate(state, arm.method, run)?));
                    cache.len() - 1
                }
            };
            let propagated = &cache[pos].2;

            let start = Instant::now();
            let cmn_scores;
            let scores = if arm.method == Method::GfhfCmn {
                let prior =
                    ClassPrior::from_counts(&split.counts(&self.dataset)).map_err(|e| e.in_stage("cmn", run))?;
                let unlabeled: Vec<bool> = state.assignment().iter().map(Option::is_none).collect();
                cmn_scores = cmn_adjust(&propagated.scores, &unlabeled, &prior).map_err(|e| e.in_stage("cmn", run))?;
                &cmn_scores
            } else {
                &propagated.scores
            };
            let (accuracy, accuracy_never_labeled) = self
                .evaluate(&split.unlabeled_indices, state, scores)
                .map_err(|e| e.in_stage("evaluate", run))?;
            let eval_time = start.elapsed();

            let (inno_time, inno_additions, inno_violations) = match (&balanced, arm.inno) {
                (Some((outcome, t, v)), true) => (*t, outcome.additions(), v.clone()),
                _ => (Duration::ZERO, 0, Vec::new()),
            };
            outcomes.push(RunOutcome {
                arm,
                accuracy,
                accuracy_never_labeled,
                inno_additions,
                final_counts: state.true_counts().to_vec(),
                runtime: split_time + inno_time + propagated.elapsed + eval_time,
                inno_time,
                inno_violations,
                harmonic_residual: propagated.residual,
            });
        }
        Ok(outcomes)
    }

    /// Accuracy over the initially unlabeled pool (INNO picks scored by their
    /// assigned class) and over the part of it INNO left unlabeled.
    fn evaluate(&self, pool: &[usize], state: &LabelState, scores: &ScoreMatrix) -> Result<(f64, f64)> {
        let predicted = predict(scores);
        let truth = self.dataset.labels();
        let c = self.dataset.class_count();
        let pred_all: Vec<usize> = pool
            .iter()
            .map(|&i| state.assignment()[i].unwrap_or(predicted[i]))
            .collect();
        let true_all: Vec<usize> = pool.iter().map(|&i| truth[i]).collect();
        let never: Vec<usize> = pool.iter().copied().filter(|&i| !state.is_labeled(i)).collect();
        let pred_never: Vec<usize> = never.iter().map(|&i| predicted[i]).collect();
        let true_never: Vec<usize> = never.iter().map(|&i| truth[i]).collect();
        Ok((
            overall_accuracy(&confusion(&pred_all, &true_all, c)?)?,
            overall_accuracy(&confusion(&pred_never, &true_never, c)?)?,
        ))
    }

    /// Every arm over `runs` repetitions at one counts vector.
    pub fn evaluate_point(&self, counts: &[usize], sweep_value: f64) -> Result<Vec<ResultRow>> {
        let stop = self.resolve_stop(counts)?;
        self.evaluate_point_with(counts, sweep_value, stop)
    }

    fn evaluate_point_with(&self, counts: &[usize], sweep_value: f64, stop: StopParameter) -> Result<Vec<ResultRow>> {
        let per_run: Vec<Vec<RunOutcome>> = (0..self.config.runs)
            .into_par_iter()
            .map(|run| self.run_arms_with(&self.config.arms, counts, run, stop))
            .collect::<Result<_>>()?;
        self.config
            .arms
            .iter()
            .enumerate()
            .map(|(a, &arm)| {
                let outcomes: Vec<&RunOutcome> = per_run.iter().map(|r| &r[a]).collect();
                ResultRow::aggregate(arm, counts, sweep_value, &outcomes, self.config.record_timing)
            })
            .collect()
    }
}

/// Aggregate of one arm at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub counts: Vec<usize>,
    pub var_r_cminus1: f64,
    pub var_r_c: f64,
    pub ratio_max_min: f64,
    pub arm: Arm,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_accuracy_never_labeled: f64,
    pub mean_inno_additions: f64,
    pub mean_runtime_ms: f64,
    /// Per-class labeled counts after INNO, averaged over runs.
    pub mean_final_counts: Vec<f64>,
    /// Runs whose INNO audit reported a violation.
    pub inno_violation_runs: usize,
    /// Largest harmonic residual / max degree seen (GFHF arms).
    pub max_harmonic_residual: Option<f64>,
    /// Per-run accuracies in run order.
    pub accuracies: Vec<f64>,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sum::<f64>() / n
}

impl ResultRow {
    fn aggregate(arm: Arm, counts: &[usize], sweep_value: f64, runs: &[&RunOutcome], timing: bool) -> Result<Self> {
        let accuracies: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let mean_accuracy = mean(accuracies.iter().copied());
        let std_accuracy = if accuracies.len() > 1 {
            let ss: f64 = accuracies.iter().map(|a| (a - mean_accuracy).powi(2)).sum();
            (ss / (accuracies.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        let max = counts.iter().copied().max().unwrap_or(0) as f64;
        let min = counts.iter().copied().min().unwrap_or(0) as f64;
        let c = counts.len();
        Ok(Self {
            sweep_value,
            counts: counts.to_vec(),
            var_r_cminus1: imbalance_variance(counts, VarianceDivisor::ClassesMinusOne)?,
            var_r_c: imbalance_variance(counts, VarianceDivisor::Classes)?,
            ratio_max_min: max / min,
            arm,
            mean_accuracy,
            std_accuracy,
            mean_accuracy_never_labeled: mean(runs.iter().map(|r| r.accuracy_never_labeled)),
            mean_inno_additions: mean(runs.iter().map(|r| r.inno_additions as f64)),
            mean_runtime_ms: if timing {
                mean(runs.iter().map(|r| r.runtime.as_secs_f64() * 1e3))
            } else {
                0.0
            },
            mean_final_counts: (0..c)
                .map(|j| mean(runs.iter().map(|r| r.final_counts[j] as f64)))
                .collect(),
            inno_violation_runs: runs.iter().filter(|r| !r.inno_violations.is_empty()).count(),
            max_harmonic_residual: runs.iter().filter_map(|r| r.harmonic_residual).reduce(f64::max),
            accuracies,
        })
    }
}

/// Imbalance sweep over the configured schedule, ordered by increasing
/// initial dispersion (the configured divisor).
pub fn sweep_imbalance(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let experiment = Experiment::prepare(config.clone())?;
    let mut points: Vec<(f64, Vec<usize>)> = config
        .schedule()
        .into_iter()
        .map(|counts| Ok((imbalance_variance(&counts, config.divisor)?, counts)))
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rows = Vec::new();
    for (var, counts) in points {
        rows.extend(experiment.evaluate_point(&counts, var)?);
    }
    Ok(rows)
}

fn sweep_counts(config: &ExperimentConfig) -> Vec<usize> {
    config
        .counts
        .clone()
        .unwrap_or_else(|| fixed_sweep_counts(&config.dataset))
}

/// One row per arm and neighbor count, at fixed counts.
pub fn sweep_k(config: &ExperimentConfig, k_values: &[usize]) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let counts = sweep_counts(config);
    let dataset = config.dataset.load(&config.data_dir, config.base_seed)?;
    let mut rows = Vec::new();
    for &k in k_values {
        let experiment = Experiment::with_dataset(ExperimentConfig { k, ..config.clone() }, dataset.clone())?;
        rows.extend(experiment.evaluate_point(&counts, k as f64)?);
    }
    Ok(rows)
}

/// One row per arm and stop parameter, at fixed counts; input order kept.
pub fn sweep_s(config: &ExperimentConfig, s_values: &[f64]) -> Result<Vec<ResultRow>> {
    let counts = sweep_counts(config);
    let experiment = Experiment::prepare(config.clone())?;
    let mut rows = Vec::new();
    for &s in s_values {
        rows.extend(experiment.evaluate_point_with(&counts, s, StopParameter::new(s)?)?);
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "sweep_value,counts,var_r_cminus1,var_r_c,ratio_max_min,method,inno,mean_accuracy,\
std_accuracy,mean_accuracy_never_labeled,mean_inno_additions,mean_runtime_ms";

/// `%.6g`-style formatting: six significant digits, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        format!("{}e{exp}", trim(mantissa))
    } else {
        trim(&format!("{:.*}", (5 - exp) as usize, x))
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let counts: Vec<String> = r.counts.iter().map(ToString::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            format_sig6(r.sweep_value),
            counts.join(";"),
            format_sig6(r.var_r_cminus1),
            format_sig6(r.var_r_c),
            format_sig6(r.ratio_max_min),
            r.arm.method.label(),
            r.arm.inno,
            format_sig6(r.mean_accuracy),
            format_sig6(r.std_accuracy),
            format_sig6(r.mean_accuracy_never_labeled),
            format_sig6(r.mean_inno_additions),
            format_sig6(r.mean_runtime_ms),
        )?;
    }
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    write_csv(rows, &mut out).map_err(io)?;
    out.flush().map_err(io)
}
