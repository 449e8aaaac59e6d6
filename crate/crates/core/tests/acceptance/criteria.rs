//! Acceptance criteria. Each test writes one `ACnn PASS|FAIL` line to stderr
//! (bypassing output capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use super::common;
use inno_ssl::dataset::{sample_labeled_split, seeded_rng};
use inno_ssl::harness::{
    default_data_dir, sweep_imbalance, sweep_k, sweep_s, Arm, DatasetSpec, Experiment, ExperimentConfig, Method,
    ResultRow, StopRule,
};
use inno_ssl::inno::imbalance_variance;
use inno_ssl::propagation::{lgc_iterate, LgcSolver};
use inno_ssl::{
    build_knn_graph, gfhf_propagate, inno_balance, Graph, LabelMatrix, LabelState, StopParameter, VarianceDivisor,
};
use rand::Rng;

const SAMPLE: VarianceDivisor = VarianceDivisor::ClassesMinusOne;

fn report(id: u32, title: &str, pass: bool, started: Instant, detail: String) {
    let line = format!(
        "AC{id:02} {} {title} [{:.1}s]: {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(pass, "{line}");
}

fn row(rows: &[ResultRow], method: Method, inno: bool) -> &ResultRow {
    rows.iter()
        .find(|r| r.arm == Arm { method, inno })
        .expect("arm present")
}

fn config(dataset: DatasetSpec, counts: Option<Vec<usize>>, runs: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(dataset);
    c.counts = counts;
    c.runs = runs;
    c
}

fn iris_skewed() -> ExperimentConfig {
    config(DatasetSpec::Iris, Some(vec![10, 1, 19]), 50)
}

fn ionosphere_skewed() -> ExperimentConfig {
    let mut c = config(DatasetSpec::Ionosphere, Some(vec![21, 2]), 50);
    c.stop = StopRule::MatchClassRatio;
    c
}

fn mnist_skewed() -> ExperimentConfig {
    let mut counts = vec![10; 10];
    counts[1] = 1;
    counts[9] = 19;
    config(DatasetSpec::Mnist10, Some(counts), 10)
}

fn moons_demo() -> ExperimentConfig {
    config(DatasetSpec::TWO_MOONS_DEFAULT, Some(vec![1, 10]), 50)
}

/// Every experiment the suite runs, shared by the criteria that audit them.
struct Suite {
    rows: Vec<(&'static str, Vec<ResultRow>)>,
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let mut ionosphere = config(DatasetSpec::Ionosphere, None, 50);
        ionosphere.stop = StopRule::MatchClassRatio;
        let fixed_iris = config(DatasetSpec::Iris, None, 50);
        let var = imbalance_variance(&[10, 1, 20], SAMPLE).unwrap();
        Suite {
            rows: vec![
                (
                    "iris imbalance sweep",
                    sweep_imbalance(&config(DatasetSpec::Iris, None, 50)).unwrap(),
                ),
                ("ionosphere imbalance sweep", sweep_imbalance(&ionosphere).unwrap()),
                ("iris k sweep", sweep_k(&fixed_iris, &[1, 5, 40]).unwrap()),
                ("iris s sweep", sweep_s(&fixed_iris, &[0.0, var]).unwrap()),
                ("mnist10 skewed", sweep_imbalance(&mnist_skewed()).unwrap()),
                (
                    "two-moons sweep",
                    sweep_imbalance(&config(DatasetSpec::TWO_MOONS_DEFAULT, None, 50)).unwrap(),
                ),
            ],
        }
    })
}

fn rows_at(rows: &[ResultRow], value: f64) -> Vec<ResultRow> {
    rows.iter().filter(|r| r.sweep_value == value).cloned().collect()
}

#[test]
fn ac01_variance_reproduction() {
    let t = Instant::now();
    let a = imbalance_variance(&[10, 1, 20], SAMPLE).unwrap();
    let b = imbalance_variance(&[23, 2], SAMPLE).unwrap();
    report(
        1,
        "dispersion of (10,1,20) and (23,2)",
        (a - 9.50).abs() <= 0.01 && (b - 14.85).abs() <= 0.01,
        t,
        format!("{a:.4} (9.50), {b:.4} (14.85)"),
    );
}

#[test]
fn ac02_balanced_no_op() {
    let t = Instant::now();
    let experiment = Experiment::prepare(config(DatasetSpec::Iris, None, 50)).unwrap();
    let mut mismatches = 0;
    let mut additions = 0;
    for run in 0..50 {
        let outcomes = experiment.run_arms(&[10, 10, 10], run).unwrap();
        let acc = |m, inno| outcomes.iter().find(|o| o.arm == Arm { method: m, inno }).unwrap();
        for m in [Method::Gfhf, Method::Lgc] {
            if acc(m, true).accuracy.to_bits() != acc(m, false).accuracy.to_bits() {
                mismatches += 1;
            }
            additions += acc(m, true).inno_additions;
        }
    }
    report(
        2,
        "balanced IRIS counts leave both methods unchanged",
        mismatches == 0 && additions == 0,
        t,
        format!("50 runs, {mismatches} accuracy mismatches, {additions} additions"),
    );
}

#[test]
fn ac03_iris_imbalance_robustness() {
    let t = Instant::now();
    let rows = sweep_imbalance(&iris_skewed()).unwrap();
    let (g, ig) = (row(&rows, Method::Gfhf, false), row(&rows, Method::Gfhf, true));
    let (l, il) = (row(&rows, Method::Lgc, false), row(&rows, Method::Lgc, true));
    let pass = ig.mean_accuracy >= 0.88
        && il.mean_accuracy >= 0.88
        && ig.mean_accuracy - g.mean_accuracy >= 0.10
        && il.mean_accuracy - l.mean_accuracy >= 0.10;
    report(
        3,
        "IRIS (10,1,19): INNO >= 0.88 and +0.10 over plain",
        pass,
        t,
        format!(
            "inno+gfhf {:.4} vs gfhf {:.4} (gap {:.4}); inno+lgc {:.4} vs lgc {:.4} (gap {:.4})",
            ig.mean_accuracy,
            g.mean_accuracy,
            ig.mean_accuracy - g.mean_accuracy,
            il.mean_accuracy,
            l.mean_accuracy,
            il.mean_accuracy - l.mean_accuracy
        ),
    );
}

#[test]
fn ac04_ionosphere_ordering() {
    let t = Instant::now();
    let rows = sweep_imbalance(&ionosphere_skewed()).unwrap();
    let ig = row(&rows, Method::Gfhf, true).mean_accuracy;
    let cmn = row(&rows, Method::GfhfCmn, false).mean_accuracy;
    let g = row(&rows, Method::Gfhf, false).mean_accuracy;
    report(
        4,
        "IONOSPHERE (21,2): inno+gfhf > gfhf+cmn > gfhf",
        ig > cmn && cmn > g,
        t,
        format!(
            "inno+gfhf {ig:.4}, gfhf+cmn {cmn:.4}, gfhf {g:.4}; mean additions {:.2}",
            row(&rows, Method::Gfhf, true).mean_inno_additions
        ),
    );
}

fn connected(graph: &Graph) -> bool {
    let mut seen = vec![false; graph.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(u, _) in graph.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.iter().all(|&s| s)
}

#[test]
fn ac05_harmonic_and_solver_properties() {
    let t = Instant::now();
    let mut worst_residual: f64 = 0.0;
    let mut instances = 0;
    for (_, rows) in &suite().rows {
        for r in rows.iter().filter(|r| r.arm.method != Method::Lgc) {
            worst_residual = worst_residual.max(r.max_harmonic_residual.expect("GFHF residual recorded"));
            instances += r.accuracies.len();
        }
    }

    let mut rng = seeded_rng(2024);
    let mut graphs = 0;
    let mut worst_gap: f64 = 0.0;
    let mut attempt = 0u64;
    while graphs < 20 {
        attempt += 1;
        let n = rng.random_range(10..=200);
        let c = rng.random_range(2..=4);
        let points: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let graph = build_knn_graph(&points, 2, rng.random_range(3..=8), rng.random_range(0.2..1.0)).unwrap();
        if !connected(&graph) {
            continue;
        }
        let assignment: Vec<Option<usize>> = (0..n)
            .map(|i| {
                if i < c || rng.random_bool(0.2) {
                    Some(i % c)
                } else {
                    None
                }
            })
            .collect();
        let labels = LabelMatrix::from_assignment(&assignment, c).unwrap();
        let alpha = 0.99;
        let closed = LgcSolver::new(&graph, alpha).unwrap().solve(&labels).unwrap();
        let iterated = lgc_iterate(&graph, &labels, alpha, 1e-10, 1_000_000).unwrap();
        assert!(iterated.converged, "graph attempt {attempt}");
        for i in 0..n {
            for j in 0..c {
                worst_gap = worst_gap.max((closed.values[(i, j)] - iterated.scores.values[(i, j)]).abs());
            }
        }
        graphs += 1;
    }
    report(
        5,
        "harmonic residual and LGC closed form vs iteration",
        worst_residual <= 1e-8 && worst_gap <= 1e-6,
        t,
        format!(
            "max residual/maxdeg {worst_residual:.2e} over {instances} GFHF instances; \
             max LGC gap {worst_gap:.2e} over {graphs} connected graphs"
        ),
    );
}

#[test]
fn ac06_inno_oracle_equivalence() {
    let t = Instant::now();
    let mut mismatched = Vec::new();
    let mut events = 0;
    for seed in 0..100 {
        let inst = common::random_instance(10_000 + seed);
        let outcome = inno_balance(&inst.graph, &inst.state, inst.stop, inst.divisor).unwrap();
        let got = common::as_oracle_events(&outcome.log);
        events += got.len();
        if got != inst.oracle() {
            mismatched.push(seed);
        }
    }
    report(
        6,
        "INNO log equals the dense transliteration",
        mismatched.is_empty(),
        t,
        format!("100 instances, {events} logged events, mismatches {mismatched:?}"),
    );
}

#[test]
fn ac07_inno_safety_invariants() {
    let t = Instant::now();
    let mut runs = 0;
    let mut bad = Vec::new();
    for (name, rows) in &suite().rows {
        for r in rows.iter().filter(|r| r.arm.inno) {
            runs += r.accuracies.len();
            if r.inno_violation_runs > 0 {
                bad.push(format!("{name} {:?} {}", r.counts, r.arm));
            }
        }
    }
    report(
        7,
        "INNO logs audit clean",
        bad.is_empty(),
        t,
        format!("{runs} INNO runs audited, violations in {bad:?}"),
    );
}

#[test]
fn ac08_mnist_trend() {
    let t = Instant::now();
    let rows = suite()
        .rows
        .iter()
        .find(|(name, _)| *name == "mnist10 skewed")
        .map(|(_, r)| r.clone())
        .unwrap();
    let gap_l = row(&rows, Method::Lgc, true).mean_accuracy - row(&rows, Method::Lgc, false).mean_accuracy;
    let gap_g = row(&rows, Method::Gfhf, true).mean_accuracy - row(&rows, Method::Gfhf, false).mean_accuracy;
    report(
        8,
        "MNIST 10-class skewed point: INNO gains >= 0.05",
        gap_l >= 0.05 && gap_g >= 0.05,
        t,
        format!(
            "counts {:?}, 10 runs: lgc {:.4} -> {:.4} ({gap_l:+.4}); gfhf {:.4} -> {:.4} ({gap_g:+.4})",
            rows[0].counts,
            row(&rows, Method::Lgc, false).mean_accuracy,
            row(&rows, Method::Lgc, true).mean_accuracy,
            row(&rows, Method::Gfhf, false).mean_accuracy,
            row(&rows, Method::Gfhf, true).mean_accuracy,
        ),
    );
}

#[test]
fn ac09_k_sensitivity() {
    let t = Instant::now();
    let rows = &suite().rows.iter().find(|(n, _)| *n == "iris k sweep").unwrap().1;
    let mut pass = true;
    let mut detail = Vec::new();
    for method in [Method::Gfhf, Method::Lgc] {
        let at = |k: f64| row(&rows_at(rows, k), method, true).mean_accuracy;
        pass &= at(5.0) > at(1.0) && at(5.0) > at(40.0);
        detail.push(format!(
            "inno+{}: k=1 {:.4}, k=5 {:.4}, k=40 {:.4}",
            method.label(),
            at(1.0),
            at(5.0),
            at(40.0)
        ));
    }
    report(9, "IRIS (10,1,20): k=5 beats k=1 and k=40", pass, t, detail.join("; "));
}

#[test]
fn ac10_s_sensitivity() {
    let t = Instant::now();
    let rows = &suite().rows.iter().find(|(n, _)| *n == "iris s sweep").unwrap().1;
    let var = imbalance_variance(&[10, 1, 20], SAMPLE).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for method in [Method::Gfhf, Method::Lgc] {
        let at = |s: f64| row(&rows_at(rows, s), method, true).mean_accuracy;
        pass &= at(0.0) - at(var) >= 0.10;
        detail.push(format!(
            "inno+{}: s=0 {:.4}, s={var:.4} {:.4} (gap {:.4})",
            method.label(),
            at(0.0),
            at(var),
            at(0.0) - at(var)
        ));
    }
    report(
        10,
        "IRIS (10,1,20): s=0 beats s=var(r) by 0.10",
        pass,
        t,
        detail.join("; "),
    );
}

#[test]
fn ac11_two_moons_demo() {
    let t = Instant::now();
    let rows = sweep_imbalance(&moons_demo()).unwrap();
    let g = row(&rows, Method::Gfhf, false).mean_accuracy;
    let ig = row(&rows, Method::Gfhf, true).mean_accuracy;
    report(
        11,
        "two moons, 1 vs 10 labels: gfhf <= 0.75, inno+gfhf >= 0.95",
        g <= 0.75 && ig >= 0.95,
        t,
        format!("gfhf {g:.4}, inno+gfhf {ig:.4} (mean of 50 splits of one seeded instance)"),
    );
}

fn min_time(reps: usize, mut f: impl FnMut()) -> Duration {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn ac12_inno_cost() {
    let t = Instant::now();
    let c = mnist_skewed();
    let dataset = c.dataset.load(&default_data_dir(), c.base_seed).unwrap();
    let counts = c.counts.clone().unwrap();
    let stop = StopParameter::new(0.0).unwrap();

    let start = Instant::now();
    let graph = build_knn_graph(dataset.features(), dataset.dim(), c.k, c.sigma).unwrap();
    let graph_time = start.elapsed();
    let split = sample_labeled_split(&dataset, &counts, 0).unwrap();
    let initial = LabelState::from_split(&dataset, &split).unwrap();
    let start = Instant::now();
    let balanced = inno_balance(&graph, &initial, stop, SAMPLE).unwrap();
    let inno_time = start.elapsed();
    let start = Instant::now();
    let labels = LabelMatrix::from_state(&balanced.state);
    gfhf_propagate(&graph, &labels, &balanced.state.labeled_mask()).unwrap();
    LgcSolver::new(&graph, c.alpha).unwrap().solve(&labels).unwrap();
    let propagate_time = start.elapsed();
    let total = graph_time + inno_time + propagate_time;
    let share = inno_time.as_secs_f64() / total.as_secs_f64();

    // INNO time against r_max, half the classes starting at one label.
    let r_values = [5usize, 10, 20, 40];
    let mut points = Vec::new();
    for &r_max in &r_values {
        let counts: Vec<usize> = (0..10).map(|j| if j % 2 == 0 { r_max } else { 1 }).collect();
        let split = sample_labeled_split(&dataset, &counts, 1).unwrap();
        let initial = LabelState::from_split(&dataset, &split).unwrap();
        let elapsed = min_time(9, || {
            inno_balance(&graph, &initial, stop, SAMPLE).unwrap();
        });
        points.push(((r_max as f64).ln(), elapsed.as_secs_f64().ln()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = points.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    report(
        12,
        "INNO share of pipeline and growth in r_max",
        share <= 0.01 && slope <= 3.3,
        t,
        format!(
            "n=2000: graph {:.1} ms, inno {:.3} ms ({} additions), propagation {:.1} ms, share {:.4}%; \
             log-log slope {slope:.2} over r_max {r_values:?}",
            graph_time.as_secs_f64() * 1e3,
            inno_time.as_secs_f64() * 1e3,
            balanced.additions(),
            propagate_time.as_secs_f64() * 1e3,
            share * 100.0
        ),
    );
}
