use inno_ssl::dataset::seeded_rng;
use inno_ssl::inno::{InnoAction, InnoEvent};
use inno_ssl::{build_knn_graph, Graph, LabelState, StopParameter, VarianceDivisor};
use rand::Rng;

/// Event as `(iteration, class, Some((sample, weight)))` or `None` for saturation.
pub type OracleEvent = (usize, usize, Option<(usize, f64)>);

fn dispersion(counts: &[usize], sample_form: bool) -> f64 {
    let c = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / c;
    let ss: f64 = counts.iter().map(|&r| (r as f64 - mean).powi(2)).sum();
    (ss / if sample_form { c - 1.0 } else { c }).sqrt()
}

/// Dense, loop-by-loop balancing: pick the class with the fewest effective
/// labels, take the heaviest edge from one of its labels to an unlabeled
/// sample with no edge to another class's label, else pin the class count
/// to the current maximum.
pub fn oracle_balance(
    w: &[Vec<f64>],
    seeds: &[Option<usize>],
    c: usize,
    s: f64,
    sample_form: bool,
) -> Vec<OracleEvent> {
    let n = w.len();
    let mut label = seeds.to_vec();
    let mut eff = vec![0usize; c];
    for l in label.iter().flatten() {
        eff[*l] += 1;
    }
    let mut saturated = vec![false; c];
    let mut log = Vec::new();
    let mut iteration = 0;
    while dispersion(&eff, sample_form) > s {
        let mut m = None;
        for j in 0..c {
            if saturated[j] {
                continue;
            }
            if m.is_none_or(|mm: usize| eff[j] < eff[mm]) {
                m = Some(j);
            }
        }
        let Some(m) = m else { break };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if label[i] != Some(m) {
                continue;
            }
            for u in 0..n {
                if w[i][u] <= 0.0 || label[u].is_some() {
                    continue;
                }
                let boundary = (0..n).any(|v| w[u][v] > 0.0 && matches!(label[v], Some(o) if o != m));
                if boundary {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bu, bw)) => w[i][u] > bw || (w[i][u] == bw && u < bu),
                };
                if better {
                    best = Some((u, w[i][u]));
                }
            }
        }
        match best {
            Some((u, weight)) => {
                label[u] = Some(m);
                eff[m] += 1;
                log.push((iteration, m, Some((u, weight))));
            }
            None => {
                eff[m] = *eff.iter().max().unwrap();
                saturated[m] = true;
                log.push((iteration, m, None));
            }
        }
        iteration += 1;
    }
    log
}

pub fn as_oracle_events(log: &[InnoEvent]) -> Vec<OracleEvent> {
    log.iter()
        .map(|e| {
            let action = match e.action {
                InnoAction::Added { sample, weight } => Some((sample, weight)),
                InnoAction::Saturated => None,
            };
            (e.iteration, e.class, action)
        })
        .collect()
}

pub struct RandomInstance {
    pub graph: Graph,
    pub dense: Vec<Vec<f64>>,
    pub state: LabelState,
    pub seeds: Vec<Option<usize>>,
    pub class_count: usize,
    pub stop: StopParameter,
    pub divisor: VarianceDivisor,
}

/// Random planar points, a kNN graph over them and random seed labels.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(6..=50);
    let c = rng.random_range(2..=3);
    let k = rng.random_range(1..=6).min(n - 1);
    let sigma = rng.random_range(0.3..2.0);
    let points: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.0..3.0)).collect();
    let graph = build_knn_graph(&points, 2, k, sigma).unwrap();
    let dense = (0..n).map(|i| (0..n).map(|j| graph.weight(i, j)).collect()).collect();

    let mut seeds = vec![None; n];
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut next = order.into_iter();
    for class in 0..c {
        for _ in 0..rng.random_range(1..=(n / (c + 1)).min(5)) {
            if let Some(i) = next.next() {
                seeds[i] = Some(class);
            }
        }
    }
    let s = if rng.random_bool(0.5) {
        0.0
    } else {
        rng.random_range(0.0..2.0)
    };
    let divisor = if rng.random_bool(0.7) {
        VarianceDivisor::ClassesMinusOne
    } else {
        VarianceDivisor::Classes
    };
    let state = LabelState::from_labels(n, c, seeds.iter().enumerate().filter_map(|(i, l)| l.map(|l| (i, l)))).unwrap();
    RandomInstance {
        graph,
        dense,
        state,
        seeds,
        class_count: c,
        stop: StopParameter::new(s).unwrap(),
        divisor,
    }
}

impl RandomInstance {
    pub fn oracle(&self) -> Vec<OracleEvent> {
        oracle_balance(
            &self.dense,
            &self.seeds,
            self.class_count,
            self.stop.value(),
            self.divisor == VarianceDivisor::ClassesMinusOne,
        )
    }
}
