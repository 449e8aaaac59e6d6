//! Symmetrized kNN affinity graphs with RBF weights and their Laplacians.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Construction parameters of a kNN graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnParams {
    pub k: usize,
    pub sigma: f64,
}

/// Undirected weighted graph stored as sorted adjacency lists.
///
/// Every vertex's list is sorted by neighbor index and holds only nonzero
/// weights. The weight of `{i, j}` is computed once and written to both
/// lists, so `weight(i, j) == weight(j, i)` holds bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    params: Option<KnnParams>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// `exp(-d2 / sigma^2)` for a precomputed squared distance.
fn rbf_from_sq_dist(d2: f64, sigma: f64) -> f64 {
    (-d2 / (sigma * sigma)).exp()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("sigma must be positive and finite, got {sigma}")))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// RBF similarity `exp(-|x_i - x_j|^2 / sigma^2)`, in `(0, 1]` barring underflow.
pub fn rbf_weight(x_i: &[f64], x_j: &[f64], sigma: f64) -> Result<f64> {
    if x_i.len() != x_j.len() {
        return Err(Error::Config(format!(
            "dimension mismatch: {} vs {}",
            x_i.len(),
            x_j.len()
        )));
    }
    check_sigma(sigma)?;
    Ok(rbf_from_sq_dist(sq_dist(x_i, x_j), sigma))
}

/// Builds the union-symmetrized kNN graph over the rows of `features`
/// (row-major, `dim` columns). Distance ties at the k-th neighbor go to the
/// lower vertex index; self-loops are never added.
pub fn build_knn_graph(features: &[f64], dim: usize, k: usize, sigma: f64) -> Result<Graph> {
    if dim == 0 || !features.len().is_multiple_of(dim) {
        return Err(Error::Data(format!(
            "{} values cannot be split into rows of dimension {dim}",
            features.len()
        )));
    }
    let n = features.len() / dim;
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "k must lie in 1..={}, got {k}",
            n.saturating_sub(1)
        )));
    }
    check_sigma(sigma)?;
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature value".into()));
    }

    let row = |i: usize| &features[i * dim..(i + 1) * dim];

    // Upper triangle only; dist(i, j) for i > j is read back from row j.
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| sq_dist(row(i), row(j))).collect())
        .collect();
    let dist = |i: usize, j: usize| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        upper[a][b - a - 1]
    };

    let mut edges = BTreeSet::new();
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)));
        let by_dist_then_index = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, by_dist_then_index);
        }
        for &(_, j) in &candidates[..k] {
            edges.insert((i.min(j), i.max(j)));
        }
    }

    let mut adjacency = vec![Vec::new(); n];
    for &(i, j) in &edges {
        let w = rbf_from_sq_dist(dist(i, j), sigma);
        if w == 0.0 {
            return Err(Error::Numerical(format!(
                "RBF weight between {i} and {j} underflows to zero; sigma {sigma} is too small"
            )));
        }
        adjacency[i].push((j, w));
        adjacency[j].push((i, w));
    }
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&(j, _)| j);
    }
    Ok(Graph {
        params: Some(KnnParams { k, sigma }),
        adjacency,
    })
}

impl Graph {
    /// Wraps an explicit symmetric weight matrix. Zero-degree vertices are
    /// allowed here (they are rejected later by [`laplacians`]).
    pub fn from_dense_weights(weights: &[Vec<f64>]) -> Result<Graph> {
        let n = weights.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Data(format!(
                    "weight row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0.0 {
                return Err(Error::Data(format!("self-loop weight at vertex {i}")));
            }
            for (j, &w) in row.iter().enumerate() {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Data(format!("invalid weight {w} at ({i}, {j})")));
                }
                if w != weights[j][i] {
                    return Err(Error::Data(format!("weights not symmetric at ({i}, {j})")));
                }
                if w > 0.0 {
                    adjacency[i].push((j, w));
                }
            }
        }
        Ok(Graph {
            params: None,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// kNN parameters, absent for graphs imported from a weight matrix.
    pub fn params(&self) -> Option<KnnParams> {
        self.params
    }

    /// `(neighbor, weight)` pairs sorted by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let list = &self.adjacency[i];
        list.binary_search_by_key(&j, |&(v, _)| v)
            .map_or(0.0, |pos| list[pos].1)
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees().into_iter().fold(0.0, f64::max)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn dense_weights(&self) -> Mat<f64> {
        let mut w = Mat::zeros(self.len(), self.len());
        for (i, list) in self.adjacency.iter().enumerate() {
            for &(j, v) in list {
                w[(i, j)] = v;
            }
        }
        w
    }

    /// Sparse rows of `S = D^-1/2 W D^-1/2`. Rows and columns of zero-degree
    /// vertices are empty, i.e. such vertices are treated as isolated.
    pub fn normalized_weights(&self) -> Vec<Vec<(usize, f64)>> {
        let inv_sqrt: Vec<f64> = self
            .degrees()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        self.adjacency
            .iter()
            .enumerate()
            .map(|(i, list)| list.iter().map(|&(j, w)| (j, inv_sqrt[i] * w * inv_sqrt[j])).collect())
            .collect()
    }

    /// Writes `i j w` lines (one per edge, `i < j`).
    pub fn write_coo(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (i, list) in self.adjacency.iter().enumerate() {
            for &(j, w) in list.iter().filter(|&&(j, _)| j > i) {
                writeln!(out, "{i} {j} {w:e}").map_err(|e| Error::io(path, e))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Degree vector, graph Laplacian `D - W` and normalized similarity
/// `D^-1/2 W D^-1/2`, all dense.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub degrees: Vec<f64>,
    pub laplacian: Mat<f64>,
    pub normalized_similarity: Mat<f64>,
}

impl LaplacianBundle {
    /// Normalized Laplacian `I - S`.
    pub fn normalized_laplacian(&self) -> Mat<f64> {
        let n = self.degrees.len();
        Mat::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - self.normalized_similarity[(i, j)]
        })
    }
}

pub fn laplacians(graph: &Graph) -> Result<LaplacianBundle> {
    let n = graph.len();
    let degrees = graph.degrees();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::Numerical(format!("vertex {i} has zero degree")));
    }
    let mut laplacian = Mat::zeros(n, n);
    for i in 0..n {
        laplacian[(i, i)] = degrees[i];
        for &(j, w) in graph.neighbors(i) {
            laplacian[(i, j)] = -w;
        }
    }
    let mut normalized_similarity = Mat::zeros(n, n);
    for (i, row) in graph.normalized_weights().into_iter().enumerate() {
        for (j, s) in row {
            normalized_similarity[(i, j)] = s;
        }
    }
    Ok(LaplacianBundle {
        degrees,
        laplacian,
        normalized_similarity,
    })
}
