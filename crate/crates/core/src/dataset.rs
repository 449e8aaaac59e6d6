//! Datasets, loaders and seeded labeled/unlabeled splits.
//!
//! All randomness goes through [`seeded_rng`] (ChaCha8 seeded from a `u64`),
//! so every sampling routine here is a pure function of its inputs and seed.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Side length of an MNIST digit image.
pub const MNIST_SIDE: usize = 28;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// The PRNG used by every sampling routine in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A dense feature matrix (row-major) with integer class labels in `0..class_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("feature dimension must be at least 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::Data(format!(
                "{} feature values do not form {} rows of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if class_count < 2 {
            return Err(Error::Data(format!("need at least 2 classes, found {class_count}")));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite feature value in row {}", pos / dim)));
        }
        let mut seen = vec![false; class_count];
        for (i, &y) in labels.iter().enumerate() {
            if y >= class_count {
                return Err(Error::Data(format!("row {i}: label {y} outside 0..{class_count}")));
            }
            seen[y] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Data(format!("class {missing} has no samples")));
        }
        Ok(Self {
            name: name.into(),
            features,
            dim,
            labels,
            class_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Row-major feature storage, `len() * dim()` values.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count];
        for &y in &self.labels {
            sizes[y] += 1;
        }
        sizes
    }

    /// Sample indices of each class, in dataset order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.class_count];
        for (i, &y) in self.labels.iter().enumerate() {
            members[y].push(i);
        }
        members
    }

    /// Keeps only samples whose label is in `classes`, relabelled to their
    /// position in that list (e.g. digits 5..=9 become classes 0..=4).
    pub fn restrict_classes(&self, classes: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let mut remap = vec![None; self.class_count];
        for (new, &old) in classes.iter().enumerate() {
            if old >= self.class_count {
                return Err(Error::Config(format!("class {old} does not exist in {}", self.name)));
            }
            remap[old] = Some(new);
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (i, &y) in self.labels.iter().enumerate() {
            if let Some(new) = remap[y] {
                features.extend_from_slice(self.row(i));
                labels.push(new);
            }
        }
        Dataset::new(name, features, self.dim, labels, classes.len())
    }

    /// Appends the rows of `other`; both must share dimension and class count.
    pub fn concat(&self, other: &Dataset, name: impl Into<String>) -> Result<Dataset> {
        if self.dim != other.dim {
            return Err(Error::Data(format!(
                "cannot concatenate dimension {} with dimension {}",
                self.dim, other.dim
            )));
        }
        let mut features = self.features.clone();
        features.extend_from_slice(&other.features);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::new(
            name,
            features,
            self.dim,
            labels,
            self.class_count.max(other.class_count),
        )
    }

    fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(self.name.clone(), features, self.dim, labels, self.class_count)
    }
}

/// Which CSV column carries the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
    Last,
}

/// Mapping from label text to class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap(Vec<(String, usize)>);

impl ClassMap {
    pub fn new<S: Into<String>>(pairs: impl IntoIterator<Item = (S, usize)>) -> Self {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn iris() -> Self {
        Self::new([("setosa", 0), ("versicolor", 1), ("virginica", 2)])
    }

    pub fn ionosphere() -> Self {
        Self::new([("g", 0), ("b", 1)])
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.0.iter().find(|(k, _)| k == label).map(|&(_, v)| v)
    }
}

/// Reads a comma-separated file of numeric features plus one label field.
///
/// A first row with no numeric field is taken as a header.
pub fn load_csv_dataset(path: &Path, label_column: &LabelColumn, class_map: &ClassMap) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(i + 1, e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push((i + 1, rec));
    }
    if records.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }

    let first = &records[0].1;
    let has_header = first.iter().all(|f| f.parse::<f64>().is_err());
    let header = if has_header { Some(records.remove(0).1) } else { None };
    let arity = records
        .first()
        .map(|(_, r)| r.len())
        .or(header.as_ref().map(|h| h.len()))
        .unwrap_or(0);
    if arity < 2 {
        return Err(Error::Data(format!(
            "{}: need at least one feature column and a label column",
            path.display()
        )));
    }

    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < arity => *i,
        LabelColumn::Index(i) => return Err(Error::Config(format!("label column {i} out of range (arity {arity})"))),
        LabelColumn::Last => arity - 1,
        LabelColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|f| f == name))
            .ok_or_else(|| Error::Config(format!("no label column named {name:?}")))?,
    };

    let mut features = Vec::with_capacity(records.len() * (arity - 1));
    let mut labels = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        if rec.len() != arity {
            return Err(parse_err(
                *line,
                format!("expected {arity} fields, found {}", rec.len()),
            ));
        }
        for (j, field) in rec.iter().enumerate() {
            if j == label_idx {
                let class = class_map
                    .get(field)
                    .ok_or_else(|| parse_err(*line, format!("unmapped label {field:?}")))?;
                labels.push(class);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(*line, format!("non-numeric feature {field:?}")))?;
                features.push(v);
            }
        }
    }

    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::Data(format!("{}: fewer than 2 classes present", path.display())));
    }
    let class_count = distinct.iter().next_back().map_or(0, |m| m + 1);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, features, arity - 1, labels, class_count)
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Option<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an IDX image/label file pair. Pixels become features unchanged (0..=255).
pub fn load_idx_mnist(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = read_file(images_path)?;
    let labels = read_file(labels_path)?;
    let short = |p: &Path| Error::Data(format!("{}: truncated IDX header", p.display()));

    let magic = read_be_u32(&images, 0).ok_or_else(|| short(images_path))?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "{}: bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}",
            images_path.display()
        )));
    }
    let count = read_be_u32(&images, 4).ok_or_else(|| short(images_path))? as usize;
    let rows = read_be_u32(&images, 8).ok_or_else(|| short(images_path))? as usize;
    let cols = read_be_u32(&images, 12).ok_or_else(|| short(images_path))? as usize;
    if rows != MNIST_SIDE || cols != MNIST_SIDE {
        return Err(Error::Data(format!(
            "{}: image dims {rows}x{cols}, expected {MNIST_SIDE}x{MNIST_SIDE}",
            images_path.display()
        )));
    }
    let dim = rows * cols;
    if images.len() - 16 != count * dim {
        return Err(Error::Data(format!(
            "{}: header declares {count} images but payload has {} bytes",
            images_path.display(),
            images.len() - 16
        )));
    }

    let magic = read_be_u32(&labels, 0).ok_or_else(|| short(labels_path))?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Data(format!(
            "{}: bad magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}",
            labels_path.display()
        )));
    }
    let label_count = read_be_u32(&labels, 4).ok_or_else(|| short(labels_path))? as usize;
    if label_count != count {
        return Err(Error::Data(format!(
            "label count {label_count} does not match image count {count}"
        )));
    }
    if labels.len() - 8 != count {
        return Err(Error::Data(format!(
            "{}: header declares {count} labels but payload has {} bytes",
            labels_path.display(),
            labels.len() - 8
        )));
    }

    let features: Vec<f64> = images[16..].iter().map(|&p| f64::from(p)).collect();
    let labels: Vec<usize> = labels[8..].iter().map(|&y| usize::from(y)).collect();
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new("mnist", features, dim, labels, class_count)
}

/// Draws exactly `per_class` samples of every class without replacement.
/// The result keeps dataset order.
pub fn subsample_per_class(dataset: &Dataset, per_class: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seeded_rng(seed);
    let mut chosen = Vec::with_capacity(per_class * dataset.class_count());
    for (class, members) in dataset.class_members().iter().enumerate() {
        if per_class > members.len() {
            return Err(Error::Config(format!(
                "requested {per_class} samples of class {class}, only {} available",
                members.len()
            )));
        }
        chosen.extend(
            index::sample(&mut rng, members.len(), per_class)
                .into_iter()
                .map(|k| members[k]),
        );
    }
    chosen.sort_unstable();
    dataset.select(&chosen)
}

/// Two interleaving half circles: class 0 on the upper unit arc, class 1 on the
/// mirrored arc shifted to `(1 - cos t, 0.5 - sin t)`, plus Gaussian jitter.
pub fn make_two_moons(n_per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::Config("two-moons needs at least one point per class".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!(
            "noise must be a nonnegative number, got {noise}"
        )));
    }
    let step = if n_per_class > 1 {
        std::f64::consts::PI / (n_per_class - 1) as f64
    } else {
        0.0
    };
    let mut features = Vec::with_capacity(4 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for i in 0..n_per_class {
        let t = step * i as f64;
        features.extend_from_slice(&[t.cos(), t.sin()]);
        labels.push(0);
    }
    for i in 0..n_per_class {
        let t = step * i as f64;
        features.extend_from_slice(&[1.0 - t.cos(), 0.5 - t.sin()]);
        labels.push(1);
    }
    if noise > 0.0 {
        let mut rng = seeded_rng(seed);
        let jitter = Normal::new(0.0, noise).map_err(|e| Error::Config(e.to_string()))?;
        for v in &mut features {
            *v += jitter.sample(&mut rng);
        }
    }
    Dataset::new("two-moons", features, 2, labels, 2)
}

/// Partition of sample indices into labeled and unlabeled sets, both sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSplit {
    pub labeled_indices: Vec<usize>,
    pub unlabeled_indices: Vec<usize>,
    pub seed: u64,
}

impl LabeledSplit {
    /// Labeled count per class.
    pub fn counts(&self, dataset: &Dataset) -> Vec<usize> {
        let mut counts = vec![0; dataset.class_count()];
        for &i in &self.labeled_indices {
            counts[dataset.labels()[i]] += 1;
        }
        counts
    }
}

/// Labels exactly `counts[j]` samples of each class `j`, chosen uniformly per class.
pub fn sample_labeled_split(dataset: &Dataset, counts: &[usize], seed: u64) -> Result<LabeledSplit> {
    let c = dataset.class_count();
    if counts.len() != c {
        return Err(Error::Config(format!(
            "counts vector has {} entries for {c} classes",
            counts.len()
        )));
    }
    let members = dataset.class_members();
    for (j, (&want, have)) in counts.iter().zip(&members).enumerate() {
        if want == 0 {
            return Err(Error::Config(format!("class {j} needs at least one labeled sample")));
        }
        if want > have.len() {
            return Err(Error::Config(format!(
                "requested {want} labeled samples of class {j}, only {} available",
                have.len()
            )));
        }
    }

    let mut rng = seeded_rng(seed);
    let mut is_labeled = vec![false; dataset.len()];
    for (&want, have) in counts.iter().zip(&members) {
        for k in index::sample(&mut rng, have.len(), want) {
            is_labeled[have[k]] = true;
        }
    }
    let (labeled_indices, unlabeled_indices) = (0..dataset.len()).partition(|&i| is_labeled[i]);
    Ok(LabeledSplit {
        labeled_indices,
        unlabeled_indices,
        seed,
    })
}
