//! Confusion matrix and overall accuracy.

use crate::error::{Error, Result};

/// `counts[predicted][true]`. For two classes with class 0 as positive:
/// TP = `[0][0]`, FP = `[0][1]`, FN = `[1][0]`, TN = `[1][1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
    pub total: usize,
}

impl ConfusionMatrix {
    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion(pred: &[usize], truth: &[usize], class_count: usize) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::Config(format!(
            "{} predictions for {} ground-truth labels",
            pred.len(),
            truth.len()
        )));
    }
    let mut counts = vec![vec![0; class_count]; class_count];
    for (i, (&p, &t)) in pred.iter().zip(truth).enumerate() {
        if p >= class_count || t >= class_count {
            return Err(Error::Config(format!(
                "sample {i}: class ({p}, {t}) outside 0..{class_count}"
            )));
        }
        counts[p][t] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        total: pred.len(),
    })
}

/// `trace / total`, i.e. `(TP + TN) / (p + n)` in the binary case.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total == 0 {
        return Err(Error::Numerical("accuracy of an empty confusion matrix".into()));
    }
    Ok(cm.trace() as f64 / cm.total as f64)
}
