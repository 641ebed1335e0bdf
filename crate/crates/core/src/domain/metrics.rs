use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("predictions ({predictions}) and labels ({labels}) differ in length")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no predictions to evaluate")]
    EmptyInput,
}

/// Binary classification scores, "acceptable" being the positive class.
///
/// Ratios with a zero denominator are reported as 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalMetrics {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        EvalMetrics { accuracy: ratio(tp + tn, tp + fp + tn + fn_), precision, recall, f1, tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn compute_metrics(predictions: &[bool], labels: &[bool]) -> Result<EvalMetrics, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&predicted, &actual) in predictions.iter().zip(labels) {
        match (predicted, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(EvalMetrics::from_counts(tp, fp, tn, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Hand-counted 10-item fixture: tp=3, fp=1, tn=4, fn=2.
    const PREDICTIONS: [bool; 10] = [true, true, true, true, false, false, false, false, false, false];
    const LABELS: [bool; 10] = [true, true, true, false, false, false, false, false, true, true];

    #[test]
    fn hand_counted_confusion_matrix() {
        let m = compute_metrics(&PREDICTIONS, &LABELS).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (3, 1, 4, 2));
        assert!((m.accuracy - 0.7).abs() < 1e-12);
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.6).abs() < 1e-12);
        assert!((m.f1 - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn perfect_classifier() {
        let labels = [true, false, true, true, false];
        let m = compute_metrics(&labels, &labels).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn degenerate_denominators_are_zero() {
        let m = compute_metrics(&[false; 4], &[true; 4]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn errors() {
        assert_eq!(
            compute_metrics(&[true], &[true, false]),
            Err(MetricsError::LengthMismatch { predictions: 1, labels: 2 })
        );
        assert_eq!(compute_metrics(&[], &[]), Err(MetricsError::EmptyInput));
    }

    proptest! {
        #[test]
        fn permutation_invariant(pairs in prop::collection::vec(any::<(bool, bool)>(), 1..64), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(bool, bool)]| -> (Vec<bool>, Vec<bool>) { v.iter().copied().unzip() };
            let (p1, l1) = split(&pairs);
            let (p2, l2) = split(&shuffled);
            prop_assert_eq!(compute_metrics(&p1, &l1).unwrap(), compute_metrics(&p2, &l2).unwrap());
        }
    }
}
