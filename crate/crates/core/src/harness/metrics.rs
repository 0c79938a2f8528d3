use serde::{Deserialize, Serialize};

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(predictions: &[usize], labels: &[usize], n_classes: usize) -> Self {
        assert_eq!(
            predictions.len(),
            labels.len(),
            "predictions and labels differ in length"
        );
        let mut counts = vec![vec![0; n_classes]; n_classes];
        for (&p, &t) in predictions.iter().zip(labels) {
            counts[t][p] += 1;
        }
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|c| self.counts[c][c]).sum()
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy and macro-averaged precision, recall and F1 of one test run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn as_array(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Metrics {
            accuracy: a[0],
            precision: a[1],
            recall: a[2],
            f1: a[3],
        }
    }
}

/// Per-class scores use `0/0 = 0`; F1 is computed per class, then averaged.
pub fn compute_metrics(predictions: &[usize], labels: &[usize], n_classes: usize) -> Metrics {
    let cm = ConfusionMatrix::new(predictions, labels, n_classes);
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut f1 = 0.0;
    for c in 0..n_classes {
        let tp = cm.counts[c][c];
        let predicted: usize = (0..n_classes).map(|t| cm.counts[t][c]).sum();
        let actual: usize = cm.counts[c].iter().sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        precision += p;
        recall += r;
        f1 += if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
    }
    let k = n_classes as f64;
    Metrics {
        accuracy: ratio(cm.trace(), cm.total()),
        precision: precision / k,
        recall: recall / k,
        f1: f1 / k,
    }
}

/// Per-repetition metrics with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub runs: Vec<Metrics>,
    pub mean: Metrics,
    /// Sample (n - 1) deviation; 0 for a single run.
    pub std: Metrics,
}

impl MetricsReport {
    pub fn aggregate(runs: Vec<Metrics>) -> Self {
        assert!(!runs.is_empty(), "no runs to aggregate");
        let n = runs.len() as f64;
        let mut mean = [0.0; 4];
        for m in &runs {
            for (s, v) in mean.iter_mut().zip(m.as_array()) {
                *s += v;
            }
        }
        mean.iter_mut().for_each(|s| *s /= n);
        let mut std = [0.0; 4];
        if runs.len() > 1 {
            for m in &runs {
                for ((s, v), mu) in std.iter_mut().zip(m.as_array()).zip(mean) {
                    *s += (v - mu) * (v - mu);
                }
            }
            std.iter_mut().for_each(|s| *s = (*s / (n - 1.0)).sqrt());
        }
        MetricsReport {
            runs,
            mean: Metrics::from_array(mean),
            std: Metrics::from_array(std),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1, 0];
        let m = compute_metrics(&y, &y, 3);
        assert_eq!(m.as_array(), [1.0; 4]);
    }

    #[test]
    fn single_class_predictions_on_balanced_set() {
        let m = compute_metrics(&[0, 0, 0, 0], &[0, 0, 1, 1], 2);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.precision, 0.25);
    }

    #[test]
    fn single_run_has_zero_std() {
        let r = MetricsReport::aggregate(vec![compute_metrics(&[0, 1], &[0, 0], 2)]);
        assert_eq!(r.std.as_array(), [0.0; 4]);
        assert_eq!(r.mean, r.runs[0]);
    }

    #[test]
    fn sample_standard_deviation() {
        let run = |a| Metrics {
            accuracy: a,
            precision: a,
            recall: a,
            f1: a,
        };
        let r = MetricsReport::aggregate(vec![run(0.8), run(0.9), run(1.0)]);
        assert!((r.mean.accuracy - 0.9).abs() < 1e-15);
        assert!((r.std.accuracy - 0.1).abs() < 1e-12);
    }
}
