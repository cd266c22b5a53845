//! Beat matching against reference annotations.

/// Greedy one-to-one matching: candidate pairs within `window` samples are
/// taken in order of increasing distance (ties by earlier detection), each
/// index used at most once. Returns `(detected, reference)` position pairs
/// sorted by detection.
pub fn match_indices(
    detected: &[usize],
    reference: &[usize],
    window: usize,
) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (i, &d) in detected.iter().enumerate() {
        let lo = reference.partition_point(|&r| r + window < d);
        for (j, &r) in reference.iter().enumerate().skip(lo) {
            if r > d + window {
                break;
            }
            candidates.push((d.abs_diff(r), i, j));
        }
    }
    candidates.sort_unstable();
    let mut det_used = vec![false; detected.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !det_used[i] && !ref_used[j] {
            det_used[i] = true;
            ref_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub match_window_samples: usize,
}

impl BenchReport {
    /// TP / (TP + FN); 1 when there is nothing to find.
    pub fn sensitivity(&self) -> f64 {
        ratio(
            self.true_positives,
            self.true_positives + self.false_negatives,
        )
    }

    /// TP / (TP + FP); 1 when nothing was detected.
    pub fn positive_predictivity(&self) -> f64 {
        ratio(
            self.true_positives,
            self.true_positives + self.false_positives,
        )
    }

    pub fn meets(&self, min_sensitivity: f64, min_ppv: f64) -> bool {
        self.sensitivity() >= min_sensitivity && self.positive_predictivity() >= min_ppv
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `detected` beat indices against sorted `annotations`.
pub fn bench(detected: &[usize], annotations: &[usize], window: usize) -> BenchReport {
    let tp = match_indices(detected, annotations, window).len();
    BenchReport {
        true_positives: tp,
        false_positives: detected.len() - tp,
        false_negatives: annotations.len() - tp,
        match_window_samples: window,
    }
}
