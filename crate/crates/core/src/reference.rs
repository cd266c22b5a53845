//! Double-precision reference for the whole chain, and the comparison
//! between a fixed-point run and the reference.
//!
//! The filter stages are written here from the difference equations over
//! whole `f64` arrays; detection and feature extraction reuse the generic
//! code with `f64` levels and the same [`RunConfig`].

use thiserror::Error;

use crate::analysis::{analyze, Analysis};
use crate::config::RunConfig;
use crate::detect::DetectError;
use crate::fxp::FxpValue;
use crate::stages::PipelineTap;

pub type ReferenceRun = Analysis<f64>;
pub type FixedRun = Analysis<FxpValue>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("empty signal")]
    Empty,
    #[error("non-finite sample {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("runs differ in length: fixed {fixed}, reference {reference}")]
    LengthMismatch { fixed: usize, reference: usize },
    #[error(transparent)]
    Detect(#[from] DetectError),
}

fn at(x: &[f64], n: usize, k: usize) -> f64 {
    if n >= k {
        x[n - k]
    } else {
        0.0
    }
}

pub fn lowpass(x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        y[n] = 2.0 * at(&y, n, 1) - at(&y, n, 2) + x[n] - 2.0 * at(x, n, 6) + at(x, n, 12);
    }
    y
}

pub fn highpass(x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        y[n] = at(&y, n, 1) - x[n] / 32.0 + at(x, n, 16) - at(x, n, 17) + at(x, n, 32) / 32.0;
    }
    y
}

pub fn derivative(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| (2.0 * x[n] + at(x, n, 1) - at(x, n, 3) - 2.0 * at(x, n, 4)) / 8.0)
        .collect()
}

pub fn square(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

pub fn integrate(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| (1..=32).map(|i| at(x, n, i)).sum::<f64>() / 32.0)
        .collect()
}

/// All five stages over `signal`, one tap per sample.
pub fn reference_taps(signal: &[f64]) -> Vec<PipelineTap<f64>> {
    let lp = lowpass(signal);
    let sf = highpass(&lp);
    let d = derivative(&sf);
    let sq = square(&d);
    let si = integrate(&sq);
    (0..signal.len())
        .map(|n| PipelineTap {
            index: n,
            raw_in: signal[n],
            lowpass: lp[n],
            sf: sf[n],
            derivative: d[n],
            squared: sq[n],
            si: si[n],
        })
        .collect()
}

pub fn run_reference(signal: &[f64], config: &RunConfig) -> Result<ReferenceRun, ReferenceError> {
    if signal.is_empty() {
        return Err(ReferenceError::Empty);
    }
    if let Some((index, &value)) = signal.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(ReferenceError::NonFinite { index, value });
    }
    Ok(analyze(reference_taps(signal), config)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest acceptable per-sample deviation of any stage, in real units.
    pub stage: f64,
    /// Beats closer than this many samples count as the same beat.
    pub beat_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stage: (-10.0f64).exp2(),
            beat_samples: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageDeviation {
    pub raw_in: f64,
    pub lowpass: f64,
    pub sf: f64,
    pub derivative: f64,
    pub squared: f64,
    pub si: f64,
}

impl StageDeviation {
    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("raw", self.raw_in),
            ("lowpass", self.lowpass),
            ("sf", self.sf),
            ("derivative", self.derivative),
            ("squared", self.squared),
            ("si", self.si),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub tolerances: Tolerances,
    pub samples: usize,
    pub deviation: StageDeviation,
    /// Fixed minus reference R-peak index for every matched beat.
    pub beat_deltas: Vec<i64>,
    pub fixed_beats: usize,
    pub reference_beats: usize,
    pub only_fixed: usize,
    pub only_reference: usize,
}

impl ComparisonReport {
    pub fn stages_within_tolerance(&self) -> bool {
        self.deviation.max() < self.tolerances.stage
    }

    pub fn beats_agree(&self) -> bool {
        self.only_fixed == 0 && self.only_reference == 0
    }

    pub fn passes(&self) -> bool {
        self.stages_within_tolerance() && self.beats_agree()
    }
}

pub fn compare_runs(
    fixed: &FixedRun,
    reference: &ReferenceRun,
    tolerances: Tolerances,
) -> Result<ComparisonReport, ReferenceError> {
    if fixed.taps.len() != reference.taps.len() {
        return Err(ReferenceError::LengthMismatch {
            fixed: fixed.taps.len(),
            reference: reference.taps.len(),
        });
    }
    let mut dev = StageDeviation::default();
    for (f, r) in fixed.taps.iter().zip(&reference.taps) {
        let d = |a: FxpValue, b: f64| (a.to_real() - b).abs();
        dev.raw_in = dev.raw_in.max(d(f.raw_in, r.raw_in));
        dev.lowpass = dev.lowpass.max(d(f.lowpass, r.lowpass));
        dev.sf = dev.sf.max(d(f.sf, r.sf));
        dev.derivative = dev.derivative.max(d(f.derivative, r.derivative));
        dev.squared = dev.squared.max(d(f.squared, r.squared));
        dev.si = dev.si.max(d(f.si, r.si));
    }

    let fixed_idx = fixed.beat_indices();
    let ref_idx = reference.beat_indices();
    let pairs = crate::score::match_indices(&fixed_idx, &ref_idx, tolerances.beat_samples);
    let beat_deltas = pairs
        .iter()
        .map(|&(f, r)| fixed_idx[f] as i64 - ref_idx[r] as i64)
        .collect();
    Ok(ComparisonReport {
        tolerances,
        samples: fixed.taps.len(),
        deviation: dev,
        beat_deltas,
        fixed_beats: fixed_idx.len(),
        reference_beats: ref_idx.len(),
        only_fixed: fixed_idx.len() - pairs.len(),
        only_reference: ref_idx.len() - pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        let cfg = RunConfig::default();
        assert_eq!(run_reference(&[], &cfg).unwrap_err(), ReferenceError::Empty);
        let mut sig = vec![0.0; 1000];
        sig[17] = f64::NAN;
        assert!(matches!(
            run_reference(&sig, &cfg),
            Err(ReferenceError::NonFinite { index: 17, .. })
        ));
    }

    #[test]
    fn zero_signal() {
        let run = run_reference(&vec![0.0; 1000], &RunConfig::default()).unwrap();
        assert!(run.beats.is_empty());
        assert!(run.taps.iter().all(|t| t.si == 0.0 && t.sf == 0.0));
    }

    #[test]
    fn short_signal_is_insufficient() {
        let err = run_reference(&vec![0.0; 100], &RunConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            ReferenceError::Detect(DetectError::InsufficientSignal { .. })
        ));
    }
}
