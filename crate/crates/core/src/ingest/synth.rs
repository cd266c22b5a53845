//! Synthetic beat trains with known beat positions.
//!
//! Noise comes from a 64-bit LCG (Knuth's MMIX constants):
//!
//! ```text
//! state = state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
//! u     = (state >> 11) / 2^53                                in [0, 1)
//! noise = noise_amplitude * (2u - 1)
//! ```
//!
//! The generator is stepped once per output sample.

use std::f64::consts::PI;

use super::{AnnotationSet, EcgRecord, IngestError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(Self::MULTIPLIER)
            .wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub fs: f64,
    pub bpm: f64,
    pub amplitude: f64,
    pub qrs_width_ms: f64,
    pub duration_s: f64,
    pub noise_amplitude: f64,
    pub seed: u64,
    /// Time of the first lobe center.
    pub first_beat_s: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            fs: 200.0,
            bpm: 60.0,
            amplitude: 1.0,
            qrs_width_ms: 100.0,
            duration_s: 10.0,
            noise_amplitude: 0.0,
            seed: 1,
            first_beat_s: 0.0,
        }
    }
}

/// Raised-cosine lobes centred at `round(first_beat + k * 60 * fs / bpm)`.
pub fn synth_beats(p: &SynthParams) -> Result<(EcgRecord, AnnotationSet), IngestError> {
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if !(positive(p.fs) && positive(p.bpm) && positive(p.qrs_width_ms)) {
        return Err(IngestError::InvalidRecord(format!(
            "synthetic train needs positive fs, bpm and width (got {}, {}, {})",
            p.fs, p.bpm, p.qrs_width_ms
        )));
    }
    if !(p.duration_s >= 0.0
        && p.first_beat_s >= 0.0
        && p.amplitude.is_finite()
        && p.noise_amplitude.is_finite())
    {
        return Err(IngestError::InvalidRecord(
            "bad synthetic train parameters".into(),
        ));
    }
    let n = (p.duration_s * p.fs).round() as usize;
    let period = 60.0 * p.fs / p.bpm;
    let first = p.first_beat_s * p.fs;
    let centers: Vec<usize> = (0..)
        .map(|k| (first + k as f64 * period).round() as usize)
        .take_while(|&c| c < n)
        .collect();

    let width = p.qrs_width_ms * p.fs / 1000.0;
    let half = width / 2.0;
    let mut samples = vec![0.0; n];
    for &c in &centers {
        let lo = (c as f64 - half).ceil().max(0.0) as usize;
        let hi = ((c as f64 + half).floor() as usize).min(n.saturating_sub(1));
        for (t, s) in samples.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let d = t as f64 - c as f64;
            *s += p.amplitude * 0.5 * (1.0 + (2.0 * PI * d / width).cos());
        }
    }
    if p.noise_amplitude != 0.0 {
        let mut rng = Lcg64::new(p.seed);
        for s in &mut samples {
            *s += p.noise_amplitude * (2.0 * rng.next_unit() - 1.0);
        }
    }
    let rec = EcgRecord::new(
        samples,
        p.fs,
        "synthetic",
        format!("synth bpm={} fs={}", p.bpm, p.fs),
    )?;
    Ok((rec, AnnotationSet::new(centers, p.fs)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcg_sequence() {
        let mut g = Lcg64::new(0);
        assert_eq!(g.next_u64(), 1442695040888963407);
        assert_eq!(
            g.next_u64(),
            1442695040888963407u64
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407)
        );
        let mut g = Lcg64::new(42);
        for _ in 0..1000 {
            let u = g.next_unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn sixty_bpm() {
        let (rec, ann) = synth_beats(&SynthParams::default()).unwrap();
        assert_eq!(rec.samples.len(), 2000);
        assert_eq!(ann.indices(), (0..10).map(|k| k * 200).collect::<Vec<_>>());
        for &c in ann.indices() {
            assert_eq!(rec.samples[c], 1.0);
        }
    }

    #[test]
    fn seventy_two_bpm_periods() {
        let p = SynthParams {
            bpm: 72.0,
            ..Default::default()
        };
        let (_, ann) = synth_beats(&p).unwrap();
        let idx = ann.indices();
        for (k, &c) in idx.iter().enumerate() {
            assert_eq!(c, (k as f64 * 500.0 / 3.0).round() as usize);
        }
        for w in idx.windows(2) {
            assert!(matches!(w[1] - w[0], 166 | 167));
        }
        assert_eq!(idx[3] - idx[0], 500);
    }

    #[test]
    fn noise_is_seeded() {
        let p = SynthParams {
            noise_amplitude: 0.1,
            seed: 7,
            ..Default::default()
        };
        let a = synth_beats(&p).unwrap().0;
        assert_eq!(a, synth_beats(&p).unwrap().0);
        let b = synth_beats(&SynthParams { seed: 8, ..p }).unwrap().0;
        assert_ne!(a, b);
        let clean = synth_beats(&SynthParams {
            noise_amplitude: 0.0,
            ..p
        })
        .unwrap()
        .0;
        for (x, y) in a.samples.iter().zip(&clean.samples) {
            assert!((x - y).abs() <= 0.1);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(synth_beats(&SynthParams {
            bpm: 0.0,
            ..Default::default()
        })
        .is_err());
        assert!(synth_beats(&SynthParams {
            fs: -1.0,
            ..Default::default()
        })
        .is_err());
    }
}
