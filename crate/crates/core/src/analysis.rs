//! Drives detection and feature extraction over a tap stream.
//!
//! The thresholds are seeded from the first `seed_seconds` of post-warm-up
//! taps. Until then taps are buffered; once seeded, the buffered taps are
//! replayed so beats inside the seed stretch are not lost.

use crate::config::RunConfig;
use crate::detect::{DetectError, Detector, QrsEvent, ThresholdUpdate};
use crate::features::{assemble_beats, BeatFeatures, RPeakTracker, WidthCounter, WidthMeasurement};
use crate::level::Level;
use crate::stages::PipelineTap;

/// Everything one run produces, indexed by pipeline sample.
#[derive(Debug, Clone)]
pub struct Analysis<V> {
    pub config: RunConfig,
    pub taps: Vec<PipelineTap<V>>,
    /// Live SI threshold at each sample; `None` before detection starts.
    pub thr_i: Vec<Option<V>>,
    /// Whether the width counter was measuring a QRS rise at each sample.
    pub qrs_active: Vec<bool>,
    pub events: Vec<QrsEvent<V>>,
    pub widths: Vec<WidthMeasurement>,
    pub rpeaks: Vec<usize>,
    pub updates: Vec<ThresholdUpdate<V>>,
    pub beats: Vec<BeatFeatures>,
}

impl<V: Level> Analysis<V> {
    pub fn beat_indices(&self) -> Vec<usize> {
        self.beats.iter().map(|b| b.r_peak_index).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Analyzer<V> {
    config: RunConfig,
    taps: Vec<PipelineTap<V>>,
    fed: usize,
    detector: Detector<V>,
    width: WidthCounter<V>,
    rpeak: RPeakTracker<V>,
    thr_i: Vec<Option<V>>,
    qrs_active: Vec<bool>,
    events: Vec<QrsEvent<V>>,
    widths: Vec<WidthMeasurement>,
    rpeaks: Vec<usize>,
}

impl<V: Level> Analyzer<V> {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            taps: Vec::new(),
            fed: 0,
            detector: Detector::new(config),
            width: WidthCounter::new(config.holdoff_samples),
            rpeak: RPeakTracker::new(config.rise_guard_samples),
            thr_i: Vec::new(),
            qrs_active: Vec::new(),
            events: Vec::new(),
            widths: Vec::new(),
            rpeaks: Vec::new(),
        }
    }

    fn seed_end(&self) -> usize {
        self.config.warmup_samples + self.config.seed_samples()
    }

    /// Taps must arrive in index order starting at 0.
    pub fn push(&mut self, tap: PipelineTap<V>) -> Result<(), DetectError> {
        debug_assert_eq!(tap.index, self.taps.len());
        self.taps.push(tap);
        if !self.detector.is_seeded() {
            if self.taps.len() < self.seed_end() {
                return Ok(());
            }
            let seed = &self.taps[self.config.warmup_samples..self.seed_end()];
            self.detector.seed(seed, &self.config)?;
        }
        while self.fed < self.taps.len() {
            self.feed(self.fed)?;
            self.fed += 1;
        }
        Ok(())
    }

    fn feed(&mut self, i: usize) -> Result<(), DetectError> {
        let tap = self.taps[i];
        if i < self.config.warmup_samples {
            self.thr_i.push(None);
            self.qrs_active.push(false);
            return Ok(());
        }
        if let Some(ev) = self.detector.step(&tap)? {
            self.events.push(ev);
        }
        let thr = self
            .detector
            .state()
            .map(|s| s.thr_i)
            .ok_or(DetectError::NotSeeded)?;
        let prev = self.taps[i.saturating_sub(1)].si;
        self.widths.extend(self.width.step(tap.si, prev, thr, i));
        self.rpeaks.extend(self.rpeak.step(tap.si, i));
        self.thr_i.push(Some(thr));
        self.qrs_active.push(self.width.is_counting());
        Ok(())
    }

    pub fn finish(mut self) -> Result<Analysis<V>, DetectError> {
        if !self.detector.is_seeded() {
            return Err(DetectError::InsufficientSignal {
                needed: self.seed_end(),
                got: self.taps.len(),
            });
        }
        self.events.extend(self.detector.flush()?);
        let raw: Vec<V> = self.taps.iter().map(|t| t.raw_in).collect();
        let si: Vec<V> = self.taps.iter().map(|t| t.si).collect();
        let beats = assemble_beats(
            &self.events,
            &self.widths,
            &self.rpeaks,
            &raw,
            &si,
            &self.config,
        );
        Ok(Analysis {
            config: self.config,
            taps: self.taps,
            thr_i: self.thr_i,
            qrs_active: self.qrs_active,
            events: self.events,
            widths: self.widths,
            rpeaks: self.rpeaks,
            updates: self.detector.into_updates(),
            beats,
        })
    }
}

/// Runs detection and features over a complete tap stream.
pub fn analyze<V: Level>(
    taps: impl IntoIterator<Item = PipelineTap<V>>,
    config: &RunConfig,
) -> Result<Analysis<V>, DetectError> {
    let mut a = Analyzer::new(config);
    for t in taps {
        a.push(t)?;
    }
    a.finish()
}
