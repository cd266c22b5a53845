//! Per-beat features: QRS width from the SI rise time, R-peaks from the SI
//! first difference, and R-R interval / heart rate between beats.

use std::cmp::Ordering;
use std::collections::VecDeque;

use log::debug;
use thiserror::Error;

use crate::config::RunConfig;
use crate::detect::QrsEvent;
use crate::level::Level;
use crate::stages::SI_DELAY;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("R-peak indices must increase: previous {prev}, current {cur}")]
    NonIncreasing { prev: usize, cur: usize },
}

/// One measured QRS rise: SI crossed the threshold at `start_index` and
/// peaked at `peak_index`, `width` samples later.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WidthMeasurement {
    pub start_index: usize,
    pub peak_index: usize,
    pub width: usize,
}

/// Counts SI samples from a rising threshold crossing up to the SI peak,
/// then holds off for a fixed number of samples.
///
/// The peak is the highest SI sample of the excursion, so a dip between
/// two humps of one complex does not end the count. The excursion ends when
/// SI falls back to the threshold or sets no new maximum for the hold-off
/// length; the hold-off runs from the sample after the peak.
#[derive(Debug, Clone)]
pub struct WidthCounter<V> {
    holdoff: usize,
    counting: bool,
    start: usize,
    peak: Option<(usize, V)>,
    count: usize,
    holdoff_until: usize,
}

impl<V: PartialOrd + Copy> WidthCounter<V> {
    pub fn new(holdoff_samples: usize) -> Self {
        Self {
            holdoff: holdoff_samples,
            counting: false,
            start: 0,
            peak: None,
            count: 0,
            holdoff_until: 0,
        }
    }

    pub fn is_counting(&self) -> bool {
        self.counting
    }

    /// Samples from the crossing to the highest SI sample so far.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn holdoff_until(&self) -> usize {
        self.holdoff_until
    }

    fn finish(&mut self) -> Option<WidthMeasurement> {
        let (peak, _) = self.peak.take()?;
        let m = WidthMeasurement {
            start_index: self.start,
            peak_index: peak,
            width: peak - self.start,
        };
        self.counting = false;
        self.count = 0;
        self.holdoff_until = peak + 1 + self.holdoff;
        (m.width > 0).then_some(m)
    }

    /// A crossing that peaks on its first sample has no rise and is dropped,
    /// though the hold-off still applies.
    pub fn step(&mut self, si: V, si_prev: V, thr: V, index: usize) -> Option<WidthMeasurement> {
        if let Some((peak, peak_value)) = self.peak {
            if si > peak_value {
                self.peak = Some((index, si));
                self.count = index - self.start;
                return None;
            }
            if si <= thr || index - peak >= self.holdoff {
                return self.finish();
            }
            return None;
        }
        if si > si_prev && si > thr && index >= self.holdoff_until {
            self.counting = true;
            self.start = index;
            self.peak = Some((index, si));
            self.count = 0;
        }
        None
    }
}

/// Local-maximum tracker on SI: fires at `n - 1` when `p(n) <= 0`,
/// `p(n-1) > 0` and `p(n-k) >= 0` for `k = 1..=guard`, where
/// `p(n) = y(n) - y(n-1)`.
#[derive(Debug, Clone)]
pub struct RPeakTracker<V> {
    guard: usize,
    prev: Option<V>,
    signs: VecDeque<Ordering>,
}

impl<V: PartialOrd + Copy> RPeakTracker<V> {
    pub fn new(rise_guard_samples: usize) -> Self {
        Self {
            guard: rise_guard_samples.max(1),
            prev: None,
            signs: VecDeque::with_capacity(rise_guard_samples + 2),
        }
    }

    pub fn step(&mut self, si: V, index: usize) -> Option<usize> {
        let prev = self.prev.replace(si)?;
        self.signs
            .push_back(si.partial_cmp(&prev).unwrap_or(Ordering::Equal));
        if self.signs.len() > self.guard + 1 {
            self.signs.pop_front();
        }
        if self.signs.len() < self.guard + 1 {
            return None;
        }
        let (current, past) = (self.signs[self.guard], self.signs.range(..self.guard));
        let fired = current != Ordering::Greater
            && self.signs[self.guard - 1] == Ordering::Greater
            && past.clone().all(|&s| s != Ordering::Less);
        fired.then(|| index - 1)
    }
}

/// R-R interval in samples and heart rate in beats per minute.
pub fn rr_and_hr(prev_peak: usize, cur_peak: usize, fs: f64) -> Result<(usize, f64), FeatureError> {
    if cur_peak <= prev_peak {
        return Err(FeatureError::NonIncreasing {
            prev: prev_peak,
            cur: cur_peak,
        });
    }
    let rr = cur_peak - prev_peak;
    Ok((rr, 60.0 * fs / rr as f64))
}

/// A detected beat in the raw-signal timebase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatFeatures {
    pub r_peak_index: usize,
    /// SI index the beat was located from.
    pub si_index: usize,
    /// Whether `si_index` came from the R-peak tracker rather than the
    /// detector's own SI peak.
    pub tracked_peak: bool,
    pub qrs_width_samples: Option<usize>,
    pub rr_interval_samples: Option<usize>,
    pub heart_rate_bpm: Option<f64>,
}

fn nearest<T: Copy>(
    items: &[T],
    used: &mut [bool],
    key: impl Fn(&T) -> usize,
    accept: impl Fn(&T) -> bool,
    target: usize,
    radius: usize,
) -> Option<T> {
    let lo = items.partition_point(|x| key(x) + radius < target);
    let mut best: Option<(usize, usize)> = None;
    for (j, item) in items.iter().enumerate().skip(lo) {
        let k = key(item);
        if k > target + radius {
            break;
        }
        let d = k.abs_diff(target);
        if !used[j] && accept(item) && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best.map(|(j, _)| {
        used[j] = true;
        items[j]
    })
}

/// Pairs detector events with width measurements and tracked R-peaks,
/// maps them back to the raw timebase and refines each R-peak to the raw
/// maximum nearby.
///
/// A tracked R-peak is used only if SI there reaches the event's SI peak;
/// lower tracked maxima are side humps of the same complex.
///
/// `widths` and `rpeaks` must be sorted by index. `raw` and `si` are the raw
/// input and SI streams in the pipeline's timebase.
pub fn assemble_beats<V: Level>(
    events: &[QrsEvent<V>],
    widths: &[WidthMeasurement],
    rpeaks: &[usize],
    raw: &[V],
    si: &[V],
    cfg: &RunConfig,
) -> Vec<BeatFeatures> {
    let radius = cfg.coincidence_samples;
    let mut width_used = vec![false; widths.len()];
    let mut peak_used = vec![false; rpeaks.len()];
    let mut beats: Vec<BeatFeatures> = Vec::with_capacity(events.len());

    for ev in events {
        let reaches_peak = |&p: &usize| si.get(p).is_some_and(|&v| v >= ev.si_peak_value);
        let tracked = nearest(
            rpeaks,
            &mut peak_used,
            |&p| p,
            reaches_peak,
            ev.si_peak_index,
            radius,
        );
        let width = nearest(
            widths,
            &mut width_used,
            |w| w.peak_index,
            |_| true,
            ev.si_peak_index,
            radius,
        );
        if tracked.is_none() {
            debug!("no tracked R-peak near SI index {}", ev.si_peak_index);
        }
        if width.is_none() {
            debug!("no QRS width near SI index {}", ev.si_peak_index);
        }
        let si_index = tracked.unwrap_or(ev.si_peak_index);
        let prev = beats.last().map(|b| b.r_peak_index);
        let r_peak_index = refine(raw, si_index.saturating_sub(SI_DELAY), prev, cfg);
        let (rr, hr) = match prev {
            Some(p) => match rr_and_hr(p, r_peak_index, cfg.fs) {
                Ok((rr, hr)) => (Some(rr), Some(hr)),
                Err(_) => (None, None),
            },
            None => (None, None),
        };
        beats.push(BeatFeatures {
            r_peak_index,
            si_index,
            tracked_peak: tracked.is_some(),
            qrs_width_samples: width.map(|w| w.width),
            rr_interval_samples: rr,
            heart_rate_bpm: hr,
        });
    }
    beats
}

/// Raw maximum within `refine_samples` of `centre`, never earlier than one
/// refractory period after the previous beat.
fn refine<V: Level>(raw: &[V], centre: usize, prev: Option<usize>, cfg: &RunConfig) -> usize {
    let floor = prev.map_or(0, |p| p + cfg.refractory_samples);
    if raw.is_empty() {
        return centre.max(floor);
    }
    let last = raw.len() - 1;
    let lo = centre.saturating_sub(cfg.refine_samples).max(floor);
    let hi = (centre + cfg.refine_samples).min(last);
    if lo > hi {
        return centre.max(floor);
    }
    let mut best = lo;
    for i in lo..=hi {
        if raw[i] > raw[best] {
            best = i;
        }
    }
    best
}
