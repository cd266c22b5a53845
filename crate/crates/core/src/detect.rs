//! Adaptive dual-channel QRS detection over the SI and SF taps.
//!
//! Each channel keeps a signal-peak estimate `spk`, a noise-peak estimate
//! `npk` and a threshold `thr = npk + (spk - npk) / 4`. A local maximum of SI
//! becomes a QRS event when it exceeds `thr_i`, the largest `|SF|` within the
//! coincidence window around it exceeds `thr_f`, and it lies outside the
//! refractory period of the previous event. Accepted peaks pull `spk` toward
//! them by 1/8; rejected peaks that sit between `npk` and `thr` pull `npk`.
//!
//! The SF window extends past the SI peak, so each decision is made once the
//! stream has advanced `coincidence_samples` beyond the candidate. A
//! candidate followed within the refractory period by a larger SI maximum
//! is dropped without touching the estimates, so a multi-humped SI lobe
//! yields one candidate at its highest point.

use std::collections::VecDeque;

use thiserror::Error;

use crate::config::RunConfig;
use crate::level::Level;
use crate::stages::PipelineTap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("insufficient signal: need {needed} samples, got {got}")]
    InsufficientSignal { needed: usize, got: usize },
    #[error("detector used before its thresholds were seeded")]
    NotSeeded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdState<V> {
    pub spk_i: V,
    pub npk_i: V,
    pub thr_i: V,
    pub spk_f: V,
    pub npk_f: V,
    pub thr_f: V,
    /// First SI index at which a new event may be emitted.
    pub refractory_until: usize,
    pub seeded: bool,
}

/// `npk + (spk - npk) / 4`.
pub fn blend<V: Level>(spk: V, npk: V) -> V {
    npk + (spk - npk).shr(2)
}

/// `peak / 8 + 7 * estimate / 8`.
pub fn running_estimate<V: Level>(estimate: V, peak: V) -> V {
    peak.shr(3) + (estimate - estimate.shr(3))
}

impl<V: Level> ThresholdState<V> {
    fn unseeded(zero: V) -> Self {
        Self {
            spk_i: zero,
            npk_i: zero,
            thr_i: zero,
            spk_f: zero,
            npk_f: zero,
            thr_f: zero,
            refractory_until: 0,
            seeded: false,
        }
    }

    /// Clamps `npk <= spk` on both channels and recomputes the thresholds.
    fn settle(&mut self) {
        if self.npk_i > self.spk_i {
            self.npk_i = self.spk_i;
        }
        if self.npk_f > self.spk_f {
            self.npk_f = self.spk_f;
        }
        self.thr_i = blend(self.spk_i, self.npk_i);
        self.thr_f = blend(self.spk_f, self.npk_f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    Seed,
    Signal,
    Noise,
}

/// Snapshot of the thresholds right after an update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdUpdate<V> {
    pub index: usize,
    pub kind: UpdateKind,
    pub state: ThresholdState<V>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrsEvent<V> {
    pub si_peak_index: usize,
    pub sf_peak_index: usize,
    pub si_peak_value: V,
    pub sf_peak_value: V,
}

fn max_moving_mean<V: Level>(xs: &[V], window: usize) -> Option<V> {
    if xs.len() <= window {
        return V::mean(xs);
    }
    xs.windows(window)
        .filter_map(V::mean)
        .fold(None, |best: Option<V>, m| match best {
            Some(b) if b >= m => Some(b),
            _ => Some(m),
        })
}

/// Initial thresholds from a seed stretch of taps: `spk` is the largest
/// moving mean over the stretch, `npk` its overall mean.
pub fn seed_thresholds<V: Level>(
    taps: &[PipelineTap<V>],
    cfg: &RunConfig,
) -> Result<ThresholdState<V>, DetectError> {
    let needed = cfg.seed_samples();
    if taps.len() < needed || taps.is_empty() {
        return Err(DetectError::InsufficientSignal {
            needed,
            got: taps.len(),
        });
    }
    let si: Vec<V> = taps.iter().map(|t| t.si).collect();
    let sf: Vec<V> = taps.iter().map(|t| t.sf.abs()).collect();
    let w = cfg.seed_window_samples;
    let zero = si[0].zero_like();
    let mut state = ThresholdState {
        spk_i: max_moving_mean(&si, w).unwrap_or(zero),
        npk_i: V::mean(&si).unwrap_or(zero),
        spk_f: max_moving_mean(&sf, w).unwrap_or(zero),
        npk_f: V::mean(&sf).unwrap_or(zero),
        ..ThresholdState::unseeded(zero)
    };
    state.seeded = true;
    state.settle();
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct Detector<V> {
    refractory: usize,
    window: usize,
    warmup: usize,
    state: Option<ThresholdState<V>>,
    prev: Option<(usize, V)>,
    prev2: Option<V>,
    sf_history: VecDeque<(usize, V)>,
    pending: VecDeque<(usize, V)>,
    updates: Vec<ThresholdUpdate<V>>,
}

impl<V: Level> Detector<V> {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            refractory: cfg.refractory_samples,
            window: cfg.coincidence_samples.max(1),
            warmup: cfg.warmup_samples,
            state: None,
            prev: None,
            prev2: None,
            sf_history: VecDeque::new(),
            pending: VecDeque::new(),
            updates: Vec::new(),
        }
    }

    pub fn seeded(cfg: &RunConfig, state: ThresholdState<V>) -> Self {
        let mut det = Self::new(cfg);
        det.install(state);
        det
    }

    /// Seeds from `taps`; see [`seed_thresholds`].
    pub fn seed(&mut self, taps: &[PipelineTap<V>], cfg: &RunConfig) -> Result<(), DetectError> {
        let state = seed_thresholds(taps, cfg)?;
        self.install(state);
        Ok(())
    }

    fn install(&mut self, state: ThresholdState<V>) {
        self.updates.push(ThresholdUpdate {
            index: 0,
            kind: UpdateKind::Seed,
            state,
        });
        self.state = Some(state);
    }

    pub fn is_seeded(&self) -> bool {
        self.state.is_some_and(|s| s.seeded)
    }

    pub fn state(&self) -> Option<&ThresholdState<V>> {
        self.state.as_ref()
    }

    /// Every threshold change so far, seed first.
    pub fn updates(&self) -> &[ThresholdUpdate<V>] {
        &self.updates
    }

    pub fn into_updates(self) -> Vec<ThresholdUpdate<V>> {
        self.updates
    }

    /// Feeds one tap. Taps inside the warm-up are ignored. Returns the event
    /// decided at this step, if any; decisions lag the SI peak by the
    /// coincidence window.
    pub fn step(&mut self, tap: &PipelineTap<V>) -> Result<Option<QrsEvent<V>>, DetectError> {
        if !self.is_seeded() {
            return Err(DetectError::NotSeeded);
        }
        let n = tap.index;
        if n < self.warmup {
            return Ok(None);
        }
        self.sf_history.push_back((n, tap.sf.abs()));
        while self.sf_history.len() > 2 * self.window + 1 {
            self.sf_history.pop_front();
        }
        if let (Some((i1, y1)), Some(y2)) = (self.prev, self.prev2) {
            if y1 > y2 && tap.si <= y1 {
                self.pending.push_back((i1, y1));
            }
        }
        self.prev2 = self.prev.map(|(_, y)| y);
        self.prev = Some((n, tap.si));

        // A candidate at c is queued at step c + 1 and decided at c + window,
        // so at most one decision falls due per step.
        match self.pending.front() {
            Some(&(c, y)) if c + self.window <= n => {
                self.pending.pop_front();
                Ok(self.decide_pending(c, y))
            }
            _ => Ok(None),
        }
    }

    /// Decides every candidate still waiting for its SF window to fill.
    pub fn flush(&mut self) -> Result<Vec<QrsEvent<V>>, DetectError> {
        if !self.is_seeded() {
            return Err(DetectError::NotSeeded);
        }
        let mut events = Vec::new();
        while let Some((c, y)) = self.pending.pop_front() {
            events.extend(self.decide_pending(c, y));
        }
        Ok(events)
    }

    fn sf_peak_near(&self, c: usize) -> Option<(usize, V)> {
        let mut best: Option<(usize, V)> = None;
        for &(i, v) in self
            .sf_history
            .iter()
            .filter(|(i, _)| i.abs_diff(c) <= self.window)
        {
            match best {
                Some((_, b)) if b >= v => {}
                _ => best = Some((i, v)),
            }
        }
        best
    }

    fn decide_pending(&mut self, c: usize, si_peak: V) -> Option<QrsEvent<V>> {
        let superseded = self
            .pending
            .iter()
            .take_while(|&&(c2, _)| c2 < c + self.refractory)
            .any(|&(_, y2)| y2 > si_peak);
        if superseded {
            return None;
        }
        self.decide(c, si_peak)
    }

    fn decide(&mut self, c: usize, si_peak: V) -> Option<QrsEvent<V>> {
        let (sf_index, sf_peak) = self.sf_peak_near(c).unwrap_or((c, si_peak.zero_like()));
        let st = self.state.as_mut().expect("seeded");
        if c >= st.refractory_until && si_peak > st.thr_i && sf_peak > st.thr_f {
            st.spk_i = running_estimate(st.spk_i, si_peak);
            st.spk_f = running_estimate(st.spk_f, sf_peak);
            st.refractory_until = c + self.refractory;
            st.settle();
            let snapshot = *st;
            self.updates.push(ThresholdUpdate {
                index: c,
                kind: UpdateKind::Signal,
                state: snapshot,
            });
            return Some(QrsEvent {
                si_peak_index: c,
                sf_peak_index: sf_index,
                si_peak_value: si_peak,
                sf_peak_value: sf_peak,
            });
        }
        if c < st.refractory_until {
            // Part of the complex just accepted.
            return None;
        }
        let mut touched = false;
        if si_peak > st.npk_i && si_peak <= st.thr_i {
            st.npk_i = running_estimate(st.npk_i, si_peak);
            touched = true;
        }
        if sf_peak > st.npk_f && sf_peak <= st.thr_f {
            st.npk_f = running_estimate(st.npk_f, sf_peak);
            touched = true;
        }
        if touched {
            st.settle();
            let snapshot = *st;
            self.updates.push(ThresholdUpdate {
                index: c,
                kind: UpdateKind::Noise,
                state: snapshot,
            });
        }
        None
    }
}
