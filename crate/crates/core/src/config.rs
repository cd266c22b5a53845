//! Run configuration shared by the fixed-point path and the reference.

use std::str::FromStr;

use thiserror::Error;

use crate::fxp::{FxpError, FxpFormat};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {value}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("`{0}` must be greater than zero")]
    NotPositive(&'static str),
    #[error(transparent)]
    Format(#[from] FxpError),
}

/// Every tunable of a run. Sample counts are in the pipeline's timebase
/// (200 Hz unless resampling is disabled).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub format: FxpFormat,
    /// Pipeline sampling rate, used for heart rate and seed length.
    pub fs: f64,
    /// Minimum spacing between detections.
    pub refractory_samples: usize,
    /// Width-counter hold-off after each measured QRS.
    pub holdoff_samples: usize,
    /// Consecutive non-decreasing SI samples required before an R-peak.
    pub rise_guard_samples: usize,
    pub seed_seconds: f64,
    /// Moving-mean window used while seeding the thresholds.
    pub seed_window_samples: usize,
    /// SF peak must lie within this many samples of the SI peak.
    pub coincidence_samples: usize,
    /// Leading samples excluded from detection.
    pub warmup_samples: usize,
    /// Half-width of the raw-signal search that refines each R-peak.
    pub refine_samples: usize,
    /// Resample 360 Hz input to 200 Hz before processing.
    pub resample: bool,
    pub channel: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format: FxpFormat::DEFAULT,
            fs: 200.0,
            refractory_samples: 40,
            holdoff_samples: 20,
            rise_guard_samples: 50,
            seed_seconds: 2.0,
            seed_window_samples: 30,
            coincidence_samples: 40,
            warmup_samples: 64,
            refine_samples: 12,
            resample: true,
            channel: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("refractory_samples", self.refractory_samples),
            ("holdoff_samples", self.holdoff_samples),
            ("rise_guard_samples", self.rise_guard_samples),
            ("seed_window_samples", self.seed_window_samples),
            ("coincidence_samples", self.coincidence_samples),
            ("warmup_samples", self.warmup_samples),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(ConfigError::NotPositive("fs"));
        }
        if !(self.seed_seconds > 0.0 && self.seed_seconds.is_finite()) {
            return Err(ConfigError::NotPositive("seed_seconds"));
        }
        Ok(())
    }

    /// Number of post-warm-up samples used to seed the thresholds.
    pub fn seed_samples(&self) -> usize {
        (self.seed_seconds * self.fs).round().max(1.0) as usize
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut word_bits = self.format.word_bits();
        let mut frac_bits = self.format.frac_bits();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: line_no })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue {
                line: line_no,
                key: key.to_string(),
                value: value.to_string(),
            };
            fn parse<T: FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
                v.parse().map_err(|_| bad())
            }
            match key {
                "word_bits" => word_bits = parse(value, bad)?,
                "frac_bits" => frac_bits = parse(value, bad)?,
                "fs" => self.fs = parse(value, bad)?,
                "refractory_samples" => self.refractory_samples = parse(value, bad)?,
                "holdoff_samples" => self.holdoff_samples = parse(value, bad)?,
                "rise_guard_samples" => self.rise_guard_samples = parse(value, bad)?,
                "seed_seconds" => self.seed_seconds = parse(value, bad)?,
                "seed_window_samples" => self.seed_window_samples = parse(value, bad)?,
                "coincidence_samples" => self.coincidence_samples = parse(value, bad)?,
                "warmup_samples" => self.warmup_samples = parse(value, bad)?,
                "refine_samples" => self.refine_samples = parse(value, bad)?,
                "resample" => self.resample = parse(value, bad)?,
                "channel" => self.channel = parse(value, bad)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                }
            }
        }
        self.format = FxpFormat::new(word_bits, frac_bits)?;
        self.validate()
    }
}
