//! Signal and annotation input: MIT-BIH format 212 records, CSV files,
//! 360 Hz to 200 Hz resampling and synthetic beat trains.

mod csv;
mod resample;
mod synth;
pub mod wfdb;

use thiserror::Error;

pub use self::csv::{read_annotations_csv, read_csv, write_annotations_csv, write_csv};
pub use self::resample::{resample_to_200, rescale_indices, SUPPORTED_INPUT_RATES};
pub use self::synth::{synth_beats, Lcg64, SynthParams};
pub use self::wfdb::{decode_212, encode_212, read_212, read_record, Header, SignalSpec};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("truncated format-212 data: needed {needed} bytes, file ends at byte offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("channel {channel} out of range (record has {available})")]
    ChannelOutOfRange { channel: usize, available: usize },
    #[error("unsupported signal format {0} (only 212 is supported)")]
    UnsupportedFormat(u32),
    #[error("header line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported sampling rate {fs} Hz (supported: {supported})")]
    UnsupportedRate { fs: f64, supported: String },
    #[error("annotation indices must strictly increase ({prev} then {cur})")]
    NotMonotonic { prev: usize, cur: usize },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    /// Physical units after removing the ADC baseline and dividing by gain.
    #[default]
    Millivolts,
    /// Raw ADC counts.
    Adc,
}

/// One sampled ECG channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub channel_name: String,
    pub source: String,
    pub units: Units,
}

impl EcgRecord {
    pub fn new(
        samples: Vec<f64>,
        fs: f64,
        channel_name: impl Into<String>,
        source: impl Into<String>,
    ) -> Result<Self, IngestError> {
        let rec = Self {
            samples,
            fs,
            channel_name: channel_name.into(),
            source: source.into(),
            units: Units::Millivolts,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(IngestError::InvalidRecord(format!(
                "sampling rate {}",
                self.fs
            )));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::InvalidRecord(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// The first `seconds` of the record.
    pub fn excerpt(&self, start_s: f64, seconds: f64) -> EcgRecord {
        let start = ((start_s * self.fs).round() as usize).min(self.samples.len());
        let end = (start + (seconds * self.fs).round() as usize).min(self.samples.len());
        EcgRecord {
            samples: self.samples[start..end].to_vec(),
            source: format!("{} [{start}..{end})", self.source),
            ..self.clone()
        }
    }
}

/// Sample indices of annotated beats, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    beat_indices: Vec<usize>,
    pub fs: f64,
}

impl AnnotationSet {
    pub fn new(beat_indices: Vec<usize>, fs: f64) -> Result<Self, IngestError> {
        if let Some(w) = beat_indices.windows(2).find(|w| w[1] <= w[0]) {
            return Err(IngestError::NotMonotonic {
                prev: w[0],
                cur: w[1],
            });
        }
        Ok(Self { beat_indices, fs })
    }

    pub fn indices(&self) -> &[usize] {
        &self.beat_indices
    }

    pub fn len(&self) -> usize {
        self.beat_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beat_indices.is_empty()
    }

    /// Annotations inside `[start, end)`, shifted so `start` becomes 0.
    pub fn window(&self, start: usize, end: usize) -> AnnotationSet {
        AnnotationSet {
            beat_indices: self
                .beat_indices
                .iter()
                .filter(|&&i| i >= start && i < end)
                .map(|&i| i - start)
                .collect(),
            fs: self.fs,
        }
    }

    /// Moves the annotations to another sampling rate, rounding to nearest.
    pub fn rescaled(&self, fs: f64) -> Result<AnnotationSet, IngestError> {
        AnnotationSet::new(rescale_indices(&self.beat_indices, self.fs, fs), fs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotations_must_increase() {
        assert!(AnnotationSet::new(vec![1, 2, 3], 200.0).is_ok());
        assert!(matches!(
            AnnotationSet::new(vec![1, 3, 3], 200.0),
            Err(IngestError::NotMonotonic { prev: 3, cur: 3 })
        ));
    }

    #[test]
    fn record_validation() {
        assert!(EcgRecord::new(vec![0.0, 1.0], 200.0, "x", "t").is_ok());
        assert!(EcgRecord::new(vec![0.0, f64::NAN], 200.0, "x", "t").is_err());
        assert!(EcgRecord::new(vec![0.0], 0.0, "x", "t").is_err());
    }

    #[test]
    fn excerpt_and_window() {
        let rec = EcgRecord::new((0..1000).map(f64::from).collect(), 100.0, "x", "t").unwrap();
        let ex = rec.excerpt(2.0, 3.0);
        assert_eq!(ex.samples.len(), 300);
        assert_eq!(ex.samples[0], 200.0);
        let ann = AnnotationSet::new(vec![50, 250, 400, 600], 100.0).unwrap();
        assert_eq!(ann.window(200, 500).indices(), &[50, 200]);
    }
}
