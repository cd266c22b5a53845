#![allow(dead_code)]

use std::path::{Path, PathBuf};

use qrs_core::ingest::{read_record, synth_beats, AnnotationSet, EcgRecord, SynthParams, Units};
use qrs_core::{prepare_record, RunConfig};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mitdb")
}

/// The record 208 excerpt (MLII), resampled to 200 Hz.
pub fn record_208() -> EcgRecord {
    let rec = read_record(&data_dir().join("208e.hea"), 0, Units::Millivolts).unwrap();
    let mut cfg = RunConfig::default();
    prepare_record(&rec, &mut cfg).unwrap()
}

/// `seconds`-long windows of record 208 starting at the given offsets.
pub fn excerpts_208(starts_s: &[f64], seconds: f64) -> Vec<EcgRecord> {
    let rec = record_208();
    starts_s.iter().map(|&s| rec.excerpt(s, seconds)).collect()
}

/// Zero-noise train of `beats` lobes with half a second before the first
/// and up to half a second after the last, so no lobe falls inside the
/// pipeline delay at either end of the record.
pub fn train(bpm: f64, beats: usize) -> (EcgRecord, AnnotationSet) {
    let period_s = 60.0 / bpm;
    let tail_s = (0.9 * period_s).min(0.5);
    let (rec, ann) = synth_beats(&SynthParams {
        bpm,
        duration_s: 0.5 + (beats - 1) as f64 * period_s + tail_s,
        first_beat_s: 0.5,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(ann.len(), beats);
    (rec, ann)
}

pub fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().map(f64::abs).fold(0.0, f64::max)
}
