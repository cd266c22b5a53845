//! Fixed-point Pan-Tompkins QRS detection with a double-precision reference.
//!
//! The fixed-point chain is [`stages::Pipeline`] followed by
//! [`analysis::Analyzer`]; [`reference::run_reference`] runs the same
//! algorithm in `f64`. [`analyze_fixed`] and [`prepare_record`] glue the
//! pieces together for whole records.

pub mod analysis;
pub mod config;
pub mod detect;
pub mod features;
pub mod fxp;
pub mod ingest;
pub mod level;
pub mod reference;
pub mod score;
pub mod stages;

use thiserror::Error;

pub use config::RunConfig;
pub use fxp::{FxpFormat, FxpValue};
pub use reference::{FixedRun, ReferenceRun};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Fxp(#[from] fxp::FxpError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Detect(#[from] detect::DetectError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Reference(#[from] reference::ReferenceError),
}

/// Quantizes `signal`, streams it through the fixed-point pipeline and
/// runs detection and feature extraction.
pub fn analyze_fixed(signal: &[f64], config: &RunConfig) -> Result<FixedRun, Error> {
    config.validate()?;
    let samples = fxp::quantize_all(signal, config.format)?;
    let mut pipeline = stages::Pipeline::new(config.format);
    let mut analyzer = analysis::Analyzer::new(config);
    for &s in &samples {
        analyzer.push(pipeline.step(s))?;
    }
    Ok(analyzer.finish()?)
}

/// Same as [`analyze_fixed`] but through the `f64` reference chain.
pub fn analyze_reference(signal: &[f64], config: &RunConfig) -> Result<ReferenceRun, Error> {
    config.validate()?;
    Ok(reference::run_reference(signal, config)?)
}

/// Brings a record to the pipeline rate: 360 Hz input is resampled to
/// 200 Hz when `config.resample` is set, anything else passes through.
/// `config.fs` is set to the resulting rate.
pub fn prepare_record(
    record: &ingest::EcgRecord,
    config: &mut RunConfig,
) -> Result<ingest::EcgRecord, Error> {
    let rec = if config.resample && record.fs != 200.0 {
        ingest::resample_to_200(record)?
    } else {
        record.clone()
    };
    config.fs = rec.fs;
    Ok(rec)
}

/// Runs both chains on `signal` and compares them. The reference sees the
/// quantized samples the fixed-point chain consumed, so the report measures
/// datapath error rather than input quantization.
pub fn compare_fixed_reference(
    signal: &[f64],
    config: &RunConfig,
    tolerances: reference::Tolerances,
) -> Result<(FixedRun, ReferenceRun, reference::ComparisonReport), Error> {
    let fixed = analyze_fixed(signal, config)?;
    let quantized: Vec<f64> = fixed.taps.iter().map(|t| t.raw_in.to_real()).collect();
    let reference = analyze_reference(&quantized, config)?;
    let report = reference::compare_runs(&fixed, &reference, tolerances)?;
    Ok((fixed, reference, report))
}
