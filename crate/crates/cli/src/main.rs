//! `qrs`: run the fixed-point QRS detector on ECG records.
//!
//! Exit status: 0 on success, 1 on I/O, parse or usage errors, 2 when
//! `bench` falls below its sensitivity or positive-predictivity floor.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use qrs_core::analysis::Analysis;
use qrs_core::features::BeatFeatures;
use qrs_core::fxp::FxpFormat;
use qrs_core::ingest::{
    read_annotations_csv, read_csv, read_record, synth_beats, write_annotations_csv, write_csv,
    EcgRecord, SynthParams, Units,
};
use qrs_core::level::Level;
use qrs_core::reference::Tolerances;
use qrs_core::score::bench;
use qrs_core::{
    analyze_fixed, analyze_reference, compare_fixed_reference, prepare_record, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "qrs",
    version,
    about = "Fixed-point Pan-Tompkins QRS detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect beats and print one row per beat.
    Run(RunArgs),
    /// Write every pipeline tap, the live threshold and the QRS flag per sample.
    Stages(StagesArgs),
    /// Score detections against reference annotations.
    Bench(BenchArgs),
    /// Run the fixed-point and double-precision paths and compare them.
    Compare(CompareArgs),
    /// Generate a synthetic beat train.
    Synth(SynthArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input record: a signal CSV (`fs=<rate>` then one sample per line),
    /// or a WFDB `.hea`/`.dat` pair in format 212.
    input: PathBuf,
    /// `key=value` file applied before the flags below.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Signal channel to read from a WFDB record.
    #[arg(long)]
    channel: Option<usize>,
    /// Fixed-point word length in bits.
    #[arg(long)]
    word_bits: Option<u32>,
    /// Fixed-point fractional bits.
    #[arg(long)]
    frac_bits: Option<u32>,
    /// Minimum spacing between detections, in samples.
    #[arg(long)]
    refractory_samples: Option<usize>,
    /// Width-counter hold-off after each QRS, in samples.
    #[arg(long)]
    holdoff_samples: Option<usize>,
    /// Rising SI samples required before an R-peak is accepted.
    #[arg(long)]
    rise_guard_samples: Option<usize>,
    /// Length of the threshold seeding stretch, in seconds.
    #[arg(long)]
    seed_seconds: Option<f64>,
    /// Moving-mean window used while seeding, in samples.
    #[arg(long)]
    seed_window_samples: Option<usize>,
    /// Largest SF/SI peak separation for a detection, in samples.
    #[arg(long)]
    coincidence_samples: Option<usize>,
    /// Leading samples excluded from detection.
    #[arg(long)]
    warmup_samples: Option<usize>,
    /// Half-width of the raw-signal R-peak refinement, in samples.
    #[arg(long)]
    refine_samples: Option<usize>,
    /// Process 360 Hz input at its own rate instead of resampling to 200 Hz.
    #[arg(long)]
    no_resample: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Datapath {
    Fixed,
    Reference,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Table,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Which datapath to run.
    #[arg(long, value_enum, default_value = "fixed")]
    path: Datapath,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Write here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StagesArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "fixed")]
    path: Datapath,
    /// Write here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Beat annotations: one sample index per line, optionally preceded by
    /// `fs=<rate>`. Without it, indices are taken at the input's own rate.
    #[arg(long, short)]
    annotations: PathBuf,
    #[arg(long, value_enum, default_value = "fixed")]
    path: Datapath,
    /// Matching tolerance in pipeline samples (30 is 150 ms at 200 Hz).
    #[arg(long, default_value_t = 30)]
    window_samples: usize,
    /// Exit with status 2 when sensitivity falls below this.
    #[arg(long, default_value_t = 0.99)]
    min_se: f64,
    /// Exit with status 2 when positive predictivity falls below this.
    #[arg(long, default_value_t = 0.99)]
    min_ppv: f64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Largest acceptable per-stage deviation, in real units.
    #[arg(long, default_value_t = 2f64.powi(-10))]
    stage_tolerance: f64,
    /// Beats closer than this many samples count as the same beat.
    #[arg(long, default_value_t = 3)]
    beat_tolerance: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200.0)]
    fs: f64,
    #[arg(long, default_value_t = 60.0)]
    bpm: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Width of each raised-cosine lobe.
    #[arg(long, default_value_t = 100.0)]
    qrs_width_ms: f64,
    #[arg(long, default_value_t = 10.0)]
    duration_s: f64,
    /// Peak amplitude of the uniform noise added to every sample.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Time of the first lobe centre.
    #[arg(long, default_value_t = 0.0)]
    first_beat_s: f64,
    /// Signal CSV destination; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the lobe centres as an annotation CSV.
    #[arg(long)]
    annotations: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Stages(a) => cmd_stages(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn build_config(a: &InputArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &a.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_kv(&text)
            .with_context(|| format!("in {}", path.display()))?;
    }
    let word = a.word_bits.unwrap_or(cfg.format.word_bits());
    let frac = a.frac_bits.unwrap_or(cfg.format.frac_bits());
    cfg.format = FxpFormat::new(word, frac)?;
    let counts = [
        (&mut cfg.refractory_samples, a.refractory_samples),
        (&mut cfg.holdoff_samples, a.holdoff_samples),
        (&mut cfg.rise_guard_samples, a.rise_guard_samples),
        (&mut cfg.seed_window_samples, a.seed_window_samples),
        (&mut cfg.coincidence_samples, a.coincidence_samples),
        (&mut cfg.warmup_samples, a.warmup_samples),
        (&mut cfg.refine_samples, a.refine_samples),
        (&mut cfg.channel, a.channel),
    ];
    for (field, value) in counts {
        if let Some(v) = value {
            *field = v;
        }
    }
    if let Some(s) = a.seed_seconds {
        cfg.seed_seconds = s;
    }
    if a.no_resample {
        cfg.resample = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_record(path: &Path, channel: usize) -> Result<EcgRecord> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default();
    let rec = match ext.to_ascii_lowercase().as_str() {
        "hea" => read_record(path, channel, Units::Millivolts)?,
        "dat" => read_record(&path.with_extension("hea"), channel, Units::Millivolts)?,
        _ => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            read_csv(&text).with_context(|| format!("parsing {}", path.display()))?
        }
    };
    info!(
        "{}: {} samples at {} Hz",
        path.display(),
        rec.samples.len(),
        rec.fs
    );
    Ok(rec)
}

/// Loads the input and brings it to the pipeline rate. Returns the record
/// as read, the prepared record and the final configuration.
fn load(a: &InputArgs) -> Result<(EcgRecord, EcgRecord, RunConfig)> {
    let mut cfg = build_config(a)?;
    let original = load_record(&a.input, cfg.channel)?;
    let prepared = prepare_record(&original, &mut cfg)?;
    Ok((original, prepared, cfg))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn beats_for(path: Datapath, signal: &[f64], cfg: &RunConfig) -> Result<Vec<BeatFeatures>> {
    Ok(match path {
        Datapath::Fixed => analyze_fixed(signal, cfg)?.beats,
        Datapath::Reference => analyze_reference(signal, cfg)?.beats,
    })
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let (_, rec, cfg) = load(&a.input)?;
    let beats = beats_for(a.path, &rec.samples, &cfg)?;
    let header = [
        "r_peak_index",
        "time_s",
        "qrs_width_samples",
        "rr_samples",
        "hr_bpm",
    ];
    let rows: Vec<[String; 5]> = beats
        .iter()
        .map(|b| {
            [
                b.r_peak_index.to_string(),
                format!("{:.3}", b.r_peak_index as f64 / rec.fs),
                opt(b.qrs_width_samples),
                opt(b.rr_interval_samples),
                opt(b.heart_rate_bpm.map(|h| format!("{h:.2}"))),
            ]
        })
        .collect();
    let mut out = String::new();
    match a.format {
        OutputFormat::Csv => {
            let _ = writeln!(out, "{}", header.join(","));
            for r in &rows {
                let _ = writeln!(out, "{}", r.join(","));
            }
        }
        OutputFormat::Table => {
            let _ = writeln!(
                out,
                "{:>12} {:>10} {:>17} {:>10} {:>8}",
                header[0], header[1], header[2], header[3], header[4]
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:>12} {:>10} {:>17} {:>10} {:>8}",
                    r[0], r[1], r[2], r[3], r[4]
                );
            }
            let _ = writeln!(
                out,
                "{} beats in {:.1} s at {} Hz",
                rows.len(),
                rec.duration_s(),
                rec.fs
            );
        }
    }
    emit(a.output.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn stage_rows<V: Level>(run: &Analysis<V>) -> String {
    let mut out = String::from("index,raw,sf,derivative,squared,si,thr_i,qrs_flag\n");
    for (k, t) in run.taps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            t.index,
            t.raw_in.to_real(),
            t.sf.to_real(),
            t.derivative.to_real(),
            t.squared.to_real(),
            t.si.to_real(),
            opt(run.thr_i[k].map(|v| v.to_real())),
            u8::from(run.qrs_active[k]),
        );
    }
    out
}

fn cmd_stages(a: StagesArgs) -> Result<ExitCode> {
    let (_, rec, cfg) = load(&a.input)?;
    let text = match a.path {
        Datapath::Fixed => stage_rows(&analyze_fixed(&rec.samples, &cfg)?),
        Datapath::Reference => stage_rows(&analyze_reference(&rec.samples, &cfg)?),
    };
    emit(a.output.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&a.min_se) || !(0.0..=1.0).contains(&a.min_ppv) {
        bail!("--min-se and --min-ppv must lie in [0, 1]");
    }
    let (original, rec, cfg) = load(&a.input)?;
    let text = fs::read_to_string(&a.annotations)
        .with_context(|| format!("reading {}", a.annotations.display()))?;
    let ann = read_annotations_csv(&text, original.fs)
        .with_context(|| format!("parsing {}", a.annotations.display()))?;
    let ann = if ann.fs == rec.fs {
        ann
    } else {
        ann.rescaled(rec.fs)?
    };
    let beats = beats_for(a.path, &rec.samples, &cfg)?;
    let detected: Vec<usize> = beats.iter().map(|b| b.r_peak_index).collect();
    let report = bench(&detected, ann.indices(), a.window_samples);
    let lines = [
        ("annotations", ann.len().to_string()),
        ("detections", detected.len().to_string()),
        ("true positives", report.true_positives.to_string()),
        ("false positives", report.false_positives.to_string()),
        ("false negatives", report.false_negatives.to_string()),
        (
            "match window",
            format!("±{} samples", report.match_window_samples),
        ),
        ("sensitivity", format!("{:.4}", report.sensitivity())),
        (
            "positive predictivity",
            format!("{:.4}", report.positive_predictivity()),
        ),
    ];
    for (label, value) in lines {
        println!("{label:<22} {value}");
    }
    if report.meets(a.min_se, a.min_ppv) {
        println!("PASS (floors Se {} +P {})", a.min_se, a.min_ppv);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL (floors Se {} +P {})", a.min_se, a.min_ppv);
        Ok(ExitCode::from(2))
    }
}

fn cmd_compare(a: CompareArgs) -> Result<ExitCode> {
    let (_, rec, cfg) = load(&a.input)?;
    let tol = Tolerances {
        stage: a.stage_tolerance,
        beat_samples: a.beat_tolerance,
    };
    let (_, _, report) = compare_fixed_reference(&rec.samples, &cfg, tol)?;
    println!("format {}, {} samples", cfg.format, report.samples);
    println!("stage        max |fixed - reference|");
    for (name, dev) in report.deviation.named() {
        println!("{name:<12} {dev:.6e}");
    }
    let within = if report.stages_within_tolerance() {
        "within"
    } else {
        "exceeds"
    };
    println!("stages {within} tolerance {:.6e}", tol.stage);
    let worst = report
        .beat_deltas
        .iter()
        .map(|d| d.unsigned_abs())
        .max()
        .unwrap_or(0);
    println!(
        "beats fixed {} reference {} matched {} only fixed {} only reference {} (worst offset {worst}, tolerance ±{})",
        report.fixed_beats,
        report.reference_beats,
        report.beat_deltas.len(),
        report.only_fixed,
        report.only_reference,
        tol.beat_samples,
    );
    println!("{}", if report.passes() { "AGREE" } else { "DISAGREE" });
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(a: SynthArgs) -> Result<ExitCode> {
    let (rec, ann) = synth_beats(&SynthParams {
        fs: a.fs,
        bpm: a.bpm,
        amplitude: a.amplitude,
        qrs_width_ms: a.qrs_width_ms,
        duration_s: a.duration_s,
        noise_amplitude: a.noise,
        seed: a.seed,
        first_beat_s: a.first_beat_s,
    })?;
    emit(a.output.as_deref(), &write_csv(&rec))?;
    if let Some(p) = &a.annotations {
        emit(Some(p), &write_annotations_csv(&ann))?;
    }
    Ok(ExitCode::SUCCESS)
}
