mod common;

use std::fs;

use qrs_core::ingest::{
    decode_212, encode_212, read_212, read_record, resample_to_200, Header, Units,
};

/// Initial value and 16-bit checksum fields of a signal line.
fn header_checks(text: &str, signal: usize) -> (i32, i16) {
    let line = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .nth(1 + signal)
        .unwrap();
    let f: Vec<&str> = line.split_whitespace().collect();
    (f[5].parse().unwrap(), f[6].parse().unwrap())
}

fn checksum(samples: &[i16]) -> i16 {
    samples.iter().fold(0i16, |acc, &v| acc.wrapping_add(v))
}

#[test]
fn record_208_matches_header_checks() {
    let dir = common::data_dir();
    let text = fs::read_to_string(dir.join("208e.hea")).unwrap();
    let header = Header::parse(&text).unwrap();
    assert_eq!(
        (header.n_signals, header.fs, header.n_samples),
        (1, 360.0, Some(108000))
    );
    let (first, sum) = header_checks(&text, 0);

    let bytes = fs::read(dir.join("208e.dat")).unwrap();
    let adc = decode_212(&bytes).unwrap();
    assert_eq!(adc.len(), 108000);
    assert_eq!(adc[0] as i32, first);
    assert_eq!(checksum(&adc), sum);

    let rec = read_record(&dir.join("208e.hea"), 0, Units::Adc).unwrap();
    assert_eq!(rec.samples.len(), 108000);
    assert_eq!(rec.samples[0], first as f64);
    let mv = read_record(&dir.join("208e.hea"), 0, Units::Millivolts).unwrap();
    assert_eq!(mv.samples[0], (first - 1024) as f64 / 200.0);
    assert_eq!(mv.channel_name, "MLII");
}

#[test]
fn record_100_frames_match_header_checks() {
    let dir = common::data_dir();
    let text = fs::read_to_string(dir.join("100x.hea")).unwrap();
    let bytes = fs::read(dir.join("100x.dat")).unwrap();
    assert_eq!(bytes.len(), 30);
    for ch in 0..2 {
        let (first, _) = header_checks(&text, ch);
        let adc = read_212(&bytes, ch, 10).unwrap();
        assert_eq!(adc[0] as i32, first);
        let rec = read_record(&dir.join("100x.hea"), ch, Units::Adc).unwrap();
        assert_eq!(
            rec.samples,
            adc.iter().map(|&v| v as f64).collect::<Vec<_>>()
        );
    }
}

#[test]
fn real_files_round_trip() {
    let dir = common::data_dir();
    for name in ["100x.dat", "208e.dat"] {
        let bytes = fs::read(dir.join(name)).unwrap();
        assert_eq!(encode_212(&decode_212(&bytes).unwrap()), bytes, "{name}");
    }
}

#[test]
fn resampled_length_and_rate() {
    let rec = read_record(&common::data_dir().join("208e.hea"), 0, Units::Millivolts).unwrap();
    let out = resample_to_200(&rec).unwrap();
    assert_eq!(out.fs, 200.0);
    assert_eq!(out.samples.len(), 108000 * 5 / 9);
    assert_eq!(out.samples[0], rec.samples[0]);
    assert_eq!(out.samples[5], rec.samples[9]);
}

#[test]
fn truncated_record_is_reported() {
    let dir = tempfile_dir();
    let src = common::data_dir();
    fs::copy(src.join("208e.hea"), dir.join("208e.hea")).unwrap();
    let bytes = fs::read(src.join("208e.dat")).unwrap();
    fs::write(dir.join("208e.dat"), &bytes[..bytes.len() - 3]).unwrap();
    let err = read_record(&dir.join("208e.hea"), 0, Units::Adc).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qrs-ingest-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}
