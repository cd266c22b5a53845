//! Minimal WFDB support: the `.hea` fields needed to calibrate a record and
//! the format-212 sample codec.
//!
//! Format 212 packs two 12-bit two's-complement samples into three bytes:
//!
//! ```text
//! byte0 = A[7:0]
//! byte1 = B[11:8] << 4 | A[11:8]
//! byte2 = B[7:0]
//! ```
//!
//! Samples of a multi-signal record are interleaved frame by frame.

use std::fs;
use std::path::Path;

use super::{EcgRecord, IngestError, Units};

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file: String,
    pub format: u32,
    /// ADC units per physical unit (per mV for ECG).
    pub gain: f64,
    pub baseline: i32,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub record: String,
    pub n_signals: usize,
    pub fs: f64,
    pub n_samples: Option<usize>,
    pub signals: Vec<SignalSpec>,
}

const DEFAULT_FS: f64 = 250.0;
const DEFAULT_GAIN: f64 = 200.0;

fn leading_number(s: &str) -> &str {
    let end = s
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || (i == 0 && (c == '-' || c == '+'))))
        .map_or(s.len(), |(i, _)| i);
    &s[..end]
}

impl Header {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, message: &str| IngestError::Header {
            line,
            message: message.to_string(),
        };

        let (line_no, record_line) = lines.next().ok_or_else(|| err(1, "empty header"))?;
        let fields: Vec<&str> = record_line.split_whitespace().collect();
        let record = fields[0].split('/').next().unwrap_or_default().to_string();
        let n_signals: usize = fields
            .get(1)
            .ok_or_else(|| err(line_no, "missing signal count"))?
            .parse()
            .map_err(|_| err(line_no, "bad signal count"))?;
        let fs = match fields.get(2) {
            Some(f) => leading_number(f)
                .parse()
                .map_err(|_| err(line_no, "bad sampling frequency"))?,
            None => DEFAULT_FS,
        };
        let n_samples = match fields.get(3) {
            Some(n) => Some(n.parse().map_err(|_| err(line_no, "bad sample count"))?),
            None => None,
        };

        let mut signals = Vec::with_capacity(n_signals);
        for _ in 0..n_signals {
            let (line_no, l) = lines
                .next()
                .ok_or_else(|| err(line_no, "missing signal line"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() < 2 {
                return Err(err(line_no, "signal line needs file and format"));
            }
            let format: u32 = leading_number(f[1])
                .parse()
                .map_err(|_| err(line_no, "bad format"))?;
            let adc_zero: i32 = match f.get(4) {
                Some(z) => z.parse().map_err(|_| err(line_no, "bad ADC zero"))?,
                None => 0,
            };
            let (gain, baseline) = match f.get(2) {
                Some(g) => {
                    let gain: f64 = leading_number(g)
                        .parse()
                        .map_err(|_| err(line_no, "bad gain"))?;
                    let baseline = match (g.find('('), g.find(')')) {
                        (Some(a), Some(b)) if b > a => g[a + 1..b]
                            .parse()
                            .map_err(|_| err(line_no, "bad baseline"))?,
                        _ => adc_zero,
                    };
                    (if gain == 0.0 { DEFAULT_GAIN } else { gain }, baseline)
                }
                None => (DEFAULT_GAIN, adc_zero),
            };
            let description = if f.len() > 8 {
                f[8..].join(" ")
            } else {
                String::new()
            };
            signals.push(SignalSpec {
                file: f[0].to_string(),
                format,
                gain,
                baseline,
                description,
            });
        }
        Ok(Self {
            record,
            n_signals,
            fs,
            n_samples,
            signals,
        })
    }
}

fn sign_extend_12(v: u16) -> i16 {
    ((v << 4) as i16) >> 4
}

/// Decodes every sample in `bytes`. A trailing two-byte group carries one
/// sample; a single stray trailing byte is an error.
pub fn decode_212(bytes: &[u8]) -> Result<Vec<i16>, IngestError> {
    if bytes.len() % 3 == 1 {
        return Err(IngestError::Truncated {
            offset: bytes.len(),
            needed: bytes.len() + 1,
        });
    }
    let mut out = Vec::with_capacity(bytes.len() / 3 * 2 + 1);
    for g in bytes.chunks(3) {
        let a = g[0] as u16 | ((g[1] as u16 & 0x0F) << 8);
        out.push(sign_extend_12(a));
        if let Some(&b2) = g.get(2) {
            let b = b2 as u16 | ((g[1] as u16 & 0xF0) << 4);
            out.push(sign_extend_12(b));
        }
    }
    Ok(out)
}

/// Packs samples (each must fit in 12 bits; higher bits are dropped).
/// An odd final sample is written as a two-byte group.
pub fn encode_212(samples: &[i16]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len().div_ceil(2) * 3);
    for pair in samples.chunks(2) {
        let a = pair[0] as u16 & 0x0FFF;
        let b = pair.get(1).map(|&b| b as u16 & 0x0FFF);
        out.push(a as u8);
        out.push(((a >> 8) as u8) | b.map_or(0, |b| ((b >> 4) & 0xF0) as u8));
        if let Some(b) = b {
            out.push(b as u8);
        }
    }
    out
}

fn bytes_for(n_values: usize) -> usize {
    n_values / 2 * 3 + if n_values % 2 == 1 { 2 } else { 0 }
}

/// One channel of an `n_signals`-way interleaved format-212 stream.
pub fn read_212_channel(
    bytes: &[u8],
    n_signals: usize,
    channel: usize,
    n_samples: usize,
) -> Result<Vec<i16>, IngestError> {
    if channel >= n_signals {
        return Err(IngestError::ChannelOutOfRange {
            channel,
            available: n_signals,
        });
    }
    let needed = bytes_for(n_samples * n_signals);
    if bytes.len() < needed {
        return Err(IngestError::Truncated {
            offset: bytes.len(),
            needed,
        });
    }
    let flat = decode_212(&bytes[..needed])?;
    Ok(flat
        .into_iter()
        .skip(channel)
        .step_by(n_signals)
        .take(n_samples)
        .collect())
}

/// Channel 0 or 1 of a two-signal format-212 stream.
pub fn read_212(bytes: &[u8], channel: usize, n_samples: usize) -> Result<Vec<i16>, IngestError> {
    read_212_channel(bytes, 2, channel, n_samples)
}

/// Reads one channel of the record described by the `.hea` file at
/// `header_path`; the signal file is resolved next to it.
pub fn read_record(
    header_path: &Path,
    channel: usize,
    units: Units,
) -> Result<EcgRecord, IngestError> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| IngestError::Io { path, source }
    };
    let text = fs::read_to_string(header_path).map_err(io(header_path))?;
    let header = Header::parse(&text)?;
    let spec = header
        .signals
        .get(channel)
        .ok_or(IngestError::ChannelOutOfRange {
            channel,
            available: header.n_signals,
        })?;
    if spec.format != 212 {
        return Err(IngestError::UnsupportedFormat(spec.format));
    }
    let dat_path = header_path.with_file_name(&spec.file);
    let bytes = fs::read(&dat_path).map_err(io(&dat_path))?;
    // Signals sharing the file are interleaved in header order.
    let in_file: Vec<usize> = (0..header.n_signals)
        .filter(|&s| header.signals[s].file == spec.file)
        .collect();
    let position = in_file.iter().position(|&s| s == channel).unwrap_or(0);
    let n_samples = header
        .n_samples
        .unwrap_or(decode_212(&bytes)?.len() / in_file.len());
    let adc = read_212_channel(&bytes, in_file.len(), position, n_samples)?;
    let samples = match units {
        Units::Adc => adc.iter().map(|&v| v as f64).collect(),
        Units::Millivolts => adc
            .iter()
            .map(|&v| (v as i32 - spec.baseline) as f64 / spec.gain)
            .collect(),
    };
    let name = if spec.description.is_empty() {
        format!("signal {channel}")
    } else {
        spec.description.clone()
    };
    let rec = EcgRecord {
        samples,
        fs: header.fs,
        channel_name: name,
        source: header_path.display().to_string(),
        units,
    };
    rec.validate()?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_examples() {
        assert_eq!(decode_212(&[0x01, 0x00, 0x00]).unwrap(), vec![1, 0]);
        assert_eq!(decode_212(&[0xFF, 0x0F, 0x00]).unwrap(), vec![-1, 0]);
        assert_eq!(decode_212(&[0x00, 0xF0, 0xFF]).unwrap(), vec![0, -1]);
        assert_eq!(decode_212(&[0x00, 0x08, 0x00]).unwrap(), vec![-2048, 0]);
        assert_eq!(decode_212(&[0xFF, 0x07, 0x00]).unwrap(), vec![2047, 0]);
        assert_eq!(decode_212(&[0u8; 30]).unwrap(), vec![0; 20]);
        assert_eq!(read_212(&[0x01, 0x00, 0x00], 1, 1).unwrap(), vec![0]);
    }

    #[test]
    fn truncation_and_channel_errors() {
        assert!(matches!(
            read_212(&[0u8; 5], 0, 2),
            Err(IngestError::Truncated {
                offset: 5,
                needed: 6
            })
        ));
        assert!(matches!(
            read_212(&[0u8; 6], 2, 1),
            Err(IngestError::ChannelOutOfRange { channel: 2, .. })
        ));
        assert!(matches!(
            decode_212(&[0u8; 4]),
            Err(IngestError::Truncated { .. })
        ));
    }

    #[test]
    fn odd_sample_counts() {
        let bytes = encode_212(&[5, -6, 7]);
        assert_eq!(bytes.len(), 5);
        assert_eq!(decode_212(&bytes).unwrap(), vec![5, -6, 7]);
        assert_eq!(read_212_channel(&bytes, 1, 0, 3).unwrap(), vec![5, -6, 7]);
    }

    #[test]
    fn header_parse() {
        let text = "100 2 360 650000\n\
                    100.dat 212 200 11 1024 995 -22131 0 MLII\n\
                    100.dat 212 200(0)/mV 11 1024 1011 20052 0 V5\n\
                    # 69 M 1085 1629 x1\n";
        let h = Header::parse(text).unwrap();
        assert_eq!(h.record, "100");
        assert_eq!((h.n_signals, h.fs, h.n_samples), (2, 360.0, Some(650000)));
        assert_eq!(h.signals[0].baseline, 1024);
        assert_eq!(h.signals[0].description, "MLII");
        assert_eq!(h.signals[1].baseline, 0);
        assert_eq!(h.signals[1].gain, 200.0);
        assert!(Header::parse("rec two 360\n").is_err());
        assert!(Header::parse("rec 1 360 10\n").is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(groups in proptest::collection::vec(any::<[u8; 3]>(), 0..200)) {
            let bytes: Vec<u8> = groups.concat();
            prop_assert_eq!(encode_212(&decode_212(&bytes).unwrap()), bytes);
        }

        #[test]
        fn samples_round_trip(samples in proptest::collection::vec(-2048i16..=2047, 0..200)) {
            prop_assert_eq!(decode_212(&encode_212(&samples)).unwrap(), samples);
        }
    }
}
