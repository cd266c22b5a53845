//! 360 Hz to 200 Hz conversion by linear interpolation.
//!
//! Output sample `k` sits at input position `k * 360 / 200 = 9k / 5`, so
//! the interpolation weights are exact fifths and need no floating-point
//! time arithmetic.

use super::{EcgRecord, IngestError};

pub const SUPPORTED_INPUT_RATES: [f64; 1] = [360.0];
const OUTPUT_RATE: f64 = 200.0;

pub fn resample_to_200(rec: &EcgRecord) -> Result<EcgRecord, IngestError> {
    if rec.fs != 360.0 {
        return Err(IngestError::UnsupportedRate {
            fs: rec.fs,
            supported: SUPPORTED_INPUT_RATES
                .iter()
                .map(|r| format!("{r} Hz"))
                .collect::<Vec<_>>()
                .join(", "),
        });
    }
    let x = &rec.samples;
    let n_out = x.len() * 5 / 9;
    let samples = (0..n_out)
        .map(|k| {
            let i = 9 * k / 5;
            let frac = (9 * k % 5) as f64 / 5.0;
            match x.get(i + 1) {
                Some(&next) if frac > 0.0 => x[i] + (next - x[i]) * frac,
                _ => x[i],
            }
        })
        .collect();
    Ok(EcgRecord {
        samples,
        fs: OUTPUT_RATE,
        ..rec.clone()
    })
}

/// Maps sample indices between rates, rounding to nearest. Indices that
/// collide after rounding are kept once.
pub fn rescale_indices(indices: &[usize], from_fs: f64, to_fs: f64) -> Vec<usize> {
    let mut out: Vec<usize> = indices
        .iter()
        .map(|&i| (i as f64 * to_fs / from_fs).round() as usize)
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(samples: Vec<f64>, fs: f64) -> EcgRecord {
        EcgRecord::new(samples, fs, "x", "t").unwrap()
    }

    #[test]
    fn lengths() {
        assert_eq!(
            resample_to_200(&rec(vec![0.0; 9], 360.0))
                .unwrap()
                .samples
                .len(),
            5
        );
        assert_eq!(
            resample_to_200(&rec(vec![0.0; 8], 360.0))
                .unwrap()
                .samples
                .len(),
            4
        );
        assert_eq!(
            resample_to_200(&rec(vec![0.0; 3600], 360.0))
                .unwrap()
                .samples
                .len(),
            2000
        );
    }

    #[test]
    fn constant_and_ramp() {
        let c = resample_to_200(&rec(vec![1.25; 100], 360.0)).unwrap();
        assert!(c.samples.iter().all(|&v| v == 1.25));
        // x = t in seconds.
        let r = resample_to_200(&rec((0..360).map(|n| n as f64 / 360.0).collect(), 360.0)).unwrap();
        for (k, v) in r.samples.iter().enumerate() {
            assert!((v - k as f64 / 200.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_other_rates() {
        let err = resample_to_200(&rec(vec![0.0; 10], 250.0)).unwrap_err();
        assert!(err.to_string().contains("360 Hz"));
    }

    #[test]
    fn index_rescaling() {
        assert_eq!(
            rescale_indices(&[0, 9, 360, 361], 360.0, 200.0),
            vec![0, 5, 200, 201]
        );
    }

    proptest! {
        #[test]
        fn stays_within_input_range(x in proptest::collection::vec(-10.0f64..10.0, 2..300)) {
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let y = resample_to_200(&rec(x, 360.0)).unwrap();
            prop_assert!(y.samples.iter().all(|&v| v >= lo && v <= hi));
        }
    }
}
