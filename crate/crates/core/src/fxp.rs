//! Signed fixed-point arithmetic with saturation.
//!
//! Values are stored as a raw two's-complement integer together with the
//! [`FxpFormat`] that interprets it: `real = raw * 2^-frac_bits`. Every
//! operation saturates to the format's range instead of wrapping, which is
//! what the filter datapath relies on when the squaring stage runs hot.
//!
//! Rounding policy:
//! - [`quantize`] rounds to nearest, ties away from zero.
//! - [`FxpValue::try_mul`] and [`FxpValue::shift_right`] truncate toward
//!   negative infinity (arithmetic shift).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FxpError {
    #[error("invalid fixed-point format: word_bits={word_bits}, frac_bits={frac_bits}")]
    InvalidFormat { word_bits: u32, frac_bits: u32 },
    #[error("non-finite sample value {0}")]
    NonFinite(f64),
    #[error("format mismatch: {left} vs {right}")]
    FormatMismatch { left: FxpFormat, right: FxpFormat },
}

/// Word and fraction lengths of a signed fixed-point number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpFormat {
    word_bits: u32,
    frac_bits: u32,
}

impl FxpFormat {
    /// 32-bit words with 16 fractional bits.
    pub const DEFAULT: FxpFormat = FxpFormat {
        word_bits: 32,
        frac_bits: 16,
    };

    pub fn new(word_bits: u32, frac_bits: u32) -> Result<Self, FxpError> {
        if !(2..=64).contains(&word_bits) || frac_bits >= word_bits {
            return Err(FxpError::InvalidFormat {
                word_bits,
                frac_bits,
            });
        }
        Ok(Self {
            word_bits,
            frac_bits,
        })
    }

    pub fn word_bits(self) -> u32 {
        self.word_bits
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn max_raw(self) -> i64 {
        (((1i128) << (self.word_bits - 1)) - 1) as i64
    }

    pub fn min_raw(self) -> i64 {
        (-((1i128) << (self.word_bits - 1))) as i64
    }

    /// Real value of one least-significant step.
    pub fn resolution(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// Clamps a wide intermediate result into the representable range.
    pub fn saturate(self, wide: i128) -> i64 {
        wide.clamp(self.min_raw() as i128, self.max_raw() as i128) as i64
    }

    pub fn max_value(self) -> FxpValue {
        FxpValue {
            raw: self.max_raw(),
            format: self,
        }
    }

    pub fn min_value(self) -> FxpValue {
        FxpValue {
            raw: self.min_raw(),
            format: self,
        }
    }

    pub fn zero(self) -> FxpValue {
        FxpValue {
            raw: 0,
            format: self,
        }
    }

    /// Builds a value from raw units, saturating out-of-range input.
    pub fn from_raw(self, raw: i128) -> FxpValue {
        FxpValue {
            raw: self.saturate(raw),
            format: self,
        }
    }
}

impl Default for FxpFormat {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for FxpFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.word_bits - self.frac_bits, self.frac_bits)
    }
}

/// A fixed-point number: raw integer plus its format.
///
/// The raw value is always inside the format's range. Arithmetic operators
/// (`+`, `-`, `*`) panic when the operands carry different formats; use the
/// `try_*` methods where the formats are not known to agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpValue {
    raw: i64,
    format: FxpFormat,
}

impl FxpValue {
    pub fn raw(self) -> i64 {
        self.raw
    }

    pub fn format(self) -> FxpFormat {
        self.format
    }

    pub fn to_real(self) -> f64 {
        self.raw as f64 * self.format.resolution()
    }

    pub fn is_zero(self) -> bool {
        self.raw == 0
    }

    fn check(self, other: FxpValue) -> Result<FxpFormat, FxpError> {
        if self.format == other.format {
            Ok(self.format)
        } else {
            Err(FxpError::FormatMismatch {
                left: self.format,
                right: other.format,
            })
        }
    }

    pub fn try_add(self, other: FxpValue) -> Result<FxpValue, FxpError> {
        let fmt = self.check(other)?;
        Ok(fmt.from_raw(self.raw as i128 + other.raw as i128))
    }

    pub fn try_sub(self, other: FxpValue) -> Result<FxpValue, FxpError> {
        let fmt = self.check(other)?;
        Ok(fmt.from_raw(self.raw as i128 - other.raw as i128))
    }

    /// Full-width product, arithmetic shift right by `frac_bits`, saturate.
    pub fn try_mul(self, other: FxpValue) -> Result<FxpValue, FxpError> {
        let fmt = self.check(other)?;
        let wide = (self.raw as i128 * other.raw as i128) >> fmt.frac_bits;
        Ok(fmt.from_raw(wide))
    }

    /// Arithmetic right shift of the raw value (floor division by `2^k`).
    pub fn shift_right(self, k: u32) -> FxpValue {
        FxpValue {
            raw: self.raw >> k.min(63),
            format: self.format,
        }
    }

    /// Absolute value, saturating at the format maximum.
    pub fn saturating_abs(self) -> FxpValue {
        self.format.from_raw((self.raw as i128).abs())
    }
}

impl fmt::Display for FxpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_real())
    }
}

impl PartialOrd for FxpValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.format == other.format).then(|| self.raw.cmp(&other.raw))
    }
}

impl Add for FxpValue {
    type Output = FxpValue;

    fn add(self, rhs: FxpValue) -> FxpValue {
        self.try_add(rhs).expect("fixed-point add")
    }
}

impl Sub for FxpValue {
    type Output = FxpValue;

    fn sub(self, rhs: FxpValue) -> FxpValue {
        self.try_sub(rhs).expect("fixed-point sub")
    }
}

impl Mul for FxpValue {
    type Output = FxpValue;

    fn mul(self, rhs: FxpValue) -> FxpValue {
        self.try_mul(rhs).expect("fixed-point mul")
    }
}

/// Nearest representable value to `x` (ties away from zero), saturated.
pub fn quantize(x: f64, fmt: FxpFormat) -> Result<FxpValue, FxpError> {
    if !x.is_finite() {
        return Err(FxpError::NonFinite(x));
    }
    // Scaling by a power of two is exact; `round` ties away from zero.
    let scaled = (x * (fmt.frac_bits as f64).exp2()).round();
    let raw = if scaled >= fmt.max_raw() as f64 {
        fmt.max_raw()
    } else if scaled <= fmt.min_raw() as f64 {
        fmt.min_raw()
    } else {
        scaled as i64
    };
    Ok(FxpValue { raw, format: fmt })
}

/// Quantizes a whole signal, failing on the first non-finite sample.
pub fn quantize_all(xs: &[f64], fmt: FxpFormat) -> Result<Vec<FxpValue>, FxpError> {
    xs.iter().map(|&x| quantize(x, fmt)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q8() -> FxpFormat {
        FxpFormat::new(16, 8).unwrap()
    }

    #[test]
    fn format_validation() {
        assert!(FxpFormat::new(1, 0).is_err());
        assert!(FxpFormat::new(65, 0).is_err());
        assert!(FxpFormat::new(16, 16).is_err());
        assert!(FxpFormat::new(64, 63).is_ok());
        assert!(FxpFormat::new(2, 0).is_ok());
        let f = FxpFormat::new(8, 0).unwrap();
        assert_eq!((f.min_raw(), f.max_raw()), (-128, 127));
        let f = FxpFormat::new(64, 10).unwrap();
        assert_eq!((f.min_raw(), f.max_raw()), (i64::MIN, i64::MAX));
        assert_eq!(q8().resolution(), 1.0 / 256.0);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(0.0, q8()).unwrap().raw(), 0);
        // 1.5 * 2^8 = 384, and 384 / 256 gives 1.5 back.
        let v = quantize(1.5, q8()).unwrap();
        assert_eq!(v.raw(), 384);
        assert_eq!(v.to_real(), 1.5);
        let f8 = FxpFormat::new(8, 0).unwrap();
        assert_eq!(quantize(200.0, f8).unwrap().raw(), 127);
        assert_eq!(quantize(-200.0, f8).unwrap().raw(), -128);
        assert!(matches!(
            quantize(f64::NAN, q8()),
            Err(FxpError::NonFinite(_))
        ));
        assert!(quantize(f64::INFINITY, q8()).is_err());
    }

    #[test]
    fn quantize_ties_away_from_zero() {
        let f = FxpFormat::new(16, 0).unwrap();
        assert_eq!(quantize(2.5, f).unwrap().raw(), 3);
        assert_eq!(quantize(-2.5, f).unwrap().raw(), -3);
        assert_eq!(quantize(2.4999, f).unwrap().raw(), 2);
    }

    #[test]
    fn add_sub_examples() {
        let f = q8();
        assert_eq!((f.from_raw(5) + f.from_raw(-5)).raw(), 0);
        assert_eq!(f.max_value() + f.from_raw(1), f.max_value());
        assert_eq!(f.min_value() - f.from_raw(1), f.min_value());
        // 1.5 - 0.5 = 1.0
        let d = f.from_raw(384) - f.from_raw(128);
        assert_eq!(d.raw(), 256);
        assert_eq!(d.to_real(), 1.5 - 0.5);
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = q8().from_raw(1);
        let b = FxpFormat::DEFAULT.from_raw(1);
        assert!(matches!(a.try_add(b), Err(FxpError::FormatMismatch { .. })));
        assert!(a.try_sub(b).is_err());
        assert!(a.try_mul(b).is_err());
        assert_eq!(a.partial_cmp(&b), None);
    }

    #[test]
    fn mul_examples() {
        let f = q8();
        let x = f.from_raw(12345);
        assert_eq!((x * f.zero()).raw(), 0);
        assert_eq!((f.from_raw(256) * f.from_raw(256)).raw(), 256);
        // (128 * 128) >> 8 = 64
        assert_eq!((f.from_raw(128) * f.from_raw(128)).raw(), 64);
        // floor toward -inf: (-1 * 1) >> 8 = -1
        assert_eq!((f.from_raw(-1) * f.from_raw(1)).raw(), -1);
        assert_eq!(f.max_value() * f.max_value(), f.max_value());
        assert_eq!(f.max_value() * f.min_value(), f.min_value());
    }

    #[test]
    fn shift_examples() {
        let f = q8();
        assert_eq!(f.from_raw(32).shift_right(5).raw(), 1);
        assert_eq!(f.from_raw(-1).shift_right(1).raw(), -1);
        assert_eq!(f.from_raw(-33).shift_right(5).raw(), -2);
        assert_eq!(f.zero().shift_right(17).raw(), 0);
    }

    #[test]
    fn abs_saturates() {
        let f = q8();
        assert_eq!(f.min_value().saturating_abs(), f.max_value());
        assert_eq!(f.from_raw(-7).saturating_abs().raw(), 7);
    }

    fn format_strategy() -> impl Strategy<Value = FxpFormat> {
        (2u32..=64)
            .prop_flat_map(|w| (Just(w), 0..w))
            .prop_map(|(w, f)| FxpFormat::new(w, f).unwrap())
    }

    fn value_pair() -> impl Strategy<Value = (FxpValue, FxpValue)> {
        format_strategy().prop_flat_map(|fmt| {
            let r = fmt.min_raw()..=fmt.max_raw();
            (r.clone(), r)
                .prop_map(move |(a, b)| (fmt.from_raw(a as i128), fmt.from_raw(b as i128)))
        })
    }

    proptest! {
        #[test]
        fn raw_stays_in_range((a, b) in value_pair()) {
            let fmt = a.format();
            for v in [a + b, a - b, a * b, a.shift_right(3), a.saturating_abs()] {
                prop_assert!(v.raw() >= fmt.min_raw() && v.raw() <= fmt.max_raw());
            }
        }

        #[test]
        fn commutative((a, b) in value_pair()) {
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!(a * b, b * a);
        }

        #[test]
        fn exact_round_trip(raw in -(1i64 << 40)..(1i64 << 40)) {
            let fmt = FxpFormat::new(48, 20).unwrap();
            let x = raw as f64 * fmt.resolution();
            prop_assert_eq!(quantize(x, fmt).unwrap().to_real(), x);
        }

        #[test]
        fn error_bound(x in -100.0f64..100.0, frac in 0u32..24) {
            let fmt = FxpFormat::new(32, frac).unwrap();
            let err = (quantize(x, fmt).unwrap().to_real() - x).abs();
            prop_assert!(err <= (-(frac as f64) - 1.0).exp2());
        }

        #[test]
        fn monotone(x in -1.0e6f64..1.0e6, dx in 0.0f64..1.0e3, fmt in format_strategy()) {
            let lo = quantize(x, fmt).unwrap();
            let hi = quantize(x + dx, fmt).unwrap();
            prop_assert!(lo.raw() <= hi.raw());
        }

        #[test]
        fn shift_matches_mul(raw in 0i64..(1 << 30), k in 0u32..16) {
            let fmt = FxpFormat::new(48, 16).unwrap();
            let a = fmt.from_raw(raw as i128);
            let scale = quantize((-(k as f64)).exp2(), fmt).unwrap();
            prop_assert_eq!(a.shift_right(k), a * scale);
        }
    }
}
