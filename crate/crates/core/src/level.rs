//! The numeric surface shared by the fixed-point datapath and the
//! double-precision reference. Detection and feature extraction are written
//! once against [`Level`] and run unchanged over either representation.

use std::fmt::Debug;
use std::ops::{Add, Sub};

use crate::fxp::FxpValue;

pub trait Level: Copy + PartialOrd + Debug + Add<Output = Self> + Sub<Output = Self> {
    /// Zero in the same representation as `self`.
    fn zero_like(self) -> Self;

    /// Division by `2^k`: an arithmetic shift in fixed point, exact in float.
    fn shr(self, k: u32) -> Self;

    fn abs(self) -> Self;

    /// Arithmetic mean. Fixed point floors the quotient.
    fn mean(values: &[Self]) -> Option<Self>;

    fn to_real(self) -> f64;
}

impl Level for f64 {
    fn zero_like(self) -> Self {
        0.0
    }

    fn shr(self, k: u32) -> Self {
        self / (k as f64).exp2()
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }

    fn mean(values: &[Self]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }

    fn to_real(self) -> f64 {
        self
    }
}

impl Level for FxpValue {
    fn zero_like(self) -> Self {
        self.format().zero()
    }

    fn shr(self, k: u32) -> Self {
        self.shift_right(k)
    }

    fn abs(self) -> Self {
        self.saturating_abs()
    }

    fn mean(values: &[Self]) -> Option<Self> {
        let first = values.first()?;
        let sum: i128 = values.iter().map(|v| v.raw() as i128).sum();
        Some(
            first
                .format()
                .from_raw(sum.div_euclid(values.len() as i128)),
        )
    }

    fn to_real(self) -> f64 {
        FxpValue::to_real(self)
    }
}
