//! The five Pan-Tompkins stages as streaming fixed-point operators.
//!
//! Every stage evaluates its difference equation exactly in a wide
//! accumulator and saturates once, at its output register. Divisions by 32
//! and 8 are arithmetic right shifts.
//!
//! | stage      | recursion                                                        |
//! |------------|------------------------------------------------------------------|
//! | low-pass   | `y(n) = 2y(n-1) - y(n-2) + x(n) - 2x(n-6) + x(n-12)`             |
//! | high-pass  | `y(n) = y(n-1) - x(n)/32 + x(n-16) - x(n-17) + x(n-32)/32`       |
//! | derivative | `y(n) = (2x(n) + x(n-1) - x(n-3) - 2x(n-4)) / 8`                 |
//! | squaring   | `y(n) = x(n)^2`                                                  |
//! | integrator | `y(n) = (x(n-1) + ... + x(n-32)) / 32`                           |
//!
//! [`batch`] recomputes the same cascade over whole arrays by direct
//! indexing. The two routes must agree bit for bit.

use crate::fxp::{FxpFormat, FxpValue};

pub const LOWPASS_DELAY: usize = 5;
pub const HIGHPASS_DELAY: usize = 16;
pub const DERIVATIVE_DELAY: usize = 2;
pub const INTEGRATOR_DELAY: usize = 16;
/// Samples from raw input to the band-passed (SF) tap.
pub const SF_DELAY: usize = LOWPASS_DELAY + HIGHPASS_DELAY;
/// Samples from raw input to the integrated (SI) tap.
pub const SI_DELAY: usize = SF_DELAY + DERIVATIVE_DELAY + INTEGRATOR_DELAY;

pub const INTEGRATOR_WINDOW: usize = 32;
const INTEGRATOR_SHIFT: u32 = 5;
const HIGHPASS_SHIFT: u32 = 5;
const DERIVATIVE_SHIFT: u32 = 3;

/// One output per input sample, carrying every intermediate signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineTap<V> {
    pub index: usize,
    pub raw_in: V,
    pub lowpass: V,
    /// Band-passed signal (low-pass then high-pass).
    pub sf: V,
    pub derivative: V,
    pub squared: V,
    /// Moving-window integrator output.
    pub si: V,
}

pub type FxpTap = PipelineTap<FxpValue>;

/// Fixed-length history of past inputs, `x(n-1)` through `x(n-N)`.
#[derive(Debug, Clone)]
pub struct DelayLine<const N: usize> {
    buf: [i64; N],
    head: usize,
}

impl<const N: usize> DelayLine<N> {
    pub fn new() -> Self {
        Self {
            buf: [0; N],
            head: 0,
        }
    }

    /// `x(n-k)` for `1 <= k <= N`, relative to the next sample to be pushed.
    pub fn delayed(&self, k: usize) -> i64 {
        debug_assert!((1..=N).contains(&k));
        self.buf[(self.head + N - k) % N]
    }

    /// Stores `x(n)` and returns the value that fell off, `x(n-N)`.
    pub fn push(&mut self, x: i64) -> i64 {
        let old = std::mem::replace(&mut self.buf[self.head], x);
        self.head = (self.head + 1) % N;
        old
    }

    pub fn len(&self) -> usize {
        N
    }

    pub fn is_empty(&self) -> bool {
        N == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.buf.iter().copied()
    }

    pub fn clear(&mut self) {
        self.buf = [0; N];
        self.head = 0;
    }
}

impl<const N: usize> Default for DelayLine<N> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone)]
pub struct LowPass {
    format: FxpFormat,
    x: DelayLine<12>,
    y: DelayLine<2>,
}

impl LowPass {
    pub fn new(format: FxpFormat) -> Self {
        Self {
            format,
            x: DelayLine::new(),
            y: DelayLine::new(),
        }
    }

    pub fn step(&mut self, x: FxpValue) -> FxpValue {
        debug_assert_eq!(x.format(), self.format);
        let xn = x.raw() as i128;
        let wide = 2 * self.y.delayed(1) as i128 - self.y.delayed(2) as i128 + xn
            - 2 * self.x.delayed(6) as i128
            + self.x.delayed(12) as i128;
        let y = self.format.from_raw(wide);
        self.x.push(x.raw());
        self.y.push(y.raw());
        y
    }

    pub fn reset(&mut self) {
        self.x.clear();
        self.y.clear();
    }
}

#[derive(Debug, Clone)]
pub struct HighPass {
    format: FxpFormat,
    x: DelayLine<32>,
    y: DelayLine<1>,
}

impl HighPass {
    pub fn new(format: FxpFormat) -> Self {
        Self {
            format,
            x: DelayLine::new(),
            y: DelayLine::new(),
        }
    }

    pub fn step(&mut self, x: FxpValue) -> FxpValue {
        debug_assert_eq!(x.format(), self.format);
        let wide = self.y.delayed(1) as i128 - (x.raw() >> HIGHPASS_SHIFT) as i128
            + self.x.delayed(16) as i128
            - self.x.delayed(17) as i128
            + (self.x.delayed(32) >> HIGHPASS_SHIFT) as i128;
        let y = self.format.from_raw(wide);
        self.x.push(x.raw());
        self.y.push(y.raw());
        y
    }

    pub fn reset(&mut self) {
        self.x.clear();
        self.y.clear();
    }
}

#[derive(Debug, Clone)]
pub struct Derivative {
    format: FxpFormat,
    x: DelayLine<4>,
}

impl Derivative {
    pub fn new(format: FxpFormat) -> Self {
        Self {
            format,
            x: DelayLine::new(),
        }
    }

    pub fn step(&mut self, x: FxpValue) -> FxpValue {
        debug_assert_eq!(x.format(), self.format);
        let wide = 2 * x.raw() as i128 + self.x.delayed(1) as i128
            - self.x.delayed(3) as i128
            - 2 * self.x.delayed(4) as i128;
        self.x.push(x.raw());
        self.format.from_raw(wide >> DERIVATIVE_SHIFT)
    }

    pub fn reset(&mut self) {
        self.x.clear();
    }
}

/// Point-wise squaring; never negative.
pub fn square(x: FxpValue) -> FxpValue {
    x * x
}

/// Mean of the previous 32 inputs. The running sum is kept in an accumulator
/// wide enough for 32 full-scale words, so it never saturates.
#[derive(Debug, Clone)]
pub struct Integrator {
    format: FxpFormat,
    window: DelayLine<INTEGRATOR_WINDOW>,
    sum: i128,
}

impl Integrator {
    pub fn new(format: FxpFormat) -> Self {
        Self {
            format,
            window: DelayLine::new(),
            sum: 0,
        }
    }

    pub fn step(&mut self, x: FxpValue) -> FxpValue {
        debug_assert_eq!(x.format(), self.format);
        let y = self.format.from_raw(self.sum >> INTEGRATOR_SHIFT);
        let dropped = self.window.push(x.raw());
        self.sum += x.raw() as i128 - dropped as i128;
        y
    }

    pub fn running_sum(&self) -> i128 {
        self.sum
    }

    /// Sum of the window contents recomputed from scratch.
    pub fn recomputed_sum(&self) -> i128 {
        self.window.iter().map(i128::from).sum()
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.sum = 0;
    }
}

/// The full cascade: low-pass, high-pass, derivative, squaring, integrator.
#[derive(Debug, Clone)]
pub struct Pipeline {
    format: FxpFormat,
    lowpass: LowPass,
    highpass: HighPass,
    derivative: Derivative,
    integrator: Integrator,
    next_index: usize,
}

impl Pipeline {
    pub fn new(format: FxpFormat) -> Self {
        Self {
            format,
            lowpass: LowPass::new(format),
            highpass: HighPass::new(format),
            derivative: Derivative::new(format),
            integrator: Integrator::new(format),
            next_index: 0,
        }
    }

    pub fn format(&self) -> FxpFormat {
        self.format
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    pub fn step(&mut self, raw: FxpValue) -> FxpTap {
        let lowpass = self.lowpass.step(raw);
        let sf = self.highpass.step(lowpass);
        let derivative = self.derivative.step(sf);
        let squared = square(derivative);
        let si = self.integrator.step(squared);
        let index = self.next_index;
        self.next_index += 1;
        PipelineTap {
            index,
            raw_in: raw,
            lowpass,
            sf,
            derivative,
            squared,
            si,
        }
    }

    pub fn process(&mut self, samples: &[FxpValue]) -> Vec<FxpTap> {
        samples.iter().map(|&s| self.step(s)).collect()
    }

    pub fn reset(&mut self) {
        self.lowpass.reset();
        self.highpass.reset();
        self.derivative.reset();
        self.integrator.reset();
        self.next_index = 0;
    }
}

/// Whole-array evaluation of the cascade by direct indexing, `x(n-k) = 0`
/// for `n < k`. Kept separate from the streaming operators so the two can
/// be checked against each other.
pub mod batch {
    use super::*;

    fn at(x: &[i64], n: usize, k: usize) -> i128 {
        if n >= k {
            x[n - k] as i128
        } else {
            0
        }
    }

    pub fn lowpass(x: &[i64], fmt: FxpFormat) -> Vec<i64> {
        let mut y = vec![0i64; x.len()];
        for n in 0..x.len() {
            let wide =
                2 * at(&y, n, 1) - at(&y, n, 2) + x[n] as i128 - 2 * at(x, n, 6) + at(x, n, 12);
            y[n] = fmt.saturate(wide);
        }
        y
    }

    pub fn highpass(x: &[i64], fmt: FxpFormat) -> Vec<i64> {
        let mut y = vec![0i64; x.len()];
        for n in 0..x.len() {
            let wide = at(&y, n, 1) - (at(x, n, 0) >> HIGHPASS_SHIFT) + at(x, n, 16) - at(x, n, 17)
                + (at(x, n, 32) >> HIGHPASS_SHIFT);
            y[n] = fmt.saturate(wide);
        }
        y
    }

    pub fn derivative(x: &[i64], fmt: FxpFormat) -> Vec<i64> {
        (0..x.len())
            .map(|n| {
                let wide = 2 * at(x, n, 0) + at(x, n, 1) - at(x, n, 3) - 2 * at(x, n, 4);
                fmt.saturate(wide >> DERIVATIVE_SHIFT)
            })
            .collect()
    }

    pub fn square(x: &[i64], fmt: FxpFormat) -> Vec<i64> {
        x.iter()
            .map(|&v| fmt.saturate((v as i128 * v as i128) >> fmt.frac_bits()))
            .collect()
    }

    pub fn integrate(x: &[i64], fmt: FxpFormat) -> Vec<i64> {
        (0..x.len())
            .map(|n| {
                let sum: i128 = (1..=INTEGRATOR_WINDOW).map(|i| at(x, n, i)).sum();
                fmt.saturate(sum >> INTEGRATOR_SHIFT)
            })
            .collect()
    }

    pub fn process(samples: &[FxpValue], fmt: FxpFormat) -> Vec<FxpTap> {
        let raw: Vec<i64> = samples.iter().map(|s| s.raw()).collect();
        let lp = lowpass(&raw, fmt);
        let sf = highpass(&lp, fmt);
        let d = derivative(&sf, fmt);
        let sq = square(&d, fmt);
        let si = integrate(&sq, fmt);
        (0..raw.len())
            .map(|n| PipelineTap {
                index: n,
                raw_in: fmt.from_raw(raw[n] as i128),
                lowpass: fmt.from_raw(lp[n] as i128),
                sf: fmt.from_raw(sf[n] as i128),
                derivative: fmt.from_raw(d[n] as i128),
                squared: fmt.from_raw(sq[n] as i128),
                si: fmt.from_raw(si[n] as i128),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fxp::quantize;

    fn fmt() -> FxpFormat {
        FxpFormat::DEFAULT
    }

    fn one() -> FxpValue {
        quantize(1.0, fmt()).unwrap()
    }

    #[test]
    fn delay_line_order() {
        let mut d = DelayLine::<3>::new();
        for x in 1..=5 {
            d.push(x);
        }
        assert_eq!((d.delayed(1), d.delayed(2), d.delayed(3)), (5, 4, 3));
        assert_eq!(d.push(6), 3);
    }

    #[test]
    fn history_lengths_are_fixed() {
        let p = Pipeline::new(fmt());
        assert_eq!(p.lowpass.x.len(), 12);
        assert_eq!(p.lowpass.y.len(), 2);
        assert_eq!(p.highpass.x.len(), 32);
        assert_eq!(p.highpass.y.len(), 1);
        assert_eq!(p.derivative.x.len(), 4);
        assert_eq!(p.integrator.window.len(), 32);
    }

    #[test]
    fn zero_in_zero_out() {
        let mut p = Pipeline::new(fmt());
        for tap in p.process(&vec![fmt().zero(); 300]) {
            assert!(tap.lowpass.is_zero() && tap.sf.is_zero() && tap.si.is_zero());
            assert!(tap.derivative.is_zero() && tap.squared.is_zero());
        }
    }

    #[test]
    fn lowpass_step_gain() {
        let mut lp = LowPass::new(fmt());
        let out: Vec<_> = (0..200).map(|_| lp.step(one())).collect();
        assert!(out[11..].iter().all(|y| y.to_real() == 36.0));
    }

    #[test]
    fn highpass_constant_settles() {
        let mut hp = HighPass::new(fmt());
        let c = quantize(0.75, fmt()).unwrap();
        let out: Vec<_> = (0..200).map(|_| hp.step(c)).collect();
        assert!(out[32..].iter().all(|y| y.is_zero()));
    }

    #[test]
    fn derivative_ramp_is_unit_slope() {
        let mut d = Derivative::new(fmt());
        let out: Vec<_> = (0..20)
            .map(|n| d.step(quantize(n as f64, fmt()).unwrap()))
            .collect();
        // (2n + (n-1) - (n-3) - 2(n-4)) / 8 = 10/8
        assert!(out[4..].iter().all(|y| y.to_real() == 1.25));
    }

    #[test]
    fn integrator_constant_and_invariant() {
        let mut it = Integrator::new(fmt());
        let c = quantize(3.0, fmt()).unwrap();
        for n in 0..100 {
            let y = it.step(c);
            assert_eq!(it.running_sum(), it.recomputed_sum());
            if n >= 32 {
                assert_eq!(y, c);
            }
        }
    }

    #[test]
    fn squaring_is_non_negative() {
        for r in [-5_000_000i64, -1, 0, 1, 77_777] {
            assert!(square(fmt().from_raw(r as i128)).raw() >= 0);
        }
        assert_eq!(square(fmt().min_value()), fmt().max_value());
        let half = quantize(0.5, fmt()).unwrap();
        assert_eq!(square(half).raw(), 16384);
        assert_eq!(square(quantize(-1.0, fmt()).unwrap()), one());
    }

    #[test]
    fn reset_matches_fresh() {
        let input: Vec<_> = (0..150)
            .map(|n| quantize(((n * 7) % 13) as f64 * 0.1, fmt()).unwrap())
            .collect();
        let mut p = Pipeline::new(fmt());
        let first = p.process(&input);
        p.reset();
        assert_eq!(p.process(&input), first);
    }

    #[test]
    fn cumulative_delay() {
        assert_eq!(SI_DELAY, 39);
        assert_eq!(SF_DELAY, 21);
    }
}
