//! Multiprecision support: working precision, an MPFR-backed complex type,
//! and upward-biased error radii with unbounded exponent range.

use std::cmp::Ordering;
use std::fmt;

use gmp_mpfr_sys::mpfr;
use num_complex::Complex64;
use rug::float::Round;
use rug::ops::{AddAssignRound, MulAssignRound};
use rug::{Assign, Float};
use serde::Serialize;

use crate::error::ThetaError;

/// Default significand width for all internal arithmetic.
pub const DEFAULT_BITS: u32 = 128;
/// Smallest accepted working precision.
pub const MIN_BITS: u32 = 64;
/// Largest accepted working precision (far beyond anything the library needs).
pub const MAX_BITS: u32 = 1 << 16;

/// Significand width used for every internal operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Precision {
    bits: u32,
}

impl Precision {
    pub const DEFAULT: Precision = Precision { bits: DEFAULT_BITS };

    pub fn new(bits: u32) -> Result<Self, ThetaError> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(ThetaError::InvalidPrecision(bits));
        }
        Ok(Self { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Unit roundoff `2^-bits` of round-to-nearest at this precision.
    pub fn unit_roundoff(self) -> f64 {
        unit_roundoff(self.bits)
    }

    /// The larger of `self` and `bits`.
    pub fn at_least(self, bits: u32) -> Self {
        Self { bits: self.bits.max(bits).min(MAX_BITS) }
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self { bits: DEFAULT_BITS }
    }
}

pub(crate) fn unit_roundoff(bits: u32) -> f64 {
    (-(bits as f64) * std::f64::consts::LN_2).exp()
}

/// Nonnegative error radius. Stored as a 64-bit MPFR float so that bounds on
/// astronomically large values do not overflow; every constructor and
/// operation biases the result upward.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Radius(Float);

const RADIUS_BITS: u32 = 64;

impl Radius {
    pub fn zero() -> Self {
        Radius(Float::with_val(RADIUS_BITS, 0))
    }

    pub fn from_f64(x: f64) -> Self {
        debug_assert!(x >= 0.0 && !x.is_nan());
        Radius(Float::with_val_round(RADIUS_BITS, x.max(0.0), Round::Up).0)
    }

    /// `2^log2` rounded up.
    pub fn from_log2(log2: f64) -> Self {
        if log2 == f64::NEG_INFINITY {
            return Self::zero();
        }
        let e = log2.ceil();
        let frac = log2 - e; // in (-1, 0]
        let mut r = Float::with_val_round(RADIUS_BITS, frac.exp2() * (1.0 + 1e-12), Round::Up).0;
        r <<= e as i32;
        Radius(r)
    }

    /// Upper bound on `|x|`.
    pub fn abs_of(x: &Float) -> Self {
        Radius(Float::with_val_round(RADIUS_BITS, x.abs_ref(), Round::Up).0)
    }

    /// Upper bound on `|z|`.
    pub fn abs_of_complex(z: &BigComplex) -> Self {
        let mut r = Float::with_val_round(RADIUS_BITS, &z.re, Round::Up).0;
        r.abs_mut();
        let mut i = Float::with_val_round(RADIUS_BITS, &z.im, Round::Up).0;
        i.abs_mut();
        r.hypot_round(&i, Round::Up);
        Radius(r)
    }

    pub fn add(&self, other: &Radius) -> Radius {
        let mut r = self.0.clone();
        r.add_assign_round(&other.0, Round::Up);
        Radius(r)
    }

    pub fn mul(&self, other: &Radius) -> Radius {
        let mut r = self.0.clone();
        r.mul_assign_round(&other.0, Round::Up);
        Radius(r)
    }

    pub fn scale(&self, factor: f64) -> Radius {
        debug_assert!(factor >= 0.0);
        let mut r = self.0.clone();
        r.mul_assign_round(factor, Round::Up);
        Radius(r)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    /// Saturating conversion (values beyond f64 range become `f64::MAX`).
    pub fn to_f64(&self) -> f64 {
        let x = self.0.to_f64_round(Round::Up);
        if x.is_infinite() {
            f64::MAX
        } else {
            x
        }
    }

    pub fn log2(&self) -> f64 {
        float_log2(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    /// `self < bound` where `bound` is itself a radius.
    pub fn lt(&self, other: &Radius) -> bool {
        self.0 < other.0
    }
}

impl fmt::Debug for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Radius({})", format_float(&self.0, 6))
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_float(&self.0, 6))
    }
}

/// `log2 |x|` without overflow; `-inf` for zero.
pub fn float_log2(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + e as f64
}

/// Deterministic scientific rendering with `digits` significant digits.
pub fn format_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if let Some(v) = finite_f64(x) {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    x.to_string_radix(10, Some(digits))
}

fn finite_f64(x: &Float) -> Option<f64> {
    let v = x.to_f64();
    (v.is_finite() && (v == 0.0 || v.abs() >= f64::MIN_POSITIVE)).then_some(v)
}

/// Complex number with MPFR real and imaginary parts of equal precision.
#[derive(Clone, Debug, PartialEq)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

impl BigComplex {
    pub fn zero(bits: u32) -> Self {
        Self { re: Float::with_val(bits, 0), im: Float::with_val(bits, 0) }
    }

    pub fn one(bits: u32) -> Self {
        Self { re: Float::with_val(bits, 1), im: Float::with_val(bits, 0) }
    }

    pub fn from_c64(z: Complex64, bits: u32) -> Self {
        Self { re: Float::with_val(bits, z.re), im: Float::with_val(bits, z.im) }
    }

    pub fn from_real(x: &Float, bits: u32) -> Self {
        Self { re: Float::with_val(bits, x), im: Float::with_val(bits, 0) }
    }

    pub fn with_prec(&self, bits: u32) -> Self {
        Self { re: Float::with_val(bits, &self.re), im: Float::with_val(bits, &self.im) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    /// Nearest f64 components (may be infinite for huge values).
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: Float::with_val(self.im.prec(), -&self.im) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// `log2 |z|`, finite for any nonzero value regardless of magnitude.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (x, y, e) = self.scaled_parts();
        x.hypot(y).log2() + e as f64
    }

    /// `|z|` as f64 (saturating to infinity).
    pub fn abs_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (x, y, e) = self.scaled_parts();
        if e > 1023 {
            return f64::INFINITY;
        }
        x.hypot(y) * (e as f64).exp2()
    }

    /// Principal argument in (-pi, pi].
    pub fn arg(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (x, y, _) = self.scaled_parts();
        y.atan2(x)
    }

    /// Components scaled by a common power of two into f64 range.
    fn scaled_parts(&self) -> (f64, f64, i32) {
        let er = self.re.get_exp();
        let ei = self.im.get_exp();
        let e = match (er, ei) {
            (Some(a), Some(b)) => a.max(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => 0,
        };
        let part = |x: &Float| -> f64 {
            match x.get_exp() {
                Some(ex) if e - ex < 1100 => {
                    let (m, mx) = x.to_f64_exp();
                    m * ((mx - e) as f64).exp2()
                }
                _ => 0.0,
            }
        };
        (part(&self.re), part(&self.im), e)
    }

    pub fn add_assign_ref(&mut self, other: &BigComplex) {
        self.re += &other.re;
        self.im += &other.im;
    }

    pub fn sub_assign_ref(&mut self, other: &BigComplex) {
        self.re -= &other.re;
        self.im -= &other.im;
    }

    /// `self += 1` (real unit).
    pub fn add_one(&mut self) {
        self.re += 1u32;
    }

    pub fn scale_assign(&mut self, factor: &Float) {
        self.re *= factor;
        self.im *= factor;
    }

    pub fn scale_u64(&mut self, factor: u64) {
        self.re *= factor;
        self.im *= factor;
    }

    /// `self *= other`. Each component is produced by a single fused
    /// rounding, so the relative error is at most one unit roundoff and
    /// `conj(a)*conj(b)` is bit-identical to `conj(a*b)`.
    pub fn mul_assign_ref(&mut self, other: &BigComplex, scratch: &mut Float) {
        scratch.set_prec(self.re.prec());
        scratch.assign(&self.re * &other.re - &self.im * &other.im);
        std::mem::swap(&mut self.re, scratch);
        // scratch now holds the old real part; MPFR allows the output to alias an input.
        unsafe {
            let im = self.im.as_raw_mut();
            mpfr::fmma(im, scratch.as_raw(), other.im.as_raw(), im, other.re.as_raw(), mpfr::rnd_t::RNDN);
        }
    }

    pub fn mul(&self, other: &BigComplex) -> BigComplex {
        let bits = self.prec();
        BigComplex {
            re: Float::with_val(bits, &self.re * &other.re - &self.im * &other.im),
            im: Float::with_val(bits, &self.re * &other.im + &self.im * &other.re),
        }
    }

    /// `|z|^2` at the working precision.
    pub fn norm_sqr(&self) -> Float {
        Float::with_val(self.prec(), &self.re * &self.re + &self.im * &self.im)
    }

    /// `1 / z`; relative error below three unit roundoffs.
    pub fn recip(&self) -> BigComplex {
        let n = self.norm_sqr();
        let bits = self.prec();
        BigComplex {
            re: Float::with_val(bits, &self.re / &n),
            im: Float::with_val(bits, -(Float::with_val(bits, &self.im / &n))),
        }
    }

    /// `self / other`.
    pub fn div(&self, other: &BigComplex) -> BigComplex {
        let n = other.norm_sqr();
        let bits = self.prec();
        let re = Float::with_val(bits, &self.re * &other.re + &self.im * &other.im);
        let im = Float::with_val(bits, &self.im * &other.re - &self.re * &other.im);
        BigComplex { re: re / &n, im: im / &n }
    }

    /// `exp(self)` via `e^re (cos im + i sin im)`.
    pub fn exp(&self) -> BigComplex {
        let bits = self.prec();
        let mag = Float::with_val(bits, self.re.exp_ref());
        let mut sin = Float::with_val(bits, &self.im);
        let mut cos = Float::new(bits);
        sin.sin_cos_mut(&mut cos);
        BigComplex { re: cos * &mag, im: sin * &mag }
    }

    /// Lexicographic comparison on (re, im), used for deterministic ordering.
    pub fn cmp_lex(&self, other: &BigComplex) -> Ordering {
        self.re
            .partial_cmp(&other.re)
            .unwrap_or(Ordering::Equal)
            .then(self.im.partial_cmp(&other.im).unwrap_or(Ordering::Equal))
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let im = format_float(&self.im, 20);
        if im.starts_with('-') {
            write!(f, "{}{}i", format_float(&self.re, 20), im)
        } else {
            write!(f, "{}+{}i", format_float(&self.re, 20), im)
        }
    }
}

/// `log(exp(a) + exp(b))` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
