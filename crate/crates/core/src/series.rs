//! Certified evaluation of the partial theta series, its partial
//! derivatives, the negative-index tail `G` and the bilateral sum `Θ*`.
//!
//! Every routine returns an [`EvaluatedValue`] whose `err` bounds the sum of
//! the truncation error and the accumulated rounding error. When the
//! requested accuracy cannot be met at the working precision (large terms
//! cancelling), the precision is raised deterministically from the inputs.

use num_complex::Complex64;
use rug::ops::Pow;
use rug::{Assign, Float};
use serde::Serialize;

use crate::error::{check_tol, Result, ThetaError};
use crate::mp::{log_add_exp, unit_roundoff, BigComplex, Precision, Radius};

/// `G` is only evaluated for `|z|` at or above this modulus.
pub const G_MIN_MODULUS: f64 = 1.05;

/// Hard cap on the number of series terms.
const MAX_TERMS: usize = 2_000_000;

/// Relative slack applied to quantities bounded in f64 log space.
const LOG_SLACK: f64 = 1e-9;

/// The nome-like parameter `q`, restricted to the open interval (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct QParam(f64);

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q < 1.0 {
            Ok(Self(q))
        } else {
            Err(ThetaError::InvalidQ(q))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn to_float(self, bits: u32) -> Float {
        Float::with_val(bits, self.0)
    }
}

/// A complex value together with a guaranteed bound on its distance to the
/// exact quantity.
#[derive(Clone, Debug)]
pub struct EvaluatedValue {
    pub value: BigComplex,
    pub err: Radius,
    /// Series cutoff index, or number of explicitly multiplied factors for
    /// product evaluations.
    pub terms: usize,
    /// Precision actually used.
    pub bits: u32,
}

impl EvaluatedValue {
    pub fn value_c64(&self) -> Complex64 {
        self.value.to_c64()
    }

    pub fn err_f64(&self) -> f64 {
        self.err.to_f64()
    }

    pub fn abs_f64(&self) -> f64 {
        self.value.abs_f64()
    }

    pub fn log2_abs(&self) -> f64 {
        self.value.log2_abs()
    }

    /// `|value| > factor * err`, evaluated without overflow.
    pub fn dominates_error(&self, factor: f64) -> bool {
        let le = self.err.log2();
        le == f64::NEG_INFINITY && !self.value.is_zero() || self.value.log2_abs() > le + factor.log2()
    }

    pub fn conj(&self) -> Self {
        Self { value: self.value.conj(), ..self.clone() }
    }
}

/// Where to stop summing `Σ q^{j(j+1)/2} r^j` and how large the neglected
/// tail can be.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationPlan {
    /// Last summed index `J`.
    pub cutoff: usize,
    /// Upper bound on `Σ_{j>J} q^{j(j+1)/2} r^j`.
    pub tail_bound: f64,
}

fn tri(j: usize) -> u64 {
    (j as u64) * (j as u64 + 1) / 2
}

fn falling(x: u64, k: u32) -> u64 {
    (0..k as u64).fold(1u64, |acc, i| acc.saturating_mul(x.saturating_sub(i)))
}

fn ln_falling(x: u64, k: u32) -> f64 {
    (0..k as u64).map(|i| ((x - i) as f64).ln()).sum()
}

/// Term layout of `∂_z^dz ∂_q^dq θ`: coefficient of index `j` is
/// `(j)_dz (T_j)_dq q^{T_j - dq} z^{j - dz}` with `T_j = j(j+1)/2`.
#[derive(Clone, Copy, Debug)]
struct Derivative {
    dz: u32,
    dq: u32,
}

impl Derivative {
    /// First index with a nonzero weight.
    fn first(self) -> usize {
        let mut j = self.dz as usize;
        while tri(j) < self.dq as u64 {
            j += 1;
        }
        j
    }

    fn ln_weight(self, j: usize) -> f64 {
        ln_falling(j as u64, self.dz) + ln_falling(tri(j), self.dq)
    }

    fn weights(self, j: usize) -> (u64, u64) {
        (falling(j as u64, self.dz), falling(tri(j), self.dq))
    }
}

#[derive(Clone, Copy, Debug)]
struct SeriesPlan {
    first: usize,
    cutoff: usize,
    /// ln of the tail bound (−inf when the tail vanishes).
    ln_tail: f64,
    /// ln of `Σ_{first ≤ j ≤ cutoff} |c_j|`.
    ln_sum: f64,
}

/// Cutoff rule: the smallest `J` such that the term ratio at `J+1` is at most
/// 1/2 and `|c_{J+1}| / (1 - ratio)` is below `eps`. Term ratios decrease
/// monotonically in `j`, so the first omitted term and that ratio dominate
/// the whole tail geometrically.
fn plan_series(ln_q: f64, ln_r: f64, d: Derivative, eps: f64) -> Result<SeriesPlan> {
    let first = d.first();
    if ln_r == f64::NEG_INFINITY {
        let ln_sum = if first == d.dz as usize {
            d.ln_weight(first) + (tri(first) as f64 - d.dq as f64) * ln_q
        } else {
            f64::NEG_INFINITY
        };
        return Ok(SeriesPlan { first, cutoff: d.dz as usize, ln_tail: f64::NEG_INFINITY, ln_sum });
    }
    let ln_c = |j: usize| -> f64 {
        let exact = d.ln_weight(j) + (tri(j) as f64 - d.dq as f64) * ln_q + (j as f64 - d.dz as f64) * ln_r;
        exact + LOG_SLACK * (1.0 + exact.abs())
    };
    let ln_eps = eps.ln();
    let mut ln_sum = f64::NEG_INFINITY;
    let mut j = first;
    loop {
        ln_sum = log_add_exp(ln_sum, ln_c(j));
        let next = ln_c(j + 1);
        let ratio = (ln_c(j + 2) - next).exp();
        if ratio <= 0.5 {
            let ln_tail = next - (1.0 - ratio).ln();
            if ln_tail <= ln_eps {
                return Ok(SeriesPlan { first, cutoff: j, ln_tail, ln_sum });
            }
        }
        j += 1;
        if j > MAX_TERMS {
            return Err(ThetaError::TooManyTerms(MAX_TERMS));
        }
    }
}

/// Cutoff for `Σ_j q^{j(j+1)/2} r^j` whose tail beyond the cutoff is at most `eps`.
pub fn truncation_cutoff(q: QParam, r: f64, eps: f64) -> Result<TruncationPlan> {
    check_tol("eps", eps)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(ThetaError::InvalidArgument(format!("radius must be finite and nonnegative, got {r}")));
    }
    let plan = plan_series(q.value().ln(), r.ln(), Derivative { dz: 0, dq: 0 }, eps)?;
    Ok(TruncationPlan { cutoff: plan.cutoff, tail_bound: plan.ln_tail.exp() })
}

/// Upper bound on `Σ_{j≥from} q^{j(j+1)/2} r^j`.
pub fn tail_bound_from(q: QParam, r: f64, from: usize) -> f64 {
    if r == 0.0 {
        return if from == 0 { 1.0 } else { 0.0 };
    }
    let (ln_q, ln_r) = (q.value().ln(), r.ln());
    let ln_c = |j: usize| {
        let v = tri(j) as f64 * ln_q + j as f64 * ln_r;
        v + LOG_SLACK * (1.0 + v.abs())
    };
    let mut ln_sum = f64::NEG_INFINITY;
    let mut j = from;
    loop {
        let next = ln_c(j + 1);
        let ratio = (next - ln_c(j)).exp();
        if ratio <= 0.5 {
            let rest = ln_c(j) - (1.0 - ratio).ln();
            if rest < ln_sum - 60.0 || rest == f64::NEG_INFINITY || j > from + 10_000 {
                return log_add_exp(ln_sum, rest).exp() * (1.0 + 1e-12);
            }
        }
        ln_sum = log_add_exp(ln_sum, ln_c(j));
        j += 1;
    }
}

/// Bound on rounding error of a recurrence-built series: each term's
/// relative error grows like `j²/2` unit roundoffs, plus the summation.
fn ln_rounding_factor(cutoff: usize) -> f64 {
    let j = cutoff as f64;
    // 2x safety on (j(j+1)/2 + 4j + 8) for the terms and (j + 2) for the sum.
    (2.0 * (j * (j + 1.0) / 2.0 + 5.0 * j + 10.0)).ln()
}

/// Bits needed so that the rounding bound stays below `target`.
fn bits_for(ln_sum: f64, cutoff: usize, target: f64) -> u32 {
    let need = (ln_rounding_factor(cutoff) + ln_sum - target.ln()) / std::f64::consts::LN_2;
    if need.is_finite() && need > 0.0 {
        need.ceil() as u32 + 4
    } else {
        0
    }
}

/// `∂_z^dz ∂_q^dq θ(q, z)` to absolute accuracy `eps`.
pub(crate) fn theta_partial_big(
    q: &Float,
    z: &BigComplex,
    dz: u32,
    dq: u32,
    eps: f64,
    prec: Precision,
) -> Result<EvaluatedValue> {
    assert!(dz <= 3 && dq <= 2, "derivative order out of supported range");
    check_tol("eps", eps)?;
    let d = Derivative { dz, dq };
    let ln_q = q.to_f64().ln();
    let ln_r = z.log2_abs() * std::f64::consts::LN_2;
    let plan = plan_series(ln_q, ln_r, d, eps / 2.0)?;
    let bits =
        prec.at_least(bits_for(plan.ln_sum, plan.cutoff, eps / 2.0)).at_least(q.prec()).at_least(z.prec()).bits();
    let u = unit_roundoff(bits);
    let qf = Float::with_val(bits, q);
    let zb = z.with_prec(bits);

    let mut acc = BigComplex::zero(bits);
    if plan.ln_sum > f64::NEG_INFINITY {
        let first = plan.first;
        let exp0 = tri(first) as i64 - dq as i64;
        let base = Float::with_val(bits, (&qf).pow(exp0 as i32));
        let mut term = BigComplex::from_real(&base, bits);
        let mut scratch = Float::new(bits);
        for _ in dz as usize..first {
            term.mul_assign_ref(&zb, &mut scratch);
        }
        let mut qpow = Float::with_val(bits, (&qf).pow(first as u32));
        let mut weighted = BigComplex::zero(bits);
        let plain = dz == 0 && dq == 0;
        let mut add_term = |acc: &mut BigComplex, term: &BigComplex, j: usize| {
            if plain {
                acc.add_assign_ref(term);
            } else {
                let (w1, w2) = d.weights(j);
                weighted.re.assign(&term.re * w1);
                weighted.re *= w2;
                weighted.im.assign(&term.im * w1);
                weighted.im *= w2;
                acc.add_assign_ref(&weighted);
            }
        };
        add_term(&mut acc, &term, first);
        for j in first + 1..=plan.cutoff {
            qpow *= &qf;
            term.scale_assign(&qpow);
            term.mul_assign_ref(&zb, &mut scratch);
            add_term(&mut acc, &term, j);
        }
    }
    let rounding = ln_rounding_factor(plan.cutoff) + plan.ln_sum + u.ln();
    let err = Radius::from_log2(plan.ln_tail / std::f64::consts::LN_2)
        .add(&Radius::from_log2(rounding / std::f64::consts::LN_2));
    Ok(EvaluatedValue { value: acc, err, terms: plan.cutoff, bits })
}

/// Absolute accuracy that the series can deliver at `bits` without
/// escalating: a fixed number of bits below the size of the largest terms.
pub(crate) fn natural_eps(q: &Float, z: &BigComplex, dz: u32, dq: u32, bits: u32) -> Result<f64> {
    let ln_q = q.to_f64().ln();
    let ln_r = z.log2_abs() * std::f64::consts::LN_2;
    let plan = plan_series(ln_q, ln_r, Derivative { dz, dq }, 1e-300)?;
    let ln_scale = plan.ln_sum.max(0.0);
    let ln_eps = ln_scale - (bits as f64 - 24.0) * std::f64::consts::LN_2;
    Ok(ln_eps.exp().max(1e-300))
}

/// `∂_z^dz ∂_q^dq θ(q, z)` for `dz ≤ 3`, `dq ≤ 2`.
pub fn theta_partial(q: QParam, z: Complex64, dz: u32, dq: u32, eps: f64, prec: Precision) -> Result<EvaluatedValue> {
    if dz > 3 || dq > 2 {
        return Err(ThetaError::InvalidArgument(format!("unsupported derivative order ({dz}, {dq})")));
    }
    check_finite(z)?;
    let bits = prec.bits();
    theta_partial_big(&q.to_float(bits), &BigComplex::from_c64(z, bits), dz, dq, eps, prec)
}

fn check_finite(z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(ThetaError::InvalidArgument(format!("non-finite argument {z}")))
    }
}

/// `θ(q, z) = Σ_{j≥0} q^{j(j+1)/2} z^j` with `|value − θ| ≤ err ≤ eps`.
pub fn theta_eval(q: QParam, z: Complex64, eps: f64, prec: Precision) -> Result<EvaluatedValue> {
    theta_partial(q, z, 0, 0, eps, prec)
}

/// `∂θ/∂z`.
pub fn theta_dz(q: QParam, z: Complex64, eps: f64, prec: Precision) -> Result<EvaluatedValue> {
    theta_partial(q, z, 1, 0, eps, prec)
}

/// `∂θ/∂q`.
pub fn theta_dq(q: QParam, z: Complex64, eps: f64, prec: Precision) -> Result<EvaluatedValue> {
    theta_partial(q, z, 0, 1, eps, prec)
}

/// `G(q, z) = Σ_{k≥1} q^{k(k-1)/2} z^{-k}` (or its z-derivative when
/// `derivative` is set) to absolute accuracy `eps`.
pub(crate) fn g_series_big(
    q: &Float,
    z: &BigComplex,
    derivative: bool,
    eps: f64,
    prec: Precision,
) -> Result<EvaluatedValue> {
    check_tol("eps", eps)?;
    let r_log2 = z.log2_abs();
    let r = r_log2.exp2();
    if !(r >= G_MIN_MODULUS) {
        return Err(ThetaError::OutsideConvergence { modulus: r, min: G_MIN_MODULUS });
    }
    let ln_q = q.to_f64().ln();
    let ln_r = r_log2 * std::f64::consts::LN_2;
    let ln_c = |k: usize| -> f64 {
        let kf = k as f64;
        let mut v = kf * (kf - 1.0) / 2.0 * ln_q - kf * ln_r;
        if derivative {
            v += kf.ln() - ln_r;
        }
        v + LOG_SLACK * (1.0 + v.abs())
    };
    let target = (eps / 2.0).ln();
    let mut ln_sum = f64::NEG_INFINITY;
    let mut cutoff = 1;
    loop {
        ln_sum = log_add_exp(ln_sum, ln_c(cutoff));
        let next = ln_c(cutoff + 1);
        let ratio = (ln_c(cutoff + 2) - next).exp();
        if ratio < 1.0 && next - (1.0 - ratio).ln() <= target {
            break;
        }
        cutoff += 1;
        if cutoff > MAX_TERMS {
            return Err(ThetaError::TooManyTerms(MAX_TERMS));
        }
    }
    let next = ln_c(cutoff + 1);
    let ln_tail = next - (1.0 - (ln_c(cutoff + 2) - next).exp()).ln();
    // 1/z adds a few roundoffs per power of z^{-1}.
    let ln_round_factor = ln_rounding_factor(cutoff) + 2f64.ln();
    let need = (ln_round_factor + ln_sum - (eps / 2.0).ln()) / std::f64::consts::LN_2;
    let bits =
        prec.at_least(if need > 0.0 { need.ceil() as u32 + 4 } else { 0 }).at_least(q.prec()).at_least(z.prec()).bits();
    let u = unit_roundoff(bits);
    let qf = Float::with_val(bits, q);
    let inv = z.with_prec(bits).recip();
    let mut term = inv.clone();
    let mut acc = term.clone();
    if derivative {
        acc = BigComplex::zero(bits);
    }
    let mut scratch = Float::new(bits);
    let mut qpow = Float::with_val(bits, 1);
    let mut weighted = BigComplex::zero(bits);
    for k in 1..=cutoff {
        if k > 1 {
            qpow *= &qf;
            term.scale_assign(&qpow);
            term.mul_assign_ref(&inv, &mut scratch);
            if !derivative {
                acc.add_assign_ref(&term);
            }
        }
        if derivative {
            // -k q^{k(k-1)/2} z^{-k-1}
            weighted.clone_from(&term);
            weighted.mul_assign_ref(&inv, &mut scratch);
            weighted.scale_u64(k as u64);
            acc.sub_assign_ref(&weighted);
        }
    }
    let rounding = ln_round_factor + ln_sum + u.ln();
    let err =
        Radius::from_log2(ln_tail / std::f64::consts::LN_2).add(&Radius::from_log2(rounding / std::f64::consts::LN_2));
    Ok(EvaluatedValue { value: acc, err, terms: cutoff, bits })
}

/// The negative-index part of the bilateral sum, `G = Θ* − θ`.
/// Requires `|z| ≥ 1.05`.
pub fn g_eval(q: QParam, z: Complex64, eps: f64, prec: Precision) -> Result<EvaluatedValue> {
    check_finite(z)?;
    let bits = prec.bits();
    g_series_big(&q.to_float(bits), &BigComplex::from_c64(z, bits), false, eps, prec)
}

/// `Θ*(q, z) = Σ_{j∈ℤ} q^{j(j+1)/2} z^j` by direct summation of both halves.
pub fn theta_star_series(q: QParam, z: Complex64, eps: f64, prec: Precision) -> Result<EvaluatedValue> {
    check_tol("eps", eps)?;
    let g = g_eval(q, z, eps / 2.0, prec)?;
    let t = theta_eval(q, z, eps / 2.0, prec)?;
    let bits = t.bits.max(g.bits);
    let mut value = t.value.with_prec(bits);
    value.add_assign_ref(&g.value.with_prec(bits));
    let rounding = Radius::abs_of_complex(&value).scale(unit_roundoff(bits) * 2.0);
    Ok(EvaluatedValue { value, err: t.err.add(&g.err).add(&rounding), terms: t.terms + g.terms, bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    /// Direct high-precision sum of `Σ_{j>J} q^{T_j} r^j`, independent of the plan.
    fn oracle_tail(qv: f64, r: f64, cutoff: usize) -> f64 {
        let bits = 256;
        let qf = Float::with_val(bits, qv);
        let rf = Float::with_val(bits, r);
        let mut sum = Float::with_val(bits, 0);
        for j in cutoff + 1..cutoff + 500 {
            let t = Float::with_val(bits, (&qf).pow(tri(j) as u32)) * Float::with_val(bits, (&rf).pow(j as u32));
            sum += t;
        }
        sum.to_f64()
    }

    #[test]
    fn qparam_rejects_endpoints() {
        assert!(QParam::new(0.0).is_err());
        assert!(QParam::new(1.0).is_err());
        assert!(QParam::new(f64::NAN).is_err());
        assert!(QParam::new(0.5).is_ok());
    }

    #[test]
    fn cutoff_reproduces_rouche_tail() {
        let plan = truncation_cutoff(q(0.73), 3.0, 1e-21).unwrap();
        assert!(plan.cutoff <= 20, "cutoff {}", plan.cutoff);
        assert!(plan.tail_bound < 3e-22, "tail {}", plan.tail_bound);
        assert!(oracle_tail(0.73, 3.0, plan.cutoff) <= plan.tail_bound);
    }

    #[test]
    fn cutoff_at_origin_is_zero() {
        let plan = truncation_cutoff(q(0.5), 0.0, 1e-30).unwrap();
        assert_eq!(plan.cutoff, 0);
        assert_eq!(plan.tail_bound, 0.0);
    }

    #[test]
    fn cutoff_matches_minimal_oracle_cutoff() {
        let plan = truncation_cutoff(q(0.5), 2.0, 1e-12).unwrap();
        let minimal = (0..100).find(|&j| oracle_tail(0.5, 2.0, j) <= 1e-12).unwrap();
        assert_eq!(plan.cutoff, minimal);
        assert!(oracle_tail(0.5, 2.0, plan.cutoff) <= plan.tail_bound);
    }

    #[test]
    fn cutoff_rejects_bad_eps() {
        assert!(truncation_cutoff(q(0.5), 1.0, 0.0).is_err());
        assert!(truncation_cutoff(q(0.5), -1.0, 1e-3).is_err());
    }

    #[test]
    fn theta_at_origin_is_one() {
        let v = theta_eval(q(0.5), Complex64::new(0.0, 0.0), 1e-15, Precision::default()).unwrap();
        assert_eq!(v.value_c64(), Complex64::new(1.0, 0.0));
        assert!(v.err_f64() <= 1e-15);
    }

    #[test]
    fn derivatives_at_origin() {
        let p = Precision::default();
        let dz = theta_dz(q(0.5), Complex64::new(0.0, 0.0), 1e-15, p).unwrap();
        assert_eq!(dz.value_c64(), Complex64::new(0.5, 0.0));
        let dq = theta_dq(q(0.5), Complex64::new(0.0, 0.0), 1e-15, p).unwrap();
        assert_eq!(dq.value_c64(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn g_requires_modulus_margin() {
        let err = g_eval(q(0.5), Complex64::new(1.01, 0.0), 1e-10, Precision::default()).unwrap_err();
        assert!(matches!(err, ThetaError::OutsideConvergence { .. }));
    }

    #[test]
    fn precision_escalates_for_cancellation() {
        // Terms reach ~1e40 here; the default 128 bits cannot deliver 1e-12.
        let v = theta_eval(q(0.95), Complex64::new(-23.0, 0.0), 1e-12, Precision::default()).unwrap();
        assert!(v.bits > 128);
        assert!(v.err_f64() <= 1e-12);
    }
}
