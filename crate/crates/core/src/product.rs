//! Jacobi triple product `Θ* = Q·P·R` with
//! `Q = Π(1 − q^m)`, `P = Π(1 + z q^m)`, `R = Π(1 + q^{m−1}/z)` (m ≥ 1),
//! and the auto-routed evaluator used by the zero finder.
//!
//! Factors far from 1 are multiplied explicitly. Once `|w| ≤ 0.24` the
//! remaining factors `Π_{k≥0}(1 + w q^k)` are folded into one exponential
//! through `ln Π = Σ_k (−1)^{k+1} w^k / (k(1 − q^k))`, which converges like
//! `0.24^k` whatever `q` is. Factors that nearly vanish are carried
//! separately so a zero of `Θ*` gets an absolute, not relative, bound.

use num_complex::Complex64;
use rug::{Assign, Float};

use crate::error::{check_tol, Result, ThetaError};
use crate::mp::{unit_roundoff, BigComplex, Precision, Radius};
use crate::series::{g_series_big, natural_eps, theta_partial_big, EvaluatedValue, QParam};

/// Largest `|w|` handed to the folded tail.
const FOLD: f64 = 0.24;

const U53: f64 = f64::EPSILON / 2.0;

/// Below this modulus θ is summed directly; above it the product route is used.
pub const SERIES_RADIUS: f64 = 1.25;

/// Coefficients `a_k = 1/(k(1−q^k))` and `b_k = 1/(1−q^k)` of the folded tail.
#[derive(Clone, Debug)]
struct Lambert {
    a: Vec<Float>,
    /// Relative error bound shared by `a_k` and `b_k`.
    rel: Vec<f64>,
    /// f64 upper bound on `a_k`.
    a_hi: Vec<f64>,
    /// `b_k` rounded to f64.
    b_f64: Vec<f64>,
}

/// Per-`q` cache: Euler factor `Q` and the folded-tail coefficients.
#[derive(Clone, Debug)]
pub struct ThetaContext {
    q: QParam,
    bits: u32,
    qf: Float,
    euler: Float,
    euler_rel: f64,
    lambert: Lambert,
    /// P and R factors with `|w|` above this are multiplied one by one. Smaller
    /// values trade tail terms for explicit factors; the balance depends on q.
    fold_at: f64,
}

/// Product evaluation before the near-zero factors are multiplied in.
struct Ball {
    /// Product of all well-separated factors and the folded tails.
    mid: BigComplex,
    rel: f64,
    /// Near-zero factors with their absolute error bounds.
    specials: Vec<(BigComplex, f64)>,
    /// `Θ*'/Θ*` (f64) with an absolute error bound; absent when a factor nearly vanishes.
    log_deriv: Option<(Complex64, f64)>,
    factors: usize,
}

struct Folded {
    sum: BigComplex,
    err: f64,
}

impl ThetaContext {
    pub fn new(q: QParam, prec: Precision) -> Self {
        let bits = prec.bits();
        let u = unit_roundoff(bits);
        let qf = q.to_float(bits);

        // Enough tail terms for |w| ≤ 1/4: a_k 4^{-k} ≤ u/64.
        let mut a = Vec::new();
        let mut b_f64 = Vec::new();
        let mut rel = Vec::new();
        let mut a_hi = Vec::new();
        let mut qk = qf.clone();
        let mut k = 1usize;
        loop {
            let qk_hi = qk.to_f64();
            let one_minus = Float::with_val(bits, 1 - &qk);
            // q^k carries (k−1)u relative error; the subtraction adds u.
            let r = ((k as f64) * u * qk_hi + u) / (1.0 - qk_hi) * 1.01 + 3.0 * u;
            let bk = Float::with_val(bits, 1 / &one_minus);
            let ak = Float::with_val(bits, &bk / (k as u32));
            a_hi.push(ak.to_f64() * (1.0 + 2.0 * r));
            a.push(ak);
            b_f64.push(bk.to_f64());
            rel.push(r);
            if a_hi[k - 1] * 0.25f64.powi(k as i32) <= u / 64.0 {
                break;
            }
            qk *= &qf;
            k += 1;
        }
        let lambert = Lambert { a, rel, a_hi, b_f64 };

        let mut ctx = ThetaContext {
            q,
            bits,
            qf: qf.clone(),
            euler: Float::with_val(bits, 1),
            euler_rel: 0.0,
            lambert,
            fold_at: (-(bits as f64 * std::f64::consts::LN_2 * -q.value().ln()).sqrt()).exp().clamp(1e-4, FOLD),
        };

        // Q = Π(1 − q^m): explicit while q^m > FOLD, then folded with w = −q^M.
        let mut euler = Float::with_val(bits, 1);
        let mut euler_rel = 0.0;
        let mut qm = qf.clone();
        let mut m = 1usize;
        while qm.to_f64() > FOLD {
            let f = Float::with_val(bits, 1 - &qm);
            let fv = f.to_f64();
            euler_rel += ((m as f64) * u * qm.to_f64() + u * fv) / fv * 1.01 + u;
            euler *= &f;
            qm *= &qf;
            m += 1;
        }
        let mut w = BigComplex::from_real(&qm, bits);
        w.re = -w.re;
        let folded = ctx.fold(&w, (m as f64) * u);
        let tail = BigComplex::from_real(&folded.sum.re, bits).exp();
        euler *= &tail.re;
        euler_rel += folded.err * 1.01 + 4.0 * u;
        ctx.euler = euler;
        ctx.euler_rel = euler_rel;
        ctx
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `Q(q) = Π_{m≥1}(1 − q^m)` with its relative error bound.
    pub fn euler_factor(&self) -> (&Float, f64) {
        (&self.euler, self.euler_rel)
    }

    /// `Σ_{k≥1} (−1)^{k+1} a_k w^k`, i.e. `ln Π_{k≥0}(1 + w q^k)`, for `|w| ≤ 1/4`.
    /// `w_rel` is the relative error already present in `w`.
    fn fold(&self, w: &BigComplex, w_rel: f64) -> Folded {
        let bits = self.bits;
        let u = unit_roundoff(bits);
        let aw = w.abs_f64() * (1.0 + w_rel);
        debug_assert!(aw <= 0.26, "fold called with |w| = {aw}");
        let mut sum = BigComplex::zero(bits);
        let mut err = 0.0;
        let mut abs_total = 0.0;
        let mut pw = BigComplex::one(bits);
        let mut scratch = Float::new(bits);
        let mut term = BigComplex::zero(bits);
        let lam = &self.lambert;
        let kmax = lam.a.len();
        let mut used = 0;
        let mut awk = 1.0;
        for k in 1..=kmax {
            pw.mul_assign_ref(w, &mut scratch);
            awk *= aw;
            let power_rel = (k as f64) * (w_rel + 3.0 * u);
            let idx = k - 1;
            let size = lam.a_hi[idx] * awk;
            term.re.assign(&pw.re * &lam.a[idx]);
            term.im.assign(&pw.im * &lam.a[idx]);
            if k % 2 == 1 {
                sum.add_assign_ref(&term);
            } else {
                sum.sub_assign_ref(&term);
            }
            err += size * (power_rel + lam.rel[idx] + 2.0 * u);
            abs_total += size;
            used = k;
            if aw == 0.0 {
                break;
            }
            let next = if k < kmax { lam.a_hi[k] * awk * aw } else { f64::INFINITY };
            if next / (1.0 - aw) <= u / 64.0 {
                break;
            }
        }
        // Summation rounding and the neglected tail.
        let tail = if aw == 0.0 { 0.0 } else { lam.a_hi[used.min(kmax - 1)] * awk * aw / (1.0 - aw) * 2.0 };
        err += (used as f64 + 2.0) * u * abs_total + tail;
        Folded { sum, err }
    }

    /// `Σ_{k≥1} (−1)^{k+1} b_k w^k` in f64 with an absolute error bound.
    fn fold_derivative(&self, w: Complex64, w_rel: f64) -> (Complex64, f64) {
        let u = f64::EPSILON / 2.0;
        let aw = w.norm() * (1.0 + w_rel + 4.0 * u);
        let lam = &self.lambert;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        let mut err = 0.0;
        let mut awk = 1.0;
        let mut last_b = 1.0;
        for (k, &bk) in lam.b_f64.iter().enumerate().map(|(i, b)| (i + 1, b)) {
            pw *= w;
            awk *= aw;
            let t = pw * bk;
            if k % 2 == 1 {
                sum += t;
            } else {
                sum -= t;
            }
            let size = bk * awk * (1.0 + 2.0 * lam.rel[k - 1]);
            err += size * ((k as f64) * (w_rel + 4.0 * u) + 4.0 * u + lam.rel[k - 1] + (k as f64 + 2.0) * u);
            last_b = bk;
            if aw == 0.0 || last_b * awk * aw / (1.0 - aw) <= 1e-20 * (sum.norm() + 1e-300) {
                break;
            }
        }
        err += 2.0 * last_b * awk * aw / (1.0 - aw);
        (sum, err)
    }

    fn ball(&self, z: &BigComplex, derivative: bool) -> Result<Ball> {
        if z.is_zero() {
            return Err(ThetaError::SingularAtZero);
        }
        let bits = self.bits;
        let u = unit_roundoff(bits);
        let r = z.abs_f64();
        if !(r.is_finite() && r < 1e280 && r > 1e-280) {
            return Err(ThetaError::InvalidArgument(format!("|z| = {r:e} outside supported range")));
        }
        let z = z.with_prec(bits);
        let mut acc = BigComplex::one(bits);
        let mut rel = 0.0;
        let mut specials = Vec::new();
        let mut scratch = Float::new(bits);
        let mut factors = 0usize;

        let mut dsum_p = Complex64::new(0.0, 0.0);
        let mut dsum_r = Complex64::new(0.0, 0.0);
        let mut derr = 0.0;
        let mut special_seen = false;

        // P: 1 + z q^m.
        let mut qm = self.qf.clone();
        let mut m = 1usize;
        let mut x = BigComplex::zero(bits);
        while qm.to_f64() * r > self.fold_at {
            x.re.assign(&z.re * &qm);
            x.im.assign(&z.im * &qm);
            let ax = x.abs_f64();
            x.add_one();
            let af = x.abs_f64();
            let delta = ((m as f64) * ax + af) * u * 1.01;
            if af <= 4.0 * delta {
                specials.push((x.clone(), delta));
                special_seen = true;
            } else {
                acc.mul_assign_ref(&x, &mut scratch);
                rel += delta / af + 2.0 * u;
                if derivative {
                    // q^m / (1 + z q^m)
                    let qm_f = qm.to_f64();
                    dsum_p += qm_f / x.to_c64();
                    derr += qm_f / af * (delta / af * 1.01 + 8.0 * U53);
                }
            }
            factors += 1;
            qm *= &self.qf;
            m += 1;
        }
        let mut wp = BigComplex::zero(bits);
        wp.re.assign(&z.re * &qm);
        wp.im.assign(&z.im * &qm);
        let fp = self.fold(&wp, (m as f64 + 1.0) * u);
        let dp = derivative.then(|| self.fold_derivative(wp.to_c64(), (m as f64 + 1.0) * u));

        // R: 1 + q^{m−1}/z.
        let inv = z.recip();
        let mut qp = Float::with_val(bits, 1);
        let mut m = 0usize;
        while qp.to_f64() / r > self.fold_at {
            x.re.assign(&inv.re * &qp);
            x.im.assign(&inv.im * &qp);
            let ax = x.abs_f64();
            let yc = if derivative { x.to_c64() } else { Complex64::new(0.0, 0.0) };
            x.add_one();
            let af = x.abs_f64();
            let delta = ((m as f64 + 4.0) * ax + af) * u * 1.01;
            if af <= 4.0 * delta {
                specials.push((x.clone(), delta));
                special_seen = true;
            } else {
                acc.mul_assign_ref(&x, &mut scratch);
                rel += delta / af + 2.0 * u;
                if derivative {
                    // d/dz ln(1 + c/z) = −(c/z)/(z (1 + c/z)); collect (c/z)/(1 + c/z).
                    dsum_r += yc / x.to_c64();
                    derr += ax / af / r * (delta / af * 1.01 + ((m as f64) * u + 8.0 * U53)) * 1.01;
                }
            }
            factors += 1;
            qp *= &self.qf;
            m += 1;
        }
        let mut wr = BigComplex::zero(bits);
        wr.re.assign(&inv.re * &qp);
        wr.im.assign(&inv.im * &qp);
        let fr = self.fold(&wr, (m as f64 + 4.0) * u);
        let dr = derivative.then(|| self.fold_derivative(wr.to_c64(), (m as f64 + 4.0) * u));

        let mut s = fp.sum.clone();
        s.add_assign_ref(&fr.sum);
        let serr = fp.err + fr.err;
        let e = s.exp();
        acc.mul_assign_ref(&e, &mut scratch);
        rel += serr * 1.01 + 8.0 * u;
        acc.scale_assign(&self.euler);
        rel += self.euler_rel + u;

        let log_deriv = if derivative && !special_seen {
            // L = Σ_P q^m/(1+zq^m) + Σ_P-fold / z − [Σ_R y/(1+y) + Σ_R-fold] / z.
            let (dp, dp_err) = dp.unwrap();
            let (dr, dr_err) = dr.unwrap();
            let zc = z.to_c64();
            let l = dsum_p + (dp - dsum_r - dr) / zc;
            let spread = dsum_p.norm() + (dp.norm() + dsum_r.norm() + dr.norm()) / r;
            let lerr = derr + (dp_err + dr_err) / r * 1.01 + 8.0 * U53 * spread;
            Some((l, lerr))
        } else {
            None
        };
        Ok(Ball { mid: acc, rel, specials, log_deriv, factors })
    }

    fn star_from_ball(&self, ball: &Ball) -> EvaluatedValue {
        let mut value = ball.mid.clone();
        let mut scratch = Float::new(self.bits);
        let mut prod_abs = 1.0;
        let mut prod_hi = 1.0;
        for (f, delta) in &ball.specials {
            value.mul_assign_ref(f, &mut scratch);
            let af = f.abs_f64();
            prod_abs *= af;
            prod_hi *= af + delta;
        }
        let u = unit_roundoff(self.bits);
        let k = ball.specials.len() as f64;
        let factor = if ball.specials.is_empty() {
            ball.rel
        } else {
            (1.0 + ball.rel) * (1.0 + 3.0 * k * u) * prod_hi - prod_abs
        };
        let err = Radius::abs_of_complex(&ball.mid).scale(factor.max(0.0) * 1.000001);
        EvaluatedValue { value, err, terms: ball.factors, bits: self.bits }
    }

    /// `Θ*(q, z)` through the triple product with a rigorous error bound.
    pub fn theta_star(&self, z: &BigComplex) -> Result<EvaluatedValue> {
        let ball = self.ball(z, false)?;
        Ok(self.star_from_ball(&ball))
    }

    fn g_eps(&self) -> f64 {
        (-(self.bits as f64 - 12.0)).exp2().max(1e-300)
    }

    /// `θ(q, z)`: direct sum for `|z| < 1.25`, otherwise `Θ* − G`.
    pub fn theta(&self, z: &BigComplex) -> Result<EvaluatedValue> {
        let r = z.abs_f64();
        if r < SERIES_RADIUS {
            let eps = natural_eps(&self.qf, z, 0, 0, self.bits)?;
            return theta_partial_big(&self.qf, z, 0, 0, eps, Precision::new(self.bits)?);
        }
        let star = self.theta_star(z)?;
        let g = g_series_big(&self.qf, z, false, self.g_eps(), Precision::new(self.bits)?)?;
        Ok(subtract(star, &g))
    }

    pub fn theta_c64(&self, z: Complex64) -> Result<EvaluatedValue> {
        self.theta(&BigComplex::from_c64(z, self.bits))
    }

    /// `(θ, ∂θ/∂z)` at `z`, sharing the product work.
    pub fn theta_and_dz(&self, z: &BigComplex) -> Result<(EvaluatedValue, EvaluatedValue)> {
        let r = z.abs_f64();
        let prec = Precision::new(self.bits)?;
        if r < SERIES_RADIUS {
            let eps = natural_eps(&self.qf, z, 0, 0, self.bits)?;
            let t = theta_partial_big(&self.qf, z, 0, 0, eps, prec)?;
            let eps = natural_eps(&self.qf, z, 1, 0, self.bits)?;
            let d = theta_partial_big(&self.qf, z, 1, 0, eps, prec)?;
            return Ok((t, d));
        }
        let ball = self.ball(z, true)?;
        let star = self.star_from_ball(&ball);
        let g = g_series_big(&self.qf, z, false, self.g_eps(), prec)?;
        let gd = g_series_big(&self.qf, z, true, self.g_eps(), prec)?;
        let deriv = match &ball.log_deriv {
            Some((l, lerr)) => {
                // Θ*' = Θ*·L; |Θ*'| error ≤ |Θ*|(rel·|L| + lerr) + err(Θ*)|L| combined.
                let mut v = star.value.mul(&BigComplex::from_c64(*l, self.bits));
                let al = l.norm();
                let err = Radius::abs_of_complex(&star.value)
                    .scale(lerr * 1.01 + 4.0 * unit_roundoff(self.bits) * al + U53 * al)
                    .add(&star.err.scale(al + lerr));
                v.sub_assign_ref(&gd.value.with_prec(self.bits));
                let err = err.add(&gd.err).add(&Radius::abs_of_complex(&v).scale(unit_roundoff(self.bits)));
                EvaluatedValue { value: v, err, terms: star.terms, bits: self.bits }
            }
            None => {
                let eps = natural_eps(&self.qf, z, 1, 0, self.bits)?;
                theta_partial_big(&self.qf, z, 1, 0, eps, prec)?
            }
        };
        Ok((subtract(star, &g), deriv))
    }
}

fn subtract(mut a: EvaluatedValue, b: &EvaluatedValue) -> EvaluatedValue {
    let bits = a.bits.max(b.bits);
    let mut v = a.value.with_prec(bits);
    v.sub_assign_ref(&b.value.with_prec(bits));
    a.err = a.err.add(&b.err).add(&Radius::abs_of_complex(&v).scale(unit_roundoff(bits)));
    a.value = v;
    a.bits = bits;
    a
}

/// `Θ*(q, z)` by the triple product, to relative accuracy `eps_rel` unless
/// `Θ*` vanishes (then the bound is absolute, from the neighbouring factors).
pub fn theta_star_product(q: QParam, z: Complex64, eps_rel: f64, prec: Precision) -> Result<EvaluatedValue> {
    check_tol("eps_rel", eps_rel)?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(ThetaError::InvalidArgument(format!("non-finite argument {z}")));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Err(ThetaError::SingularAtZero);
    }
    let mut prec = prec;
    loop {
        let ctx = ThetaContext::new(q, prec);
        let ball = ctx.ball(&BigComplex::from_c64(z, prec.bits()), false)?;
        if ball.specials.is_empty() && ball.rel > eps_rel {
            let extra = (ball.rel / eps_rel).log2().ceil() as u32 + 8;
            prec = Precision::new(prec.bits() + extra)?;
            continue;
        }
        return Ok(ctx.star_from_ball(&ball));
    }
}
