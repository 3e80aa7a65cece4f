//! Spectral values `q̃_N`: the `q` at which `θ(q, ·)` has a double real zero
//! `y_N < 0`, found by Newton on `(θ, ∂θ/∂z) = 0` in the unknowns `(q, y)`.

use std::f64::consts::PI;

use rug::Float;
use serde::Serialize;

use crate::error::{check_tol, Result, ThetaError};
use crate::mp::{BigComplex, Precision};
use crate::series::{natural_eps, theta_partial_big};

/// Step halvings allowed per Newton step.
const MAX_HALVINGS: usize = 40;
const MAX_NEWTON: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub n: usize,
    pub q_tilde: f64,
    pub y: f64,
    pub residual_theta: f64,
    pub residual_dz: f64,
    pub bits: u32,
    pub iterations: usize,
}

/// Leading terms of the large-`N` expansion of `(q̃_N, y_N)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub n: usize,
    pub q_est: f64,
    pub y_est: f64,
}

pub fn asymptotic_estimate(n: usize) -> Result<AsymptoticEstimate> {
    if n == 0 {
        return Err(ThetaError::InvalidArgument("N must be at least 1".into()));
    }
    let nf = n as f64;
    let ln = nf.ln();
    Ok(AsymptoticEstimate {
        n,
        q_est: 1.0 - PI / (2.0 * nf) + ln / (8.0 * nf * nf),
        y_est: -PI.exp() * (-ln / (4.0 * nf)).exp(),
    })
}

/// Working precision for `q` near 1: terms grow like `e^{(ln|y|)²/(2 ln(1/q))}`.
pub fn spectrum_bits(q: f64, base: Precision) -> u32 {
    let extra = (8.0 / (1.0 - q.clamp(0.0, 0.999))).ceil() as u32;
    let b = base.bits().max(128 + extra);
    b.div_ceil(32) * 32
}

struct Partials {
    f: [f64; 2],
    jac: [[f64; 2]; 2],
}

fn real_partial(q: &Float, y: &Float, dz: u32, dq: u32, prec: Precision) -> Result<f64> {
    let bits = prec.bits();
    let z = BigComplex::from_real(y, bits);
    let eps = natural_eps(q, &z, dz, dq, bits)?;
    Ok(theta_partial_big(q, &z, dz, dq, eps, prec)?.value.re.to_f64())
}

fn residuals(q: &Float, y: &Float, prec: Precision) -> Result<[f64; 2]> {
    Ok([real_partial(q, y, 0, 0, prec)?, real_partial(q, y, 1, 0, prec)?])
}

fn partials(q: &Float, y: &Float, prec: Precision) -> Result<Partials> {
    let f = residuals(q, y, prec)?;
    let t_q = real_partial(q, y, 0, 1, prec)?;
    let t_z = f[1];
    let t_zq = real_partial(q, y, 1, 1, prec)?;
    let t_zz = real_partial(q, y, 2, 0, prec)?;
    Ok(Partials { f, jac: [[t_q, t_z], [t_zq, t_zz]] })
}

fn norm(f: [f64; 2]) -> f64 {
    f[0].abs().max(f[1].abs())
}

/// Damped Newton for `θ(q, y) = ∂θ/∂z(q, y) = 0` from `(q_seed, y_seed)`.
pub fn double_zero_solve(q_seed: f64, y_seed: f64, tol: f64, prec: Precision) -> Result<SpectrumEntry> {
    check_tol("tol", tol)?;
    if !(q_seed > 0.0 && q_seed < 1.0) || !(y_seed < 0.0) {
        return Err(ThetaError::LeftDomain { q: q_seed, y: y_seed });
    }
    let mut bits = spectrum_bits(q_seed, prec);
    let mut q = Float::with_val(bits, q_seed);
    let mut y = Float::with_val(bits, y_seed);
    let mut last_norm = f64::INFINITY;
    for it in 0..MAX_NEWTON {
        let b = spectrum_bits(q.to_f64(), prec);
        if b > bits {
            bits = b;
            q.set_prec(bits);
            y.set_prec(bits);
        }
        let p = Precision::new(bits)?;
        let Partials { f, jac } = partials(&q, &y, p)?;
        let fnorm = norm(f);
        last_norm = fnorm;
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(ThetaError::Diverged { iterations: it, residual: fnorm });
        }
        let dq = (f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
        let dy = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
        let small_step = dq.abs() <= 1e-15 * q.to_f64().abs() && dy.abs() <= 1e-14 * y.to_f64().abs();
        if fnorm <= tol && small_step {
            return Ok(SpectrumEntry {
                n: 0,
                q_tilde: q.to_f64(),
                y: y.to_f64(),
                residual_theta: f[0].abs(),
                residual_dz: f[1].abs(),
                bits,
                iterations: it,
            });
        }
        // Accept the full step unless the residual grows, then halve.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let qn = Float::with_val(bits, &q - dq * lambda);
            let yn = Float::with_val(bits, &y - dy * lambda);
            let (qv, yv) = (qn.to_f64(), yn.to_f64());
            if qv > 0.0 && qv < 1.0 && yv < 0.0 {
                let fn_ = residuals(&qn, &yn, Precision::new(spectrum_bits(qv, prec).max(bits))?)?;
                if norm(fn_) < fnorm || fnorm <= tol {
                    q = qn;
                    y = yn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            let (qv, yv) = ((&q - Float::with_val(bits, dq)).to_f64(), (&y - Float::with_val(bits, dy)).to_f64());
            if !(qv > 0.0 && qv < 1.0 && yv < 0.0) {
                return Err(ThetaError::LeftDomain { q: qv, y: yv });
            }
            return Err(ThetaError::Diverged { iterations: it, residual: fnorm });
        }
    }
    Err(ThetaError::Diverged { iterations: MAX_NEWTON, residual: last_norm })
}

/// Seed for the first spectral value.
pub const FIRST_SEED: (f64, f64) = (0.31, -7.0);

/// The outward scan runs over `x = −e^t`, `t ∈ [ln 0.5, ln 10⁶]`.
const SCAN_T: (f64, f64) = (-std::f64::consts::LN_2, 13.815510557964274);
const SCAN_STEPS: usize = 6000;

/// Location of the rightmost negative local minimum of `θ(q, ·)` lying between
/// two sign changes.
fn rightmost_dip(q: f64, prec: Precision) -> Result<Option<f64>> {
    let bits = spectrum_bits(q, prec);
    let p = Precision::new(bits)?;
    let qf = Float::with_val(bits, q);
    let x_at = |k: usize| -(SCAN_T.0 + (SCAN_T.1 - SCAN_T.0) * k as f64 / SCAN_STEPS as f64).exp();
    let mut vals: Vec<f64> = Vec::new();
    let mut crossed = false;
    let mut dip = None;
    for k in 0..=SCAN_STEPS {
        let x = x_at(k);
        let v = real_partial(&qf, &Float::with_val(bits, x), 0, 0, p)?;
        vals.push(v);
        if k < 2 {
            continue;
        }
        let (a, b) = (vals[k - 2], vals[k - 1]);
        if b > 0.0 && v <= 0.0 {
            crossed = true;
        }
        if crossed && dip.is_none() && b < 0.0 && b <= a && b <= v {
            dip = Some(x_at(k - 1));
        }
        if let Some(y) = dip {
            if b <= 0.0 && v > 0.0 {
                return Ok(Some(y));
            }
        }
    }
    Ok(None)
}

/// No sign change of `θ(q, ·)` on `(y, 0)` over `points` grid points.
pub fn rightmost_real_zero(q: f64, y: f64, points: usize, prec: Precision) -> Result<bool> {
    let bits = spectrum_bits(q, prec);
    let p = Precision::new(bits)?;
    let qf = Float::with_val(bits, q);
    // The double zero itself touches zero; stay a hair inside.
    let edge = y * (1.0 - 1e-6);
    for k in 0..points {
        let x = edge * k as f64 / (points - 1) as f64;
        if real_partial(&qf, &Float::with_val(bits, x), 0, 0, p)? <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Offset above `q̃_N` at which the next dip is located, a small fraction of
/// the expected gap `π/(2N²)`.
fn dip_offset(n: usize) -> f64 {
    0.05 * std::f64::consts::FRAC_PI_2 / (n * n) as f64
}

/// `q̃_1, …, q̃_{N_max}` by continuation in `N`.
pub fn spectrum_table(n_max: usize, tol: f64, prec: Precision) -> Result<Vec<SpectrumEntry>> {
    spectrum_table_with(n_max, tol, prec, |_| {})
}

/// As [`spectrum_table`], reporting each entry as soon as it is found.
pub fn spectrum_table_with(
    n_max: usize,
    tol: f64,
    prec: Precision,
    mut on_entry: impl FnMut(&SpectrumEntry),
) -> Result<Vec<SpectrumEntry>> {
    if n_max == 0 {
        return Err(ThetaError::InvalidArgument("N_max must be at least 1".into()));
    }
    check_tol("tol", tol)?;
    let mut out: Vec<SpectrumEntry> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut e = match out.last() {
            None => double_zero_solve(FIRST_SEED.0, FIRST_SEED.1, tol, prec)?,
            Some(last) => next_entry(last, tol, prec)?,
        };
        e.n = n;
        on_entry(&e);
        out.push(e);
    }
    Ok(out)
}

/// Local minimum of `θ(q, ·)` near `y0`: `(y*, θ(q, y*), θ_q(q, y*))`.
fn dip_minimum(q: f64, y0: f64, prec: Precision) -> Result<Option<(f64, f64, f64)>> {
    let bits = spectrum_bits(q, prec);
    let p = Precision::new(bits)?;
    let qf = Float::with_val(bits, q);
    let mut y = y0;
    for _ in 0..60 {
        let yf = Float::with_val(bits, y);
        let d1 = real_partial(&qf, &yf, 1, 0, p)?;
        let d2 = real_partial(&qf, &yf, 2, 0, p)?;
        if !(d2 > 0.0) {
            return Ok(None);
        }
        let step = d1 / d2;
        y -= step;
        if !(y > 2.0 * y0 && y < 0.5 * y0) {
            return Ok(None);
        }
        if step.abs() <= 1e-13 * y.abs() {
            let yf = Float::with_val(bits, y);
            let m = real_partial(&qf, &yf, 0, 0, p)?;
            let tq = real_partial(&qf, &yf, 0, 1, p)?;
            return Ok(Some((y, m, tq)));
        }
    }
    Ok(None)
}

/// Solve for the fold following `last`. The two real zeros that merge next
/// bracket the rightmost negative dip just above `q̃_N`. The dip minimum is
/// pushed up to zero along `q` with a bracketed Newton iteration, then the
/// pair `(q, y)` is polished jointly.
fn next_entry(last: &SpectrumEntry, tol: f64, prec: Precision) -> Result<SpectrumEntry> {
    let fail = |residual| ThetaError::Diverged { iterations: last.n + 1, residual };
    let mut offset = dip_offset(last.n);
    let mut found = None;
    for _ in 0..8 {
        let qa = last.q_tilde + offset;
        if qa < 1.0 {
            if let Some(dip) = rightmost_dip(qa, prec)? {
                found = Some((qa, dip));
                break;
            }
        }
        // The dip already closed: q̃_{N+1} lies below qa.
        offset /= 4.0;
    }
    let (qa, dip) = found.ok_or(fail(f64::NAN))?;
    let (mut y, mut m, mut tq) = dip_minimum(qa, dip, prec)?.ok_or(fail(f64::NAN))?;
    if !(m < 0.0) {
        return Err(fail(m));
    }
    let mut q_lo = qa;
    let mut q_hi: f64 = 1.0;
    let max_step = 4.0 * dip_offset(last.n);
    for _ in 0..200 {
        let mut q_new = if tq > 0.0 { q_lo - m / tq } else { f64::NAN };
        if !(q_new > q_lo && q_new < q_hi) {
            q_new = 0.5 * (q_lo + q_hi);
        }
        q_new = q_new.min(q_lo + max_step);
        let converged = (q_new - q_lo).abs() <= 1e-10 * q_lo;
        match dip_minimum(q_new, y, prec)? {
            Some((yn, mn, tqn)) if mn < 0.0 => {
                (q_lo, y, m, tq) = (q_new, yn, mn, tqn);
            }
            Some((yn, _, _)) if converged => {
                y = yn;
                q_lo = q_new;
            }
            _ => q_hi = q_new,
        }
        if converged || q_hi - q_lo <= 1e-12 {
            break;
        }
    }
    let e = double_zero_solve(q_lo, y, tol, prec)?;
    if e.q_tilde > last.q_tilde && rightmost_real_zero(e.q_tilde, e.y, 2000, prec)? {
        Ok(e)
    } else {
        Err(fail(e.residual_theta))
    }
}
