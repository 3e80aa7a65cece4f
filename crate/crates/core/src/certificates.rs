//! Numeric re-checks of the inequalities behind the zero-free regions: the
//! lower bounds for `Q`, `R` and the partial products of `P`, the interval
//! scheme in `n`, and the closing `K`/`L` chains.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, ThetaError};
use crate::report::CertificateReport;

/// First spectral value as printed, used by the `q ∈ (q̃₁, 1/2]` chains.
pub const Q_TILDE_1: f64 = 0.309249;

/// Factors with `|w| < FACTOR_CUTOFF` are folded into the tail bound.
pub const FACTOR_CUTOFF: f64 = 1e-18;

/// Samples per region for the empirical checks.
pub const DEFAULT_SAMPLES: usize = 200;

const U53: f64 = f64::EPSILON / 2.0;
const ZETA2: f64 = PI * PI / 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProofConstants {
    pub u: f64,
    pub lambda1: f64,
    pub ln_lambda1: f64,
    pub c_dagger: f64,
    pub omega1: f64,
    pub split_near: f64,
    pub split_far: f64,
}

impl Default for ProofConstants {
    fn default() -> Self {
        Self::new()
    }
}

impl ProofConstants {
    pub fn new() -> Self {
        let split_far: f64 = 0.683;
        let lambda1 = (0.634 + split_far) / split_far;
        let ln_lambda1 = lambda1.ln();
        Self {
            u: 2.0 * ZETA2.exp(),
            lambda1,
            ln_lambda1,
            c_dagger: split_far + split_far * split_far,
            omega1: 1.0 - ln_lambda1,
            split_near: 0.317,
            split_far,
        }
    }

    pub fn k1(&self, b: f64) -> f64 {
        -ZETA2 + b.ln() - LN_2 - 2.0 * self.c_dagger - LN_2 * self.ln_lambda1 / 2.0 - (b + 1.0) / (b * b)
    }

    pub fn k0(&self, n: u32) -> f64 {
        let n = n as f64;
        ZETA2 - 3.0 * LN_2 + LN_2 * self.ln_lambda1 / 4.0
            - LN_2 / 2.0
            - LN_2 * self.ln_lambda1 / (4.0 * (2.0 * n - 3.0))
    }

    /// `L₁`; the `ln(132√2)` term is fixed by `a ≥ b ≥ 132`.
    pub fn l1(&self, b: f64) -> f64 {
        -ZETA2 + self.omega1 * (132.0 * SQRT_2).ln() + b.ln() * self.ln_lambda1 - LN_2 + 0.9f64.ln() / 2.0
            - 2.0 * self.c_dagger
            - (b + 1.0) / (b * b)
    }

    pub fn l0(&self, b: f64) -> f64 {
        ZETA2 - 0.782 * (132.0 * SQRT_2).ln() + b.ln() * (1.0 - 2.0 * self.ln_lambda1) - 3.0 * LN_2
    }

    /// `μ₁ = ln λ₁ / ln(1/q) + 1`.
    pub fn mu1(&self, q: f64) -> f64 {
        self.ln_lambda1 / (1.0 / q).ln() + 1.0
    }

    /// `μ₁⁰ = ln λ₁ · 2(n−1)²/(2n−3) + 1`.
    pub fn mu1_upper(&self, n: u32) -> f64 {
        let n = n as f64;
        self.ln_lambda1 * 2.0 * (n - 1.0).powi(2) / (2.0 * n - 3.0) + 1.0
    }
}

/// `q ∈ (q_low, q_high]` with `q_high = 1 − 1/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalIndex {
    pub n: u32,
    pub q_low: f64,
    pub q_high: f64,
}

impl IntervalIndex {
    /// `n = 2` is the special interval `(q̃₁, 1/2]`.
    pub fn for_n(n: u32) -> Result<Self> {
        match n {
            0 | 1 => Err(ThetaError::InvalidArgument(format!("interval index must be at least 2, got {n}"))),
            2 => Ok(Self { n, q_low: Q_TILDE_1, q_high: 0.5 }),
            _ => Ok(Self { n, q_low: 1.0 - 1.0 / (n - 1) as f64, q_high: 1.0 - 1.0 / n as f64 }),
        }
    }

    /// The interval holding `q`. Values at or below `q̃₁` are given `n = 2`
    /// with `q_low = 0`, where the `n = 2` bounds still hold.
    pub fn containing(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(ThetaError::InvalidQ(q));
        }
        if q <= 0.5 {
            let q_low = if q > Q_TILDE_1 { Q_TILDE_1 } else { 0.0 };
            return Ok(Self { n: 2, q_low, q_high: 0.5 });
        }
        // Smallest n ≥ 3 with q ≤ 1 − 1/n.
        let mut n = ((1.0 / (1.0 - q)).ceil() as u32).max(3);
        while n > 3 && q <= 1.0 - 1.0 / (n - 1) as f64 {
            n -= 1;
        }
        while q > 1.0 - 1.0 / n as f64 {
            n += 1;
        }
        Self::for_n(n)
    }

    pub fn contains(&self, q: f64) -> bool {
        q > self.q_low && q <= self.q_high
    }
}

/// `ln` of a product of moduli with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogProduct {
    pub log: f64,
    pub err: f64,
    pub factors: usize,
}

impl LogProduct {
    pub const ONE: Self = Self { log: 0.0, err: 0.0, factors: 0 };

    pub fn value(&self) -> f64 {
        self.log.exp()
    }

    /// Certified lower bound for the product.
    pub fn lower(&self) -> f64 {
        (self.log - self.err).exp()
    }

    pub fn log_lower(&self) -> f64 {
        self.log - self.err
    }

    fn push(&mut self, w: Complex64, index: usize) {
        let f = Complex64::new(1.0 + w.re, w.im).norm();
        self.log += f.ln();
        // `w` carries about `index` roundings from repeated powers of q.
        self.err += (index as f64 + 6.0) * U53 * (1.0 + w.norm()) / f + U53 * f.ln().abs();
        self.factors += 1;
    }

    /// Absorb the factors `|1 + w|` with `|w| ≤ lead, lead·q, …`.
    fn add_tail(&mut self, lead: f64, q: f64) {
        if lead > 0.0 {
            self.err += lead / ((1.0 - q) * (1.0 - lead));
        }
    }

    fn combine(a: Self, b: Self) -> Self {
        Self { log: a.log + b.log, err: a.err + b.err, factors: a.factors + b.factors }
    }
}

/// `Q(q) = Π_{m≥1}(1 − q^m)`.
pub fn q_product(q: f64) -> Result<LogProduct> {
    check_q(q)?;
    let mut p = LogProduct::ONE;
    let mut qm = q;
    let mut m = 1;
    while qm >= FACTOR_CUTOFF * (1.0 - q) {
        p.push(Complex64::new(-qm, 0.0), m);
        qm *= q;
        m += 1;
    }
    p.add_tail(qm, q);
    Ok(p)
}

/// `|R| = Π_{m≥1}|1 + q^{m−1}/z|`.
pub fn r_product(q: f64, z: Complex64) -> Result<LogProduct> {
    check_q(q)?;
    if z.norm() <= 1.0 {
        return Err(ThetaError::OutsideConvergence { modulus: z.norm(), min: 1.0 });
    }
    let w0 = z.inv();
    let mut p = LogProduct::ONE;
    let mut s = 1.0;
    let mut m = 1;
    while s * w0.norm() >= FACTOR_CUTOFF * (1.0 - q) {
        p.push(w0 * s, m);
        s *= q;
        m += 1;
    }
    p.add_tail(s * w0.norm(), q);
    Ok(p)
}

/// `|P₀| = Π_{m=1}^{n}|1 + zq^m|`.
pub fn p0_product(q: f64, z: Complex64, n: u32) -> Result<LogProduct> {
    check_q(q)?;
    let mut p = LogProduct::ONE;
    let mut s = q;
    for m in 1..=n as usize {
        p.push(z * s, m);
        s *= q;
    }
    Ok(p)
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(ThetaError::InvalidQ(q))
    }
}

/// Which part of the line through `1 + z` and `1` a factor `t_m` sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    /// `[1 + z, D]`
    Tilde,
    /// `[D, B]`
    Ddagger,
    /// `[B, C]`
    Sharp,
    /// `[C, 1]`
    Dagger,
}

/// Split of `t_m = 1 + q^m z`, `z = −a + bi`, along the line through `1 + z`
/// and `1`. A point `1 + s z` is addressed by its parameter `s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorPartition {
    pub q: f64,
    pub z: Complex64,
    pub a: f64,
    pub b: f64,
    pub n: u32,
    pub point_a: Complex64,
    pub point_b: Complex64,
    pub point_c: Complex64,
    pub point_d: Complex64,
    pub delta_tilde: f64,
    pub s_a: f64,
    pub s_b: f64,
    pub s_c: f64,
    pub s_d: f64,
    pub tilde: Vec<usize>,
    pub ddagger: Vec<usize>,
    pub sharp: Vec<usize>,
    /// Classified indices only; the infinite tail past `cutoff` also belongs here.
    pub dagger: Vec<usize>,
    /// Last index classified explicitly.
    pub cutoff: usize,
    pub p_tilde: LogProduct,
    pub p_ddagger: LogProduct,
    pub p_sharp: LogProduct,
    pub p_dagger: LogProduct,
}

impl FactorPartition {
    pub fn segment_of(&self, m: usize) -> Segment {
        classify(self.q.powi(m as i32), self.s_b, self.s_c, self.s_d)
    }

    pub fn total(&self) -> LogProduct {
        [self.p_tilde, self.p_ddagger, self.p_sharp, self.p_dagger]
            .into_iter()
            .fold(LogProduct::ONE, LogProduct::combine)
    }
}

fn classify(s: f64, s_b: f64, s_c: f64, s_d: f64) -> Segment {
    if s >= s_d {
        Segment::Tilde
    } else if s >= s_b {
        Segment::Ddagger
    } else if s >= s_c {
        Segment::Sharp
    } else {
        Segment::Dagger
    }
}

pub fn factor_partition(q: f64, z: Complex64) -> Result<FactorPartition> {
    check_q(q)?;
    if !(z.re < 0.0 && z.im > 0.0 && z.norm() > 1.0) {
        return Err(ThetaError::InvalidArgument(format!("partition needs Re z < 0, Im z > 0, |z| > 1; got {z}")));
    }
    let k = ProofConstants::new();
    let (a, b) = (-z.re, z.im);
    let r2 = z.norm_sqr();
    // |1 + s z|² = 1 at s = 0 and s = 2a/|z|²; coincident roots mean tangency.
    let disc = (2.0 * a).powi(2);
    if disc < 1e-20 {
        return Err(ThetaError::DegenerateGeometry(format!(
            "line through 1 + z is tangent to the unit circle at z = {z}"
        )));
    }
    let s_a = a / r2;
    let s_d = 2.0 * s_a;
    let s_b = (1.0 + k.split_near) * s_a;
    let s_c = k.split_far * s_a;
    let at = |s: f64| Complex64::new(1.0, 0.0) + z * s;
    let n = IntervalIndex::containing(q)?.n;

    let mut part = FactorPartition {
        q,
        z,
        a,
        b,
        n,
        point_a: at(s_a),
        point_b: at(s_b),
        point_c: at(s_c),
        point_d: at(s_d),
        delta_tilde: s_a * z.norm(),
        s_a,
        s_b,
        s_c,
        s_d,
        tilde: Vec::new(),
        ddagger: Vec::new(),
        sharp: Vec::new(),
        dagger: Vec::new(),
        cutoff: 0,
        p_tilde: LogProduct::ONE,
        p_ddagger: LogProduct::ONE,
        p_sharp: LogProduct::ONE,
        p_dagger: LogProduct::ONE,
    };
    let modulus = z.norm();
    let mut s = q;
    let mut m = 1;
    while s * modulus >= FACTOR_CUTOFF {
        let w = z * s;
        let (list, prod) = match classify(s, s_b, s_c, s_d) {
            Segment::Tilde => (&mut part.tilde, &mut part.p_tilde),
            Segment::Ddagger => (&mut part.ddagger, &mut part.p_ddagger),
            Segment::Sharp => (&mut part.sharp, &mut part.p_sharp),
            Segment::Dagger => (&mut part.dagger, &mut part.p_dagger),
        };
        list.push(m);
        prod.push(w, m);
        s *= q;
        m += 1;
    }
    part.cutoff = m - 1;
    part.p_dagger.add_tail(s * modulus, q);
    Ok(part)
}

/// `Q ≥ e^{(π²/6)(1−n)}` at each sample.
pub fn q_product_bound(n: u32, q_samples: &[f64]) -> Result<CertificateReport> {
    if n < 2 {
        return Err(ThetaError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    let mut r = CertificateReport::new("lemma3");
    r.input("n", n as f64);
    let bound = (ZETA2 * (1.0 - n as f64)).exp();
    r.quantity("bound", bound);
    for &q in q_samples {
        if q > 1.0 - 1.0 / n as f64 {
            return Err(ThetaError::InvalidArgument(format!("q = {q} exceeds 1 - 1/n for n = {n}")));
        }
        let p = q_product(q)?;
        r.input("q", q);
        r.quantity(format!("Q({q})"), p.value());
        r.at_least(format!("Q({q}) >= exp(pi^2/6 (1 - n))"), p.lower(), bound);
    }
    Ok(r)
}

/// `ζ(x) = ln(1 − x) + x + x²`.
pub fn zeta(x: f64) -> f64 {
    (-x).ln_1p() + x + x * x
}

/// Root of `ζ` on `[1/2, 1)` by bisection to `1e-12`.
pub fn zeta_root() -> f64 {
    let (mut lo, mut hi) = (0.5, 1.0 - 1e-12);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if zeta(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn technical_zeta_check() -> CertificateReport {
    let mut r = CertificateReport::new("lemma4");
    let root = zeta_root();
    r.quantity("root", root);
    r.greater("zeta root > 0.683", root, 0.683);
    let points = 10_000;
    let min = (1..=points).map(|k| zeta(0.683 * k as f64 / points as f64)).fold(f64::INFINITY, f64::min);
    r.quantity("zeta(0)", zeta(0.0));
    r.quantity("min zeta on grid (0, 0.683]", min);
    r.greater("min zeta on grid (0, 0.683] > 0", min, 0.0);
    r
}

/// `|R| ≥ e^{−n(b+1)/b²}` at each `(q, z)` sample.
pub fn r_bound_check(n: u32, b: f64, samples: &[(f64, Complex64)]) -> Result<CertificateReport> {
    if n < 2 {
        return Err(ThetaError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if !(b >= 1.5) {
        return Err(ThetaError::InvalidArgument(format!("b must be at least 1.5, got {b}")));
    }
    let low = if n == 2 { 0.0 } else { 1.0 - 1.0 / (n - 1) as f64 };
    let mut r = CertificateReport::new("lemma5");
    r.input("n", n as f64).input("b", b);
    let bound = (-(n as f64) * (b + 1.0) / (b * b)).exp();
    r.quantity("bound", bound);
    for &(q, z) in samples {
        if !(q > low && q <= 1.0 - 1.0 / n as f64) || z.im.abs() < b {
            return Err(ThetaError::InvalidArgument(format!("sample (q = {q}, z = {z}) outside the hypothesis")));
        }
        let p = r_product(q, z)?;
        r.quantity(format!("|R|({q}, {z})"), p.value());
        r.at_least(format!("|R|({q}, {z}) >= exp(-n(b+1)/b^2)"), p.lower(), bound);
    }
    Ok(r)
}

/// Count and size checks for the `♯` segment.
pub fn sharp_count_bound(q: f64, z: Complex64) -> Result<CertificateReport> {
    let part = factor_partition(q, z)?;
    let k = ProofConstants::new();
    let mut r = CertificateReport::new("lemma7");
    r.input("q", q).input("re z", z.re).input("im z", z.im).input("n", part.n as f64);
    let mu1 = k.mu1(q);
    let count = part.sharp.len() as f64;
    r.quantity("mu1", mu1).quantity("sharp factors", count);
    r.at_least("sharp factor count <= mu1", mu1, count);
    if q > 0.5 {
        let n = part.n;
        let mu1_0 = k.mu1_upper(n);
        r.quantity("mu1_0", mu1_0);
        r.at_least("mu1 <= mu1_0", mu1_0, mu1);
        r.greater("mu1 > ln(lambda1)(n-2) + 1", mu1, k.ln_lambda1 * (n as f64 - 2.0) + 1.0);
    }
    let bound = 0.5 * mu1 * (part.b * part.b / z.norm_sqr()).ln();
    r.quantity("P_sharp", part.p_sharp.value());
    r.at_least("ln P_sharp >= (mu1/2) ln(b^2/(a^2+b^2))", part.p_sharp.log_lower(), bound);
    Ok(r)
}

/// Right half-plane: `|Θ*| > |G|` on `Re z ≥ 0`, `|z| ≥ 18`.
pub fn certify_part1(n: u32) -> Result<CertificateReport> {
    if n < 2 {
        return Err(ThetaError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    let k = ProofConstants::new();
    let mut r = CertificateReport::new("part1");
    r.input("n", n as f64);
    if n == 2 {
        let lhs = (-ZETA2).exp() * 18.0 * Q_TILDE_1;
        r.input("q1", Q_TILDE_1);
        r.quantity("exp(-pi^2/6) 18 q1", lhs);
        r.greater("exp(-pi^2/6) 18 q1 > 1", lhs, 1.0);
        r.greater("1 > 1/(18 - 1)", 1.0, 1.0 / 17.0);
        return Ok(r);
    }
    let head = ZETA2.exp() / 8.0;
    r.quantity("u", k.u).quantity("exp(pi^2/6)/8", head);
    r.greater("exp(pi^2/6)/8 > 1/(u-1)", head, 1.0 / (k.u - 1.0));
    r.greater("u < 18", 18.0, k.u);
    let nf = n as f64;
    let base = 1.0 - 1.0 / (nf - 1.0);
    r.at_least("(1-1/(n-1))^(n-1) >= 1/4", base.powf(nf - 1.0), 0.25);
    r.at_least("1 - 1/(n-1) >= 1/2", base, 0.5);
    // The chain (e^{π²/6}/8)(|z|/u)^n at |z| = u and |z| = 18.
    for modulus in [k.u, 18.0] {
        let chain = head * (modulus / k.u).powf(nf);
        r.at_least(format!("chain at |z| = {modulus:.6} >= exp(pi^2/6)/8"), chain * (1.0 + 4.0 * U53), head);
    }
    // |P₀| ≥ |z|^n 2^{−(n+3)} at sampled q in the interval and Re z ≥ 0.
    let iv = IntervalIndex::for_n(n)?;
    let mut worst = f64::INFINITY;
    for qs in [iv.q_low + 1e-12, 0.5 * (iv.q_low + iv.q_high), iv.q_high] {
        for modulus in [k.u, 18.0, 100.0] {
            for phi in [0.0, PI / 4.0, PI / 2.0, -PI / 2.0] {
                let z = Complex64::from_polar(modulus, phi);
                let p0 = p0_product(qs, z, n)?;
                worst = worst.min(p0.log_lower() - (nf * modulus.ln() - (nf + 3.0) * LN_2));
            }
        }
    }
    r.at_least("min ln|P0| - ln(|z|^n 2^-(n+3)) over samples", worst, 0.0);
    Ok(r)
}

/// `Im z ≥ b ≥ max(a, 132)` with `q ∈ (1/2, 1)`: the `K₁n + K₀` chain.
pub fn certify_part2_k(b: f64, n_range: RangeInclusive<u32>) -> Result<CertificateReport> {
    check_b(b)?;
    check_range(&n_range)?;
    let k = ProofConstants::new();
    let mut r = CertificateReport::new("part2K");
    r.input("b", b).input("n min", *n_range.start() as f64).input("n max", *n_range.end() as f64);
    let k1 = k.k1(b);
    let k0_3 = k.k0(3);
    let floor = -(b - 1.0).ln();
    r.quantity("K1", k1).quantity("K0(3)", k0_3).quantity("-ln(b-1)", floor);
    r.greater("K1 > 0", k1, 0.0);
    r.greater("K0(3) > 0", k0_3, 0.0);
    r.as_checkpoint();
    r.greater("0 > -ln(b-1)", 0.0, floor);
    for n in n_range.clone() {
        r.greater(format!("K1*{n} + K0({n}) > -ln(b-1)"), k1 * n as f64 + k.k0(n), floor);
    }
    // q^m ≥ q^n ≥ 1/8 at the left end of each interval, and b q^n > 1.
    let mut worst = f64::INFINITY;
    let mut worst_bq = f64::INFINITY;
    for n in n_range {
        let q = IntervalIndex::for_n(n)?.q_low;
        let qn = q.powi(n as i32);
        worst = worst.min(qn);
        worst_bq = worst_bq.min(b * qn);
    }
    r.at_least("min q^n over intervals >= 1/8", worst, 0.125);
    r.greater("min b q^n > 1", worst_bq, 1.0);
    Ok(r)
}

/// `a ≥ b ≥ 132` with `q ∈ (1/2, 1)`: the `L₁n + L₀` chain.
pub fn certify_part2_l(b: f64, n_range: RangeInclusive<u32>) -> Result<CertificateReport> {
    check_b(b)?;
    check_range(&n_range)?;
    let k = ProofConstants::new();
    let mut r = CertificateReport::new("part2L");
    r.input("b", b).input("n min", *n_range.start() as f64).input("n max", *n_range.end() as f64);
    let (l1, l0) = (k.l1(b), k.l0(b));
    let floor = -(b * SQRT_2 - 1.0).ln();
    r.quantity("omega1", k.omega1).quantity("L1", l1).quantity("L0", l0).quantity("-ln(b sqrt2 - 1)", floor);
    r.greater("L1 > 0.3044", l1, 0.3044);
    r.as_checkpoint();
    r.greater("L1 > 0", l1, 0.0);
    r.at_least("|L0 + 6.0491| <= 1e-3", 1e-3, (l0 + 6.0491).abs());
    r.as_checkpoint();
    let tail = k.ln_lambda1 * (-0.5 + 1.0 / 6.0) + 1.0;
    r.quantity("ln(lambda1)(-1/2+1/6)+1", tail);
    r.at_least("0.782 >= ln(lambda1)(-1/2+1/6)+1", 0.782, tail);
    r.greater("-5.136 > -ln(b sqrt2 - 1)", -5.136, floor);
    r.as_checkpoint();
    for n in n_range.clone() {
        let v = l1 * n as f64 + l0;
        r.at_least(format!("L1*{n} + L0 >= -5.136"), v, -5.136);
        r.as_checkpoint();
        r.greater(format!("L1*{n} + L0 > -ln(b sqrt2 - 1)"), v, floor);
    }
    // (aq^m − 10)²/10 + (b²q^{2m} − 90)/10 ≥ 0 and |t_m|² ≥ 0.9(a²+b²)q^{2m} at sampled a ≥ b, m ≤ n.
    let mut worst_factor = f64::INFINITY;
    let mut worst10 = f64::INFINITY;
    let n_hi = (*n_range.end()).min(60);
    for n in *n_range.start()..=n_hi {
        let iv = IntervalIndex::for_n(n)?;
        for q in [iv.q_low, iv.q_high] {
            for a in [b, 2.0 * b, 10.0 * b, 100.0 * b] {
                for m in 1..=n {
                    worst_factor = worst_factor.min(factor_modulus_margin(a, b, q, m));
                    let qm = q.powi(m as i32);
                    let t2 = (a * qm - 1.0).powi(2) + (b * qm).powi(2);
                    worst10 = worst10.min(t2 / (0.9 * (a * a + b * b) * qm * qm) - 1.0);
                }
            }
        }
    }
    r.at_least("min (a q^m - 10)^2/10 + (b^2 q^2m - 90)/10 over samples >= 0", worst_factor, 0.0);
    r.at_least("min |t_m|^2 / (0.9 (a^2+b^2) q^2m) - 1 over samples >= 0", worst10, 0.0);
    Ok(r)
}

/// `(aq^m − 10)²/10 + (b²q^{2m} − 90)/10`.
pub fn factor_modulus_margin(a: f64, b: f64, q: f64, m: u32) -> f64 {
    let qm = q.powi(m as i32);
    (a * qm - 10.0).powi(2) / 10.0 + (b * b * qm * qm - 90.0) / 10.0
}

/// The `q ∈ (q̃₁, 1/2]` chains of both half-strip cases.
pub fn certify_small_q(b: f64) -> Result<CertificateReport> {
    check_b(b)?;
    let k = ProofConstants::new();
    let mut r = CertificateReport::new("smallq");
    r.input("b", b).input("q1", Q_TILDE_1);
    let q1 = Q_TILDE_1;
    let t = [b * q1 - 1.0, b * q1 * q1 - 1.0, b * q1.powi(3) - 1.0];
    for (i, (v, printed)) in t.iter().zip([39.814, 11.619, 2.902]).enumerate() {
        r.quantity(format!("b q1^{} - 1", i + 1), *v);
        r.greater(format!("b q1^{} - 1 > {printed}", i + 1), *v, printed);
    }
    let tail = (-ZETA2).exp() * (-2.0 * k.c_dagger).exp() * (-2.0 * 133.0 / (132.0f64 * 132.0)).exp();
    let chain_le = tail * 39.814 * 11.619 * 2.902 * 0.5;
    r.quantity("chain a <= b", chain_le);
    r.greater("chain a <= b > 12.8", chain_le, 12.8);
    r.greater("12.8 > 1/(b-1)", 12.8, 1.0 / (b - 1.0));
    let big = 0.9 * b * b * q1.powi(3);
    r.quantity("0.9 b^2 q1^3", big);
    r.greater("0.9 b^2 q1^3 > 463", big, 463.0);
    let chain_ge = 463.0 * tail;
    r.quantity("chain a >= b", chain_ge);
    r.greater("chain a >= b > 8.8", chain_ge, 8.8);
    r.greater("8.8 > 1/(b sqrt2 - 1)", 8.8, 1.0 / (b * SQRT_2 - 1.0));
    Ok(r)
}

fn check_b(b: f64) -> Result<()> {
    if b >= 132.0 && b.is_finite() {
        Ok(())
    } else {
        Err(ThetaError::InvalidArgument(format!("b must be at least 132, got {b}")))
    }
}

fn check_range(r: &RangeInclusive<u32>) -> Result<()> {
    if *r.start() >= 3 && r.start() <= r.end() {
        Ok(())
    } else {
        Err(ThetaError::InvalidArgument(format!("n range must start at 3 or above, got {r:?}")))
    }
}

/// Lemmas covered by the sampled dominance checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SampledLemma {
    Q,
    R,
    DaggerProducts,
    Sharp,
    TwoFactor,
}

impl SampledLemma {
    pub const ALL: [SampledLemma; 5] = [Self::Q, Self::R, Self::DaggerProducts, Self::Sharp, Self::TwoFactor];

    pub fn id(self) -> &'static str {
        match self {
            Self::Q => "lemma3",
            Self::R => "lemma5",
            Self::DaggerProducts => "lemma6",
            Self::Sharp => "lemma7",
            Self::TwoFactor => "lemma9",
        }
    }
}

/// Largest interval index drawn by the samplers.
const SAMPLE_N_MAX: u32 = 40;

fn sample_interval(rng: &mut ChaCha8Rng) -> (u32, f64) {
    let n = rng.gen_range(2..=SAMPLE_N_MAX);
    let iv = IntervalIndex::for_n(n).expect("n >= 2");
    // (q_low, q_high]
    let q = iv.q_high - rng.gen::<f64>() * (iv.q_high - iv.q_low);
    (n, q)
}

/// `z = −a + bi` with `a ∈ (0, 500]`, `b ∈ [1.5, 500]`.
fn sample_left(rng: &mut ChaCha8Rng) -> Complex64 {
    let a = 500.0 * (1.0 - rng.gen::<f64>());
    let b = rng.gen_range(1.5..=500.0);
    Complex64::new(-a, b)
}

/// Track the sample with the smallest `lhs − rhs` (in log space).
struct Worst {
    margin: f64,
    lhs: f64,
    rhs: f64,
    label: String,
    failures: usize,
}

impl Worst {
    fn new() -> Self {
        Self { margin: f64::INFINITY, lhs: f64::NAN, rhs: f64::NAN, label: String::new(), failures: 0 }
    }

    fn see(&mut self, lhs: f64, rhs: f64, label: impl FnOnce() -> String) {
        let margin = lhs - rhs;
        if !(margin >= 0.0) {
            self.failures += 1;
        }
        if margin < self.margin || margin.is_nan() && !self.margin.is_nan() {
            self.margin = margin;
            self.lhs = lhs;
            self.rhs = rhs;
            self.label = label();
        }
    }

    fn record(self, r: &mut CertificateReport, what: &str) {
        r.quantity(format!("{what}: failures"), self.failures as f64);
        r.at_least(format!("{what}: worst sample {}", self.label), self.lhs, self.rhs);
    }
}

/// Seeded samples from the hypothesis region of `lemma`, checked against its
/// closed-form lower bound.
pub fn sampled_dominance(lemma: SampledLemma, seed: u64, samples: usize) -> Result<CertificateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (lemma as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let k = ProofConstants::new();
    let mut r = CertificateReport::new(lemma.id());
    r.input("seed", seed as f64).input("samples", samples as f64);
    match lemma {
        SampledLemma::Q => {
            let mut w = Worst::new();
            for _ in 0..samples {
                let (n, q) = sample_interval(&mut rng);
                let p = q_product(q)?;
                w.see(p.log_lower(), ZETA2 * (1.0 - n as f64), || format!("n={n} q={q}"));
            }
            w.record(&mut r, "ln Q >= (pi^2/6)(1-n)");
        }
        SampledLemma::R => {
            let mut w = Worst::new();
            for _ in 0..samples {
                let (n, q) = sample_interval(&mut rng);
                let b = rng.gen_range(1.5..=300.0);
                let y = b * (1.0 + rng.gen::<f64>());
                let y = if rng.gen::<bool>() { y } else { -y };
                let z = Complex64::new(rng.gen_range(-300.0..=300.0), y);
                let p = r_product(q, z)?;
                let nf = n as f64;
                w.see(p.log_lower(), -nf * (b + 1.0) / (b * b), || format!("n={n} q={q} b={b} z={z}"));
            }
            w.record(&mut r, "ln|R| >= -n(b+1)/b^2");
        }
        SampledLemma::DaggerProducts => {
            let mut wd = Worst::new();
            let mut wdd = Worst::new();
            for _ in 0..samples {
                let (n, q) = sample_interval(&mut rng);
                let z = sample_left(&mut rng);
                let part = factor_partition(q, z)?;
                let bound = -k.c_dagger * n as f64;
                wd.see(part.p_dagger.log_lower(), bound, || format!("n={n} q={q} z={z}"));
                wdd.see(part.p_ddagger.log_lower(), bound, || format!("n={n} q={q} z={z}"));
            }
            wd.record(&mut r, "ln P_dagger >= -1.149489 n");
            wdd.record(&mut r, "ln P_ddagger >= -1.149489 n");
        }
        SampledLemma::Sharp => {
            let mut wc = Worst::new();
            let mut wp = Worst::new();
            for _ in 0..samples {
                let (n, q) = sample_interval(&mut rng);
                let z = sample_left(&mut rng);
                let part = factor_partition(q, z)?;
                let mu1 = k.mu1(q);
                wc.see(mu1, part.sharp.len() as f64, || format!("n={n} q={q} z={z}"));
                let bound = 0.5 * mu1 * (part.b * part.b / z.norm_sqr()).ln();
                wp.see(part.p_sharp.log_lower(), bound, || format!("n={n} q={q} z={z}"));
            }
            wc.record(&mut r, "mu1 >= sharp factor count");
            wp.record(&mut r, "ln P_sharp >= (mu1/2) ln(b^2/(a^2+b^2))");
        }
        SampledLemma::TwoFactor => {
            let mut w = Worst::new();
            for _ in 0..samples {
                let q = 0.5 - rng.gen::<f64>() * (0.5 - Q_TILDE_1);
                let z = sample_left(&mut rng);
                let part = factor_partition(q, z)?;
                let count = (part.ddagger.len() + part.sharp.len()) as f64;
                w.see(2.0, count, || format!("q={q} z={z}"));
            }
            w.record(&mut r, "2 >= ddagger + sharp factor count");
        }
    }
    Ok(r)
}

/// Selector for [`certify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LemmaSelector {
    All,
    Lemma3,
    Lemma4,
    Lemma5,
    Lemma6,
    Lemma7,
    Lemma9,
    Part1,
    Part2K,
    Part2L,
    SmallQ,
}

impl std::str::FromStr for LemmaSelector {
    type Err = ThetaError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Self::All,
            "lemma3" => Self::Lemma3,
            "lemma4" => Self::Lemma4,
            "lemma5" => Self::Lemma5,
            "lemma6" => Self::Lemma6,
            "lemma7" => Self::Lemma7,
            "lemma9" => Self::Lemma9,
            "part1" => Self::Part1,
            "part2K" => Self::Part2K,
            "part2L" => Self::Part2L,
            "smallq" => Self::SmallQ,
            other => return Err(ThetaError::InvalidArgument(format!("unknown lemma selector '{other}'"))),
        })
    }
}

/// Parameters shared by the certificate runs.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifyParams {
    pub b: f64,
    pub n_range: RangeInclusive<u32>,
    pub seed: u64,
    pub samples: usize,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self { b: 132.0, n_range: 3..=100, seed: 0, samples: DEFAULT_SAMPLES }
    }
}

pub fn certify(selector: LemmaSelector, params: &CertifyParams) -> Result<Vec<CertificateReport>> {
    use LemmaSelector as L;
    let sampled = |lemma| sampled_dominance(lemma, params.seed, params.samples);
    let part1 = || -> Result<Vec<CertificateReport>> {
        [2, 3, *params.n_range.end().max(&3)].into_iter().map(certify_part1).collect()
    };
    Ok(match selector {
        L::Lemma3 => vec![sampled(SampledLemma::Q)?],
        L::Lemma4 => vec![technical_zeta_check()],
        L::Lemma5 => vec![sampled(SampledLemma::R)?],
        L::Lemma6 => vec![sampled(SampledLemma::DaggerProducts)?],
        L::Lemma7 => vec![sampled(SampledLemma::Sharp)?],
        L::Lemma9 => vec![sampled(SampledLemma::TwoFactor)?],
        L::Part1 => part1()?,
        L::Part2K => vec![certify_part2_k(params.b, params.n_range.clone())?],
        L::Part2L => vec![certify_part2_l(params.b, params.n_range.clone())?],
        L::SmallQ => vec![certify_small_q(params.b)?],
        L::All => {
            let mut out = part1()?;
            out.push(technical_zeta_check());
            for lemma in SampledLemma::ALL {
                out.push(sampled(lemma)?);
            }
            out.push(certify_part2_k(params.b, params.n_range.clone())?);
            out.push(certify_part2_l(params.b, params.n_range.clone())?);
            out.push(certify_small_q(params.b)?);
            out
        }
    })
}
