//! Zero counting by the argument principle, isolation by rectangle
//! subdivision, Newton refinement, and a Rouché comparison with the
//! truncated series.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rug::Float;
use serde::Serialize;

use crate::error::{check_tol, Result, ThetaError};
use crate::mp::{unit_roundoff, BigComplex, Precision};
use crate::product::ThetaContext;
use crate::report::CertificateReport;
use crate::series::{tail_bound_from, QParam};

/// Consecutive samples must differ in phase by less than this.
const MAX_PHASE_STEP: f64 = PI / 4.0;
/// Segment length times `|θ'/θ|` at either end must stay below this, so a
/// zero close to the segment forces refinement even when the phase at the
/// endpoints happens to agree.
const MAX_STEP_LOG_DERIV: f64 = 1.0;
/// Default sample budget for a single contour.
pub const CONTOUR_BUDGET: usize = 1 << 20;
/// Boxes narrower than this with more than one zero are reported as clusters.
pub const MIN_BOX_SIDE: f64 = 1e-6;
/// Acceptable distance of `phase / 2π` from an integer.
const WINDING_SLACK: f64 = 0.01;
/// Split positions tried in order; off-centre so split lines avoid symmetric
/// features such as the real axis.
const SPLIT_FRACTIONS: [f64; 7] = [0.5123, 0.4391, 0.5617, 0.3719, 0.6283, 0.2957, 0.7041];

/// Side of the centre on which a half-disk lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HalfPlane {
    Right,
    Left,
    Upper,
    Lower,
}

impl HalfPlane {
    fn direction(self) -> f64 {
        match self {
            HalfPlane::Right => 0.0,
            HalfPlane::Upper => PI / 2.0,
            HalfPlane::Left => PI,
            HalfPlane::Lower => -PI / 2.0,
        }
    }
}

/// Closed, counterclockwise contour. Also used as the region it encloses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Contour {
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    HalfDisk { center: Complex64, radius: f64, side: HalfPlane },
    Circle { center: Complex64, radius: f64 },
}

/// Search regions are described by their boundary.
pub type Region = Contour;

#[derive(Clone, Copy, Debug)]
enum Piece {
    Line(Complex64, Complex64),
    Arc { center: Complex64, radius: f64, t0: f64, t1: f64 },
}

impl Piece {
    fn point(&self, t: f64) -> Complex64 {
        match *self {
            Piece::Line(a, b) => a + (b - a) * t,
            Piece::Arc { center, radius, t0, t1 } => {
                let ang = t0 + (t1 - t0) * t;
                center + Complex64::new(radius * ang.cos(), radius * ang.sin())
            }
        }
    }

    /// `|dz/dt|`.
    fn speed(&self) -> f64 {
        match *self {
            Piece::Line(a, b) => (b - a).norm(),
            Piece::Arc { radius, t0, t1, .. } => radius * (t1 - t0).abs(),
        }
    }
}

impl Contour {
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let c = Contour::Rectangle { x0, x1, y0, y1 };
        c.validate()?;
        Ok(c)
    }

    pub fn circle(center: Complex64, radius: f64) -> Result<Self> {
        let c = Contour::Circle { center, radius };
        c.validate()?;
        Ok(c)
    }

    pub fn half_disk(center: Complex64, radius: f64, side: HalfPlane) -> Result<Self> {
        let c = Contour::HalfDisk { center, radius, side };
        c.validate()?;
        Ok(c)
    }

    /// `{|z| < radius, Re z > 0}`.
    pub fn right_half_disk(radius: f64) -> Result<Self> {
        Self::half_disk(Complex64::new(0.0, 0.0), radius, HalfPlane::Right)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Contour::Rectangle { x0, x1, y0, y1 } => {
                [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1
            }
            Contour::HalfDisk { center, radius, .. } | Contour::Circle { center, radius } => {
                center.re.is_finite() && center.im.is_finite() && radius.is_finite() && radius > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ThetaError::InvalidArgument(format!("degenerate contour {self:?}")))
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        match *self {
            Contour::Rectangle { x0, x1, y0, y1 } => {
                let c = |x, y| Complex64::new(x, y);
                vec![
                    Piece::Line(c(x0, y0), c(x1, y0)),
                    Piece::Line(c(x1, y0), c(x1, y1)),
                    Piece::Line(c(x1, y1), c(x0, y1)),
                    Piece::Line(c(x0, y1), c(x0, y0)),
                ]
            }
            Contour::Circle { center, radius } => (0..4)
                .map(|k| Piece::Arc { center, radius, t0: k as f64 * PI / 2.0, t1: (k + 1) as f64 * PI / 2.0 })
                .collect(),
            Contour::HalfDisk { center, radius, side } => {
                let d = side.direction();
                let lo = d - PI / 2.0;
                let end = |a: f64| center + Complex64::new(radius * a.cos(), radius * a.sin());
                vec![
                    Piece::Arc { center, radius, t0: lo, t1: d },
                    Piece::Arc { center, radius, t0: d, t1: d + PI / 2.0 },
                    Piece::Line(end(d + PI / 2.0), end(lo)),
                ]
            }
        }
    }

    /// Strict interior membership.
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Contour::Rectangle { x0, x1, y0, y1 } => z.re > x0 && z.re < x1 && z.im > y0 && z.im < y1,
            Contour::Circle { center, radius } => (z - center).norm() < radius,
            Contour::HalfDisk { center, radius, side } => {
                let w = (z - center) * Complex64::from_polar(1.0, -side.direction());
                (z - center).norm() < radius && w.re > 0.0
            }
        }
    }

    /// `(x0, x1, y0, y1)` of the smallest enclosing axis-aligned box.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Contour::Rectangle { x0, x1, y0, y1 } => (x0, x1, y0, y1),
            Contour::Circle { center, radius } => {
                (center.re - radius, center.re + radius, center.im - radius, center.im + radius)
            }
            Contour::HalfDisk { center, radius, side } => {
                let (c, r) = (center, radius);
                match side {
                    HalfPlane::Right => (c.re, c.re + r, c.im - r, c.im + r),
                    HalfPlane::Left => (c.re - r, c.re, c.im - r, c.im + r),
                    HalfPlane::Upper => (c.re - r, c.re + r, c.im, c.im + r),
                    HalfPlane::Lower => (c.re - r, c.re + r, c.im - r, c.im),
                }
            }
        }
    }

    /// Largest `|z|` on the contour.
    pub fn max_modulus(&self) -> f64 {
        match *self {
            Contour::Rectangle { x0, x1, y0, y1 } => x0.abs().max(x1.abs()).hypot(y0.abs().max(y1.abs())),
            Contour::Circle { center, radius } | Contour::HalfDisk { center, radius, .. } => center.norm() + radius,
        }
    }

    /// Mirror image under conjugation equals the original.
    pub fn is_conjugation_symmetric(&self) -> bool {
        match *self {
            Contour::Rectangle { y0, y1, .. } => y0 == -y1,
            Contour::Circle { center, .. } => center.im == 0.0,
            Contour::HalfDisk { center, side, .. } => {
                center.im == 0.0 && matches!(side, HalfPlane::Right | HalfPlane::Left)
            }
        }
    }
}

/// Result of an argument-principle count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindingResult {
    pub count: u32,
    /// Smallest sampled `|θ|` (saturating f64).
    pub min_modulus: f64,
    pub samples: usize,
    /// Total phase change divided by 2π before rounding.
    pub raw_winding: f64,
}

/// One located zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroRecord {
    pub q: QParam,
    pub z: Complex64,
    /// Newton correction `|θ/θ'|` at `z`, an estimate of the distance to the zero.
    pub residual: f64,
    /// `|θ(q, z)|` at the reported point (saturating f64).
    pub theta_abs: f64,
    pub refined: bool,
    pub iterations: usize,
}

/// A box at minimal size still holding several zeros.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub center: Complex64,
    pub half_width: f64,
    pub count: u32,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ZeroSearch {
    pub zeros: Vec<ZeroRecord>,
    pub clusters: Vec<Cluster>,
    /// Number of zeros inside the region according to the boundary winding.
    pub total_count: u32,
    pub evaluations: usize,
    pub boxes: usize,
    /// The region boundary was pulled inward by a tiny amount because a zero
    /// lies on it.
    pub boundary_shrunk: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub tol: f64,
    /// Samples with `|θ|` below this are treated as hitting a zero.
    pub floor: f64,
    pub max_evaluations: usize,
    pub newton_iterations: usize,
}

impl SearchOptions {
    pub fn new(tol: f64, bits: u32) -> Self {
        Self { tol, floor: default_floor(bits), max_evaluations: 1 << 24, newton_iterations: 80 }
    }
}

/// Default modulus floor: 1e-8 at 53 bits, scaled with the unit roundoff.
pub fn default_floor(bits: u32) -> f64 {
    1e-8 * (53.0 - bits as f64).exp2()
}

#[derive(Clone, Copy, Debug)]
struct Sample {
    arg: f64,
    log2_abs: f64,
    /// `|θ'/θ|`, roughly the inverse distance to the nearest zero.
    log_deriv: f64,
}

fn wrap(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

struct Sampler<'a> {
    ctx: &'a ThetaContext,
    floor_log2: f64,
    cache: HashMap<(u64, u64), Sample>,
    evaluations: usize,
    budget: usize,
    min_log2: f64,
}

impl<'a> Sampler<'a> {
    fn new(ctx: &'a ThetaContext, floor: f64, budget: usize) -> Self {
        Self { ctx, floor_log2: floor.log2(), cache: HashMap::new(), evaluations: 0, budget, min_log2: f64::INFINITY }
    }

    fn eval(&mut self, z: Complex64) -> Result<Sample> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(s) = self.cache.get(&key) {
            return Ok(*s);
        }
        if self.evaluations >= self.budget {
            return Err(ThetaError::SampleBudget(self.budget));
        }
        self.evaluations += 1;
        let (v, d) = self.ctx.theta_and_dz(&BigComplex::from_c64(z, self.ctx.bits()))?;
        let l = v.log2_abs();
        if l < self.floor_log2 || !v.dominates_error(16.0) {
            return Err(ThetaError::ContourTooClose { re: z.re, im: z.im, modulus: l.exp2() });
        }
        let ld = (d.log2_abs() - l).exp2();
        let s = Sample { arg: v.value.arg(), log2_abs: l, log_deriv: if ld.is_finite() { ld } else { f64::MAX } };
        self.min_log2 = self.min_log2.min(l);
        self.cache.insert(key, s);
        Ok(s)
    }

    /// Adds the samples strictly between `a` and `b` to `out`.
    fn refine<F: Fn(f64) -> Complex64>(
        &mut self,
        point: &F,
        a: (f64, Sample),
        b: (f64, Sample),
        out: &mut Vec<(f64, Sample)>,
    ) -> Result<()> {
        let (za, zb) = (point(a.0), point(b.0));
        let h = (zb - za).norm();
        if wrap(b.1.arg - a.1.arg).abs() < MAX_PHASE_STEP && h * a.1.log_deriv.max(b.1.log_deriv) < MAX_STEP_LOG_DERIV {
            return Ok(());
        }
        let tm = 0.5 * (a.0 + b.0);
        let zm = point(tm);
        if (zb - za).norm() <= 1e-12 * (1.0 + za.norm()) || tm == a.0 || tm == b.0 {
            return Err(ThetaError::ContourTooClose {
                re: zm.re,
                im: zm.im,
                modulus: a.1.log2_abs.min(b.1.log2_abs).exp2(),
            });
        }
        let m = (tm, self.eval(zm)?);
        self.refine(point, a, m, out)?;
        out.push(m);
        self.refine(point, m, b, out)
    }

    /// Samples a path on `[lo, hi]`, starting from `n` uniform intervals.
    fn path<F: Fn(f64) -> Complex64>(&mut self, point: F, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, Sample)>> {
        let mut init = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 };
            init.push((t, self.eval(point(t))?));
        }
        self.complete(&point, init)
    }

    fn complete<F: Fn(f64) -> Complex64>(&mut self, point: &F, init: Vec<(f64, Sample)>) -> Result<Vec<(f64, Sample)>> {
        let mut out = Vec::with_capacity(init.len() * 2);
        for w in init.windows(2) {
            out.push(w[0]);
            self.refine(point, w[0], w[1], &mut out)?;
        }
        out.push(*init.last().unwrap());
        Ok(out)
    }
}

fn phase_of(pts: &[(f64, Sample)]) -> f64 {
    pts.windows(2).map(|w| wrap(w[1].1.arg - w[0].1.arg)).sum()
}

fn rounded_count(total_phase: f64) -> Result<u32> {
    let w = total_phase / TAU;
    let n = w.round();
    if (w - n).abs() > WINDING_SLACK || n < 0.0 {
        return Err(ThetaError::NonIntegerWinding(w));
    }
    Ok(n as u32)
}

fn winding_with(sampler: &mut Sampler, c: &Contour) -> Result<(u32, f64)> {
    let mut total = 0.0;
    for p in c.pieces() {
        let pts = sampler.path(|t| p.point(t), 0.0, 1.0, 16)?;
        total += phase_of(&pts);
    }
    Ok((rounded_count(total)?, total / TAU))
}

/// Number of zeros of `θ(q, ·)` strictly inside `c`, counted with multiplicity.
pub fn winding_count(q: QParam, c: &Contour, floor: f64, prec: Precision) -> Result<WindingResult> {
    check_tol("floor", floor)?;
    c.validate()?;
    let ctx = ThetaContext::new(q, prec);
    winding_count_in(&ctx, c, floor, CONTOUR_BUDGET)
}

pub fn winding_count_in(ctx: &ThetaContext, c: &Contour, floor: f64, budget: usize) -> Result<WindingResult> {
    let mut sampler = Sampler::new(ctx, floor, budget);
    let (count, raw) = winding_with(&mut sampler, c)?;
    Ok(WindingResult { count, min_modulus: sampler.min_log2.exp2(), samples: sampler.evaluations, raw_winding: raw })
}

/// Newton iteration `z ← z − θ/θ'`.
pub fn refine_zero(q: QParam, seed: Complex64, tol: f64, max_iter: usize, prec: Precision) -> Result<ZeroRecord> {
    let ctx = ThetaContext::new(q, prec);
    refine_zero_in(&ctx, seed, tol, max_iter)
}

pub fn refine_zero_in(ctx: &ThetaContext, seed: Complex64, tol: f64, max_iter: usize) -> Result<ZeroRecord> {
    check_tol("tol", tol)?;
    if !(seed.re.is_finite() && seed.im.is_finite()) {
        return Err(ThetaError::InvalidArgument(format!("non-finite seed {seed}")));
    }
    let bits = ctx.bits();
    let mut z = BigComplex::from_c64(seed, bits);
    let mut last = f64::INFINITY;
    for it in 0..max_iter.max(1) {
        let (t, d) = ctx.theta_and_dz(&z)?;
        if !d.dominates_error(10.0) {
            let zc = z.to_c64();
            return Err(ThetaError::DerivativeVanished { re: zc.re, im: zc.im });
        }
        let step = t.value.div(&d.value);
        let resid = step.abs_f64();
        last = resid;
        if resid <= tol || t.value.is_zero() {
            // One more step sharpens the point well below tol.
            let mut z2 = z.clone();
            z2.sub_assign_ref(&step);
            let record = |zb: &BigComplex, r: f64, a: f64, it: usize| ZeroRecord {
                q: ctx.q(),
                z: zb.to_c64(),
                residual: r,
                theta_abs: a,
                refined: true,
                iterations: it,
            };
            if let Ok((t2, d2)) = ctx.theta_and_dz(&z2) {
                if d2.dominates_error(10.0) {
                    let r2 = t2.value.div(&d2.value).abs_f64();
                    if r2 <= resid {
                        return Ok(record(&z2, r2, t2.abs_f64(), it + 1));
                    }
                }
            }
            return Ok(record(&z, resid, t.abs_f64(), it));
        }
        z.sub_assign_ref(&step);
        let zc = z.to_c64();
        if !(zc.re.is_finite() && zc.im.is_finite()) || zc.norm() > 1e250 {
            break;
        }
    }
    Err(ThetaError::Diverged { iterations: max_iter, residual: last })
}

/// Samples along an axis-parallel segment, ordered by the varying coordinate.
#[derive(Clone, Debug)]
struct AxisEdge {
    horizontal: bool,
    fixed: f64,
    pts: Vec<(f64, Sample)>,
}

impl AxisEdge {
    fn point(horizontal: bool, fixed: f64) -> impl Fn(f64) -> Complex64 {
        move |s| if horizontal { Complex64::new(s, fixed) } else { Complex64::new(fixed, s) }
    }

    fn phase(&self) -> f64 {
        phase_of(&self.pts)
    }
}

impl<'a> Sampler<'a> {
    fn edge(&mut self, horizontal: bool, fixed: f64, lo: f64, hi: f64) -> Result<AxisEdge> {
        let pts = self.path(AxisEdge::point(horizontal, fixed), lo, hi, 8)?;
        Ok(AxisEdge { horizontal, fixed, pts })
    }

    fn slice(&mut self, e: &AxisEdge, lo: f64, hi: f64) -> Result<AxisEdge> {
        let point = AxisEdge::point(e.horizontal, e.fixed);
        let mut init = Vec::new();
        let has = |s: f64| e.pts.iter().any(|p| p.0 == s);
        if !has(lo) {
            init.push((lo, self.eval(point(lo))?));
        }
        init.extend(e.pts.iter().copied().filter(|p| p.0 >= lo && p.0 <= hi));
        if !has(hi) {
            init.push((hi, self.eval(point(hi))?));
        }
        let pts = self.complete(&point, init)?;
        Ok(AxisEdge { horizontal: e.horizontal, fixed: e.fixed, pts })
    }
}

#[derive(Clone, Debug)]
struct SearchBox {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    bottom: AxisEdge,
    right: AxisEdge,
    top: AxisEdge,
    left: AxisEdge,
    count: u32,
}

impl SearchBox {
    fn winding(&self) -> Result<u32> {
        rounded_count(self.bottom.phase() + self.right.phase() - self.top.phase() - self.left.phase())
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn max_side(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    /// `z` lies in the box up to the uncertainty `slack` of its location.
    fn holds(&self, z: Complex64, slack: f64) -> bool {
        let e = slack + 4.0 * f64::EPSILON * (1.0 + z.norm());
        z.re >= self.x0 - e && z.re <= self.x1 + e && z.im >= self.y0 - e && z.im <= self.y1 + e
    }
}

fn root_box(s: &mut Sampler, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<SearchBox> {
    let bottom = s.edge(true, y0, x0, x1)?;
    let top = s.edge(true, y1, x0, x1)?;
    let left = s.edge(false, x0, y0, y1)?;
    let right = s.edge(false, x1, y0, y1)?;
    let mut b = SearchBox { x0, x1, y0, y1, bottom, right, top, left, count: 0 };
    b.count = b.winding()?;
    Ok(b)
}

fn split(s: &mut Sampler, b: &SearchBox) -> Result<(SearchBox, SearchBox)> {
    let vertical = b.x1 - b.x0 >= b.y1 - b.y0;
    let mut last_err = None;
    for f in SPLIT_FRACTIONS {
        let attempt = |s: &mut Sampler| -> Result<(SearchBox, SearchBox)> {
            if vertical {
                let xm = b.x0 + f * (b.x1 - b.x0);
                let mid = s.edge(false, xm, b.y0, b.y1)?;
                let lo = SearchBox {
                    x1: xm,
                    bottom: s.slice(&b.bottom, b.x0, xm)?,
                    top: s.slice(&b.top, b.x0, xm)?,
                    right: mid.clone(),
                    left: b.left.clone(),
                    count: 0,
                    ..b.clone()
                };
                let hi = SearchBox {
                    x0: xm,
                    bottom: s.slice(&b.bottom, xm, b.x1)?,
                    top: s.slice(&b.top, xm, b.x1)?,
                    left: mid,
                    right: b.right.clone(),
                    count: 0,
                    ..b.clone()
                };
                Ok((lo, hi))
            } else {
                let ym = b.y0 + f * (b.y1 - b.y0);
                let mid = s.edge(true, ym, b.x0, b.x1)?;
                let lo = SearchBox {
                    y1: ym,
                    left: s.slice(&b.left, b.y0, ym)?,
                    right: s.slice(&b.right, b.y0, ym)?,
                    top: mid.clone(),
                    bottom: b.bottom.clone(),
                    count: 0,
                    ..b.clone()
                };
                let hi = SearchBox {
                    y0: ym,
                    left: s.slice(&b.left, ym, b.y1)?,
                    right: s.slice(&b.right, ym, b.y1)?,
                    bottom: mid,
                    top: b.top.clone(),
                    count: 0,
                    ..b.clone()
                };
                Ok((lo, hi))
            }
        };
        match attempt(s).and_then(|(mut lo, mut hi)| {
            lo.count = lo.winding()?;
            hi.count = hi.winding()?;
            Ok((lo, hi))
        }) {
            Ok((lo, hi)) => {
                if lo.count + hi.count != b.count {
                    return Err(ThetaError::CountMismatch {
                        parent: b.count as i64,
                        children: (lo.count + hi.count) as i64,
                    });
                }
                return Ok((lo, hi));
            }
            Err(e @ (ThetaError::ContourTooClose { .. } | ThetaError::NonIntegerWinding(_))) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn subdivide(sampler: &mut Sampler, root: SearchBox, opts: &SearchOptions, out: &mut ZeroSearch) -> Result<()> {
    let ctx = sampler.ctx;
    let mut stack = vec![root];
    while let Some(b) = stack.pop() {
        out.boxes += 1;
        match b.count {
            0 => continue,
            1 => {
                if let Ok(rec) = refine_zero_in(ctx, b.center(), opts.tol, opts.newton_iterations) {
                    if b.holds(rec.z, 10.0 * rec.residual) {
                        out.zeros.push(snap_real(ctx, &b, rec, opts));
                        continue;
                    }
                }
                if b.max_side() < MIN_BOX_SIDE {
                    let z = b.center();
                    out.zeros.push(ZeroRecord {
                        q: ctx.q(),
                        z,
                        residual: f64::INFINITY,
                        theta_abs: f64::NAN,
                        refined: false,
                        iterations: opts.newton_iterations,
                    });
                    continue;
                }
            }
            n => {
                if b.max_side() < MIN_BOX_SIDE {
                    out.clusters.push(Cluster { center: b.center(), half_width: 0.5 * b.max_side(), count: n });
                    continue;
                }
            }
        }
        let (lo, hi) = split(sampler, &b)?;
        stack.push(hi);
        stack.push(lo);
    }
    Ok(())
}

/// A zero in a box that straddles the real axis deeply enough to contain its
/// own conjugate must be real, since the box holds only one zero.
fn snap_real(ctx: &ThetaContext, b: &SearchBox, rec: ZeroRecord, opts: &SearchOptions) -> ZeroRecord {
    let im = rec.z.im.abs();
    if rec.z.im == 0.0 || !(b.y0 < -im && b.y1 > im) {
        return rec;
    }
    match refine_zero_in(ctx, Complex64::new(rec.z.re, 0.0), opts.tol, opts.newton_iterations) {
        Ok(r) if r.z.im == 0.0 && b.holds(r.z, 10.0 * r.residual) => r,
        _ => rec,
    }
}

fn dedupe_and_canonicalize(zeros: &mut Vec<ZeroRecord>, symmetric: bool, tol: f64) {
    zeros.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    let mut kept: Vec<ZeroRecord> = Vec::with_capacity(zeros.len());
    for z in zeros.drain(..) {
        let close =
            kept.iter().any(|k| (k.z - z.z).norm() <= 100.0 * tol * (1.0 + z.z.norm()) && k.refined && z.refined);
        if !close {
            kept.push(z);
        }
    }
    if symmetric {
        let n = kept.len();
        for i in 0..n {
            if kept[i].z.im <= 0.0 {
                continue;
            }
            let target = kept[i].z.conj();
            let partner = (0..n)
                .filter(|&j| kept[j].z.im < 0.0)
                .min_by(|&a, &b| (kept[a].z - target).norm().total_cmp(&(kept[b].z - target).norm()));
            if let Some(j) = partner {
                if (kept[j].z - target).norm() <= 100.0 * tol * (1.0 + target.norm()) {
                    let mut c = kept[i].clone();
                    c.z = target;
                    kept[j] = c;
                }
            }
        }
        kept.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    }
    *zeros = kept;
}

fn search_rect(
    sampler: &mut Sampler,
    bbox: (f64, f64, f64, f64),
    opts: &SearchOptions,
    out: &mut ZeroSearch,
) -> Result<()> {
    let (x0, x1, y0, y1) = bbox;
    let root = match root_box(sampler, x0, x1, y0, y1) {
        Ok(b) => b,
        Err(ThetaError::ContourTooClose { .. }) => {
            // Open-region semantics: zeros on the boundary are outside.
            let e = 1e-9 * (1.0 + x0.abs().max(x1.abs()).max(y0.abs()).max(y1.abs()));
            out.boundary_shrunk = true;
            root_box(sampler, x0 + e, x1 - e, y0 + e, y1 - e)?
        }
        Err(e) => return Err(e),
    };
    out.total_count = root.count;
    subdivide(sampler, root, opts, out)
}

/// All zeros inside `region`, refined by Newton; clusters that cannot be
/// separated above [`MIN_BOX_SIDE`] are reported rather than dropped.
pub fn search_zeros(ctx: &ThetaContext, region: &Region, opts: &SearchOptions) -> Result<ZeroSearch> {
    check_tol("tol", opts.tol)?;
    region.validate()?;
    let mut out = ZeroSearch::default();
    let mut sampler = Sampler::new(ctx, opts.floor, opts.max_evaluations);
    match *region {
        Contour::Rectangle { x0, x1, y0, y1 } => search_rect(&mut sampler, (x0, x1, y0, y1), opts, &mut out)?,
        _ => {
            let (x0, x1, y0, y1) = region.bounding_box();
            let pad = 0.0137 * (x1 - x0).max(y1 - y0);
            search_rect(&mut sampler, (x0 - pad, x1 + pad * 1.07, y0 - pad * 0.93, y1 + pad), opts, &mut out)?;
            out.zeros.retain(|z| region.contains(z.z));
            out.clusters.retain(|c| region.contains(c.center));
            let (count, _) = match winding_with(&mut sampler, region) {
                Ok(w) => w,
                Err(ThetaError::ContourTooClose { .. }) => {
                    out.boundary_shrunk = true;
                    (out.zeros.len() as u32 + out.clusters.iter().map(|c| c.count).sum::<u32>(), 0.0)
                }
                Err(e) => return Err(e),
            };
            out.total_count = count;
        }
    }
    dedupe_and_canonicalize(&mut out.zeros, region.is_conjugation_symmetric(), opts.tol);
    let found = out.zeros.len() as u32 + out.clusters.iter().map(|c| c.count).sum::<u32>();
    if found != out.total_count {
        return Err(ThetaError::CountMismatch { parent: out.total_count as i64, children: found as i64 });
    }
    out.evaluations = sampler.evaluations;
    Ok(out)
}

/// All zeros of `θ(q, ·)` in `region`, each refined to `tol`.
pub fn find_zeros(q: QParam, region: &Region, tol: f64, prec: Precision) -> Result<Vec<ZeroRecord>> {
    let ctx = ThetaContext::new(q, prec);
    let res = search_zeros(&ctx, region, &SearchOptions::new(tol, prec.bits()))?;
    if let Some(c) = res.clusters.first() {
        return Err(ThetaError::UnresolvedCluster { count: c.count, re: c.center.re, im: c.center.im });
    }
    Ok(res.zeros)
}

/// Compares `θ` with its degree-`degree` truncation on `c`: passes when the
/// certified minimum of `|θ_degree|` on the contour exceeds the bound on the
/// neglected tail by more than ten times the evaluation error.
pub fn rouche_certify(q: QParam, degree: usize, c: &Contour, prec: Precision) -> Result<CertificateReport> {
    if degree == 0 {
        return Err(ThetaError::InvalidArgument("degree must be at least 1".into()));
    }
    c.validate()?;
    let bits = prec.bits();
    let qf = Float::with_val(bits, q.value());
    // Coefficients q^{j(j+1)/2} rounded once to f64.
    let mut coef = Vec::with_capacity(degree + 1);
    let mut qj = Float::with_val(bits, 1);
    let mut cj = Float::with_val(bits, 1);
    for j in 0..=degree {
        if j > 0 {
            qj *= &qf;
            cj *= &qj;
        }
        coef.push(cj.to_f64());
    }
    let r_max = c.max_modulus();
    let u53 = f64::EPSILON / 2.0;
    let n = degree as f64;
    let abs_poly = |r: f64| coef.iter().rev().fold(0.0, |acc, &cj| acc * r + cj);
    let abs_dpoly = |r: f64| coef.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, &cj)| acc * r + j as f64 * cj);
    let m2: f64 = coef
        .iter()
        .enumerate()
        .skip(2)
        .map(|(j, &cj)| (j * (j - 1)) as f64 * cj * r_max.powi(j as i32 - 2))
        .sum::<f64>()
        * (1.0 + 1e-12);
    // Horner in f64 with a standard forward error bound.
    let eval = |z: Complex64| -> (f64, f64, f64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &cj in coef.iter().rev() {
            dp = dp * z + p;
            p = p * z + cj;
        }
        let r = z.norm();
        let err = (4.0 * n + 6.0) * u53 * abs_poly(r) * 1.01;
        let derr = (4.0 * n + 6.0) * u53 * abs_dpoly(r) * 1.01 * n;
        (p.norm(), dp.norm() + derr, err)
    };

    let mut sampled_min = f64::INFINITY;
    let mut certified_min = f64::INFINITY;
    let mut max_err: f64 = 0.0;
    let mut samples = 0usize;
    for piece in c.pieces() {
        let speed = piece.speed();
        let mut stack = Vec::new();
        let n0 = 64;
        let pts: Vec<(f64, (f64, f64, f64))> =
            (0..=n0).map(|k| (k as f64 / n0 as f64, eval(piece.point(k as f64 / n0 as f64)))).collect();
        samples += pts.len();
        for w in pts.windows(2).rev() {
            stack.push((w[0], w[1], 0u32));
        }
        while let Some(((ta, a), (tb, b), depth)) = stack.pop() {
            let (fa, ga, ea) = a;
            let (fb, gb, eb) = b;
            sampled_min = sampled_min.min(fa).min(fb);
            max_err = max_err.max(ea).max(eb);
            let h = speed * (tb - ta) / 2.0;
            let lower = (fa - ea - ga * h - m2 * h * h / 2.0).min(fb - eb - gb * h - m2 * h * h / 2.0);
            let good = lower >= 0.99 * (fa.min(fb) - ea.max(eb));
            if good || depth >= 40 {
                certified_min = certified_min.min(lower);
                continue;
            }
            let tm = 0.5 * (ta + tb);
            let m = eval(piece.point(tm));
            samples += 1;
            stack.push(((tm, m), (tb, b), depth + 1));
            stack.push(((ta, a), (tm, m), depth + 1));
        }
    }
    let tail = tail_bound_from(q, r_max, degree + 1);

    let mut report = CertificateReport::new("rouche");
    report.input("q", q.value()).input("degree", degree as f64).input("max_modulus_on_contour", r_max);
    report
        .quantity("min_modulus", sampled_min)
        .quantity("certified_min_modulus", certified_min)
        .quantity("tail_bound", tail)
        .quantity("evaluation_error", max_err)
        .quantity("samples", samples as f64)
        .quantity("unit_roundoff", unit_roundoff(bits));
    let label = "min |theta_degree| on contour > tail bound";
    if certified_min - tail > 10.0 * max_err {
        report.greater(label, certified_min, tail);
    } else {
        report.undecided(label, certified_min, tail);
    }
    if report.pass {
        let ctx = ThetaContext::new(q, prec);
        if let Ok(w) = winding_count_in(&ctx, c, default_floor(bits), CONTOUR_BUDGET) {
            report.quantity("zeros_inside", w.count as f64);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap(0.0), 0.0);
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap(PI), PI);
    }

    #[test]
    fn containment_and_symmetry() {
        let hd = Contour::right_half_disk(3.0).unwrap();
        assert!(hd.contains(Complex64::new(1.0, 2.0)));
        assert!(!hd.contains(Complex64::new(-1.0, 0.0)));
        assert!(!hd.contains(Complex64::new(0.0, 1.0)));
        assert!(hd.is_conjugation_symmetric());
        let r = Contour::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(!r.is_conjugation_symmetric());
        assert!(Contour::rectangle(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn half_disk_pieces_close_up() {
        let hd = Contour::right_half_disk(3.0).unwrap();
        let ps = hd.pieces();
        for w in ps.windows(2) {
            assert!((w[0].point(1.0) - w[1].point(0.0)).norm() < 1e-12);
        }
        assert!((ps.last().unwrap().point(1.0) - ps[0].point(0.0)).norm() < 1e-12);
    }

    #[test]
    fn no_zeros_in_small_disk() {
        let c = Contour::circle(Complex64::new(0.0, 0.0), 0.5).unwrap();
        let w = winding_count(q(0.2), &c, 1e-8, Precision::default()).unwrap();
        assert_eq!(w.count, 0);
    }

    #[test]
    fn floor_violation_is_reported() {
        // |θ| on this circle is about 1e-3 · |θ'|; a floor of 1 cannot be met.
        let c = Contour::circle(Complex64::new(0.0335661, 2.8853811), 1e-3).unwrap();
        let e = winding_count(q(0.73), &c, 1.0, Precision::default()).unwrap_err();
        assert!(matches!(e, ThetaError::ContourTooClose { .. }));
    }
}
