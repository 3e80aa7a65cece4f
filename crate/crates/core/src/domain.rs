//! End-to-end check of the containment theorem on a grid of `q`: every zero
//! found in a bounded box must lie in the domain, and the unbounded exterior
//! is handed to the certificates.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use crate::certificates::{certify_part1, certify_part2_k, certify_part2_l, certify_small_q, IntervalIndex};
use crate::error::{check_tol, Result, ThetaError};
use crate::mp::Precision;
use crate::product::ThetaContext;
use crate::report::CertificateReport;
use crate::series::QParam;
use crate::zeros::{search_zeros, Cluster, Contour, Region, SearchOptions, ZeroRecord};

/// `{Re z < 0, |Im z| ≤ strip_height} ∪ {Re z ≥ 0, |z| ≤ half_disk_radius}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremDomain {
    pub strip_height: f64,
    pub half_disk_radius: f64,
}

impl Default for TheoremDomain {
    fn default() -> Self {
        Self { strip_height: 132.0, half_disk_radius: 18.0 }
    }
}

impl TheoremDomain {
    pub fn contains(&self, z: Complex64) -> bool {
        if z.re < 0.0 {
            z.im.abs() <= self.strip_height
        } else {
            z.norm() <= self.half_disk_radius
        }
    }
}

pub fn domain_membership(z: Complex64) -> bool {
    TheoremDomain::default().contains(z)
}

/// Default left edge of the scanned box.
pub const DEFAULT_R_LEFT: f64 = 400.0;

/// `[−r_left, 25] × [−150, 150]`.
pub fn margin_box(r_left: f64) -> Result<Region> {
    Contour::rectangle(-r_left, 25.0, -150.0, 150.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterAt {
    pub q: f64,
    pub cluster: Cluster,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCount {
    pub q: f64,
    /// Zeros with positive imaginary part inside the domain.
    pub pairs: u32,
    pub real_zeros: u32,
}

/// A piece of the plane outside the scanned box and the certificates that
/// claim it zero-free.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coverage {
    pub q: f64,
    pub region: String,
    pub certificates: Vec<String>,
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanError {
    pub q: f64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScanReport {
    pub q_values: Vec<f64>,
    pub zeros: Vec<ZeroRecord>,
    pub violations: Vec<ZeroRecord>,
    pub clusters: Vec<ClusterAt>,
    /// Unresolved clusters lying outside the domain.
    pub outside_clusters: Vec<ClusterAt>,
    pub pair_counts: Vec<PairCount>,
    pub certificates: Vec<CertificateReport>,
    pub coverage: Vec<Coverage>,
    pub errors: Vec<ScanError>,
    pub pass: bool,
}

impl ScanReport {
    fn settle(&mut self) {
        self.pass = self.violations.is_empty()
            && self.outside_clusters.is_empty()
            && self.errors.is_empty()
            && self.coverage.iter().all(|c| c.covered);
    }

    /// Append `other`, keeping one copy of identical certificates.
    pub fn merge(&mut self, other: ScanReport) {
        self.q_values.extend(other.q_values);
        self.zeros.extend(other.zeros);
        self.violations.extend(other.violations);
        self.clusters.extend(other.clusters);
        self.outside_clusters.extend(other.outside_clusters);
        self.pair_counts.extend(other.pair_counts);
        for c in other.certificates {
            if !self.certificates.contains(&c) {
                self.certificates.push(c);
            }
        }
        self.coverage.extend(other.coverage);
        self.errors.extend(other.errors);
        self.settle();
    }

    pub fn pair_count(&self, q: f64) -> Option<u32> {
        self.pair_counts.iter().find(|p| p.q == q).map(|p| p.pairs)
    }
}

/// Certificates for the exterior of the box at `q`, with the coverage they give.
pub fn exterior_certificates(q: QParam) -> Result<(Vec<CertificateReport>, Vec<Coverage>)> {
    let q = q.value();
    let b = 132.0;
    let iv = IntervalIndex::containing(q)?;
    let (certs, strip): (Vec<CertificateReport>, Vec<(&str, Vec<&str>)>) = if q <= 0.5 {
        (vec![certify_part1(2)?, certify_small_q(b)?], vec![("Re z < 0, |Im z| > 132", vec!["smallq"])])
    } else {
        let n = iv.n;
        (
            vec![certify_part1(n)?, certify_part2_k(b, n..=n)?, certify_part2_l(b, n..=n)?],
            vec![
                ("Re z < 0, |Im z| > 132, |Re z| <= |Im z|", vec!["part2K"]),
                ("Re z < 0, |Im z| > 132, |Re z| >= |Im z|", vec!["part2L"]),
            ],
        )
    };
    // A failed printed checkpoint leaves the region covered as long as the
    // inequalities the argument actually needs hold.
    let passing = |id: &str| certs.iter().any(|c| c.lemma_id == id && c.conclusions_pass());
    let mut coverage = vec![Coverage {
        q,
        region: "Re z >= 0, |z| > 18".into(),
        certificates: vec!["part1".into()],
        covered: passing("part1"),
    }];
    for (region, ids) in strip {
        coverage.push(Coverage {
            q,
            region: region.into(),
            certificates: ids.iter().map(|s| s.to_string()).collect(),
            covered: ids.iter().any(|id| passing(id)),
        });
    }
    Ok((certs, coverage))
}

/// Locate all zeros in `margin_box`, classify them and attach the exterior
/// certificates.
pub fn verify_theorem_at(q: QParam, margin_box: &Region, tol: f64, prec: Precision) -> Result<ScanReport> {
    check_tol("tol", tol)?;
    let domain = TheoremDomain::default();
    let (x0, x1, y0, y1) = margin_box.bounding_box();
    if !(x0 < 0.0 && x1 > domain.half_disk_radius && y0 < -domain.strip_height && y1 > domain.strip_height) {
        return Err(ThetaError::InvalidArgument(
            "margin box must reach past Re z = 18 and |Im z| = 132 and into Re z < 0".into(),
        ));
    }
    let ctx = ThetaContext::new(q, prec);
    let found = search_zeros(&ctx, margin_box, &SearchOptions::new(tol, prec.bits()))?;
    let mut report = ScanReport { q_values: vec![q.value()], ..Default::default() };
    let mut pairs = PairCount { q: q.value(), pairs: 0, real_zeros: 0 };
    for z in found.zeros {
        if domain.contains(z.z) {
            if z.z.im > 0.0 {
                pairs.pairs += 1;
            } else if z.z.im == 0.0 {
                pairs.real_zeros += 1;
            }
        } else {
            report.violations.push(z.clone());
        }
        report.zeros.push(z);
    }
    for c in found.clusters {
        let at = ClusterAt { q: q.value(), cluster: c };
        if !domain.contains(at.cluster.center) {
            report.outside_clusters.push(at.clone());
        }
        report.clusters.push(at);
    }
    report.pair_counts.push(pairs);
    let (certs, coverage) = exterior_certificates(q)?;
    report.certificates = certs;
    report.coverage = coverage;
    report.settle();
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub tol: f64,
    pub r_left: f64,
    pub prec: Precision,
    /// Worker threads; `0` picks the available parallelism.
    pub threads: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { tol: 1e-10, r_left: DEFAULT_R_LEFT, prec: Precision::default(), threads: 0 }
    }
}

/// Per-`q` reports merged in grid order. A failing grid point is recorded in
/// `errors` and the rest of the grid still runs.
pub fn scan_q_grid(grid: &[QParam], opts: &ScanOptions) -> Result<ScanReport> {
    if grid.is_empty() {
        return Err(ThetaError::EmptyGrid);
    }
    check_tol("tol", opts.tol)?;
    let region = margin_box(opts.r_left)?;
    let threads = match opts.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(grid.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ScanReport>>> = Mutex::new(vec![None; grid.len()]);
    // Hand out the largest q first: they dominate the running time.
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].value().total_cmp(&grid[a].value()));
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&i) = order.get(k) else { break };
                let q = grid[i];
                let r = verify_theorem_at(q, &region, opts.tol, opts.prec).unwrap_or_else(|e| {
                    let mut r = ScanReport {
                        q_values: vec![q.value()],
                        errors: vec![ScanError { q: q.value(), message: e.to_string() }],
                        ..Default::default()
                    };
                    r.settle();
                    r
                });
                slots.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let mut out = ScanReport::default();
    for r in slots.into_inner().expect("workers joined").into_iter().flatten() {
        out.merge(r);
    }
    Ok(out)
}
