// Frozen oracle values keep every digit the oracle printed.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use partial_theta::*;
use proptest::prelude::*;
use rug::ops::Pow;
use rug::Float;
use std::f64::consts::PI;

const P: Precision = Precision::DEFAULT;

fn q(v: f64) -> QParam {
    QParam::new(v).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Tail `Σ_{j>from} q^{j(j+1)/2} r^j` summed term by term at 256 bits.
fn oracle_tail(qv: f64, r: f64, from: usize) -> f64 {
    let bits = 256;
    let qf = Float::with_val(bits, qv);
    let rf = Float::with_val(bits, r);
    let mut sum = Float::with_val(bits, 0);
    for j in from + 1..from + 4000 {
        let t = Float::with_val(bits, (&qf).pow((j * (j + 1) / 2) as u32)) * Float::with_val(bits, (&rf).pow(j as u32));
        if t.is_zero() || (j > from + 10 && Float::with_val(bits, &t * 1e40f64) < sum) {
            break;
        }
        sum += t;
    }
    sum.to_f64()
}

/// Direct 256-bit partial sum of `Σ_{j<n} q^{j(j+1)/2} z^j`.
fn oracle_theta(qv: f64, z: Complex64, n: usize) -> Complex64 {
    let bits = 256;
    let qf = Float::with_val(bits, qv);
    let (mut re, mut im) = (Float::with_val(bits, 0), Float::with_val(bits, 0));
    let (mut pr, mut pi) = (Float::with_val(bits, 1), Float::with_val(bits, 0));
    for j in 0..n {
        let w = Float::with_val(bits, (&qf).pow((j * (j + 1) / 2) as u32));
        re += Float::with_val(bits, &pr * &w);
        im += Float::with_val(bits, &pi * &w);
        let nr = Float::with_val(bits, &pr * z.re) - Float::with_val(bits, &pi * z.im);
        let ni = Float::with_val(bits, &pr * z.im) + Float::with_val(bits, &pi * z.re);
        pr = nr;
        pi = ni;
    }
    c(re.to_f64(), im.to_f64())
}

#[test]
fn cutoff_for_the_degree_twenty_truncation() {
    let plan = truncation_cutoff(q(0.73), 3.0, 1e-21).unwrap();
    assert!(plan.cutoff <= 20, "cutoff {}", plan.cutoff);
    assert!(plan.tail_bound < 3e-22, "tail {}", plan.tail_bound);
    assert!(oracle_tail(0.73, 3.0, plan.cutoff) <= plan.tail_bound);
    // The tail past degree 20 quoted in the Rouché step.
    let t20 = oracle_tail(0.73, 3.0, 20);
    assert!(t20 < 3e-22 && t20 <= partial_theta::series::tail_bound_from(q(0.73), 3.0, 21));
}

#[test]
fn cutoff_at_origin() {
    let plan = truncation_cutoff(q(0.5), 0.0, 1e-30).unwrap();
    assert_eq!(plan.cutoff, 0);
    assert_eq!(plan.tail_bound, 0.0);
}

#[test]
fn cutoff_close_to_oracle_minimum() {
    let eps = 1e-12;
    let plan = truncation_cutoff(q(0.5), 2.0, eps).unwrap();
    let minimal = (0..100).find(|&j| oracle_tail(0.5, 2.0, j) <= eps).unwrap();
    assert!(plan.cutoff >= minimal && plan.cutoff <= minimal + 2, "cutoff {} vs oracle {minimal}", plan.cutoff);
    assert!(oracle_tail(0.5, 2.0, plan.cutoff) <= plan.tail_bound && plan.tail_bound <= eps);
}

#[test]
fn theta_examples() {
    let v = theta_eval(q(0.5), c(0.0, 0.0), 1e-15, P).unwrap();
    assert_eq!(v.value_c64(), c(1.0, 0.0));
    assert!(v.err_f64() <= 1e-15);

    let v = theta_eval(q(0.73), c(0.03356612894, 2.885381139), 1e-12, P).unwrap();
    assert!(v.abs_f64() < 1e-6, "{}", v.abs_f64());

    let v = theta_eval(q(0.3), c(-1.0, 0.0), 1e-14, P).unwrap();
    assert!((v.value_c64().re - 0.726_276_890_561_551_065_7).abs() <= 1e-14);
    assert!((v.value_c64() - oracle_theta(0.3, c(-1.0, 0.0), 200)).norm() <= 1e-14);
}

#[test]
fn dz_examples() {
    let v = theta_dz(q(0.5), c(0.0, 0.0), 1e-15, P).unwrap();
    assert_eq!(v.value_c64(), c(0.5, 0.0));

    let z = c(1.0, 1.0);
    let h = 1e-8;
    let f = |z| theta_eval(q(0.73), z, 1e-14, P).unwrap().value_c64();
    let fd = (f(z + h) - f(z - h)) / (2.0 * h);
    let v = theta_dz(q(0.73), z, 1e-12, P).unwrap();
    assert!((v.value_c64() - fd).norm() <= 1e-6 * (1.0 + fd.norm()));

    let v = theta_dz(q(0.3), c(-5.0, 0.0), 1e-12, P).unwrap();
    assert!((v.value_c64().re - 0.081_767_194_452_873_562_46).abs() <= 1e-12);
}

#[test]
fn dq_examples() {
    let v = theta_dq(q(0.5), c(0.0, 0.0), 1e-15, P).unwrap();
    assert_eq!(v.value_c64(), c(0.0, 0.0));

    let h = 1e-8;
    let f = |qv| theta_eval(q(qv), c(-2.0, 0.0), 1e-14, P).unwrap().value_c64();
    let fd = (f(0.4 + h) - f(0.4 - h)) / (2.0 * h);
    let v = theta_dq(q(0.4), c(-2.0, 0.0), 1e-12, P).unwrap();
    assert!((v.value_c64() - fd).norm() <= 1e-6);

    let v = theta_dq(q(0.73), c(-1.0, 1.0), 1e-12, P).unwrap();
    let oracle = c(-0.171_829_383_377_038_493_17, -0.176_773_286_151_279_825_03);
    assert!((v.value_c64() - oracle).norm() <= 1e-12);
}

#[test]
fn g_examples() {
    let v = g_eval(q(0.5), c(2.0, 0.0), 1e-14, P).unwrap();
    assert!((v.value_c64().re - 0.641_632_560_655_153_866_29).abs() <= 1e-14);

    for qv in [0.05, 0.3, 0.73, 0.99] {
        for phi in [0.0, 1.0, 2.5, 3.1] {
            let v = g_eval(q(qv), Complex64::from_polar(18.0, phi), 1e-14, P).unwrap();
            assert!(v.abs_f64() <= 1.0 / 17.0 + v.err_f64());
        }
    }

    let v = g_eval(q(0.9), c(-40.0, 0.0), 1e-14, P).unwrap();
    assert!((v.value_c64().re + 0.024_448_686_386_315_818_28).abs() <= 1e-14);
    assert!(v.abs_f64() <= 1.0 / 39.0 + v.err_f64());

    assert!(matches!(g_eval(q(0.5), c(1.01, 0.0), 1e-14, P), Err(ThetaError::OutsideConvergence { .. })));
}

#[test]
fn bilateral_sum_examples() {
    let star = theta_star_series(q(0.5), c(-2.0, 0.0), 1e-14, P).unwrap();
    let th = theta_eval(q(0.5), c(-2.0, 0.0), 1e-14, P).unwrap();
    let g = g_eval(q(0.5), c(-2.0, 0.0), 1e-14, P).unwrap();
    let combined = star.err_f64() + th.err_f64() + g.err_f64();
    assert!((star.value_c64() - th.value_c64() - g.value_c64()).norm() <= combined);
    assert!(star.abs_f64() <= star.err_f64().max(1e-14));

    let v = theta_star_series(q(0.73), c(5.0, 5.0), 1e-12, P).unwrap();
    let oracle = c(-63.481_181_486_061_900_290, -279.121_279_222_078_644_921);
    assert!((v.value_c64() - oracle).norm() <= 1e-12);
}

#[test]
fn product_examples() {
    let v = theta_star_product(q(0.5), c(-2.0, 0.0), 1e-14, P).unwrap();
    assert!(v.abs_f64() <= v.err_f64(), "{} vs {}", v.abs_f64(), v.err_f64());

    let p = theta_star_product(q(0.73), c(5.0, 5.0), 1e-12, P).unwrap();
    let s = theta_star_series(q(0.73), c(5.0, 5.0), 1e-12, P).unwrap();
    assert!((p.value_c64() - s.value_c64()).norm() <= p.err_f64() + s.err_f64());

    let v = theta_star_product(q(0.9), c(-30.0, 10.0), 1e-10, P).unwrap();
    let oracle = c(-218_929_795.020_396_638_063_6, 16_979_857.326_335_609_941_2);
    assert!((v.value_c64() - oracle).norm() <= 1e-10 * oracle.norm());

    assert_eq!(theta_star_product(q(0.5), c(0.0, 0.0), 1e-12, P).unwrap_err(), ThetaError::SingularAtZero);
}

#[test]
fn evaluation_is_deterministic() {
    let a = theta_eval(q(0.61), c(-7.3, 2.2), 1e-20, P).unwrap();
    let b = theta_eval(q(0.61), c(-7.3, 2.2), 1e-20, P).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.err_f64(), b.err_f64());
}

fn polar(r: f64, phi: f64) -> Complex64 {
    Complex64::from_polar(r, phi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn theta_plus_g_is_bilateral_sum(qv in 0.05f64..0.95, r in 1.05f64..50.0, phi in -PI..PI) {
        let z = polar(r, phi);
        let th = theta_eval(q(qv), z, 1e-12, P).unwrap();
        let g = g_eval(q(qv), z, 1e-12, P).unwrap();
        let star = theta_star_series(q(qv), z, 1e-12, P).unwrap();
        let gap = (th.value_c64() + g.value_c64() - star.value_c64()).norm();
        // f64 conversion of each value adds a relative rounding of 2^-53.
        let rounding = 4.0 * f64::EPSILON * (th.abs_f64() + g.abs_f64() + star.abs_f64());
        prop_assert!(gap <= th.err_f64() + g.err_f64() + star.err_f64() + rounding);
    }

    #[test]
    fn product_matches_series(qv in 0.05f64..0.95, r in 1.1f64..50.0, phi in -PI..PI) {
        let z = polar(r, phi);
        let p = theta_star_product(q(qv), z, 1e-12, P).unwrap();
        let s = theta_star_series(q(qv), z, 1e-12 * (1.0 + p.abs_f64()), P).unwrap();
        let rounding = 4.0 * f64::EPSILON * (p.abs_f64() + s.abs_f64());
        prop_assert!((p.value_c64() - s.value_c64()).norm() <= p.err_f64() + s.err_f64() + rounding);
    }

    #[test]
    fn conjugation_is_exact(qv in 0.01f64..0.99, re in -60.0f64..60.0, im in -60.0f64..60.0) {
        let z = c(re, im);
        let a = theta_eval(q(qv), z, 1e-15, P).unwrap();
        let b = theta_eval(q(qv), z.conj(), 1e-15, P).unwrap();
        prop_assert_eq!(&a.value.re, &b.value.re);
        prop_assert_eq!(a.value.im, -b.value.im);
    }

    #[test]
    fn functional_identity(k in 1u32..256, re in -1920i32..1920, im in -1920i32..1920) {
        // Dyadic q and z keep the product q z exact in f64.
        let qv = k as f64 / 256.0;
        let z = c(re as f64 / 64.0, im as f64 / 64.0);
        let lhs = theta_eval(q(qv), z, 1e-15, P).unwrap();
        // Near q = 1 the value can overflow the f64 comparison below.
        prop_assume!(lhs.log2_abs() < 1000.0);
        let inner = theta_eval(q(qv), z * qv, 1e-15, P).unwrap();
        let rhs = c(1.0, 0.0) + z * qv * inner.value_c64();
        let err = lhs.err_f64() + (z * qv).norm() * inner.err_f64();
        let rounding = 8.0 * f64::EPSILON * (lhs.abs_f64() + (z * qv).norm() * inner.abs_f64() + 1.0);
        prop_assert!((lhs.value_c64() - rhs).norm() <= err + rounding);
    }

    #[test]
    fn positive_axis_stays_above_one(qv in 0.01f64..0.99, x in 0.0f64..100.0) {
        let v = theta_eval(q(qv), c(x, 0.0), 1e-15, P).unwrap();
        prop_assert!(v.value_c64().re >= 1.0 - v.err_f64());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn tail_bound_is_sound(qv in 0.05f64..0.95, r in 0.0f64..40.0, e in 3.0f64..30.0) {
        let eps = 10f64.powf(-e);
        let plan = truncation_cutoff(q(qv), r, eps).unwrap();
        prop_assert!(plan.tail_bound <= eps);
        prop_assert!(oracle_tail(qv, r, plan.cutoff) <= plan.tail_bound);
    }
}
