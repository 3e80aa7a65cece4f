// Frozen oracle values keep every digit the oracle printed.
#![allow(clippy::excessive_precision)]

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use partial_theta::certificates::{
    factor_modulus_margin, q_product, r_product, zeta, zeta_root, DEFAULT_SAMPLES, FACTOR_CUTOFF, Q_TILDE_1,
};
use partial_theta::*;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// 30-digit arithmetic from the displayed closed forms, b = 132.
const K1_132: f64 = 0.010_543_469_069_576_526;
const K0_3: f64 = -0.705_225_712_968_242_69;
const L1_132: f64 = 0.304_436_801_520_636_04;
const L0_132: f64 = -6.053_337_162_031_580_4;
const MU1_0_AT_3: f64 = 2.750_978_245_793_309_3;

#[test]
fn q_product_against_oracle() {
    let p = q_product(0.5).unwrap();
    assert!((p.value() - 0.288_788_095_086_602_421_28).abs() < 1e-14);
    assert!(p.lower() <= 0.288_788_095_086_602_421_28);
    let p = q_product(0.01).unwrap();
    assert!((p.value() - 0.989_900_000_100_01).abs() < 1e-14);
}

#[test]
fn q_bound_instances() {
    let bound = (-PI * PI / 6.0).exp();
    let r = q_product_bound(2, &[0.5, 0.01]).unwrap();
    assert!(r.pass);
    assert!((r.quantity_value("bound").unwrap() - bound).abs() < 1e-15);
    assert!((bound - 0.193_025_289_139_898_04).abs() < 1e-15);
    assert!(q_product_bound(3, &[2.0 / 3.0]).unwrap().pass);
    assert!(q_product_bound(3, &[2.0 / 3.0]).unwrap().min_margin() > 0.0);
    assert!(q_product_bound(2, &[0.6]).is_err());
    assert!(q_product_bound(3, &[0.6667]).is_err());
}

#[test]
fn zeta_root_and_grid() {
    let r = technical_zeta_check();
    assert!(r.pass);
    let root = zeta_root();
    assert!(root > 0.683 && root < 0.684, "{root}");
    assert!(zeta(root).abs() < 1e-11);
    assert_eq!(zeta(0.0), 0.0);
    assert!(r.quantity_value("min zeta on grid (0, 0.683]").unwrap() > 0.0);
}

#[test]
fn r_bound_instances() {
    let r = r_bound_check(2, 132.0, &[(0.4, c(-5.0, 132.0))]).unwrap();
    assert!(r.pass);
    let bound = r.quantity_value("bound").unwrap();
    assert!((bound - (-2.0 * 133.0 / (132.0f64 * 132.0)).exp()).abs() < 1e-15);
    assert!((bound - 0.984_849_639_853_445_4).abs() < 1e-15);

    assert!(r_bound_check(3, 1.5, &[(0.6, c(-1.0, 1.5))]).unwrap().pass);

    // On Re z ≥ 0 every factor has modulus at least 1.
    let p = r_product(0.4, c(0.0, 132.0)).unwrap();
    assert!(p.value() >= 1.0);
    assert!(r_bound_check(2, 132.0, &[(0.4, c(0.0, 132.0))]).unwrap().pass);

    assert!(r_bound_check(2, 132.0, &[(0.4, c(-5.0, 10.0))]).is_err());
}

#[test]
fn partition_examples() {
    let p = factor_partition(0.4, c(-10.0, 50.0)).unwrap();
    assert!(p.ddagger.len() + p.sharp.len() <= 2);

    let p = factor_partition(0.9, c(-1.0, 132.0)).unwrap();
    let mut all: Vec<usize> = [&p.tilde, &p.ddagger, &p.sharp, &p.dagger].into_iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (1..=p.cutoff).collect::<Vec<_>>());
    assert!(0.9f64.powi(p.cutoff as i32 + 1) * c(-1.0, 132.0).norm() < FACTOR_CUTOFF);

    let p = factor_partition(0.73, c(-20.0, 140.0)).unwrap();
    let n = IntervalIndex::containing(0.73).unwrap().n;
    assert_eq!(n, 4);
    assert!(p.p_dagger.log_lower() >= -1.149489 * n as f64);
    assert!(p.p_ddagger.log_lower() >= -1.149489 * n as f64);

    let p = factor_partition(0.5, c(-3.0, 5.0)).unwrap();
    assert!(p.ddagger.len() + p.sharp.len() <= 2);
}

#[test]
fn partition_rejects_bad_points() {
    assert!(factor_partition(0.5, c(3.0, 5.0)).is_err());
    assert!(factor_partition(0.5, c(-0.1, 0.1)).is_err());
    assert!(factor_partition(0.5, c(-1e-11, 200.0)).is_err());
}

#[test]
fn sharp_examples() {
    let r = sharp_count_bound(0.8, c(-50.0, 70.0)).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.inputs.iter().find(|(k, _)| k == "n").unwrap().1, 5.0);
    let k = ProofConstants::new();
    assert!((k.mu1_upper(3) - MU1_0_AT_3).abs() < 1e-12);
    assert!((k.mu1_upper(3) - 2.7510).abs() < 1e-4);
}

#[test]
fn part1_checks() {
    let r = certify_part1(2).unwrap();
    assert!(r.pass);
    let v = r.quantity_value("exp(-pi^2/6) 18 q1").unwrap();
    assert!((v - 1.074_471_797_542_038).abs() < 1e-12);

    let r = certify_part1(3).unwrap();
    assert!(r.pass, "{r:?}");
    let head = r.quantity_value("exp(pi^2/6)/8").unwrap();
    assert!((head - 0.647_583_539_737_139_5).abs() < 1e-12);
    assert!((1.0 / (r.quantity_value("u").unwrap() - 1.0) - 0.106_822_352_288_494_36).abs() < 1e-12);
    for n in 3..=100 {
        let r = certify_part1(n).unwrap();
        assert!(r.inequality("(1-1/(n-1))^(n-1) >= 1/4").unwrap().pass, "n = {n}");
    }
    assert!(certify_part1(1).is_err());
}

#[test]
fn part2k_values() {
    let r = certify_part2_k(132.0, 3..=100).unwrap();
    assert!((r.quantity_value("K1").unwrap() - K1_132).abs() < 1e-12);
    assert!(r.inequality("K1 > 0").unwrap().pass);
    // The printed sign of K0 at n = 3 does not hold; the bound it feeds does.
    let k0 = r.inequality("K0(3) > 0").unwrap();
    assert!((k0.lhs - K0_3).abs() < 1e-12);
    assert!(!k0.pass && k0.checkpoint);
    assert!(!r.pass);
    assert!(r.conclusions_pass());
    for n in 3..=100 {
        assert!(r.inequality(&format!("K1*{n} + K0({n}) > -ln(b-1)")).unwrap().pass);
    }
}

#[test]
fn part2k_margins_grow_with_b() {
    let small = certify_part2_k(132.0, 3..=20).unwrap();
    let big = certify_part2_k(1e6, 3..=20).unwrap();
    for (a, b) in small.inequalities.iter().zip(&big.inequalities) {
        assert_eq!(a.label, b.label);
        if a.label.contains("ln(b-1)") || a.label.starts_with("K1") {
            assert!(b.margin > a.margin, "{}", a.label);
        }
    }
    assert!(certify_part2_k(100.0, 3..=5).is_err());
    assert!(certify_part2_k(132.0, 2..=5).is_err());
}

#[test]
fn part2l_values() {
    let r = certify_part2_l(132.0, 3..=100).unwrap();
    let l1 = r.quantity_value("L1").unwrap();
    let l0 = r.quantity_value("L0").unwrap();
    assert!((l1 - L1_132).abs() < 1e-12);
    assert!((l0 - L0_132).abs() < 1e-12);
    assert!(r.inequality("L1 > 0.3044").unwrap().pass);
    // Printed L0 and the −5.136 floor are off by about 4e-3.
    assert!(!r.inequality("|L0 + 6.0491| <= 1e-3").unwrap().pass);
    let at3 = r.inequality("L1*3 + L0 >= -5.136").unwrap();
    assert!((at3.lhs - (3.0 * L1_132 + L0_132)).abs() < 1e-12);
    assert!(!at3.pass && at3.checkpoint);
    assert!(r.inequality("L1*4 + L0 >= -5.136").unwrap().pass);
    let floor = -(132.0 * SQRT_2 - 1.0).ln();
    assert!((floor + 5.224).abs() < 1e-3);
    for n in 3..=100 {
        assert!(r.inequality(&format!("L1*{n} + L0 > -ln(b sqrt2 - 1)")).unwrap().pass);
    }
    assert!(!r.pass);
    assert!(r.conclusions_pass());
}

#[test]
fn factor_modulus_instance() {
    let m = factor_modulus_margin(200.0, 132.0, 0.75, 2);
    let qm = 0.5625;
    let oracle = (200.0 * qm - 10.0f64).powi(2) / 10.0 + (132.0f64 * 132.0 * qm * qm - 90.0) / 10.0;
    assert!((m - oracle).abs() < 1e-9 && m >= 0.0);
}

#[test]
fn small_q_chains() {
    let r = certify_small_q(132.0).unwrap();
    assert!(r.pass, "{r:?}");
    let t1 = r.quantity_value("b q1^1 - 1").unwrap();
    assert!((t1 - (132.0 * Q_TILDE_1 - 1.0)).abs() < 1e-12);
    assert!((t1 - 39.8209).abs() < 1e-4);
    assert!(r.quantity_value("chain a <= b").unwrap() > 12.8);
    assert!(r.quantity_value("0.9 b^2 q1^3").unwrap() > 463.0);
    assert!(r.quantity_value("chain a >= b").unwrap() > 8.8);
}

#[test]
fn sampled_lemmas_have_no_failures() {
    for lemma in SampledLemma::ALL {
        let r = sampled_dominance(lemma, 0, DEFAULT_SAMPLES).unwrap();
        assert!(r.pass, "{}: {r:?}", lemma.id());
        let again = sampled_dominance(lemma, 0, DEFAULT_SAMPLES).unwrap();
        assert_eq!(r, again);
    }
}

#[test]
fn selector_parsing_and_dispatch() {
    assert!("lemma8".parse::<LemmaSelector>().is_err());
    let all = certify(LemmaSelector::All, &CertifyParams::default()).unwrap();
    let ids: Vec<&str> = all.iter().map(|r| r.lemma_id.as_str()).collect();
    for id in ["part1", "lemma3", "lemma4", "lemma5", "lemma6", "lemma7", "lemma9", "part2K", "part2L", "smallq"] {
        assert!(ids.contains(&id), "{id}");
    }
    let failing: Vec<&str> = all.iter().filter(|r| !r.pass).map(|r| r.lemma_id.as_str()).collect();
    assert_eq!(failing, ["part2K", "part2L"]);
    assert!(all.iter().all(|r| r.conclusions_pass()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn partition_is_exact(q in 0.05f64..0.98, a in 0.01f64..400.0, b in 1.5f64..400.0) {
        let p = factor_partition(q, c(-a, b)).unwrap();
        let mut seen = vec![0u8; p.cutoff + 1];
        for m in [&p.tilde, &p.ddagger, &p.sharp, &p.dagger].into_iter().flatten() {
            seen[*m] += 1;
        }
        prop_assert_eq!(seen[0], 0);
        prop_assert!(seen[1..].iter().all(|&k| k == 1));
        for m in 1..=p.cutoff {
            let seg = p.segment_of(m);
            let list = match seg {
                Segment::Tilde => &p.tilde,
                Segment::Ddagger => &p.ddagger,
                Segment::Sharp => &p.sharp,
                Segment::Dagger => &p.dagger,
            };
            prop_assert!(list.contains(&m));
        }
        let total = p.total();
        let direct = (1..=p.cutoff).map(|m| (c(1.0, 0.0) + c(-a, b) * q.powi(m as i32)).norm().ln()).sum::<f64>();
        prop_assert!((total.log - direct).abs() <= total.err + 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn q_product_dominates_its_bound(n in 2u32..60, t in 0.0f64..1.0) {
        let lo = if n == 2 { 0.0 } else { 1.0 - 1.0 / (n - 1) as f64 };
        let hi = 1.0 - 1.0 / n as f64;
        let q = (lo + t * (hi - lo)).max(1e-6);
        prop_assert!(q_product_bound(n, &[q]).unwrap().pass);
    }
}
