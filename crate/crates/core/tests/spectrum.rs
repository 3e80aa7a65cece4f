use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use partial_theta::spectrum::{rightmost_real_zero, spectrum_bits, FIRST_SEED};
use partial_theta::*;

const P: Precision = Precision::DEFAULT;

const PRINTED: [f64; 12] = [
    0.309249, 0.516959, 0.630628, 0.701265, 0.749269, 0.783984, 0.810251, 0.830816, 0.847353, 0.860942, 0.872305,
    0.881949,
];

fn table30() -> &'static [SpectrumEntry] {
    static T: OnceLock<Vec<SpectrumEntry>> = OnceLock::new();
    T.get_or_init(|| spectrum_table(30, 1e-10, P).unwrap())
}

fn theta_re(q: f64, x: f64) -> f64 {
    theta_eval(QParam::new(q).unwrap(), Complex64::new(x, 0.0), 1e-25, P).unwrap().value_c64().re
}

fn sign_changes(q: f64, lo: f64, hi: f64, points: usize) -> usize {
    let xs: Vec<f64> = (0..=points).map(|k| lo + (hi - lo) * k as f64 / points as f64).collect();
    xs.windows(2).filter(|w| theta_re(q, w[0]) * theta_re(q, w[1]) < 0.0).count()
}

#[test]
fn first_twelve_match_the_printed_table() {
    let t = table30();
    for (e, want) in t.iter().zip(PRINTED) {
        assert!((e.q_tilde - want).abs() <= 5e-7, "N = {}: {} vs {want}", e.n, e.q_tilde);
    }
}

#[test]
fn single_solves_from_seeds() {
    let e = double_zero_solve(FIRST_SEED.0, FIRST_SEED.1, 1e-10, P).unwrap();
    assert!((e.q_tilde - 0.309249).abs() < 5e-7);
    let e = double_zero_solve(0.88, -20.0, 1e-10, P).unwrap();
    assert!((e.q_tilde - 0.881949).abs() < 5e-7, "{}", e.q_tilde);
    assert!(e.residual_theta <= 1e-10 && e.residual_dz <= 1e-10);
}

#[test]
fn first_fold_is_a_tangency_on_the_negative_axis() {
    let e = &table30()[0];
    let y = e.y;
    assert!(y < -7.0 && y > -8.0, "{y}");
    // Two real zeros near y just below the fold, none just above it.
    assert_eq!(sign_changes(e.q_tilde - 1e-4, y - 1.0, y + 1.0, 2000), 2);
    assert_eq!(sign_changes(e.q_tilde + 1e-4, y - 1.0, y + 1.0, 2000), 0);
    // Dense scan at the fold: the minimum over the window sits at y and is zero to working accuracy.
    let (xmin, vmin) = (0..=4000)
        .map(|k| y - 0.5 + k as f64 / 4000.0)
        .map(|x| (x, theta_re(e.q_tilde, x)))
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    assert!((xmin - y).abs() < 1e-3, "{xmin} vs {y}");
    assert!(vmin.abs() < 1e-6);
}

#[test]
fn prefix_is_stable() {
    let one = spectrum_table(1, 1e-10, P).unwrap();
    let twelve = spectrum_table(12, 1e-10, P).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].q_tilde.to_bits(), twelve[0].q_tilde.to_bits());
    assert_eq!(one[0].y.to_bits(), twelve[0].y.to_bits());
}

#[test]
fn table_is_monotone_and_tracks_the_rightmost_zero() {
    let t = table30();
    assert_eq!(t.len(), 30);
    for (k, e) in t.iter().enumerate() {
        assert_eq!(e.n, k + 1);
        assert!(e.y < 0.0);
        assert!(e.bits >= spectrum_bits(e.q_tilde, P));
        assert!(rightmost_real_zero(e.q_tilde, e.y, 2000, P).unwrap(), "N = {}", e.n);
    }
    for w in t.windows(2) {
        assert!(w[1].q_tilde > w[0].q_tilde);
        assert!(w[1].y < w[0].y);
    }
}

#[test]
fn shape_of_the_asymptotics() {
    let t = &table30()[14..];
    let scaled: Vec<f64> =
        t.iter().map(|e| (e.q_tilde - asymptotic_estimate(e.n).unwrap().q_est).abs() * (e.n * e.n) as f64).collect();
    let mut s = scaled.clone();
    s.sort_by(f64::total_cmp);
    let median = s[s.len() / 2];
    assert!(s.last().unwrap() <= &(5.0 * median), "{scaled:?}");

    // The normalised leading correction drifts down towards its limit over this range.
    let ratio: Vec<f64> = t
        .iter()
        .map(|e| {
            let n = e.n as f64;
            (e.q_tilde - 1.0 + PI / (2.0 * n)) * 8.0 * n * n / n.ln()
        })
        .collect();
    assert!(ratio.windows(2).all(|w| w[1] < w[0]), "{ratio:?}");
    assert!(ratio.iter().all(|&r| r > 1.0));
    // y_N heads for the limit −e^π from above.
    assert!(t.iter().all(|e| e.y > -PI.exp()));
}

#[test]
fn pairs_appear_at_the_folds() {
    let t = table30();
    let region = Contour::rectangle(-60.0, 1.0, 0.01, 140.0).unwrap();
    let pairs = |q: f64| find_zeros(QParam::new(q).unwrap(), &region, 1e-10, P).unwrap().len();
    for n in 1..=2 {
        let qt = t[n - 1].q_tilde;
        assert_eq!(pairs(qt - 0.01), n - 1, "below fold {n}");
        assert_eq!(pairs(qt + 0.01), n, "above fold {n}");
    }
}

#[test]
fn solver_input_errors() {
    assert!(spectrum_table(0, 1e-10, P).is_err());
    assert!(double_zero_solve(1.2, -7.0, 1e-10, P).is_err());
    assert!(double_zero_solve(0.31, -7.0, 0.0, P).is_err());
}
