use approx::assert_abs_diff_eq;
use rumorlab::asymptotics::{
    classify_zeros, f_eval, f_standard, gamma_lower, gamma_lower_regularized, locate_x_infinity, poisson_partial_mean,
    poisson_tail, y_infinity, ConfigFamily,
};
use rumorlab::InitialConfiguration;
use statrs::function::gamma::gamma_lr;

fn grid() -> impl Iterator<Item = f64> {
    (0..400).map(|i| 1e-6 + i as f64 * 0.06)
}

#[test]
fn regularized_gamma_matches_statrs() {
    for k in 1..=14 {
        for t in grid() {
            let ours = gamma_lower_regularized(k, t);
            let oracle = gamma_lr(k as f64, t);
            assert!((ours - oracle).abs() <= 1e-13 + 1e-12 * oracle, "k = {k}, t = {t}: {ours} vs {oracle}");
        }
    }
}

#[test]
fn gamma_recurrence() {
    // gamma(k + 1, t) = k gamma(k, t) - t^k e^{-t}
    for k in 1..=14 {
        for t in grid() {
            let lhs = gamma_lower(k + 1, t);
            let rhs = k as f64 * gamma_lower(k, t) - t.powi(k as i32) * (-t).exp();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "k = {k}, t = {t}");
        }
    }
}

fn poisson_pmf(r: usize, t: f64) -> f64 {
    // Computed in log space to stay independent of the library code path.
    let log_fact: f64 = (1..=r).map(|i| (i as f64).ln()).sum();
    (r as f64 * t.ln() - t - log_fact).exp()
}

#[test]
fn poisson_identities() {
    for k in 1..=10 {
        for t in [0.01, 0.3, 1.0, 2.5, 7.0, 15.0] {
            let head: f64 = (0..k).map(|r| poisson_pmf(r, t)).sum();
            assert_abs_diff_eq!(poisson_tail(k, t), 1.0 - head, epsilon = 1e-12);
            let mean_head: f64 = (0..=k).map(|r| r as f64 * poisson_pmf(r, t)).sum();
            assert_abs_diff_eq!(poisson_partial_mean(k, t), t - mean_head, epsilon = 1e-12);
        }
    }
}

#[test]
fn standard_forms_agree() {
    for k in 1..=10 {
        let init = InitialConfiguration::standard(k);
        for i in 1..=500 {
            let x = i as f64 / 500.0;
            let a = f_eval(x, &init).unwrap();
            let b = f_standard(x, k).unwrap();
            assert!((a - b).abs() <= 1e-12, "k = {k}, x = {x}: {a} vs {b}");
        }
    }
}

#[test]
fn elementary_forms() {
    // k = 1: 2(1 - x) + ln x; k = 2: 3(1 - x) + (2x + 1) ln x.
    let c1 = InitialConfiguration::standard(1);
    let c2 = InitialConfiguration::standard(2);
    for i in 1..100 {
        let x = i as f64 / 100.0;
        assert_abs_diff_eq!(f_eval(x, &c1).unwrap(), 2.0 * (1.0 - x) + x.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(f_eval(x, &c2).unwrap(), 3.0 * (1.0 - x) + (2.0 * x + 1.0) * x.ln(), epsilon = 1e-13);
    }
}

#[test]
fn golden_limits() {
    let x1 = locate_x_infinity(&InitialConfiguration::standard(1)).x_inf;
    assert_abs_diff_eq!(x1, 0.203188, epsilon = 1e-6);
    let c3 = InitialConfiguration::standard(3);
    let x3 = locate_x_infinity(&c3).x_inf;
    assert_abs_diff_eq!(x3, 0.0680169, epsilon = 1e-7);
    let (y, z) = y_infinity(&c3, x3);
    assert_abs_diff_eq!(y[0], 0.182829, epsilon = 1e-6);
    assert_abs_diff_eq!(y[1], 0.245723, epsilon = 1e-6);
    assert_abs_diff_eq!(z, 1.0 - x3 - y[0] - y[1], epsilon = 1e-15);
}

#[test]
fn standard_zero_count() {
    for k in 1..=8 {
        let z = classify_zeros(&InitialConfiguration::standard(k));
        assert_eq!(z.sign_changes, 1, "k = {k}");
        assert_eq!(z.family, ConfigFamily::Standard);
        assert_eq!(z.zeros.len(), 2, "k = {k}: {:?}", z.zeros);
        assert_eq!(*z.zeros.last().unwrap(), 1.0);
    }
}

#[test]
fn no_spreader_small_x0_has_single_zero() {
    for k in 1..=8 {
        let kf = k as f64;
        for x0 in [0.1, 0.4, kf / (kf + 1.0)] {
            let init = InitialConfiguration::no_aware(k, x0, 0.0).unwrap();
            let z = classify_zeros(&init);
            assert_eq!(z.family, ConfigFamily::NoAware { case: 1 });
            assert_eq!(z.proven_counts.as_deref(), Some(&[1][..]));
            assert_eq!(z.zeros, vec![x0], "k = {k}, x0 = {x0}");
        }
    }
}

#[test]
fn families_located_counts_within_proven_sets() {
    let mut checked = 0;
    for k in 1..=6 {
        for &x0 in &[0.3, 0.6, 0.8, 0.9, 0.97] {
            for &y0 in &[0.0, 0.01, 0.02, 0.03] {
                if x0 + y0 > 1.0 {
                    continue;
                }
                let init = InitialConfiguration::no_aware(k, x0, y0).unwrap();
                let z = classify_zeros(&init);
                let proven = z.proven_counts.clone().unwrap();
                assert!(proven.contains(&z.zeros.len()), "k = {k}, x0 = {x0}, y0 = {y0}: {:?}", z.zeros);
                assert!(z.zeros.iter().all(|&v| v > 0.0 && v <= x0));
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn three_zero_panel() {
    // k = 3, x0 = 0.95, y0 = 0.01: a small interior hump gives three zeros.
    let z = classify_zeros(&InitialConfiguration::no_aware(3, 0.95, 0.01).unwrap());
    assert_eq!(z.family, ConfigFamily::NoAware { case: 4 });
    assert_eq!(z.zeros.len(), 3, "{:?}", z.zeros);
    let z = classify_zeros(&InitialConfiguration::no_aware(3, 0.95, 0.02).unwrap());
    assert_eq!(z.zeros.len(), 1, "{:?}", z.zeros);
}

#[test]
fn single_hearing_without_spreaders_has_two_zeros() {
    // k = 1, y0 = 0: f(x) = 2 (x0 - x) + ln(x / x0). For x0 > 1/2 it is
    // positive just below x0, so there is one interior zero besides x0.
    for x0 in [0.55, 0.7, 0.9, 0.99] {
        let init = InitialConfiguration::no_aware(1, x0, 0.0).unwrap();
        let z = classify_zeros(&init);
        assert_eq!(z.family, ConfigFamily::NoAware { case: 2 });
        assert_eq!(z.sign_changes, 1);
        assert_eq!(z.proven_counts.as_deref(), Some(&[2][..]));
        assert_eq!(z.zeros.len(), 2, "{:?}", z.zeros);
    }
}
