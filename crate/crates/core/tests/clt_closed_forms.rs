mod common;

use approx::assert_abs_diff_eq;
use common::max_abs_diff;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rumorlab::clt::{
    analyze, delta_infinity, fundamental_matrix, fundamental_matrix_ode, lambda_infinity, min_eigenvalue, projection_b,
};
use rumorlab::fluid::closed_form;
use rumorlab::model::{diffusion, jacobian};
use rumorlab::{DMatrix, InitialConfiguration};

fn phi_k2(t: f64, s: f64) -> DMatrix<f64> {
    let d = s - t;
    let e = d.exp();
    DMatrix::from_row_slice(3, 3, &[e, 0.0, 0.0, -d * e, e, 0.0, 3.0 + (2.0 * d - 3.0) * e, 2.0 * (1.0 - e), 1.0])
}

fn phi_k3(t: f64, s: f64) -> DMatrix<f64> {
    let d = s - t;
    let e = d.exp();
    let corner = 4.0 - e * (s * s - (2.0 * t + 3.0) * s + t * t + 3.0 * t + 4.0);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            e,
            0.0,
            0.0,
            0.0,
            -e * d,
            e,
            0.0,
            0.0,
            e * d * d / 2.0,
            -e * d,
            e,
            0.0,
            corner,
            e * (2.0 * d - 3.0) + 3.0,
            2.0 * (1.0 - e),
            1.0,
        ],
    )
}

#[test]
fn fundamental_matrix_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let s: f64 = rng.random_range(0.0..3.0);
        let t = s + rng.random_range(0.0..3.0);
        let a2 = fundamental_matrix(2, t, s).unwrap();
        assert!(max_abs_diff(&a2, &phi_k2(t, s)) < 1e-9);
        assert!(max_abs_diff(&fundamental_matrix_ode(2, t, s, 2000).unwrap(), &phi_k2(t, s)) < 1e-9);
        let a3 = fundamental_matrix(3, t, s).unwrap();
        assert!(max_abs_diff(&a3, &phi_k3(t, s)) < 1e-9);
        assert!(max_abs_diff(&fundamental_matrix_ode(3, t, s, 2000).unwrap(), &phi_k3(t, s)) < 1e-9);
    }
}

#[test]
fn semigroup_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 1..=6 {
        for _ in 0..20 {
            let mut v = [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)];
            v.sort_by(f64::total_cmp);
            let [s, u, t] = v;
            let lhs = fundamental_matrix(k, t, s).unwrap();
            let rhs = fundamental_matrix(k, t, u).unwrap() * fundamental_matrix(k, u, s).unwrap();
            assert!(max_abs_diff(&lhs, &rhs) < 1e-9);
        }
    }
}

#[test]
fn k2_lambda_closed_forms() {
    let init = InitialConfiguration::standard(2);
    let r = analyze(&init).unwrap();
    let (x, y) = (r.x_inf, r.y_inf[0]);
    let l = &r.lambda_inf;
    assert_abs_diff_eq!(l[(0, 0)], x * (1.0 - x), epsilon = 1e-8);
    assert_abs_diff_eq!(l[(0, 1)], -x * y, epsilon = 1e-8);
    assert_abs_diff_eq!(l[(1, 1)], y * (1.0 - y), epsilon = 1e-8);
    let l33 = (-9.0 * x.powi(3) + (9.0 - 12.0 * y) * x * x + 2.0 * (1.0 - 2.0 * y) * y * x - 4.0 * y * y + y) / x;
    assert_abs_diff_eq!(l[(2, 2)], l33, epsilon = 1e-8);
    assert!(l[(0, 2)].abs() <= 1e-8);
    assert!(l[(1, 2)].abs() <= 1e-8);
    // The two vanishing entries are multiples of y(tau) written in (x, y_1).
    assert!((3.0 * x * x + (2.0 * y - 3.0) * x + y).abs() < 1e-9);
    // Evaluated at the rounded limits.
    assert_abs_diff_eq!(l[(0, 0)], 0.102993, epsilon = 1e-6);
    assert_abs_diff_eq!(l[(0, 1)], -0.0292116, epsilon = 1e-6);
}

#[test]
fn k2_sigma_closed_forms() {
    let r = analyze(&InitialConfiguration::standard(2)).unwrap();
    let (x, y) = (r.x_inf, r.y_inf[0]);
    let den = (x + 2.0 * y - 1.0).powi(2);
    let s11 = x * (-4.0 * x.powi(3) + x * (3.0 - 4.0 * y) + 4.0 * y * y - 5.0 * y + 1.0) / den;
    let s12 = (6.0 * x.powi(4) - 3.0 * x.powi(3) + x * x * (4.0 * y - 3.0) + x * (5.0 - 6.0 * y) * y - y * y) / den;
    let s22 = (-9.0 * x.powi(5) + 9.0 * x.powi(4) - 3.0 * x.powi(3) * y + x * x * y * (9.0 * y - 7.0)) / (x * den)
        + (x * y * (y + 1.0) - y.powi(3)) / (x * den);
    assert_abs_diff_eq!(r.sigma[(0, 0)], s11, epsilon = 1e-8);
    assert_abs_diff_eq!(r.sigma[(0, 1)], s12, epsilon = 1e-8);
    assert_abs_diff_eq!(r.sigma[(1, 0)], s12, epsilon = 1e-8);
    assert_abs_diff_eq!(r.sigma[(1, 1)], s22, epsilon = 1e-8);
    assert_abs_diff_eq!(r.delta_inf, 2.0 * y + x - 1.0, epsilon = 1e-12);
    let b = projection_b(&InitialConfiguration::standard(2)).unwrap();
    assert_abs_diff_eq!(b[(0, 2)], x / r.delta_inf, epsilon = 1e-12);
    assert_abs_diff_eq!(b[(1, 2)], (y - x) / r.delta_inf, epsilon = 1e-12);
}

#[test]
fn k3_matrices() {
    let init = InitialConfiguration::standard(3);
    let r = analyze(&init).unwrap();
    let lambda = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0633906, -0.0124355, -0.0167133, 0.0, -0.0124355, 0.149403, -0.0449253, 0.0, -0.0167133, -0.0449253,
            0.185343, 0.0, 0.0, 0.0, 0.0, 0.692721,
        ],
    );
    assert!(max_abs_diff(&r.lambda_inf, &lambda) < 1e-6);
    let sigma = DMatrix::from_row_slice(
        3,
        3,
        &[0.111645, 0.0690173, 0.0279058, 0.0690173, 0.286895, 0.0303917, 0.0279058, 0.0303917, 0.226601],
    );
    assert!(max_abs_diff(&r.sigma, &sigma) < 1e-5);
    let (x, y1, y2) = (r.x_inf, r.y_inf[0], r.y_inf[1]);
    assert_abs_diff_eq!(r.delta_inf, 2.0 * y2 + y1 + x - 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.delta_inf, -0.257709, epsilon = 1e-6);
    for (i, v) in [-0.263929, -0.445513, -0.244048].into_iter().enumerate() {
        assert_abs_diff_eq!(r.b_matrix[(i, 3)], v, epsilon = 1e-6);
    }
    assert_abs_diff_eq!(delta_infinity(&init).unwrap(), r.delta_inf, epsilon = 0.0);
}

/// RK4 on `L' = J L + L J^T + G(r(t))`, `L(0) = 0`.
fn lyapunov_ode(init: &InitialConfiguration, tau: f64, steps: usize) -> DMatrix<f64> {
    let j = jacobian(init.k());
    let rhs = |t: f64, l: &DMatrix<f64>| &j * l + l * j.transpose() + diffusion(&closed_form(t, init));
    let h = tau / steps as f64;
    let dim = init.k() + 1;
    let mut l = DMatrix::zeros(dim, dim);
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, &l);
        let k2 = rhs(t + h / 2.0, &(&l + &k1 * (h / 2.0)));
        let k3 = rhs(t + h / 2.0, &(&l + &k2 * (h / 2.0)));
        let k4 = rhs(t + h, &(&l + &k3 * h));
        l += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    l
}

#[test]
fn lambda_matches_lyapunov_equation() {
    let cfgs = [
        InitialConfiguration::standard(1),
        InitialConfiguration::standard(2),
        InitialConfiguration::standard(4),
        InitialConfiguration::new(0.8, vec![0.05, 0.03], 0.04).unwrap(),
    ];
    for c in &cfgs {
        let r = analyze(c).unwrap();
        let ode = lyapunov_ode(c, r.tau_inf, 20_000);
        assert!(max_abs_diff(&r.lambda_inf, &ode) < 1e-8, "k = {}", c.k());
        assert!(max_abs_diff(&lambda_infinity(c).unwrap(), &r.lambda_inf) == 0.0);
    }
}

#[test]
fn outputs_symmetric_psd() {
    let cfgs = [
        InitialConfiguration::standard(6),
        InitialConfiguration::no_aware(3, 0.95, 0.02).unwrap(),
        InitialConfiguration::new(0.6, vec![0.1, 0.1, 0.05], 0.1).unwrap(),
    ];
    for c in &cfgs {
        let r = analyze(c).unwrap();
        assert!(max_abs_diff(&r.sigma, &r.sigma.transpose()) == 0.0);
        assert!(min_eigenvalue(&r.lambda_inf) >= -1e-9);
        assert!(min_eigenvalue(&r.sigma) >= -1e-9);
        for i in 0..c.k() {
            assert_eq!(r.b_matrix.row(i).iter().take(c.k()).filter(|&&v| v != 0.0).count(), 1);
            assert_eq!(r.b_matrix[(i, i)], 1.0);
        }
    }
}
