mod common;

use common::{gaussian, rng};
use rand::Rng;
use specbound_core::and_analysis::{
    and_estimate, and_estimates_multi, euclidean_and_certificate, ratio_certificate, spectum_certificate, Verdict,
};
use specbound_core::fluctuation::{
    eval_map, fluctuation_certificate, jacobian_fd, Activation, FluctuationOptions, Layer, VectorMap,
    DEFAULT_FD_STEP,
};
use specbound_core::induced::{induced_norm, AscentBudget};
use specbound_core::lp::{lp_norm, sample_lp};
use specbound_core::{Exponent, LpSpace, Matrix, SeededRng, Surface};

fn e(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

const N: usize = 100_000;

#[test]
fn identity_and_zero_maps() {
    let est = and_estimate(&Matrix::identity(5), e(2.0), e(2.0), 1000, SeededRng::new(1)).unwrap();
    assert!((est.mean - 1.0).abs() < 1e-12);
    assert!(est.stderr < 1e-12);
    let est = and_estimate(&Matrix::zeros(3, 5), e(1.5), e(3.0), 1000, SeededRng::new(1)).unwrap();
    assert_eq!(est.mean, 0.0);
}

#[test]
fn coordinate_projection_on_the_circle() {
    // E|u₁| = 2/π for u uniform on the circle
    let est = and_estimate(&Matrix::diag(&[1.0, 0.0]), e(2.0), e(2.0), N, SeededRng::new(7)).unwrap();
    assert!((est.mean - 2.0 / std::f64::consts::PI).abs() <= 4.0 * est.stderr);
}

#[test]
fn estimates_are_seed_deterministic() {
    let a = gaussian(4, 9, &mut rng(1));
    let x = and_estimate(&a, e(1.5), e(3.0), 10_000, SeededRng::new(3)).unwrap();
    let y = and_estimate(&a, e(1.5), e(3.0), 10_000, SeededRng::new(3)).unwrap();
    assert_eq!(x, y);
    let multi = and_estimates_multi(&a, e(1.5), &[e(1.0), e(3.0)], 10_000, SeededRng::new(3)).unwrap();
    assert_eq!(multi[1], x);
}

#[test]
fn row_vector_has_jensen_gap() {
    let a = Matrix::from_rows(&[vec![1.0; 4]]).unwrap();
    let c = spectum_certificate(&a, e(2.0), e(2.0), N, SeededRng::new(2)).unwrap();
    assert!((c.bound - 1.0).abs() < 1e-15);
    assert!(c.estimate < 1.0);
    assert_eq!(c.verdict, Verdict::Holds);
}

#[test]
fn wide_gaussian_l1_to_linf() {
    let a = gaussian(8, 32, &mut rng(3));
    let c = spectum_certificate(&a, e(1.0), Exponent::INF, N, SeededRng::new(3)).unwrap();
    assert!(c.verdict.passes(), "{c:?}");
}

#[test]
fn samples_never_exceed_the_induced_norm() {
    let mut g = rng(4);
    for (p, q) in [(e(1.0), e(2.0)), (e(2.0), Exponent::INF), (Exponent::INF, e(1.0)), (e(2.0), e(2.0))] {
        let a = gaussian(g.random_range(1..6), g.random_range(1..8), &mut g);
        let norm = induced_norm(&a, p, q, &AscentBudget::default());
        assert!(norm.kind.is_exact());
        let s = sample_lp(LpSpace::new(a.cols(), p).unwrap(), Surface::Sphere, 5000, SeededRng::new(4)).unwrap();
        for r in 0..s.rows() {
            let v = lp_norm(&a.apply(s.row(r)).unwrap(), q).unwrap();
            assert!(v <= norm.value + 1e-8);
        }
    }
}

#[test]
fn ratio_for_tall_euclidean_case() {
    let a = gaussian(10, 100, &mut rng(5));
    let r = ratio_certificate(&a, e(2.0), e(2.0), N, SeededRng::new(5)).unwrap();
    assert!(r.corrected.verdict.passes(), "{r:?}");
    assert_eq!(r.corrected_bound, r.paper_bound);
    let s = r.spectral / r.frobenius;
    assert!((r.corrected_bound - 10.0 * s).abs() < 1e-12);
}

#[test]
fn identity_ratio_is_tight() {
    let r = ratio_certificate(&Matrix::identity(7), e(2.0), e(2.0), 1000, SeededRng::new(6)).unwrap();
    assert!((r.ratio_estimate - 1.0).abs() < 1e-12);
    assert!((r.corrected_bound - 1.0).abs() < 1e-12);
    assert_eq!(r.corrected.verdict, Verdict::Holds);
}

#[test]
fn euclidean_warm_up_bound() {
    let mut g = rng(7);
    for _ in 0..10 {
        let a = gaussian(g.random_range(1..20), g.random_range(1..20), &mut g);
        let c = euclidean_and_certificate(&a, 20_000, SeededRng::new(8)).unwrap();
        assert!(c.verdict.passes(), "{c:?}");
    }
}

#[test]
fn lower_bound_numerators_are_never_violations() {
    let a = gaussian(6, 30, &mut rng(9));
    let r = ratio_certificate(&a, e(1.5), e(3.0), 20_000, SeededRng::new(9)).unwrap();
    assert!(r.numerator_lower_bound);
    assert_ne!(r.corrected.verdict, Verdict::Violated);
}

fn tanh_net(sizes: &[usize], g: &mut impl Rng) -> VectorMap {
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let scale = 1.0 / (w[0] as f64).sqrt();
            let weights = gaussian(w[1], w[0], g).scale(scale);
            let bias = (0..w[1]).map(|_| g.random_range(-0.5..0.5)).collect();
            let act = if i + 2 == sizes.len() { Activation::Identity } else { Activation::Tanh };
            Layer::new(weights, bias, act).unwrap()
        })
        .collect();
    VectorMap::new(layers).unwrap()
}

/// Chain rule through the layers.
fn analytic_jacobian(h: &VectorMap, x: &[f64]) -> Matrix {
    let mut z = x.to_vec();
    let mut jac = Matrix::identity(x.len());
    for layer in h.layers() {
        let mut pre = layer.weights.apply(&z).unwrap();
        for (v, b) in pre.iter_mut().zip(&layer.bias) {
            *v += b;
        }
        let deriv: Vec<f64> = pre
            .iter()
            .map(|&v| match layer.activation {
                Activation::Identity => 1.0,
                Activation::Tanh => 1.0 - v.tanh().powi(2),
                Activation::Relu => f64::from(v > 0.0),
            })
            .collect();
        let d = Matrix::diag(&deriv);
        jac = d.matmul(&layer.weights.matmul(&jac).unwrap()).unwrap();
        z = eval_map(&VectorMap::new(vec![layer.clone()]).unwrap(), &z).unwrap();
    }
    jac
}

#[test]
fn finite_differences_match_chain_rule() {
    let mut g = rng(10);
    let h = tanh_net(&[12, 8, 5], &mut g);
    let x: Vec<f64> = (0..12).map(|_| g.random_range(-2.0..2.0)).collect();
    let fd = jacobian_fd(&h, &x, DEFAULT_FD_STEP).unwrap();
    let exact = analytic_jacobian(&h, &x);
    let scale = exact.max_abs();
    for i in 0..fd.rows() {
        for j in 0..fd.cols() {
            assert!((fd[(i, j)] - exact[(i, j)]).abs() <= 1e-5 * scale.max(exact[(i, j)].abs()));
        }
    }
}

#[test]
fn affine_maps_are_reproduced() {
    let mut g = rng(11);
    let a = gaussian(3, 4, &mut g);
    let b = vec![0.5, -1.0, 2.0];
    let h = VectorMap::new(vec![Layer::affine(a.clone(), b.clone()).unwrap()]).unwrap();
    let x = [1.0, 2.0, -3.0, 0.25];
    let y = eval_map(&h, &x).unwrap();
    let want = a.apply(&x).unwrap();
    for i in 0..3 {
        assert!((y[i] - want[i] - b[i]).abs() < 1e-12);
    }
    let j = jacobian_fd(&h, &x, DEFAULT_FD_STEP).unwrap();
    for i in 0..3 {
        for c in 0..4 {
            assert!((j[(i, c)] - a[(i, c)]).abs() < 1e-8);
        }
    }
}

#[test]
fn tanh_saturates() {
    let h = VectorMap::new(vec![Layer::new(Matrix::identity(2), vec![0.0; 2], Activation::Tanh).unwrap()]).unwrap();
    let y = eval_map(&h, &[50.0, -50.0]).unwrap();
    assert!(y[0] <= 1.0 && y[0] > 1.0 - 1e-12);
    assert!(y[1] >= -1.0 && y[1] < -1.0 + 1e-12);
}

#[test]
fn affine_probe_is_scale_free_and_matches_the_linear_ratio() {
    let mut g = rng(12);
    let a = gaussian(5, 8, &mut g);
    let h = VectorMap::new(vec![Layer::affine(a.clone(), vec![1.0; 5]).unwrap()]).unwrap();
    let x = vec![0.3; 8];
    let run = |eps: f64| {
        let opts = FluctuationOptions { eps_probe: eps, ..Default::default() };
        fluctuation_certificate(&h, &x, e(1.5), e(2.0), 50_000, &opts, SeededRng::new(12)).unwrap()
    };
    let (big, small) = (run(1e-2), run(1e-5));
    let combined = (big.delta_avg_stderr.powi(2) + small.delta_avg_stderr.powi(2)).sqrt();
    assert!((big.delta_avg - small.delta_avg).abs() <= 4.0 * combined);

    let lin = ratio_certificate(&a, e(1.5), e(2.0), 50_000, SeededRng::new(12)).unwrap();
    assert!((big.delta_max - lin.induced.value).abs() <= 1e-6 * lin.induced.value);
    assert!((big.ratio - lin.ratio_estimate).abs() <= 4.0 * (big.ratio_stderr + 1e-9));
}

#[test]
fn identity_map_is_tight() {
    let h = VectorMap::linear(Matrix::identity(6));
    let r = fluctuation_certificate(&h, &[0.1; 6], e(2.0), e(2.0), 1000, &Default::default(), SeededRng::new(1))
        .unwrap();
    assert!((r.ratio - 1.0).abs() < 1e-6);
    assert!((r.corrected_bound - 1.0).abs() < 1e-6);
}

#[test]
fn tanh_network_certificate() {
    let mut g = rng(13);
    let h = tanh_net(&[64, 32, 10], &mut g);
    let x: Vec<f64> = (0..64).map(|_| g.random_range(-1.0..1.0)).collect();
    let r = fluctuation_certificate(&h, &x, e(2.0), e(2.0), N, &Default::default(), SeededRng::new(13)).unwrap();
    let want = 8.0 * r.jacobian_spectral / r.jacobian_frobenius;
    assert!((r.corrected_bound - want).abs() < 1e-12);
    assert!(r.ratio >= want - 4.0 * r.ratio_stderr, "{r:?}");
    assert!(r.delta_max >= r.delta_avg - 4.0 * r.delta_avg_stderr);
    assert!(r.corrected_bound >= r.rank_bound && r.rank_bound >= r.dimension_bound);
}

#[test]
fn ball_probe_mode() {
    let a = gaussian(3, 4, &mut rng(14));
    let h = VectorMap::linear(a);
    let opts = FluctuationOptions { surface: Surface::Ball, ..Default::default() };
    let ball = fluctuation_certificate(&h, &[0.0; 4], e(2.0), e(2.0), 50_000, &opts, SeededRng::new(2)).unwrap();
    let sphere =
        fluctuation_certificate(&h, &[0.0; 4], e(2.0), e(2.0), 50_000, &Default::default(), SeededRng::new(2))
            .unwrap();
    // E‖u‖ over the ball is m/(m+1) of the sphere value
    let want = sphere.delta_avg * 4.0 / 5.0;
    assert!((ball.delta_avg - want).abs() <= 4.0 * (ball.delta_avg_stderr + sphere.delta_avg_stderr));
}
