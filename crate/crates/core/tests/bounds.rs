mod common;

use common::{gaussian, rng};
use rand::Rng;
use specbound_core::bounds::{
    contraction_constant, gaussian_err_bound, gaussian_linf_tail, gaussian_tv, kingkong_bound, linf_deflation,
    noise_design, tail_moment_bound, uap_bound, Covariance, GaussianPair, MomentFunction, TailKind,
};
use specbound_core::numerics::{std_normal_cdf, Grid1D};
use specbound_core::spectral::{spectrum, symmetric_eigen};
use specbound_core::{Exponent, Matrix};

fn random_pair(m: usize, g: &mut impl Rng) -> GaussianPair {
    let delta = (0..m).map(|_| g.random_range(-3.0..3.0)).collect();
    let var = (0..m).map(|_| g.random_range(0.1..4.0)).collect();
    GaussianPair::new(delta, Covariance::Diagonal(var)).unwrap()
}

fn mahalanobis(pair: &GaussianPair) -> f64 {
    match &pair.sigma {
        Covariance::Diagonal(v) => pair.delta.iter().zip(v).map(|(d, v)| d * d / v).sum::<f64>().sqrt(),
        Covariance::Full(_) => unreachable!(),
    }
}

#[test]
fn zero_budget_is_classical_bayes_error() {
    let mut g = rng(1);
    for _ in 0..100 {
        let pair = random_pair(g.random_range(1..10), &mut g);
        let want = 0.5 * (1.0 - gaussian_tv(mahalanobis(&pair)).unwrap());
        assert!((gaussian_err_bound(&pair, 0.0).unwrap() - want).abs() <= 1e-12);
    }
}

#[test]
fn bound_rises_to_one_half() {
    let mut g = rng(2);
    for _ in 0..100 {
        let pair = random_pair(g.random_range(1..10), &mut g);
        let top = pair.delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let mut last = 0.0;
        for k in 0..50 {
            let v = gaussian_err_bound(&pair, top * k as f64 / 49.0).unwrap();
            assert!(v >= last && (0.0..=0.5).contains(&v));
            last = v;
        }
        assert_eq!(gaussian_err_bound(&pair, top).unwrap(), 0.5);
    }
}

#[test]
fn full_covariance_envelope() {
    let mut g = rng(3);
    for _ in 0..50 {
        let m = g.random_range(1..6);
        let b = gaussian(m, m, &mut g);
        let sigma = b.transpose().matmul(&b).unwrap();
        let sigma = Matrix::from_rows(
            &(0..m)
                .map(|i| (0..m).map(|j| 0.5 * (sigma[(i, j)] + sigma[(j, i)]) + if i == j { 0.1 } else { 0.0 }).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let delta: Vec<f64> = (0..m).map(|_| g.random_range(-2.0..2.0)).collect();
        let pair = GaussianPair::new(delta, Covariance::Full(sigma)).unwrap();
        let eps = g.random_range(0.0..1.0);
        let d = linf_deflation(&pair, eps).unwrap();
        assert!(d.lower.unwrap() <= d.upper.unwrap() * (1.0 + 1e-9));
    }
}

#[test]
fn light_tail_gaussian_example() {
    let (m, sigma, d) = (10, 0.3, 0.2);
    let tail = gaussian_linf_tail(m, sigma);
    for k in 0..20 {
        let eps = d + k as f64 * 0.3;
        let got = tail_moment_bound(&TailKind::LightTail(&tail), eps, d).unwrap();
        let raw = 0.5 - 2.0 * m as f64 * (-(eps - d).powi(2) / (8.0 * sigma * sigma)).exp();
        assert!((got - raw.clamp(0.0, 0.5)).abs() < 1e-15);
    }
}

#[test]
fn evaluators_stay_in_range_and_are_monotone() {
    let kinds = [
        TailKind::Moment { m: MomentFunction::power(2.0).unwrap(), alpha: 0.7 },
        TailKind::Moment { m: MomentFunction::subgaussian(0.5).unwrap(), alpha: 0.7 },
        TailKind::Wasserstein { w: 0.8, p: 2.0 },
    ];
    for kind in &kinds {
        let mut last = 0.0;
        for k in 0..50 {
            let v = tail_moment_bound(kind, k as f64 * 0.2, 0.1).unwrap();
            assert!((0.0..=0.5).contains(&v) && v >= last);
            last = v;
        }
    }
}

#[test]
fn moment_inverses() {
    for m in [MomentFunction::power(3.0).unwrap(), MomentFunction::subgaussian(0.7).unwrap()] {
        for y in [0.0, 0.1, 1.0, 7.5] {
            assert!((m.eval(m.inverse(y).unwrap()) - y).abs() <= 1e-12 * y.max(1.0));
        }
        assert!(m.inverse(-1.0).is_err());
    }
}

#[test]
fn kingkong_with_gaussian_curve_matches_uap() {
    let theta_for = |c: f64| Grid1D::tabulate(0.0, 60.0, 600_001, |r| 2.0 * std_normal_cdf(r / (2.0 * c)) - 1.0).unwrap();
    let m = MomentFunction::power(2.0).unwrap();
    for c in [0.5, 1.0, 2.0] {
        let theta = theta_for(c);
        for t in [0.1, 0.5, 1.0] {
            for alpha in [0.2, 1.0] {
                let k = kingkong_bound(t, m, alpha, 0.0, &theta).unwrap();
                let u = uap_bound(t, m, alpha, c).unwrap();
                assert!((k - u).abs() <= 1e-6, "c={c} t={t} alpha={alpha}: {k} vs {u}");
            }
        }
    }
}

#[test]
fn kingkong_tends_to_one_half() {
    let theta = Grid1D::tabulate(0.0, 5.0, 101, |r| (r / 5.0).min(1.0)).unwrap();
    let m = MomentFunction::power(1.0).unwrap();
    let v = kingkong_bound(1e-9, m, 1e-12, 0.0, &theta).unwrap();
    assert!((v - 0.5).abs() < 1e-8);
}

fn random_psd(m: usize, g: &mut impl Rng) -> Matrix {
    let rank = g.random_range(1..=m);
    let b = gaussian(rank, m, g);
    let s = b.transpose().matmul(&b).unwrap();
    Matrix::from_rows(&(0..m).map(|i| (0..m).map(|j| 0.5 * (s[(i, j)] + s[(j, i)])).collect()).collect::<Vec<_>>())
        .unwrap()
}

/// `tr(A† B)` with the pseudo-inverse from an eigendecomposition.
fn trace_pinv_product(a: &Matrix, b: &Matrix) -> f64 {
    let eig = symmetric_eigen(a).unwrap();
    let cut = 1e-10 * eig.values[0].max(1e-300);
    eig.values
        .iter()
        .zip(&eig.vectors)
        .filter(|(l, _)| **l > cut)
        .map(|(l, v)| {
            let bv = b.apply(v).unwrap();
            v.iter().zip(&bv).map(|(x, y)| x * y).sum::<f64>() / l
        })
        .sum()
}

#[test]
fn noise_design_invariants() {
    let mut g = rng(4);
    for _ in 0..20 {
        let m = g.random_range(1..=12);
        let s0 = random_psd(m, &mut g);
        let sigma0_sq = g.random_range(0.2..3.0);
        let op = spectrum(&s0, 1e-12).spectral;
        for r in 1..=m {
            let d = match noise_design(&s0, r, sigma0_sq, 0.5, 0.3) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let st = &d.sigma_tilde;
            assert!((st.trace() - m as f64 * sigma0_sq).abs() <= 1e-9 * (m as f64 * sigma0_sq).max(1.0));
            assert!(spectrum(st, 1e-10).rank <= r);
            assert!((trace_pinv_product(st, &s0) - d.alpha_star).abs() <= 1e-8 * d.alpha_star.max(1.0));
            assert!(d.alpha_star <= (r * r) as f64 * op / (m as f64 * sigma0_sq) * (1.0 + 1e-12));
            assert!((0.0..=0.5).contains(&d.err_lower_bound));
        }
    }
}

#[test]
fn rank_budget_beyond_the_rank_of_the_base_covariance() {
    let mut g = rng(5);
    let b = gaussian(2, 20, &mut g);
    let s0 = b.transpose().matmul(&b).unwrap();
    let s0 = Matrix::from_rows(&(0..20).map(|i| (0..20).map(|j| 0.5 * (s0[(i, j)] + s0[(j, i)])).collect()).collect::<Vec<_>>())
        .unwrap();
    for r in [2, 5, 20] {
        let d = noise_design(&s0, r, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(spectrum(&d.sigma_tilde, 1e-10).rank, 2);
        assert!((trace_pinv_product(&d.sigma_tilde, &s0) - d.alpha_star).abs() <= 1e-10 * d.alpha_star);
    }
}

#[test]
fn contraction_monotonicity() {
    for p in [Exponent::TWO, Exponent::INF] {
        for m in [1, 3, 10] {
            let mut last = 0.0;
            for k in 0..=40 {
                let c = contraction_constant(m, p, k as f64 * 0.1, 1.0).unwrap();
                assert!((0.0..=1.0).contains(&c) && c >= last - 1e-14);
                last = c;
            }
            let mut last = 1.0;
            for k in 1..=40 {
                let c = contraction_constant(m, p, 1.0, k as f64 * 0.1).unwrap();
                assert!(c <= last + 1e-14);
                last = c;
            }
        }
    }
}
