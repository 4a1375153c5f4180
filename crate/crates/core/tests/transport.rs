mod common;

use common::rng;
use rand::Rng;
use specbound_core::transport::{
    attack_graph, discrete_tv, hopcroft_karp, ot_maxflow, strassen_enumerate, tv_eps_greedy, tv_eps_matching,
    AttackModel, EmpiricalSample,
};
use specbound_core::{Exponent, Matrix};

fn cloud(n: usize, m: usize, g: &mut impl Rng) -> Matrix {
    Matrix::new(n, m, (0..n * m).map(|_| g.random_range(0..4) as f64 * 0.5).collect()).unwrap()
}

fn weights(n: usize, g: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| g.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let drift: f64 = 1.0 - w.iter().sum::<f64>();
    w[0] += drift;
    w
}

/// Largest matching by trying every injective assignment of left vertices.
fn brute_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    fn go(i: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
        if i == adj.len() {
            return 0;
        }
        let mut best = go(i + 1, adj, used);
        for &j in &adj[i] {
            if !used[j] {
                used[j] = true;
                best = best.max(1 + go(i + 1, adj, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, adj, &mut vec![false; n_right])
}

#[test]
fn hopcroft_karp_is_maximum() {
    let mut g = rng(1);
    for _ in 0..500 {
        let (n1, n2) = (g.random_range(1..=8), g.random_range(1..=8));
        let density = g.random_range(0.0..1.0);
        let adj: Vec<Vec<usize>> = (0..n1)
            .map(|_| (0..n2).filter(|_| g.random_bool(density)).collect())
            .collect();
        let mates = hopcroft_karp(&adj, n2);
        let size = mates.iter().flatten().count();
        assert_eq!(size, brute_matching(&adj, n2));
        // a matching: distinct partners along existing edges
        let mut seen = vec![false; n2];
        for (i, j) in mates.iter().enumerate() {
            if let Some(j) = *j {
                assert!(adj[i].contains(&j));
                assert!(!std::mem::replace(&mut seen[j], true));
            }
        }
    }
}

#[test]
fn maxflow_meets_strassen_dual() {
    let mut g = rng(2);
    for _ in 0..500 {
        let (n1, n2, m) = (g.random_range(1..=10), g.random_range(1..=10), g.random_range(1..=3));
        let a = EmpiricalSample::weighted(cloud(n1, m, &mut g), weights(n1, &mut g)).unwrap();
        let b = EmpiricalSample::weighted(cloud(n2, m, &mut g), weights(n2, &mut g)).unwrap();
        let p = [Exponent::ONE, Exponent::TWO, Exponent::INF][g.random_range(0..3)];
        let model = AttackModel::metric(p, g.random_range(0.0..1.5)).unwrap();
        let flow = ot_maxflow(&a, &b, &model).unwrap();
        let dual = strassen_enumerate(&a, &b, &model).unwrap();
        assert!((flow.value - dual).abs() <= 1e-9, "{} vs {dual}", flow.value);
        // plan respects marginals and edges
        let adj = attack_graph(&a, &b, &model).unwrap();
        let mut out = vec![0.0; n1];
        let mut inn = vec![0.0; n2];
        for &(i, j, f) in &flow.plan {
            assert!(adj[i].contains(&j));
            out[i] += f;
            inn[j] += f;
        }
        assert!(out.iter().zip(a.weights()).all(|(o, w)| *o <= w + 1e-12));
        assert!(inn.iter().zip(b.weights()).all(|(o, w)| *o <= w + 1e-12));
    }
}

#[test]
fn uniform_matching_agrees_with_flow() {
    let mut g = rng(3);
    for _ in 0..300 {
        let n = g.random_range(1..=8);
        let a = EmpiricalSample::uniform(cloud(n, 2, &mut g));
        let b = EmpiricalSample::uniform(cloud(n, 2, &mut g));
        let model = AttackModel::metric(Exponent::TWO, g.random_range(0.0..1.0)).unwrap();
        let m = tv_eps_matching(&a, &b, &model).unwrap();
        let f = ot_maxflow(&a, &b, &model).unwrap();
        assert!((m.value - f.value).abs() <= 1e-9);
        assert!(tv_eps_greedy(&a, &b, &model).unwrap().value >= m.value);
    }
}

#[test]
fn value_decreases_with_budget() {
    let mut g = rng(4);
    for _ in 0..50 {
        let a = EmpiricalSample::weighted(cloud(6, 2, &mut g), weights(6, &mut g)).unwrap();
        let b = EmpiricalSample::weighted(cloud(7, 2, &mut g), weights(7, &mut g)).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let model = AttackModel::metric(Exponent::INF, k as f64 * 0.1).unwrap();
            let v = ot_maxflow(&a, &b, &model).unwrap().value;
            assert!(v <= last + 1e-12);
            last = v;
        }
    }
}

#[test]
fn zero_budget_is_total_variation() {
    let mut g = rng(5);
    for _ in 0..200 {
        let a = EmpiricalSample::weighted(cloud(6, 1, &mut g), weights(6, &mut g)).unwrap();
        let b = EmpiricalSample::weighted(cloud(5, 1, &mut g), weights(5, &mut g)).unwrap();
        let model = AttackModel::metric(Exponent::TWO, 0.0).unwrap();
        let tv = discrete_tv(&a, &b).unwrap();
        assert!((ot_maxflow(&a, &b, &model).unwrap().value - tv).abs() <= 1e-12);
    }
}

#[test]
fn enumeration_limit() {
    let a = EmpiricalSample::uniform(Matrix::zeros(21, 1));
    let model = AttackModel::metric(Exponent::TWO, 0.0).unwrap();
    assert!(strassen_enumerate(&a, &a, &model).is_err());
}
