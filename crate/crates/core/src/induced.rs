//! Induced `‖A‖_{p,q} = sup_{‖x‖_p ≤ 1} ‖Ax‖_q`.
//!
//! Exact closed forms where they exist (`p = 1`, `q = ∞`, `p = q = 2`),
//! vertex enumeration for `p = ∞` in low dimension, and a multi-start
//! ascent that returns a certified lower bound everywhere else.

use rayon::prelude::*;
use serde::Serialize;

use crate::lp::{lp_norm_unchecked, Exponent, LpSpace, PointSampler, Surface};
use crate::matrix::Matrix;
use crate::rng::SeededRng;
use crate::spectral::svd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Exact,
    Brute,
    LowerBound,
}

impl NormKind {
    /// True when the value is the norm itself rather than a lower bound.
    pub fn is_exact(self) -> bool {
        !matches!(self, NormKind::LowerBound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedNormResult {
    pub value: f64,
    pub kind: NormKind,
    /// Unit ℓ_p vector with `‖A · witness‖_q = value`.
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AscentBudget {
    pub restarts: usize,
    pub iterations: usize,
    pub tol: f64,
    pub seed: u64,
    /// Largest domain dimension for which `p = ∞` is solved by enumeration.
    pub enumeration_cutoff: usize,
}

impl Default for AscentBudget {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 500,
            tol: 1e-10,
            seed: 0,
            enumeration_cutoff: 20,
        }
    }
}

pub fn induced_norm(a: &Matrix, p: Exponent, q: Exponent, budget: &AscentBudget) -> InducedNormResult {
    if p.is(1.0) {
        return max_column_norm(a, q);
    }
    if q.is_infinite() {
        return max_row_dual_norm(a, p);
    }
    if p.is(2.0) && q.is(2.0) {
        let d = svd(a);
        return InducedNormResult {
            value: d.values[0],
            kind: NormKind::Exact,
            witness: d.right[0].clone(),
        };
    }
    if p.is_infinite() && a.cols() <= budget.enumeration_cutoff {
        return enumerate_sign_vertices(a, q);
    }
    induced_norm_ascent(a, p, q, budget)
}

/// `‖A‖_{1,q}` is the largest column ℓ_q norm.
fn max_column_norm(a: &Matrix, q: Exponent) -> InducedNormResult {
    let (best, value) = (0..a.cols())
        .map(|j| (j, lp_norm_unchecked(&a.column(j), q)))
        .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let mut witness = vec![0.0; a.cols()];
    witness[best] = 1.0;
    InducedNormResult {
        value,
        kind: NormKind::Exact,
        witness,
    }
}

/// `‖A‖_{p,∞}` is the largest row ℓ_{p*} norm; the witness is the Hölder
/// equality vector of that row.
fn max_row_dual_norm(a: &Matrix, p: Exponent) -> InducedNormResult {
    let dual = p.conjugate();
    let (best, value) = (0..a.rows())
        .map(|i| (i, lp_norm_unchecked(a.row(i), dual)))
        .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    InducedNormResult {
        value,
        kind: NormKind::Exact,
        witness: dual_direction(a.row(best), p),
    }
}

/// `argmax_{‖x‖_r = 1} ⟨z, x⟩`, the Hölder-equality direction. Sign ties go
/// to `+1`; index ties to the lowest index.
pub(crate) fn dual_direction(z: &[f64], r: Exponent) -> Vec<f64> {
    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let n = z.len();
    match r {
        Exponent::Infinity => z.iter().map(|&v| sign(v)).collect(),
        Exponent::Finite(1.0) => {
            let j = (0..n).fold(0, |best, j| if z[j].abs() > z[best].abs() { j } else { best });
            let mut x = vec![0.0; n];
            x[j] = sign(z[j]);
            x
        }
        Exponent::Finite(_) => {
            let scale = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if scale == 0.0 {
                let mut x = vec![0.0; n];
                x[0] = 1.0;
                return x;
            }
            let pow = r.conjugate().value() - 1.0;
            let mut x: Vec<f64> = z.iter().map(|&v| sign(v) * (v.abs() / scale).powf(pow)).collect();
            let norm = lp_norm_unchecked(&x, r);
            x.iter_mut().for_each(|v| *v /= norm);
            x
        }
    }
}

/// Exhaustive search over the vertices `{±1}^m` of the ℓ_∞ ball, walking
/// them in Gray-code order with `x` and `−x` identified.
pub fn enumerate_sign_vertices(a: &Matrix, q: Exponent) -> InducedNormResult {
    let (k, m) = (a.rows(), a.cols());
    assert!(m < 63, "vertex enumeration needs m < 63");
    let columns: Vec<Vec<f64>> = (0..m).map(|j| a.column(j)).collect();
    let mut x = vec![1.0; m];
    let mut y = a.apply(&x).expect("dimensions agree");
    let score = |y: &[f64]| -> f64 {
        match q {
            Exponent::Infinity => y.iter().fold(0.0, |acc, v| acc.max(v.abs())),
            Exponent::Finite(1.0) => y.iter().map(|v| v.abs()).sum(),
            Exponent::Finite(2.0) => y.iter().map(|v| v * v).sum(),
            Exponent::Finite(p) => y.iter().map(|v| v.abs().powf(p)).sum(),
        }
    };
    let mut best_score = score(&y);
    let mut best = x.clone();
    let free = m - 1;
    for g in 1u64..(1u64 << free) {
        let j = g.trailing_zeros() as usize;
        let step = -2.0 * x[j];
        x[j] = -x[j];
        for (yi, cj) in y.iter_mut().zip(&columns[j]) {
            *yi += step * cj;
        }
        let s = score(&y);
        if s > best_score {
            best_score = s;
            best.copy_from_slice(&x);
        }
    }
    debug_assert_eq!(y.len(), k);
    let value = lp_norm_unchecked(&a.apply(&best).expect("dimensions agree"), q);
    InducedNormResult {
        value,
        kind: NormKind::Brute,
        witness: best,
    }
}

/// Multi-start ascent of `‖Ax‖_q` over the unit ℓ_p sphere.
///
/// Each step linearizes the (convex) objective at `x` and jumps to the
/// maximizer of the linearization on the sphere, so the value never
/// decreases. The first start is the top right singular vector rescaled to
/// the ℓ_p sphere; the others are uniform sphere draws.
pub fn induced_norm_ascent(a: &Matrix, p: Exponent, q: Exponent, budget: &AscentBudget) -> InducedNormResult {
    let m = a.cols();
    let space = LpSpace { dim: m, p };
    let sampler = PointSampler::new(space, Surface::Sphere);
    let root = SeededRng::new(budget.seed);
    let top = svd(a).right[0].clone();

    let runs: Vec<(f64, Vec<f64>)> = (0..budget.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                let norm = lp_norm_unchecked(&top, p);
                top.iter().map(|v| v / norm).collect()
            } else {
                let mut gen = root.substream(r as u64).generator();
                let mut x = vec![0.0; m];
                sampler.draw(&mut gen, &mut x);
                x
            };
            ascend(a, p, q, start, budget)
        })
        .collect();

    let (value, witness) = runs
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, cur| if cur.0 > acc.0 { cur } else { acc });
    InducedNormResult {
        value,
        kind: NormKind::LowerBound,
        witness,
    }
}

fn ascend(a: &Matrix, p: Exponent, q: Exponent, mut x: Vec<f64>, budget: &AscentBudget) -> (f64, Vec<f64>) {
    let q_dual = q.conjugate();
    let mut y = a.apply(&x).expect("dimensions agree");
    let mut value = lp_norm_unchecked(&y, q);
    for _ in 0..budget.iterations {
        let g = dual_direction(&y, q_dual);
        let z = a.apply_transpose(&g).expect("dimensions agree");
        let candidate = dual_direction(&z, p);
        let cy = a.apply(&candidate).expect("dimensions agree");
        let cv = lp_norm_unchecked(&cy, q);
        if cv <= value {
            break;
        }
        let gain = cv - value;
        x = candidate;
        y = cy;
        value = cv;
        if gain <= budget.tol * value.max(1.0) {
            break;
        }
    }
    (value, x)
}
