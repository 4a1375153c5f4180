//! ℓ_p geometry: exponents, norms, norm-equivalence constants, uniform
//! sampling on ℓ_p spheres and balls, and the sphere coordinate variance.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{domain, invalid, Error, Result};
use crate::matrix::Matrix;
use crate::numerics::log_gamma_unchecked;
use crate::rng::{batch_count, SeededRng, BATCH_SIZE};

/// An exponent `p ∈ [1, ∞]`, with infinity kept as its own variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);
    pub const INF: Exponent = Exponent::Infinity;

    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(domain(format!("exponent must lie in [1, inf], got {p}")))
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// Hölder conjugate `p*` with `1/p + 1/p* = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::ONE,
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn is(self, p: f64) -> bool {
        matches!(self, Exponent::Finite(v) if v == p)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| invalid(format!("cannot parse exponent {s:?}")))?;
                Exponent::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

/// `(ℝ^dim, ℓ_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpSpace {
    pub dim: usize,
    pub p: Exponent,
}

impl LpSpace {
    pub fn new(dim: usize, p: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { dim, p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Sphere,
    Ball,
}

/// `θ_{p,q} = (1/p − 1/q)_+`.
pub fn theta_exponent(p: Exponent, q: Exponent) -> f64 {
    (p.recip() - q.recip()).max(0.0)
}

/// ℓ_p norm of a nonempty vector.
pub fn lp_norm(x: &[f64], p: Exponent) -> Result<f64> {
    if x.is_empty() {
        return Err(invalid("norm of an empty vector"));
    }
    Ok(lp_norm_unchecked(x, p))
}

pub(crate) fn lp_norm_unchecked(x: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => x.iter().fold(0.0, |acc, v| acc.max(v.abs())),
        Exponent::Finite(1.0) => x.iter().map(|v| v.abs()).sum(),
        Exponent::Finite(2.0) => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Exponent::Finite(p) => {
            let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if scale == 0.0 || !scale.is_finite() {
                return scale;
            }
            scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// Both sides of the finite-dimensional norm equivalence
/// `d^{−θ_{p,q}} ‖x‖_p ≤ ‖x‖_q ≤ d^{θ_{q,p}} ‖x‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEquivalence {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl NormEquivalence {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.value.max(self.upper).max(f64::MIN_POSITIVE);
        self.lower <= self.value + slack && self.value <= self.upper + slack
    }
}

pub fn norm_equiv_bounds(x: &[f64], p: Exponent, q: Exponent) -> Result<NormEquivalence> {
    let norm_p = lp_norm(x, p)?;
    let d = x.len() as f64;
    Ok(NormEquivalence {
        lower: d.powf(-theta_exponent(p, q)) * norm_p,
        value: lp_norm_unchecked(x, q),
        upper: d.powf(theta_exponent(q, p)) * norm_p,
    })
}

/// Coordinate variance of the uniform distribution on `S_p^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereVariance {
    /// Gamma-ratio value; for `p = ∞` the face-sampler value `(m+2)/(3m)`.
    pub exact: f64,
    /// Large-`m` form `p^{2/p} Γ(3/p)/Γ(1/p) m^{−2/p}` (1/3 at `p = ∞`).
    pub asymptotic: f64,
    /// Case-split upper bound: `2m^{−2/p}` on `[1,2)`, `m^{−2/p}` on `[2,∞)`, 1/3 at ∞.
    pub bound: f64,
}

/// `Γ(a)/Γ(b)` for `a > b > 0`; a finite product when `a − b` is a small
/// integer, so `p ∈ {1, 2}` give exact rationals.
fn gamma_ratio(a: f64, b: f64) -> f64 {
    let k = a - b;
    if k == k.round() && (1.0..=8.0).contains(&k) {
        return (0..k as usize).map(|j| b + j as f64).product();
    }
    (log_gamma_unchecked(a) - log_gamma_unchecked(b)).exp()
}

pub fn sigma2(space: LpSpace) -> SphereVariance {
    let m = space.dim as f64;
    match space.p {
        Exponent::Infinity => SphereVariance {
            exact: (m + 2.0) / (3.0 * m),
            asymptotic: 1.0 / 3.0,
            bound: 1.0 / 3.0,
        },
        Exponent::Finite(p) => {
            let shape = gamma_ratio(3.0 / p, 1.0 / p);
            let exact = shape / gamma_ratio((m + 2.0) / p, m / p);
            let asymptotic = p.powf(2.0 / p) * shape * m.powf(-2.0 / p);
            let bound = if p < 2.0 { 2.0 } else { 1.0 } * m.powf(-2.0 / p);
            SphereVariance {
                exact,
                asymptotic,
                bound,
            }
        }
    }
}

/// Per-point sampler. Holds the distribution objects so they are built once
/// per batch rather than once per draw.
pub(crate) struct PointSampler {
    space: LpSpace,
    surface: Surface,
    gamma: Option<Gamma<f64>>,
}

impl PointSampler {
    pub(crate) fn new(space: LpSpace, surface: Surface) -> Self {
        let gamma = match space.p {
            Exponent::Finite(p) if p != 1.0 && p != 2.0 => {
                Some(Gamma::new(1.0 / p, 1.0).expect("shape 1/p is positive"))
            }
            _ => None,
        };
        Self {
            space,
            surface,
            gamma,
        }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let m = self.space.dim;
        debug_assert_eq!(out.len(), m);
        match self.space.p {
            Exponent::Infinity => {
                for v in out.iter_mut() {
                    *v = rng.random_range(-1.0..=1.0);
                }
                if self.surface == Surface::Sphere {
                    let face = rng.random_range(0..m);
                    out[face] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
            }
            Exponent::Finite(p) => {
                // generalized normal coordinates ∝ exp(-|t|^p), then project radially
                loop {
                    for v in out.iter_mut() {
                        *v = if p == 2.0 {
                            rng.sample(StandardNormal)
                        } else {
                            let magnitude = if p == 1.0 {
                                rng.sample::<f64, _>(Exp1)
                            } else {
                                let g = self.gamma.as_ref().expect("gamma sampler").sample(rng);
                                g.powf(1.0 / p)
                            };
                            if rng.random::<bool>() {
                                magnitude
                            } else {
                                -magnitude
                            }
                        };
                    }
                    let norm = lp_norm_unchecked(out, self.space.p);
                    if norm > 0.0 && norm.is_finite() {
                        let radius = match self.surface {
                            Surface::Sphere => 1.0,
                            Surface::Ball => rng.random::<f64>().powf(1.0 / m as f64),
                        };
                        for v in out.iter_mut() {
                            *v *= radius / norm;
                        }
                        break;
                    }
                }
            }
        }
    }
}

/// Runs `f` over consecutive batches of uniform draws and returns the batch
/// results in batch order. Batch `b` holds rows `b*BATCH_SIZE ..`, drawn from
/// `rng.batch(b)`.
pub(crate) fn map_sample_batches<T, F>(
    space: LpSpace,
    surface: Surface,
    n: usize,
    rng: SeededRng,
    f: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64], usize) -> T + Sync,
{
    let m = space.dim;
    let sampler = PointSampler::new(space, surface);
    (0..batch_count(n))
        .into_par_iter()
        .map(|b| {
            let rows = BATCH_SIZE.min(n - b * BATCH_SIZE);
            let mut gen = rng.batch(b as u64);
            let mut buf = vec![0.0; rows * m];
            for row in buf.chunks_exact_mut(m) {
                sampler.draw(&mut gen, row);
            }
            f(&buf, rows)
        })
        .collect()
}

/// `n` i.i.d. uniform points on the unit ℓ_p sphere or ball, one per row.
pub fn sample_lp(space: LpSpace, surface: Surface, n: usize, rng: SeededRng) -> Result<Matrix> {
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let chunks = map_sample_batches(space, surface, n, rng, |buf, _| buf.to_vec());
    Matrix::new(n, space.dim, chunks.concat())
}
