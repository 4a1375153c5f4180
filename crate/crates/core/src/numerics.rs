//! Special functions and 1-D geometry used by the bound evaluators.
//!
//! Everything here is a pure function of its arguments.

use crate::error::{domain, invalid, Result};
use serde::Serialize;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the gamma function for `a > 0`.
///
/// Lanczos approximation (g = 7, nine terms) for `a >= 0.5`, reflection below.
pub fn log_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("log_gamma requires a finite a > 0, got {a}")));
    }
    Ok(log_gamma_unchecked(a))
}

pub(crate) fn log_gamma_unchecked(a: f64) -> f64 {
    if a < 0.5 {
        // Γ(a)Γ(1-a) = π / sin(πa)
        let s = (std::f64::consts::PI * a).sin();
        return (std::f64::consts::PI / s).ln() - log_gamma_unchecked(1.0 - a);
    }
    let z = a - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// Standard normal CDF, evaluated as `erfc(-x/√2)/2` so that the lower tail
/// keeps full relative precision.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("reg_inc_beta requires 0 <= x <= 1, got {x}")));
    }
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!("reg_inc_beta requires a, b > 0, got a={a}, b={b}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = log_gamma_unchecked(a + b) - log_gamma_unchecked(a) - log_gamma_unchecked(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let front = ln_front.exp();
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Modified Lentz evaluation of the continued fraction for `I_x(a, b)`.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Samples of a real function on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid1D {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Grid1D {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(invalid(format!(
                "grid has {} abscissae but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(invalid("grid needs at least 2 points"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("grid entries must be finite"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid abscissae must be strictly increasing"));
        }
        Ok(Self { xs, ys })
    }

    /// Tabulates `f` on `n` equispaced points of `[lo, hi]`.
    pub fn tabulate(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(invalid("tabulate needs n >= 2 and hi > lo"));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
            .collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Running maximum `r -> max_{s <= r} y(s)` on the same grid.
    pub fn running_max(&self) -> Self {
        let mut best = f64::NEG_INFINITY;
        let ys = self
            .ys
            .iter()
            .map(|&y| {
                best = best.max(y);
                best
            })
            .collect();
        Self {
            xs: self.xs.clone(),
            ys,
        }
    }
}

/// Smallest concave majorant of a sampled function, as a piecewise-linear
/// evaluator over the upper hull vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveEnvelope {
    hull_x: Vec<f64>,
    hull_y: Vec<f64>,
    cap: Option<f64>,
}

impl ConcaveEnvelope {
    pub fn vertices(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.hull_x.iter().copied().zip(self.hull_y.iter().copied())
    }

    /// Caps every evaluation at 1, for curves that are total variations.
    pub fn capped_at_one(mut self) -> Self {
        self.cap = Some(1.0);
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.hull_x.len();
        let raw = if x <= self.hull_x[0] {
            self.hull_y[0]
        } else if x >= self.hull_x[n - 1] {
            self.hull_y[n - 1]
        } else {
            // first vertex strictly right of x
            let hi = self.hull_x.partition_point(|&v| v <= x);
            let lo = hi - 1;
            let w = (x - self.hull_x[lo]) / (self.hull_x[hi] - self.hull_x[lo]);
            self.hull_y[lo] + w * (self.hull_y[hi] - self.hull_y[lo])
        };
        match self.cap {
            Some(c) => raw.min(c),
            None => raw,
        }
    }
}

/// Upper hull of the grid points by a monotone-chain scan.
pub fn concave_envelope(samples: &Grid1D) -> ConcaveEnvelope {
    let mut hx: Vec<f64> = Vec::with_capacity(samples.xs.len());
    let mut hy: Vec<f64> = Vec::with_capacity(samples.xs.len());
    for (&x, &y) in samples.xs.iter().zip(samples.ys.iter()) {
        while hx.len() >= 2 {
            let (x1, y1) = (hx[hx.len() - 2], hy[hy.len() - 2]);
            let (x2, y2) = (hx[hx.len() - 1], hy[hy.len() - 1]);
            // pop the middle vertex unless it lies strictly above the chord
            let cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
            if cross >= 0.0 {
                hx.pop();
                hy.pop();
            } else {
                break;
            }
        }
        hx.push(x);
        hy.push(y);
    }
    ConcaveEnvelope {
        hull_x: hx,
        hull_y: hy,
        cap: None,
    }
}
