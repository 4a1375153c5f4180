//! Worst-case versus average local fluctuation of layered nonlinear maps.

use rand::Rng;
use serde::Serialize;

use crate::and_analysis::{ratio_dimension_factor, ratio_lower_bounds, BoundCertificate, Verdict};
use crate::error::{invalid, Error, Result};
use crate::induced::{induced_norm, AscentBudget, NormKind};
use crate::lp::{lp_norm_unchecked, map_sample_batches, Exponent, LpSpace, Surface};
use crate::matrix::Matrix;
use crate::rng::SeededRng;
use crate::spectral::{spectrum, DEFAULT_RANK_TOL};
use crate::stats::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(invalid(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::DimensionMismatch {
                expected: weights.rows(),
                found: bias.len(),
            });
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(invalid("bias entries must be finite"));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Affine layer without activation.
    pub fn affine(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        Self::new(weights, bias, Activation::Identity)
    }
}

/// A composition of affine layers and elementwise activations, `ℝ^m → ℝ^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorMap {
    layers: Vec<Layer>,
}

impl VectorMap {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("a map needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].weights.cols() != pair[0].weights.rows() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].weights.rows(),
                    found: pair[1].weights.cols(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn linear(a: Matrix) -> Self {
        let k = a.rows();
        Self {
            layers: vec![Layer::affine(a, vec![0.0; k]).expect("bias length matches")],
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.rows()
    }

    fn forward(&self, x: &[f64], mut visit: impl FnMut(&Layer, &[f64])) -> Vec<f64> {
        let mut z = x.to_vec();
        for layer in &self.layers {
            let mut pre = vec![0.0; layer.weights.rows()];
            layer.weights.apply_into(&z, &mut pre);
            for (v, b) in pre.iter_mut().zip(&layer.bias) {
                *v += b;
            }
            visit(layer, &pre);
            z = pre.into_iter().map(|v| layer.activation.apply(v)).collect();
        }
        z
    }

    fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x, |_, _| {})
    }

    /// Smallest `|pre-activation|` over all relu units at `x`.
    fn relu_margin(&self, x: &[f64]) -> f64 {
        let mut margin = f64::INFINITY;
        self.forward(x, |layer, pre| {
            if layer.activation == Activation::Relu {
                margin = pre.iter().fold(margin, |acc, v| acc.min(v.abs()));
            }
        });
        margin
    }
}

pub fn eval_map(h: &VectorMap, x: &[f64]) -> Result<Vec<f64>> {
    check_input(h, x)?;
    Ok(h.eval_unchecked(x))
}

fn check_input(h: &VectorMap, x: &[f64]) -> Result<()> {
    if x.len() != h.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: h.input_dim(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("input point must be finite"));
    }
    Ok(())
}

pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Central-difference Jacobian, `k × m`, with per-coordinate step
/// `step · max(1, |x_j|)`.
pub fn jacobian_fd(h: &VectorMap, x: &[f64], step: f64) -> Result<Matrix> {
    check_input(h, x)?;
    if !(step > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let (k, m) = (h.output_dim(), h.input_dim());
    let mut data = vec![0.0; k * m];
    let mut xp = x.to_vec();
    for j in 0..m {
        let tau = step * x[j].abs().max(1.0);
        xp[j] = x[j] + tau;
        let fwd = h.eval_unchecked(&xp);
        xp[j] = x[j] - tau;
        let bwd = h.eval_unchecked(&xp);
        xp[j] = x[j];
        for i in 0..k {
            data[i * m + j] = (fwd[i] - bwd[i]) / (2.0 * tau);
        }
    }
    Matrix::new(k, m, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationOptions {
    pub eps_probe: f64,
    pub fd_step: f64,
    /// Probe directions from the ball instead of the sphere.
    pub surface: Surface,
    pub budget: AscentBudget,
}

impl Default for FluctuationOptions {
    fn default() -> Self {
        Self {
            eps_probe: 1e-4,
            fd_step: DEFAULT_FD_STEP,
            surface: Surface::Sphere,
            budget: AscentBudget::default(),
        }
    }
}

const RELU_MARGIN: f64 = 1e-7;
const JITTER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationReport {
    pub delta_max: f64,
    pub delta_max_method: &'static str,
    pub delta_max_kind: NormKind,
    pub delta_avg: f64,
    pub delta_avg_stderr: f64,
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_stderr: f64,
    pub corrected_bound: f64,
    pub rank_bound: f64,
    pub dimension_bound: f64,
    /// `delta_avg ≤ delta_max / corrected_bound`.
    pub corrected: BoundCertificate,
    pub jacobian_spectral: f64,
    pub jacobian_frobenius: f64,
    pub jacobian_rank: usize,
    pub eps: f64,
    pub n: usize,
    pub surface: Surface,
    /// Point actually probed; differs from the input only after relu jitter.
    pub x: Vec<f64>,
    pub jittered: bool,
}

pub fn fluctuation_certificate(
    h: &VectorMap,
    x: &[f64],
    p: Exponent,
    q: Exponent,
    n: usize,
    opts: &FluctuationOptions,
    rng: SeededRng,
) -> Result<FluctuationReport> {
    check_input(h, x)?;
    if n < 2 {
        return Err(invalid("at least two probes are needed for a standard error"));
    }
    if !(opts.eps_probe > 0.0) {
        return Err(invalid("probe radius must be positive"));
    }
    let (k, m) = (h.output_dim(), h.input_dim());

    let mut x = x.to_vec();
    let mut jittered = false;
    let mut gen = rng.substream(u64::MAX).generator();
    for _ in 0..100 {
        if h.relu_margin(&x) >= RELU_MARGIN {
            break;
        }
        jittered = true;
        for v in x.iter_mut() {
            *v += JITTER * v.abs().max(1.0) * gen.random_range(-1.0..1.0);
        }
    }

    let jac = jacobian_fd(h, &x, opts.fd_step)?;
    let spec = spectrum(&jac, DEFAULT_RANK_TOL);
    if spec.spectral == 0.0 {
        return Err(Error::Degenerate("the Jacobian vanishes at this point".into()));
    }
    let norm = induced_norm(&jac, p, q, &opts.budget);

    let h0 = h.eval_unchecked(&x);
    let eps = opts.eps_probe;
    let space = LpSpace::new(m, p)?;
    let probe = map_sample_batches(space, opts.surface, n, rng, |buf, _| {
        let mut acc = Moments::default();
        let mut xp = vec![0.0; m];
        let mut diff = vec![0.0; k];
        for u in buf.chunks_exact(m) {
            for ((t, xi), ui) in xp.iter_mut().zip(&x).zip(u) {
                *t = xi + eps * ui;
            }
            for ((d, a), b) in diff.iter_mut().zip(h.eval_unchecked(&xp)).zip(&h0) {
                *d = a - b;
            }
            acc.push(lp_norm_unchecked(&diff, q) / eps);
        }
        acc
    })
    .into_iter()
    .fold(Moments::default(), Moments::merge);

    let delta_avg = probe.mean;
    let stderr = probe.stderr();
    if delta_avg <= 0.0 {
        return Err(Error::Degenerate("average fluctuation is zero".into()));
    }
    let (corrected_bound, _, rank_bound) = ratio_lower_bounds(k, m, &spec, p, q);
    let dimension_bound =
        (k as f64).powf(-(0.5 - q.recip()).abs()) * ratio_dimension_factor(m, p) / (m.min(k) as f64).sqrt();
    let mut corrected = BoundCertificate::new(delta_avg, stderr, norm.value / corrected_bound, corrected_bound);
    if !norm.kind.is_exact() && corrected.verdict == Verdict::Violated {
        corrected.verdict = Verdict::Inconclusive;
    }

    Ok(FluctuationReport {
        delta_max: norm.value,
        delta_max_method: "jacobian_norm",
        delta_max_kind: norm.kind,
        delta_avg,
        delta_avg_stderr: stderr,
        ratio: norm.value / delta_avg,
        ratio_stderr: norm.value * stderr / (delta_avg * delta_avg),
        corrected_bound,
        rank_bound,
        dimension_bound,
        corrected,
        jacobian_spectral: spec.spectral,
        jacobian_frobenius: spec.frobenius,
        jacobian_rank: spec.rank,
        eps,
        n,
        surface: opts.surface,
        x,
        jittered,
    })
}
