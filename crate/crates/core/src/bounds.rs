//! Closed-form lower bounds on the adversarial Bayes error and companion
//! constants. Every error bound is clamped to `[0, 1/2]`.

use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::lp::Exponent;
use crate::matrix::Matrix;
use crate::numerics::{concave_envelope, reg_inc_beta, std_normal_cdf, Grid1D};
use crate::spectral::symmetric_eigen;

const PSD_TOL: f64 = 1e-10;

fn clamp_half(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 0.5)
    }
}

/// Increasing convex `M` with `M(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentFunction {
    /// `M(r) = r^p`.
    Power { p: f64 },
    /// `M(r) = exp(r²/σ²) − 1`.
    Subgaussian { sigma: f64 },
}

impl MomentFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(domain("power moment needs finite p ≥ 1"));
        }
        Ok(MomentFunction::Power { p })
    }

    pub fn subgaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain("subgaussian moment needs σ > 0"));
        }
        Ok(MomentFunction::Subgaussian { sigma })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match *self {
            MomentFunction::Power { p } => r.powf(p),
            MomentFunction::Subgaussian { sigma } => ((r / sigma).powi(2)).exp_m1(),
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(domain(format!("moment inverse needs y ≥ 0, got {y}")));
        }
        Ok(match *self {
            MomentFunction::Power { p } => y.powf(1.0 / p),
            MomentFunction::Subgaussian { sigma } => sigma * y.ln_1p().sqrt(),
        })
    }
}

/// `TV(N(μ₁, Σ), N(μ₂, Σ))` as a function of the Mahalanobis distance.
pub fn gaussian_tv(delta_norm: f64) -> Result<f64> {
    if !(delta_norm >= 0.0) {
        return Err(domain("distance must be nonnegative"));
    }
    Ok((2.0 * std_normal_cdf(delta_norm / 2.0) - 1.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariance {
    /// Per-coordinate variances.
    Diagonal(Vec<f64>),
    Full(Matrix),
}

/// Two Gaussians with common covariance, described by their mean difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianPair {
    pub delta: Vec<f64>,
    pub sigma: Covariance,
}

impl GaussianPair {
    pub fn new(delta: Vec<f64>, sigma: Covariance) -> Result<Self> {
        let m = delta.len();
        if m == 0 {
            return Err(invalid("mean difference must be nonempty"));
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(invalid("mean difference must be finite"));
        }
        let found = match &sigma {
            Covariance::Diagonal(v) => {
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(domain("variances must be finite and nonnegative"));
                }
                v.len()
            }
            Covariance::Full(s) => {
                if !s.is_square() {
                    return Err(invalid("covariance must be square"));
                }
                s.rows()
            }
        };
        if found != m {
            return Err(Error::DimensionMismatch { expected: m, found });
        }
        Ok(Self { delta, sigma })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deflation {
    /// `Δ(ε)`; for a full covariance, the upper envelope.
    pub delta_eps: f64,
    pub s_vector: Vec<f64>,
    /// Optimal ℓ_∞ shift `z_j = Δ_j − sign(Δ_j)(|Δ_j| − ε)_+`.
    pub z_opt: Vec<f64>,
    pub exact: bool,
    /// Eigenvalue envelope for a full covariance.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Mahalanobis distance left after an ℓ_∞ attacker of budget `eps` shrinks
/// the mean difference.
pub fn linf_deflation(pair: &GaussianPair, eps: f64) -> Result<Deflation> {
    if !(eps >= 0.0) {
        return Err(domain("eps must be nonnegative"));
    }
    let shrunk: Vec<f64> = pair.delta.iter().map(|d| (d.abs() - eps).max(0.0)).collect();
    let z_opt: Vec<f64> = pair
        .delta
        .iter()
        .zip(&shrunk)
        .map(|(d, w)| d - d.signum() * w)
        .collect();
    match &pair.sigma {
        Covariance::Diagonal(var) => {
            let s: Vec<f64> = shrunk
                .iter()
                .zip(var)
                .map(|(&w, &v)| if w == 0.0 { 0.0 } else { w / v.sqrt() })
                .collect();
            let delta_eps = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(Deflation {
                delta_eps,
                s_vector: s,
                z_opt,
                exact: true,
                lower: None,
                upper: None,
            })
        }
        Covariance::Full(sigma) => {
            let eig = symmetric_eigen(sigma)?;
            let lmax = eig.values[0].max(0.0);
            let lmin = eig.values[eig.values.len() - 1];
            if lmin < -PSD_TOL * lmax.max(1.0) {
                return Err(domain(format!("covariance is not PSD (eigenvalue {lmin})")));
            }
            let residual: Vec<f64> = pair.delta.iter().zip(&z_opt).map(|(d, z)| d - z).collect();
            let w_norm = shrunk.iter().map(|x| x * x).sum::<f64>().sqrt();
            let lower = if w_norm == 0.0 { 0.0 } else { w_norm / lmax.sqrt() };
            // Mahalanobis norm of the residual through the pseudo-inverse
            let cut = PSD_TOL * lmax.max(1.0);
            let mut upper_sq = 0.0;
            let mut s_vector = Vec::with_capacity(eig.values.len());
            for (lam, v) in eig.values.iter().zip(&eig.vectors) {
                let proj: f64 = v.iter().zip(&residual).map(|(a, b)| a * b).sum();
                let s = if *lam > cut {
                    proj / lam.sqrt()
                } else if proj.abs() <= 1e-12 * w_norm.max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                };
                upper_sq += s * s;
                s_vector.push(s);
            }
            let upper = upper_sq.sqrt();
            Ok(Deflation {
                delta_eps: upper,
                s_vector,
                z_opt,
                exact: false,
                lower: Some(lower),
                upper: Some(upper),
            })
        }
    }
}

/// `1 − Φ(Δ(ε)/2)`.
pub fn gaussian_err_bound(pair: &GaussianPair, eps: f64) -> Result<f64> {
    let d = linf_deflation(pair, eps)?;
    Ok(clamp_half(1.0 - std_normal_cdf(d.delta_eps / 2.0)))
}

/// `α(t) = 2m exp(−t²/(2σ²))`, the ℓ_∞ tail of `N(μ, σ² I_m)`.
pub fn gaussian_linf_tail(m: usize, sigma: f64) -> impl Fn(f64) -> f64 {
    move |t| (2.0 * m as f64 * (-(t * t) / (2.0 * sigma * sigma)).exp()).min(1.0)
}

pub enum TailKind<'a> {
    /// A tail function `α(t) ≥ P(d(X, μ) > t)`.
    LightTail(&'a dyn Fn(f64) -> f64),
    /// Moment condition with function `M` and level `alpha`.
    Moment { m: MomentFunction, alpha: f64 },
    /// Order-`p` Wasserstein distance `w` between the classes.
    Wasserstein { w: f64, p: f64 },
}

/// Light-tail, moment and Wasserstein lower bounds on `err*_ε`.
pub fn tail_moment_bound(kind: &TailKind<'_>, eps: f64, mu_dist: f64) -> Result<f64> {
    if !(eps >= 0.0) || !(mu_dist >= 0.0) {
        return Err(domain("eps and mean distance must be nonnegative"));
    }
    let tilde = (eps - mu_dist) / 2.0;
    match kind {
        TailKind::LightTail(tail) => {
            if eps < mu_dist {
                return Err(domain("the light-tail bound needs eps ≥ distance between the centers"));
            }
            Ok(clamp_half(0.5 - tail(tilde)))
        }
        TailKind::Moment { m, alpha } => {
            if !(*alpha >= 0.0) {
                return Err(domain("moment level must be nonnegative"));
            }
            let ratio = if tilde <= 0.0 {
                1.0
            } else {
                let mt = m.eval(tilde);
                if mt <= *alpha {
                    1.0
                } else {
                    alpha / mt
                }
            };
            Ok(clamp_half(0.5 * (1.0 - ratio)))
        }
        TailKind::Wasserstein { w, p } => {
            if !(*w >= 0.0) || !(*p >= 1.0) {
                return Err(domain("Wasserstein bound needs w ≥ 0 and p ≥ 1"));
            }
            let ratio = if *w == 0.0 {
                0.0
            } else if eps == 0.0 {
                1.0
            } else {
                (w / eps).powf(*p).min(1.0)
            };
            Ok(clamp_half(0.5 * (1.0 - ratio)))
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("t must lie in (0, 1], got {t}")))
    }
}

/// Noisy Bayes-error bound `(1/2)(1 − t θ̄^cc(2M⁻¹(α/t) + Δ))` from a
/// tabulated TV curve `θ`.
pub fn kingkong_bound(t: f64, m: MomentFunction, alpha: f64, delta_means: f64, theta: &Grid1D) -> Result<f64> {
    check_t(t)?;
    if !(delta_means >= 0.0) {
        return Err(domain("mean distance must be nonnegative"));
    }
    if theta.ys().iter().any(|y| !(0.0..=1.0).contains(y)) {
        return Err(domain("θ values must lie in [0, 1]"));
    }
    let env = concave_envelope(&theta.running_max()).capped_at_one();
    let r = 2.0 * m.inverse(alpha / t)? + delta_means;
    Ok(clamp_half(0.5 * (1.0 - t * env.eval(r))))
}

/// Universal-perturbation fooling-rate bound
/// `(1/2)(1 − t(2Φ(M⁻¹(α/t)/c) − 1))`, without the `O(1/m)` term.
pub fn uap_bound(t: f64, m: MomentFunction, alpha: f64, c: f64) -> Result<f64> {
    check_t(t)?;
    if !(c > 0.0) {
        return Err(domain("c must be positive"));
    }
    let r = m.inverse(alpha / t)?;
    Ok(clamp_half(0.5 * (1.0 - t * (2.0 * std_normal_cdf(r / c) - 1.0))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseDesign {
    pub sigma_tilde: Matrix,
    pub alpha_star: f64,
    pub err_lower_bound: f64,
    /// `Σ_{j ≤ r} σ_j / √m`.
    pub effective_sigma: f64,
    /// Square roots of the eigenvalues of `Σ₀`, nonincreasing.
    pub root_eigenvalues: Vec<f64>,
}

/// Rank-`r` Gaussian noise covariance with trace `mσ₀²` minimizing
/// `α(Σ) = tr(Σ† Σ₀)`, and the resulting error bound for TV budget `t` and
/// mean distance `delta`.
pub fn noise_design(sigma0_matrix: &Matrix, r: usize, sigma0_sq: f64, t: f64, delta: f64) -> Result<NoiseDesign> {
    let m = sigma0_matrix.rows();
    if !sigma0_matrix.is_square() {
        return Err(invalid("Σ₀ must be square"));
    }
    if r == 0 || r > m {
        return Err(domain(format!("rank budget must lie in [1, {m}]")));
    }
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(domain("σ₀² must be positive"));
    }
    check_t(t)?;
    if !(delta >= 0.0) {
        return Err(domain("mean distance must be nonnegative"));
    }
    let eig = symmetric_eigen(sigma0_matrix)?;
    let lmax = eig.values[0].max(0.0);
    if let Some(bad) = eig.values.iter().find(|&&l| l < -PSD_TOL * lmax.max(1.0)) {
        return Err(domain(format!("Σ₀ is not PSD (eigenvalue {bad})")));
    }
    // eigenvalues at round-off level are zero; their square roots would not be
    let floor = PSD_TOL * lmax;
    let roots: Vec<f64> = eig.values.iter().map(|&l| if l > floor { l.sqrt() } else { 0.0 }).collect();
    let total: f64 = roots[..r].iter().sum();
    if total == 0.0 {
        return Err(Error::Degenerate("Σ₀ has no variance in its top-r directions".into()));
    }
    let scale = m as f64 * sigma0_sq / total;
    let mut data = vec![0.0; m * m];
    for (s, u) in roots[..r].iter().zip(&eig.vectors) {
        if *s == 0.0 {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                data[i * m + j] += scale * s * u[i] * u[j];
            }
        }
    }
    // symmetrize away round-off
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (data[i * m + j] + data[j * m + i]);
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    let mf = m as f64;
    let sigma = total / mf.sqrt();
    let sigma0 = sigma0_sq.sqrt();
    let arg = (sigma / t.sqrt() + delta / mf.sqrt()) / sigma0;
    Ok(NoiseDesign {
        sigma_tilde: Matrix::new(m, m, data)?,
        alpha_star: total * total / (mf * sigma0_sq),
        err_lower_bound: clamp_half(0.5 * (1.0 - t * (2.0 * std_normal_cdf(arg) - 1.0))),
        effective_sigma: sigma,
        root_eigenvalues: roots,
    })
}

/// TV contraction constant `C_{m,p,ε}` of the uniform random-jump attacker
/// on a domain of diameter `diam`.
pub fn contraction_constant(m: usize, p: Exponent, diam: f64, eps: f64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(eps > 0.0) {
        return Err(domain("eps must be positive"));
    }
    if !(diam >= 0.0) {
        return Err(domain("diameter must be nonnegative"));
    }
    let ratio = diam / (2.0 * eps);
    match p {
        Exponent::Infinity => Ok(1.0 - (1.0 - ratio).max(0.0).powi(m as i32)),
        Exponent::Finite(2.0) => {
            let x = ratio.min(1.0).powi(2);
            reg_inc_beta(x, 0.5, (m as f64 + 1.0) / 2.0)
        }
        other => Err(Error::Unsupported(format!(
            "contraction constant is only known for p ∈ {{2, inf}}, got p = {other}"
        ))),
    }
}
