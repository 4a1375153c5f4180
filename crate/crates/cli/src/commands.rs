use serde_json::{json, Value};
use specbound_core::and_analysis::{and_estimate, ratio_certificate, spectum_constant, spectum_from_estimate};
use specbound_core::bounds::{
    contraction_constant, gaussian_err_bound, gaussian_linf_tail, kingkong_bound, linf_deflation, noise_design,
    tail_moment_bound, uap_bound, Covariance, GaussianPair, MomentFunction, TailKind,
};
use specbound_core::dro::{solve, PwlInstance};
use specbound_core::fluctuation::{fluctuation_certificate, FluctuationOptions};
use specbound_core::induced::{induced_norm, AscentBudget};
use specbound_core::lp::{sample_lp, sigma2};
use specbound_core::numerics::{std_normal_cdf, Grid1D};
use specbound_core::transport::{
    ot_maxflow, strassen_enumerate, tv_eps_greedy, tv_eps_matching, AttackModel, TransportResult,
};
use specbound_core::{Exponent, LpSpace, Matrix, SeededRng, Surface};

use crate::args::*;
use crate::io::{parse_list, parse_sweep, Inputs};
use crate::report::to_json;
use crate::CliError;

pub struct Outcome {
    pub results: Value,
    pub warnings: Vec<String>,
}

fn outcome(results: Value) -> Outcome {
    Outcome { results, warnings: Vec::new() }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need<T: Copy>(flag: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("--{flag} is required here")))
}

fn rng(seed: u64) -> SeededRng {
    SeededRng::new(seed)
}

pub fn sphere_sample(args: &SphereSampleArgs, seed: u64) -> Result<Outcome, CliError> {
    let space = LpSpace::new(args.m, args.p)?;
    let surface = match args.surface {
        SurfaceArg::Sphere => Surface::Sphere,
        SurfaceArg::Ball => Surface::Ball,
    };
    let s = sample_lp(space, surface, args.n, rng(seed))?;
    let (n, m) = (s.rows() as f64, s.cols());
    let mut mean = vec![0.0; m];
    for r in 0..s.rows() {
        for (acc, v) in mean.iter_mut().zip(s.row(r)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut cov = vec![0.0; m * m];
    for r in 0..s.rows() {
        let x = s.row(r);
        for i in 0..m {
            for j in 0..=i {
                cov[i * m + j] += (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1.0).max(1.0);
    let variances: Vec<f64> = (0..m).map(|i| cov[i * m + i] / denom).collect();
    let max_offdiag = (0..m)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (cov[i * m + j] / denom).abs())
        .fold(0.0, f64::max);
    let mut results = json!({
        "coordinate_mean": mean,
        "coordinate_variance": variances,
        "mean_coordinate_variance": variances.iter().sum::<f64>() / m as f64,
        "max_abs_covariance": max_offdiag,
        "n": s.rows(),
    });
    if matches!(surface, Surface::Sphere) {
        results["sigma2_exact"] = sigma2(space).exact.into();
    }
    if args.points {
        results["points"] = to_json(&s.to_rows());
    }
    Ok(outcome(results))
}

pub fn sigma2_cmd(args: &Sigma2Args) -> Result<Outcome, CliError> {
    let space = LpSpace::new(args.m, args.p)?;
    Ok(outcome(to_json(&sigma2(space))))
}

pub fn opnorm(args: &OpnormArgs, seed: u64, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let a = inputs.matrix(&args.matrix)?;
    let budget = AscentBudget { restarts: args.restarts, iterations: args.iterations, seed, ..Default::default() };
    let r = induced_norm(&a, args.p, args.q, &budget);
    let mut out = outcome(to_json(&r));
    if !r.kind.is_exact() {
        out.warnings.push("value is a lower bound from projected ascent".into());
    }
    Ok(out)
}

pub fn and_coeff(args: &MonteCarloArgs, seed: u64, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let a = inputs.matrix(&args.matrix)?;
    let est = and_estimate(&a, args.p, args.q, args.n, rng(seed))?;
    let cert = spectum_from_estimate(&a, &est);
    let constant = spectum_constant(a.rows(), a.cols(), args.p, args.q);
    Ok(outcome(json!({
        "estimate": to_json(&est),
        "certificate": to_json(&cert),
        "constant": constant,
    })))
}

pub fn ratio_cert(args: &MonteCarloArgs, seed: u64, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let a = inputs.matrix(&args.matrix)?;
    let cert = ratio_certificate(&a, args.p, args.q, args.n, rng(seed))?;
    let mut out = outcome(to_json(&cert));
    if cert.numerator_lower_bound {
        out.warnings.push("induced norm is a lower bound; violations are reported as inconclusive".into());
    }
    Ok(out)
}

pub fn fluctuation(args: &FluctuationArgs, seed: u64, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let h = inputs.vector_map(&args.map)?;
    let x = parse_list("point", &args.point)?;
    let opts = FluctuationOptions {
        eps_probe: args.eps_probe,
        surface: if args.ball { Surface::Ball } else { Surface::Sphere },
        budget: AscentBudget { seed, ..Default::default() },
        ..Default::default()
    };
    let r = fluctuation_certificate(&h, &x, args.p, args.q, args.n, &opts, rng(seed))?;
    let mut out = outcome(to_json(&r));
    if r.jittered {
        out.warnings.push("base point sat on a relu kink and was jittered".into());
    }
    Ok(out)
}

fn transport_json(r: &TransportResult) -> Value {
    let plan: Vec<Value> = r.plan.iter().map(|&(i, j, f)| json!([i, j, f])).collect();
    json!({
        "value": r.value,
        "matched_mass": r.matched_mass,
        "unmatched_left": r.unmatched_left,
        "unmatched_right": r.unmatched_right,
        "plan": plan,
        "method": r.method,
    })
}

pub fn tv_eps(args: &TvEpsArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let mut warnings = Vec::new();
    let a = inputs.sample(&args.a, args.weighted, &mut warnings)?;
    let b = inputs.sample(&args.b, args.weighted, &mut warnings)?;
    let model = AttackModel::metric(args.p, args.eps)?;
    let results = match args.method {
        TransportMethod::Auto if a.is_uniform() && b.is_uniform() && a.len() == b.len() => transport_json(&tv_eps_matching(&a, &b, &model)?),
        TransportMethod::Auto | TransportMethod::Maxflow => transport_json(&ot_maxflow(&a, &b, &model)?),
        TransportMethod::Matching => transport_json(&tv_eps_matching(&a, &b, &model)?),
        TransportMethod::Greedy => {
            warnings.push("greedy matching gives an upper bound on the value".into());
            transport_json(&tv_eps_greedy(&a, &b, &model)?)
        }
        TransportMethod::Strassen => json!({
            "value": strassen_enumerate(&a, &b, &model)?,
            "method": "strassen",
        }),
    };
    Ok(Outcome { results, warnings })
}

fn dro_instance(args: &DroArgs, over: Option<(&str, f64)>) -> Result<PwlInstance, CliError> {
    let scalar = |name: &str, v: Option<f64>| match over {
        Some((n, x)) if n == name => Some(x),
        _ => v,
    };
    let a_list = || parse_list("a", args.a.as_deref().ok_or_else(|| usage("--a is required here"))?);
    Ok(match args.variant {
        DroVariant::Opt => {
            let a = match over {
                Some(("a", x)) => x,
                _ => {
                    let v = a_list()?;
                    if v.len() != 1 {
                        return Err(usage("--a must be a single slope for opt"));
                    }
                    v[0]
                }
            };
            let c = parse_list("c", args.c.as_deref().ok_or_else(|| usage("--c is required here"))?)?;
            PwlInstance::Opt { a, c, b: need("b", scalar("b", args.b))? }
        }
        DroVariant::Optbis => {
            let d = parse_list("d", args.d.as_deref().ok_or_else(|| usage("--d is required here"))?)?;
            PwlInstance::Optbis { d, eps: need("eps", scalar("eps", args.eps))? }
        }
        DroVariant::Realopt => PwlInstance::Realopt {
            a: a_list()?,
            b: need("b", scalar("b", args.b))?,
            eps: need("eps", scalar("eps", args.eps))?,
        },
    })
}

pub fn dro(args: &DroArgs) -> Result<Outcome, CliError> {
    let Some(sweep) = &args.sweep else {
        let inst = dro_instance(args, None)?;
        let sol = solve(&inst)?;
        let mut out = outcome(json!({ "instance": to_json(&inst), "solution": to_json(&sol) }));
        if sol.closed_form_value.is_some() && !sol.agrees {
            out.warnings.push("closed form disagrees with the breakpoint minimum".into());
        }
        return Ok(out);
    };
    let sweep = parse_sweep(sweep)?;
    let allowed: &[&str] = match args.variant {
        DroVariant::Opt => &["a", "b"],
        DroVariant::Optbis => &["eps"],
        DroVariant::Realopt => &["b", "eps"],
    };
    if !allowed.contains(&sweep.name.as_str()) {
        return Err(usage(format!("cannot sweep {:?} here; choose one of {allowed:?}", sweep.name)));
    }
    let mut values = Vec::new();
    let mut minimizers = Vec::new();
    for &x in &sweep.values {
        let sol = solve(&dro_instance(args, Some((&sweep.name, x)))?)?;
        values.push(sol.value);
        minimizers.push(sol.minimizer);
    }
    Ok(outcome(json!({
        "parameter": sweep.name,
        "grid": sweep.values,
        "values": values,
        "minimizers": minimizers,
    })))
}

fn moment_function(spec: &str) -> Result<MomentFunction, CliError> {
    let bad = || usage(format!("--moment expects power:P or subgaussian:S, got {spec:?}"));
    let (kind, v) = spec.split_once(':').ok_or_else(bad)?;
    let v: f64 = v.parse().map_err(|_| bad())?;
    Ok(match kind {
        "power" => MomentFunction::power(v)?,
        "subgaussian" => MomentFunction::subgaussian(v)?,
        _ => return Err(bad()),
    })
}

/// Scalar parameters of `bounds`, any one of which can be swept.
#[derive(Clone, Copy)]
struct Scalars {
    eps: Option<f64>,
    sigma: Option<f64>,
    dist: Option<f64>,
    alpha: Option<f64>,
    w: Option<f64>,
    order: Option<f64>,
    t: Option<f64>,
    c: Option<f64>,
    sigma0_sq: Option<f64>,
    diam: Option<f64>,
}

impl Scalars {
    fn from_args(a: &BoundsArgs) -> Self {
        Self {
            eps: a.eps,
            sigma: a.sigma,
            dist: a.dist,
            alpha: a.alpha,
            w: a.w,
            order: a.order,
            t: a.t,
            c: a.c,
            sigma0_sq: a.sigma0_sq,
            diam: a.diam,
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "eps" => &mut self.eps,
            "sigma" => &mut self.sigma,
            "dist" => &mut self.dist,
            "alpha" => &mut self.alpha,
            "w" => &mut self.w,
            "order" => &mut self.order,
            "t" => &mut self.t,
            "c" => &mut self.c,
            "sigma0_sq" | "sigma0-sq" => &mut self.sigma0_sq,
            "diam" => &mut self.diam,
            _ => return None,
        })
    }
}

fn relevant(kind: BoundKind) -> &'static [&'static str] {
    match kind {
        BoundKind::Gaussian => &["eps"],
        BoundKind::Lighttail => &["eps", "sigma", "dist"],
        BoundKind::Moment => &["eps", "dist", "alpha"],
        BoundKind::Wasserstein => &["eps", "w", "order"],
        BoundKind::Kingkong => &["t", "alpha", "dist", "c"],
        BoundKind::Uap => &["t", "alpha", "c"],
        BoundKind::NoiseDesign => &["t", "dist", "sigma0_sq"],
        BoundKind::Contraction => &["eps", "diam"],
    }
}

/// File-backed and structured inputs, loaded once per invocation.
struct Loaded {
    pair: Option<GaussianPair>,
    theta: Option<Grid1D>,
    sigma0: Option<Matrix>,
    moment: Option<MomentFunction>,
}

fn load_bounds(args: &BoundsArgs, inputs: &mut Inputs) -> Result<Loaded, CliError> {
    let mut loaded = Loaded { pair: None, theta: None, sigma0: None, moment: None };
    if let Some(spec) = &args.moment {
        loaded.moment = Some(moment_function(spec)?);
    }
    match args.kind {
        BoundKind::Gaussian => {
            let delta = parse_list("delta", args.delta.as_deref().ok_or_else(|| usage("--delta is required"))?)?;
            let sigma = match (&args.variances, &args.covariance) {
                (Some(v), None) => Covariance::Diagonal(parse_list("variances", v)?),
                (None, Some(path)) => Covariance::Full(inputs.matrix(path)?),
                _ => return Err(usage("give exactly one of --variances and --covariance")),
            };
            loaded.pair = Some(GaussianPair::new(delta, sigma)?);
        }
        BoundKind::Kingkong => {
            if let Some(path) = &args.theta {
                loaded.theta = Some(inputs.grid(path)?);
            }
        }
        BoundKind::NoiseDesign => {
            let path = args.covariance.as_ref().ok_or_else(|| usage("--covariance is required"))?;
            loaded.sigma0 = Some(inputs.matrix(path)?);
        }
        _ => {}
    }
    Ok(loaded)
}

/// TV curve of two Gaussians at mean distance `r` with scale `c`.
fn gaussian_theta(c: f64) -> Result<Grid1D, CliError> {
    Ok(Grid1D::tabulate(0.0, 40.0 * c, 100_001, |r| 2.0 * std_normal_cdf(r / (2.0 * c)) - 1.0)?)
}

fn eval_bound(args: &BoundsArgs, loaded: &Loaded, s: Scalars) -> Result<(f64, Value), CliError> {
    let moment = || loaded.moment.ok_or_else(|| usage("--moment is required"));
    Ok(match args.kind {
        BoundKind::Gaussian => {
            let pair = loaded.pair.as_ref().expect("loaded");
            let eps = need("eps", s.eps)?;
            let d = linf_deflation(pair, eps)?;
            (gaussian_err_bound(pair, eps)?, json!({ "deflation": to_json(&d) }))
        }
        BoundKind::Lighttail => {
            let m = need("m", args.m)?;
            let sigma = need("sigma", s.sigma)?;
            if !(sigma > 0.0) {
                return Err(usage("--sigma must be positive"));
            }
            let tail = gaussian_linf_tail(m, sigma);
            let b = tail_moment_bound(&TailKind::LightTail(&tail), need("eps", s.eps)?, need("dist", s.dist)?)?;
            (b, Value::Null)
        }
        BoundKind::Moment => {
            let kind = TailKind::Moment { m: moment()?, alpha: need("alpha", s.alpha)? };
            (tail_moment_bound(&kind, need("eps", s.eps)?, s.dist.unwrap_or(0.0))?, Value::Null)
        }
        BoundKind::Wasserstein => {
            let kind = TailKind::Wasserstein { w: need("w", s.w)?, p: s.order.unwrap_or(1.0) };
            (tail_moment_bound(&kind, need("eps", s.eps)?, s.dist.unwrap_or(0.0))?, Value::Null)
        }
        BoundKind::Kingkong => {
            let theta = match &loaded.theta {
                Some(g) => g.clone(),
                None => gaussian_theta(need("c", s.c)?)?,
            };
            let b = kingkong_bound(need("t", s.t)?, moment()?, need("alpha", s.alpha)?, s.dist.unwrap_or(0.0), &theta)?;
            (b, Value::Null)
        }
        BoundKind::Uap => (uap_bound(need("t", s.t)?, moment()?, need("alpha", s.alpha)?, need("c", s.c)?)?, Value::Null),
        BoundKind::NoiseDesign => {
            let sigma0 = loaded.sigma0.as_ref().expect("loaded");
            let d = noise_design(sigma0, need("r", args.r)?, need("sigma0-sq", s.sigma0_sq)?, need("t", s.t)?, s.dist.unwrap_or(0.0))?;
            let extra = json!({
                "sigma_tilde": to_json(&d.sigma_tilde.to_rows()),
                "alpha_star": d.alpha_star,
                "effective_sigma": d.effective_sigma,
                "root_eigenvalues": d.root_eigenvalues,
            });
            (d.err_lower_bound, extra)
        }
        BoundKind::Contraction => {
            let p: Exponent = need("p", args.p)?;
            (contraction_constant(need("m", args.m)?, p, need("diam", s.diam)?, need("eps", s.eps)?)?, Value::Null)
        }
    })
}

pub fn bounds(args: &BoundsArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let loaded = load_bounds(args, inputs)?;
    let base = Scalars::from_args(args);
    let mut warnings = Vec::new();
    if args.kind == BoundKind::Uap {
        warnings.push("O(1/m) term omitted".into());
    }
    if args.kind == BoundKind::Kingkong && loaded.theta.is_none() {
        warnings.push("theta tabulated from the Gaussian curve with scale --c".into());
    }
    let Some(sweep) = &args.sweep else {
        let (bound, extra) = eval_bound(args, &loaded, base)?;
        let mut results = json!({ "bound": bound });
        if let Value::Object(map) = extra {
            results.as_object_mut().expect("object").extend(map);
        }
        return Ok(Outcome { results, warnings });
    };
    let sweep = parse_sweep(sweep)?;
    let allowed = relevant(args.kind);
    if !allowed.contains(&sweep.name.replace('-', "_").as_str()) {
        return Err(usage(format!("cannot sweep {:?} for this kind; choose one of {allowed:?}", sweep.name)));
    }
    let mut bounds = Vec::with_capacity(sweep.values.len());
    for &x in &sweep.values {
        let mut s = base;
        *s.slot(&sweep.name).expect("checked") = Some(x);
        bounds.push(eval_bound(args, &loaded, s)?.0);
    }
    Ok(Outcome {
        results: json!({ "parameter": sweep.name, "values": sweep.values, "bounds": bounds }),
        warnings,
    })
}
