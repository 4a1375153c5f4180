//! Exact minimization of the one-dimensional convex piecewise-linear
//! objectives behind empirical distributionally robust risks.
//!
//! The breakpoint solver is authoritative. Each instance also carries a
//! closed-form index formula, evaluated as written and compared through
//! [`PwlSolution::agrees`].

use serde::Serialize;

use crate::error::{invalid, Error, Result};

const AGREE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PwlInstance {
    /// `min_{x ≤ b} a x + Σ|c_i − x|`.
    Opt { a: f64, c: Vec<f64>, b: f64 },
    /// `min_{α ≥ 0} α ε + (1/n) Σ (1 − α d_i)_+`.
    Optbis { d: Vec<f64>, eps: f64 },
    /// `min_{α ≥ 0} α ε + (1/n) Σ max(a_i, b − α)`.
    Realopt { a: Vec<f64>, b: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PwlSolution {
    pub value: f64,
    pub minimizer: f64,
    pub closed_form_value: Option<f64>,
    pub agrees: bool,
    /// For realopt, `value − mean(a)`.
    pub excess: Option<f64>,
}

fn is_sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

fn finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be finite")))
    }
}

impl PwlInstance {
    pub fn validate(&self) -> Result<()> {
        match self {
            PwlInstance::Opt { a, c, b } => {
                finite(&[*a, *b], "a and b")?;
                finite(c, "c")?;
                if !is_sorted(c) {
                    return Err(invalid("c must be sorted nondecreasing"));
                }
                if c.last().is_some_and(|&cn| cn > *b) {
                    return Err(invalid("every c_i must be at most b"));
                }
                if *a > c.len() as f64 {
                    return Err(Error::Unbounded(format!(
                        "slope a − n = {} > 0 sends the objective to −∞ as x → −∞",
                        a - c.len() as f64
                    )));
                }
            }
            PwlInstance::Optbis { d, eps } => {
                finite(d, "d")?;
                if d.is_empty() {
                    return Err(invalid("d must be nonempty"));
                }
                if !is_sorted(d) || d[0] < 0.0 {
                    return Err(invalid("d must be nonnegative and sorted nondecreasing"));
                }
                if !(*eps >= 0.0 && eps.is_finite()) {
                    return Err(invalid("eps must be finite and nonnegative"));
                }
            }
            PwlInstance::Realopt { a, b, eps } => {
                finite(a, "a")?;
                finite(&[*b], "b")?;
                if a.is_empty() {
                    return Err(invalid("a must be nonempty"));
                }
                if !is_sorted(a) || a[a.len() - 1] > *b {
                    return Err(invalid("a must be sorted nondecreasing with every a_i ≤ b"));
                }
                if !(*eps >= 0.0 && eps.is_finite()) {
                    return Err(invalid("eps must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: f64) -> f64 {
        match self {
            PwlInstance::Opt { a, c, .. } => a * x + c.iter().map(|ci| (ci - x).abs()).sum::<f64>(),
            PwlInstance::Optbis { d, eps } => {
                x * eps + d.iter().map(|di| (1.0 - x * di).max(0.0)).sum::<f64>() / d.len() as f64
            }
            PwlInstance::Realopt { a, b, eps } => {
                x * eps + a.iter().map(|ai| ai.max(b - x)).sum::<f64>() / a.len() as f64
            }
        }
    }

    /// Where the objective can change slope, plus the end of the domain.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            PwlInstance::Opt { c, b, .. } => c.iter().copied().filter(|ci| ci <= b).chain([*b]).collect(),
            PwlInstance::Optbis { d, .. } => {
                std::iter::once(0.0).chain(d.iter().filter(|&&di| di > 0.0).map(|di| 1.0 / di)).collect()
            }
            PwlInstance::Realopt { a, b, .. } => std::iter::once(0.0).chain(a.iter().map(|ai| b - ai)).collect::<Vec<_>>(),
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn closed_form(&self) -> Option<f64> {
        let v = match self {
            PwlInstance::Opt { a, c, b } => opt_closed_form(*a, c, *b),
            PwlInstance::Optbis { d, eps } => optbis_closed_form(d, *eps),
            PwlInstance::Realopt { a, b, eps } => realopt_closed_form(a, *b, *eps),
        };
        v.is_finite().then_some(v)
    }
}

/// Exact minimum by evaluating every breakpoint; ties go to the smallest
/// minimizer.
pub fn solve(instance: &PwlInstance) -> Result<PwlSolution> {
    instance.validate()?;
    let (mut minimizer, mut value) = (f64::NAN, f64::INFINITY);
    for x in instance.breakpoints() {
        let fx = instance.objective(x);
        if fx < value {
            (minimizer, value) = (x, fx);
        }
    }
    let closed_form_value = instance.closed_form();
    let excess = match instance {
        PwlInstance::Realopt { a, .. } => Some(value - a.iter().sum::<f64>() / a.len() as f64),
        _ => None,
    };
    Ok(PwlSolution {
        value,
        minimizer,
        closed_form_value,
        agrees: closed_form_value.is_some_and(|cf| (cf - value).abs() <= AGREE_TOL),
        excess,
    })
}

pub fn solve_opt(a: f64, c: &[f64], b: f64) -> Result<PwlSolution> {
    solve(&PwlInstance::Opt { a, c: c.to_vec(), b })
}

pub fn solve_optbis(d: &[f64], eps: f64) -> Result<PwlSolution> {
    solve(&PwlInstance::Optbis { d: d.to_vec(), eps })
}

pub fn solve_realopt(a: &[f64], b: f64, eps: f64) -> Result<PwlSolution> {
    solve(&PwlInstance::Realopt { a: a.to_vec(), b, eps })
}

/// `c̄_n + min(min_{i ≤ (n−a)/2} d_i c_{i+1} − 2c̄_i, min_{i > (n−a)/2} d_i c_i − 2c̄_i)`
/// with `d_i = a + 2i − n`, `c_0 = −∞`, `c_{n+1} = b`.
fn opt_closed_form(a: f64, c: &[f64], b: f64) -> f64 {
    let n = c.len();
    let cc = |i: usize| match i {
        0 => f64::NEG_INFINITY,
        i if i == n + 1 => b,
        i => c[i - 1],
    };
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(c.iter().scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        }))
        .collect();
    let split = (n as f64 - a) / 2.0;
    let best = (0..=n)
        .map(|i| {
            let d = a + 2.0 * i as f64 - n as f64;
            let at = if (i as f64) <= split { cc(i + 1) } else { cc(i) };
            let term = if d == 0.0 { 0.0 } else { d * at };
            term - 2.0 * prefix[i]
        })
        .filter(|t| t.is_finite())
        .fold(f64::INFINITY, f64::min);
    prefix[n] + best
}

/// `(1/n) min(a_ε, b_ε)` with
/// `a_ε = min_{n₀ ≤ i < i_ε} i + (nε − d̄_i)/d_i`,
/// `b_ε = min_{i_ε ≤ i ≤ n} i + (nε − d̄_i)/d_{i+1}`,
/// `i_ε = max{i ∈ [n₀, n] : d̄_i ≤ ε}`, `d_{n+1} = ∞`. Non-finite terms are
/// skipped; returns NaN when `i_ε` does not exist.
fn optbis_closed_form(d: &[f64], eps: f64) -> f64 {
    let n = d.len();
    let nf = n as f64;
    if eps * nf >= d.iter().sum::<f64>() {
        return 1.0;
    }
    let n0 = d.iter().filter(|&&x| x == 0.0).count();
    let dd = |i: usize| match i {
        0 => 0.0,
        i if i == n + 1 => f64::INFINITY,
        i => d[i - 1],
    };
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(d.iter().scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        }))
        .collect();
    let Some(i_eps) = (n0..=n).filter(|&i| prefix[i] <= eps).max() else {
        return f64::NAN;
    };
    let term = |i: usize, denom: f64| {
        let num = nf * eps - prefix[i];
        let t = if denom.is_infinite() { 0.0 } else { num / denom };
        i as f64 + t
    };
    let a_eps = (n0..i_eps).map(|i| term(i, dd(i))).filter(|t| t.is_finite());
    let b_eps = (i_eps..=n).map(|i| term(i, dd(i + 1))).filter(|t| t.is_finite());
    a_eps.chain(b_eps).fold(f64::INFINITY, f64::min) / nf
}

/// `mean(a) + Δ_{n,ε}` with `nΔ` from the split form
/// `min(min_{0 ≤ i ≤ min(n₀,⌊nε⌋)} ᾱ_i + (nε − i)α_{i+1}, min_{⌊nε⌋+1 ≤ i ≤ n₀} ᾱ_i + (nε − i)α_i)`,
/// `α_i = b − a_i`, `ᾱ_0 = 0`, `α_{n₀+1} = 0`.
fn realopt_closed_form(a: &[f64], b: f64, eps: f64) -> f64 {
    let n = a.len();
    let nf = n as f64;
    let mean = a.iter().sum::<f64>() / nf;
    let alpha: Vec<f64> = a.iter().map(|ai| b - ai).collect();
    if alpha[0] <= 0.0 {
        return mean;
    }
    let n0 = (1..=n).filter(|&i| alpha[i - 1] > 0.0).max().unwrap_or(0);
    let al = |i: usize| if i == 0 || i > n0 { 0.0 } else { alpha[i - 1] };
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(alpha.iter().scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        }))
        .collect();
    let ne = nf * eps;
    let fl = ne.floor() as usize;
    let first = (0..=n0.min(fl)).map(|i| prefix[i] + (ne - i as f64) * al(i + 1));
    let second = (fl + 1..=n0).map(|i| prefix[i] + (ne - i as f64) * al(i));
    mean + first.chain(second).fold(f64::INFINITY, f64::min) / nf
}

pub const ORACLE_GRID: usize = 100_000;
const ZOOM_GRID: usize = 1_000;
const ZOOM_ROUNDS: usize = 8;

/// Independent check: dense-grid minimum of the objective over a window
/// covering every breakpoint, refined by repeated zooming around the grid
/// argmin (valid because the objective is convex).
pub fn breakpoint_oracle(instance: &PwlInstance) -> Result<f64> {
    instance.validate()?;
    let (lo, hi) = match instance {
        PwlInstance::Opt { c, b, .. } => {
            let lo = c.first().copied().unwrap_or(*b).min(*b);
            (lo - 1.0 - (b - lo), *b)
        }
        PwlInstance::Optbis { d, .. } => {
            let top = d.iter().filter(|&&x| x > 0.0).map(|x| 1.0 / x).fold(0.0, f64::max);
            (0.0, 1.5 * top + 1.0)
        }
        PwlInstance::Realopt { a, b, .. } => (0.0, 1.5 * (b - a[0]) + 1.0),
    };
    let scan = |lo: f64, hi: f64, n: usize| {
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|k| {
                let x = if k == n { hi } else { lo + k as f64 * h };
                (x, instance.objective(x))
            })
            .fold((lo, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc })
    };
    let (mut x, mut best) = scan(lo, hi, ORACLE_GRID);
    let mut h = (hi - lo) / ORACLE_GRID as f64;
    for _ in 0..ZOOM_ROUNDS {
        let (a, b) = ((x - h).max(lo), (x + h).min(hi));
        let (xz, fz) = scan(a, b, ZOOM_GRID);
        if fz < best {
            (x, best) = (xz, fz);
        }
        h = (b - a) / ZOOM_GRID as f64;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opt_examples() {
        let s = solve_opt(0.0, &[1.0, 2.0, 3.0], 10.0).unwrap();
        assert_eq!((s.value, s.minimizer), (2.0, 2.0));
        assert!(s.agrees);
        let s = solve_opt(1.0, &[0.0, 0.0], 0.0).unwrap();
        assert_eq!((s.value, s.minimizer), (0.0, 0.0));
        assert!(matches!(solve_opt(3.0, &[0.0, 1.0], 2.0), Err(Error::Unbounded(_))));
    }

    #[test]
    fn optbis_examples() {
        let s = solve_optbis(&[2.0, 2.0], 1.0).unwrap();
        assert_eq!((s.value, s.minimizer), (0.5, 0.5));
        let s = solve_optbis(&[0.0, 0.0, 0.0], 0.3).unwrap();
        assert_eq!((s.value, s.minimizer), (1.0, 0.0));
        let s = solve_optbis(&[1.0, 1.0], 1.0).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.closed_form_value, Some(1.0));
    }

    #[test]
    fn realopt_examples() {
        let s = solve_realopt(&[0.0, 1.0], 1.0, 0.25).unwrap();
        assert_eq!((s.value, s.minimizer), (0.75, 1.0));
        assert!(s.agrees);
        let s = solve_realopt(&[0.0, 1.0, 3.0], 4.0, 0.0).unwrap();
        assert!((s.value - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.excess, Some(s.value - 4.0 / 3.0));
        let s = solve_realopt(&[0.0, 1.0, 3.0], 4.0, 10.0).unwrap();
        assert_eq!((s.value, s.minimizer), (4.0, 0.0));
    }

    #[test]
    fn oracle_matches_examples() {
        let inst = PwlInstance::Optbis { d: vec![2.0, 2.0], eps: 1.0 };
        assert!((breakpoint_oracle(&inst).unwrap() - 0.5).abs() < 1e-9);
        let inst = PwlInstance::Opt { a: 0.0, c: vec![1.0, 2.0, 3.0], b: 10.0 };
        assert!((breakpoint_oracle(&inst).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_instances() {
        assert!(solve_optbis(&[2.0, 1.0], 0.1).is_err());
        assert!(solve_optbis(&[-1.0, 1.0], 0.1).is_err());
        assert!(solve_realopt(&[0.0, 2.0], 1.0, 0.1).is_err());
        assert!(solve_opt(0.0, &[3.0, 1.0], 5.0).is_err());
    }
}
