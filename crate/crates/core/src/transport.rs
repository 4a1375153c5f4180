//! Perturbed variation `TV_ε` and partial transport between finite samples.
//!
//! Both samples are atoms on a bipartite graph whose edges are the pairs an
//! attacker may move between. Equal-weight samples reduce to maximum
//! cardinality matching, weighted ones to max-flow.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lp::{lp_norm_unchecked, Exponent};
use crate::matrix::Matrix;

const WEIGHT_TOL: f64 = 1e-12;
const FLOW_EPS: f64 = 1e-12;

/// Weighted atoms, one point per row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSample {
    points: Matrix,
    weights: Vec<f64>,
}

impl EmpiricalSample {
    pub fn uniform(points: Matrix) -> Self {
        let n = points.rows();
        Self {
            points,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weighted(points: Matrix, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.rows() {
            return Err(Error::DimensionMismatch {
                expected: points.rows(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= WEIGHT_TOL)
    }
}

pub type PairPredicate = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;

/// Which pairs `(x, x')` the attacker may confuse.
#[derive(Clone)]
pub enum AttackModel {
    /// `‖x − x'‖_p ≤ eps`.
    Metric { p: Exponent, eps: f64 },
    Predicate(PairPredicate),
}

impl fmt::Debug for AttackModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackModel::Metric { p, eps } => write!(f, "Metric {{ p: {p}, eps: {eps} }}"),
            AttackModel::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

impl AttackModel {
    pub fn metric(p: Exponent, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(invalid("attack radius must be nonnegative"));
        }
        Ok(AttackModel::Metric { p, eps })
    }

    pub fn predicate(f: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static) -> Self {
        AttackModel::Predicate(Arc::new(f))
    }

    pub fn allows(&self, x: &[f64], y: &[f64]) -> bool {
        match self {
            AttackModel::Metric { p, eps } => {
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                lp_norm_unchecked(&d, *p) <= *eps
            }
            AttackModel::Predicate(f) => f(x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    pub value: f64,
    pub matched_mass: f64,
    pub unmatched_left: f64,
    pub unmatched_right: f64,
    /// `(i, j, mass)` for every transported pair.
    pub plan: Vec<(usize, usize, f64)>,
    pub method: &'static str,
}

/// Neighbors in `b` of every atom of `a`.
pub fn attack_graph(a: &EmpiricalSample, b: &EmpiricalSample, model: &AttackModel) -> Result<Vec<Vec<usize>>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok((0..a.len())
        .map(|i| {
            let x = a.points.row(i);
            (0..b.len()).filter(|&j| model.allows(x, b.points.row(j))).collect()
        })
        .collect())
}

/// Maximum-cardinality matching by Hopcroft–Karp. Returns `mate[i]` for each
/// left vertex.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    const NIL: usize = usize::MAX;
    let n_left = adj.len();
    let mut mate_l = vec![NIL; n_left];
    let mut mate_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];

    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        for i in 0..n_left {
            if mate_l[i] == NIL {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                let k = mate_r[j];
                if k == NIL {
                    found = true;
                } else if dist[k] == usize::MAX {
                    dist[k] = dist[i] + 1;
                    queue.push_back(k);
                }
            }
        }
        if !found {
            break;
        }
        let mut next = vec![0usize; n_left];
        for i in 0..n_left {
            if mate_l[i] == NIL {
                augment(i, adj, &mut mate_l, &mut mate_r, &mut dist, &mut next);
            }
        }
    }

    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        mate_l: &mut [usize],
        mate_r: &mut [usize],
        dist: &mut [usize],
        next: &mut [usize],
    ) -> bool {
        while next[i] < adj[i].len() {
            let j = adj[i][next[i]];
            next[i] += 1;
            let k = mate_r[j];
            if k == NIL || (dist[k] == dist[i] + 1 && augment(k, adj, mate_l, mate_r, dist, next)) {
                mate_l[i] = j;
                mate_r[j] = i;
                return true;
            }
        }
        dist[i] = usize::MAX;
        false
    }

    mate_l.into_iter().map(|j| (j != NIL).then_some(j)).collect()
}

/// First-fit maximal matching. Fast, but may be smaller than maximum.
pub fn greedy_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    let mut used = vec![false; n_right];
    adj.iter()
        .map(|nbrs| {
            let j = nbrs.iter().copied().find(|&j| !used[j])?;
            used[j] = true;
            Some(j)
        })
        .collect()
}

fn matching_result(mates: &[Option<usize>], n: usize, method: &'static str) -> TransportResult {
    let size = mates.iter().flatten().count();
    let unmatched = (n - size) as f64 / n as f64;
    TransportResult {
        value: unmatched,
        matched_mass: 1.0 - unmatched,
        unmatched_left: unmatched,
        unmatched_right: unmatched,
        plan: mates
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j, 1.0 / n as f64)))
            .collect(),
        method,
    }
}

fn require_uniform(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<()> {
    if !(a.is_uniform() && b.is_uniform()) {
        return Err(invalid("matching needs uniform weights on both samples; use ot_maxflow for weighted samples"));
    }
    // with n₁ ≠ n₂ a vertex can carry mass to several partners, which a matching cannot express
    if a.len() != b.len() {
        return Err(invalid(format!(
            "matching needs equal sample sizes, got {} and {}; use ot_maxflow",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `TV_ε` between two uniform samples of equal size `n`: `u/n` with `u` the
/// unmatched count of a maximum matching.
pub fn tv_eps_matching(a: &EmpiricalSample, b: &EmpiricalSample, model: &AttackModel) -> Result<TransportResult> {
    require_uniform(a, b)?;
    let adj = attack_graph(a, b, model)?;
    Ok(matching_result(&hopcroft_karp(&adj, b.len()), a.len(), "hopcroft_karp"))
}

/// Like [`tv_eps_matching`] with a greedy maximal matching; an upper bound on
/// the exact value.
pub fn tv_eps_greedy(a: &EmpiricalSample, b: &EmpiricalSample, model: &AttackModel) -> Result<TransportResult> {
    require_uniform(a, b)?;
    let adj = attack_graph(a, b, model)?;
    Ok(matching_result(&greedy_matching(&adj, b.len()), a.len(), "greedy_maximal"))
}

struct Edge {
    to: usize,
    cap: f64,
    flow: f64,
}

/// Dinic max-flow on a small dense network with real capacities.
struct FlowNetwork {
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, flow: 0.0 });
        self.edges.push(Edge {
            to: from,
            cap: 0.0,
            flow: 0.0,
        });
        self.out[from].push(id);
        self.out[to].push(id + 1);
        id
    }

    fn residual(&self, e: usize) -> f64 {
        self.edges[e].cap - self.edges[e].flow
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.out.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.out[v] {
                let w = self.edges[e].to;
                if level[w] == usize::MAX && self.residual(e) > FLOW_EPS {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn push(&mut self, v: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if v == t {
            return limit;
        }
        while next[v] < self.out[v].len() {
            let e = self.out[v][next[v]];
            let w = self.edges[e].to;
            let r = self.residual(e);
            if r > FLOW_EPS && level[w] == level[v] + 1 {
                let got = self.push(w, t, limit.min(r), level, next);
                if got > FLOW_EPS {
                    self.edges[e].flow += got;
                    self.edges[e ^ 1].flow -= got;
                    return got;
                }
            }
            next[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while let Some(level) = self.levels(s, t) {
            let mut next = vec![0; self.out.len()];
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut next);
                if f <= FLOW_EPS {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

/// Partial optimal transport through the attack graph: `1 − maxflow` where
/// the source feeds `a`'s weights and the sink drains `b`'s.
pub fn ot_maxflow(a: &EmpiricalSample, b: &EmpiricalSample, model: &AttackModel) -> Result<TransportResult> {
    let adj = attack_graph(a, b, model)?;
    let (n1, n2) = (a.len(), b.len());
    let (s, t) = (0, n1 + n2 + 1);
    let mut net = FlowNetwork::new(n1 + n2 + 2);
    for (i, &w) in a.weights.iter().enumerate() {
        net.add_edge(s, 1 + i, w);
    }
    for (j, &w) in b.weights.iter().enumerate() {
        net.add_edge(1 + n1 + j, t, w);
    }
    let mut middle = Vec::new();
    for (i, nbrs) in adj.iter().enumerate() {
        for &j in nbrs {
            middle.push((i, j, net.add_edge(1 + i, 1 + n1 + j, f64::INFINITY)));
        }
    }
    let flow = net.max_flow(s, t).min(1.0);
    let plan: Vec<(usize, usize, f64)> = middle
        .into_iter()
        .map(|(i, j, e)| (i, j, net.edges[e].flow))
        .filter(|&(_, _, f)| f > FLOW_EPS)
        .collect();
    let mut sent_left = vec![0.0; n1];
    let mut got_right = vec![0.0; n2];
    for &(i, j, f) in &plan {
        sent_left[i] += f;
        got_right[j] += f;
    }
    let unmatched = |w: &[f64], used: &[f64]| w.iter().zip(used).map(|(w, u)| (w - u).max(0.0)).sum::<f64>();
    Ok(TransportResult {
        value: (1.0 - flow).max(0.0),
        matched_mass: flow,
        unmatched_left: unmatched(&a.weights, &sent_left),
        unmatched_right: unmatched(&b.weights, &got_right),
        plan,
        method: "dinic",
    })
}

pub const STRASSEN_MAX_SUPPORT: usize = 20;

/// `max_U a(U) − b(N(U))` over all subsets `U` of `a`'s atoms, `N(U)` the
/// atoms of `b` reachable from `U`.
pub fn strassen_enumerate(a: &EmpiricalSample, b: &EmpiricalSample, model: &AttackModel) -> Result<f64> {
    let n1 = a.len();
    if n1 > STRASSEN_MAX_SUPPORT {
        return Err(invalid(format!(
            "subset enumeration supports at most {STRASSEN_MAX_SUPPORT} atoms, got {n1}"
        )));
    }
    let adj = attack_graph(a, b, model)?;
    let blocks = b.len().div_ceil(64).max(1);
    let masks: Vec<Vec<u64>> = adj
        .iter()
        .map(|nbrs| {
            let mut m = vec![0u64; blocks];
            for &j in nbrs {
                m[j / 64] |= 1 << (j % 64);
            }
            m
        })
        .collect();

    let subsets = 1usize << n1;
    // closure[U] = closure[U \ {lowest}] ∪ N(lowest), built in increasing order
    let mut closure = vec![0u64; subsets * blocks];
    let mut mass_a = vec![0.0; subsets];
    let mut best = 0.0f64;
    for u in 1..subsets {
        let low = u.trailing_zeros() as usize;
        let rest = u & (u - 1);
        mass_a[u] = mass_a[rest] + a.weights[low];
        let mut mass_b = 0.0;
        for blk in 0..blocks {
            let bits = closure[rest * blocks + blk] | masks[low][blk];
            closure[u * blocks + blk] = bits;
            let mut x = bits;
            while x != 0 {
                let j = blk * 64 + x.trailing_zeros() as usize;
                mass_b += b.weights[j];
                x &= x - 1;
            }
        }
        best = best.max(mass_a[u] - mass_b);
    }
    Ok(best)
}

/// `(1/2) Σ_x |μ¹(x) − μ²(x)|` over the union of supports, atoms compared
/// exactly.
pub fn discrete_tv(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let mut atoms: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut add = |x: &[f64], w: f64| match atoms.iter_mut().find(|(y, _)| y.as_slice() == x) {
        Some(slot) => slot.1 += w,
        None => atoms.push((x.to_vec(), w)),
    };
    for i in 0..a.len() {
        add(a.points.row(i), a.weights[i]);
    }
    for j in 0..b.len() {
        add(b.points.row(j), -b.weights[j]);
    }
    Ok(0.5 * atoms.iter().map(|(_, w)| w.abs()).sum::<f64>())
}
