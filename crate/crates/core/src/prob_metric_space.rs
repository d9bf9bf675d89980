//! Finite probabilistic metric spaces.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use petgraph::algo::floyd_warshall;
use petgraph::graph::UnGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::delta_plus::{self, leq_witness, CdfSampler, StepCdf, EPS};
use crate::levy_metric::levy_to_h0;
use crate::triangle_functions::{Star, TriangleFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("distance matrix is not {expected}x{expected}")]
    Shape { expected: usize },
    #[error("identity axiom fails for ({p}, {q})")]
    IdentityViolation { p: usize, q: usize },
    #[error("D({p},{q}) and D({q},{p}) differ at t = {t}")]
    SymmetryViolation { p: usize, q: usize, t: f64 },
    #[error("D({p},{q}) * D({q},{r}) exceeds D({p},{r}) at t = {t}")]
    TriangleViolation { p: usize, q: usize, r: usize, t: f64 },
    #[error("not a metric: {0}")]
    NotAMetric(String),
    #[error("H_{a} * H_{b} is not H_(a+b) under `{star}`")]
    StarNotAdditiveOnHeaviside { a: f64, b: f64, star: String },
    #[error("unknown point index {0}")]
    UnknownPoint(usize),
    #[error("radius {0} must be positive")]
    InvalidRadius(f64),
    #[error("generation failed: {0}")]
    GenerationFailed(String),
}

/// A finite set of labelled points with a validated distance matrix.
#[derive(Clone)]
pub struct ProbMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<StepCdf>>,
    star: Star,
}

impl fmt::Debug for ProbMetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProbMetricSpace")
            .field("labels", &self.labels)
            .field("star", &self.star.name())
            .field("dist", &self.dist)
            .finish()
    }
}

impl ProbMetricSpace {
    /// Validates the identity, symmetry and triangle axioms.
    pub fn new(
        labels: Vec<String>,
        dist: Vec<Vec<StepCdf>>,
        star: Star,
    ) -> Result<Self, SpaceError> {
        let n = labels.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(SpaceError::Shape { expected: n });
        }
        for p in 0..n {
            if !dist[p][p].is_h0() {
                return Err(SpaceError::IdentityViolation { p, q: p });
            }
            for q in p + 1..n {
                if dist[p][q].is_h0() {
                    return Err(SpaceError::IdentityViolation { p, q });
                }
                let t = leq_witness(&dist[p][q], &dist[q][p], EPS)
                    .or_else(|| leq_witness(&dist[q][p], &dist[p][q], EPS));
                if let Some(t) = t {
                    return Err(SpaceError::SymmetryViolation { p, q, t });
                }
            }
        }
        if let Some((p, q, r, t)) = first_triangle_violation(&dist, star.as_ref()) {
            return Err(SpaceError::TriangleViolation { p, q, r, t });
        }
        Ok(ProbMetricSpace { labels, dist, star })
    }

    /// The space `D(p, q) = H_{d(p, q)}` induced by a classical metric.
    pub fn from_classical_metric(
        labels: Vec<String>,
        d: &[Vec<f64>],
        star: Star,
    ) -> Result<Self, SpaceError> {
        let n = labels.len();
        if d.len() != n || d.iter().any(|row| row.len() != n) {
            return Err(SpaceError::Shape { expected: n });
        }
        check_metric(d)?;
        let mut checked: BTreeMap<(u64, u64), ()> = BTreeMap::new();
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    let (a, b) = (d[p][q], d[q][r]);
                    if checked.insert((a.to_bits(), b.to_bits()), ()).is_some() {
                        continue;
                    }
                    let lhs = star.apply(&heaviside(a), &heaviside(b));
                    if !delta_plus::approx_eq(&lhs, &heaviside(a + b), EPS) {
                        return Err(SpaceError::StarNotAdditiveOnHeaviside {
                            a,
                            b,
                            star: star.name().to_string(),
                        });
                    }
                }
            }
        }
        let dist = d
            .iter()
            .map(|row| row.iter().map(|&x| heaviside(x)).collect())
            .collect();
        Self::new(labels, dist, star)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn star(&self) -> &Star {
        &self.star
    }

    pub fn dist(&self, p: usize, q: usize) -> &StepCdf {
        &self.dist[p][q]
    }

    pub fn matrix(&self) -> &[Vec<StepCdf>] {
        &self.dist
    }

    pub fn contains(&self, p: usize) -> bool {
        p < self.len()
    }

    fn check_point(&self, p: usize) -> Result<(), SpaceError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(SpaceError::UnknownPoint(p))
        }
    }

    /// `N_x(t) = { y : D(x, y)(t) > 1 - t }`.
    pub fn strong_neighborhood(&self, x: usize, t: f64) -> Result<Vec<usize>, SpaceError> {
        self.check_point(x)?;
        if !(t > 0.0) {
            return Err(SpaceError::InvalidRadius(t));
        }
        Ok((0..self.len())
            .filter(|&y| self.dist[x][y].evaluate(t) > 1.0 - t)
            .collect())
    }

    /// All pairs among the last `tail` entries are within `tol` of `H_0`.
    pub fn is_cauchy(&self, seq: &[usize], tol: f64, tail: usize) -> Result<bool, SpaceError> {
        for &p in seq {
            self.check_point(p)?;
        }
        if tail > seq.len() {
            return Ok(false);
        }
        let tail = &seq[seq.len() - tail..];
        Ok(tail.iter().enumerate().all(|(i, &p)| {
            tail[i + 1..]
                .iter()
                .all(|&q| levy_to_h0(&self.dist[p][q]) < tol)
        }))
    }

    /// Greedy cover by strong `t`-neighborhoods: repeatedly takes the point
    /// whose neighborhood covers the most uncovered points (lowest index on
    /// ties).
    pub fn covering_net(&self, t: f64) -> Result<Vec<usize>, SpaceError> {
        if !(t > 0.0) {
            return Err(SpaceError::InvalidRadius(t));
        }
        let hoods: Vec<Vec<usize>> = (0..self.len())
            .map(|x| self.strong_neighborhood(x, t))
            .collect::<Result<_, _>>()?;
        let mut covered = vec![false; self.len()];
        let mut net = Vec::new();
        while covered.iter().any(|c| !c) {
            let (best, _) = hoods
                .iter()
                .enumerate()
                .map(|(x, hood)| (x, hood.iter().filter(|&&y| !covered[y]).count()))
                .fold((0, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            for &y in &hoods[best] {
                covered[y] = true;
            }
            net.push(best);
        }
        net.sort_unstable();
        Ok(net)
    }
}

fn heaviside(a: f64) -> StepCdf {
    StepCdf::heaviside(a).expect("validated nonnegative distance")
}

fn check_metric(d: &[Vec<f64>]) -> Result<(), SpaceError> {
    let n = d.len();
    for p in 0..n {
        if d[p][p] != 0.0 {
            return Err(SpaceError::NotAMetric(format!("d({p},{p}) = {}", d[p][p])));
        }
        for q in 0..n {
            let x = d[p][q];
            if !x.is_finite() || x < 0.0 {
                return Err(SpaceError::NotAMetric(format!("d({p},{q}) = {x}")));
            }
            if p != q && x == 0.0 {
                return Err(SpaceError::NotAMetric(format!("d({p},{q}) = 0 for distinct points")));
            }
            if (x - d[q][p]).abs() > EPS {
                return Err(SpaceError::NotAMetric(format!("d({p},{q}) != d({q},{p})")));
            }
            for r in 0..n {
                if d[p][r] > x + d[q][r] + EPS {
                    return Err(SpaceError::NotAMetric(format!(
                        "d({p},{r}) > d({p},{q}) + d({q},{r})"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn first_triangle_violation(
    dist: &[Vec<StepCdf>],
    star: &dyn TriangleFunction,
) -> Option<(usize, usize, usize, f64)> {
    let n = dist.len();
    for p in 0..n {
        for q in 0..n {
            if q == p {
                continue;
            }
            for r in 0..n {
                if r == q {
                    continue;
                }
                let composed = star.apply(&dist[p][q], &dist[q][r]);
                if let Some(t) = leq_witness(&composed, &dist[p][r], EPS) {
                    return Some((p, q, r, t));
                }
            }
        }
    }
    None
}

/// Indices of the most frequent point (first seen on ties): a constant, hence
/// convergent, subsequence of any sequence in a finite space.
pub fn constant_subsequence(seq: &[usize]) -> Vec<usize> {
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i, &p) in seq.iter().enumerate() {
        counts.entry(p).or_insert((0, i)).0 += 1;
    }
    let best = counts
        .iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(&p, _)| p);
    match best {
        Some(p) => (0..seq.len()).filter(|&i| seq[i] == p).collect(),
        None => Vec::new(),
    }
}

/// How [`gen_space`] builds distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceModel {
    /// Shortest-path metric of a random weighted connected graph, embedded
    /// through Heaviside elements.
    Metric,
    /// Random symmetric matrix closed under the triangle inequality by
    /// sup-relaxation.
    Repair,
}

impl SpaceModel {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "metric" => Some(SpaceModel::Metric),
            "repair" => Some(SpaceModel::Repair),
            _ => None,
        }
    }
}

/// Labels `p0, p1, ...`.
pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// Deterministic random space. The output always passes validation.
pub fn gen_space(
    seed: u64,
    n: usize,
    model: SpaceModel,
    star: Star,
) -> Result<ProbMetricSpace, SpaceError> {
    if n == 0 {
        return Err(SpaceError::GenerationFailed("need at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        SpaceModel::Metric => {
            let d = random_graph_metric(&mut rng, n);
            ProbMetricSpace::from_classical_metric(default_labels(n), &d, star)
        }
        SpaceModel::Repair => repaired_space(&mut rng, n, star),
    }
}

fn random_graph_metric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut graph = UnGraph::<(), f64>::new_undirected();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    let weight = |rng: &mut ChaCha8Rng| rng.gen_range(1..=150) as f64 / 100.0;
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let w = weight(rng);
        graph.add_edge(nodes[i], nodes[j], w);
    }
    for i in 0..n {
        for j in i + 2..n {
            if rng.gen_bool(0.3) {
                let w = weight(rng);
                graph.add_edge(nodes[i], nodes[j], w);
            }
        }
    }
    let paths = floyd_warshall(&graph, |e| *e.weight()).expect("nonnegative weights");
    (0..n)
        .map(|i| (0..n).map(|j| paths[&(nodes[i], nodes[j])]).collect())
        .collect()
}

fn off_diagonal_sampler() -> CdfSampler {
    CdfSampler {
        max_breaks: 3,
        horizon: 2.0,
        lattice: Some(0.25),
        full_mass: 0.7,
    }
}

fn draw_entry(rng: &mut ChaCha8Rng) -> StepCdf {
    let sampler = off_diagonal_sampler();
    loop {
        let f = sampler.sample(rng);
        if f.evaluate_right(0.0) < 0.95 {
            return f;
        }
    }
}

/// Closes `dist` under `D(p,r) <- sup(D(p,r), D(p,q) * D(q,r))`; returns false
/// if the sweep cap is hit first.
fn relax(dist: &mut [Vec<StepCdf>], star: &dyn TriangleFunction) -> bool {
    let n = dist.len();
    let cap = 10 * n * n * n;
    for _ in 0..cap.max(1) {
        let mut changed = false;
        for q in 0..n {
            for p in 0..n {
                for r in p + 1..n {
                    if p == q || r == q {
                        continue;
                    }
                    let composed = star.apply(&dist[p][q], &dist[q][r]);
                    if delta_plus::leq(&composed, &dist[p][r]) {
                        continue;
                    }
                    let next = delta_plus::sup2(&dist[p][r], &composed);
                    dist[r][p] = next.clone();
                    dist[p][r] = next;
                    changed = true;
                }
            }
        }
        if !changed {
            return true;
        }
    }
    false
}

fn repaired_space(rng: &mut ChaCha8Rng, n: usize, star: Star) -> Result<ProbMetricSpace, SpaceError> {
    let mut dist = vec![vec![StepCdf::h0(); n]; n];
    for p in 0..n {
        for q in p + 1..n {
            let f = draw_entry(rng);
            dist[q][p] = f.clone();
            dist[p][q] = f;
        }
    }
    for _attempt in 0..10 {
        if !relax(&mut dist, star.as_ref()) {
            return Err(SpaceError::GenerationFailed("relaxation did not converge".into()));
        }
        let mut collapsed = false;
        for p in 0..n {
            for q in p + 1..n {
                if dist[p][q].is_h0() {
                    let f = draw_entry(rng);
                    dist[q][p] = f.clone();
                    dist[p][q] = f;
                    collapsed = true;
                }
            }
        }
        if !collapsed {
            return ProbMetricSpace::new(default_labels(n), dist, star)
                .map_err(|e| SpaceError::GenerationFailed(e.to_string()));
        }
    }
    Err(SpaceError::GenerationFailed("identity could not be restored".into()))
}

/// Convenience for building a [`Star`] from a built-in t-norm.
pub fn star_of(t: crate::triangle_functions::TNorm) -> Star {
    Arc::new(t)
}
