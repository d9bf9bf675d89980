//! Finite-scale compactness of 1-Lipschitz maps.
//!
//! Total boundedness of `(Δ⁺, d_L)` is realized by quantization buckets: two
//! elements sharing a quantization key at step `delta` are within `4 delta`
//! of each other. Refining bucket selections point by point over a finite
//! space yields a subsequence whose members are uniformly close, which is
//! the finite shadow of the diagonal extraction for 1-Lipschitz maps. The
//! converse runs the same extraction on `delta_x` maps.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::delta_plus::{lattice_key, quantize, StepCdf};
use crate::levy_metric::{levy_to_h0, uniform_distance, LevyConfig};
use crate::prob_lipschitz::{delta_embed, is_one_lipschitz, LipschitzError, LipschitzMap};
use crate::prob_metric_space::ProbMetricSpace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("scale {0} is outside (0, 1]")]
    InvalidScale(f64),
    #[error("no pair of maps clusters at point {point}; supply a longer sequence")]
    InsufficientSequence { point: usize },
    #[error("map {index} has {got} values but the space has {expected} points")]
    DomainMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("selected index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error(transparent)]
    Lipschitz(#[from] LipschitzError),
}

/// Outcome of [`extract_uniform_subsequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionReport {
    /// Strictly increasing indices into the input sequence.
    pub selected: Vec<usize>,
    /// Cluster representative: the last selected map.
    pub limit: Vec<StepCdf>,
    /// Largest `d_inf` between two selected maps.
    pub pairwise_dinf: f64,
    /// `d_inf(maps[i], limit)` for each selected `i`.
    pub residuals: Vec<f64>,
    pub lipschitz_ok: bool,
    pub eps: f64,
}

impl ExtractionReport {
    pub fn success(&self) -> bool {
        self.pairwise_dinf <= self.eps && self.lipschitz_ok
    }
}

/// Indices of the largest quantization bucket at step `eps / 4`; all pairs
/// in it are within `eps` in `d_L`. Ties go to the bucket seen first.
pub fn select_cauchy_subsequence(cdfs: &[StepCdf], eps: f64) -> Result<Vec<usize>, ExtractError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ExtractError::InvalidScale(eps));
    }
    let delta = eps / 4.0;
    let mut buckets: BTreeMap<Vec<(i64, i64)>, Vec<usize>> = BTreeMap::new();
    for (i, f) in cdfs.iter().enumerate() {
        let q = quantize(f, delta).expect("delta in (0, 1/4]");
        buckets.entry(lattice_key(&q, delta)).or_default().push(i);
    }
    Ok(buckets
        .into_values()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap_or_default())
}

/// Diagonal refinement over the points of a finite space.
///
/// At each point the current selection is narrowed to its largest bucket at
/// scale `eps / 2`, so the final selection is pairwise within `eps / 2` in
/// `d_inf`. A refinement that leaves a single map out of two or more is
/// reported as [`ExtractError::InsufficientSequence`].
pub fn extract_uniform_subsequence(
    space: &ProbMetricSpace,
    maps: &[LipschitzMap],
    eps: f64,
    cfg: &LevyConfig,
) -> Result<ExtractionReport, ExtractError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ExtractError::InvalidScale(eps));
    }
    for (index, m) in maps.iter().enumerate() {
        if m.len() != space.len() {
            return Err(ExtractError::DomainMismatch {
                index,
                expected: space.len(),
                got: m.len(),
            });
        }
    }
    if maps.is_empty() {
        return Err(ExtractError::InsufficientSequence { point: 0 });
    }
    let mut selected: Vec<usize> = (0..maps.len()).collect();
    for x in 0..space.len() {
        let column: Vec<StepCdf> = selected.iter().map(|&i| maps[i].value(x).clone()).collect();
        let keep = select_cauchy_subsequence(&column, eps / 2.0)?;
        if keep.len() < 2 && selected.len() >= 2 {
            return Err(ExtractError::InsufficientSequence { point: x });
        }
        selected = keep.into_iter().map(|k| selected[k]).collect();
    }
    let points: Vec<usize> = (0..space.len()).collect();
    let limit = maps[*selected.last().expect("nonempty")].values().to_vec();
    let mut pairwise_dinf = 0.0_f64;
    for (a, &i) in selected.iter().enumerate() {
        for &j in &selected[a + 1..] {
            let d = uniform_distance(maps[i].values(), maps[j].values(), &points, cfg)
                .expect("domains checked");
            pairwise_dinf = pairwise_dinf.max(d);
        }
    }
    let residuals = selected
        .iter()
        .map(|&i| uniform_distance(maps[i].values(), &limit, &points, cfg).expect("domains checked"))
        .collect();
    let lipschitz_ok = is_one_lipschitz(space, &limit)?.is_none();
    Ok(ExtractionReport {
        selected,
        limit,
        pairwise_dinf,
        residuals,
        lipschitz_ok,
        eps,
    })
}

/// Every map in the later half of `selected` is within `eps` of `limit`.
pub fn verify_uniform_convergence(
    space: &ProbMetricSpace,
    maps: &[LipschitzMap],
    selected: &[usize],
    limit: &[StepCdf],
    eps: f64,
    cfg: &LevyConfig,
) -> Result<bool, ExtractError> {
    if let Some(&i) = selected.iter().find(|&&i| i >= maps.len()) {
        return Err(ExtractError::IndexOutOfRange(i));
    }
    if limit.len() != space.len() {
        return Err(ExtractError::DomainMismatch {
            index: usize::MAX,
            expected: space.len(),
            got: limit.len(),
        });
    }
    let points: Vec<usize> = (0..space.len()).collect();
    for &i in &selected[selected.len() / 2..] {
        let d = uniform_distance(maps[i].values(), limit, &points, cfg).map_err(|_| {
            ExtractError::DomainMismatch {
                index: i,
                expected: space.len(),
                got: maps[i].len(),
            }
        })?;
        if d > eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of [`converse_compactness_witness`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConverseWitness {
    pub selected: Vec<usize>,
    pub cauchy_ok: bool,
    pub report: ExtractionReport,
}

/// Extracts a `d_inf`-clustered subsequence of `(delta_{x_n})` and checks
/// that the selected points themselves cluster: `d_L(D(x_i, x_j), H_0) <= eps`.
pub fn converse_compactness_witness(
    space: &ProbMetricSpace,
    pts: &[usize],
    eps: f64,
    cfg: &LevyConfig,
) -> Result<ConverseWitness, ExtractError> {
    let mut cache: BTreeMap<usize, LipschitzMap> = BTreeMap::new();
    let mut maps = Vec::with_capacity(pts.len());
    for &p in pts {
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(p) {
            e.insert(delta_embed(space, p)?);
        }
        maps.push(cache[&p].clone());
    }
    let report = extract_uniform_subsequence(space, &maps, eps, cfg)?;
    let selected = report.selected.clone();
    let cauchy_ok = selected.iter().enumerate().all(|(a, &i)| {
        selected[a + 1..]
            .iter()
            .all(|&j| levy_to_h0(space.dist(pts[i], pts[j])) <= eps)
    });
    Ok(ConverseWitness {
        selected,
        cauchy_ok,
        report,
    })
}
