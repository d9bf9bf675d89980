//! Distance distribution functions vanishing at the origin.
//!
//! A [`StepCdf`] is a left-continuous, nondecreasing pure-jump function with
//! finitely many breakpoints `(t_i, v_i)`: it is `0` on `(-inf, t_1]`, `v_i` on
//! `(t_i, t_{i+1}]` and `v_n` on `(t_n, +inf)`. The value at `+inf` is `1` by
//! convention, so a last value below one encodes mass escaping to infinity.
//! The empty sequence is `H_inf`, identically zero on the reals.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Absolute tolerance for values and breakpoints during canonicalization.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeltaError {
    #[error("breakpoint {0} is negative or not finite")]
    NegativeBreakpoint(f64),
    #[error("values must be nondecreasing in t: {prev} at earlier breakpoint exceeds {next} at t = {at}")]
    NonMonotoneValue { at: f64, prev: f64, next: f64 },
    #[error("value {0} is outside (0, 1]")]
    ValueOutOfRange(f64),
    #[error("supremum of an empty family")]
    EmptyFamily,
    #[error("quantization step {0} is outside (0, 1]")]
    InvalidDelta(f64),
}

/// An element of the space of distance distribution functions, in canonical
/// form: breakpoints and values both strictly increasing, values in `(0, 1]`.
#[derive(Clone, Default)]
pub struct StepCdf {
    breaks: Vec<(f64, f64)>,
}

impl StepCdf {
    /// Builds a canonical step function from unordered `(t, v)` pairs.
    ///
    /// Pairs are sorted by `t`; duplicates and repeated values are merged.
    pub fn new(points: &[(f64, f64)]) -> Result<Self, DeltaError> {
        for &(t, v) in points {
            if !t.is_finite() || t < 0.0 {
                return Err(DeltaError::NegativeBreakpoint(t));
            }
            if !(v > 0.0 && v <= 1.0) {
                return Err(DeltaError::ValueOutOfRange(v));
            }
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for w in sorted.windows(2) {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            if t1 - t0 > EPS && v1 < v0 - EPS {
                return Err(DeltaError::NonMonotoneValue {
                    at: t1,
                    prev: v0,
                    next: v1,
                });
            }
        }
        Ok(Self::from_sorted(sorted))
    }

    /// Canonicalizes a sequence sorted by breakpoint. Values may be zero and
    /// are clamped into `[0, 1]`; a running maximum enforces monotonicity.
    pub(crate) fn from_sorted<I>(steps: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut breaks: Vec<(f64, f64)> = Vec::new();
        let mut level = 0.0_f64;
        for (t, v) in steps {
            let t = t.max(0.0);
            let mut v = v.clamp(0.0, 1.0);
            if v > 1.0 - EPS {
                v = 1.0;
            }
            if v <= level + EPS {
                continue;
            }
            level = v;
            match breaks.last_mut() {
                Some(last) if t - last.0 <= EPS => last.1 = v,
                _ => breaks.push((t, v)),
            }
        }
        StepCdf { breaks }
    }

    /// `H_a`, the unit jump just after `a`. `f64::INFINITY` gives `H_inf`.
    pub fn heaviside(a: f64) -> Result<Self, DeltaError> {
        if a == f64::INFINITY {
            return Ok(Self::h_inf());
        }
        if !(a >= 0.0) {
            return Err(DeltaError::NegativeBreakpoint(a));
        }
        Ok(StepCdf {
            breaks: vec![(a, 1.0)],
        })
    }

    /// The maximal element `H_0`.
    pub fn h0() -> Self {
        StepCdf {
            breaks: vec![(0.0, 1.0)],
        }
    }

    /// The minimal element `H_inf`.
    pub fn h_inf() -> Self {
        StepCdf { breaks: Vec::new() }
    }

    pub fn breaks(&self) -> &[(f64, f64)] {
        &self.breaks
    }

    pub fn is_h_inf(&self) -> bool {
        self.breaks.is_empty()
    }

    pub fn is_h0(&self) -> bool {
        *self == Self::h0()
    }

    /// Value approached as `t -> +inf` on the reals.
    pub fn tail_value(&self) -> f64 {
        self.breaks.last().map_or(0.0, |b| b.1)
    }

    /// Left-continuous evaluation: `v_i` for the largest `i` with `t_i < t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 1.0;
        }
        let idx = self.breaks.partition_point(|b| b.0 < t);
        if idx == 0 {
            0.0
        } else {
            self.breaks[idx - 1].1
        }
    }

    /// Right limit `F(t+)`: `v_i` for the largest `i` with `t_i <= t`.
    pub fn evaluate_right(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 1.0;
        }
        let idx = self.breaks.partition_point(|b| b.0 <= t);
        if idx == 0 {
            0.0
        } else {
            self.breaks[idx - 1].1
        }
    }

    /// `D_k(t) = D(t / k)`; `k = 0` gives `H_0`.
    pub fn rescale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::h0();
        }
        StepCdf {
            breaks: self.breaks.iter().map(|&(t, v)| (t * k, v)).collect(),
        }
    }

    /// Checks the structural invariants directly rather than trusting the
    /// constructor. Used by closure checks on user-supplied operations.
    pub fn is_canonical(&self) -> bool {
        if let Some(first) = self.breaks.first() {
            if !(first.0 >= 0.0) {
                return false;
            }
        }
        self.breaks
            .iter()
            .all(|&(t, v)| t.is_finite() && v > 0.0 && v <= 1.0)
            && self
                .breaks
                .windows(2)
                .all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1)
    }

    /// Canonical equality within an absolute tolerance on every component.
    pub fn canonical_eq(&self, other: &StepCdf, tol: f64) -> bool {
        self.breaks.len() == other.breaks.len()
            && self
                .breaks
                .iter()
                .zip(&other.breaks)
                .all(|(a, b)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol)
    }
}

impl PartialEq for StepCdf {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_eq(other, EPS)
    }
}

impl fmt::Debug for StepCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.breaks.is_empty() {
            return write!(f, "H_inf");
        }
        f.debug_list().entries(self.breaks.iter()).finish()
    }
}

/// `F <= G` pointwise, up to the canonicalization tolerance.
pub fn leq(f: &StepCdf, g: &StepCdf) -> bool {
    leq_witness(f, g, EPS).is_none()
}

/// `F(t) <= G(t + tol) + tol` for every real `t`.
pub fn leq_within(f: &StepCdf, g: &StepCdf, tol: f64) -> bool {
    leq_witness(f, g, tol).is_none()
}

/// Returns a point `t` with `F(t) > G(t + tol) + tol`, if one exists.
///
/// `t -> F(t) - G(t + tol)` is a left-continuous step function whose jumps lie
/// in `{a_i} ∪ {b_j - tol}`; on the piece to the right of each jump its value
/// is read from right limits.
pub fn leq_witness(f: &StepCdf, g: &StepCdf, tol: f64) -> Option<f64> {
    // (position for F, position for G) with the G position = F position + tol,
    // kept separate so that shifted breakpoints are read without rounding.
    let mut cands: Vec<(f64, f64)> = f.breaks.iter().map(|b| (b.0, b.0 + tol)).collect();
    cands.extend(g.breaks.iter().map(|b| (b.0 - tol, b.0)));
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (k, &(fp, gp)) in cands.iter().enumerate() {
        if f.evaluate_right(fp) > g.evaluate_right(gp) + tol {
            let next = cands[k + 1..].iter().map(|c| c.0).find(|&c| c > fp);
            return Some(match next {
                Some(n) => fp + (n - fp) / 2.0,
                None => fp + 1.0,
            });
        }
    }
    None
}

/// Equality up to a shift-and-lift tolerance: mutual [`leq_within`].
pub fn approx_eq(f: &StepCdf, g: &StepCdf, tol: f64) -> bool {
    leq_within(f, g, tol) && leq_within(g, f, tol)
}

/// Exact pointwise supremum of a finite nonempty family.
pub fn pointwise_sup(family: &[StepCdf]) -> Result<StepCdf, DeltaError> {
    if family.is_empty() {
        return Err(DeltaError::EmptyFamily);
    }
    let mut ts: Vec<f64> = family
        .iter()
        .flat_map(|f| f.breaks.iter().map(|b| b.0))
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    Ok(StepCdf::from_sorted(ts.into_iter().map(|t| {
        let v = family
            .iter()
            .map(|f| f.evaluate_right(t))
            .fold(0.0, f64::max);
        (t, v)
    })))
}

/// Pointwise supremum of two elements.
pub fn sup2(f: &StepCdf, g: &StepCdf) -> StepCdf {
    pointwise_sup(&[f.clone(), g.clone()]).expect("nonempty family")
}

/// Rounds `F` down onto the finite lattice of step functions with
/// breakpoints in `{k * delta : k * delta <= 1 / delta}` and values in
/// `delta * Z`. The result is below `F` and within `2 * delta` in the
/// modified Levy distance.
pub fn quantize(f: &StepCdf, delta: f64) -> Result<StepCdf, DeltaError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(DeltaError::InvalidDelta(delta));
    }
    let last_k = (1.0 / (delta * delta) + 1e-9).floor() as u64;
    // F(k delta +) = v_i for the largest i with t_i <= k delta, so breakpoint
    // t_i first shows on the grid at k = ceil(t_i / delta).
    let steps = f.breaks.iter().filter_map(|&(t, v)| {
        let k = (t / delta - 1e-9).ceil().max(0.0) as u64;
        if k > last_k {
            return None;
        }
        let level = (v / delta + 1e-9).floor() * delta;
        Some((k as f64 * delta, level.min(v)))
    });
    Ok(StepCdf::from_sorted(steps))
}

/// Lattice coordinates of a quantized element, usable as a hash key.
pub fn lattice_key(q: &StepCdf, delta: f64) -> Vec<(i64, i64)> {
    q.breaks
        .iter()
        .map(|&(t, v)| ((t / delta).round() as i64, (v / delta).round() as i64))
        .collect()
}

/// Shape of randomly drawn elements.
#[derive(Debug, Clone, Copy)]
pub struct CdfSampler {
    pub max_breaks: usize,
    /// Breakpoints are drawn from `[0, horizon]`.
    pub horizon: f64,
    /// When set, breakpoints are multiples of this step and values multiples
    /// of `0.05`.
    pub lattice: Option<f64>,
    /// Probability that the last value is forced to one.
    pub full_mass: f64,
}

impl Default for CdfSampler {
    fn default() -> Self {
        CdfSampler {
            max_breaks: 4,
            horizon: 3.0,
            lattice: None,
            full_mass: 0.6,
        }
    }
}

impl CdfSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StepCdf {
        let n = rng.gen_range(1..=self.max_breaks.max(1));
        let mut ts: Vec<f64> = (0..n)
            .map(|_| match self.lattice {
                Some(step) => {
                    let cells = (self.horizon / step).floor().max(1.0) as u64;
                    rng.gen_range(0..=cells) as f64 * step
                }
                None => rng.gen::<f64>() * self.horizon,
            })
            .collect();
        ts.sort_by(f64::total_cmp);
        let mut vs: Vec<f64> = (0..n)
            .map(|_| match self.lattice {
                Some(_) => rng.gen_range(1..=20) as f64 * 0.05,
                None => rng.gen::<f64>().max(1e-3),
            })
            .collect();
        vs.sort_by(f64::total_cmp);
        if rng.gen_bool(self.full_mass.clamp(0.0, 1.0)) {
            vs[n - 1] = 1.0;
        }
        StepCdf::from_sorted(ts.into_iter().zip(vs))
    }
}

impl Eq for StepCdf {}

impl PartialOrd for StepCdf {
    /// The lattice order; `None` for incomparable pairs.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (leq(self, other), leq(other, self)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}
