//! t-norms, the sup-convolution triangle function they induce, and
//! validators for the triangle-function axioms.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::delta_plus::{self, pointwise_sup, StepCdf, EPS};
use crate::levy_metric::{is_weak_limit, levy_distance, LevyConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriangleError {
    #[error("t-norm argument ({0}, {1}) is outside [0, 1]^2")]
    ArgOutOfRange(f64, f64),
    #[error("t-norm `{name}` fails {axiom} at ({x}, {y}, {z})")]
    TNormAxiom {
        name: String,
        axiom: &'static str,
        x: f64,
        y: f64,
        z: f64,
    },
    #[error("unknown t-norm `{0}` (expected min, prod or luka)")]
    UnknownTNorm(String),
    #[error("empty family")]
    EmptyFamily,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

type TNormFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A triangular norm on `[0, 1]`.
#[derive(Clone)]
pub enum TNorm {
    Minimum,
    Product,
    Lukasiewicz,
    Custom { name: String, op: Arc<TNormFn> },
}

impl fmt::Debug for TNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TNorm({})", self.name())
    }
}

impl TNorm {
    pub const BUILTINS: [TNorm; 3] = [TNorm::Minimum, TNorm::Product, TNorm::Lukasiewicz];

    /// Accepts `min`, `prod`, `luka` and their long forms.
    pub fn from_name(name: &str) -> Result<Self, TriangleError> {
        match name {
            "min" | "minimum" => Ok(TNorm::Minimum),
            "prod" | "product" => Ok(TNorm::Product),
            "luka" | "lukasiewicz" => Ok(TNorm::Lukasiewicz),
            other => Err(TriangleError::UnknownTNorm(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TNorm::Minimum => "min",
            TNorm::Product => "prod",
            TNorm::Lukasiewicz => "luka",
            TNorm::Custom { name, .. } => name,
        }
    }

    /// Wraps a user-supplied operation after grid-checking the t-norm axioms
    /// and left-continuity at step `1/64`.
    pub fn custom<F>(name: &str, op: F) -> Result<Self, TriangleError>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let t = TNorm::Custom {
            name: name.to_string(),
            op: Arc::new(op),
        };
        t.grid_check(64)?;
        Ok(t)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, TriangleError> {
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(TriangleError::ArgOutOfRange(x, y));
        }
        Ok(self.op(x, y))
    }

    pub(crate) fn op(&self, x: f64, y: f64) -> f64 {
        match self {
            TNorm::Minimum => x.min(y),
            TNorm::Product => x * y,
            TNorm::Lukasiewicz => (x + y - 1.0).max(0.0),
            TNorm::Custom { op, .. } => op(x, y).clamp(0.0, 1.0),
        }
    }

    /// Checks commutativity, associativity, monotonicity, the boundary
    /// condition and left-continuity on the grid `{k / steps}`.
    pub fn grid_check(&self, steps: u32) -> Result<(), TriangleError> {
        let grid: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        let fail = |axiom, x, y, z| TriangleError::TNormAxiom {
            name: self.name().to_string(),
            axiom,
            x,
            y,
            z,
        };
        let tol = 1e-12;
        for &x in &grid {
            if (self.op(x, 1.0) - x).abs() > tol {
                return Err(fail("boundary", x, 1.0, 0.0));
            }
            for (j, &y) in grid.iter().enumerate() {
                let xy = self.op(x, y);
                if (xy - self.op(y, x)).abs() > tol {
                    return Err(fail("commutativity", x, y, 0.0));
                }
                if j + 1 < grid.len() && xy > self.op(x, grid[j + 1]) + tol {
                    return Err(fail("monotonicity", x, y, grid[j + 1]));
                }
                if x > 0.0 && (xy - self.op(x - 1e-9, y)).abs() > 1e-6 {
                    return Err(fail("left-continuity", x, y, 0.0));
                }
                for &z in &grid {
                    let lhs = self.op(x, self.op(y, z));
                    let rhs = self.op(self.op(x, y), z);
                    if (lhs - rhs).abs() > tol {
                        return Err(fail("associativity", x, y, z));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A binary operation on distance distribution functions.
pub trait TriangleFunction: Send + Sync {
    fn apply(&self, f: &StepCdf, l: &StepCdf) -> StepCdf;
    fn name(&self) -> &str;
}

pub type Star = Arc<dyn TriangleFunction>;

impl TriangleFunction for TNorm {
    fn apply(&self, f: &StepCdf, l: &StepCdf) -> StepCdf {
        sup_convolution(self, f, l)
    }

    fn name(&self) -> &str {
        TNorm::name(self)
    }
}

/// A triangle-function candidate given by a closure; no axioms are assumed.
pub struct FnStar<F> {
    name: String,
    op: F,
}

impl<F> FnStar<F>
where
    F: Fn(&StepCdf, &StepCdf) -> StepCdf + Send + Sync,
{
    pub fn new(name: &str, op: F) -> Self {
        FnStar {
            name: name.to_string(),
            op,
        }
    }
}

impl<F> TriangleFunction for FnStar<F>
where
    F: Fn(&StepCdf, &StepCdf) -> StepCdf + Send + Sync,
{
    fn apply(&self, f: &StepCdf, l: &StepCdf) -> StepCdf {
        (self.op)(f, l)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// `(F *_T L)(t) = sup_{s + u = t} T(F(s), L(u))`, computed exactly.
///
/// For left-continuous `T` the supremum reduces to
/// `max_i T(v_i, L(t - a_i))` over the breakpoints `(a_i, v_i)` of `F`, and the
/// result can only jump at sums `a_i + b_j`.
pub fn sup_convolution(t: &TNorm, f: &StepCdf, l: &StepCdf) -> StepCdf {
    if f.is_h_inf() || l.is_h_inf() {
        return StepCdf::h_inf();
    }
    let mut sums: Vec<f64> = f
        .breaks()
        .iter()
        .flat_map(|a| l.breaks().iter().map(move |b| a.0 + b.0))
        .collect();
    sums.sort_by(f64::total_cmp);
    sums.dedup_by(|next, kept| *next - *kept <= EPS);

    let value_at = |x: f64| {
        f.breaks()
            .iter()
            .take_while(|a| a.0 < x)
            .map(|&(a, v)| t.op(v, l.evaluate(x - a)))
            .fold(0.0, f64::max)
    };
    let steps = sums.iter().enumerate().map(|(k, &c)| {
        let probe = match sums.get(k + 1) {
            Some(&next) => c + 0.5 * (next - c),
            None => c + 1.0,
        };
        (c, value_at(probe))
    });
    StepCdf::from_sorted(steps.collect::<Vec<_>>())
}

/// Names used in [`AxiomReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Closure,
    Commutativity,
    Associativity,
    NeutralElement,
    Monotonicity,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::Closure,
        Axiom::Commutativity,
        Axiom::Associativity,
        Axiom::NeutralElement,
        Axiom::Monotonicity,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Axiom::Closure => "closure",
            Axiom::Commutativity => "commutativity",
            Axiom::Associativity => "associativity",
            Axiom::NeutralElement => "neutral element",
            Axiom::Monotonicity => "monotonicity",
        }
    }
}

/// First failing sample for an axiom.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub sample: usize,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub samples: usize,
    pub results: Vec<(Axiom, Option<Counterexample>)>,
}

impl AxiomReport {
    pub fn passed(&self, axiom: Axiom) -> bool {
        self.results
            .iter()
            .any(|(a, cx)| *a == axiom && cx.is_none())
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|(_, cx)| cx.is_none())
    }
}

/// Runs the triangle-function axioms on each sample triple `(F, L, K)`.
///
/// Monotonicity is probed with the comparable pair `F <= sup(F, L)`.
/// Commutativity, associativity and the neutral element are compared with
/// [`delta_plus::approx_eq`] at `tol`.
pub fn check_triangle_axioms(
    star: &dyn TriangleFunction,
    samples: &[(StepCdf, StepCdf, StepCdf)],
    tol: f64,
) -> AxiomReport {
    let mut found: [Option<Counterexample>; 5] = Default::default();
    let h0 = StepCdf::h0();
    for (i, (f, l, k)) in samples.iter().enumerate() {
        let fl = star.apply(f, l);
        let checks: [(Axiom, Box<dyn Fn() -> Option<String> + '_>); 5] = [
            (
                Axiom::Closure,
                Box::new(|| (!fl.is_canonical()).then(|| format!("F*L = {fl:?} is not canonical"))),
            ),
            (
                Axiom::Commutativity,
                Box::new(|| {
                    let lf = star.apply(l, f);
                    (!delta_plus::approx_eq(&fl, &lf, tol))
                        .then(|| format!("F*L = {fl:?} but L*F = {lf:?}"))
                }),
            ),
            (
                Axiom::Associativity,
                Box::new(|| {
                    let left = star.apply(&fl, k);
                    let right = star.apply(f, &star.apply(l, k));
                    (!delta_plus::approx_eq(&left, &right, tol))
                        .then(|| format!("(F*L)*K = {left:?} but F*(L*K) = {right:?}"))
                }),
            ),
            (
                Axiom::NeutralElement,
                Box::new(|| {
                    let fh = star.apply(f, &h0);
                    (!delta_plus::approx_eq(&fh, f, tol))
                        .then(|| format!("F*H_0 = {fh:?} but F = {f:?}"))
                }),
            ),
            (
                Axiom::Monotonicity,
                Box::new(|| {
                    let upper = delta_plus::sup2(f, l);
                    let lo = star.apply(f, k);
                    let hi = star.apply(&upper, k);
                    (!delta_plus::leq_within(&lo, &hi, tol.max(EPS)))
                        .then(|| format!("F <= G but F*K = {lo:?} exceeds G*K = {hi:?}"))
                }),
            ),
        ];
        for (slot, (_, check)) in found.iter_mut().zip(checks.iter()) {
            if slot.is_none() {
                if let Some(detail) = check() {
                    *slot = Some(Counterexample { sample: i, detail });
                }
            }
        }
    }
    AxiomReport {
        samples: samples.len(),
        results: Axiom::ALL.iter().copied().zip(found).collect(),
    }
}

/// `sup_i (F_i * L) == (sup_i F_i) * L` within `tol`.
pub fn check_sup_continuity(
    star: &dyn TriangleFunction,
    family: &[StepCdf],
    l: &StepCdf,
    tol: f64,
) -> Result<bool, TriangleError> {
    if family.is_empty() {
        return Err(TriangleError::EmptyFamily);
    }
    let images: Vec<StepCdf> = family.iter().map(|f| star.apply(f, l)).collect();
    let lhs = pointwise_sup(&images).map_err(|_| TriangleError::EmptyFamily)?;
    let rhs = star.apply(&pointwise_sup(family).map_err(|_| TriangleError::EmptyFamily)?, l);
    Ok(delta_plus::approx_eq(&lhs, &rhs, tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub holds: bool,
    /// Largest `d_L(F_n * L_n, F * L)` over the tail.
    pub max_distance: f64,
    /// Index of the first tail member at distance `>= 3 tol`.
    pub witness: Option<usize>,
}

/// Continuity of `star` at `(F, L)` along the supplied convergent sequences:
/// on the last `tail` indices, `d_L(F_n * L_n, F * L) < 3 tol`.
#[allow(clippy::too_many_arguments)]
pub fn check_weak_continuity(
    star: &dyn TriangleFunction,
    f_seq: &[StepCdf],
    f: &StepCdf,
    l_seq: &[StepCdf],
    l: &StepCdf,
    tol: f64,
    tail: usize,
    cfg: &LevyConfig,
) -> Result<ContinuityReport, TriangleError> {
    if f_seq.len() != l_seq.len() {
        return Err(TriangleError::PreconditionViolated(format!(
            "sequence lengths differ ({} vs {})",
            f_seq.len(),
            l_seq.len()
        )));
    }
    if !is_weak_limit(f_seq, f, tol, tail, cfg) || !is_weak_limit(l_seq, l, tol, tail, cfg) {
        return Err(TriangleError::PreconditionViolated(format!(
            "inputs do not converge at tol {tol} over the last {tail} terms"
        )));
    }
    let target = star.apply(f, l);
    let start = f_seq.len() - tail;
    let mut report = ContinuityReport {
        holds: true,
        max_distance: 0.0,
        witness: None,
    };
    for n in start..f_seq.len() {
        let d = levy_distance(&star.apply(&f_seq[n], &l_seq[n]), &target, cfg);
        report.max_distance = report.max_distance.max(d);
        if d >= 3.0 * tol && report.witness.is_none() {
            report.holds = false;
            report.witness = Some(n);
        }
    }
    Ok(report)
}
