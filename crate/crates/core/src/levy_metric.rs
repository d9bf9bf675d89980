//! The modified Levy distance on distance distribution functions.
//!
//! For `h in (0, 1]`, condition `A(F, G; h)` asks `G(t) <= F(t + h) + h` on the
//! window `t in (0, 1/h)`; the distance is the infimum of the `h` for which
//! both `A(F, G; h)` and `A(G, F; h)` hold. The condition is monotone in `h`,
//! so the infimum is located by bisection over an exact per-`h` decision.

use thiserror::Error;

use crate::delta_plus::StepCdf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevyError {
    #[error("probe radius {0} is outside (0, 1]")]
    ProbeOutOfRange(f64),
    #[error("bisection tolerance {0} is outside (0, 1e-3]")]
    InvalidTolerance(f64),
    #[error("max_iter {got} cannot reach tolerance; need at least {need}")]
    TooFewIterations { got: u32, need: u32 },
    #[error("map is not defined at point {0}")]
    DomainMismatch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyConfig {
    bisection_tol: f64,
    max_iter: u32,
}

impl LevyConfig {
    pub fn new(bisection_tol: f64, max_iter: u32) -> Result<Self, LevyError> {
        if !(bisection_tol > 0.0 && bisection_tol <= 1e-3) {
            return Err(LevyError::InvalidTolerance(bisection_tol));
        }
        let need = (1.0 / bisection_tol).log2().ceil() as u32;
        if max_iter < need {
            return Err(LevyError::TooFewIterations {
                got: max_iter,
                need,
            });
        }
        Ok(LevyConfig {
            bisection_tol,
            max_iter,
        })
    }

    pub fn bisection_tol(&self) -> f64 {
        self.bisection_tol
    }

    pub fn max_iter(&self) -> u32 {
        self.max_iter
    }
}

impl Default for LevyConfig {
    fn default() -> Self {
        LevyConfig {
            bisection_tol: 1e-10,
            max_iter: 60,
        }
    }
}

/// Decides `A(F, G; h)`: `G(t) <= F(t + h) + h` for all `t in (0, 1/h)`.
pub fn condition_a(f: &StepCdf, g: &StepCdf, h: f64) -> Result<bool, LevyError> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(LevyError::ProbeOutOfRange(h));
    }
    Ok(condition_a_unchecked(f, g, h))
}

fn condition_a_unchecked(f: &StepCdf, g: &StepCdf, h: f64) -> bool {
    let window = 1.0 / h;
    // phi(t) = G(t) - F(t + h) is left-continuous with jumps at b_j and
    // a_i - h. Reading phi at each jump inside (0, 1/h], plus at 1/h itself,
    // visits the value of every piece that meets the window. Each candidate
    // carries the exact argument for G and for F.
    let violated = |gp: f64, fp: f64| gp > 0.0 && gp <= window && g.evaluate(gp) > f.evaluate(fp) + h;
    if violated(window, window + h) {
        return false;
    }
    if g.breaks().iter().any(|&(b, _)| violated(b, b + h)) {
        return false;
    }
    !f.breaks().iter().any(|&(a, _)| violated(a - h, a))
}

fn both_conditions(f: &StepCdf, g: &StepCdf, h: f64) -> bool {
    condition_a_unchecked(f, g, h) && condition_a_unchecked(g, f, h)
}

/// The modified Levy distance, accurate to `cfg.bisection_tol()` from above.
///
/// Returns exactly `0.0` iff `f == g` canonically, and is exactly symmetric.
pub fn levy_distance(f: &StepCdf, g: &StepCdf, cfg: &LevyConfig) -> f64 {
    if f == g {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.bisection_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if both_conditions(f, g, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Distance to `H_0`, computed exactly as the least `h in [0, 1]` with
/// `F(h+) >= 1 - h`.
pub fn levy_to_h0(f: &StepCdf) -> f64 {
    // F(h+) + h is strictly increasing and right-continuous; on each interval
    // [t_i, t_{i+1}) F(h+) is the constant v_i, so the first interval that
    // admits h >= 1 - v_i yields the minimum.
    let mut lo: f64 = 0.0;
    let mut level = 0.0;
    for &(t, v) in f.breaks() {
        let h = lo.max(1.0 - level);
        if h < t {
            return h.min(1.0);
        }
        lo = t;
        level = v;
    }
    lo.max(1.0 - level).min(1.0)
}

/// `d_inf(f, g) = max over points of d_L(f(x), g(x))` for maps stored as
/// slices indexed by point.
pub fn uniform_distance(
    f: &[StepCdf],
    g: &[StepCdf],
    points: &[usize],
    cfg: &LevyConfig,
) -> Result<f64, LevyError> {
    let mut worst = 0.0_f64;
    for &x in points {
        let (fx, gx) = match (f.get(x), g.get(x)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(LevyError::DomainMismatch(x)),
        };
        worst = worst.max(levy_distance(fx, gx, cfg));
    }
    Ok(worst)
}

/// Weak convergence through the metric: the last `tail` members are all
/// within `tol` of `limit`. False when `tail` is zero or exceeds the length.
pub fn is_weak_limit(
    seq: &[StepCdf],
    limit: &StepCdf,
    tol: f64,
    tail: usize,
    cfg: &LevyConfig,
) -> bool {
    if tail == 0 || tail > seq.len() {
        return false;
    }
    seq[seq.len() - tail..]
        .iter()
        .all(|fn_| levy_distance(fn_, limit, cfg) < tol)
}
