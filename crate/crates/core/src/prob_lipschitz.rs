//! Probabilistic 1-Lipschitz maps `f : G -> Δ⁺`, characterised by
//! `D(x, y) * f(y) <= f(x)` for every ordered pair of points.

use rand::Rng;
use thiserror::Error;

use crate::delta_plus::{leq, leq_witness, pointwise_sup, StepCdf, EPS};
use crate::levy_metric::{levy_distance, levy_to_h0, LevyConfig};
use crate::prob_metric_space::ProbMetricSpace;
use crate::triangle_functions::TriangleFunction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LipschitzError {
    #[error("map has {got} values but the domain has {expected} points")]
    DomainMismatch { expected: usize, got: usize },
    #[error("unknown point index {0}")]
    UnknownPoint(usize),
    #[error("subset is empty")]
    EmptySubset,
    #[error("scale {0} is negative")]
    NegativeScale(f64),
    #[error("map fails the Lipschitz inequality: {0}")]
    NotLipschitz(Witness),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("sampling budget exhausted")]
    BudgetExhausted,
}

/// `D(x, y) * f(y)` exceeds `f(x)` at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub x: usize,
    pub y: usize,
    pub t: f64,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "D({x},{y}) * f({y}) > f({x}) at t = {t}", x = self.x, y = self.y, t = self.t)
    }
}

/// A map certified 1-Lipschitz on the space it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzMap {
    values: Vec<StepCdf>,
}

impl LipschitzMap {
    pub fn certify(space: &ProbMetricSpace, values: Vec<StepCdf>) -> Result<Self, LipschitzError> {
        match is_one_lipschitz(space, &values)? {
            None => Ok(LipschitzMap { values }),
            Some(w) => Err(LipschitzError::NotLipschitz(w)),
        }
    }

    pub fn values(&self) -> &[StepCdf] {
        &self.values
    }

    pub fn value(&self, x: usize) -> &StepCdf {
        &self.values[x]
    }

    pub fn into_values(self) -> Vec<StepCdf> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Checks `D(x, y) * f(y) <= f(x)` over all ordered pairs; `Some(witness)` on
/// failure.
pub fn is_one_lipschitz(
    space: &ProbMetricSpace,
    f: &[StepCdf],
) -> Result<Option<Witness>, LipschitzError> {
    is_k_lipschitz(space, f, 1.0)
}

/// Same check against the rescaled distances `D_k`.
pub fn is_k_lipschitz(
    space: &ProbMetricSpace,
    f: &[StepCdf],
    k: f64,
) -> Result<Option<Witness>, LipschitzError> {
    if f.len() != space.len() {
        return Err(LipschitzError::DomainMismatch {
            expected: space.len(),
            got: f.len(),
        });
    }
    let all: Vec<usize> = (0..space.len()).collect();
    let values: Vec<&StepCdf> = f.iter().collect();
    check_on(space, &all, &values, k)
}

/// Lipschitz check restricted to `subset`, with `f[i]` the value at
/// `subset[i]`.
pub fn is_one_lipschitz_on(
    space: &ProbMetricSpace,
    subset: &[usize],
    f: &[StepCdf],
) -> Result<Option<Witness>, LipschitzError> {
    if subset.len() != f.len() {
        return Err(LipschitzError::DomainMismatch {
            expected: subset.len(),
            got: f.len(),
        });
    }
    if let Some(&p) = subset.iter().find(|&&p| !space.contains(p)) {
        return Err(LipschitzError::UnknownPoint(p));
    }
    let values: Vec<&StepCdf> = f.iter().collect();
    check_on(space, subset, &values, 1.0)
}

fn check_on(
    space: &ProbMetricSpace,
    points: &[usize],
    values: &[&StepCdf],
    k: f64,
) -> Result<Option<Witness>, LipschitzError> {
    if k < 0.0 {
        return Err(LipschitzError::NegativeScale(k));
    }
    let star = space.star();
    for (i, &x) in points.iter().enumerate() {
        for (j, &y) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = space.dist(x, y).rescale(k);
            let lhs = star.apply(&d, values[j]);
            if let Some(t) = leq_witness(&lhs, values[i], EPS) {
                return Ok(Some(Witness { x, y, t }));
            }
        }
    }
    Ok(None)
}

/// `f~_A(x) = sup_{y in A} f(y) * D(x, y)`: the least 1-Lipschitz majorant
/// of `f` built from its values on `A`. Agrees with `f` on `A` exactly when
/// `f` is 1-Lipschitz there.
pub fn upper_envelope_extension(
    space: &ProbMetricSpace,
    subset: &[usize],
    f: &[StepCdf],
) -> Result<LipschitzMap, LipschitzError> {
    if subset.is_empty() {
        return Err(LipschitzError::EmptySubset);
    }
    if subset.len() != f.len() {
        return Err(LipschitzError::DomainMismatch {
            expected: subset.len(),
            got: f.len(),
        });
    }
    if let Some(&p) = subset.iter().find(|&&p| !space.contains(p)) {
        return Err(LipschitzError::UnknownPoint(p));
    }
    let star = space.star();
    let values = (0..space.len())
        .map(|x| {
            let family: Vec<StepCdf> = subset
                .iter()
                .zip(f)
                .map(|(&y, fy)| star.apply(fy, space.dist(x, y)))
                .collect();
            pointwise_sup(&family).expect("subset is nonempty")
        })
        .collect();
    LipschitzMap::certify(space, values)
}

/// `delta_x : y -> D(y, x)`.
pub fn delta_embed(space: &ProbMetricSpace, x: usize) -> Result<LipschitzMap, LipschitzError> {
    if !space.contains(x) {
        return Err(LipschitzError::UnknownPoint(x));
    }
    let values = (0..space.len()).map(|y| space.dist(y, x).clone()).collect();
    LipschitzMap::certify(space, values)
}

/// `D_k(t) = D(t / k)` for `k > 0`, and `H_0` for `k = 0`.
pub fn rescale_distance(f: &StepCdf, k: f64) -> Result<StepCdf, LipschitzError> {
    if !(k >= 0.0) {
        return Err(LipschitzError::NegativeScale(k));
    }
    Ok(f.rescale(k))
}

/// Both sides of the inequality
/// `d_L(Fx, Fy) <= max(d_L(Dxy * Fx, Fx), d_L(Dxy * Fy, Fy))`,
/// valid whenever `Dxy * Fy <= Fx` and `Dxy * Fx <= Fy`.
pub fn equicontinuity_bound(
    dxy: &StepCdf,
    fx: &StepCdf,
    fy: &StepCdf,
    star: &dyn TriangleFunction,
    cfg: &LevyConfig,
) -> Result<(f64, f64), LipschitzError> {
    let d_fx = star.apply(dxy, fx);
    let d_fy = star.apply(dxy, fy);
    if !leq(&d_fy, fx) || !leq(&d_fx, fy) {
        return Err(LipschitzError::PreconditionViolated(
            "Dxy * Fy <= Fx and Dxy * Fx <= Fy must both hold".into(),
        ));
    }
    let lhs = levy_distance(fx, fy, cfg);
    let rhs = levy_distance(&d_fx, fx, cfg).max(levy_distance(&d_fy, fy, cfg));
    Ok((lhs, rhs))
}

/// Empirical modulus of equicontinuity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusEstimate {
    pub eta: f64,
    /// Samples drawn at the accepted `eta`.
    pub samples: usize,
}

/// Draws `D` with `d_L(D, H_0) < eta` together with an arbitrary `F`.
pub trait NearIdentitySampler {
    fn sample(&mut self, eta: f64) -> (StepCdf, StepCdf);
}

/// Default sampler: `D` concentrates enough mass below a random `h < eta`,
/// `F` is drawn from a [`crate::delta_plus::CdfSampler`].
pub struct RandomNearIdentity<R> {
    pub rng: R,
    pub cdfs: crate::delta_plus::CdfSampler,
}

impl<R: Rng> NearIdentitySampler for RandomNearIdentity<R> {
    fn sample(&mut self, eta: f64) -> (StepCdf, StepCdf) {
        let h = eta * self.rng.gen_range(0.05..0.95);
        let n = self.rng.gen_range(1..=3);
        let mut ts: Vec<f64> = (0..n).map(|_| self.rng.gen::<f64>() * h).collect();
        ts.sort_by(f64::total_cmp);
        let mut vs: Vec<f64> = (0..n).map(|_| self.rng.gen_range(0.0..1.0)).collect();
        vs.sort_by(f64::total_cmp);
        vs[n - 1] = self.rng.gen_range((1.0 - h)..=1.0);
        let mut steps: Vec<(f64, f64)> = ts.into_iter().zip(vs).collect();
        if self.rng.gen_bool(0.5) {
            steps.push((h + self.rng.gen::<f64>() * 3.0, 1.0));
        }
        let d = StepCdf::from_sorted(steps);
        debug_assert!(levy_to_h0(&d) < eta);
        (d, self.cdfs.sample(&mut self.rng))
    }
}

/// Largest `eta` in `{eps, eps/2, ..., eps/2^20}` such that every one of
/// `budget` samples with `d_L(D, H_0) < eta` satisfied `d_L(D * F, F) < eps`.
/// Finer scales would fall below the canonicalization tolerance. This is
/// evidence, not a certificate.
pub fn estimate_modulus(
    star: &dyn TriangleFunction,
    eps: f64,
    sampler: &mut dyn NearIdentitySampler,
    budget: usize,
    cfg: &LevyConfig,
) -> Result<ModulusEstimate, LipschitzError> {
    if !(eps > 0.0 && eps <= 1.0) || budget == 0 {
        return Err(LipschitzError::PreconditionViolated(format!(
            "need eps in (0, 1] and a positive budget, got eps = {eps}, budget = {budget}"
        )));
    }
    let mut eta = eps;
    for _ in 0..=20 {
        let mut drawn = 0;
        let mut ok = true;
        while drawn < budget {
            let (d, f) = sampler.sample(eta);
            if levy_to_h0(&d) >= eta {
                continue;
            }
            drawn += 1;
            if levy_distance(&star.apply(&d, &f), &f, cfg) >= eps {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(ModulusEstimate { eta, samples: drawn });
        }
        eta *= 0.5;
    }
    Err(LipschitzError::BudgetExhausted)
}

/// `count` certified maps drawn as envelopes of a small random palette over
/// one- or two-point subsets. Repeats are frequent by design, so long
/// sequences contain large clusters.
pub fn gen_lipschitz_maps<R: Rng + ?Sized>(
    space: &ProbMetricSpace,
    rng: &mut R,
    count: usize,
) -> Result<Vec<LipschitzMap>, LipschitzError> {
    if space.is_empty() {
        return Err(LipschitzError::EmptySubset);
    }
    let sampler = crate::delta_plus::CdfSampler {
        max_breaks: 3,
        horizon: 2.0,
        lattice: Some(0.25),
        full_mass: 0.7,
    };
    let palette: Vec<StepCdf> = (0..3).map(|_| sampler.sample(rng)).collect();
    let n = space.len();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(LipschitzError::BudgetExhausted);
        }
        let size = if n > 1 && rng.gen_bool(0.3) { 2 } else { 1 };
        let first = rng.gen_range(0..n);
        let mut subset = vec![first];
        if size == 2 {
            let second = (first + rng.gen_range(1..n)) % n;
            subset.push(second);
        }
        let values: Vec<StepCdf> = subset
            .iter()
            .map(|_| palette[rng.gen_range(0..palette.len())].clone())
            .collect();
        match upper_envelope_extension(space, &subset, &values) {
            Ok(m) => out.push(m),
            Err(LipschitzError::NotLipschitz(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob_metric_space::{default_labels, star_of};
    use crate::triangle_functions::{FnStar, TNorm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h(a: f64) -> StepCdf {
        StepCdf::heaviside(a).unwrap()
    }

    fn line(xs: &[f64]) -> ProbMetricSpace {
        let d: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| f64::abs(a - b)).collect())
            .collect();
        ProbMetricSpace::from_classical_metric(default_labels(xs.len()), &d, star_of(TNorm::Minimum))
            .unwrap()
    }

    #[test]
    fn deltas_and_constants_are_lipschitz() {
        let s = line(&[0.0, 0.4, 1.5, 2.0]);
        for x in 0..s.len() {
            let d = delta_embed(&s, x).unwrap();
            assert!(d.value(x).is_h0());
            assert_eq!(d.value((x + 1) % 4), s.dist((x + 1) % 4, x));
        }
        let c = StepCdf::new(&[(0.2, 0.3), (1.0, 0.9)]).unwrap();
        assert_eq!(is_one_lipschitz(&s, &vec![c; 4]).unwrap(), None);
        assert_eq!(delta_embed(&s, 9).unwrap_err(), LipschitzError::UnknownPoint(9));
    }

    #[test]
    fn heaviside_maps_follow_classical_lipschitz() {
        let s = line(&[0.0, 0.4, 1.5, 2.0]);
        // L(x) = |x - 1|, classically 1-Lipschitz
        let good: Vec<StepCdf> = [1.0, 0.6, 0.5, 1.0].iter().map(|&a| h(a)).collect();
        assert_eq!(is_one_lipschitz(&s, &good).unwrap(), None);
        // L jumps by 1.0 across a gap of 0.4
        let bad: Vec<StepCdf> = [1.0, 0.0, 0.5, 1.0].iter().map(|&a| h(a)).collect();
        let w = is_one_lipschitz(&s, &bad).unwrap().expect("violation");
        let lhs = TNorm::Minimum.apply(s.dist(w.x, w.y), &bad[w.y]);
        assert!(lhs.evaluate(w.t) > bad[w.x].evaluate(w.t));
        assert!(matches!(
            is_one_lipschitz(&s, &good[..2]),
            Err(LipschitzError::DomainMismatch { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn envelope_behaviour() {
        let s = line(&[0.0, 0.4, 1.5, 2.0]);
        let f0 = StepCdf::new(&[(0.1, 0.5), (0.3, 1.0)]).unwrap();
        let e = upper_envelope_extension(&s, &[1], std::slice::from_ref(&f0)).unwrap();
        for x in 0..4 {
            assert_eq!(e.value(x), &TNorm::Minimum.apply(&f0, s.dist(x, 1)));
        }
        // restriction to a Lipschitz map is exact
        let lip: Vec<StepCdf> = [1.0, 0.6, 0.5, 1.0].iter().map(|&a| h(a)).collect();
        let all = [0, 1, 2, 3];
        let e = upper_envelope_extension(&s, &all, &lip).unwrap();
        assert_eq!(e.values(), &lip[..]);
        // and strictly larger somewhere otherwise
        let bad: Vec<StepCdf> = [1.0, 0.0, 0.5, 1.0].iter().map(|&a| h(a)).collect();
        let e = upper_envelope_extension(&s, &all, &bad).unwrap();
        assert!(all.iter().all(|&x| leq(&bad[x], e.value(x))));
        assert_ne!(e.values(), &bad[..]);

        assert_eq!(
            upper_envelope_extension(&s, &[], &[]).unwrap_err(),
            LipschitzError::EmptySubset
        );
        assert_eq!(
            upper_envelope_extension(&s, &[8], &[f0]).unwrap_err(),
            LipschitzError::UnknownPoint(8)
        );
    }

    #[test]
    fn rescaling() {
        let f = StepCdf::new(&[(0.5, 0.5), (1.0, 1.0)]).unwrap();
        assert_eq!(rescale_distance(&f, 1.0).unwrap(), f);
        assert!(rescale_distance(&f, 0.0).unwrap().is_h0());
        assert_eq!(rescale_distance(&h(1.0), 2.0).unwrap(), h(2.0));
        assert_eq!(rescale_distance(&f, -1.0), Err(LipschitzError::NegativeScale(-1.0)));
    }

    #[test]
    fn k_lipschitz_via_rescaled_distances() {
        let s = line(&[0.0, 1.0]);
        // L(0) = 0, L(1) = 2 is 2-Lipschitz but not 1-Lipschitz
        let f = vec![h(0.0), h(2.0)];
        assert!(is_one_lipschitz(&s, &f).unwrap().is_some());
        assert_eq!(is_k_lipschitz(&s, &f, 2.0).unwrap(), None);
        assert!(is_k_lipschitz(&s, &f, 1.5).unwrap().is_some());
        // only constant maps are 0-Lipschitz
        assert!(is_k_lipschitz(&s, &f, 0.0).unwrap().is_some());
        assert_eq!(is_k_lipschitz(&s, &[h(0.3), h(0.3)], 0.0).unwrap(), None);
    }

    #[test]
    fn equicontinuity_examples() {
        let cfg = LevyConfig::default();
        let star = TNorm::Minimum;
        let f = StepCdf::new(&[(0.5, 0.5), (1.0, 1.0)]).unwrap();
        let (l, r) = equicontinuity_bound(&StepCdf::h0(), &f, &f, &star, &cfg).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        // with Dxy = H_0 the relations force Fx = Fy
        assert!(equicontinuity_bound(&StepCdf::h0(), &f, &h(0.2), &star, &cfg).is_err());
        let (l, r) = equicontinuity_bound(&h(0.3), &f, &f, &star, &cfg).unwrap();
        assert_eq!(l, 0.0);
        assert!(r > 0.0);
        let (l, r) = equicontinuity_bound(&h(0.3), &h(1.0), &h(1.2), &star, &cfg).unwrap();
        assert!(l <= r + 3e-10);
    }

    #[test]
    fn modulus_estimates() {
        let cfg = LevyConfig::default();
        let mut sampler = RandomNearIdentity {
            rng: ChaCha8Rng::seed_from_u64(3),
            cdfs: Default::default(),
        };
        let m = estimate_modulus(&TNorm::Product, 1.0, &mut sampler, 50, &cfg).unwrap();
        assert_eq!(m.eta, 1.0);
        assert_eq!(m.samples, 50);

        struct HeavisideSampler(ChaCha8Rng);
        impl NearIdentitySampler for HeavisideSampler {
            fn sample(&mut self, eta: f64) -> (StepCdf, StepCdf) {
                let a = self.0.gen::<f64>() * eta * 0.999;
                let b = self.0.gen::<f64>() * 3.0;
                (h(a), h(b))
            }
        }
        let mut hs = HeavisideSampler(ChaCha8Rng::seed_from_u64(5));
        let m = estimate_modulus(&TNorm::Minimum, 0.1, &mut hs, 100, &cfg).unwrap();
        assert_eq!(m.eta, 0.1);

        let ignore = FnStar::new("ignore-d", |_: &StepCdf, f: &StepCdf| f.clone());
        let m = estimate_modulus(&ignore, 0.2, &mut hs, 10, &cfg).unwrap();
        assert!(m.eta >= 0.1);

        let collapse = FnStar::new("collapse", |d: &StepCdf, f: &StepCdf| {
            if d.is_h0() {
                f.clone()
            } else {
                StepCdf::h_inf()
            }
        });
        assert_eq!(
            estimate_modulus(&collapse, 0.1, &mut sampler, 10, &cfg),
            Err(LipschitzError::BudgetExhausted)
        );
    }
}
