//! Independent reference implementations used as test oracles. Nothing here
//! calls the decision procedures under test; only constructors and the
//! scalar t-norm evaluation are shared.
#![allow(dead_code)]

use probmetric::cli::{Document, Meta, Payload, Report};
use probmetric::delta_plus::{CdfSampler, StepCdf};
use probmetric::prob_metric_space::{gen_space, star_of, SpaceModel};
use probmetric::triangle_functions::TNorm;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn h(a: f64) -> StepCdf {
    StepCdf::heaviside(a).unwrap()
}

/// Left-continuous evaluation by linear scan.
pub fn naive_eval(f: &StepCdf, t: f64) -> f64 {
    let mut v = 0.0;
    for &(a, x) in f.breaks() {
        if a < t {
            v = x;
        }
    }
    v
}

pub fn naive_eval_right(f: &StepCdf, t: f64) -> f64 {
    let mut v = 0.0;
    for &(a, x) in f.breaks() {
        if a <= t {
            v = x;
        }
    }
    v
}

/// Every breakpoint of every input, together with points just left and right
/// of them and a uniform grid of `step` on `[0, max + 1]`.
pub fn probe_grid(fs: &[&StepCdf], step: f64) -> Vec<f64> {
    let top = fs
        .iter()
        .flat_map(|f| f.breaks().iter().map(|b| b.0))
        .fold(0.0_f64, f64::max)
        + 1.0;
    let mut ts: Vec<f64> = (0..=(top / step).ceil() as usize).map(|k| k as f64 * step).collect();
    for f in fs {
        for &(a, _) in f.breaks() {
            ts.extend([a, a + 1e-9, (a - 1e-9).max(0.0)]);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

pub fn grid_leq(f: &StepCdf, g: &StepCdf, ts: &[f64]) -> bool {
    ts.iter().all(|&t| naive_eval(f, t) <= naive_eval(g, t) + 1e-12)
}

/// `F(t) <= G(t + tol) + tol` on the grid.
pub fn grid_leq_within(f: &StepCdf, g: &StepCdf, ts: &[f64], tol: f64) -> bool {
    ts.iter().all(|&t| naive_eval(f, t) <= naive_eval(g, t + tol) + tol)
}

pub fn grid_max(fs: &[StepCdf], t: f64) -> f64 {
    fs.iter().map(|f| naive_eval(f, t)).fold(0.0, f64::max)
}

/// `G(t) <= F(t + h) + h` checked on a step-0.01 grid over `(0, 1/h)` plus the
/// points just left of every place where `G(t) - F(t + h)` can jump.
pub fn brute_condition_a(f: &StepCdf, g: &StepCdf, h: f64) -> bool {
    let window = 1.0 / h;
    let top = f
        .breaks()
        .iter()
        .chain(g.breaks())
        .map(|b| b.0)
        .fold(0.0_f64, f64::max)
        + 1.5;
    let mut ts: Vec<f64> = Vec::new();
    let mut t = 0.005;
    while t < window.min(top) {
        ts.push(t);
        t += 0.01;
    }
    if top < window {
        ts.push(top);
    }
    let mut jumps: Vec<f64> = g.breaks().iter().map(|b| b.0).collect();
    jumps.extend(f.breaks().iter().map(|b| b.0 - h));
    jumps.push(window);
    for c in jumps {
        let left = c - 1e-9;
        if left > 0.0 && left < window {
            ts.push(left);
        }
    }
    ts.iter().all(|&t| naive_eval(g, t) <= naive_eval(f, t + h) + h)
}

fn both_brute(f: &StepCdf, g: &StepCdf, h: f64) -> bool {
    brute_condition_a(f, g, h) && brute_condition_a(g, f, h)
}

/// Least `h` on the grid `1e-4 * k` admitting both conditions. The scan is
/// coarse (step 1e-2) first, then fine inside the bracket found.
pub fn brute_levy(f: &StepCdf, g: &StepCdf) -> f64 {
    let coarse = (1..=100)
        .find(|&k| both_brute(f, g, k as f64 * 1e-2))
        .unwrap_or(100);
    let base = (coarse - 1) * 100;
    let fine = (1..=100)
        .find(|&k| both_brute(f, g, (base + k) as f64 * 1e-4))
        .unwrap_or(100);
    (base + fine) as f64 * 1e-4
}

/// `sup_{s on grid, s < x} T(F(s), L(x - s))` with grid step `step`.
pub fn brute_sup_conv(t: &TNorm, f: &StepCdf, l: &StepCdf, x: f64, step: f64) -> f64 {
    let mut best = 0.0_f64;
    let mut k = 0usize;
    loop {
        let s = k as f64 * step;
        if s >= x {
            break;
        }
        best = best.max(t.eval(naive_eval(f, s), naive_eval(l, x - s)).unwrap());
        k += 1;
    }
    best
}

/// Least `h in [0, 1]` on a `1e-5` grid with `F(h+) >= 1 - h`.
pub fn brute_levy_to_h0(f: &StepCdf) -> f64 {
    (0..=100_000)
        .map(|k| k as f64 * 1e-5)
        .find(|&h| naive_eval_right(f, h) >= 1.0 - h)
        .unwrap_or(1.0)
}

pub fn sampler(horizon: f64) -> CdfSampler {
    CdfSampler {
        horizon,
        ..CdfSampler::default()
    }
}

pub fn random_cdf<R: Rng>(rng: &mut R, horizon: f64) -> StepCdf {
    match rng.gen_range(0..10) {
        0 => h(rng.gen::<f64>() * horizon),
        1 => StepCdf::h_inf(),
        _ => sampler(horizon).sample(rng),
    }
}

/// Arbitrary canonical elements, including `H_0`, `H_inf` and lattice-valued
/// steps that collide often.
pub fn arb_cdf() -> impl Strategy<Value = StepCdf> {
    let raw = prop::collection::vec((0.0..4.0_f64, 0.01..=1.0_f64), 0..5).prop_map(|pts| {
        let mut ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut vs: Vec<f64> = pts.iter().map(|p| p.1).collect();
        ts.sort_by(f64::total_cmp);
        vs.sort_by(f64::total_cmp);
        let pairs: Vec<(f64, f64)> = ts.into_iter().zip(vs).collect();
        StepCdf::new(&pairs).unwrap()
    });
    let lattice = prop::collection::vec((0u32..12, 1u32..=4), 1..4).prop_map(|pts| {
        let mut ts: Vec<f64> = pts.iter().map(|p| p.0 as f64 * 0.25).collect();
        let mut vs: Vec<f64> = pts.iter().map(|p| p.1 as f64 * 0.25).collect();
        ts.sort_by(f64::total_cmp);
        vs.sort_by(f64::total_cmp);
        let pairs: Vec<(f64, f64)> = ts.into_iter().zip(vs).collect();
        StepCdf::new(&pairs).unwrap()
    });
    prop_oneof![
        6 => raw,
        3 => lattice,
        1 => (0.0..3.0_f64).prop_map(h),
        1 => Just(StepCdf::h0()),
        1 => Just(StepCdf::h_inf()),
    ]
}

pub fn arb_tnorm() -> impl Strategy<Value = TNorm> {
    prop_oneof![
        Just(TNorm::Minimum),
        Just(TNorm::Product),
        Just(TNorm::Lukasiewicz)
    ]
}

/// A random document of any kind with canonical contents.
pub fn random_document(rng: &mut ChaCha8Rng) -> Document {
    let meta = if rng.gen_bool(0.5) {
        Meta::seeded(rng.gen())
    } else {
        Meta::default()
    };
    let cdfs = |rng: &mut ChaCha8Rng, k: usize| -> Vec<StepCdf> {
        (0..k)
            .map(|_| {
                let horizon = 5.0 * rng.gen::<f64>();
                random_cdf(rng, horizon)
            })
            .collect()
    };
    let payload = match rng.gen_range(0..5) {
        0 => {
            let horizon = 10.0 * rng.gen::<f64>();
            Payload::Cdf(random_cdf(rng, horizon))
        }
        1 => {
            let t = TNorm::BUILTINS[rng.gen_range(0..3)].clone();
            let model = if rng.gen_bool(0.5) { SpaceModel::Metric } else { SpaceModel::Repair };
            Payload::Space(gen_space(rng.gen(), rng.gen_range(1..6), model, star_of(t)).unwrap())
        }
        2 => {
            let k = rng.gen_range(0..5);
            Payload::Map {
                domain: (0..k).map(|_| rng.gen_range(0..9)).collect(),
                values: cdfs(rng, k),
            }
        }
        3 => {
            let n = rng.gen_range(1..4);
            Payload::MapSequence((0..rng.gen_range(0..4)).map(|_| cdfs(rng, n)).collect())
        }
        _ => {
            let k = rng.gen_range(0..6);
            Payload::Report(Report {
                command: ["extract", "converse", "net"][rng.gen_range(0..3)].to_string(),
                eps: rng.gen(),
                selected: (0..k).map(|_| rng.gen_range(0..500)).collect(),
                residuals: (0..k).map(|_| rng.gen::<f64>() * 1e-3).collect(),
                pairwise_dinf: rng.gen_bool(0.7).then(|| rng.gen()),
                lipschitz_ok: rng.gen_bool(0.7).then(|| rng.gen()),
                cauchy_ok: rng.gen_bool(0.5).then(|| rng.gen()),
                success: rng.gen(),
                limit: rng.gen_bool(0.5).then(|| cdfs(rng, 3)),
            })
        }
    };
    Document::new(payload, meta)
}
