use proptest::prelude::*;
use rand::Rng;

use osc_lab::bellman::{g_value, induct, psi, split_search, BellmanParams};
use osc_lab::classes::{a2_char_inf, verify_rearrangement};
use osc_lab::harness::gen::{gen_random_step, random_lipschitz, random_subinterval, stream};
use osc_lab::transforms::{compose_lipschitz, concatenate, rearrange_decreasing, truncate, weight_from_phi};
use osc_lab::{big_w, minimize_c, v_c, ConvexWeight, Interval, OptimizerConfig, StepFunction};

const STRICT: [&str; 4] = ["power:1.5", "power:2", "exp", "cosh"];
const ALL: [&str; 5] = ["power:1", "power:1.5", "power:2", "exp", "cosh"];

fn sample(seed: u64) -> StepFunction {
    gen_random_step(seed, 8, (-3.0, 3.0)).unwrap()
}

fn weight(name: &str) -> ConvexWeight {
    ConvexWeight::parse(name).unwrap()
}

fn cfg() -> OptimizerConfig {
    OptimizerConfig::default()
}

fn cheap() -> ProptestConfig {
    ProptestConfig::with_cases(128)
}

fn costly() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

/// Sorted (value, mass) pairs with equal values merged.
fn distribution(phi: &StepFunction) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = phi.segments().map(|s| (s.value, s.len)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (v, m) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += m,
            _ => out.push((v, m)),
        }
    }
    out
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn average_is_translation_equivariant(seed in any::<u64>(), tau in -5.0..5.0f64) {
        let phi = sample(seed);
        let j = random_subinterval(&mut stream(seed, "j"), 0.05);
        let shifted = phi.map_values(|v| v + tau).unwrap();
        prop_assert!((shifted.average(&j).unwrap() - phi.average(&j).unwrap() - tau).abs() < 1e-12);
    }

    #[test]
    fn average_mixes_over_a_partition(seed in any::<u64>(), s in 0.01..0.99f64) {
        let phi = sample(seed);
        let (l, r) = (Interval::new(0.0, s).unwrap(), Interval::new(s, 1.0).unwrap());
        let mixed = s * phi.average(&l).unwrap() + (1.0 - s) * phi.average(&r).unwrap();
        prop_assert!((mixed - phi.average(&Interval::UNIT).unwrap()).abs() < 1e-12);
        let restricted = phi.restrict(&l).unwrap();
        prop_assert!((restricted.average(&l).unwrap() - phi.average(&l).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn translation_and_reflection(seed in any::<u64>(), tau in -3.0..3.0f64, c in -4.0..4.0f64, k in 0..4usize) {
        let q = weight(STRICT[k]);
        let phi = sample(seed);
        let j = Interval::UNIT;
        let shifted = phi.map_values(|v| v + tau).unwrap();
        let a = v_c(&phi, &j, c, &q).unwrap();
        let b = v_c(&shifted, &j, c + tau, &q).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        let tol = 1e-7;
        let base = minimize_c(&phi, &j, &q, &cfg()).unwrap().c_star;
        prop_assert!((minimize_c(&shifted, &j, &q, &cfg()).unwrap().c_star - base - tau).abs() < tol);
        let reflected = phi.map_values(|v| -v).unwrap();
        prop_assert!((minimize_c(&reflected, &j, &q, &cfg()).unwrap().c_star + base).abs() < tol);
    }

    #[test]
    fn concatenation_identity(a in any::<u64>(), b in any::<u64>(), alpha in 0.01..0.99f64, c in -4.0..4.0f64, k in 0..5usize) {
        let q = weight(ALL[k]);
        let (minus, plus) = (sample(a), sample(b));
        let joined = concatenate(&minus, &plus, alpha).unwrap();
        let lhs = v_c(&joined, &Interval::UNIT, c, &q).unwrap();
        let rhs = alpha * v_c(&minus, &minus.domain(), c, &q).unwrap()
            + (1.0 - alpha) * v_c(&plus, &plus.domain(), c, &q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn minimum_below_every_constant(seed in any::<u64>(), k in 0..5usize) {
        let q = weight(ALL[k]);
        let phi = sample(seed);
        let v = minimize_c(&phi, &Interval::UNIT, &q, &cfg()).unwrap().value;
        let mut rng = stream(seed, "c");
        for _ in 0..100 {
            let c = rng.gen_range(phi.min_value()..=phi.max_value());
            prop_assert!(v <= v_c(&phi, &Interval::UNIT, c, &q).unwrap() + 1e-12);
        }
    }

    #[test]
    fn rescaling_invariance(seed in any::<u64>(), a in 0.0..0.9f64, frac in 0.01..1.0f64, k in 0..4usize) {
        let q = weight(STRICT[k]);
        let phi = sample(seed);
        let target = Interval::new(a, a + (1.0 - a) * frac).unwrap();
        let moved = phi.rescaled_to(target);
        let x = minimize_c(&phi, &Interval::UNIT, &q, &cfg()).unwrap();
        let y = minimize_c(&moved, &target, &q, &cfg()).unwrap();
        prop_assert!((x.value - y.value).abs() <= 1e-9 * x.value.max(1.0));
        prop_assert!((x.c_star - y.c_star).abs() < 1e-7);
    }

    #[test]
    fn quadratic_weight_gives_the_variance(seed in any::<u64>()) {
        let phi = sample(seed);
        let j = random_subinterval(&mut stream(seed, "j"), 0.05);
        let mean = phi.average(&j).unwrap();
        let var = phi.average_of(&j, |v| (v - mean) * (v - mean)).unwrap();
        let v = minimize_c(&phi, &j, &weight("power:2"), &cfg()).unwrap().value;
        prop_assert!((v - var).abs() <= 1e-12 * var.max(1.0));
    }

    #[test]
    fn rearrangement_is_equimeasurable_and_idempotent(seed in any::<u64>()) {
        let phi = sample(seed);
        let star = rearrange_decreasing(&phi).unwrap();
        prop_assert!(star.is_non_increasing());
        let (d0, d1) = (distribution(&phi), distribution(&star));
        prop_assert_eq!(d0.len(), d1.len());
        for (x, y) in d0.iter().zip(&d1) {
            prop_assert_eq!(x.0, y.0);
            prop_assert!((x.1 - y.1).abs() < 1e-12);
        }
        prop_assert_eq!(rearrange_decreasing(&star).unwrap(), star);
    }

    #[test]
    fn g_is_never_positive(seed in any::<u64>(), eps in 0.05..3.0f64, k in 0..4usize) {
        let q = weight(STRICT[k]);
        let phi = sample(seed);
        let j = random_subinterval(&mut stream(seed, "j"), 0.05);
        prop_assert!(g_value(&phi, &j, eps, &q, &cfg()).unwrap() <= 0.0);
    }

    #[test]
    fn strong_g_forces_a_large_constant(seed in any::<u64>(), eps in 0.05..3.0f64, k in 0..4usize) {
        let q = weight(STRICT[k]);
        let phi = sample(seed);
        let j = Interval::UNIT;
        let tol = 1e-7;
        let g = g_value(&phi, &j, eps, &q, &cfg()).unwrap();
        let gap = q.eval(eps) - v_c(&phi, &j, eps, &q).unwrap();
        if g > gap + tol {
            prop_assert!(minimize_c(&phi, &j, &q, &cfg()).unwrap().c_star >= eps - tol);
        }
    }
}

proptest! {
    #![proptest_config(costly())]

    #[test]
    fn w_dominates_v(seed in any::<u64>(), k in 0..5usize) {
        let q = weight(ALL[k]);
        let phi = sample(seed);
        let j = random_subinterval(&mut stream(seed, "j"), 0.05);
        let v = minimize_c(&phi, &j, &q, &cfg()).unwrap().value;
        prop_assert!(big_w(&phi, &j, &q, &cfg()).unwrap().value >= v - 1e-12 * v.max(1.0));
    }

    #[test]
    fn lipschitz_images_and_truncations_do_not_raise_w(seed in any::<u64>(), k in 0..5usize, a in -3.0..0.0f64, b in 0.0..3.0f64) {
        let q = weight(ALL[k]);
        let phi = sample(seed);
        let w = big_w(&phi, &Interval::UNIT, &q, &cfg()).unwrap().value;
        let f = random_lipschitz(&mut stream(seed, "f"), 4, (-3.0, 3.0));
        let image = compose_lipschitz(&f, &phi).unwrap();
        prop_assert!(big_w(&image, &Interval::UNIT, &q, &cfg()).unwrap().value <= w + 1e-6);
        let cut = truncate(&phi, a, b).unwrap();
        prop_assert!(big_w(&cut, &Interval::UNIT, &q, &cfg()).unwrap().value <= w + 1e-6);
    }

    #[test]
    fn monotone_functions_are_fixed_points(seed in any::<u64>(), k in 0..5usize) {
        let q = weight(ALL[k]);
        let star = rearrange_decreasing(&sample(seed)).unwrap();
        let check = verify_rearrangement(&star, &q, &cfg()).unwrap();
        prop_assert!(check.slack.abs() <= 1e-9);
    }

    #[test]
    fn weight_rearrangement_bridge(seed in any::<u64>()) {
        let phi = sample(seed);
        let w_star = rearrange_decreasing(&weight_from_phi(&phi).unwrap()).unwrap();
        let direct = a2_char_inf(&w_star, &cfg()).unwrap();
        let via_log = big_w(&rearrange_decreasing(&phi).unwrap(), &Interval::UNIT, &ConvexWeight::exp(), &cfg()).unwrap().value;
        prop_assert!((direct - via_log).abs() <= 1e-9 * via_log);
    }

    #[test]
    fn split_certificate_bounds_every_concatenation(seed in any::<u64>(), k in 0..4usize, eps in 0.5..2.0f64) {
        let q = weight(STRICT[k]);
        let raw = sample(seed);
        let j = Interval::UNIT;
        // Shrink until W sits below Q(eps / 2).
        let eps_t = eps / 2.0;
        let mut lambda = 1.0;
        let mut phi = raw.clone();
        while big_w(&phi, &j, &q, &cfg()).unwrap().value > q.eval(eps_t) {
            lambda *= 0.5;
            phi = raw.map_values(|v| v * lambda).unwrap();
        }
        let params = BellmanParams::with_half_delta(eps, eps_t, &q).unwrap();
        let s = split_search(&phi, &j, &params, &q, &cfg()).unwrap();
        let bound = q.eval(eps);
        prop_assert!(s.psi_left.max(s.psi_right) <= bound + 1e-9 * bound.max(1.0));
        for i in 1..10 {
            let alpha = i as f64 / 10.0;
            let at_c = psi(&phi, &j, s.c_used, s.t, alpha, &q).unwrap();
            let joined = concatenate(&phi.restrict(&s.j_minus).unwrap(), &phi.restrict(&s.j_plus).unwrap(), alpha).unwrap();
            let v = minimize_c(&joined, &Interval::UNIT, &q, &cfg()).unwrap().value;
            prop_assert!(v <= at_c + 1e-12 * at_c.max(1.0));
            prop_assert!(at_c <= bound + 1e-9 * bound.max(1.0));
        }
    }

    #[test]
    fn splitting_tree_keeps_level_sums_at_zero(seed in any::<u64>(), k in 0..4usize) {
        let q = weight(STRICT[k]);
        let raw = gen_random_step(seed, 8, (0.0, 3.0)).unwrap();
        let j = Interval::UNIT;
        let eps = 1.0;
        let eps_t = 0.5;
        let mut phi = raw.clone();
        let mut lambda = 1.0;
        while big_w(&phi, &j, &q, &cfg()).unwrap().value > q.eval(eps_t) {
            lambda *= 0.5;
            phi = raw.map_values(|v| v * lambda).unwrap();
        }
        let params = BellmanParams::with_half_delta(eps, eps_t, &q).unwrap();
        let rep = induct(&phi, &j, &params, &q, 5, &cfg()).unwrap();
        for s in &rep.level_sums {
            prop_assert!(s.abs() <= 1e-8);
        }
    }
}
