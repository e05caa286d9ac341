//! Seeded random inputs.
//!
//! Every sample draws from its own ChaCha8 stream seeded by
//! `mix(master, index)`, so a sample is reproducible in isolation and
//! serial and parallel runs see identical data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::steps::{Interval, StepFunction};
use crate::transforms::LipschitzPL;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `index` under `master`.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Independent sub-stream of a sample, labelled by a short tag.
pub fn stream(seed: u64, tag: &str) -> ChaCha8Rng {
    let h = tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ h))
}

/// Random step function on `[0, 1]`: `k` uniform in `[1, k_max]`, cut points
/// uniform (a uniform draw from the simplex of lengths), values uniform in
/// `value_range`.
pub fn gen_random_step(seed: u64, k_max: usize, value_range: (f64, f64)) -> Result<StepFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_step(&mut rng, k_max, value_range)
}

pub fn random_step(rng: &mut impl Rng, k_max: usize, (lo, hi): (f64, f64)) -> Result<StepFunction> {
    if k_max == 0 {
        return Err(Error::Argument("k_max must be at least 1".into()));
    }
    if !(lo < hi) {
        return Err(Error::Argument(format!("empty value range [{lo}, {hi}]")));
    }
    let k = rng.gen_range(1..=k_max);
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut knots = Vec::with_capacity(k + 1);
    knots.push(0.0);
    knots.extend(cuts);
    knots.push(1.0);
    let values = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
    StepFunction::from_knots(Interval::UNIT, knots, values)
}

/// Random step function whose knots are multiples of `1 / lattice`.
pub fn random_lattice_step(
    rng: &mut impl Rng,
    k_max: usize,
    lattice: usize,
    (lo, hi): (f64, f64),
) -> Result<StepFunction> {
    if k_max == 0 || lattice < k_max {
        return Err(Error::Argument(format!("need 1 <= k_max <= lattice, got {k_max}, {lattice}")));
    }
    let k = rng.gen_range(1..=k_max);
    let mut cuts: Vec<usize> = Vec::with_capacity(k - 1);
    while cuts.len() < k - 1 {
        let c = rng.gen_range(1..lattice);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut knots = vec![0.0];
    knots.extend(cuts.iter().map(|&c| c as f64 / lattice as f64));
    knots.push(1.0);
    let values = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
    StepFunction::from_knots(Interval::UNIT, knots, values)
}

/// Random subinterval of `[0, 1]` with length at least `min_len`.
pub fn random_subinterval(rng: &mut impl Rng, min_len: f64) -> Interval {
    let len = rng.gen_range(min_len..=1.0);
    let a = rng.gen_range(0.0..=1.0 - len);
    let b = (a + len).min(1.0);
    Interval::new(a, b).expect("random subinterval is valid")
}

/// Random 1-Lipschitz piecewise-linear map: up to `max_breaks` breakpoints
/// in `span`, slopes uniform in `[-1, 1]`.
pub fn random_lipschitz(rng: &mut impl Rng, max_breaks: usize, span: (f64, f64)) -> LipschitzPL {
    let m = rng.gen_range(0..=max_breaks);
    let mut breaks: Vec<f64> = (0..m).map(|_| rng.gen_range(span.0..span.1)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let slopes = (0..=breaks.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let anchor = rng.gen_range(span.0..span.1);
    LipschitzPL::new(breaks, slopes, anchor).expect("generated map is 1-Lipschitz")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = gen_random_step(42, 8, (-3.0, 3.0)).unwrap();
        let b = gen_random_step(42, 8, (-3.0, 3.0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_random_step(43, 8, (-3.0, 3.0)).unwrap());
    }

    #[test]
    fn single_segment_when_k_max_is_one() {
        for seed in 0..50 {
            assert_eq!(gen_random_step(seed, 1, (-3.0, 3.0)).unwrap().num_segments(), 1);
        }
    }

    #[test]
    fn total_mass_is_one() {
        for i in 0..10_000 {
            let f = gen_random_step(sample_seed(7, i), 8, (-3.0, 3.0)).unwrap();
            let total: f64 = f.segments().map(|s| s.len).sum();
            assert!((total - 1.0).abs() < 1e-14);
            assert_eq!(*f.knots().last().unwrap(), 1.0);
            assert!(f.values().iter().all(|v| (-3.0..3.0).contains(v)));
        }
    }

    #[test]
    fn sample_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| sample_seed(1, i)).collect();
        assert_eq!(s.len(), 1000);
    }

    #[test]
    fn lattice_knots() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let f = random_lattice_step(&mut rng, 5, 64, (-3.0, 3.0)).unwrap();
            for &k in f.knots() {
                assert_eq!((k * 64.0).fract(), 0.0);
            }
        }
    }

    #[test]
    fn lipschitz_slopes_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let f = random_lipschitz(&mut rng, 4, (-3.0, 3.0));
            assert!(f.slopes().iter().all(|s| s.abs() <= 1.0));
        }
    }
}
