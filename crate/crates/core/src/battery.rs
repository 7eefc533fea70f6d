//! Fixed, seeded collections of test maps.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::maps::{self, compose, CircleMap, KDelta, Mobius, Power, TrigLift, Zigzag};

/// A named map.
#[derive(Debug, Clone)]
pub struct Entry {
    pub label: String,
    pub map: CircleMap,
}

fn entry(label: impl Into<String>, map: CircleMap) -> Entry {
    Entry {
        label: label.into(),
        map,
    }
}

/// Random smooth lifting `d·t + Σ_{k ≤ modes} (a_k cos kt + b_k sin kt)`
/// with `|a_k|, |b_k| ≤ scale/k`.
pub fn random_trig(rng: &mut impl Rng, degree: i64, modes: usize, scale: f64) -> TrigLift {
    let mut draw = |k: usize| rng.gen_range(-scale..=scale) / k as f64;
    let cos = (1..=modes).map(&mut draw).collect();
    let sin = (1..=modes).map(&mut draw).collect();
    TrigLift { degree, cos, sin }
}

/// Random Möbius map with `|a| ≤ max_radius`.
pub fn random_mobius(rng: &mut impl Rng, max_radius: f64) -> Result<Mobius> {
    let r = max_radius * rng.gen::<f64>().sqrt();
    let a = Complex64::from_polar(r, rng.gen_range(0.0..TAU));
    Mobius::new(rng.gen_range(0.0..TAU), a)
}

/// Pairs `(h, ℳ)` for invariance checks.
pub fn mobius_pairs(count: usize, max_radius: f64, seed: u64) -> Result<Vec<(TrigLift, Mobius)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = rng.gen_range(-3i64..=3);
            let h = random_trig(&mut rng, d, 4, 0.6);
            Ok((h, random_mobius(&mut rng, max_radius)?))
        })
        .collect()
}

/// Largest phase increment per grid step allowed for battery zig-zags; kinks
/// steeper than this alias visibly in the Fourier degree.
pub const MAX_STEP: f64 = 0.15;

/// 200 maps: power maps, zig-zags and their composites with powers,
/// products with collapse maps, Möbius composites and random smooth maps.
/// Every map lives on a grid of `m` nodes; families that the grid cannot
/// resolve are skipped and replaced by random smooth maps.
pub fn standard(m: usize, seed: u64) -> Result<Vec<Entry>> {
    if m < 128 || !m.is_multiple_of(2) {
        return Err(crate::error::invalid("m", "battery grid must be even and at least 128"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(200);
    for d in -4..=4 {
        out.push(entry(format!("z^{d}"), maps::power_map(d, m)?));
    }
    for n in [2usize, 4, 8, 16, 32, 64, 128] {
        for alpha in [0.55, 0.75, 0.9] {
            let z = Zigzag::new(n, alpha)?;
            let h = TAU / m as f64;
            if z.slope() * h > MAX_STEP || !m.is_multiple_of(2 * n) {
                continue;
            }
            out.push(entry(format!("zigzag(n={n}, a={alpha})"), maps::zigzag(n, alpha, m)?));
            for d in [-2i64, 2] {
                if 2.0 * z.slope() * h > MAX_STEP {
                    continue;
                }
                let f = CircleMap::sample(&compose(Power(d), z), m)?;
                out.push(entry(format!("zigzag(n={n}, a={alpha})^{d}"), f));
            }
        }
    }
    for delta in [0.1, 0.3, 0.6] {
        if delta * m as f64 / TAU < 2.0 {
            continue;
        }
        let k = maps::kdelta(delta, m)?;
        out.push(entry(format!("K(delta={delta})"), k.clone()));
        for d in [-3i64, 1, 2] {
            let prod = maps::pointwise_product(&maps::power_map(d, m)?, &k)?;
            out.push(entry(format!("z^{d}*K(delta={delta})"), prod));
            let comp = CircleMap::sample(&compose(KDelta::new(delta)?, Power(d)), m)?;
            out.push(entry(format!("K(delta={delta})∘z^{d}"), comp));
        }
    }
    let half = out.len();
    while out.len() < half + 60 {
        let d = rng.gen_range(-4i64..=4);
        let h = random_trig(&mut rng, d, 6, 0.5);
        let mob = random_mobius(&mut rng, 0.6)?;
        let i = out.len();
        out.push(entry(
            format!("trig#{i}∘mobius"),
            CircleMap::sample(&compose(h, mob), m)?,
        ));
    }
    while out.len() < 200 {
        let d = rng.gen_range(-5i64..=5);
        let i = out.len();
        let f = if i % 3 == 0 {
            let z = maps::zigzag(8, 0.75, m)?;
            let h = CircleMap::sample(&random_trig(&mut rng, d, 5, 0.4), m)?;
            maps::pointwise_product(&z, &h)?
        } else {
            CircleMap::sample(&random_trig(&mut rng, d, 8, 0.7), m)?
        };
        out.push(entry(format!("random#{i}"), f));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_battery_is_seeded_and_sized() {
        let a = standard(1024, 3).unwrap();
        let b = standard(1024, 3).unwrap();
        assert_eq!(a.len(), 200);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.map, y.map);
        }
        assert!(a.iter().all(|e| e.map.grid_size() == 1024));
        let coarse = standard(128, 3).unwrap();
        assert_eq!(coarse.len(), 200);
        assert!(standard(64, 3).is_err());
    }

    #[test]
    fn mobius_pairs_respect_radius() {
        for (_, m) in mobius_pairs(20, 0.6, 1).unwrap() {
            assert!(m.center().norm() <= 0.6);
        }
    }
}
