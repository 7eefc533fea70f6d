//! Topological degree by lifting closure and by the Fourier sum `Σ n|a_n|²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::{self, check_exponent};
use crate::error::{Error, Result};
use crate::geometry::TorusRegion;
use crate::maps::CircleMap;

/// Residual at or above which the Fourier route is declared unresolved.
pub const FOURIER_FAILURE_RESIDUAL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub winding_degree: i64,
    pub fourier_degree_raw: f64,
    pub fourier_degree: i64,
    /// `|raw − nearest integer|`.
    pub residual: f64,
}

impl DegreeReport {
    pub fn routes_agree(&self) -> bool {
        self.winding_degree == self.fourier_degree
    }
}

/// Degree from the stored lifting closure.
pub fn degree_winding(f: &CircleMap) -> i64 {
    f.winding()
}

/// `Σ n|a_n|²` over the computed coefficients, without rounding.
pub fn fourier_degree_raw(f: &CircleMap) -> f64 {
    let coeffs = f.fourier();
    let cutoff = (coeffs.len() / 2) as i64;
    coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| (i as i64 - cutoff) as f64 * a.norm_sqr())
        .sum()
}

/// Both routes, failing when the Fourier sum is not within
/// [`FOURIER_FAILURE_RESIDUAL`] of an integer.
pub fn degree_fourier(f: &CircleMap) -> Result<DegreeReport> {
    let raw = fourier_degree_raw(f);
    let nearest = raw.round();
    let residual = (raw - nearest).abs();
    if residual >= FOURIER_FAILURE_RESIDUAL {
        return Err(Error::FourierDegreeUnresolved { raw, residual });
    }
    Ok(DegreeReport {
        winding_degree: degree_winding(f),
        fourier_degree_raw: raw,
        fourier_degree: nearest as i64,
        residual,
    })
}

/// For `p = 2`, `|f|² − 4π²|deg f|` from the spectral energy, which is
/// nonnegative. For other `p`, the ratio `|deg f| / E_p(f)` at the given
/// quadrature resolution.
pub fn bbm_bound_margin(f: &CircleMap, p: f64, resolution: usize) -> Result<f64> {
    check_exponent(p)?;
    let d = degree_winding(f).unsigned_abs() as f64;
    if p == 2.0 {
        let spectral = energy::spectral_energy_p2(f).value;
        return Ok(spectral - 4.0 * PI * PI * d);
    }
    let e = energy::gagliardo_energy(f, p, &TorusRegion::Full, resolution)?.value;
    Ok(if e == 0.0 { 0.0 } else { d / e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{compose, kdelta, pointwise_product, power_map, zigzag, Mobius, Power, TrigLift, Zigzag};
    use proptest::prelude::*;

    #[test]
    fn power_maps_are_exact() {
        for d in -4..=4 {
            let f = power_map(d, 128).unwrap();
            let r = degree_fourier(&f).unwrap();
            assert_eq!(r.winding_degree, d);
            assert!((r.fourier_degree_raw - d as f64).abs() < 1e-12);
            assert!(bbm_bound_margin(&f, 2.0, 64).unwrap().abs() < 1e-9 * (1.0 + d.abs() as f64));
        }
    }

    #[test]
    fn family_degrees() {
        assert_eq!(degree_winding(&zigzag(8, 0.75, 512).unwrap()), 1);
        assert_eq!(degree_winding(&kdelta(0.3, 512).unwrap()), 1);
        let prod = pointwise_product(&power_map(2, 1024).unwrap(), &kdelta(0.3, 1024).unwrap()).unwrap();
        let r = degree_fourier(&prod).unwrap();
        assert_eq!(r.fourier_degree, 3);
        assert!(r.routes_agree());
    }

    #[test]
    fn zigzag_composites_keep_degree() {
        for d in [-2i64, 1, 3] {
            let f = CircleMap::sample(&compose(Zigzag::new(16, 0.75).unwrap(), Power(d)), 4096).unwrap();
            let r = degree_fourier(&f).unwrap();
            assert_eq!(r.winding_degree, d);
            assert!(r.routes_agree(), "{r:?}");
            assert!(r.residual < 0.1);
        }
    }

    #[test]
    fn mobius_reparametrization_keeps_degree() {
        let m = Mobius::from_triples([0.1, 2.0, 4.0], [0.5, 1.5, 5.0]).unwrap();
        let f = power_map(3, 512).unwrap().compose(&m).unwrap();
        let r = degree_fourier(&f).unwrap();
        assert_eq!(r.fourier_degree, 3);
        assert_eq!(r.winding_degree, 3);
    }

    #[test]
    fn constant_margin_is_zero() {
        assert_eq!(bbm_bound_margin(&power_map(0, 64).unwrap(), 2.0, 32).unwrap(), 0.0);
        assert_eq!(bbm_bound_margin(&power_map(0, 64).unwrap(), 3.0, 32).unwrap(), 0.0);
    }

    #[test]
    fn unresolved_fourier_degree_is_reported() {
        // winding 4 on 16 nodes with unevenly split increments
        let step = 2.0 * 2.0 * PI * 4.0 / 16.0;
        let mut samples = vec![0.0];
        for j in 0..15 {
            let inc = if j % 2 == 0 { 3.0 } else { step - 3.0 };
            samples.push(samples[j] + inc);
        }
        let f = CircleMap::from_samples(samples, 4).unwrap();
        match degree_fourier(&f) {
            Err(Error::FourierDegreeUnresolved { raw, residual }) => {
                assert!((raw - 0.5644800322394681).abs() < 1e-9);
                assert!(residual >= FOURIER_FAILURE_RESIDUAL);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn p2_margin_nonnegative(
            d in -3i64..=3,
            ab in prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), 1..6),
        ) {
            let lift = TrigLift {
                degree: d,
                cos: ab.iter().map(|x| x.0).collect(),
                sin: ab.iter().map(|x| x.1).collect(),
            };
            let f = CircleMap::sample(&lift, 256).unwrap();
            let spectral = energy::spectral_energy_p2(&f).value;
            prop_assert!(bbm_bound_margin(&f, 2.0, 128).unwrap() >= -1e-9 * spectral);
            let r = degree_fourier(&f).unwrap();
            prop_assert!(r.routes_agree());
            prop_assert!(r.residual < 0.1);
        }
    }
}
