//! Gagliardo energies `E_p(F; A) = ∬_A |F(x) − F(y)|^p / |x − y|² dx dy`.
//!
//! The integral is approximated on two staggered grids of `R` nodes each:
//! x-nodes at `2πi/R` and y-nodes at `2π(j + ½)/R`, so the kernel is never
//! evaluated on the diagonal. For `p < 2` a local correction built from the
//! Hurwitz zeta function removes the leading near-diagonal bias.
//!
//! ```
//! use fracmap::energy::gagliardo_energy;
//! use fracmap::geometry::TorusRegion;
//! use fracmap::maps::power_map;
//!
//! let z = power_map(1, 512).unwrap();
//! let e = gagliardo_energy(&z, 2.0, &TorusRegion::Full, 256).unwrap();
//! assert!((e.value - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-9);
//! ```

use std::borrow::Cow;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Arc as ArcSet, CircleSet, CompiledRegion, TorusRegion};
use crate::maps::{self, CircleMap, PlaneMap};

/// Anything that can be sampled at `count` equispaced angles and has
/// Fourier coefficients.
pub trait Field {
    fn grid_size(&self) -> usize;

    /// Values at `2πk/count`, `k = 0..count`.
    fn fine_values(&self, count: usize) -> Vec<Complex64>;

    /// Coefficients `a_n`, `|n| ≤ grid_size/2 − 1`, index `n + N`.
    fn coefficients(&self) -> Cow<'_, [Complex64]>;
}

impl Field for CircleMap {
    fn grid_size(&self) -> usize {
        CircleMap::grid_size(self)
    }
    fn fine_values(&self, count: usize) -> Vec<Complex64> {
        if count == self.grid_size() {
            return self.values();
        }
        (0..count)
            .map(|k| Complex64::from_polar(1.0, self.phase_at(maps::grid_angle(k, count))))
            .collect()
    }
    fn coefficients(&self) -> Cow<'_, [Complex64]> {
        Cow::Borrowed(self.fourier())
    }
}

impl Field for PlaneMap {
    fn grid_size(&self) -> usize {
        PlaneMap::grid_size(self)
    }
    fn fine_values(&self, count: usize) -> Vec<Complex64> {
        if count == self.grid_size() {
            return self.samples().to_vec();
        }
        (0..count).map(|k| self.at(maps::grid_angle(k, count))).collect()
    }
    fn coefficients(&self) -> Cow<'_, [Complex64]> {
        Cow::Owned(self.fourier())
    }
}

/// Which distance the kernel `|x − y|^{−2}` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `|e^{ix} − e^{iy}|`.
    #[default]
    Chord,
    /// Arc length, for sensitivity checks only.
    Geodesic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyOptions {
    pub kernel: Kernel,
    /// Near-diagonal zeta correction for `p < 2`.
    pub singular_correction: bool,
    /// Skip the coarse-level evaluation behind `error_estimate`.
    pub skip_error_estimate: bool,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions {
            kernel: Kernel::Chord,
            singular_correction: true,
            skip_error_estimate: false,
        }
    }
}

/// Value of `E_p(F; A)` with its quadrature metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub p: f64,
    pub resolution: usize,
    pub error_estimate: f64,
    pub region: String,
}

impl EnergyReport {
    /// `value^{1/p}`; the semi-norm when the region is the full torus.
    pub fn seminorm(&self) -> f64 {
        self.value.powf(1.0 / self.p)
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.error_estimate / self.value
        }
    }
}

pub fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `s^{p/2}` and `p·s^{p/2−1}` with shortcuts for common exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Power {
    OneHalf,
    Two,
    Three,
    General(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        if p == 1.5 {
            Power::OneHalf
        } else if p == 2.0 {
            Power::Two
        } else if p == 3.0 {
            Power::Three
        } else {
            Power::General(p)
        }
    }

    /// `|Δ|^p` from `s = |Δ|²`.
    #[inline]
    fn of_sq(self, s: f64) -> f64 {
        match self {
            Power::OneHalf => {
                let r = s.sqrt();
                r * r.sqrt()
            }
            Power::Two => s,
            Power::Three => s * s.sqrt(),
            Power::General(p) => s.powf(p / 2.0),
        }
    }

    /// `p·|Δ|^{p−2}` from `s = |Δ|²`, zero at `s = 0`.
    #[inline]
    fn deriv_of_sq(self, s: f64) -> f64 {
        if s == 0.0 {
            return match self {
                Power::Two => 2.0,
                _ => 0.0,
            };
        }
        match self {
            Power::OneHalf => 1.5 / s.sqrt().sqrt(),
            Power::Two => 2.0,
            Power::Three => 3.0 * s.sqrt(),
            Power::General(p) => p * s.powf(p / 2.0 - 1.0),
        }
    }
}

/// Staggered tensor quadrature at a fixed resolution and exponent.
///
/// Fine samples are `2R` values at `πk/R`; even ones are the x-nodes and odd
/// ones the y-nodes.
#[derive(Clone)]
pub struct Quadrature {
    r: usize,
    p: f64,
    power: Power,
    h: f64,
    weights: Vec<f64>,
    weight_sum: f64,
    /// `κ_p·2^p` when the singular correction is active.
    correction: Option<f64>,
    fft: Option<FftPair>,
}

#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Spectrum of `w_{−n}` scaled by `1/R`.
    w_rev_hat: Vec<Complex64>,
    /// Spectrum of `w_n` scaled by `1/R`.
    w_hat: Vec<Complex64>,
}

impl std::fmt::Debug for Quadrature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Quadrature")
            .field("r", &self.r)
            .field("p", &self.p)
            .field("correction", &self.correction)
            .finish()
    }
}

impl Quadrature {
    pub fn new(r: usize, p: f64, options: &EnergyOptions) -> Result<Self> {
        check_exponent(p)?;
        if r < 8 {
            return Err(Error::GridTooSmall(r));
        }
        let h = TAU / r as f64;
        let weights: Vec<f64> = (0..r)
            .map(|k| {
                let u = (k as f64 + 0.5) * h;
                let d = match options.kernel {
                    Kernel::Chord => 2.0 * (u / 2.0).sin(),
                    Kernel::Geodesic => u.min(TAU - u),
                };
                1.0 / (d * d)
            })
            .collect();
        let weight_sum = weights.iter().sum();
        let correction = (options.singular_correction && p < 2.0).then(|| -hurwitz_zeta(2.0 - p, 0.5) * 2f64.powf(p));
        let power = Power::new(p);
        let fft = (power == Power::Two).then(|| {
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(r);
            let inverse = planner.plan_fft_inverse(r);
            let scale = 1.0 / r as f64;
            let mut w_hat: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
            forward.process(&mut w_hat);
            for z in &mut w_hat {
                *z *= scale;
            }
            let w_rev_hat = w_hat.iter().map(|z| z.conj()).collect();
            FftPair {
                forward,
                inverse,
                w_rev_hat,
                w_hat,
            }
        });
        Ok(Quadrature {
            r,
            p,
            power,
            h,
            weights,
            weight_sum,
            correction,
            fft,
        })
    }

    pub fn resolution(&self) -> usize {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.r).map(|i| i as f64 * self.h).collect()
    }

    pub fn y_nodes(&self) -> Vec<f64> {
        (0..self.r).map(|i| (i as f64 + 0.5) * self.h).collect()
    }

    /// Number of fine samples expected by the evaluators.
    pub fn sample_count(&self) -> usize {
        2 * self.r
    }

    fn split(&self, fine: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        assert_eq!(fine.len(), 2 * self.r, "expected {} fine samples", 2 * self.r);
        let xs = fine.iter().step_by(2).copied().collect();
        let ys = fine.iter().skip(1).step_by(2).copied().collect();
        (xs, ys)
    }

    #[inline]
    fn row(&self, i: usize, x: Complex64, ys: &[Complex64], mask: Option<&CompiledRegion>) -> f64 {
        let r = self.r;
        let mut s = 0.0;
        for k in 0..r {
            let j = if i + k >= r { i + k - r } else { i + k };
            if let Some(m) = mask {
                if !m.contains(i, j) {
                    continue;
                }
            }
            s += self.weights[k] * self.power.of_sq((x - ys[j]).norm_sqr());
        }
        s
    }

    /// Correction for row `i`: pairs `(x_i, y_i)` and `(x_i, y_{i−1})`.
    #[inline]
    fn row_correction(&self, i: usize, xs: &[Complex64], ys: &[Complex64], mask: Option<&CompiledRegion>) -> f64 {
        let Some(c) = self.correction else {
            return 0.0;
        };
        let prev = if i == 0 { self.r - 1 } else { i - 1 };
        let mut s = 0.0;
        for j in [i, prev] {
            if mask.is_none_or(|m| m.contains(i, j)) {
                s += self.power.of_sq((xs[i] - ys[j]).norm_sqr());
            }
        }
        c * s
    }

    /// Energy of the fine samples over the full torus.
    pub fn energy(&self, fine: &[Complex64]) -> f64 {
        if self.fft.is_some() {
            return self.energy_fft(fine);
        }
        self.energy_direct(fine, None)
    }

    /// Energy restricted to a compiled region.
    pub fn energy_in(&self, fine: &[Complex64], region: &CompiledRegion) -> f64 {
        if region.is_full() {
            return self.energy(fine);
        }
        self.energy_direct(fine, Some(region))
    }

    fn energy_direct(&self, fine: &[Complex64], mask: Option<&CompiledRegion>) -> f64 {
        let (xs, ys) = self.split(fine);
        let h2 = self.h * self.h;
        let rows: Vec<f64> = (0..self.r)
            .into_par_iter()
            .map(|i| h2 * self.row(i, xs[i], &ys, mask) + self.row_correction(i, &xs, &ys, mask))
            .collect();
        rows.iter().sum()
    }

    fn correlate(&self, spectrum: &[Complex64], data: &[Complex64]) -> Vec<Complex64> {
        let fft = self.fft.as_ref().expect("p = 2 path");
        let mut buf = data.to_vec();
        fft.forward.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(spectrum) {
            *b *= w;
        }
        fft.inverse.process(&mut buf);
        buf
    }

    fn energy_fft(&self, fine: &[Complex64]) -> f64 {
        let (xs, ys) = self.split(fine);
        let fft = self.fft.as_ref().expect("p = 2 path");
        let a = self.correlate(&fft.w_rev_hat, &ys);
        let norms: f64 = xs.iter().chain(&ys).map(|z| z.norm_sqr()).sum();
        let cross: f64 = xs.iter().zip(&a).map(|(x, a)| (x.conj() * a).re).sum();
        (self.h * self.h * (self.weight_sum * norms - 2.0 * cross)).max(0.0)
    }

    /// Energy and its gradient with respect to each fine sample, in the sense
    /// `dE = Re Σ conj(Γ_s)·dF_s`.
    pub fn energy_and_gradient(&self, fine: &[Complex64]) -> (f64, Vec<Complex64>) {
        let (xs, ys) = self.split(fine);
        let h2 = self.h * self.h;
        let r = self.r;
        let mut grad = vec![Complex64::new(0.0, 0.0); 2 * r];
        if let Some(fft) = &self.fft {
            let a = self.correlate(&fft.w_rev_hat, &ys);
            let b = self.correlate(&fft.w_hat, &xs);
            let norms: f64 = xs.iter().chain(&ys).map(|z| z.norm_sqr()).sum();
            let cross: f64 = xs.iter().zip(&a).map(|(x, a)| (x.conj() * a).re).sum();
            let value = h2 * (self.weight_sum * norms - 2.0 * cross);
            for i in 0..r {
                grad[2 * i] = 2.0 * h2 * (self.weight_sum * xs[i] - a[i]);
                grad[2 * i + 1] = 2.0 * h2 * (self.weight_sum * ys[i] - b[i]);
            }
            return (value.max(0.0), grad);
        }
        let rows: Vec<(f64, Complex64)> = (0..r)
            .into_par_iter()
            .map(|i| {
                let x = xs[i];
                let mut value = 0.0;
                let mut gx = Complex64::new(0.0, 0.0);
                for k in 0..r {
                    let j = if i + k >= r { i + k - r } else { i + k };
                    let d = x - ys[j];
                    let s = d.norm_sqr();
                    let w = h2 * self.weights[k];
                    value += w * self.power.of_sq(s);
                    gx += d * (w * self.power.deriv_of_sq(s));
                }
                (value, gx)
            })
            .collect();
        let cols: Vec<Complex64> = (0..r)
            .into_par_iter()
            .map(|j| {
                let y = ys[j];
                let mut gy = Complex64::new(0.0, 0.0);
                for k in 0..r {
                    // x_i with j = i + k (mod R)
                    let i = if j >= k { j - k } else { j + r - k };
                    let d = xs[i] - y;
                    gy -= d * (h2 * self.weights[k] * self.power.deriv_of_sq(d.norm_sqr()));
                }
                gy
            })
            .collect();
        let mut value = 0.0;
        for (i, (v, gx)) in rows.into_iter().enumerate() {
            value += v;
            grad[2 * i] = gx;
            grad[2 * i + 1] = cols[i];
        }
        if let Some(c) = self.correction {
            for i in 0..r {
                let prev = if i == 0 { r - 1 } else { i - 1 };
                for j in [i, prev] {
                    let d = xs[i] - ys[j];
                    let s = d.norm_sqr();
                    value += c * self.power.of_sq(s);
                    let g = d * (c * self.power.deriv_of_sq(s));
                    grad[2 * i] += g;
                    grad[2 * j + 1] -= g;
                }
            }
        }
        (value, grad)
    }
}

fn check_resolution(map_grid: usize, resolution: usize) -> Result<()> {
    if resolution < 16 || !resolution.is_multiple_of(2) {
        return Err(invalid(
            "resolution",
            format!("{resolution} must be even and at least 16"),
        ));
    }
    if !(2 * resolution).is_multiple_of(map_grid) {
        return Err(Error::Indivisible {
            grid: 2 * resolution,
            divisor: map_grid,
            reason: "twice the resolution must be a multiple of the map grid",
        });
    }
    Ok(())
}

/// `E_p(F; region)` at quadrature resolution `resolution` with default options.
pub fn gagliardo_energy(f: &impl Field, p: f64, region: &TorusRegion, resolution: usize) -> Result<EnergyReport> {
    gagliardo_energy_with(f, p, region, resolution, &EnergyOptions::default())
}

pub fn gagliardo_energy_with(
    f: &impl Field,
    p: f64,
    region: &TorusRegion,
    resolution: usize,
    options: &EnergyOptions,
) -> Result<EnergyReport> {
    check_exponent(p)?;
    check_resolution(f.grid_size(), resolution)?;
    let fine = f.fine_values(2 * resolution);
    energy_of_samples(&fine, p, region, options)
}

/// Energy of `2R` fine samples at `πk/R`; the resolution is `R`.
pub fn energy_of_samples(
    fine: &[Complex64],
    p: f64,
    region: &TorusRegion,
    options: &EnergyOptions,
) -> Result<EnergyReport> {
    let r = fine.len() / 2;
    let eval = |samples: &[Complex64], r: usize| -> Result<f64> {
        let q = Quadrature::new(r, p, options)?;
        if region.is_full() {
            Ok(q.energy(samples))
        } else {
            let compiled = region.compile(&q.x_nodes(), &q.y_nodes());
            Ok(q.energy_in(samples, &compiled))
        }
    };
    let value = eval(fine, r)?;
    let error_estimate = if options.skip_error_estimate || r < 16 {
        0.0
    } else {
        let coarse: Vec<Complex64> = fine.iter().step_by(2).copied().collect();
        (value - eval(&coarse, r / 2)?).abs()
    };
    Ok(EnergyReport {
        value,
        p,
        resolution: r,
        error_estimate,
        region: region.to_string(),
    })
}

/// Semi-norm distance `|f − g|` with the underlying energy report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub distance: f64,
    pub energy: EnergyReport,
}

pub fn seminorm_distance(f: &CircleMap, g: &CircleMap, p: f64, resolution: usize) -> Result<DistanceReport> {
    let diff = maps::difference(f, g)?;
    let energy = gagliardo_energy(&diff, p, &TorusRegion::Full, resolution)?;
    Ok(DistanceReport {
        distance: energy.seminorm(),
        energy,
    })
}

/// `4π² Σ |n||a_n|²` with a cutoff diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEnergy {
    pub value: f64,
    pub cutoff: usize,
    /// Share of the weighted sum carried by `|n| > 0.9·cutoff`.
    pub top_decade_share: f64,
}

impl SpectralEnergy {
    /// True when the top decade carries more than 1% of the sum.
    pub fn cutoff_warning(&self) -> bool {
        self.top_decade_share > 0.01
    }
}

pub fn spectral_energy_p2(f: &impl Field) -> SpectralEnergy {
    spectral_energy_from_coefficients(&f.coefficients())
}

pub fn spectral_energy_from_coefficients(coeffs: &[Complex64]) -> SpectralEnergy {
    let cutoff = coeffs.len() / 2;
    let mut total = 0.0;
    let mut top = 0.0;
    let threshold = 0.9 * cutoff as f64;
    for (idx, a) in coeffs.iter().enumerate() {
        let n = (idx as i64 - cutoff as i64).unsigned_abs() as f64;
        let term = n * a.norm_sqr();
        total += term;
        if n > threshold {
            top += term;
        }
    }
    SpectralEnergy {
        value: 4.0 * PI * PI * total,
        cutoff,
        top_decade_share: if total > 0.0 { top / total } else { 0.0 },
    }
}

const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `ζ(s, a)` for real `s ≠ 1` and `a > 0`, by Euler–Maclaurin
/// summation (analytically continued for `s < 1`).
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(a > 0.0 && s != 1.0);
    const N: usize = 30;
    let mut sum: f64 = (0..N).map(|k| (k as f64 + a).powf(-s)).sum();
    let x = N as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * x.powf(-s);
    // B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{−s−2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let j = j + 1;
        sum += b / fact * rising * xp;
        let m = (2 * j) as f64;
        rising *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        xp /= x * x;
    }
    sum
}

/// Inputs of the key-lemma inequality and the regions derived from them.
#[derive(Debug, Clone)]
pub struct KeyLemmaInstance {
    pub u: CircleMap,
    pub u_tilde: CircleMap,
    pub v: CircleMap,
    pub eps: f64,
    /// `{x : (v/ũ)(x) ∈ 𝒜[−ε, ε]}`.
    pub c_plus: CircleSet,
    /// `{x : (v/ũ)(x) ∈ 𝒜[π−ε, π+ε]}`.
    pub c_minus: CircleSet,
}

impl KeyLemmaInstance {
    pub fn new(u: CircleMap, u_tilde: CircleMap, v: CircleMap, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < PI / 20.0) {
            return Err(invalid("eps", format!("{eps} is outside (0, π/20)")));
        }
        let gap = maps::difference(&u, &u_tilde)?.sup_norm();
        if gap > eps * (1.0 + 1e-12) {
            return Err(invalid("u_tilde", format!("sup |u − ũ| = {gap} exceeds ε = {eps}")));
        }
        let w = maps::pointwise_quotient(&v, &u_tilde)?;
        let c_plus = CircleSet::preimage(&w, ArcSet::closed(-eps, eps)?);
        let c_minus = CircleSet::preimage(&w, ArcSet::closed(PI - eps, PI + eps)?);
        Ok(KeyLemmaInstance {
            u,
            u_tilde,
            v,
            eps,
            c_plus,
            c_minus,
        })
    }

    /// `w̃ = v/ũ`.
    pub fn w_tilde(&self) -> CircleMap {
        maps::pointwise_quotient(&self.v, &self.u_tilde).expect("validated at construction")
    }

    pub fn c(&self) -> CircleSet {
        self.c_plus.clone().union(self.c_minus.clone())
    }

    /// `S¹×S¹ ∖ ((C⁺×C⁺) ∪ (C⁻×C⁻))`.
    pub fn d_region(&self) -> TorusRegion {
        TorusRegion::Union(vec![
            TorusRegion::product(self.c_plus.clone(), self.c_plus.clone()),
            TorusRegion::product(self.c_minus.clone(), self.c_minus.clone()),
        ])
        .complement()
        .labeled("D_eps")
    }

    /// The four-piece disjoint decomposition of [`KeyLemmaInstance::d_region`].
    pub fn d_decomposition(&self) -> TorusRegion {
        let c = self.c();
        let not_c = c.clone().complement();
        TorusRegion::disjoint_union(vec![
            TorusRegion::product(not_c.clone(), CircleSet::Full),
            TorusRegion::product(c, not_c),
            TorusRegion::product(self.c_plus.clone(), self.c_minus.clone()),
            TorusRegion::product(self.c_minus.clone(), self.c_plus.clone()),
        ])
    }
}

/// Region energies entering both sides of the key-lemma inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyLemmaEnergies {
    /// `E_p(v − ũ; D_ε)`.
    pub lhs: EnergyReport,
    /// `E_p(u; (S¹∖C_ε) × S¹)`.
    pub u_outside_c: EnergyReport,
    /// `E_p(u; S¹ × (S¹∖C_ε))`.
    pub u_outside_c_second: EnergyReport,
    /// `E_p(u; C_ε⁺ × C_ε⁻)`.
    pub u_plus_minus: EnergyReport,
    /// `E_p(u; S¹ × S¹)`.
    pub u_full: EnergyReport,
}

pub fn restricted_energy_decomposition(inst: &KeyLemmaInstance, p: f64, resolution: usize) -> Result<KeyLemmaEnergies> {
    let diff = maps::difference(&inst.v, &inst.u_tilde)?;
    let not_c = inst.c().complement();
    let e = |f: &dyn Fn() -> Result<EnergyReport>| f();
    Ok(KeyLemmaEnergies {
        lhs: e(&|| gagliardo_energy(&diff, p, &inst.d_region(), resolution))?,
        u_outside_c: e(&|| {
            let region = TorusRegion::product(not_c.clone(), CircleSet::Full);
            gagliardo_energy(&inst.u, p, &region, resolution)
        })?,
        u_outside_c_second: e(&|| {
            let region = TorusRegion::product(CircleSet::Full, not_c.clone());
            gagliardo_energy(&inst.u, p, &region, resolution)
        })?,
        u_plus_minus: e(&|| {
            let region = TorusRegion::product(inst.c_plus.clone(), inst.c_minus.clone());
            gagliardo_energy(&inst.u, p, &region, resolution)
        })?,
        u_full: gagliardo_energy(&inst.u, p, &TorusRegion::Full, resolution)?,
    })
}
