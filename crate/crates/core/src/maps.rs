//! Circle-valued maps as sampled phase liftings.
//!
//! A [`CircleMap`] stores a lifting `θ` on the uniform grid `t_j = 2πj/M`
//! together with its integer winding, so products, quotients and degrees are
//! exact phase arithmetic. Analytic families implement [`Lift`] and are
//! sampled onto a grid with [`CircleMap::sample`].

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest accepted grid size.
pub const MIN_GRID: usize = 16;

/// Default modulus floor for [`project_to_circle`].
pub const PROJECTION_FLOOR: f64 = 1e-9;

/// A continuous lifting `θ: ℝ → ℝ` with `θ(t + 2π) = θ(t) + 2π·degree`.
pub trait Lift: Send + Sync {
    fn degree(&self) -> i64;

    /// Lifting value at an arbitrary real angle.
    fn lift(&self, t: f64) -> f64;
}

impl<T: Lift + ?Sized> Lift for &T {
    fn degree(&self) -> i64 {
        (**self).degree()
    }
    fn lift(&self, t: f64) -> f64 {
        (**self).lift(t)
    }
}

impl<T: Lift + ?Sized> Lift for Box<T> {
    fn degree(&self) -> i64 {
        (**self).degree()
    }
    fn lift(&self, t: f64) -> f64 {
        (**self).lift(t)
    }
}

impl<T: Lift + ?Sized> Lift for Arc<T> {
    fn degree(&self) -> i64 {
        (**self).degree()
    }
    fn lift(&self, t: f64) -> f64 {
        (**self).lift(t)
    }
}

/// Splits `t` into `(k, r)` with `t = 2πk + r`, `r ∈ [0, 2π)`.
fn periods(t: f64) -> (f64, f64) {
    let k = (t / TAU).floor();
    let r = t - k * TAU;
    if r >= TAU {
        (k + 1.0, 0.0)
    } else if r < 0.0 {
        (k - 1.0, r + TAU)
    } else {
        (k, r)
    }
}

/// Extends a lifting defined on `[0, 2π)` to the whole line.
fn extend(degree: i64, t: f64, base: impl Fn(f64) -> f64) -> f64 {
    let (k, r) = periods(t);
    base(r) + TAU * degree as f64 * k
}

/// The lifting `t ↦ d·t` of `z^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power(pub i64);

impl Lift for Power {
    fn degree(&self) -> i64 {
        self.0
    }
    fn lift(&self, t: f64) -> f64 {
        self.0 as f64 * t
    }
}

/// Lifting given by a closure, with an explicitly declared degree.
pub struct FnLift<F> {
    degree: i64,
    f: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnLift<F> {
    /// `f` must satisfy `f(t + 2π) = f(t) + 2π·degree`.
    pub fn new(degree: i64, f: F) -> Self {
        FnLift { degree, f }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Lift for FnLift<F> {
    fn degree(&self) -> i64 {
        self.degree
    }
    fn lift(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

/// `outer ∘ inner`.
#[derive(Debug, Clone)]
pub struct Compose<A, B> {
    pub outer: A,
    pub inner: B,
}

pub fn compose<A: Lift, B: Lift>(outer: A, inner: B) -> Compose<A, B> {
    Compose { outer, inner }
}

impl<A: Lift, B: Lift> Lift for Compose<A, B> {
    fn degree(&self) -> i64 {
        self.outer.degree() * self.inner.degree()
    }
    fn lift(&self, t: f64) -> f64 {
        self.outer.lift(self.inner.lift(t))
    }
}

/// `t ↦ inner(t − shift) + offset`: rotation of the domain and target.
#[derive(Debug, Clone)]
pub struct Rotate<A> {
    pub inner: A,
    pub shift: f64,
    pub offset: f64,
}

impl<A: Lift> Lift for Rotate<A> {
    fn degree(&self) -> i64 {
        self.inner.degree()
    }
    fn lift(&self, t: f64) -> f64 {
        self.inner.lift(t - self.shift) + self.offset
    }
}

/// Linear lifting plus a trigonometric perturbation,
/// `θ(t) = d·t + Σ_k (a_k cos kt + b_k sin kt)` for `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigLift {
    pub degree: i64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Lift for TrigLift {
    fn degree(&self) -> i64 {
        self.degree
    }
    fn lift(&self, t: f64) -> f64 {
        let mut s = self.degree as f64 * t;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kt = (k + 1) as f64 * t;
            s += a * kt.cos() + b * kt.sin();
        }
        s
    }
}

/// Periodic piecewise-linear lifting through `(knots[i], values[i])`.
///
/// Knots are strictly increasing in `[0, 2π)`; the segment after the last
/// knot joins `values[last]` to `values[0] + 2π·degree` at `knots[0] + 2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    degree: i64,
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(degree: i64, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(invalid("knots", "need as many values as knots, at least one"));
        }
        let ordered = knots.windows(2).all(|w| w[0] < w[1]);
        if !ordered || knots[0] < 0.0 || *knots.last().unwrap() >= TAU {
            return Err(invalid("knots", "must be strictly increasing inside [0, 2π)"));
        }
        Ok(PiecewiseLinear { degree, knots, values })
    }

    /// Largest absolute slope over all segments.
    pub fn lipschitz(&self) -> f64 {
        let n = self.knots.len();
        (0..n)
            .map(|i| {
                let (t0, v0) = (self.knots[i], self.values[i]);
                let (t1, v1) = if i + 1 < n {
                    (self.knots[i + 1], self.values[i + 1])
                } else {
                    (self.knots[0] + TAU, self.values[0] + TAU * self.degree as f64)
                };
                ((v1 - v0) / (t1 - t0)).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl Lift for PiecewiseLinear {
    fn degree(&self) -> i64 {
        self.degree
    }
    fn lift(&self, t: f64) -> f64 {
        let shift = self.knots[0];
        let d = self.degree as f64;
        extend(self.degree, t - shift, |r| {
            let x = r + shift;
            let i = self.knots.partition_point(|&k| k <= x) - 1;
            let (t0, v0) = (self.knots[i], self.values[i]);
            let (t1, v1) = match self.knots.get(i + 1) {
                Some(&k) => (k, self.values[i + 1]),
                None => (self.knots[0] + TAU, self.values[0] + TAU * d),
            };
            v0 + (v1 - v0) * (x - t0) / (t1 - t0)
        })
    }
}

/// Window of admissible zig-zag exponents for a given `p`.
pub fn alpha_window(p: f64) -> (f64, f64) {
    if p >= 2.0 {
        (1.0 - 1.0 / p, 1.0)
    } else {
        (1.0 / p, 1.0)
    }
}

/// Midpoint of [`alpha_window`].
pub fn default_alpha(p: f64) -> f64 {
    let (lo, hi) = alpha_window(p);
    (lo + hi) / 2.0
}

/// The zig-zag lifting: slope `n^α` on even arcs of width `π/n` and
/// slope `−(n^α − 2)` on odd ones, starting at `τ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zigzag {
    n: usize,
    alpha: f64,
}

impl Zigzag {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 1)")));
        }
        Ok(Zigzag { n, alpha })
    }

    /// Like [`Zigzag::new`] but also checks the exponent window for `p`.
    pub fn for_exponent(n: usize, alpha: f64, p: f64) -> Result<Self> {
        let (lo, hi) = alpha_window(p);
        if !(alpha > lo && alpha < hi) {
            return Err(invalid(
                "alpha",
                format!("{alpha} is outside the window ({lo}, {hi}) for p = {p}"),
            ));
        }
        Self::new(n, alpha)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Forward slope `n^α`.
    pub fn slope(&self) -> f64 {
        (self.n as f64).powf(self.alpha)
    }

    /// `π·n^{α−1}`, the bound on `sup |τ(t) − t|`.
    pub fn closeness_bound(&self) -> f64 {
        PI * (self.n as f64).powf(self.alpha - 1.0)
    }

    /// Value on arc `k` at offset `r ∈ [0, π/n]` into it.
    fn on_arc(&self, k: usize, r: f64) -> f64 {
        let w = PI / self.n as f64;
        let s = self.slope();
        let j = (k / 2) as f64;
        let within = if k.is_multiple_of(2) {
            s * r
        } else {
            s * w - (s - 2.0) * r
        };
        j * 2.0 * w + within
    }
}

impl Lift for Zigzag {
    fn degree(&self) -> i64 {
        1
    }
    fn lift(&self, t: f64) -> f64 {
        let w = PI / self.n as f64;
        extend(1, t, |r| {
            let k = ((r / w).floor() as usize).min(2 * self.n - 1);
            self.on_arc(k, r - k as f64 * w)
        })
    }
}

/// The collapse lifting `k_δ`: constant on `[−δ, δ]` and `[π−δ, π+δ]`,
/// linear with slope `π/(π−2δ)` in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KDelta {
    delta: f64,
}

impl KDelta {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < PI / 2.0) {
            return Err(invalid("delta", format!("{delta} is outside (0, π/2)")));
        }
        Ok(KDelta { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lipschitz(&self) -> f64 {
        PI / (PI - 2.0 * self.delta)
    }
}

impl Lift for KDelta {
    fn degree(&self) -> i64 {
        1
    }
    fn lift(&self, t: f64) -> f64 {
        let d = self.delta;
        let s = self.lipschitz();
        extend(1, t, |r| {
            if r <= d {
                0.0
            } else if r < PI - d {
                s * (r - d)
            } else if r <= PI + d {
                PI
            } else if r < TAU - d {
                PI + s * (r - PI - d)
            } else {
                TAU
            }
        })
    }
}

/// Degree-one lifting that is constant on `[−η, η]` and linear elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCollapse {
    eta: f64,
}

impl ArcCollapse {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..PI).contains(&eta) {
            return Err(invalid("eta", format!("{eta} is outside [0, π)")));
        }
        Ok(ArcCollapse { eta })
    }
}

impl Lift for ArcCollapse {
    fn degree(&self) -> i64 {
        1
    }
    fn lift(&self, t: f64) -> f64 {
        let e = self.eta;
        extend(1, t + e, |r| {
            if r <= 2.0 * e {
                0.0
            } else {
                TAU * (r - 2.0 * e) / (TAU - 2.0 * e)
            }
        })
    }
}

/// An orientation-preserving Möbius automorphism of the disk,
/// `z ↦ e^{iγ}(z − a)/(1 − āz)`, acting on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    gamma: f64,
    a: Complex64,
}

fn triple_matrix(z: [Complex64; 3]) -> [[Complex64; 2]; 2] {
    let [z1, z2, z3] = z;
    [[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]]
}

fn mat_mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn check_triple(t: [f64; 3], which: &'static str) -> Result<()> {
    let g1 = crate::geometry::normalize(t[1] - t[0]);
    let g2 = crate::geometry::normalize(t[2] - t[0]);
    let tiny = 1e-12;
    if g1 < tiny || g2 < tiny || (g2 - g1).abs() < tiny {
        return Err(Error::DegenerateTriple(which));
    }
    if g1 > g2 {
        return Err(invalid("triple", format!("{which} triple is not positively ordered")));
    }
    Ok(())
}

impl Mobius {
    pub fn identity() -> Self {
        Mobius {
            gamma: 0.0,
            a: Complex64::new(0.0, 0.0),
        }
    }

    /// `|a| < 1` is required.
    pub fn new(gamma: f64, a: Complex64) -> Result<Self> {
        if !(a.norm() < 1.0) || !gamma.is_finite() {
            return Err(invalid("a", format!("|a| = {} must be below 1", a.norm())));
        }
        Ok(Mobius { gamma, a })
    }

    /// The unique Möbius map sending the three circle points `e^{i src_k}` to
    /// `e^{i dst_k}`. Both triples must be positively ordered.
    pub fn from_triples(src: [f64; 3], dst: [f64; 3]) -> Result<Self> {
        check_triple(src, "source")?;
        check_triple(dst, "target")?;
        let pts = |t: [f64; 3]| t.map(|x| Complex64::from_polar(1.0, x));
        let s = triple_matrix(pts(src));
        let d = triple_matrix(pts(dst));
        // inverse of d up to scale
        let d_inv = [[d[1][1], -d[0][1]], [-d[1][0], d[0][0]]];
        let [[a, b], [_, dd]] = mat_mul(d_inv, s);
        let centre = -b / a;
        let gamma = (a / dd).arg();
        let mut m = Mobius::new(gamma, centre)?;
        // pin the lifting so that lift(src_0) lands nearest dst_0
        let off = m.lift(src[0]) - dst[0];
        m.gamma -= TAU * (off / TAU).round();
        Ok(m)
    }

    /// The concentrating map sending `(π + 1/n, 0, π − 1/n)` to `(−η, 0, η)`.
    pub fn concentrating(n: f64, eta: f64) -> Result<Self> {
        if !(n > 1.0 / PI) {
            return Err(invalid("n", "1/n must be below π"));
        }
        Self::from_triples([PI + 1.0 / n, 0.0, PI - 1.0 / n], [-eta, 0.0, eta])
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn center(&self) -> Complex64 {
        self.a
    }

    /// Complex action on a point of the circle.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, self.gamma) * (z - self.a) / (1.0 - self.a.conj() * z)
    }

    /// `sup |ℳ'|` on the circle.
    pub fn max_derivative(&self) -> f64 {
        let r = self.a.norm();
        (1.0 + r) / (1.0 - r)
    }

    pub fn inverse(&self) -> Self {
        // z = e^{-iγ}(w + a e^{iγ}) / (1 + ā e^{-iγ} w)
        let a = -self.a * Complex64::from_polar(1.0, self.gamma);
        Mobius { gamma: -self.gamma, a }
    }
}

impl Lift for Mobius {
    fn degree(&self) -> i64 {
        1
    }
    fn lift(&self, x: f64) -> f64 {
        let e = Complex64::from_polar(1.0, x);
        let num = 1.0 - self.a * e.conj();
        let den = 1.0 - self.a.conj() * e;
        self.gamma + x + num.arg() - den.arg()
    }
}

/// Sampled lifting `θ_j` at `t_j = 2πj/M` together with its winding.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLifting {
    samples: Vec<f64>,
    winding: i64,
}

impl PhaseLifting {
    /// Validates grid size, finiteness, and that every increment (including
    /// the closure `θ_0 + 2πd − θ_{M−1}`) is below `π` in magnitude.
    pub fn new(samples: Vec<f64>, winding: i64) -> Result<Self> {
        let m = samples.len();
        if m < MIN_GRID {
            return Err(Error::GridTooSmall(m));
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let l = PhaseLifting { samples, winding };
        for j in 0..m {
            let jump = l.next_value(j) - l.samples[j];
            if !(jump.abs() < PI) {
                return Err(Error::UnresolvedLifting {
                    index: j,
                    next: (j + 1) % m,
                    jump,
                });
            }
        }
        Ok(l)
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `θ_{j+1}`, continuing across the closure.
    fn next_value(&self, j: usize) -> f64 {
        let m = self.samples.len();
        if j + 1 < m {
            self.samples[j + 1]
        } else {
            self.samples[0] + TAU * self.winding as f64
        }
    }

    /// Winding recomputed from the unit-modulus values alone, by summing
    /// principal-branch phase increments around the grid.
    pub fn reconstructed_winding(&self) -> i64 {
        let m = self.samples.len();
        let total: f64 = (0..m)
            .map(|j| {
                let a = self.samples[j];
                let b = self.samples[(j + 1) % m];
                crate::geometry::wrap_signed(b - a)
            })
            .sum();
        (total / TAU).round() as i64
    }

    /// Linear interpolation of the lifting at an arbitrary angle.
    pub fn at(&self, t: f64) -> f64 {
        let m = self.samples.len();
        let u = t * m as f64 / TAU;
        let j = u.floor();
        let frac = u - j;
        let j = j as i64;
        let k = j.div_euclid(m as i64);
        let jj = j.rem_euclid(m as i64) as usize;
        let base = TAU * self.winding as f64 * k as f64;
        let a = self.samples[jj];
        let b = self.next_value(jj);
        base + a + (b - a) * frac
    }
}

/// A circle-valued map on a uniform grid, backed by a [`PhaseLifting`].
#[derive(Debug, Clone)]
pub struct CircleMap {
    lifting: PhaseLifting,
    fourier: OnceLock<Arc<Vec<Complex64>>>,
}

impl PartialEq for CircleMap {
    fn eq(&self, other: &Self) -> bool {
        self.lifting == other.lifting
    }
}

/// Grid angle `2πj/M`.
pub fn grid_angle(j: usize, m: usize) -> f64 {
    TAU * j as f64 / m as f64
}

impl CircleMap {
    pub fn from_lifting(lifting: PhaseLifting) -> Self {
        CircleMap {
            lifting,
            fourier: OnceLock::new(),
        }
    }

    pub fn from_samples(samples: Vec<f64>, winding: i64) -> Result<Self> {
        Ok(Self::from_lifting(PhaseLifting::new(samples, winding)?))
    }

    /// Samples an analytic lifting on `m` grid points.
    pub fn sample(lift: &(impl Lift + ?Sized), m: usize) -> Result<Self> {
        let samples = (0..m).map(|j| lift.lift(grid_angle(j, m))).collect();
        Self::from_samples(samples, lift.degree())
    }

    pub fn lifting(&self) -> &PhaseLifting {
        &self.lifting
    }

    pub fn phases(&self) -> &[f64] {
        self.lifting.samples()
    }

    pub fn grid_size(&self) -> usize {
        self.lifting.grid_size()
    }

    pub fn winding(&self) -> i64 {
        self.lifting.winding()
    }

    pub fn value(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.lifting.samples[j])
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.phases().iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }

    /// Interpolated lifting value at any angle.
    pub fn phase_at(&self, t: f64) -> f64 {
        self.lifting.at(t)
    }

    /// `self ∘ inner`, resampled on the same grid.
    pub fn compose(&self, inner: &(impl Lift + ?Sized)) -> Result<Self> {
        Self::sample(&compose(self, inner), self.grid_size())
    }

    /// `outer ∘ self`, evaluated exactly at the grid phases.
    pub fn post_compose(&self, outer: &(impl Lift + ?Sized)) -> Result<Self> {
        let samples = self.phases().iter().map(|&t| outer.lift(t)).collect();
        Self::from_samples(samples, outer.degree() * self.winding())
    }

    /// Resamples on another grid by linear interpolation of the lifting.
    pub fn resample(&self, m: usize) -> Result<Self> {
        if m == self.grid_size() {
            return Ok(self.clone());
        }
        Self::sample(self, m)
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        let samples = self.phases().iter().map(|t| -t).collect();
        Self::from_samples(samples, -self.winding()).expect("negation preserves validity")
    }

    /// Multiplies by the constant `e^{iφ}`.
    pub fn rotate(&self, phi: f64) -> Self {
        let samples = self.phases().iter().map(|t| t + phi).collect();
        Self::from_samples(samples, self.winding()).expect("shift preserves validity")
    }

    pub fn to_plane(&self) -> PlaneMap {
        PlaneMap { samples: self.values() }
    }

    /// Complex Fourier coefficients `a_n`, `n ∈ [−N, N]` with `N = M/2 − 1`,
    /// computed once and cached.
    pub fn fourier(&self) -> &[Complex64] {
        self.fourier
            .get_or_init(|| Arc::new(fourier_coefficients(&self.values())))
            .as_slice()
    }

    /// Cutoff `N` of [`CircleMap::fourier`].
    pub fn fourier_cutoff(&self) -> usize {
        self.grid_size() / 2 - 1
    }

    pub fn fourier_coefficient(&self, n: i64) -> Complex64 {
        coefficient(self.fourier(), n)
    }

    pub fn to_record(&self) -> MapRecord {
        MapRecord {
            grid_size: self.grid_size(),
            winding: self.winding(),
            samples: self.phases().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: MapRecord = serde_json::from_str(text)?;
        rec.into_map()
    }

    /// Binary layout: `b"FMAP"`, `u32` version, `u64` grid size, `i64`
    /// winding, then the samples as `f64`; all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.grid_size());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.grid_size() as u64).to_le_bytes());
        out.extend_from_slice(&self.winding().to_le_bytes());
        for x in self.phases() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Format(msg.to_string());
        if bytes.len() < 24 || &bytes[..4] != BINARY_MAGIC {
            return Err(bad("missing FMAP header"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != BINARY_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let m = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let winding = i64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let body = &bytes[24..];
        if body.len() != m.checked_mul(8).ok_or_else(|| bad("grid size overflow"))? {
            return Err(Error::Format(format!(
                "expected {} sample bytes, found {}",
                8 * m,
                body.len()
            )));
        }
        let samples = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_samples(samples, winding)
    }

    /// Writes JSON for `.json` paths and the binary layout otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        if is_json(path) {
            fs::write(path, self.to_json()?)?;
        } else {
            fs::write(path, self.to_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if is_json(path) {
            Self::from_json(&fs::read_to_string(path)?)
        } else {
            Self::from_bytes(&fs::read(path)?)
        }
    }
}

impl Lift for CircleMap {
    fn degree(&self) -> i64 {
        self.winding()
    }
    fn lift(&self, t: f64) -> f64 {
        self.phase_at(t)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"FMAP";
const BINARY_VERSION: u32 = 1;

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Serialized form of a [`CircleMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub grid_size: usize,
    pub winding: i64,
    pub samples: Vec<f64>,
}

impl MapRecord {
    pub fn into_map(self) -> Result<CircleMap> {
        if self.samples.len() != self.grid_size {
            return Err(Error::Format(format!(
                "grid_size {} but {} samples",
                self.grid_size,
                self.samples.len()
            )));
        }
        CircleMap::from_samples(self.samples, self.winding)
    }
}

/// DFT coefficients `a_n = (1/M) Σ_j F_j e^{−i n t_j}` for `|n| ≤ M/2 − 1`,
/// stored at index `n + N`.
pub fn fourier_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let cutoff = (m / 2).saturating_sub(1) as i64;
    let scale = 1.0 / m as f64;
    (-cutoff..=cutoff)
        .map(|n| buf[n.rem_euclid(m as i64) as usize] * scale)
        .collect()
}

/// Looks up `a_n` in a coefficient array produced by [`fourier_coefficients`].
pub fn coefficient(coeffs: &[Complex64], n: i64) -> Complex64 {
    let cutoff = (coeffs.len() / 2) as i64;
    if n.abs() > cutoff {
        Complex64::new(0.0, 0.0)
    } else {
        coeffs[(n + cutoff) as usize]
    }
}

/// A plane-valued map on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMap {
    samples: Vec<Complex64>,
}

impl PlaneMap {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < MIN_GRID {
            return Err(Error::GridTooSmall(samples.len()));
        }
        if let Some(index) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(PlaneMap { samples })
    }

    /// Samples a function of the angle.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new((0..m).map(|j| f(grid_angle(j, m))).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn scale(&self, c: Complex64) -> Self {
        PlaneMap {
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    /// Linear interpolation of the samples at an arbitrary angle.
    pub fn at(&self, t: f64) -> Complex64 {
        let m = self.samples.len();
        let u = t * m as f64 / TAU;
        let j = u.floor();
        let frac = u - j;
        let j = (j as i64).rem_euclid(m as i64) as usize;
        let a = self.samples[j];
        let b = self.samples[(j + 1) % m];
        a + (b - a) * frac
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fourier(&self) -> Vec<Complex64> {
        fourier_coefficients(&self.samples)
    }
}

fn same_grid(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::GridMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

/// `f·g`: liftings add.
pub fn pointwise_product(f: &CircleMap, g: &CircleMap) -> Result<CircleMap> {
    same_grid(f.grid_size(), g.grid_size())?;
    let samples = f.phases().iter().zip(g.phases()).map(|(a, b)| a + b).collect();
    CircleMap::from_samples(samples, f.winding() + g.winding())
}

/// `f/g = f·ḡ`: liftings subtract.
pub fn pointwise_quotient(f: &CircleMap, g: &CircleMap) -> Result<CircleMap> {
    same_grid(f.grid_size(), g.grid_size())?;
    let samples = f.phases().iter().zip(g.phases()).map(|(a, b)| a - b).collect();
    CircleMap::from_samples(samples, f.winding() - g.winding())
}

/// `f − g` as a plane-valued map.
pub fn difference(f: &CircleMap, g: &CircleMap) -> Result<PlaneMap> {
    same_grid(f.grid_size(), g.grid_size())?;
    let samples = f
        .phases()
        .iter()
        .zip(g.phases())
        .map(|(&a, &b)| Complex64::from_polar(1.0, a) - Complex64::from_polar(1.0, b))
        .collect();
    Ok(PlaneMap { samples })
}

/// Radial projection `F/|F|` with the default modulus floor.
pub fn project_to_circle(f: &PlaneMap) -> Result<CircleMap> {
    project_to_circle_with_floor(f, PROJECTION_FLOOR)
}

/// Radial projection, unwrapping the phase by nearest-branch continuation.
pub fn project_to_circle_with_floor(f: &PlaneMap, floor: f64) -> Result<CircleMap> {
    let m = f.grid_size();
    let mut samples = Vec::with_capacity(m);
    for (index, z) in f.samples.iter().enumerate() {
        let modulus = z.norm();
        if modulus < floor {
            return Err(Error::NearZero { index, modulus });
        }
        let arg = z.arg();
        let next = match samples.last() {
            None => arg,
            Some(&prev) => prev + crate::geometry::wrap_signed(arg - prev),
        };
        samples.push(next);
    }
    let closure = crate::geometry::wrap_signed(samples[0] - samples[m - 1]);
    let winding = ((samples[m - 1] + closure - samples[0]) / TAU).round() as i64;
    CircleMap::from_samples(samples, winding)
}

/// `z^d` on `m` grid points.
pub fn power_map(d: i64, m: usize) -> Result<CircleMap> {
    CircleMap::sample(&Power(d), m)
}

/// The zig-zag map on `m` grid points; `m` must be a multiple of `2n`.
pub fn zigzag(n: usize, alpha: f64, m: usize) -> Result<CircleMap> {
    let z = Zigzag::new(n, alpha)?;
    if !m.is_multiple_of(2 * n) {
        return Err(Error::Indivisible {
            grid: m,
            divisor: 2 * n,
            reason: "zig-zag breakpoints must be grid nodes",
        });
    }
    let per_arc = m / (2 * n);
    let h = TAU / m as f64;
    let samples = (0..m)
        .map(|j| z.on_arc(j / per_arc, (j % per_arc) as f64 * h))
        .collect();
    CircleMap::from_samples(samples, 1)
}

/// The collapse map `K_δ` on `m` grid points.
pub fn kdelta(delta: f64, m: usize) -> Result<CircleMap> {
    let k = KDelta::new(delta)?;
    if (delta * m as f64 / TAU) < 2.0 {
        return Err(invalid(
            "delta",
            format!("grid of {m} points puts fewer than two samples in each flat branch"),
        ));
    }
    CircleMap::sample(&k, m)
}

/// See [`Mobius::from_triples`].
pub fn mobius_from_triples(src: [f64; 3], dst: [f64; 3]) -> Result<Mobius> {
    Mobius::from_triples(src, dst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_distance, normalize};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn power_map_examples() {
        let c = power_map(0, 64).unwrap();
        assert!(c.phases().iter().all(|&t| t == 0.0));
        assert_eq!(c.winding(), 0);
        let f = power_map(-3, 256).unwrap();
        assert_eq!(f.winding(), -3);
        for j in 0..256 {
            assert_eq!(f.phases()[j], -3.0 * (TAU * j as f64 / 256.0));
        }
    }

    #[test]
    fn lifting_rejects_small_or_broken_grids() {
        assert!(matches!(power_map(1, 8), Err(Error::GridTooSmall(8))));
        let mut s: Vec<f64> = (0..32).map(|j| grid_angle(j, 32)).collect();
        assert!(PhaseLifting::new(s.clone(), 2).is_err());
        s[5] += 4.0;
        assert!(matches!(
            PhaseLifting::new(s.clone(), 1),
            Err(Error::UnresolvedLifting { index: 4, .. })
        ));
        s[5] = f64::NAN;
        assert!(matches!(PhaseLifting::new(s, 1), Err(Error::NonFinite { index: 5 })));
    }

    #[test]
    fn zigzag_n1_is_identity() {
        let z = zigzag(1, 0.9, 64).unwrap();
        let id = power_map(1, 64).unwrap();
        for (a, b) in z.phases().iter().zip(id.phases()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    /// Independent oracle: integrate the slope pattern cell by cell.
    fn zigzag_oracle(n: usize, alpha: f64, m: usize) -> Vec<f64> {
        let s = (n as f64).powf(alpha);
        let h = TAU / m as f64;
        let per_arc = m / (2 * n);
        let mut out = vec![0.0];
        for j in 0..m - 1 {
            let slope = if (j / per_arc).is_multiple_of(2) { s } else { 2.0 - s };
            out.push(out[j] + slope * h);
        }
        out
    }

    #[test]
    fn zigzag_matches_slope_integration() {
        for &(n, alpha, m) in &[(4, 0.8, 64), (16, 0.75, 512), (7, 0.6, 14 * 20)] {
            let z = zigzag(n, alpha, m).unwrap();
            let oracle = zigzag_oracle(n, alpha, m);
            for (a, b) in z.phases().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
            assert_eq!(z.winding(), 1);
            assert_relative_eq!(Zigzag::new(n, alpha).unwrap().lift(TAU), TAU, epsilon = 1e-12);
        }
    }

    #[test]
    fn zigzag_grid_must_resolve_breakpoints() {
        assert!(matches!(zigzag(4, 0.8, 60), Err(Error::Indivisible { divisor: 8, .. })));
    }

    #[test]
    fn zigzag_exponent_window() {
        assert!(Zigzag::for_exponent(4, 0.4, 2.0).is_err());
        assert!(Zigzag::for_exponent(4, 0.75, 2.0).is_ok());
        assert!(Zigzag::for_exponent(4, 0.6, 1.5).is_err());
        assert_relative_eq!(default_alpha(2.0), 0.75);
        assert_relative_eq!(default_alpha(1.5), (1.0 / 1.5 + 1.0) / 2.0);
    }

    #[test]
    fn zigzag_lift_agrees_with_sampler() {
        let z = Zigzag::new(8, 0.7).unwrap();
        let m = 256;
        let sampled = zigzag(8, 0.7, m).unwrap();
        for j in 0..m {
            assert!((z.lift(grid_angle(j, m)) - sampled.phases()[j]).abs() < 1e-9);
        }
        assert_relative_eq!(z.lift(1.0 + TAU), z.lift(1.0) + TAU, epsilon = 1e-12);
    }

    #[test]
    fn kdelta_branches() {
        let k = KDelta::new(0.2).unwrap();
        assert_relative_eq!(k.lift(PI / 2.0), PI * (PI / 2.0 - 0.2) / (PI - 0.4));
        for t in [PI - 0.2, PI, PI + 0.15, PI + 0.2] {
            assert_eq!(k.lift(t), PI);
        }
        assert_eq!(k.lift(0.1), 0.0);
        assert_eq!(k.lift(TAU - 0.1), TAU);
        let small = KDelta::new(1e-6).unwrap();
        assert!((small.lift(PI / 2.0) - PI / 2.0).abs() < 1e-5);
        assert_eq!(kdelta(0.3, 512).unwrap().winding(), 1);
        assert!(KDelta::new(PI / 2.0).is_err());
        assert!(kdelta(0.01, 64).is_err());
    }

    #[test]
    fn mobius_identity_from_equal_triples() {
        let t = [0.3, 2.0, 4.0];
        let m = mobius_from_triples(t, t).unwrap();
        assert!(m.center().norm() < 1e-12);
        for k in 0..20 {
            let x = k as f64 * 0.3;
            assert!((m.lift(x) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn mobius_maps_triples_and_long_arc() {
        let m = mobius_from_triples([PI + 1.0, 0.0, PI - 1.0], [-0.3, 0.0, 0.3]).unwrap();
        for (s, d) in [(PI + 1.0, -0.3), (0.0, 0.0), (PI - 1.0, 0.3)] {
            let z = m.apply(Complex64::from_polar(1.0, s));
            assert!((z - Complex64::from_polar(1.0, d)).norm() < 1e-12);
        }
        for k in 1..100 {
            let x = PI + 1.0 + k as f64 * (TAU - 2.0) / 100.0;
            assert!(geodesic_distance(m.lift(x), 0.0) <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn mobius_rejects_bad_triples() {
        assert!(matches!(
            mobius_from_triples([0.0, 0.0, 1.0], [0.0, 1.0, 2.0]),
            Err(Error::DegenerateTriple(_))
        ));
        assert!(mobius_from_triples([0.0, 2.0, 1.0], [0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn mobius_lift_is_continuous_lifting_of_action() {
        let m = Mobius::concentrating(16.0, 0.2).unwrap();
        let mut prev = m.lift(0.0);
        for k in 1..=20000 {
            let x = k as f64 * TAU / 20000.0;
            let v = m.lift(x);
            assert!(v > prev, "not monotone at {x}");
            assert!((v - prev) <= m.max_derivative() * TAU / 20000.0 * (1.0 + 1e-9));
            let z = m.apply(Complex64::from_polar(1.0, x));
            assert!((Complex64::from_polar(1.0, v) - z).norm() < 1e-12);
            prev = v;
        }
        assert_relative_eq!(m.lift(TAU), m.lift(0.0) + TAU, epsilon = 1e-9);
        let inv = m.inverse();
        for k in 0..50 {
            let x = k as f64 * 0.13;
            assert!(geodesic_distance(inv.lift(m.lift(x)), x) < 1e-10);
        }
    }

    #[test]
    fn product_quotient_difference() {
        let f = power_map(2, 64).unwrap();
        let g = power_map(3, 64).unwrap();
        let close = |a: &CircleMap, b: &CircleMap| {
            a.winding() == b.winding() && a.phases().iter().zip(b.phases()).all(|(x, y)| (x - y).abs() < 1e-12)
        };
        assert!(close(&pointwise_product(&f, &g).unwrap(), &power_map(5, 64).unwrap()));
        let q = pointwise_quotient(&power_map(5, 64).unwrap(), &f).unwrap();
        assert!(close(&q, &g));
        let c = pointwise_product(&f, &f.conj()).unwrap();
        assert!(c.phases().iter().all(|&t| t == 0.0));
        let u = zigzag(4, 0.75, 64).unwrap();
        assert_eq!(pointwise_quotient(&f, &u).unwrap().winding(), 1);
        assert!(matches!(
            pointwise_product(&f, &power_map(1, 32).unwrap()),
            Err(Error::GridMismatch { .. })
        ));
        let d = difference(&power_map(1, 64).unwrap(), &power_map(-1, 64).unwrap()).unwrap();
        for j in 0..64 {
            let t = grid_angle(j, 64);
            assert!((d.samples()[j] - Complex64::new(0.0, 2.0 * t.sin())).norm() < 1e-14);
        }
        assert!(difference(&f, &f).unwrap().sup_norm() == 0.0);
    }

    #[test]
    fn projection_examples() {
        let f = power_map(3, 128).unwrap();
        let p = project_to_circle(&f.to_plane()).unwrap();
        assert_eq!(p.winding(), 3);
        let big = f.to_plane().scale(Complex64::new(2.0, 0.0));
        let q = project_to_circle(&big).unwrap();
        for j in 0..128 {
            assert!((q.value(j) - f.value(j)).norm() < 1e-14);
        }
        let zero = PlaneMap::from_fn(32, |t| Complex64::new(t.cos(), 0.0)).unwrap();
        assert!(matches!(project_to_circle(&zero), Err(Error::NearZero { .. })));
    }

    #[test]
    fn fourier_of_power_map() {
        let f = power_map(3, 64).unwrap();
        let a = f.fourier();
        assert_eq!(a.len(), 2 * 31 + 1);
        for n in -31..=31 {
            let expect = if n == 3 { 1.0 } else { 0.0 };
            assert!((f.fourier_coefficient(n) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn serialization_round_trips() {
        let f = zigzag(4, 0.77, 64).unwrap().rotate(0.1234567890123);
        let back = CircleMap::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
        let back = CircleMap::from_bytes(&f.to_bytes()).unwrap();
        assert_eq!(back, f);
        let mut bytes = f.to_bytes();
        bytes.truncate(40);
        assert!(matches!(CircleMap::from_bytes(&bytes), Err(Error::Format(_))));
        assert!(CircleMap::from_json("{\"grid_size\":16,\"winding\":0,\"samples\":[1]}").is_err());
    }

    #[test]
    fn arc_collapse_is_flat_near_zero() {
        let c = ArcCollapse::new(0.3).unwrap();
        for t in [-0.3, -0.1, 0.0, 0.2, 0.3] {
            assert!(c.lift(t).abs() < 1e-12 || (c.lift(t) - TAU).abs() < 1e-12);
        }
        assert_relative_eq!(c.lift(PI), PI, epsilon = 1e-12);
        assert_relative_eq!(c.lift(1.0 + TAU), c.lift(1.0) + TAU, epsilon = 1e-12);
    }

    #[test]
    fn piecewise_linear_interpolates() {
        let p = PiecewiseLinear::new(1, vec![0.0, 1.0, 4.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(p.lift(0.5), 1.0);
        assert_relative_eq!(p.lift(2.5), 2.5);
        assert_relative_eq!(p.lift(TAU + 0.5), 1.0 + TAU);
        assert_relative_eq!(p.lipschitz(), 2.0);
    }

    fn arb_trig(max_deg: i64) -> impl Strategy<Value = TrigLift> {
        (
            -max_deg..=max_deg,
            prop::collection::vec((-0.3..0.3f64, -0.3..0.3f64), 1..4),
        )
            .prop_map(|(degree, ab)| TrigLift {
                degree,
                cos: ab.iter().map(|x| x.0).collect(),
                sin: ab.iter().map(|x| x.1).collect(),
            })
    }

    proptest! {
        #[test]
        fn windings_add_under_products(f in arb_trig(4), g in arb_trig(4)) {
            let m = 128;
            let fm = CircleMap::sample(&f, m).unwrap();
            let gm = CircleMap::sample(&g, m).unwrap();
            let prod = pointwise_product(&fm, &gm).unwrap();
            prop_assert_eq!(prod.winding(), f.degree + g.degree);
            prop_assert_eq!(prod.lifting().reconstructed_winding(), f.degree + g.degree);
            let quot = pointwise_quotient(&fm, &gm).unwrap();
            prop_assert_eq!(quot.lifting().reconstructed_winding(), f.degree - g.degree);
        }

        #[test]
        fn zigzag_closeness(n in 1usize..40, alpha in 0.05..0.95f64) {
            let m = 2 * n * 8;
            let z = zigzag(n, alpha, m).unwrap();
            let bound = Zigzag::new(n, alpha).unwrap().closeness_bound();
            for j in 0..m {
                prop_assert!(geodesic_distance(z.phases()[j], grid_angle(j, m)) <= bound);
            }
        }

        #[test]
        fn mobius_composition_keeps_degree(
            d in -3i64..=3, r in 0.0..0.8f64, phi in 0.0..6.2f64, gamma in -3.0..3.0f64,
        ) {
            let m = Mobius::new(gamma, Complex64::from_polar(r, phi)).unwrap();
            let f = power_map(d, 256).unwrap();
            let g = f.compose(&m).unwrap();
            prop_assert_eq!(g.winding(), d);
            prop_assert_eq!(g.lifting().reconstructed_winding(), d);
            let mut prev = m.lift(0.0);
            for j in 1..=256 {
                let v = m.lift(grid_angle(j, 256));
                prop_assert!(v > prev);
                prev = v;
            }
            prop_assert!(normalize(m.lift(1.0) - m.lift(1.0 + TAU)) < 1e-9
                || normalize(m.lift(1.0) - m.lift(1.0 + TAU)) > TAU - 1e-9);
        }
    }
}
