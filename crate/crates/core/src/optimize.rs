//! Upper-bound estimates of minimal class energies and of distances from a
//! map to a degree class, plus the explicit bubble competitors.
//!
//! The search space is a base lifting plus `K` trigonometric modes, so every
//! iterate has exactly the target degree.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, check_exponent, EnergyOptions, Field, Quadrature};
use crate::error::{invalid, Error, Result};
use crate::maps::{self, compose, ArcCollapse, CircleMap, Lift, MapRecord, Mobius, Power, Rotate};

/// Optimizer settings shared by all estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub modes: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub resolution: usize,
    /// Amplitude of random initial coefficients; mode `k` is drawn from
    /// `[−s/k, s/k]`.
    pub init_scale: f64,
    pub armijo: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            modes: 24,
            restarts: 8,
            max_iters: 2000,
            grad_tol: 1e-6,
            seed: 0,
            resolution: 512,
            init_scale: 0.5,
            armijo: 1e-4,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(invalid("restarts", "need at least one start"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(invalid("grad_tol", "must be positive"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(invalid("armijo", "must lie in (0, 1)"));
        }
        if self.resolution < 16 || !self.resolution.is_multiple_of(2) {
            return Err(invalid("resolution", "must be even and at least 16"));
        }
        if !(self.init_scale >= 0.0) {
            return Err(invalid("init_scale", "must be nonnegative"));
        }
        Ok(())
    }
}

/// The search space `θ(t) = base(t) + Σ_{k=1..K} (a_k cos kt + b_k sin kt)`
/// where the base has winding `degree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftingParametrization {
    pub degree: i64,
    pub modes: usize,
    pub grid_size: usize,
}

impl LiftingParametrization {
    pub fn dimension(&self) -> usize {
        2 * self.modes
    }

    /// The perturbation as a lifting on top of `d·t`.
    pub fn trig_lift(&self, params: &[f64]) -> maps::TrigLift {
        maps::TrigLift {
            degree: self.degree,
            cos: params[..self.modes].to_vec(),
            sin: params[self.modes..].to_vec(),
        }
    }
}

/// Discretized energy `E_p(offset + sign·e^{iθ})` as a function of the
/// trigonometric coefficients, with its analytic gradient.
pub struct Objective {
    quad: Quadrature,
    offset: Option<Vec<Complex64>>,
    sign: f64,
    base: Vec<f64>,
    space: LiftingParametrization,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

fn fine_angles(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |s| maps::grid_angle(s, count))
}

impl Objective {
    /// `g ↦ E_p(g)` around the base `d·t`.
    pub fn class_energy(d: i64, p: f64, modes: usize, resolution: usize) -> Result<Self> {
        let base = fine_angles(2 * resolution).map(|t| d as f64 * t).collect();
        Self::build(None, 1.0, base, d, p, modes, resolution)
    }

    /// `g ↦ E_p(f − g)` around a given fine-sampled base lifting of degree `d2`.
    pub fn distance(
        f_fine: Vec<Complex64>,
        base: Vec<f64>,
        d2: i64,
        p: f64,
        modes: usize,
        resolution: usize,
    ) -> Result<Self> {
        Self::build(Some(f_fine), -1.0, base, d2, p, modes, resolution)
    }

    fn build(
        offset: Option<Vec<Complex64>>,
        sign: f64,
        base: Vec<f64>,
        degree: i64,
        p: f64,
        modes: usize,
        resolution: usize,
    ) -> Result<Self> {
        let quad = Quadrature::new(resolution, p, &EnergyOptions::default())?;
        let n = quad.sample_count();
        if base.len() != n || offset.as_ref().is_some_and(|o| o.len() != n) {
            return Err(invalid("base", format!("expected {n} fine samples")));
        }
        let mut cos = Vec::with_capacity(modes * n);
        let mut sin = Vec::with_capacity(modes * n);
        for k in 1..=modes {
            for t in fine_angles(n) {
                let (s, c) = (k as f64 * t).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Ok(Objective {
            quad,
            offset,
            sign,
            base,
            space: LiftingParametrization {
                degree,
                modes,
                grid_size: n,
            },
            cos,
            sin,
        })
    }

    pub fn space(&self) -> &LiftingParametrization {
        &self.space
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    pub fn p(&self) -> f64 {
        self.quad.p()
    }

    /// Fine-grid lifting for the given coefficients.
    pub fn phases(&self, x: &[f64]) -> Vec<f64> {
        let n = self.base.len();
        let k = self.space.modes;
        let mut theta = self.base.clone();
        for m in 0..k {
            let (a, b) = (x[m], x[k + m]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let c = &self.cos[m * n..(m + 1) * n];
            let s = &self.sin[m * n..(m + 1) * n];
            for i in 0..n {
                theta[i] += a * c[i] + b * s[i];
            }
        }
        theta
    }

    fn field(&self, theta: &[f64]) -> Vec<Complex64> {
        let g = theta.iter().map(|&t| Complex64::from_polar(self.sign, t));
        match &self.offset {
            None => g.collect(),
            Some(f) => f.iter().zip(g).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.quad.energy(&self.field(&self.phases(x)))
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let theta = self.phases(x);
        let (value, gamma) = self.quad.energy_and_gradient(&self.field(&theta));
        let n = theta.len();
        // ∂E/∂θ_s = Re(conj(Γ_s)·sign·i·e^{iθ_s})
        let dtheta: Vec<f64> = theta
            .iter()
            .zip(&gamma)
            .map(|(&t, g)| (g.conj() * Complex64::new(0.0, self.sign) * Complex64::from_polar(1.0, t)).re)
            .collect();
        let k = self.space.modes;
        let mut grad = vec![0.0; 2 * k];
        for m in 0..k {
            let c = &self.cos[m * n..(m + 1) * n];
            let s = &self.sin[m * n..(m + 1) * n];
            grad[m] = dtheta.iter().zip(c).map(|(d, c)| d * c).sum();
            grad[k + m] = dtheta.iter().zip(s).map(|(d, s)| d * s).sum();
        }
        (value, grad)
    }

    /// The iterate as a circle map on the fine grid.
    pub fn map(&self, x: &[f64]) -> Result<CircleMap> {
        CircleMap::from_samples(self.phases(x), self.space.degree)
    }
}

/// Outcome of one descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentRun {
    pub start: usize,
    pub params: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Accepted energies, starting with the initial value.
    pub trace: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient descent with Armijo backtracking (step halving).
pub fn gradient_descent(obj: &Objective, x0: Vec<f64>, cfg: &OptimizerConfig, start: usize) -> DescentRun {
    let mut x = x0;
    let (mut e, mut g) = obj.value_and_gradient(&x);
    let mut trace = vec![e];
    let mut step = 1.0 / (1.0 + norm(&g));
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let gn = norm(&g);
        if gn < cfg.grad_tol * (1.0 + e) {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let et = obj.value(&trial);
            if et <= e - cfg.armijo * step * gn * gn {
                accepted = Some((trial, et));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, _)) = accepted else {
            // no decrease at any representable step: stationary to rounding
            converged = gn < 1e3 * cfg.grad_tol * (1.0 + e);
            break;
        };
        x = trial;
        let (en, gnew) = obj.value_and_gradient(&x);
        // the gradient-path value can differ from the line-search value by rounding
        e = en.min(*trace.last().unwrap());
        g = gnew;
        trace.push(e);
        iterations += 1;
        step *= 2.0;
    }
    DescentRun {
        start,
        params: x,
        value: e,
        iterations,
        gradient_norm: norm(&g),
        converged,
        trace,
    }
}

/// Runs every start in parallel and orders runs by (value, start index).
pub fn multi_start(obj: &Objective, starts: Vec<Vec<f64>>, cfg: &OptimizerConfig) -> Vec<DescentRun> {
    let mut runs: Vec<DescentRun> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, x0)| gradient_descent(obj, x0, cfg, i))
        .collect();
    runs.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.start.cmp(&b.start)));
    runs
}

/// Random coefficient vector for restart `index`.
pub fn random_start(modes: usize, scale: f64, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    let mut x = vec![0.0; 2 * modes];
    for k in 0..modes {
        let amp = scale / (k + 1) as f64;
        x[k] = rng.gen_range(-amp..=amp);
        x[modes + k] = rng.gen_range(-amp..=amp);
    }
    x
}

/// Summary of the explicit competitor used to seed a distance search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorSummary {
    pub distance: f64,
    pub eta: f64,
    pub n: f64,
    pub center: f64,
}

/// Best value found over a degree class, with optimizer metadata.
///
/// For minimal class energies `d1 = 0` and `best_value` is the semi-norm
/// `E_p(g)^{1/p}`; for distances it is `E_p(f − g)^{1/p}`. Either way it is
/// an upper bound on the true infimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistanceEstimate {
    pub d1: i64,
    pub d2: i64,
    pub p: f64,
    pub best_value: f64,
    pub certificate: MapRecord,
    pub iterations: usize,
    pub gradient_norm_at_exit: f64,
    pub restarts: usize,
    pub converged: bool,
    /// `E^{1/p}` of every run, ordered by value.
    pub local_values: Vec<f64>,
    /// Accepted energies of the best run.
    pub trace: Vec<f64>,
    pub competitor: Option<CompetitorSummary>,
}

impl ClassDistanceEstimate {
    pub fn certificate_map(&self) -> Result<CircleMap> {
        self.certificate.clone().into_map()
    }

    fn from_runs(
        obj: &Objective,
        runs: &[DescentRun],
        d1: i64,
        d2: i64,
        competitor: Option<CompetitorSummary>,
    ) -> Result<Self> {
        let p = obj.p();
        let best = &runs[0];
        Ok(ClassDistanceEstimate {
            d1,
            d2,
            p,
            best_value: best.value.max(0.0).powf(1.0 / p),
            certificate: obj.map(&best.params)?.to_record(),
            iterations: best.iterations,
            gradient_norm_at_exit: best.gradient_norm,
            restarts: runs.len(),
            converged: best.converged,
            local_values: runs.iter().map(|r| r.value.max(0.0).powf(1.0 / p)).collect(),
            trace: best.trace.clone(),
            competitor,
        })
    }
}

/// Upper-bound estimate of `σ_p(d)`: zero perturbation of `z^d` plus
/// `restarts − 1` random starts.
pub fn estimate_sigma(d: i64, p: f64, cfg: &OptimizerConfig) -> Result<ClassDistanceEstimate> {
    check_exponent(p)?;
    cfg.validate()?;
    let obj = Objective::class_energy(d, p, cfg.modes, cfg.resolution)?;
    let mut starts = vec![vec![0.0; obj.dimension()]];
    for i in 1..cfg.restarts {
        starts.push(random_start(cfg.modes, cfg.init_scale, cfg.seed, i));
    }
    let runs = multi_start(&obj, starts, cfg);
    ClassDistanceEstimate::from_runs(&obj, &runs, 0, d, None)
}

/// Settings of the bubble competitor sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompetitorOptions {
    /// Half-width of the flat arc that must contain the concentration arc.
    pub delta0: f64,
    /// Oscillation of the lifting on `𝒜(π−δ₀, π+δ₀)` below which the bubble
    /// stays at `π`.
    pub flatness_bound: f64,
    /// Flattening radii of the profile `h` to try.
    pub etas: Vec<f64>,
    /// Number of concentration levels per radius.
    pub levels: usize,
}

impl Default for CompetitorOptions {
    fn default() -> Self {
        CompetitorOptions {
            delta0: 0.05,
            flatness_bound: 0.05,
            etas: vec![0.02, 0.05, 0.1, 0.2, 0.4],
            levels: 6,
        }
    }
}

/// Oscillation `max − min` of the lifting over the closed arc of half-width
/// `delta` around each grid node.
pub fn window_oscillations(f: &CircleMap, delta: f64) -> Vec<f64> {
    let m = f.grid_size();
    let w = ((delta * m as f64 / TAU).floor() as usize).max(1);
    let lift = f.lifting();
    let value = |j: i64| -> f64 {
        let k = j.div_euclid(m as i64);
        let jj = j.rem_euclid(m as i64) as usize;
        lift.samples()[jj] + TAU * f.winding() as f64 * k as f64
    };
    (0..m as i64)
        .map(|c| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for j in c - w as i64..=c + w as i64 {
                let v = value(j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            hi - lo
        })
        .collect()
}

/// Center for the bubble: `π` when `f` is flat enough there, otherwise the
/// grid node with the flattest window, preferring the one nearest `π` among
/// near-ties.
pub fn flattest_center(f: &CircleMap, opts: &CompetitorOptions) -> f64 {
    let m = f.grid_size();
    let osc = window_oscillations(f, opts.delta0);
    let at_pi = m / 2;
    if m.is_multiple_of(2) && osc[at_pi] <= opts.flatness_bound {
        return PI;
    }
    let best = osc.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-6 * (1.0 + best);
    (0..m)
        .filter(|&j| osc[j] <= best + tol)
        .map(|j| maps::grid_angle(j, m))
        .min_by(|a, b| (a - PI).abs().total_cmp(&(b - PI).abs()))
        .unwrap_or(PI)
}

/// Bubble `h∘ℳ_n` rotated to `center`, with `h = z^{Δd}` collapsed to `1` on
/// `𝒜[−η, η]`.
pub fn bubble(delta_d: i64, eta: f64, n: f64, center: f64) -> Result<impl Lift> {
    let m = Mobius::concentrating(n, eta)?;
    let h = compose(Power(delta_d), ArcCollapse::new(eta)?);
    Ok(Rotate {
        inner: compose(h, m),
        shift: center - PI,
        offset: 0.0,
    })
}

fn check_competitor_args(eta: f64, n: f64, delta0: f64) -> Result<()> {
    if !(eta > 0.0 && eta < PI / 2.0) {
        return Err(invalid("eta", format!("{eta} is outside (0, π/2)")));
    }
    if !(1.0 / n < delta0) {
        return Err(invalid(
            "n",
            format!("concentration arc 1/n = {} must be below δ₀ = {delta0}", 1.0 / n),
        ));
    }
    Ok(())
}

/// `g = f·(h∘ℳ_n)` with the bubble at [`flattest_center`]; degree
/// `deg f + delta_d`.
pub fn construct_upper_bound_competitor(
    f: &CircleMap,
    delta_d: i64,
    eta: f64,
    n: f64,
    opts: &CompetitorOptions,
) -> Result<CircleMap> {
    if delta_d == 0 {
        return Ok(f.clone());
    }
    check_competitor_args(eta, n, opts.delta0)?;
    let center = flattest_center(f, opts);
    let b = CircleMap::sample(&bubble(delta_d, eta, n, center)?, f.grid_size())?;
    maps::pointwise_product(f, &b)
}

/// Largest concentration `n` whose bubble stays resolved on a grid of `m`
/// nodes, found by bisection on the sampled jump size.
fn max_resolved_n(delta_d: i64, eta: f64, m: usize) -> Option<f64> {
    let h = TAU / m as f64;
    let slope = |n: f64| -> Option<f64> {
        let mob = Mobius::concentrating(n, eta).ok()?;
        Some(delta_d.unsigned_abs() as f64 * mob.max_derivative() * TAU / (TAU - 2.0 * eta))
    };
    let ok = |n: f64| slope(n).is_some_and(|s| s * h < PI / 2.0);
    let (mut lo, mut hi) = (1.0, 1.0);
    if !ok(lo) {
        return None;
    }
    while ok(hi) && hi < 1e9 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Sweeps `(η, n)` and returns the competitor of smallest distance to `f`.
pub fn best_competitor(
    f: &CircleMap,
    delta_d: i64,
    p: f64,
    resolution: usize,
    opts: &CompetitorOptions,
) -> Result<(CircleMap, CompetitorSummary)> {
    let m = 2 * resolution;
    let f_fine = f.resample(m)?;
    let center = flattest_center(&f_fine, opts);
    if delta_d == 0 {
        return Ok((
            f_fine,
            CompetitorSummary {
                distance: 0.0,
                eta: 0.0,
                n: f64::INFINITY,
                center,
            },
        ));
    }
    let n_min = 1.0 / opts.delta0 * 1.01;
    let mut candidates = Vec::new();
    for &eta in &opts.etas {
        let Some(n_max) = max_resolved_n(delta_d, eta, m) else {
            continue;
        };
        if n_max <= n_min {
            continue;
        }
        let levels = opts.levels.max(1);
        for l in 0..levels {
            let frac = if levels == 1 {
                1.0
            } else {
                l as f64 / (levels - 1) as f64
            };
            candidates.push((eta, n_min * (n_max / n_min).powf(frac)));
        }
    }
    if candidates.is_empty() {
        return Err(invalid("resolution", "no resolvable bubble at this resolution"));
    }
    let scored: Vec<Result<(CircleMap, CompetitorSummary)>> = candidates
        .par_iter()
        .map(|&(eta, n)| {
            let b = CircleMap::sample(&bubble(delta_d, eta, n, center)?, m)?;
            let g = maps::pointwise_product(&f_fine, &b)?;
            let d = energy::seminorm_distance(&f_fine, &g, p, resolution)?.distance;
            Ok((
                g,
                CompetitorSummary {
                    distance: d,
                    eta,
                    n,
                    center,
                },
            ))
        })
        .collect();
    let mut best: Option<(CircleMap, CompetitorSummary)> = None;
    for item in scored {
        let (g, s) = item?;
        if best.as_ref().is_none_or(|(_, b)| s.distance < b.distance) {
            best = Some((g, s));
        }
    }
    Ok(best.expect("nonempty candidate list"))
}

/// Upper-bound estimate of `inf_{g ∈ E_{d2}} |f − g|`, seeded from the
/// explicit competitor, from `f·z^{d2−d1}`, and from random perturbations of
/// the latter.
pub fn estimate_dist_to_class(
    f: &CircleMap,
    d2: i64,
    p: f64,
    cfg: &OptimizerConfig,
    opts: &CompetitorOptions,
) -> Result<ClassDistanceEstimate> {
    check_exponent(p)?;
    cfg.validate()?;
    let r = cfg.resolution;
    let n = 2 * r;
    if !n.is_multiple_of(f.grid_size()) {
        return Err(Error::Indivisible {
            grid: n,
            divisor: f.grid_size(),
            reason: "twice the resolution must be a multiple of the map grid",
        });
    }
    let d1 = f.winding();
    let delta_d = d2 - d1;
    let f_fine = f.resample(n)?;
    let values = f_fine.fine_values(n);
    let product_base: Vec<f64> = f_fine
        .phases()
        .iter()
        .zip(fine_angles(n))
        .map(|(th, t)| th + delta_d as f64 * t)
        .collect();
    let mut bases = Vec::new();
    let mut competitor = None;
    if delta_d != 0 {
        // an unresolvable bubble only removes one seed
        if let Ok((g, summary)) = best_competitor(&f_fine, delta_d, p, r, opts) {
            bases.push(g.phases().to_vec());
            competitor = Some(summary);
        }
    }
    bases.push(product_base.clone());

    let dim = 2 * cfg.modes;
    let mut all_runs = Vec::new();
    let mut objectives = Vec::new();
    for base in bases {
        objectives.push(Objective::distance(values.clone(), base, d2, p, cfg.modes, r)?);
    }
    let product_idx = objectives.len() - 1;
    let mut jobs: Vec<(usize, Vec<f64>)> = (0..objectives.len()).map(|i| (i, vec![0.0; dim])).collect();
    for i in 1..cfg.restarts {
        jobs.push((product_idx, random_start(cfg.modes, cfg.init_scale, cfg.seed, i)));
    }
    let runs: Vec<(usize, DescentRun)> = jobs
        .into_par_iter()
        .enumerate()
        .map(|(start, (which, x0))| (which, gradient_descent(&objectives[which], x0, cfg, start)))
        .collect();
    all_runs.extend(runs);
    all_runs.sort_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.1.start.cmp(&b.1.start)));
    let (which, _) = all_runs[0];
    let ordered: Vec<DescentRun> = all_runs.iter().map(|(_, r)| r.clone()).collect();
    ClassDistanceEstimate::from_runs(&objectives[which], &ordered, d1, d2, competitor)
}

/// One row of the vanishing-distance sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingRow {
    pub n: usize,
    pub distance: f64,
    pub error_estimate: f64,
}

/// Degree-one lifting whose chord `2|sin(ψ/2)|` equals `2Λ`, where `Λ` is a
/// logarithmic cutoff around `center`: `1` within `r₀/n`, decaying like
/// `log(r₀/|x−c|)/log(n)` out to `r₀`, and `0` beyond.
pub fn log_cutoff_bubble(center: f64, r0: f64, n: f64) -> impl Lift {
    let inner = r0 / n;
    let denom = n.ln();
    maps::FnLift::new(1, move |t: f64| {
        // signed offset in (−π, π], plus the number of full turns
        let turns = ((t - center + PI) / TAU).floor();
        let x = t - center - turns * TAU;
        let a = x.abs();
        let lam = if a <= inner {
            1.0
        } else if a < r0 {
            (r0 / a).ln() / denom
        } else {
            0.0
        };
        let half = lam.clamp(0.0, 1.0).asin();
        let psi = if x < 0.0 { 2.0 * half } else { TAU - 2.0 * half };
        psi + TAU * turns
    })
}

/// Lifting with winding `total/2` (in turns, half-integers allowed through
/// `2·total`) that is constant on each arc `[c_i − r₀, c_i + r₀]` and
/// linear in between.
fn plateau_lift(centers: &[f64], r0: f64, half_turns: i64, m: usize) -> Vec<f64> {
    let free = TAU - 2.0 * r0 * centers.len() as f64;
    let rise = PI * half_turns as f64;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let t = maps::grid_angle(j, m);
        // measure of [0, t] outside the plateaus
        let mut covered = 0.0;
        for &c in centers {
            let (lo, hi) = (c - r0, c + r0);
            covered += (t.min(hi) - lo).clamp(0.0, hi - lo);
        }
        out.push(rise * (t - covered) / free);
    }
    out
}

/// Pairs `(f, g) ∈ E_{d1} × E_{d2}` with `|f − g| → 0`: `f − g` is a constant
/// multiple of a logarithmic cutoff on `|d2 − d1|` disjoint arcs.
pub fn vanishing_pair(d1: i64, d2: i64, n: f64, m: usize, r0: f64) -> Result<(CircleMap, CircleMap)> {
    let k = d2 - d1;
    if k == 0 {
        let f = maps::power_map(d1, m)?;
        return Ok((f.clone(), f));
    }
    let count = k.unsigned_abs() as usize;
    if !(r0 * (count as f64) < PI) || !(r0 > 0.0) || !(n > 1.0) {
        return Err(invalid("r0", "bubbles must fit disjointly on the circle"));
    }
    let centers: Vec<f64> = (0..count)
        .map(|i| PI + (i as f64 - (count as f64 - 1.0) / 2.0) * TAU / count as f64)
        .collect();
    let bubbles: Vec<_> = centers.iter().map(|&c| log_cutoff_bubble(c, r0, n)).collect();
    let sign = k.signum() as f64;
    let psi: Vec<f64> = (0..m)
        .map(|j| {
            let t = maps::grid_angle(j, m);
            sign * bubbles.iter().map(|b| b.lift(t)).sum::<f64>()
        })
        .collect();
    // total rise of β is 2π(d1 + k/2) = π(2·d1 + k)
    let beta = plateau_lift(&centers, r0, 2 * d1 + k, m);
    let f_th: Vec<f64> = beta.iter().zip(&psi).map(|(b, s)| b - s / 2.0).collect();
    let g_th: Vec<f64> = beta.iter().zip(&psi).map(|(b, s)| b + s / 2.0).collect();
    // liftings shifted by a constant so that f's sample 0 is canonical
    Ok((CircleMap::from_samples(f_th, d1)?, CircleMap::from_samples(g_th, d2)?))
}

/// Distances `|f_n − g_n|` along the sweep; see [`vanishing_pair`].
pub fn dist_between_classes_vanishes_demo(
    d1: i64,
    d2: i64,
    p: f64,
    n_sweep: &[usize],
    resolution: usize,
) -> Result<Vec<VanishingRow>> {
    check_exponent(p)?;
    n_sweep
        .iter()
        .map(|&n| {
            let count = (d2 - d1).unsigned_abs().max(1) as f64;
            let r0 = (0.9 * PI / count).min(1.0);
            let (f, g) = vanishing_pair(d1, d2, n as f64, 2 * resolution, r0)?;
            let d = energy::seminorm_distance(&f, &g, p, resolution)?;
            Ok(VanishingRow {
                n,
                distance: d.distance,
                error_estimate: d.energy.error_estimate,
            })
        })
        .collect()
}

/// True when each distance is strictly below its predecessor.
pub fn strictly_decreasing(rows: &[VanishingRow]) -> bool {
    rows.windows(2).all(|w| w[1].distance < w[0].distance)
}
