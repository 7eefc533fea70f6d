//! Randomized checks of the supporting inequalities.
//!
//! Every check draws inputs that satisfy the hypotheses by construction and
//! counts how often the conclusion fails. Trials are independent; trial `t`
//! uses its own ChaCha stream, so a report depends only on the seed and the
//! settings, never on the thread count.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{hurwitz_zeta, restricted_energy_decomposition, KeyLemmaInstance};
use crate::error::{invalid, Result};
use crate::maps::{self, compose, CircleMap, KDelta, Lift, PiecewiseLinear, Power};
use crate::optimize::{estimate_sigma, OptimizerConfig};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub lemma: String,
    pub trials: usize,
    pub violations: usize,
    /// Smallest observed `rhs-side slack`; negative exactly when violated.
    pub worst_margin: f64,
    pub sampler: String,
    pub seed: u64,
    /// Measured constants, keyed by name.
    pub constants: BTreeMap<String, f64>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Appends one JSON object per report to `path`.
pub fn append_jsonl(path: &Path, reports: &[PropertyReport]) -> Result<()> {
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for r in reports {
        writeln!(file, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Folds per-trial margins into `(violations, worst)`; a margin below
/// `-tol` counts as a violation.
fn tally(margins: impl ParallelIterator<Item = f64>, tol: f64) -> (usize, f64) {
    margins
        .map(|m| ((m < -tol) as usize, m))
        .reduce(|| (0, f64::INFINITY), |a, b| (a.0 + b.0, a.1.min(b.1)))
}

fn report(lemma: &str, trials: usize, tallied: (usize, f64), sampler: String, seed: u64) -> PropertyReport {
    PropertyReport {
        lemma: lemma.to_string(),
        trials,
        violations: tallied.0,
        worst_margin: tallied.1,
        sampler,
        seed,
        constants: BTreeMap::new(),
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < PI / 2.0) {
        return Err(invalid("eps", format!("{eps} is outside (0, π/2)")));
    }
    Ok(())
}

/// Slack `min_j (|v₁ − v₂| − sin ε·|v_j|)` for tangent vectors `v_j = s_j·i z_j`.
pub fn tangent_margin(z1: f64, z2: f64, s1: f64, s2: f64, eps: f64) -> f64 {
    let v1 = Complex64::new(0.0, s1) * Complex64::from_polar(1.0, z1);
    let v2 = Complex64::new(0.0, s2) * Complex64::from_polar(1.0, z2);
    let d = (v1 - v2).norm();
    (d - eps.sin() * v1.norm()).min(d - eps.sin() * v2.norm())
}

/// Points at geodesic distance in `(ε, π − ε)` with random tangent vectors.
pub fn check_tangent_lemma(trials: usize, eps: f64, seed: u64) -> Result<PropertyReport> {
    check_eps(eps)?;
    let t = tally(
        (0..trials).into_par_iter().map(|i| {
            let mut rng = trial_rng(seed, i);
            let z1 = rng.gen_range(0.0..TAU);
            let sep = rng.gen_range(eps..PI - eps).max(eps.next_up());
            let z2 = if rng.gen_bool(0.5) { z1 + sep } else { z1 - sep };
            let s1: f64 = rng.gen_range(-2.0..2.0);
            let s2: f64 = rng.gen_range(-2.0..2.0);
            tangent_margin(z1, z2, s1, s2, eps) / (1.0 + s1.abs().max(s2.abs()))
        }),
        1e-12,
    );
    Ok(report(
        "tangent",
        trials,
        t,
        format!("eps={eps}; z uniform, separation uniform in (eps, pi-eps), tangent scales uniform in [-2, 2]"),
        seed,
    ))
}

/// Slack `|(z₁−w₁)−(z₂−w₂)|² − sin²ε·max{|z₁−z₂|², |w₁−w₂|²}` on angles.
pub fn chord_margin(z1: f64, w1: f64, z2: f64, w2: f64, eps: f64) -> f64 {
    let e = |a: f64| Complex64::from_polar(1.0, a);
    let (z1, w1, z2, w2) = (e(z1), e(w1), e(z2), e(w2));
    let lhs = ((z1 - w1) - (z2 - w2)).norm_sqr();
    lhs - eps.sin().powi(2) * (z1 - z2).norm_sqr().max((w1 - w2).norm_sqr())
}

/// Quadruples with both ratios `z_j w̄_j` in `𝒜(ε, π−ε)` or both in
/// `𝒜(π+ε, 2π−ε)`.
pub fn check_chord_lemma(trials: usize, eps: f64, seed: u64) -> Result<PropertyReport> {
    check_eps(eps)?;
    let t = tally(
        (0..trials).into_par_iter().map(|i| {
            let mut rng = trial_rng(seed, i);
            let lower = rng.gen_bool(0.5);
            let ratio = |rng: &mut ChaCha8Rng| {
                let a = rng.gen_range(eps..PI - eps).max(eps.next_up());
                if lower {
                    a
                } else {
                    a + PI
                }
            };
            let z1 = rng.gen_range(0.0..TAU);
            let z2 = rng.gen_range(0.0..TAU);
            let w1 = z1 - ratio(&mut rng);
            let w2 = z2 - ratio(&mut rng);
            chord_margin(z1, w1, z2, w2, eps)
        }),
        1e-12,
    );
    Ok(report(
        "chord",
        trials,
        t,
        format!("eps={eps}; z uniform, ratio arguments uniform in one admissible arc"),
        seed,
    ))
}

/// `max_{i≠j} |K(x_i) − K(x_j)| / |x_i − x_j|` over grid values `K(x_j)`.
pub fn discrete_lipschitz(vals: &[Complex64]) -> f64 {
    let m = vals.len();
    let pts: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, maps::grid_angle(j, m)))
        .collect();
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            for j in i + 1..m {
                best = best.max((vals[i] - vals[j]).norm() / (pts[i] - pts[j]).norm());
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// A random periodic piecewise-linear lifting.
pub fn random_piecewise_linear(rng: &mut impl Rng) -> PiecewiseLinear {
    let count = rng.gen_range(2..12);
    let mut knots: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..TAU)).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let degree = rng.gen_range(-3i64..=3);
    let values = knots.iter().map(|_| rng.gen_range(-4.0..4.0)).collect();
    PiecewiseLinear::new(degree, knots, values).expect("sorted knots in [0, 2π)")
}

/// Random piecewise-linear `k` sampled on `m` nodes: the discrete ratio must
/// stay below `max{1, L}`.
pub fn check_lip_lemma(trials: usize, m: usize, seed: u64) -> Result<PropertyReport> {
    if m < 16 {
        return Err(invalid("m", "need at least 16 grid nodes"));
    }
    let margins = (0..trials).into_par_iter().map(|i| {
        let mut rng = trial_rng(seed, i);
        let k = random_piecewise_linear(&mut rng);
        let bound = k.lipschitz().max(1.0);
        // K is sampled pointwise; steep segments need not be resolved
        let vals: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(1.0, k.lift(maps::grid_angle(j, m))))
            .collect();
        let ratio = discrete_lipschitz(&vals);
        (bound * (1.0 + 1e-6) - ratio) / bound
    });
    let t = tally(margins, 0.0);
    Ok(report(
        "lip",
        trials,
        t,
        format!("m={m}; 2..12 uniform knots, values uniform in [-4, 4], degree in -3..=3"),
        seed,
    ))
}

/// Staggered quadrature of `∬_{A×A} |x−y|^a` and `∬_{A×S¹} |x−y|^a` for a
/// union of grid cells `A`, with chord distance. Returns `(|A|, AA, AS)`.
///
/// `A` is given by cell membership, so the x-nodes `jh` and y-nodes
/// `(j + ½)h` of a cell both belong to it and carry the same measure.
pub fn arc_set_integrals(cells: &[bool], a: f64) -> (f64, f64, f64) {
    let n = cells.len();
    let h = TAU / n as f64;
    let kernel: Vec<f64> = (0..n)
        .map(|k| (2.0 * ((k as f64 + 0.5) * h / 2.0).sin()).abs().powf(a))
        .collect();
    let row_all: f64 = kernel.iter().sum::<f64>() * h * h;
    let (mut aa, mut count) = (0.0, 0usize);
    for i in (0..n).filter(|&i| cells[i]) {
        count += 1;
        for j in (0..n).filter(|&j| cells[j]) {
            aa += kernel[(j + n - i) % n];
        }
    }
    let measure = count as f64 * h;
    (measure, aa * h * h, count as f64 * row_all)
}

/// `∫_{S¹} |x−y|^{−b} dy` on `n` staggered nodes, with the near-diagonal
/// zeta correction.
pub fn eta_quadrature(b: f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    let raw: f64 = (0..n)
        .map(|k| (2.0 * ((k as f64 + 0.5) * h / 2.0).sin()).abs().powf(-b))
        .sum::<f64>()
        * h;
    raw - 2.0 * h.powf(1.0 - b) * hurwitz_zeta(b, 0.5)
}

fn random_cells(rng: &mut impl Rng, n: usize) -> Vec<bool> {
    let mut cells = vec![false; n];
    let arcs = rng.gen_range(1..5);
    for _ in 0..arcs {
        let start = rng.gen_range(0..n);
        let len = rng.gen_range(1..=n / 3);
        for c in 0..len {
            cells[(start + c) % n] = true;
        }
    }
    cells
}

/// Settings for [`check_elementary_inequalities`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElementarySettings {
    pub scalar_trials: usize,
    pub set_trials: usize,
    pub grid: usize,
    pub powers: Vec<f64>,
    pub singular_powers: Vec<f64>,
}

impl Default for ElementarySettings {
    fn default() -> Self {
        ElementarySettings {
            scalar_trials: 100_000,
            set_trials: 200,
            grid: 512,
            powers: vec![0.0, 0.5, 1.0, 2.0],
            singular_powers: vec![0.25, 0.5, 0.75],
        }
    }
}

fn key(name: &str, x: f64) -> String {
    format!("{name}[{x}]")
}

/// `(a+b)^p ≤ (1+η)^p a^p + (1+1/η)^p b^p` on random scalars, plus the
/// set inequalities with measured constants: `κ_a` as the smallest ratio
/// `AA/|A|^{a+2}` and `λ_b` as the smallest `AA/AS²` with kernel `|x−y|^{−b}`.
/// The singular case also checks `AA ≥ AS²/(2^b η²)` and `AS = η|A|`.
pub fn check_elementary_inequalities(settings: &ElementarySettings, seed: u64) -> Result<PropertyReport> {
    let ElementarySettings {
        scalar_trials,
        set_trials,
        grid,
        powers,
        singular_powers,
    } = settings;
    if *grid < 16 {
        return Err(invalid("grid", "need at least 16 cells"));
    }
    if singular_powers.iter().any(|&b| !(b > 0.0 && b < 1.0)) || powers.iter().any(|&a| !(a >= 0.0)) {
        return Err(invalid("powers", "need a ≥ 0 and b ∈ (0, 1)"));
    }
    let scalar = tally(
        (0..*scalar_trials).into_par_iter().map(|i| {
            let mut rng = trial_rng(seed, i);
            let a: f64 = rng.gen_range(1e-3..10.0);
            let b: f64 = rng.gen_range(1e-3..10.0);
            let eta: f64 = (rng.gen_range(-4.0..4.0f64)).exp();
            let p: f64 = rng.gen_range(1.0..6.0);
            let rhs = (1.0 + eta).powf(p) * a.powf(p) + (1.0 + 1.0 / eta).powf(p) * b.powf(p);
            (rhs - (a + b).powf(p)) / rhs
        }),
        1e-13,
    );
    let mut constants = BTreeMap::new();
    let mut violations = scalar.0;
    let mut worst = scalar.1;
    let sets: Vec<Vec<bool>> = (0..*set_trials)
        .map(|i| random_cells(&mut trial_rng(seed ^ 0x5e75, i), *grid))
        .collect();
    for &a in powers {
        let kappa = sets
            .par_iter()
            .map(|c| {
                let (m, aa, _) = arc_set_integrals(c, a);
                aa / m.powf(a + 2.0)
            })
            .reduce(|| f64::INFINITY, f64::min);
        if !(kappa > 0.0) {
            violations += 1;
        }
        constants.insert(key("kappa", a), kappa);
    }
    for &b in singular_powers {
        let eta_raw = arc_set_integrals(&vec![true; *grid], -b).2 / TAU;
        let bound = 1.0 / (2f64.powf(b) * eta_raw * eta_raw);
        let (lambda, v, w, ident) = sets
            .par_iter()
            .map(|c| {
                let (m, aa, as_) = arc_set_integrals(c, -b);
                let slack = (aa - bound * as_ * as_) / aa;
                let ident = ((as_ - eta_raw * m) / as_).abs();
                (
                    aa / (as_ * as_),
                    (slack < -1e-12) as usize + (ident > 1e-3) as usize,
                    slack,
                    ident,
                )
            })
            .reduce(
                || (f64::INFINITY, 0, f64::INFINITY, 0.0),
                |x, y| (x.0.min(y.0), x.1 + y.1, x.2.min(y.2), x.3.max(y.3)),
            );
        violations += v + (!(lambda > 0.0)) as usize;
        worst = worst.min(w);
        constants.insert(key("lambda", b), lambda);
        constants.insert(key("lambda_bound", b), bound);
        constants.insert(key("eta", b), eta_quadrature(b, *grid));
        constants.insert(key("identity_rel_err", b), ident);
    }
    let mut r = report(
        "elementary",
        scalar_trials + set_trials * (powers.len() + singular_powers.len()),
        (violations, worst),
        format!(
            "scalars a,b uniform in [1e-3, 10], log eta uniform in [-4, 4], p uniform in [1, 6]; \
             sets: 1..5 random cell arcs on {grid} cells"
        ),
        seed,
    );
    r.constants = constants;
    Ok(r)
}

/// Phase sawtooth of amplitude `amp` with `teeth` periods.
pub fn sawtooth_phase(amp: f64, teeth: usize) -> impl Lift {
    maps::FnLift::new(0, move |t: f64| {
        let s = (teeth as f64 * t / TAU).rem_euclid(1.0);
        amp * (4.0 * (s - 0.5).abs() - 1.0)
    })
}

/// Settings for [`check_key_lemma`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyLemmaSettings {
    pub exponents: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub base_degrees: Vec<i64>,
    pub grid: usize,
    pub resolution: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for KeyLemmaSettings {
    fn default() -> Self {
        KeyLemmaSettings {
            exponents: vec![1.5, 2.0, 3.0],
            epsilons: vec![0.05, 0.1],
            base_degrees: vec![1, 2],
            grid: 512,
            resolution: 256,
            optimizer: OptimizerConfig {
                modes: 12,
                restarts: 3,
                max_iters: 400,
                resolution: 256,
                ..OptimizerConfig::default()
            },
        }
    }
}

/// One instance of the key-lemma battery with its evaluated terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyLemmaRow {
    pub label: String,
    pub p: f64,
    pub eps: f64,
    pub d1: i64,
    pub d2: i64,
    pub lhs: f64,
    pub sigma_p: f64,
    /// Right side with the constants tracked explicitly through the proof.
    pub explicit_rhs: f64,
    /// Smallest `c₁` for which the stated form holds on this instance.
    pub c1_needed: f64,
}

/// The stated inequality's right side for a given `c₁`.
pub fn key_lemma_rhs(c1: f64, eps: f64, p: f64, sigma_pp: f64, outside: f64, full: f64) -> f64 {
    (1.0 - c1 * eps.sqrt()) * sigma_pp - c1 * eps.powf(-p / 2.0) * outside - c1 * eps.powf(p / 2.0) * full
}

/// Instances `(label, u, ũ, v)` at amplitude `eps`.
pub fn key_lemma_battery(d1: i64, eps: f64, m: usize) -> Result<Vec<(String, CircleMap, CircleMap, CircleMap)>> {
    let u = maps::power_map(d1, m)?;
    let phi = CircleMap::sample(&sawtooth_phase(0.9 * eps, 8), m)?;
    let bumpy = maps::pointwise_product(&u, &phi)?;
    let kd = CircleMap::sample(&compose(KDelta::new(0.3)?, Power(1)), m)?;
    let vs = vec![
        ("z^0".to_string(), maps::power_map(0, m)?),
        (format!("z^{}", d1 + 1), maps::power_map(d1 + 1, m)?),
        ("u*K".to_string(), maps::pointwise_product(&u, &kd)?),
    ];
    let mut out = vec![("u=v".to_string(), u.clone(), u.clone(), u.clone())];
    for (tilde_label, ut) in [("u", &u), ("u*saw", &bumpy)] {
        for (vl, v) in &vs {
            out.push((
                format!("u=z^{d1}, ut={tilde_label}, v={vl}"),
                u.clone(),
                ut.clone(),
                v.clone(),
            ));
        }
    }
    Ok(out)
}

/// Evaluates every battery instance. Counts a violation when the lemma fails
/// with the constants made explicit,
/// `LHS ≥ ((1−ε)/(1+√ε))^p ((π−14ε)/π)^p σ^p − 2(2/√ε)^p E(u; S¹×(S¹∖C)) − 2ε^{p/2} E(u; C⁺×C⁻)`,
/// and reports the calibrated `c₁` for the stated form.
pub fn check_key_lemma(settings: &KeyLemmaSettings, seed: u64) -> Result<(PropertyReport, Vec<KeyLemmaRow>)> {
    let mut sigma_cache: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let opt = OptimizerConfig {
        seed,
        ..settings.optimizer.clone()
    };
    let mut rows = Vec::new();
    for &p in &settings.exponents {
        for &eps in &settings.epsilons {
            for &d1 in &settings.base_degrees {
                for (label, u, ut, v) in key_lemma_battery(d1, eps, settings.grid)? {
                    let dd = v.winding() - u.winding();
                    let sigma_pp = match sigma_cache.get(&(p.to_bits(), dd.unsigned_abs())) {
                        Some(&s) => s,
                        None => {
                            let s = estimate_sigma(dd.abs(), p, &opt)?.best_value.powf(p);
                            sigma_cache.insert((p.to_bits(), dd.unsigned_abs()), s);
                            s
                        }
                    };
                    let d2 = v.winding();
                    let inst = KeyLemmaInstance::new(u, ut, v, eps)?;
                    let e = restricted_energy_decomposition(&inst, p, settings.resolution)?;
                    let lhs = e.lhs.value;
                    let explicit_rhs =
                        ((1.0 - eps) / (1.0 + eps.sqrt())).powf(p) * ((PI - 14.0 * eps) / PI).powf(p) * sigma_pp
                            - 2.0 * (2.0 / eps.sqrt()).powf(p) * e.u_outside_c_second.value
                            - 2.0 * eps.powf(p / 2.0) * e.u_plus_minus.value;
                    let denom = eps.sqrt() * sigma_pp
                        + eps.powf(-p / 2.0) * e.u_outside_c.value
                        + eps.powf(p / 2.0) * e.u_full.value;
                    let c1_needed = if sigma_pp - lhs <= 0.0 {
                        0.0
                    } else if denom > 0.0 {
                        (sigma_pp - lhs) / denom
                    } else {
                        f64::INFINITY
                    };
                    rows.push(KeyLemmaRow {
                        label,
                        p,
                        eps,
                        d1,
                        d2,
                        lhs,
                        sigma_p: sigma_pp.powf(1.0 / p),
                        explicit_rhs,
                        c1_needed,
                    });
                }
            }
        }
    }
    let (violations, worst) = rows.iter().fold((0, f64::INFINITY), |(v, w), r| {
        let scale = 1.0 + r.lhs.abs().max(r.explicit_rhs.abs());
        let margin = (r.lhs - r.explicit_rhs) / scale;
        (v + (margin < -1e-9) as usize, w.min(margin))
    });
    let c1 = rows.iter().map(|r| r.c1_needed).fold(0.0, f64::max);
    let mut rep = report(
        "key",
        rows.len(),
        (violations, worst),
        format!(
            "u = z^d1 for d1 in {:?}; ut in {{u, u*sawtooth(0.9 eps)}}; v in {{1, z^(d1+1), u*K_0.3}}; eps in {:?}; p in {:?}",
            settings.base_degrees, settings.epsilons, settings.exponents
        ),
        seed,
    );
    rep.constants.insert("c1".into(), c1);
    for &p in &settings.exponents {
        let rows_p = rows.iter().filter(|r| r.p == p);
        rep.constants
            .insert(key("c1", p), rows_p.map(|r| r.c1_needed).fold(0.0, f64::max));
    }
    Ok((rep, rows))
}

/// Trial counts and seeds for all five checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSuite {
    pub seed: u64,
    pub tangent_trials: usize,
    pub tangent_eps: f64,
    pub chord_trials: usize,
    pub chord_eps: f64,
    pub lip_trials: usize,
    pub lip_grid: usize,
    pub elementary: ElementarySettings,
    pub key: KeyLemmaSettings,
}

impl Default for LemmaSuite {
    fn default() -> Self {
        LemmaSuite {
            seed: 20240601,
            tangent_trials: 100_000,
            tangent_eps: 0.3,
            chord_trials: 100_000,
            chord_eps: 0.2,
            lip_trials: 1000,
            lip_grid: 512,
            elementary: ElementarySettings::default(),
            key: KeyLemmaSettings::default(),
        }
    }
}

pub const LEMMA_NAMES: [&str; 5] = ["tangent", "chord", "lip", "elementary", "key"];

/// Runs the named checks in a fixed order.
pub fn run_suite(suite: &LemmaSuite, names: &[&str]) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    for name in LEMMA_NAMES.iter().filter(|n| names.contains(n)) {
        let s = suite.seed;
        out.push(match *name {
            "tangent" => check_tangent_lemma(suite.tangent_trials, suite.tangent_eps, s)?,
            "chord" => check_chord_lemma(suite.chord_trials, suite.chord_eps, s)?,
            "lip" => check_lip_lemma(suite.lip_trials, suite.lip_grid, s)?,
            "elementary" => check_elementary_inequalities(&suite.elementary, s)?,
            _ => check_key_lemma(&suite.key, s)?.0,
        });
    }
    for n in names {
        if !LEMMA_NAMES.contains(n) {
            return Err(invalid("lemma", format!("unknown check `{n}`")));
        }
    }
    Ok(out)
}
