//! Acceptance run: one PASS/FAIL line per criterion.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fracmap::battery;
use fracmap::degree::{bbm_bound_margin, degree_fourier};
use fracmap::energy::{gagliardo_energy, spectral_energy_p2};
use fracmap::experiments::{self, Experiment, ExperimentConfig, Status};
use fracmap::geometry::TorusRegion;
use fracmap::lemma_checks::{run_suite, LemmaSuite, LEMMA_NAMES};
use fracmap::maps::{self, compose, grid_angle, CircleMap, Zigzag};
use fracmap::optimize::{self, random_start, CompetitorOptions, Objective, OptimizerConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(started: Instant, budget: Duration, detail: String) -> Outcome {
    let took = started.elapsed();
    if took > budget {
        Err(format!("{detail}; took {took:.1?}, budget {budget:?}"))
    } else {
        Ok(format!("{detail} ({took:.1?})"))
    }
}

fn exact_identity() -> Outcome {
    let t = Instant::now();
    let f = maps::power_map(1, 2048).map_err(|e| e.to_string())?;
    let e = gagliardo_energy(&f, 2.0, &TorusRegion::Full, 1024).map_err(|e| e.to_string())?;
    let rel = (e.value - 4.0 * PI * PI).abs() / (4.0 * PI * PI);
    check(rel <= 5e-3, format!("E_2(z) = {}, relative error {rel:.2e}", e.value))?;
    within_budget(t, Duration::from_secs(10), format!("relative error {rel:.2e}"))
}

fn sigma_two_law() -> Outcome {
    let t = Instant::now();
    let cfg = OptimizerConfig::default();
    let mut worst = 0.0f64;
    for d in 1..=4i64 {
        let e = optimize::estimate_sigma(d, 2.0, &cfg).map_err(|e| e.to_string())?;
        let theory = TAU * (d as f64).sqrt();
        let gap = (e.best_value - theory).abs() / theory;
        worst = worst.max(gap);
        check(gap <= 0.02, format!("d={d}: σ = {} vs {theory}", e.best_value))?;
    }
    within_budget(t, Duration::from_secs(300), format!("worst gap {worst:.2e}"))
}

fn degree_energy_inequality() -> Outcome {
    let entries = battery::standard(4096, 0).map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    for e in &entries {
        let spec = spectral_energy_p2(&e.map).value;
        let margin = bbm_bound_margin(&e.map, 2.0, 2048).map_err(|e| e.to_string())?;
        let rel = if spec == 0.0 { margin } else { margin / spec };
        worst = worst.min(rel);
        check(margin >= -1e-9 * spec, format!("{}: margin {margin}", e.label))?;
    }
    let mut equality = 0.0f64;
    for d in -4..=4i64 {
        let f = maps::power_map(d, 4096).map_err(|e| e.to_string())?;
        let spec = spectral_energy_p2(&f).value;
        let margin = bbm_bound_margin(&f, 2.0, 2048).map_err(|e| e.to_string())?;
        let rel = if spec == 0.0 { margin.abs() } else { margin.abs() / spec };
        equality = equality.max(rel);
    }
    check(
        equality <= 1e-9,
        format!(
            "{} maps, worst relative margin {worst:.3e}, equality cases {equality:.1e}",
            entries.len()
        ),
    )
}

fn mobius_invariance() -> Outcome {
    let pairs = battery::mobius_pairs(20, 0.6, 0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0] {
        for (i, (h, mob)) in pairs.iter().enumerate() {
            let a = CircleMap::sample(h, 2048).map_err(|e| e.to_string())?;
            let b = CircleMap::sample(&compose(h.clone(), *mob), 2048).map_err(|e| e.to_string())?;
            let ea = gagliardo_energy(&a, p, &TorusRegion::Full, 1024).map_err(|e| e.to_string())?;
            let eb = gagliardo_energy(&b, p, &TorusRegion::Full, 1024).map_err(|e| e.to_string())?;
            if ea.value == 0.0 {
                check(eb.value == 0.0, format!("pair {i}: constant map gained energy"))?;
                continue;
            }
            let drift = (ea.value - eb.value).abs() / ea.value;
            worst = worst.max(drift);
            check(drift <= 0.03, format!("pair {i}, p={p}: drift {drift:.3e}"))?;
        }
    }
    Ok(format!("worst drift {worst:.2e}"))
}

fn dist_reproduction() -> Outcome {
    let t = Instant::now();
    let f = experiments::zigzag_sequence_map(64, maps::default_alpha(2.0), 1, 2048).map_err(|e| e.to_string())?;
    let cfg = OptimizerConfig {
        restarts: 3,
        max_iters: 300,
        resolution: 2048,
        ..OptimizerConfig::default()
    };
    let e =
        optimize::estimate_dist_to_class(&f, 2, 2.0, &cfg, &CompetitorOptions::default()).map_err(|e| e.to_string())?;
    let ratio = e.best_value / TAU;
    let competitor = e.competitor.as_ref().map_or(f64::NAN, |c| c.distance);
    check(
        (0.90..=1.02).contains(&ratio),
        format!("distance {} = {ratio:.4}·2π (competitor {competitor})", e.best_value),
    )?;
    within_budget(t, Duration::from_secs(900), format!("distance = {ratio:.4}·2π"))
}

fn subadditivity() -> Outcome {
    let cfg = OptimizerConfig {
        restarts: 3,
        max_iters: 300,
        ..OptimizerConfig::default()
    };
    let mut worst = 0.0f64;
    for p in [1.5, 3.0] {
        let unit = optimize::estimate_sigma(1, p, &cfg)
            .map_err(|e| e.to_string())?
            .best_value
            .powf(p);
        for d in [2i64, 3] {
            let s = optimize::estimate_sigma(d, p, &cfg)
                .map_err(|e| e.to_string())?
                .best_value
                .powf(p);
            let ratio = s / (d as f64 * unit);
            worst = worst.max(ratio);
            check(ratio <= 1.03, format!("p={p}, d={d}: ratio {ratio:.6}"))?;
        }
    }
    Ok(format!("worst ratio {worst:.7}"))
}

fn dist_vanishes() -> Outcome {
    let mut last = Vec::new();
    for p in [1.5, 2.0] {
        let cfg = ExperimentConfig {
            experiment: Experiment::DistZero,
            p,
            d1: 0,
            d2: 1,
            n_values: vec![4, 8, 16, 32],
            resolution: 512,
            ..ExperimentConfig::default()
        };
        let out = experiments::run(&cfg).map_err(|e| e.to_string())?;
        let col = out.table.floats("distance");
        check(out.status == Status::Pass, format!("p={p}: {col:?}"))?;
        last.push(format!("p={p}: {:.3} → {:.3}", col[0], col[col.len() - 1]));
    }
    Ok(last.join(", "))
}

fn lemma_suites() -> Outcome {
    let t = Instant::now();
    let reports = run_suite(&LemmaSuite::default(), &LEMMA_NAMES).map_err(|e| e.to_string())?;
    let summary: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {}/{}", r.lemma, r.violations, r.trials))
        .collect();
    check(reports.iter().all(|r| r.violations == 0), summary.join(", "))?;
    within_budget(t, Duration::from_secs(120), summary.join(", "))
}

fn fd_gradient(obj: &Objective, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            (obj.value(&a) - obj.value(&b)) / (2.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn numerical_hygiene() -> Outcome {
    let f = maps::zigzag(4, 0.75, 256).map_err(|e| e.to_string())?;
    let base: Vec<f64> = f
        .phases()
        .iter()
        .enumerate()
        .map(|(j, a)| a + grid_angle(j, 256))
        .collect();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let p = [1.5, 2.0, 3.0][i % 3];
        let obj = if i % 2 == 0 {
            Objective::class_energy(1 + (i as i64 % 3), p, 6, 128)
        } else {
            Objective::distance(f.values(), base.clone(), 2, p, 6, 128)
        }
        .map_err(|e| e.to_string())?;
        let x = random_start(6, 0.4, 1000, i);
        let (_, g) = obj.value_and_gradient(&x);
        let fd = fd_gradient(&obj, &x);
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&g);
        worst = worst.max(rel);
        check(rel <= 1e-5, format!("point {i}, p={p}: relative error {rel:.2e}"))?;
    }
    let entries = battery::standard(4096, 0).map_err(|e| e.to_string())?;
    let mut residual = 0.0f64;
    for e in &entries {
        let r = degree_fourier(&e.map).map_err(|err| format!("{}: {err}", e.label))?;
        residual = residual.max(r.residual);
        check(
            r.routes_agree() && r.residual < 0.1,
            format!(
                "{}: winding {} vs Fourier {}",
                e.label, r.winding_degree, r.fourier_degree_raw
            ),
        )?;
    }
    Ok(format!("gradient error ≤ {worst:.2e}, degree residual ≤ {residual:.3}"))
}

fn zigzag_closeness() -> Outcome {
    let mut parts = Vec::new();
    for n in [4usize, 16, 64] {
        let alpha = maps::default_alpha(2.0);
        let m = 64 * n;
        let f = maps::zigzag(n, alpha, m).map_err(|e| e.to_string())?;
        let sup = (0..m)
            .map(|j| {
                let d = (f.phases()[j] - grid_angle(j, m)).rem_euclid(TAU);
                d.min(TAU - d)
            })
            .fold(0.0f64, f64::max);
        let bound = Zigzag::new(n, alpha).map_err(|e| e.to_string())?.closeness_bound();
        check(sup <= bound * (1.0 + 1e-12), format!("n={n}: sup {sup} > {bound}"))?;
        parts.push(format!("n={n}: {sup:.4} ≤ {bound:.4}"));
    }
    Ok(parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exact identity", exact_identity),
        ("sigma_2 law", sigma_two_law),
        ("degree-energy inequality", degree_energy_inequality),
        ("mobius invariance", mobius_invariance),
        ("dist reproduction", dist_reproduction),
        ("subadditivity", subadditivity),
        ("dist vanishes", dist_vanishes),
        ("lemma suites", lemma_suites),
        ("numerical hygiene", numerical_hygiene),
        ("zigzag closeness", zigzag_closeness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
