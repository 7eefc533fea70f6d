use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use fracmap::experiments::{self, degree_summary, energy_summary, Experiment, ExperimentConfig, MapSpec, Status};

const CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fracmap",
    version,
    about = "Fractional Sobolev energies and degree classes of circle maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gagliardo energy of one map, as JSON.
    Energy(MapArgs),
    /// Winding and Fourier degrees of one map, as JSON.
    Degree(MapArgs),
    /// Class energies σ_p(d) over a list of degrees.
    Sigma(RunArgs),
    /// Distances from the zig-zag sequence to a degree class.
    Dist(RunArgs),
    /// Distances between two classes along a vanishing sequence.
    DistZero(RunArgs),
    /// Every cross-check: lemmas, quadrature, Möbius invariance, degrees, file io.
    Audit(RunArgs),
    /// Randomized lemma checks.
    Lemma(RunArgs),
}

#[derive(Args)]
struct MapArgs {
    /// power:D, zigzag:N[:ALPHA], kdelta:DELTA or file:PATH
    #[arg(long)]
    map: String,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Samples of the constructed map.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Quadrature resolution; defaults to half the map grid.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Let the config file win over conflicting flags.
    #[arg(long)]
    config_priority: bool,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    d: Option<Vec<i64>>,
    #[arg(long, allow_hyphen_values = true)]
    d1: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    d2: Option<i64>,
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    eps_values: Option<Vec<f64>>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    map_grid: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Lemma checks to run: tangent, chord, lip, elementary, key.
    #[arg(long, value_delimiter = ',')]
    lemmas: Option<Vec<String>>,
    /// Saved maps checked by the audit.
    #[arg(long = "map-file")]
    map_files: Vec<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    /// The flags as a partial config.
    fn overrides(&self) -> Value {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("p", self.p.map(Value::from));
        put("d", self.d.clone().map(Value::from));
        put("d1", self.d1.map(Value::from));
        put("d2", self.d2.map(Value::from));
        put("n_values", self.n_values.clone().map(Value::from));
        put("eps_values", self.eps_values.clone().map(Value::from));
        put("resolution", self.resolution.map(Value::from));
        put("map_grid", self.map_grid.map(Value::from));
        put("alpha", self.alpha.map(Value::from));
        put("lemma_names", self.lemmas.clone().map(Value::from));
        put("map_files", (!self.map_files.is_empty()).then(|| json!(self.map_files)));
        put("output_dir", self.output_dir.as_ref().map(|p| json!(p)));
        put("seed", self.seed.map(Value::from));
        let mut opt = Map::new();
        for (k, v) in [
            ("modes", self.modes),
            ("restarts", self.restarts),
            ("max_iters", self.max_iters),
        ] {
            if let Some(v) = v {
                opt.insert(k.to_string(), v.into());
            }
        }
        if !opt.is_empty() {
            m.insert("optimizer".into(), Value::Object(opt));
        }
        Value::Object(m)
    }

    fn config(&self, experiment: Experiment) -> fracmap::Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => experiments::load_config_value(path)?,
            None => json!({}),
        };
        let flags = self.overrides();
        let mut merged = json!({});
        let (low, high) = if self.config_priority {
            (&flags, &file)
        } else {
            (&file, &flags)
        };
        experiments::merge_values(&mut merged, low);
        experiments::merge_values(&mut merged, high);
        merged["experiment"] = json!(experiment);
        let mut cfg = ExperimentConfig::from_value(merged)?;
        cfg.apply_seed_override(std::env::var("FRACMAP_SEED").ok().as_deref())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("FRACMAP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("FRACMAP_THREADS: `{v}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn single_map(args: &MapArgs, degree_only: bool) -> fracmap::Result<Value> {
    let spec: MapSpec = args.map.parse()?;
    let f = spec.build(args.grid, args.p)?;
    if degree_only {
        return Ok(degree_summary(&f));
    }
    let r = args.resolution.unwrap_or(f.grid_size() / 2);
    energy_summary(&f, args.p, r)
}

fn run_experiment(args: &RunArgs, experiment: Experiment) -> Result<Status, fracmap::Error> {
    let cfg = args.config(experiment)?;
    let out = experiments::run(&cfg)?;
    for line in &out.log {
        eprintln!("{line}");
    }
    let dir = out.write()?;
    println!("{}", dir.display());
    match &out.status {
        Status::Pass => println!("status: pass"),
        Status::AssertionFailure(why) => println!("status: assertion failure: {why}"),
        Status::NonConvergence(why) => println!("status: not converged: {why}"),
    }
    Ok(out.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(CONFIG_ERROR);
    }
    let (args, experiment) = match &cli.command {
        Command::Energy(a) | Command::Degree(a) => {
            let degree_only = matches!(cli.command, Command::Degree(_));
            return match single_map(a, degree_only) {
                Ok(v) => {
                    println!("{}", serde_json::to_string_pretty(&v).expect("JSON output"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(CONFIG_ERROR)
                }
            };
        }
        Command::Sigma(a) => (a, Experiment::Sigma),
        Command::Dist(a) => (a, Experiment::Dist),
        Command::DistZero(a) => (a, Experiment::DistZero),
        Command::Audit(a) => (a, Experiment::Audit),
        Command::Lemma(a) => (a, Experiment::Lemma),
    };
    match run_experiment(args, experiment) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}
