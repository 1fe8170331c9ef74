//! `qnet` command-line front-end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error,
//! 3 recall refused by the energy threshold, 4 ambiguous recall.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qnet_core::config::{load_config, RunConfig};
use qnet_core::experiments::{run_experiment, ExperimentKind, ExperimentSpec};
use qnet_core::field::{new_field, InitMode};
use qnet_core::io::{
    format_pattern, load_store, read_pattern, report_csv, save_store, trajectory_csv, write_json, Provenance,
};
use qnet_core::memory::MemoryStore;
use qnet_core::{rng_from_seed, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BELOW_THRESHOLD: i32 = 3;
pub const EXIT_AMBIGUOUS: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qnet", version, about = "Doublet-field lattice net: write, recall and sweep experiments")]
struct Cli {
    /// Seed override; wins over QNET_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiments (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Key-value configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Record a pattern as a new memory in a store file (created if missing).
    Write {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Recall the stored memory closest to a cue.
    Recall {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        cue: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Result document; the recall trajectory goes next to it as CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scripted experiment with its default grid.
    Experiment {
        /// overprinting, noise_sweep, threshold_sweep, size_sweep or gamma_sweep
        kind: String,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one configuration key over a list of values.
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse `argv` (program name first) and run; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BelowThreshold { .. } => EXIT_BELOW_THRESHOLD,
        Error::Ambiguous { .. } => EXIT_AMBIGUOUS,
        e if e.is_validation() => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn load(arg: &ConfigArg) -> Result<RunConfig, Error> {
    match &arg.config {
        Some(path) => load_config(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Write { config, pattern, store } => {
            let cfg = load(&config)?;
            let seed = announce(&cfg, cli.seed)?;
            cmd_write(&cfg, seed, &pattern, &store)
        }
        Command::Recall { config, cue, store, out } => {
            let cfg = load(&config)?;
            let seed = announce(&cfg, cli.seed)?;
            cmd_recall(&cfg, seed, &cue, &store, &out)
        }
        Command::Experiment { kind, config, out } => {
            let cfg = load(&config)?;
            let seed = announce(&cfg, cli.seed)?;
            let kind: ExperimentKind = kind.parse()?;
            let mut spec = ExperimentSpec::new(kind, cfg.clone(), seed)?;
            spec.jobs = cli.jobs;
            cmd_experiment(&cfg, seed, &spec, out)
        }
        Command::Sweep { param, values, config, out } => {
            let cfg = load(&config)?;
            let seed = announce(&cfg, cli.seed)?;
            let (kind, key) = ExperimentKind::for_param(&param);
            let mut spec = ExperimentSpec::with_grid(kind, cfg.clone(), seed, &key, values)?;
            spec.jobs = cli.jobs;
            cmd_experiment(&cfg, seed, &spec, out)
        }
    }
}

fn announce(cfg: &RunConfig, flag: Option<u64>) -> Result<u64, Error> {
    let seed = cfg.resolve_seed(flag)?;
    println!("seed = {seed}");
    println!("config = {}", cfg.hash());
    Ok(seed)
}

fn cmd_write(cfg: &RunConfig, seed: u64, pattern: &Path, store_path: &Path) -> Result<(), Error> {
    let pattern = read_pattern(pattern)?;
    let mut store = if store_path.exists() {
        let store = load_store(store_path)?;
        if store.lattice() != &cfg.lattice {
            return Err(Error::Shape {
                expected: cfg.lattice.size(),
                found: format!("store for a {0}x{0} lattice", store.lattice().size()),
            });
        }
        store
    } else {
        MemoryStore::new(cfg.lattice, cfg.params)?
    };
    let mut rng = rng_from_seed(seed);
    let field = new_field(cfg.lattice, InitMode::NormalRandom, seed)?;
    let (record, _) = store.write(&pattern, &field, &mut rng)?;
    save_store(store_path, &store, Some(&Provenance::new(cfg.hash(), seed)))?;
    println!("memory = {} code = {} (n_u {}, n_d {})", record.written_at, record.code.value, record.code.n_u, record.code.n_d);
    Ok(())
}

fn cmd_recall(cfg: &RunConfig, seed: u64, cue: &Path, store_path: &Path, out: &Path) -> Result<(), Error> {
    let cue = read_pattern(cue)?;
    let store = load_store(store_path)?;
    let mut rng = rng_from_seed(seed);
    let result = store.recall(&cue, &cfg.params.recall, &mut rng)?;
    let provenance = Provenance::new(cfg.hash(), seed);

    let traj_path = out.with_extension("trajectory.csv");
    std::fs::write(&traj_path, trajectory_csv(&result.trajectory, &provenance))?;
    let doc = serde_json::json!({
        "provenance": provenance,
        "selected": result.selected,
        "code": result.code,
        "overlaps": result.overlaps,
        "pattern": format_pattern(&result.pattern).lines().skip(1).collect::<Vec<_>>(),
        "trajectory": traj_path.file_name().map(|n| n.to_string_lossy().into_owned()),
    });
    write_json(out, &doc)?;
    println!("selected = {} code = {}", result.selected, result.code.value);
    Ok(())
}

fn cmd_experiment(cfg: &RunConfig, seed: u64, spec: &ExperimentSpec, out: Option<PathBuf>) -> Result<(), Error> {
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    std::fs::create_dir_all(&dir)?;
    let report = run_experiment(spec)?;
    let provenance = Provenance::new(cfg.hash(), seed);
    std::fs::write(dir.join("results.csv"), report_csv(&report.rows(), &provenance))?;
    let summary = report.summary(provenance);
    write_json(dir.join("summary.json"), &summary)?;
    for p in &summary.points {
        println!(
            "{} = {}: accuracy {:.3} (first written {:.3}), persistence {:.3}",
            spec.grid.param, p.value, p.mean_accuracy, p.first_written_rate, p.persistence_rate
        );
    }
    if let Some(t) = summary.empirical_threshold {
        println!("empirical threshold: {} = {t}", spec.grid.param);
    }
    println!("wrote {}", dir.display());
    Ok(())
}
