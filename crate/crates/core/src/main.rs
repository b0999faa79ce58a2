use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chanest::harness::{
    emit_csv, learned_params, prepare_point, run_boxplot, run_mse_sweep, run_rate_sweep, run_selftest, sweep_points,
    write_box_csv, Algorithm, ExperimentConfig, MetricKind, SweepVariable,
};
use chanest::model_io::{save_cnn, CnnModel};
use chanest::{Error, Result};

#[derive(Parser)]
#[command(name = "chanest", version, about = "Structured and learned MMSE channel estimation experiments")]
struct Cli {
    /// Experiment description (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (sweep, boxplot) or directory (train).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the training iteration budget.
    #[arg(long, global = true)]
    iters: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the learned estimators of the config at its first sweep point.
    Train,
    /// Evaluate the configured estimators at the first sweep point.
    Evaluate {
        /// Pretrained model as `ALGORITHM=PATH`; may be repeated.
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Run the full sweep and write figure data as CSV.
    Sweep,
    /// Repeated plain and hierarchical trainings, summarized as box plots.
    Boxplot,
    /// Run the built-in oracle and invariant checks.
    Selftest,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(iters) = cli.iters {
        cfg.training.iterations = iters;
    }
    Ok(cfg)
}

fn output_path(cli: &Cli, cfg: &ExperimentConfig, fallback: &str) -> PathBuf {
    cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(fallback))
}

fn train(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let point = sweep_points(&cfg)[0];
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("models"));
    std::fs::create_dir_all(&dir)?;
    let learned: Vec<Algorithm> = cfg.algorithm_list()?.into_iter().filter(|a| a.activation().is_some()).collect();
    if learned.is_empty() {
        return Err(Error::Config("no learned algorithm (CircSoftmax, ToepReLU) in the config".into()));
    }
    for a in learned {
        let params = learned_params(&cfg, &point, a)?;
        let model = CnnModel { params, snapshots: point.snapshots, sigma2: point.sigma2() };
        let path = dir.join(format!("{a}-M{}-T{}.cnn", point.antennas, point.snapshots));
        save_cnn(&model, &path)?;
        println!("{a}: saved {}", path.display());
    }
    Ok(())
}

fn evaluate(cli: &Cli, models: &[String]) -> Result<()> {
    let mut cfg = load_config(cli)?;
    for spec in models {
        let (alg, path) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--model expects ALGORITHM=PATH, got `{spec}`")))?;
        let a: Algorithm = alg.parse()?;
        cfg.models.insert(a.to_string(), PathBuf::from(path));
        if !cfg.algorithms.iter().any(|s| s == a.name()) {
            cfg.algorithms.push(a.to_string());
        }
    }
    cfg.validate()?;
    let algorithms = cfg.algorithm_list()?;
    let point = sweep_points(&cfg)[0];
    let prepared = prepare_point(&cfg, point, &algorithms)?;
    let samples = prepared.samples(cfg.trials)?;
    println!(
        "M={} T={} SNR={} trials={} seed={}",
        point.antennas,
        point.snapshots,
        point.snr_db.map_or_else(|| "scenario".to_string(), |s| format!("{s} dB")),
        cfg.trials,
        cfg.seed
    );
    let label = cfg.metric.column();
    for (a, s) in algorithms.iter().zip(&samples) {
        let (mean, se) = chanest::harness::mean_stderr(s);
        println!("{a:<14} {label} {mean:.6} +- {se:.6}");
    }
    Ok(())
}

fn sweep(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let records = match cfg.metric {
        MetricKind::Mse => run_mse_sweep(&cfg)?,
        MetricKind::Rate => run_rate_sweep(&cfg)?,
    };
    let out = output_path(cli, &cfg, "results.csv");
    emit_csv(&records, &out)?;
    let axis = if cfg.sweep.variable == SweepVariable::None { "point" } else { cfg.sweep.variable.column() };
    println!("{} records over {axis} written to {}", records.len(), out.display());
    Ok(())
}

fn boxplot(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let result = run_boxplot(&cfg)?;
    let out = output_path(cli, &cfg, "boxplot.csv");
    write_to(&out, |f| write_box_csv(&result.records, f))?;
    for r in &result.records {
        println!("{:<16} median {:.6} (q1 {:.6}, q3 {:.6})", r.method, r.stats.median, r.stats.q1, r.stats.q3);
    }
    Ok(())
}

fn write_to(path: &Path, f: impl FnOnce(std::fs::File) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    f(std::fs::File::create(path)?)
}

fn selftest() -> Result<()> {
    let results = run_selftest();
    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    for (name, r) in &results {
        match r {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => println!("FAIL {name}: {msg}"),
        }
    }
    if failed > 0 {
        return Err(Error::InvalidArgument(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Train => train(cli),
        Command::Evaluate { models } => evaluate(cli, models),
        Command::Sweep => sweep(cli),
        Command::Boxplot => boxplot(cli),
        Command::Selftest => selftest(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
