mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ucmf::clustering::ClusterAssignment;
use ucmf::dataset::{parse_movies, parse_ratings, RatingDataset, TagCatalog};
use ucmf::evaluation::{
    run_experiment_with, sweep, EvaluationReport, ExperimentError, RunArtifacts, SweepParameter,
};
use ucmf::factorization::FactorModel;
use ucmf::seed::run_seed;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "ucmf", version, about = "Cluster-regularized matrix factorization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset statistics, or the shape of a saved model.
    Inspect {
        #[command(flatten)]
        common: Common,
        /// Describe a model written by `evaluate --save-models` instead.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Compare UM, IM, MF and UCMF over repeated random splits.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Write each run's cluster labels and centroids.
        #[arg(long)]
        dump_clusters: bool,
        /// Write each run's MF and UCMF factors.
        #[arg(long)]
        save_models: bool,
    },
    /// Evaluate UCMF across a grid of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary.
        #[arg(long, value_enum, default_value_t = Param::Alpha)]
        param: Param,
        /// Comma-separated values, overriding the configured grid.
        #[arg(long, value_name = "V1,V2,...")]
        grid: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` settings file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Ratings in `user::item::rating::timestamp` form.
    #[arg(long, value_name = "PATH")]
    ratings: Option<PathBuf>,
    /// Movies in `item::title::Tag|Tag` form.
    #[arg(long, value_name = "PATH")]
    movies: Option<PathBuf>,
    /// Parent of the per-invocation output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base seed for splits, clustering and training.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Override any config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Alpha,
    K,
}

impl From<Param> for SweepParameter {
    fn from(p: Param) -> Self {
        match p {
            Param::Alpha => SweepParameter::Alpha,
            Param::K => SweepParameter::K,
        }
    }
}

enum Failure {
    /// Bad flags or configuration; nothing was run.
    Usage(String),
    /// Work started and failed.
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path).map_err(Failure::Usage)?;
        }
        if let Some(p) = &self.ratings {
            cfg.ratings = Some(p.clone());
        }
        if let Some(p) = &self.movies {
            cfg.movies = Some(p.clone());
        }
        if let Some(p) = &self.out {
            cfg.out = p.clone();
        }
        if let Some(s) = self.seed {
            cfg.experiment.base_seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
            cfg.set(k.trim(), v.trim(), None).map_err(Failure::Usage)?;
        }
        Ok(cfg)
    }
}

fn load(cfg: &RunConfig) -> Result<(RatingDataset, TagCatalog), Failure> {
    let ratings = parse_ratings(cfg.ratings.as_ref().unwrap()).map_err(runtime)?;
    let tags = parse_movies(cfg.movies.as_ref().unwrap(), &ratings).map_err(runtime)?;
    Ok((ratings, tags))
}

fn init_threads(threads: usize) -> Outcome {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(runtime)
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Outcome {
    fs::create_dir_all(path).map_err(|e| runtime(format!("cannot create {}: {e}", path.display())))
}

fn manifest(command: &str, cfg: &RunConfig, fractions: &[f64], status: &str) -> String {
    let mut s = format!("command = {command}\nstatus = {status}\n\n# resolved config\n{}", cfg.resolved());
    s.push_str("\n# per-run seeds: fraction run seed\n");
    let runs = cfg.experiment.runs;
    for &f in fractions {
        for r in 0..runs {
            writeln!(s, "run_seed = {f} {r} {}", run_seed(cfg.experiment.base_seed, f, r)).unwrap();
        }
    }
    s
}

fn inspect(common: &Common, model: Option<&Path>) -> Outcome {
    if let Some(path) = model {
        let m = FactorModel::load(path).map_err(runtime)?;
        let users_seen = (0..m.n_users() as u32).filter(|&u| m.user_seen(u)).count();
        let items_seen = (0..m.n_items() as u32).filter(|&i| m.item_seen(i)).count();
        println!("model        {}", path.display());
        println!("factors      {}", m.factors());
        println!("users        {} ({users_seen} trained)", m.n_users());
        println!("items        {} ({items_seen} trained)", m.n_items());
        println!("global mean  {:.5}", m.global_mean());
        return Ok(());
    }
    let cfg = common.resolve()?;
    cfg.validate(true).map_err(Failure::Usage)?;
    let (ratings, tags) = load(&cfg)?;
    let d = tags.diagnostics();
    let n = ratings.n_users() as f64;
    let m = ratings.n_items() as f64;
    println!("users        {}", ratings.n_users());
    println!("items        {}", ratings.n_items());
    println!("ratings      {}", ratings.len());
    println!("density      {:.5}", ratings.len() as f64 / (n * m));
    println!("mean rating  {:.5}", ratings.mean().unwrap_or(0.0));
    println!("tags         {}", tags.n_tags());
    println!("tag names    {}", tags.tag_names().join("|"));
    println!("movies read  {}", d.movies_read);
    if d.unrated_movies > 0 {
        eprintln!("warning: {} movies have no ratings", d.unrated_movies);
    }
    if d.untagged_items > 0 {
        eprintln!("warning: {} rated items have no tags", d.untagged_items);
    }
    Ok(())
}

fn cluster_csv(train: &RatingDataset, a: &ClusterAssignment) -> (String, String) {
    let mut labels = String::from("user_id,cluster\n");
    for (u, &l) in a.labels().iter().enumerate() {
        writeln!(labels, "{},{l}", train.user_id(u as u32)).unwrap();
    }
    let mut centroids = String::from("cluster");
    for t in 0..a.dim() {
        write!(centroids, ",tag{t}").unwrap();
    }
    centroids.push('\n');
    for c in 0..a.k() {
        let row: Vec<String> = a.centroid(c).iter().map(|v| format!("{v:.6}")).collect();
        writeln!(centroids, "{c},{}", row.join(",")).unwrap();
    }
    (labels, centroids)
}

fn evaluate(common: &Common, dump_clusters: bool, save_models: bool) -> Outcome {
    let cfg = common.resolve()?;
    cfg.validate(true).map_err(Failure::Usage)?;
    init_threads(cfg.threads)?;
    let (ratings, tags) = load(&cfg)?;
    let dir = cfg.output_dir("evaluate");
    create_dir(&dir)?;
    for (on, sub) in [(dump_clusters, "clusters"), (save_models, "models")] {
        if on {
            create_dir(&dir.join(sub))?;
        }
    }

    let hook = |a: &RunArtifacts<'_>| -> ucmf::Result<()> {
        let stem = format!("{}-{}", a.fraction, a.run);
        if dump_clusters {
            let (labels, centroids) = cluster_csv(a.train, a.assignment);
            let labels_path = dir.join("clusters").join(format!("{stem}-labels.csv"));
            fs::write(&labels_path, labels).map_err(|e| ucmf::Error::InvalidInput(e.to_string()))?;
            let centroids_path = dir.join("clusters").join(format!("{stem}-centroids.csv"));
            fs::write(&centroids_path, centroids).map_err(|e| ucmf::Error::InvalidInput(e.to_string()))?;
        }
        if save_models {
            a.mf.save(dir.join("models").join(format!("{stem}-mf.bin")))?;
            a.ucmf.save(dir.join("models").join(format!("{stem}-ucmf.bin")))?;
        }
        Ok(())
    };
    let wants_hook = dump_clusters || save_models;
    let result = run_experiment_with(&ratings, &tags, &cfg.experiment, wants_hook.then_some(&hook as _));

    let fractions = &cfg.experiment.fractions;
    let (report, status, failure): (EvaluationReport, String, Option<String>) = match result {
        Ok(report) => (report, "complete".into(), None),
        Err(ExperimentError::Invalid(e)) => return Err(Failure::Usage(e.to_string())),
        Err(e) => {
            let partial = e.partial().cloned().unwrap_or_else(|| EvaluationReport::new(fractions.clone(), vec![]));
            (partial, format!("failed: {e}"), Some(e.to_string()))
        }
    };
    write(&dir.join("runs.csv"), &report.runs_csv())?;
    write(&dir.join("summary.csv"), &report.summary_csv())?;
    write(&dir.join("MANIFEST"), &manifest("evaluate", &cfg, fractions, &status))?;
    match failure {
        None => {
            print!("{}", report.summary_table());
            println!("results in {}", dir.display());
            Ok(())
        }
        Some(msg) => Err(Failure::Runtime(format!("{msg} (partial results in {})", dir.display()))),
    }
}

fn run_sweep(common: &Common, param: Param, grid: Option<&str>) -> Outcome {
    let parameter = SweepParameter::from(param);
    let mut cfg = common.resolve()?;
    if let Some(g) = grid {
        cfg.set(&format!("{parameter}_grid"), g, None).map_err(Failure::Usage)?;
    }
    cfg.validate(true).map_err(Failure::Usage)?;
    init_threads(cfg.threads)?;
    let (ratings, tags) = load(&cfg)?;
    let dir = cfg.output_dir(&format!("sweep-{parameter}"));
    create_dir(&dir)?;
    let spec = cfg.sweep_spec(parameter);
    let fraction = cfg.sweep_fraction;
    let label = format!("sweep {parameter}");
    match sweep(&ratings, &tags, &spec, fraction, &cfg.experiment) {
        Ok(report) => {
            write(&dir.join("sweep.csv"), &report.csv())?;
            write(&dir.join("MANIFEST"), &manifest(&label, &cfg, &[fraction], "complete"))?;
            println!("{:>12}  {:>8}  {:>8}", parameter.name(), "MAE", "RMSE");
            for p in &report.points {
                println!("{:>12}  {:>8.5}  {:>8.5}", p.value, p.mae_mean, p.rmse_mean);
            }
            if let Some(best) = report.best_by_mae() {
                println!("lowest MAE at {parameter} = {}", best.value);
            }
            println!("results in {}", dir.display());
            Ok(())
        }
        Err(ExperimentError::Invalid(e)) => Err(Failure::Usage(e.to_string())),
        Err(e) => {
            write(&dir.join("MANIFEST"), &manifest(&label, &cfg, &[fraction], &format!("failed: {e}")))?;
            Err(Failure::Runtime(format!("{e} (manifest in {})", dir.display())))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Inspect { common, model } => inspect(common, model.as_deref()),
        Command::Evaluate {
            common,
            dump_clusters,
            save_models,
        } => evaluate(common, *dump_clusters, *save_models),
        Command::Sweep { common, param, grid } => run_sweep(common, *param, grid.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
