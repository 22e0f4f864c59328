use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use equibound::bounds::{self, BoundReport};
use equibound::config::ConfigError;
use equibound::data::{read_csv, write_csv, DataError};
use equibound::experiment::{self, ExperimentConfig, ExperimentError, ResultRow};
use equibound::group::parse_group;
use equibound::models::format::{read_model, write_model};
use equibound::models::{ModelError, ModelSpec, Pooling};
use equibound::rademacher::{self, RademacherError, SolverConfig};
use equibound::training::{self, TrainError};
use equibound::verify::{self, Scope};

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Bound(#[from] bounds::BoundError),
    #[error(transparent)]
    Rademacher(#[from] RademacherError),
    #[error("{0}")]
    Usage(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Generalization bounds and Rademacher estimates for one-hidden-layer
/// equivariant networks over finite groups.
#[derive(Debug, Parser)]
#[command(name = "equibound", version)]
struct Cli {
    /// Experiment configuration file (defaults to the built-in sweep).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Omit timestamps so repeated runs produce identical files.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Overrides the master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlotKind {
    Scatter,
    Scaling,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run self-check suites and print a pass/fail table.
    Verify {
        #[arg(default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(Scope::NAMES))]
        scope: String,
        /// Check a whitespace-separated Cayley table instead of the suites.
        #[arg(long, value_name = "FILE")]
        table: Option<PathBuf>,
    },
    /// Train one cell of the configured sweep and save the model and data.
    Train {
        /// Group of the cell (default: first configured group).
        #[arg(long)]
        group: Option<String>,
        /// Training set size (default: first configured value).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Evaluate the matching bound for a saved model on a dataset.
    Bound {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Random assignments when the exact max-pooling search is too large.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Monte-Carlo Rademacher estimate with the positive-orthant witness.
    Rademacher {
        #[arg(long, default_value = "c4")]
        group: String,
        #[arg(long, default_value_t = 2)]
        c0: usize,
        #[arg(long, default_value_t = 4)]
        c1: usize,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        b_x: f64,
        #[arg(long, default_value_t = 1.0)]
        m1: f64,
        #[arg(long, default_value_t = 1.0)]
        m2: f64,
        #[arg(long, default_value = "avg")]
        pooling: Pooling,
        #[arg(long, default_value_t = rademacher::DEFAULT_N_MC)]
        n_mc: usize,
        #[arg(long, default_value_t = SolverConfig::default().restarts)]
        restarts: usize,
        #[arg(long, default_value_t = SolverConfig::default().steps)]
        steps: usize,
        /// Dataset CSV over `--group` with `--c0` channels instead of
        /// generated positive-orthant data.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// Run the full sweep: results.csv, scatter.svg and scaling.svg.
    Experiment,
    /// Render a plot from a results CSV.
    Plot {
        #[arg(long, value_name = "PATH")]
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p).map_err(io_err(p))?,
        None => experiment::DEFAULT_CONFIG.to_string(),
    };
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn out_dir(cli: &Cli) -> Result<&Path, CliError> {
    fs::create_dir_all(&cli.out).map_err(io_err(&cli.out))?;
    Ok(&cli.out)
}

fn jobs(cli: &Cli) -> usize {
    cli.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn cmd_verify(cli: &Cli, scope: &str, table: Option<&Path>) -> Result<(), CliError> {
    let results = match table {
        Some(p) => vec![verify::check_table_text(&fs::read_to_string(p).map_err(io_err(p))?)],
        None => {
            let scope: Scope = scope.parse().map_err(CliError::Usage)?;
            verify::run(scope, cli.seed.unwrap_or(0))
        }
    };
    print!("{}", verify::render_table(&results));
    let failed: Vec<_> = results.iter().filter(|r| !r.passed()).collect();
    if let Some(first) = failed.first() {
        println!("first counterexample ({}): {}", first.name, first.outcome.as_ref().unwrap_err());
        return Err(CliError::ChecksFailed(failed.len()));
    }
    Ok(())
}

fn cmd_train(cli: &Cli, group: Option<&str>, m: Option<usize>, trial: usize) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let gi = match group {
        Some(g) => cfg
            .groups
            .iter()
            .position(|h| h.spec_string() == g)
            .ok_or_else(|| CliError::Usage(format!("group {g} is not in the configured list")))?,
        None => 0,
    };
    let mi = match m {
        Some(m) => cfg
            .m_values
            .iter()
            .position(|&v| v == m)
            .ok_or_else(|| CliError::Usage(format!("m = {m} is not in the configured list")))?,
        None => 0,
    };
    let g = &cfg.groups[gi];
    let m = cfg.m_values[mi];
    let cell = experiment::cell_seed(cfg.master_seed, gi, mi, trial);
    let (train, test) = experiment::cell_data(&cfg, g, m, cell).map_err(CliError::Usage)?;
    let spec = cfg.model.build(g, train.channels())?;
    let tcfg = training::TrainConfig {
        seed: equibound::seed::split(cell, &[1]),
        ..cfg.train.clone()
    };
    log::info!("training {spec} on m = {m}");
    let out = training::train(&spec, &train, &tcfg)?;
    let dir = out_dir(cli)?;
    let path = dir.join("model.eqbm");
    let mut w = create(&path)?;
    write_model(&mut w, &spec, &out.params)?;
    w.flush().map_err(io_err(&path))?;
    let path = dir.join("loss.csv");
    let mut w = create(&path)?;
    let mut text = String::from("step,loss\n");
    for (s, l) in &out.history {
        text.push_str(&format!("{s},{l}\n"));
    }
    w.write_all(text.as_bytes()).map_err(io_err(&path))?;
    for (name, d) in [("train.csv", &train), ("test.csv", &test)] {
        let path = dir.join(name);
        let mut w = create(&path)?;
        write_csv(&mut w, d)?;
        w.flush().map_err(io_err(&path))?;
    }
    let (m1, m2) = out.params.norms(&spec);
    println!("model      {spec}");
    println!("cell seed  {cell}");
    println!("train err  {}", training::error_rate(&spec, &out.params, &train)?);
    println!("test err   {}", training::error_rate(&spec, &out.params, &test)?);
    println!("M1, M2     {m1}, {m2}");
    println!("wrote model.eqbm, loss.csv, train.csv, test.csv to {}", dir.display());
    Ok(())
}

const BOUNDS_HEADER: &str = "model,data,kind,M1,M2,b_x,m,delta,complexity_term,confidence_term,total,mmax,lower_estimate";

fn print_report(r: &BoundReport, inp: &bounds::BoundInputs) {
    println!("kind             {}", r.kind);
    println!("M1               {}", inp.m1);
    println!("M2               {}", inp.m2);
    println!("b_x              {}", inp.b_x);
    println!("m                {}", inp.m);
    println!("delta            {}", inp.delta);
    if let Some(o) = inp.o_phi {
        println!("O_phi            {o}");
    }
    if let Some(mm) = r.mmax {
        println!("M^max            {mm}{}", if r.lower_estimate { " (sampled lower estimate)" } else { "" });
    }
    println!("complexity term  {}", r.complexity_term);
    println!("confidence term  {}", r.confidence_term);
    println!("total            {}", r.total);
}

fn cmd_bound(cli: &Cli, model: &Path, data: &Path, delta: f64, samples: usize) -> Result<(), CliError> {
    let (spec, params): (ModelSpec, _) = read_model(BufReader::new(File::open(model).map_err(io_err(model))?))?;
    let ds = read_csv(
        BufReader::new(File::open(data).map_err(io_err(data))?),
        spec.group().clone(),
        spec.c0(),
    )?;
    let inp = bounds::measure_inputs(&spec, &params, &ds, delta)?;
    let r = bounds::bound_for_model(&spec, &params, &ds, delta, samples, cli.seed.unwrap_or(0))?;
    print_report(&r, &inp);
    let path = out_dir(cli)?.join("bounds.csv");
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
    let mut line = String::new();
    if fresh {
        line.push_str(BOUNDS_HEADER);
        line.push('\n');
    }
    line.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        model.display(),
        data.display(),
        r.kind,
        inp.m1,
        inp.m2,
        inp.b_x,
        inp.m,
        inp.delta,
        r.complexity_term,
        r.confidence_term,
        r.total,
        r.mmax.map(|v| v.to_string()).unwrap_or_default(),
        r.lower_estimate
    ));
    f.write_all(line.as_bytes()).map_err(io_err(&path))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_rademacher(
    cli: &Cli,
    group: &str,
    c0: usize,
    c1: usize,
    m: usize,
    b_x: f64,
    m1: f64,
    m2: f64,
    pooling: Pooling,
    n_mc: usize,
    restarts: usize,
    steps: usize,
    data: Option<&Path>,
) -> Result<(), CliError> {
    let g = parse_group(group).map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = cli.seed.unwrap_or(0);
    let ds = match data {
        Some(p) => read_csv(BufReader::new(File::open(p).map_err(io_err(p))?), g.clone(), c0)?,
        None => rademacher::make_positive_orthant_dataset(g.clone(), c0, m, b_x, seed)?,
    };
    let spec = ModelSpec::spatial(g, pooling, c0, c1)?;
    let solver = SolverConfig {
        restarts,
        steps,
        ..SolverConfig::default()
    };
    let est = rademacher::estimate_rc(&spec, m1, m2, &ds, n_mc, &solver, seed)?;
    let upper = ds.b_x() * m1 * m2 / (ds.len() as f64).sqrt();
    println!("model            {spec}");
    println!("m, b_x           {}, {}", ds.len(), ds.b_x());
    println!("estimate         {} (se {}, {} samples)", est.mean, est.std_error, est.n_mc);
    println!("upper bound      {upper}");
    match rademacher::witness_supported(&spec).and_then(|_| rademacher::lower_bound_witness(&ds, m1, m2, n_mc, seed)) {
        Ok(w) => {
            println!("witness          {} (se {})", w.certified, w.certified_se);
            println!("unnormalized     {} (se {})", w.unnormalized, w.unnormalized_se);
            println!("khintchine floor {}", w.khintchine_floor);
        }
        Err(e) => println!("witness          not available: {e}"),
    }
    let path = out_dir(cli)?.join("rademacher.csv");
    let mut text = String::from("sample_idx,sup_value\n");
    for (i, v) in est.samples.iter().enumerate() {
        text.push_str(&format!("{i},{v}\n"));
    }
    create(&path)?.write_all(text.as_bytes()).map_err(io_err(&path))?;
    Ok(())
}

fn write_plots(dir: &Path, rows: &[ResultRow], which: &[PlotKind]) -> Result<(), CliError> {
    for kind in which {
        let (name, svg) = match kind {
            PlotKind::Scatter => ("scatter.svg", experiment::scatter_plot(rows).render()),
            PlotKind::Scaling => ("scaling.svg", experiment::scaling_plot(rows).render()),
        };
        let path = dir.join(name);
        create(&path)?.write_all(svg.as_bytes()).map_err(io_err(&path))?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn cmd_experiment(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli)?;
    let results = experiment::run(&cfg, jobs(cli))?;
    let stamp = if cli.reproducible {
        None
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
    };
    let path = dir.join("results.csv");
    let mut w = create(&path)?;
    experiment::write_results(&mut w, &results, stamp).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;
    let rows = experiment::successful(&results);
    write_plots(dir, &rows, &[PlotKind::Scatter, PlotKind::Scaling])?;
    let s = experiment::summarize(&rows);
    println!("cells            {} ({} failed)", results.len(), results.len() - rows.len());
    println!("spearman         {}", fmt_opt(s.spearman));
    println!("log-log slope    {}", fmt_opt(s.measured_slope));
    println!("fixed-norm slope {}", fmt_opt(s.fixed_norm_slope));
    for (g, c, gap) in &s.by_group {
        println!("  {g:<6} mean complexity {c:.4}  mean gap {gap:.4}");
    }
    println!("wrote results.csv, scatter.svg, scaling.svg to {}", dir.display());
    Ok(())
}

fn cmd_plot(cli: &Cli, csv: &Path, kind: PlotKind) -> Result<(), CliError> {
    let rows = experiment::read_results(&fs::read_to_string(csv).map_err(io_err(csv))?)?;
    write_plots(out_dir(cli)?, &rows, &[kind])
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Verify { scope, table } => cmd_verify(cli, scope, table.as_deref()),
        Command::Train { group, m, trial } => cmd_train(cli, group.as_deref(), *m, *trial),
        Command::Bound {
            model,
            data,
            delta,
            samples,
        } => cmd_bound(cli, model, data, *delta, *samples),
        Command::Rademacher {
            group,
            c0,
            c1,
            m,
            b_x,
            m1,
            m2,
            pooling,
            n_mc,
            restarts,
            steps,
            data,
        } => cmd_rademacher(
            cli,
            group,
            *c0,
            *c1,
            *m,
            *b_x,
            *m1,
            *m2,
            *pooling,
            *n_mc,
            *restarts,
            *steps,
            data.as_deref(),
        ),
        Command::Experiment => cmd_experiment(cli),
        Command::Plot { csv, kind } => cmd_plot(cli, csv, *kind),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EQUIBOUND_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::ChecksFailed(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
