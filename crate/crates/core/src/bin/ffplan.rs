use clap::{Parser, Subcommand, ValueEnum};
use ffplan::bench::{self, emit_csv, emit_svg, parse_csv, parse_suite, summarize, summary_table, SuiteSpec};
use ffplan::gusto::{parse_config, solve_cold, solve_warm, GustoConfig, GustoReport};
use ffplan::ocp::{parse_problem, trajectory_svg, write_trajectory_csv, ProblemParameters};
use ffplan::warmstart::{generate_dataset, io, train_on, Environment, EnvMix, Mlp, Sampler, TrainConfig};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ffplan", version, about = "Free-flyer trajectory planning with learned warm starts")]
struct Cli {
    /// Seed for sampling and training; overrides the seed in a suite file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// GuSTO settings as `gusto.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted and the command allows it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent instances.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvArg {
    Jem,
    Granite,
    /// 85 % module volume, 15 % table.
    Mix,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write the trajectory as CSV.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Warm-start network; cold start when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Ignore `--model` and start from the straight line.
        #[arg(long)]
        cold: bool,
        /// Top-view SVG of the solution.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Sample and cold-solve problems into a dataset file.
    GenData {
        #[arg(long, value_enum, default_value_t = EnvArg::Mix)]
        env: EnvArg,
        #[arg(long, default_value_t = 2000)]
        count: usize,
        #[arg(long, default_value_t = 0.5)]
        obstacle_fraction: f64,
        #[arg(long, default_value_t = ffplan::warmstart::DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long, default_value_t = ffplan::warmstart::DEFAULT_DT)]
        dt: f64,
    },
    /// Fit the warm-start network to a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = TrainConfig::default().epochs)]
        epochs: usize,
        #[arg(long, default_value_t = TrainConfig::default().batch)]
        batch: usize,
        #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
        lr: f64,
    },
    /// Paired cold/warm benchmark; prints the summary table and writes CSV.
    Bench {
        /// Suite description; four categories of 50 module-volume instances
        /// when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Add wall-time columns to the CSV.
        #[arg(long)]
        timing: bool,
    },
    /// Summary table and plot from an existing benchmark CSV.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

enum Failure {
    Solver(String),
    Input(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Solver(_) => 1,
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Solver(m) | Failure::Input(m) | Failure::Io(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn write_binary<F>(path: Option<&Path>, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = path.ok_or_else(|| Failure::Input("--out is required for binary output".into()))?;
    let io_err = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    f(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn load_model(path: &Path) -> Result<Mlp, Failure> {
    io::read_model(&mut open(path)?).map_err(|e| match e {
        io::FormatError::Io(e) => Failure::Io(format!("{}: {e}", path.display())),
        e => Failure::Input(format!("{}: {e}", path.display())),
    })
}

fn summary_line(rep: &GustoReport) -> String {
    format!(
        "{:?}: cost {:.6e}, {} rounds, {} inner iterations, max violation {:.2e}",
        rep.status, rep.cost, rep.outer_iterations, rep.inner_iterations, rep.gbar
    )
}

fn solve(
    cli: &Cli,
    cfg: &GustoConfig,
    problem: &Path,
    model: Option<&Path>,
    cold: bool,
    plot: Option<&Path>,
) -> Result<(), Failure> {
    let params: ProblemParameters = parse_problem(&read_text(problem)?).map_err(input(problem))?;
    let rep = match model.filter(|_| !cold) {
        Some(m) => solve_warm(&params, &load_model(m)?, cfg),
        None => solve_cold(&params, cfg),
    }
    .map_err(|e| Failure::Input(e.to_string()))?;
    write_out(cli.out.as_deref(), &write_trajectory_csv(&rep.trajectory))?;
    if let Some(p) = plot {
        write_out(Some(p), &trajectory_svg(&rep.trajectory, &params))?;
    }
    eprintln!("{}", summary_line(&rep));
    if rep.converged() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("no converged trajectory ({:?})", rep.status)))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => parse_config(&read_text(p)?).map_err(input(p))?,
        None => GustoConfig::default(),
    };
    let jobs = cli.jobs.max(1);
    match &cli.command {
        Command::Solve {
            problem,
            model,
            cold,
            plot,
        } => solve(cli, &cfg, problem, model.as_deref(), *cold, plot.as_deref()),
        Command::GenData {
            env,
            count,
            obstacle_fraction,
            horizon,
            dt,
        } => {
            if !(0.0..=1.0).contains(obstacle_fraction) || *horizon < 4 || !(*dt > 0.0) {
                return Err(Failure::Input(
                    "need 0 ≤ obstacle fraction ≤ 1, horizon ≥ 4 and dt > 0".into(),
                ));
            }
            let mix = match env {
                EnvArg::Jem => EnvMix::only(Environment::Jem, *obstacle_fraction),
                EnvArg::Granite => EnvMix::only(Environment::Granite, *obstacle_fraction),
                EnvArg::Mix => EnvMix {
                    obstacle_fraction: *obstacle_fraction,
                    ..EnvMix::default()
                },
            };
            let sampler = Sampler {
                horizon: *horizon,
                dt: *dt,
                ..Sampler::default()
            };
            let ds = generate_dataset(*count, mix, &sampler, &cfg, cli.seed.unwrap_or(0), jobs);
            write_binary(cli.out.as_deref(), |w| io::write_dataset(w, &ds.records))?;
            eprintln!(
                "{} records, {} problems dropped ({:.1} %)",
                ds.records.len(),
                ds.failures,
                100.0 * ds.failure_rate()
            );
            Ok(())
        }
        Command::Train {
            data,
            epochs,
            batch,
            lr,
        } => {
            let ds = io::read_dataset(&mut open(data)?).map_err(input(data))?;
            let tc = TrainConfig {
                epochs: *epochs,
                batch: *batch,
                learning_rate: *lr,
                seed: cli.seed.unwrap_or(TrainConfig::default().seed),
            };
            let model = train_on(&ds, &tc).map_err(|e| match e {
                e @ ffplan::warmstart::TrainError::NonFinite { .. } => Failure::Solver(e.to_string()),
                e => Failure::Input(e.to_string()),
            })?;
            write_binary(cli.out.as_deref(), |w| io::write_model(w, &model))?;
            eprintln!("final loss {:.4e} after {} epochs", model.meta.final_loss, model.meta.epochs);
            Ok(())
        }
        Command::Bench {
            suite,
            model,
            plot,
            timing,
        } => {
            let mut spec = match suite {
                Some(p) => parse_suite(&read_text(p)?).map_err(input(p))?,
                None => SuiteSpec::default(),
            };
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let suites = spec.build().map_err(|e| Failure::Input(e.to_string()))?;
            let model = load_model(model)?;
            let rows = bench::run_benchmark(&suites, &model, &cfg, jobs).map_err(|e| Failure::Input(e.to_string()))?;
            write_out(cli.out.as_deref(), &emit_csv(&rows, *timing))?;
            if let Some(p) = plot {
                write_out(Some(p), &emit_svg(&rows).map_err(|e| Failure::Io(e.to_string()))?)?;
            }
            eprint!("{}", summary_table(&summarize(&rows)));
            Ok(())
        }
        Command::Report { input: path, plot } => {
            let rows = parse_csv(&read_text(path)?).map_err(input(path))?;
            if let Some(p) = plot {
                write_out(Some(p), &emit_svg(&rows).map_err(|e| Failure::Io(e.to_string()))?)?;
            }
            write_out(cli.out.as_deref(), &summary_table(&summarize(&rows)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ffplan: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
