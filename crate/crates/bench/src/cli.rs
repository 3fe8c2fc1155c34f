//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbag::clustering::DistanceMode;
use qbag::Task;

use crate::config::{DatasetSpec, ExperimentConfig, Learner};
use crate::plot::emit_plot;
use crate::report::{
    emit_csv, emit_summary, emit_timings, read_csv, summarize_by_delta, summarize_over_delta,
};
use crate::runner::{run_experiment, ResultRow};
use crate::BenchError;

#[derive(Parser, Debug)]
#[command(
    name = "qbag",
    version,
    about = "Bagged clustering ensembles under label noise: experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the (delta, B, repeat) grid for one learner.
    Run {
        #[arg(long, value_parser = parse_learner)]
        learner: Learner,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run the grid for several learners with shared splits and noise.
    Sweep {
        #[arg(
            long,
            value_parser = parse_learner,
            value_delimiter = ',',
            default_value = "dt_bagging,kmeans_bagging,qmeans_bagging"
        )]
        learner: Vec<Learner>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare tree, k-means and q-means bagging, averaged over delta.
    Table2 {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Draw mean test metric against B from a results table.
    Plot {
        /// A results.csv written by `run`, `sweep` or `table2`.
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, value_enum, default_value_t = TaskArg::Class)]
    task: TaskArg,
    #[arg(
        long = "B",
        value_delimiter = ',',
        default_value = "4,8,12,16,20,24,28,32"
    )]
    b: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Training-label flip rate [default: 0.05 for class, 0 for regress].
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, value_enum, default_value_t = DistanceArg::FidelityExact)]
    distance: DistanceArg,
    /// Measurements per SWAP test with `--distance fidelity-shots`.
    #[arg(long, default_value_t = 1024)]
    shots: u32,
    #[arg(long, default_value_t = 0.5)]
    bootstrap_fraction: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TaskArg {
    Class,
    Regress,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DistanceArg {
    Euclidean,
    FidelityExact,
    FidelityShots,
}

fn parse_learner(s: &str) -> Result<Learner, String> {
    s.parse::<Learner>().map_err(|_| {
        let names: Vec<&str> = Learner::ALL.iter().map(|l| l.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

impl GridArgs {
    fn config(&self, learner: Learner) -> ExperimentConfig {
        let task = match self.task {
            TaskArg::Class => Task::Classification,
            TaskArg::Regress => Task::Regression,
        };
        let noise_default = match task {
            Task::Classification => 0.05,
            Task::Regression => 0.0,
        };
        ExperimentConfig {
            b_values: self.b.clone(),
            delta_values: self.delta.clone(),
            k: self.k,
            noise_rate: self.noise.unwrap_or(noise_default),
            repeats: self.repeats,
            test_fraction: self.test_fraction,
            distance: match self.distance {
                DistanceArg::Euclidean => DistanceMode::Euclidean,
                DistanceArg::FidelityExact => DistanceMode::FidelityExact,
                DistanceArg::FidelityShots => DistanceMode::FidelityShots(self.shots),
            },
            bootstrap_fraction: self.bootstrap_fraction,
            master_seed: self.seed,
            output_dir: self.out.clone(),
            ..ExperimentConfig::new(
                DatasetSpec {
                    path: self.dataset.clone(),
                    label_column: self.label_column.clone(),
                    task,
                },
                learner,
            )
        }
    }
}

/// The learners compared by `table2`.
pub const TABLE2_LEARNERS: [Learner; 3] = [
    Learner::DtBagging,
    Learner::KmeansBagging,
    Learner::QmeansBagging,
];

/// Parse `args` (program name first) and run. Returns the process exit code:
/// 0 on success, 2 for usage errors, 1 for failures while running.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

fn execute(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Run { learner, grid } => {
            let rows = run_all(&grid, &[learner])?;
            write_results(&rows, &grid.out)?;
            emit_summary(&summarize_by_delta(&rows), &grid.out.join("summary.csv"))?;
            emit_plot(&rows, &grid.out.join("plot.svg"))?;
            announce(
                &grid.out,
                &["results.csv", "timings.csv", "summary.csv", "plot.svg"],
            );
        }
        Command::Sweep { learner, grid } => {
            let rows = run_all(&grid, &learner)?;
            write_results(&rows, &grid.out)?;
            emit_summary(&summarize_by_delta(&rows), &grid.out.join("summary.csv"))?;
            announce(&grid.out, &["results.csv", "timings.csv", "summary.csv"]);
        }
        Command::Table2 { grid } => {
            let rows = run_all(&grid, &TABLE2_LEARNERS)?;
            write_results(&rows, &grid.out)?;
            emit_summary(&summarize_over_delta(&rows), &grid.out.join("table2.csv"))?;
            emit_summary(
                &summarize_by_delta(&rows),
                &grid.out.join("table2_by_delta.csv"),
            )?;
            announce(
                &grid.out,
                &[
                    "results.csv",
                    "timings.csv",
                    "table2.csv",
                    "table2_by_delta.csv",
                ],
            );
        }
        Command::Plot { results, out } => {
            let rows = read_csv(&results)?;
            if rows.is_empty() {
                return Err(BenchError::Config(format!(
                    "{} holds no result rows",
                    results.display()
                )));
            }
            let mut groups: Vec<(String, String)> = rows
                .iter()
                .map(|r| (r.dataset.clone(), r.learner.clone()))
                .collect();
            groups.dedup();
            groups.sort();
            groups.dedup();
            for (dataset, learner) in groups {
                let subset: Vec<ResultRow> = rows
                    .iter()
                    .filter(|r| r.dataset == dataset && r.learner == learner)
                    .cloned()
                    .collect();
                let path = out.join(format!("{dataset}_{learner}.svg"));
                emit_plot(&subset, &path)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn run_all(grid: &GridArgs, learners: &[Learner]) -> Result<Vec<ResultRow>, BenchError> {
    let mut rows = Vec::new();
    for &learner in learners {
        let config = grid.config(learner);
        config.validate()?;
        eprintln!("running {learner} on {}", grid.dataset.display());
        rows.extend(run_experiment(&config)?);
    }
    Ok(rows)
}

fn write_results(rows: &[ResultRow], out: &Path) -> Result<(), BenchError> {
    emit_csv(rows, &out.join("results.csv"))?;
    emit_timings(rows, &out.join("timings.csv"))
}

fn announce(out: &Path, files: &[&str]) {
    for f in files {
        eprintln!("wrote {}", out.join(f).display());
    }
}
