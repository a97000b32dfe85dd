use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holonomy_core::scenario::{
    corpus, emit_report, emit_reports, parse_scenario, run, run_corpus, run_sweep, sweep_values, Format, RunReport,
    Scenario, ScenarioError,
};

/// Exit status when every run completed but some check did not pass.
const CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "holonomy-lab", version, about = "Run geometric-phase and holonomy scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in scenario corpus.
    Corpus {
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Print the corpus entry names and exit.
        #[arg(long)]
        list: bool,
        /// Print one entry's scenario text and exit.
        #[arg(long, value_name = "NAME", conflicts_with = "list")]
        show: Option<String>,
    },
    /// Run a scenario once per value of one numeric parameter.
    Sweep {
        file: PathBuf,
        /// Parameter to vary, as named under [params].
        #[arg(long)]
        param: String,
        /// Evenly spaced values, `start:stop:count`.
        #[arg(
            long,
            conflicts_with = "values",
            required_unless_present = "values",
            allow_hyphen_values = true
        )]
        grid: Option<String>,
        /// Explicit comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// json or csv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<u8, ScenarioError> {
    match command {
        Command::Run { file, out, seed } => {
            let format: Format = out.format.parse()?;
            let scenario = load(&file, seed)?;
            let report = run(&scenario)?;
            write(&out.out, &emit_report(&report, format)?)?;
            Ok(status(&[Ok(report)]))
        }
        Command::Corpus {
            out,
            seed,
            jobs,
            list,
            show,
        } => {
            if list {
                for e in corpus() {
                    println!("{}", e.name);
                }
                return Ok(0);
            }
            if let Some(name) = show {
                let entry = corpus()
                    .iter()
                    .find(|e| e.name == name)
                    .ok_or_else(|| ScenarioError::Validation {
                        key: "show".into(),
                        message: format!("no corpus entry named `{name}`"),
                    })?;
                print!("{}", entry.text);
                return Ok(0);
            }
            let format: Format = out.format.parse()?;
            let outcomes = run_corpus(seed, jobs)?;
            for o in &outcomes {
                match &o.result {
                    Ok(r) if r.passed() => eprintln!("PASS {}", o.name),
                    Ok(r) => {
                        let failed: Vec<&str> =
                            r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                        eprintln!("FAIL {} ({})", o.name, failed.join(", "));
                    }
                    Err(e) => eprintln!("ERROR {}: {e}", o.name),
                }
            }
            let results: Vec<_> = outcomes.into_iter().map(|o| o.result).collect();
            finish(&out, format, results)
        }
        Command::Sweep {
            file,
            param,
            grid,
            values,
            out,
            seed,
            jobs,
        } => {
            let format: Format = out.format.parse()?;
            let scenario = load(&file, seed)?;
            let values = match (grid, values) {
                (Some(g), _) => sweep_values(&g)?,
                (None, Some(v)) if !v.is_empty() => v,
                _ => {
                    return Err(ScenarioError::Validation {
                        key: "values".into(),
                        message: "no sweep values given".into(),
                    })
                }
            };
            let results = run_sweep(&scenario, &param, &values, jobs)?;
            for r in &results {
                if let Err(e) = r {
                    eprintln!("error: {e}");
                }
            }
            finish(&out, format, results)
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let scenario = parse_scenario(&text)?;
    Ok(match seed {
        Some(s) => scenario.with_seed(s),
        None => scenario,
    })
}

fn write(out: &Option<PathBuf>, text: &str) -> Result<(), ScenarioError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Emits the successful reports, then picks the exit status: the worst
/// error's code if any run failed, 4 if a check failed, else 0.
fn finish(
    out: &OutputArgs,
    format: Format,
    results: Vec<Result<RunReport, ScenarioError>>,
) -> Result<u8, ScenarioError> {
    let reports: Vec<RunReport> = results.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
    write(&out.out, &emit_reports(&reports, format)?)?;
    Ok(status(&results))
}

fn status(results: &[Result<RunReport, ScenarioError>]) -> u8 {
    let worst = results
        .iter()
        .filter_map(|r| r.as_ref().err())
        .map(|e| e.exit_code() as u8)
        .max();
    match worst {
        Some(code) => code,
        None if results.iter().all(|r| r.as_ref().is_ok_and(RunReport::passed)) => 0,
        None => CHECK_FAILED,
    }
}
