use anyhow::{bail, Context};
use bcor_core::checks::run_checks;
use bcor_core::harness::{
    aggregate, read_aggregate_csv, read_runs_csv, run_experiment, write_aggregate_csv, write_plot_data, write_runs_csv,
};
use bcor_core::rng::{substream, INSTANCE};
use bcor_core::{gen_instance, Error, ExperimentConfig, LearnerId, SeedSpec};
use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bcor", version, about = "Seeded restless-bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instance and write it as JSON.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Seed to generate; defaults to the first configured seed.
        #[arg(long)]
        seed_start: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configured learner on every seed and write the runs CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, requires = "seed_count")]
        seed_start: Option<u64>,
        #[arg(long, requires = "seed_start")]
        seed_count: Option<u64>,
        /// Comma-separated learner identifiers, replacing the config list.
        #[arg(long, value_delimiter = ',')]
        learners: Option<Vec<String>>,
    },
    /// Summarize a runs CSV per learner and timestep.
    Aggregate {
        runs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "random")]
        center: String,
    },
    /// Turn an aggregate CSV into plot-ready rows with ±2 SE bands.
    Plotdata {
        aggregate: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in invariant and oracle checks.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplies the sample sizes of the checks.
        #[arg(long, default_value_t = 1)]
        scale: usize,
    },
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen { config, seed_start, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = seed_start.unwrap_or(cfg.seeds.seeds()[0]);
            let (inst, _) = gen_instance(cfg.setting, &cfg.gen_spec()?, seed, &mut substream(seed, INSTANCE))?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "{}", inst.to_json()?)?;
            w.flush()?;
        }
        Command::Run { config, out, workers, seed_start, seed_count, learners } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let (Some(start), Some(count)) = (seed_start, seed_count) {
                cfg.seeds = SeedSpec::Range { start, count };
            }
            if let Some(ids) = learners {
                cfg.learners = ids.iter().map(|s| s.trim().parse::<LearnerId>()).collect::<Result<_, _>>()?;
            }
            let records = run_experiment(&cfg, workers)?;
            let path = out.or_else(|| cfg.output.clone());
            let mut w = output(path.as_deref())?;
            write_runs_csv(&records, &mut w)?;
            w.flush()?;
        }
        Command::Aggregate { runs, out, center } => {
            let records = read_runs_csv(open(&runs)?)?;
            let rows = aggregate(&records, center.parse()?)?;
            let mut w = output(out.as_deref())?;
            write_aggregate_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Plotdata { aggregate, out } => {
            let rows = read_aggregate_csv(open(&aggregate)?)?;
            write_plot_data(&rows, &out)?;
        }
        Command::Check { seed, scale } => {
            let results = run_checks(seed, scale)?;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().any(|r| !r.passed) {
                bail!("{} of {} checks failed", results.iter().filter(|r| !r.passed).count(), results.len());
            }
        }
    }
    Ok(())
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == ErrorKind::BrokenPipe)) => {
            // Downstream reader closed early, as with `| head`.
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e.chain().find_map(|c| c.downcast_ref::<Error>()).map_or("failure", Error::kind);
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("{}", error_line(kind, &message));
            ExitCode::FAILURE
        }
    }
}
