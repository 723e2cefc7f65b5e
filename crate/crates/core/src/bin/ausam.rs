//! Command-line front end. Exit codes: 0 success, 1 invalid input,
//! 2 runtime failure, 3 a verification suite had failures.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ausam::harness::{
    self, all_hold, compare, export_series, output_dir, run_suites, train, RunConfig,
};
use ausam::verify::SuiteName;

#[derive(Parser)]
#[command(name = "ausam", version, about = "SAM / AUSAM training and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configured run and write its metrics and checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train several configs that share dataset, model and seed, and
    /// tabulate accuracy against per-sample evaluation cost.
    Compare {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run randomized bound-check suites; reports go to stdout as JSON lines.
    Verify {
        /// thm1, lemma1, thm2, thm3, thm4 or all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print selected fields of a metrics file as CSV.
    ExportSeries {
        #[arg(long)]
        metrics: PathBuf,
        /// Comma-separated field names.
        #[arg(long, value_delimiter = ',', required = true)]
        fields: Vec<String>,
    },
}

fn run(cli: Cli) -> ausam::Result<u8> {
    match cli.command {
        Command::Train { config, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = output_dir(&cfg, out.as_deref())?;
            let s = train(&cfg, &dir)?;
            let acc = s
                .final_eval_accuracy
                .map_or("n/a".to_string(), |a| format!("{:.2}%", 100.0 * a));
            println!(
                "{}: {} epochs, eval accuracy {acc}, {} forward + {} backward sample evaluations -> {}",
                s.model,
                s.epochs,
                s.forward_samples,
                s.backward_samples,
                dir.display()
            );
        }
        Command::Compare { configs, out, json } => {
            let cfgs = configs
                .iter()
                .map(|p| RunConfig::load(p))
                .collect::<ausam::Result<Vec<_>>>()?;
            let report = compare(&cfgs, out.as_deref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_table());
            }
        }
        Command::Verify { suite, instances, seed } => {
            let suite: SuiteName = suite.parse()?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let summaries = run_suites(suite, instances, seed, &mut lock)?;
            lock.flush().ok();
            for s in &summaries {
                eprintln!("{}: {}/{} hold", s.suite, s.holds, s.instances);
            }
            if !all_hold(&summaries) {
                return Ok(harness::EXIT_VERIFICATION);
            }
        }
        Command::ExportSeries { metrics, fields } => {
            export_series(&metrics, &fields, &mut std::io::stdout().lock())?;
        }
    }
    Ok(harness::EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { harness::EXIT_VALIDATION } else { harness::EXIT_OK };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e))
        }
    }
}
