use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Parser, Subcommand};
use graded::grad::DEFAULT_EPS;
use graded_harness::bench::{approx_bench, BenchConfig};
use graded_harness::gradcheck::grad_check_suite;
use graded_harness::train_cli::train_cli;
use graded_harness::verify::verify_examples;
use graded_harness::fmt_f64;

#[derive(Parser)]
#[command(name = "graded", about = "Graded neural network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Re-evaluate the published worked examples.
    VerifyExamples,
    /// Compare analytic gradients with central differences on random networks.
    GradCheck {
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a model described by a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Error against neuron count, graded neuron versus ReLU networks.
    ApproxBench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::VerifyExamples => {
            let report = verify_examples();
            println!("{report}");
            Ok(report.all_consistent())
        }
        Command::GradCheck { eps, count, seed } => {
            let start = Instant::now();
            let summary = grad_check_suite(count, eps, seed)?;
            for c in summary.cases.iter().filter(|c| c.max_rel_err >= summary.tolerance) {
                println!("FAIL case {} ({} layers, head {}, {}): {}", c.index, c.layers, c.head, c.loss, fmt_f64(c.max_rel_err));
            }
            println!(
                "{} cases, {} failures, worst relative error {}, eps {eps}, {:.2?}",
                summary.cases.len(),
                summary.failures(),
                fmt_f64(summary.worst()),
                start.elapsed()
            );
            Ok(summary.failures() == 0)
        }
        Command::Train { config } => {
            let summary = train_cli(&config)?;
            println!("{summary}");
            Ok(true)
        }
        Command::ApproxBench { config, out } => {
            let start = Instant::now();
            let cfg = BenchConfig::load(&config)?;
            let table = approx_bench(&cfg)?;
            table.write_csv(&out)?;
            for r in &table.rows {
                println!("{:<16} m={:<3} eval max error {}", r.model, r.m, fmt_f64(r.eval_max_err));
            }
            println!("wrote {} in {:.1?}", out.display(), start.elapsed());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
