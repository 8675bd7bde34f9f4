//! The `train` subcommand: config in, metrics and model out.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{ensure, Context, Result};
use graded::opt::{init_uniform, train_with, StopReason, TrainRecord};

use crate::config::ExperimentConfig;
use crate::fmt_f64;

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub stop: StopReason,
}

impl std::fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let stop = match self.stop {
            StopReason::MaxIter => "max_iter",
            StopReason::Stalled => "stalled",
            StopReason::TargetReached => "target_reached",
        };
        write!(
            f,
            "iterations={} initial_loss={} final_loss={} stop={stop}",
            self.iterations,
            fmt_f64(self.initial_loss),
            fmt_f64(self.final_loss)
        )
    }
}

/// One metrics line. Written by hand so every float keeps 17 digits.
pub fn metrics_line(r: &TrainRecord) -> String {
    format!("{{\"iter\":{},\"loss\":{},\"grad_norm\":{}}}", r.iter, fmt_f64(r.loss), fmt_f64(r.grad_norm))
}

pub fn train_cli(config_path: &Path) -> Result<TrainSummary> {
    let cfg = ExperimentConfig::load(config_path)?;
    let kind = cfg.loss_kind()?;
    let data = cfg.dataset()?;
    let mut net = cfg.network()?;
    ensure!(
        data.input_grading() == net.input_grading(),
        "dataset inputs are graded {}, model expects {}",
        data.input_grading(),
        net.input_grading()
    );
    ensure!(
        data.output_grading() == net.output_grading(),
        "dataset targets are graded {}, model produces {}",
        data.output_grading(),
        net.output_grading()
    );
    init_uniform(&mut net, cfg.optimizer.seed);

    let file = File::create(&cfg.output.metrics).with_context(|| format!("creating {}", cfg.output.metrics.display()))?;
    let mut metrics = BufWriter::new(file);
    let mut write_err = None;
    let outcome = train_with(net, &data.inputs, &data.targets, kind, &cfg.optimizer, |r| {
        if write_err.is_none() {
            if let Err(e) = writeln!(metrics, "{}", metrics_line(r)) {
                write_err = Some(e);
            }
        }
    });
    metrics.flush()?;
    if let Some(e) = write_err {
        return Err(e).with_context(|| format!("writing {}", cfg.output.metrics.display()));
    }
    let outcome = outcome?;
    std::fs::write(&cfg.output.model, outcome.net.to_json())
        .with_context(|| format!("writing {}", cfg.output.model.display()))?;
    Ok(TrainSummary {
        iterations: outcome.history.len() - 1,
        initial_loss: outcome.history[0].loss,
        final_loss: outcome.final_loss(),
        stop: outcome.stop,
    })
}
