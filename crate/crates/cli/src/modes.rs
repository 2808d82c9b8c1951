//! The three run modes: verify, montecarlo, sweep.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use qutel_core::channel::ChannelSpec;
use qutel_core::protocol::{run_resumable, AttemptStats, InputState};
use qutel_core::verify::{run_suite, splitmix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Format, InputSpec, Mode, RunConfig};
use crate::report::{write_csv, write_jsonl, ResultRow};

/// Runs the configured mode; the returned code is the process exit code
/// (0 = all checks passed, 1 = a check failed).
pub fn run(config: &RunConfig) -> Result<i32> {
    for warning in &config.warnings {
        eprintln!("warning: {warning}");
    }
    match config.mode {
        Mode::Verify => run_verify(config),
        Mode::Montecarlo => run_montecarlo(config),
        Mode::Sweep => run_sweep(config),
    }
}

fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .with_context(|| format!("cannot create {}", parent.display()))?;
                }
            }
            let file = File::create(path)
                .with_context(|| format!("cannot create output file {}", path.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn fixed_input(config: &RunConfig) -> Result<Option<InputState>> {
    match &config.input {
        InputSpec::Random => Ok(None),
        InputSpec::Amplitudes(amplitudes) => Ok(Some(InputState::new(amplitudes.clone())?)),
    }
}

fn run_verify(config: &RunConfig) -> Result<i32> {
    let input = fixed_input(config)?;
    let reports = run_suite(&config.channel, input.as_ref(), config.seed, config.trials)?;
    let mut sink = open_sink(config.output.as_deref())?;
    writeln!(
        sink,
        "dim {} channel [{}]",
        config.dim,
        config
            .channel
            .coefficients()
            .iter()
            .map(|b| format!("{b:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    )?;
    writeln!(
        sink,
        "analytic success probability: {}",
        config.channel.success_probability().clamp(0.0, 1.0)
    )?;
    let mut failed = Vec::new();
    for report in &reports {
        let status = if report.passed { "PASS" } else { "FAIL" };
        writeln!(sink, "{status} {} — {}", report.name, report.detail)?;
        if !report.passed {
            failed.push(report.name);
        }
    }
    writeln!(
        sink,
        "{} of {} properties passed",
        reports.len() - failed.len(),
        reports.len()
    )?;
    sink.flush()?;
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "verification failed for {} (seed {})",
            failed.join(", "),
            config.seed
        );
        Ok(1)
    }
}

/// Seed for one trial, spread so the per-attempt streams of different
/// trials never overlap.
fn trial_seed(base: u64, trial: u64) -> u64 {
    splitmix(base ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct Batch {
    stats: AttemptStats,
    wall_time_ms: u64,
}

fn run_batch(
    channel: &ChannelSpec,
    config: &RunConfig,
    base_seed: u64,
    transcript_sink: &mut Option<Box<dyn Write>>,
) -> Result<Batch> {
    let fixed = fixed_input(config)?;
    let started = Instant::now();
    let mut stats = AttemptStats::default();
    for trial in 0..config.trials {
        let seed = trial_seed(base_seed, trial);
        let input = match &fixed {
            Some(state) => state.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0x5151_5151_5151_5151));
                InputState::random(channel.level_count(), &mut rng)
            }
        };
        let (trial_stats, transcript) = run_resumable(&input, channel, config.max_attempts, seed)?;
        stats.merge(&trial_stats);
        if let Some(sink) = transcript_sink {
            serde_json::to_writer(&mut *sink, &transcript)?;
            sink.write_all(b"\n")?;
        }
    }
    Ok(Batch {
        stats,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

fn emit_rows(config: &RunConfig, rows: &[ResultRow]) -> Result<()> {
    let sink = open_sink(config.output.as_deref())?;
    match config.format {
        Format::Csv => write_csv(rows, sink),
        Format::JsonLines => write_jsonl(rows, sink),
    }
}

fn run_montecarlo(config: &RunConfig) -> Result<i32> {
    let mut transcript_sink = match &config.dump_transcripts {
        Some(path) => Some(open_sink(Some(path))?),
        None => None,
    };
    let batch = run_batch(&config.channel, config, config.seed, &mut transcript_sink)?;
    if let Some(sink) = &mut transcript_sink {
        sink.flush()?;
    }
    let row = ResultRow::new(
        config.dim,
        config.channel.b0() * config.channel.b0(),
        config.channel.success_probability(),
        config.trials,
        &batch.stats,
        config.timing.then_some(batch.wall_time_ms),
    );
    emit_rows(config, &[row])?;
    Ok(0)
}

fn run_sweep(config: &RunConfig) -> Result<i32> {
    let grid = config.sweep.as_ref().expect("validated in config");
    let mut rows = Vec::with_capacity(grid.len());
    for (index, &b0_squared) in grid.iter().enumerate() {
        let channel = ChannelSpec::from_b0_squared(config.dim, b0_squared)?;
        let base = splitmix(config.seed ^ (index as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03));
        let batch = run_batch(&channel, config, base, &mut None)?;
        rows.push(ResultRow::new(
            config.dim,
            b0_squared,
            channel.success_probability(),
            config.trials,
            &batch.stats,
            config.timing.then_some(batch.wall_time_ms),
        ));
    }
    emit_rows(config, &rows)?;
    Ok(0)
}
