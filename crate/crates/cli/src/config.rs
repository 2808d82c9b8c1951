//! Run configuration: command-line flags, an optional flat key-value
//! config file (flags win), and the output-directory environment variable.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use num_complex::Complex64;
use qutel_core::channel::ChannelSpec;
use qutel_core::protocol::InputState;

/// Environment variable holding the default directory for relative
/// output paths.
pub const OUTPUT_DIR_ENV: &str = "QUTEL_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Montecarlo,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone)]
pub enum InputSpec {
    /// Fresh random input per trial, derived from the seed.
    Random,
    /// Fixed amplitudes for every trial.
    Amplitudes(Vec<Complex64>),
}

/// Fully validated configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub dim: usize,
    pub channel: ChannelSpec,
    pub input: InputSpec,
    pub seed: u64,
    pub trials: u64,
    pub max_attempts: u64,
    /// b₀² grid for sweep mode.
    pub sweep: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Populate the wall-time column (off by default: it breaks
    /// byte-for-byte output determinism).
    pub timing: bool,
    pub dump_transcripts: Option<PathBuf>,
    /// Normalization / sorting notices emitted while resolving inputs.
    pub warnings: Vec<String>,
}

#[derive(Debug, Parser)]
#[command(
    name = "qutel",
    about = "Resumable qudit teleportation: verification, Monte Carlo, and parameter sweeps",
    long_about = None
)]
struct RawArgs {
    /// Flat key-value config file; command-line flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of: verify, montecarlo, sweep
    #[arg(long)]
    mode: Option<String>,
    /// Qudit dimension N (>= 2)
    #[arg(long)]
    dim: Option<usize>,
    /// Schmidt coefficients: comma list, "maximal", or "b0sq=X"
    #[arg(long, allow_hyphen_values = true)]
    schmidt: Option<String>,
    /// Input amplitudes: comma list of complex numbers, or "random"
    #[arg(long, allow_hyphen_values = true)]
    input: Option<String>,
    /// Base seed for all randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per batch (montecarlo, sweep) and samples for verify
    #[arg(long)]
    trials: Option<u64>,
    /// Retry budget of the resumable loop
    #[arg(long)]
    max_attempts: Option<u64>,
    /// Sweep grid over b0 squared: "b0sq=START:STEP:END" or "b0sq=v1,v2,..."
    #[arg(long)]
    sweep: Option<String>,
    /// Output file; stdout when omitted. Relative paths resolve against
    /// $QUTEL_OUTPUT_DIR when set
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format for result rows: csv (default) or jsonl
    #[arg(long)]
    format: Option<String>,
    /// Fill the wall_time_ms column (makes output non-reproducible)
    #[arg(long)]
    timing: bool,
    /// Write one JSON line per trial's final transcript to this file
    #[arg(long)]
    dump_transcripts: Option<PathBuf>,
}

/// String-valued settings collected from the config file.
#[derive(Debug, Default)]
struct FileSettings {
    values: HashMap<String, String>,
}

const FILE_KEYS: [&str; 12] = [
    "mode",
    "dim",
    "schmidt",
    "input",
    "seed",
    "trials",
    "max_attempts",
    "sweep",
    "output",
    "format",
    "timing",
    "dump_transcripts",
];

fn parse_config_file(path: &Path) -> Result<FileSettings> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut settings = FileSettings::default();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), line_no + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !FILE_KEYS.contains(&key) {
            bail!("{}:{}: unknown key '{key}'", path.display(), line_no + 1);
        }
        if settings
            .values
            .insert(key.to_string(), value.to_string())
            .is_some()
        {
            bail!("{}:{}: duplicate key '{key}'", path.display(), line_no + 1);
        }
    }
    Ok(settings)
}

impl FileSettings {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key '{key}': {e}")),
        }
    }
}

/// Parses argv (and the config file it may name) into a validated config.
pub fn load() -> Result<RunConfig> {
    from_args(RawArgs::parse())
}

fn from_args(args: RawArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => FileSettings::default(),
    };
    let mut warnings = Vec::new();

    let mode_str = args
        .mode
        .or_else(|| file.get("mode").map(str::to_string))
        .ok_or_else(|| anyhow!("missing --mode (verify, montecarlo, or sweep)"))?;
    let mode = match mode_str.as_str() {
        "verify" => Mode::Verify,
        "montecarlo" => Mode::Montecarlo,
        "sweep" => Mode::Sweep,
        other => bail!("unknown mode '{other}'"),
    };

    let format = match args
        .format
        .or_else(|| file.get("format").map(str::to_string))
        .as_deref()
        .unwrap_or("csv")
    {
        "csv" => Format::Csv,
        "jsonl" | "json-lines" => Format::JsonLines,
        other => bail!("unknown format '{other}' (expected csv or jsonl)"),
    };

    let dim_flag = match args.dim {
        Some(d) => Some(d),
        None => file.parsed::<usize>("dim")?,
    };
    if let Some(d) = dim_flag {
        if d < 2 {
            bail!("--dim must be at least 2, got {d}");
        }
    }

    let schmidt_str = args
        .schmidt
        .or_else(|| file.get("schmidt").map(str::to_string))
        .ok_or_else(|| anyhow!("missing --schmidt (comma list, 'maximal', or 'b0sq=<x>')"))?;
    let (channel, dim) = resolve_channel(&schmidt_str, dim_flag, &mut warnings)?;

    let input_str = args
        .input
        .or_else(|| file.get("input").map(str::to_string))
        .unwrap_or_else(|| "random".to_string());
    let input = resolve_input(&input_str, dim, &mut warnings)?;

    let seed = match args.seed {
        Some(s) => s,
        None => file.parsed::<u64>("seed")?.unwrap_or(0),
    };
    let trials = match args.trials {
        Some(t) => t,
        None => file.parsed::<u64>("trials")?.unwrap_or(1000),
    };
    if trials < 1 {
        bail!("--trials must be at least 1");
    }
    let max_attempts = match args.max_attempts {
        Some(m) => m,
        None => file.parsed::<u64>("max_attempts")?.unwrap_or(32),
    };
    if max_attempts < 1 {
        bail!("--max-attempts must be at least 1");
    }

    let sweep_str = args.sweep.or_else(|| file.get("sweep").map(str::to_string));
    let sweep = match sweep_str {
        Some(raw) => Some(parse_sweep_grid(&raw, dim)?),
        None => None,
    };
    if mode == Mode::Sweep && sweep.as_ref().is_none_or(Vec::is_empty) {
        bail!("sweep mode needs a non-empty --sweep grid");
    }

    let timing =
        args.timing || matches!(file.get("timing"), Some("true") | Some("1") | Some("yes"));

    let output = args
        .output
        .or_else(|| file.get("output").map(PathBuf::from))
        .map(resolve_against_output_dir);
    let dump_transcripts = args
        .dump_transcripts
        .or_else(|| file.get("dump_transcripts").map(PathBuf::from))
        .map(resolve_against_output_dir);

    Ok(RunConfig {
        mode,
        dim,
        channel,
        input,
        seed,
        trials,
        max_attempts,
        sweep,
        output,
        format,
        timing,
        dump_transcripts,
        warnings,
    })
}

fn resolve_against_output_dir(path: PathBuf) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path
}

/// Resolves the --schmidt argument to a validated channel plus the
/// (possibly inferred) dimension.
fn resolve_channel(
    spec: &str,
    dim: Option<usize>,
    warnings: &mut Vec<String>,
) -> Result<(ChannelSpec, usize)> {
    let spec = spec.trim();
    if spec == "maximal" {
        let dim = dim.ok_or_else(|| anyhow!("schmidt preset 'maximal' needs --dim"))?;
        return Ok((ChannelSpec::maximally_entangled(dim)?, dim));
    }
    if let Some(raw) = spec.strip_prefix("b0sq=") {
        let dim = dim.ok_or_else(|| anyhow!("schmidt preset 'b0sq=' needs --dim"))?;
        let value: f64 = raw
            .parse()
            .map_err(|e| anyhow!("b0sq preset value '{raw}': {e}"))?;
        return Ok((ChannelSpec::from_b0_squared(dim, value)?, dim));
    }

    let mut coefficients = parse_real_list(spec).context("--schmidt")?;
    if let Some(d) = dim {
        if coefficients.len() != d {
            bail!(
                "--schmidt lists {} coefficients but --dim is {d}",
                coefficients.len()
            );
        }
    }
    let dim = coefficients.len();
    if dim < 2 {
        bail!("--schmidt needs at least 2 coefficients");
    }
    for (index, &value) in coefficients.iter().enumerate() {
        if value < 0.0 {
            bail!("--schmidt entry {} is negative ({value})", index + 1);
        }
        if !value.is_finite() {
            bail!("--schmidt entry {} is not finite", index + 1);
        }
    }
    let sorted = coefficients.windows(2).all(|w| w[0] <= w[1]);
    if !sorted {
        coefficients.sort_by(|a, b| a.partial_cmp(b).unwrap());
        warnings.push("schmidt coefficients were sorted ascending".to_string());
    }
    let sum_sqr: f64 = coefficients.iter().map(|b| b * b).sum();
    if sum_sqr <= 0.0 {
        bail!("--schmidt coefficients are all zero");
    }
    if (sum_sqr - 1.0).abs() > 1e-12 {
        let scale = sum_sqr.sqrt();
        for c in &mut coefficients {
            *c /= scale;
        }
        warnings.push(format!(
            "schmidt coefficients were normalized (squared sum was {sum_sqr})"
        ));
    }
    Ok((ChannelSpec::new(coefficients)?, dim))
}

fn resolve_input(spec: &str, dim: usize, warnings: &mut Vec<String>) -> Result<InputSpec> {
    let spec = spec.trim();
    if spec == "random" {
        return Ok(InputSpec::Random);
    }
    let mut amplitudes = parse_complex_list(spec).context("--input")?;
    if amplitudes.len() != dim {
        bail!(
            "--input lists {} amplitudes but the dimension is {dim}",
            amplitudes.len()
        );
    }
    let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if norm_sqr <= 0.0 {
        bail!("--input amplitudes are all zero");
    }
    if (norm_sqr - 1.0).abs() > 1e-12 {
        let scale = norm_sqr.sqrt();
        for a in &mut amplitudes {
            *a /= scale;
        }
        warnings.push(format!(
            "input amplitudes were normalized (squared norm was {norm_sqr})"
        ));
    }
    InputState::new(amplitudes.clone())?;
    Ok(InputSpec::Amplitudes(amplitudes))
}

/// "b0sq=START:STEP:END" (inclusive) or "b0sq=v1,v2,...".
fn parse_sweep_grid(raw: &str, dim: usize) -> Result<Vec<f64>> {
    let body = raw
        .trim()
        .strip_prefix("b0sq=")
        .ok_or_else(|| anyhow!("sweep grid must start with 'b0sq=', got '{raw}'"))?;
    let values: Vec<f64> = if body.contains(':') {
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            bail!("range grid must be start:step:end, got '{body}'");
        }
        let parse = |label: &str, text: &str| -> Result<f64> {
            text.parse()
                .map_err(|e| anyhow!("sweep {label} '{text}': {e}"))
        };
        let start = parse("start", parts[0])?;
        let step = parse("step", parts[1])?;
        let end = parse("end", parts[2])?;
        if step <= 0.0 {
            bail!("sweep step must be positive");
        }
        let mut values = Vec::new();
        let mut index = 0u32;
        loop {
            let value = start + step * index as f64;
            if value > end + step * 1e-9 {
                break;
            }
            values.push(value.min(end));
            index += 1;
        }
        values
    } else {
        parse_real_list(body).context("--sweep")?
    };
    if values.is_empty() {
        bail!("sweep grid is empty");
    }
    let cap = 1.0 / dim as f64;
    for (position, &value) in values.iter().enumerate() {
        if !(0.0..=cap + 1e-12).contains(&value) {
            bail!(
                "sweep value {} (position {}) outside [0, 1/{dim}]",
                value,
                position + 1
            );
        }
    }
    Ok(values)
}

fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .enumerate()
        .map(|(position, token)| {
            token
                .trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("entry {} ('{}'): {e}", position + 1, token.trim()))
        })
        .collect()
}

fn parse_complex_list(text: &str) -> Result<Vec<Complex64>> {
    text.split(',')
        .enumerate()
        .map(|(position, token)| {
            parse_complex(token)
                .map_err(|e| anyhow!("entry {} ('{}'): {e}", position + 1, token.trim()))
        })
        .collect()
}

/// Accepts "a", "bi", "a+bi", "a-bi", "i", "-i", with scientific notation
/// in either part.
fn parse_complex(token: &str) -> Result<Complex64, String> {
    let t = token.trim();
    if t.is_empty() {
        return Err("empty number".to_string());
    }
    let Some(body) = t.strip_suffix(['i', 'I']) else {
        return t
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|e| e.to_string());
    };
    let bytes = body.as_bytes();
    let mut split = None;
    for idx in (1..bytes.len()).rev() {
        let ch = bytes[idx];
        if (ch == b'+' || ch == b'-') && bytes[idx - 1] != b'e' && bytes[idx - 1] != b'E' {
            split = Some(idx);
            break;
        }
    }
    let (re_text, im_text) = match split {
        Some(idx) => (&body[..idx], &body[idx..]),
        None => ("", body),
    };
    let re = if re_text.is_empty() {
        0.0
    } else {
        re_text.parse::<f64>().map_err(|e| e.to_string())?
    };
    let im = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|e| e.to_string())?,
    };
    Ok(Complex64::new(re, im))
}
