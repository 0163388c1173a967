use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use beatpf::evaluation::{
    discover_dataset, evaluate_dataset, load_dataset, particle_sweep, write_sweep_csv,
    DatasetEntry, EvalItem, EvalSettings, DEFAULT_SKIP_S, DEFAULT_TOLERANCE_S,
};
use beatpf::frontend::ActivationFormat;
use beatpf::synth::{benchmark_suite, generate, write_track, TempoScript};
use beatpf::track::{track_activations, track_wav, TrackOptions};
use beatpf::{Discriminator, ResamplePolicy, StateSpaceConfig, TrackerConfig};

/// Online beat tracking with a particle filter.
#[derive(Parser)]
#[command(name = "beatpf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track beats in an activation stream (or a WAV file with --flux).
    Track(TrackArgs),
    /// Score a directory of `<stem>.{bact|txt}` / `<stem>.beats` pairs.
    Eval(EvalArgs),
    /// Mean F-measure over a dataset for several particle counts, as CSV.
    Sweep(SweepArgs),
    /// Write a synthetic activation stream and its reference beats.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DiscriminatorKind {
    Fractional,
    Constant,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResampleKind {
    Every,
    Ess,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatKind {
    Bact,
    Txt,
}

/// Model flags shared by every tracking subcommand.
#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 30.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.03)]
    gamma: f64,
    #[arg(long, default_value_t = 55.0)]
    tempo_min: f64,
    #[arg(long, default_value_t = 215.0)]
    tempo_max: f64,
    #[arg(long, value_enum, default_value_t = DiscriminatorKind::Fractional)]
    discriminator: DiscriminatorKind,
    #[arg(long, default_value_t = 1.0 / 60.0)]
    alpha: f64,
    #[arg(long, default_value_t = Discriminator::DEFAULT_COUNT)]
    count: usize,
    #[arg(long, default_value_t = Discriminator::DEFAULT_SIGMA_FRAC)]
    sigma_frac: f64,
    /// Fraction of particles moved to double/half tempo on each beat.
    #[arg(long, default_value_t = 0.02)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Activation frames per second. A binary stream header overrides it.
    #[arg(long, default_value_t = 100.0)]
    fps: f64,
    #[arg(long, value_enum, default_value_t = ResampleKind::Every)]
    resample: ResampleKind,
}

impl ModelArgs {
    fn config(&self, n_particles: usize) -> TrackerConfig {
        let discriminator = match self.discriminator {
            DiscriminatorKind::Fractional => Discriminator::Fractional(self.alpha),
            DiscriminatorKind::Constant => Discriminator::ConstantCount(self.count),
            DiscriminatorKind::Gaussian => Discriminator::GaussianSoft(self.sigma_frac),
        };
        TrackerConfig {
            n_particles,
            lambda: self.lambda,
            gamma: self.gamma,
            state_space: StateSpaceConfig {
                frame_period_s: 1.0 / self.fps,
                tempo_min_bpm: self.tempo_min,
                tempo_max_bpm: self.tempo_max,
                discriminator,
            },
            tempo_injection_fraction: self.rho,
            seed: self.seed,
            resample_policy: match self.resample {
                ResampleKind::Every => ResamplePolicy::EveryFrame,
                ResampleKind::Ess => ResamplePolicy::EssHalf,
            },
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Seconds at the start of each item excluded from the second score.
    #[arg(long, default_value_t = DEFAULT_SKIP_S)]
    skip: f64,
    /// Match window in seconds on either side of a reference beat.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_S)]
    tolerance: f64,
}

impl ScoreArgs {
    fn settings(&self) -> EvalSettings {
        EvalSettings { tolerance_s: self.tolerance, skip_s: self.skip }
    }
}

#[derive(Args)]
struct TrackArgs {
    /// Activation file, or `-` for standard input.
    input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    particles: usize,
    /// Treat the input as a WAV file and use the spectral-flux front-end.
    #[arg(long)]
    flux: bool,
    /// Append the tempo estimate (BPM) to every beat line.
    #[arg(long)]
    tempo: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EvalArgs {
    dataset: PathBuf,
    #[arg(long, default_value_t = 1000)]
    particles: usize,
    /// Print CSV instead of a table.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    score: ScoreArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Dataset directory. Omit with --suite.
    #[arg(required_unless_present = "suite")]
    dataset: Option<PathBuf>,
    /// Use the built-in ten-item synthetic suite instead of a directory.
    #[arg(long, conflicts_with = "dataset")]
    suite: bool,
    #[arg(long, value_delimiter = ',', default_value = "100,300,1000")]
    particles: Vec<usize>,
    #[command(flatten)]
    score: ScoreArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Output path stem; `.bact`/`.txt` and `.beats` are appended.
    output: PathBuf,
    /// Tempo breakpoints as `start_s:bpm` pairs, e.g. `0:120,15:144`.
    #[arg(long, value_delimiter = ',', default_value = "0:120", value_parser = parse_segment)]
    segments: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    /// Standard deviation of each activation bump, in frames.
    #[arg(long, default_value_t = 1.5)]
    pulse_width: f64,
    #[arg(long, default_value_t = 0.9)]
    peak: f64,
    #[arg(long, default_value_t = 0.02)]
    noise_floor: f64,
    /// Standard deviation of per-beat timing jitter, in seconds.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Probability that a beat's bump is left out.
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    fps: u32,
    #[arg(long, value_enum, default_value_t = FormatKind::Bact)]
    format: FormatKind,
}

fn parse_segment(s: &str) -> Result<(f64, f64), String> {
    let (start, bpm) = s.split_once(':').ok_or_else(|| format!("expected start_s:bpm, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(start)?, parse(bpm)?))
}

fn open_input(path: &Path) -> io::Result<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin().lock()))
    } else {
        Ok(Box::new(BufReader::new(File::open(path)?)))
    }
}

fn run_track(args: &TrackArgs) -> beatpf::Result<()> {
    let cfg = args.model.config(args.particles);
    let opts = TrackOptions { with_tempo: args.tempo };
    let mut out = io::stdout().lock();
    let input = open_input(&args.input)?;
    let summary = if args.flux {
        track_wav(input, &cfg, &mut out, opts)?
    } else {
        track_activations(input, &cfg, &mut out, opts)?
    };
    if summary.clamped > 0 {
        eprintln!(
            "warning: {} of {} activation values were outside [0, 1] and were clamped",
            summary.clamped, summary.frames
        );
    }
    Ok(())
}

fn require_pairs(dir: &Path) -> beatpf::Result<Vec<DatasetEntry>> {
    let entries = discover_dataset(dir)?;
    if entries.is_empty() {
        return Err(beatpf::Error::InvalidArgument(format!(
            "no activation/annotation pairs found in {}",
            dir.display()
        )));
    }
    Ok(entries)
}

fn run_eval(args: &EvalArgs) -> beatpf::Result<()> {
    let entries = require_pairs(&args.dataset)?;
    let report = evaluate_dataset(&entries, &args.model.config(args.particles), args.score.settings())?;
    for (name, reason) in &report.skipped {
        eprintln!("warning: skipped {name}: {reason}");
    }
    let text = if args.csv { report.to_csv() } else { report.to_table() };
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn suite_items(fps: f64) -> beatpf::Result<Vec<EvalItem>> {
    benchmark_suite(0)
        .into_iter()
        .map(|(name, script)| {
            let track = generate(&script, fps)?;
            Ok(EvalItem {
                name,
                activations: track.activations,
                reference: track.reference,
                frame_rate: Some(track.frame_rate),
            })
        })
        .collect()
}

fn run_sweep(args: &SweepArgs) -> beatpf::Result<()> {
    let items = match &args.dataset {
        Some(dir) => {
            let (items, skipped) = load_dataset(&require_pairs(dir)?);
            for (name, reason) in &skipped {
                eprintln!("warning: skipped {name}: {reason}");
            }
            items
        }
        None => suite_items(args.model.fps)?,
    };
    let cfg = args.model.config(1000);
    let rows = particle_sweep(&items, &args.particles, &cfg, args.score.settings())?;
    write_sweep_csv(io::stdout().lock(), &rows)?;
    Ok(())
}

fn run_synth(args: &SynthArgs) -> beatpf::Result<()> {
    let script = TempoScript {
        segments: args.segments.clone(),
        duration_s: args.duration,
        pulse_width_frames: args.pulse_width,
        peak: args.peak,
        noise_floor: args.noise_floor,
        jitter_s: args.jitter,
        dropout_prob: args.dropout,
        seed: args.seed,
    };
    let track = generate(&script, f64::from(args.fps))?;
    let format = match args.format {
        FormatKind::Bact => ActivationFormat::Binary,
        FormatKind::Txt => ActivationFormat::Text,
    };
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let (act, beats) = write_track(&track, &args.output, format)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "{}", act.display())?;
    writeln!(out, "{}", beats.display())?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Track(a) => run_track(a),
        Command::Eval(a) => run_eval(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(beatpf::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
