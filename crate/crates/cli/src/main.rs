use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kws_core::arch::{footprint, receptive_field, resolve_config};
use kws_core::detect::DetectorConfig;
use kws_core::eval::{evaluate, utterance_posteriors, EvalConfig, Manifest};
use kws_core::frontend::{compute_lfbe, delta_lfbe, AudioBuffer};
use kws_core::io::{load_model, save_weights, write_binary_trace, EventRecord, TraceRecord};
use kws_core::model::WeightSet;
use kws_core::streaming::{run_stream, Strategy, StreamPosterior, StreamSettings, WallClock};

#[derive(Parser)]
#[command(name = "kws", version, about = "Streaming keyword spotting toolkit")]
struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump log-mel features of a WAV file, one frame per line.
    Featurize {
        wav: PathBuf,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        /// Emit frame differences instead of raw energies.
        #[arg(long)]
        delta: bool,
    },
    /// Parameter and multiply counts of a reference model or config file.
    Count {
        config: String,
        #[arg(long)]
        json: bool,
    },
    /// Receptive field, stride and timestep count of the conv front end.
    Rf { config: String },
    /// Offline sliding-window posteriors for a WAV file.
    Infer { weights: PathBuf, wav: PathBuf },
    /// Stream raw 16 kHz s16le mono PCM from stdin and print detections.
    Stream {
        weights: PathBuf,
        #[arg(long, default_value = "bank")]
        strategy: Strategy,
        #[arg(long, default_value_t = 0.5)]
        threshold: f32,
        /// Sub-release steps that close an event.
        #[arg(long, default_value_t = 3)]
        hangover: usize,
        /// Level an open event must stay above; defaults to the threshold.
        #[arg(long)]
        release: Option<f32>,
        /// Added to every reported latency.
        #[arg(long, default_value_t = 0.0)]
        baseline_ms: f64,
        /// Write the posterior trace as text.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the posterior trace as raw f32 LE.
        #[arg(long)]
        binary_trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1600)]
        chunk: usize,
    },
    /// False accepts at a fixed miss rate over a JSON-lines manifest.
    Eval {
        weights: PathBuf,
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.15)]
        mr: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0.5)]
        threshold: f32,
        #[arg(long, default_value_t = 3)]
        hangover: usize,
        #[arg(long)]
        json: bool,
    },
    /// Write a weight file with uniform(-scale, scale) weights.
    InitRandom {
        config: String,
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        scale: f32,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new)
}

fn featurize(wav: &Path, bins: usize, delta: bool) -> CliResult {
    let feats = compute_lfbe(&AudioBuffer::read_wav(wav)?, bins)?;
    let feats = if delta { delta_lfbe(&feats)? } else { feats };
    let mut out = BufWriter::new(io::stdout().lock());
    for row in feats.rows() {
        let line: Vec<String> = row.iter().map(f32::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn count(config: &str, json: bool) -> CliResult {
    let cfg = resolve_config(config)?;
    let report = footprint(&cfg)?;
    if json {
        let layers: Vec<_> = report
            .layers
            .iter()
            .map(|l| serde_json::json!({"index": l.index, "kind": l.kind, "parameters": l.parameters, "multiplies": l.multiplies}))
            .collect();
        let doc = serde_json::json!({
            "name": cfg.name,
            "parameters": report.parameters,
            "multiplies": report.multiplies,
            "biases": report.biases,
            "layers": layers,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    println!("{:>3}  {:<14} {:>12} {:>14}", "#", "layer", "parameters", "multiplies");
    for l in &report.layers {
        println!("{:>3}  {:<14} {:>12} {:>14}", l.index, l.kind, l.parameters, l.multiplies);
    }
    println!("{}: parameters={} multiplies={}", cfg.name, report.parameters, report.multiplies);
    Ok(())
}

fn infer(weights: &Path, wav: &Path) -> CliResult {
    let model = load_model(weights)?;
    let timing = model.timing();
    let posteriors = utterance_posteriors(&model, &AudioBuffer::read_wav(wav)?)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for p in &posteriors {
        let p = StreamPosterior::from_offline(p, timing.stride, timing.steps);
        writeln!(out, "{}", TraceRecord::from(&p))?;
    }
    out.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn stream(
    weights: &Path,
    strategy: Strategy,
    detector: DetectorConfig,
    baseline_ms: f64,
    trace: Option<&Path>,
    binary_trace: Option<&Path>,
    chunk: usize,
) -> CliResult {
    let model = load_model(weights)?.into_shared();
    let mut trace_out = trace.map(create).transpose()?;
    let mut binary_out = binary_trace.map(create).transpose()?;
    let stdout = io::stdout();
    let settings = StreamSettings { strategy, detector, chunk_samples: chunk };
    run_stream(
        io::stdin().lock(),
        model,
        settings,
        WallClock::new(),
        |p| {
            if let Some(w) = trace_out.as_mut() {
                writeln!(w, "{}", TraceRecord::from(p))?;
            }
            if let Some(w) = binary_out.as_mut() {
                write_binary_trace(w, std::slice::from_ref(p))?;
            }
            Ok(())
        },
        |e| {
            let mut out = stdout.lock();
            writeln!(out, "{}", EventRecord::new(e, baseline_ms)?.to_json())?;
            out.flush()?;
            Ok(())
        },
    )?;
    for w in [trace_out.as_mut(), binary_out.as_mut()].into_iter().flatten() {
        w.flush()?;
    }
    Ok(())
}

fn eval(weights: &Path, manifest: &Path, config: EvalConfig, json: bool) -> CliResult {
    let model = load_model(weights)?;
    let manifest = Manifest::load(manifest)?;
    let report = evaluate(&model, &manifest, config)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("utterances: {} ({} failed)", report.utterances, report.failures);
    match &report.operating_point {
        Some(op) => println!(
            "FAs at {:.1}% MR: {} (threshold {}, achieved MR {:.4})",
            100.0 * config.miss_rate,
            op.fa_count,
            op.threshold,
            op.mr
        ),
        None => println!("FAs at {:.1}% MR: undefined (no positives)", 100.0 * config.miss_rate),
    }
    if !report.sweep.is_empty() {
        println!("{:>8} {:>8} {:>10} {:>6}", "target", "mr", "threshold", "fa");
        for p in &report.sweep {
            println!("{:>8.3} {:>8.4} {:>10.6} {:>6}", p.target_mr, p.mr, p.threshold, p.fa_count);
        }
    }
    if let Some(s) = &report.endpoints {
        println!(
            "endpoints: {} matched, {} missed, mean |dstart| {:.1} ms, mean |dend| {:.1} ms",
            s.matched, s.missed, s.mean_start_ms, s.mean_end_ms
        );
    }
    Ok(())
}

fn init_random(config: &str, out: &Path, seed: u64, scale: f32) -> CliResult {
    let cfg = resolve_config(config)?;
    let weights = WeightSet::random_scaled(&cfg, seed, scale)?;
    save_weights(&cfg, &weights, out)?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Featurize { wav, bins, delta } => featurize(&wav, bins, delta),
        Command::Count { config, json } => count(&config, json),
        Command::Rf { config } => {
            println!("{}", receptive_field(&resolve_config(&config)?)?);
            Ok(())
        }
        Command::Infer { weights, wav } => infer(&weights, &wav),
        Command::Stream { weights, strategy, threshold, hangover, release, baseline_ms, trace, binary_trace, chunk } => {
            let detector = DetectorConfig::with_release(threshold, hangover, release.unwrap_or(threshold))?;
            stream(&weights, strategy, detector, baseline_ms, trace.as_deref(), binary_trace.as_deref(), chunk)
        }
        Command::Eval { weights, manifest, mr, points, threshold, hangover, json } => {
            let config = EvalConfig {
                miss_rate: mr,
                sweep_points: points,
                detector: DetectorConfig::new(threshold, hangover)?,
            };
            eval(&weights, &manifest, config, json)
        }
        Command::InitRandom { config, out, scale } => init_random(&config, &out, cli.seed, scale),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
