use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wlia::cli::{self, RunConfig, Threshold, DEFAULT_SIGMAS};
use wlia::Error;

#[derive(Parser)]
#[command(name = "wlia", version, about = "Transport-based orientation analysis of grayscale images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Patch side length in pixels (two-color commands default to 3).
    #[arg(long, global = true)]
    patch: Option<usize>,
    /// Tiling stride (defaults to the patch side; 2 for two-color commands).
    #[arg(long, global = true)]
    stride: Option<usize>,
    /// Number of orientation bins over [0, pi).
    #[arg(long, global = true, default_value_t = 9)]
    bins: usize,
    /// Comma-separated ascending noise levels.
    #[arg(long, global = true, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Patches sampled per region of interest (entropy).
    #[arg(long, global = true)]
    count: Option<usize>,
    /// Noise trials per sigma (bench-noise).
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
    /// Edge threshold: a number, `otsu`, or `none`.
    #[arg(long, global = true, default_value = "otsu", value_parser = parse_threshold)]
    threshold: Threshold,
    /// Keep loaded benchmark images at their stored sample values.
    #[arg(long, global = true)]
    no_rescale: bool,
    /// Also write a grid of per-patch rose plots (whog, hog).
    #[arg(long, global = true)]
    per_patch: bool,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Transport-based orientation histograms.
    Whog { input: PathBuf },
    /// Gradient-based orientation histograms.
    Hog { input: PathBuf },
    /// Dominant-bin stability of both methods under Gaussian noise.
    BenchNoise { input: Option<PathBuf> },
    /// Two-color smoothing.
    Smooth { input: PathBuf },
    /// Two-color contrast edge map.
    Edges { input: PathBuf },
    /// Directionality entropy per sample and optional log-rank test.
    Entropy {
        /// CSV with columns sample_id,image,mask.
        manifest: PathBuf,
        /// CSV with columns sample_id,time,event.
        #[arg(long)]
        survival: Option<PathBuf>,
    },
}

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    match s.to_ascii_lowercase().as_str() {
        "otsu" => Ok(Threshold::Otsu),
        "none" => Ok(Threshold::Disabled),
        v => v
            .parse()
            .map(Threshold::Value)
            .map_err(|_| format!("expected a number, `otsu` or `none`, got {s:?}")),
    }
}

fn config(opts: &Opts, two_color: bool) -> RunConfig {
    let base = RunConfig::default();
    let patch_side = opts.patch.unwrap_or(base.patch_side);
    RunConfig {
        patch_side,
        stride: opts.stride.unwrap_or(patch_side),
        bins: opts.bins,
        sigmas: opts.sigmas.clone().unwrap_or_else(|| DEFAULT_SIGMAS.to_vec()),
        seed: opts.seed,
        count: opts.count,
        two_color_side: if two_color { opts.patch.unwrap_or(base.two_color_side) } else { base.two_color_side },
        two_color_stride: if two_color { opts.stride.unwrap_or(base.two_color_stride) } else { base.two_color_stride },
        trials: opts.trials,
        threshold: opts.threshold,
        rescale: !opts.no_rescale,
        per_patch_plots: opts.per_patch,
    }
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let out = &args.opts.out;
    let result = match &args.command {
        Command::Whog { input } => cli::cmd_whog(&config(&args.opts, false), input, out),
        Command::Hog { input } => cli::cmd_hog(&config(&args.opts, false), input, out),
        Command::BenchNoise { input } => cli::cmd_bench_noise(&config(&args.opts, false), input.as_deref(), out),
        Command::Smooth { input } => cli::cmd_smooth(&config(&args.opts, true), input, out),
        Command::Edges { input } => cli::cmd_edges(&config(&args.opts, true), input, out),
        Command::Entropy { manifest, survival } => {
            cli::cmd_entropy(&config(&args.opts, false), manifest, survival.as_deref(), out)
        }
    };
    match result {
        Ok(output) => {
            for f in &output.files {
                println!("{}", f.display());
            }
            if output.is_partial() {
                for e in &output.row_errors {
                    eprintln!("wlia: row {} ({}): {}", e.row, e.sample_id, e.message);
                }
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("wlia: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
