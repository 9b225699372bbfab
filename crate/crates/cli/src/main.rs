//! Command-line interface for piecewise-Lipschitz TV denoising experiments.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tvpwl::{
    discrepancy, estimate_gamma_stages, mse, psnr, solve_constrained, solve_rof,
    solve_tvpwl_penalized, ssim, GammaMap, GammaPipelineConfig, PdhgConfig, RegularizerSpec,
    ScalarGrid, SsimParams,
};
use tvpwl_cli::experiment::{run_experiment, RunConfig};
use tvpwl_cli::io::{self, PgmImage};
use tvpwl_cli::noise::add_gaussian_noise;
use tvpwl_cli::synth;

#[derive(Parser)]
#[command(
    name = "tvpwl",
    about = "Denoising with a piecewise-Lipschitz total variation regularizer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ground-truth signal or image.
    Synth(SynthArgs),
    /// Add seeded Gaussian noise to a signal or image.
    AddNoise(AddNoiseArgs),
    /// Estimate the local gradient bound gamma from noisy data.
    EstimateGamma(EstimateGammaArgs),
    /// Denoise with TV, TV_pwL, or TGV2.
    Denoise(DenoiseArgs),
    /// Compare two signals/images (SSIM, PSNR, MSE, discrepancy).
    Compare(CompareArgs),
    /// Run a full experiment from a JSON run configuration.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Signal,
    Image,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "signal")]
    kind: SynthKind,
    /// Number of samples (per side for images).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the exact derivative (signals only).
    #[arg(long)]
    deriv_out: Option<PathBuf>,
}

#[derive(Args)]
struct AddNoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateGammaArgs {
    #[arg(long)]
    input: PathBuf,
    /// Over-regularization weight (defaults: 0.5 in 1D, 500 in 2D).
    #[arg(long)]
    alpha_over: Option<f64>,
    /// Robust smoothing window (1D).
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    robust_passes: Option<usize>,
    /// Gaussian filter sigma (2D).
    #[arg(long)]
    gauss_sigma: Option<f64>,
    /// Central-difference stride (defaults: 20 in 1D, 3 in 2D).
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Directory for gamma and the intermediate pipeline artifacts.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegArg {
    Tv,
    Tvpwl,
    Tgv,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    reg: RegArg,
    /// Gamma map file (.csv with sidecar, or .pgm with preview scale).
    #[arg(long, conflicts_with = "gamma_const")]
    gamma: Option<PathBuf>,
    /// Constant gamma.
    #[arg(long)]
    gamma_const: Option<f64>,
    /// Residual-ball radius for the constrained solve.
    #[arg(long, conflicts_with = "sigma")]
    eps: Option<f64>,
    /// Noise standard deviation; implies eps = sigma * sqrt(N).
    #[arg(long)]
    sigma: Option<f64>,
    /// Penalized mode: solve min 0.5||u-f||^2 + alpha * J(u) instead.
    #[arg(long)]
    alpha: Option<f64>,
    /// Second-order weight ratio for TGV2.
    #[arg(long, default_value_t = 1.25)]
    beta: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// SSIM/PSNR dynamic range; default 255 for images, value range for
    /// signals.
    #[arg(long)]
    range: Option<f64>,
    /// Write the metrics JSON here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::AddNoise(args) => cmd_add_noise(args),
        Command::EstimateGamma(args) => cmd_estimate_gamma(args),
        Command::Denoise(args) => cmd_denoise(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Run(args) => cmd_run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// Write a grid to `path`: PGM when the extension is `.pgm` (values rounded,
/// must lie in [0, 255]), CSV with a geometry sidecar otherwise.
fn write_output_grid(path: &Path, grid: &ScalarGrid) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("pgm") {
        let image = PgmImage::from_grid(grid, path)?;
        io::write_pgm(path, &image, true)?;
    } else {
        io::write_grid_csv(path, grid)?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    match args.kind {
        SynthKind::Signal => {
            let n = args.n.unwrap_or(1000);
            let (u, du) = synth::synth_signal(n, &synth::default_segments())?;
            write_output_grid(&args.out, &u)?;
            if let Some(deriv_path) = &args.deriv_out {
                write_output_grid(deriv_path, &du)?;
            }
        }
        SynthKind::Image => {
            let n = args.n.unwrap_or(128);
            if args.deriv_out.is_some() {
                bail!("--deriv-out applies to signals only");
            }
            let img = synth::synth_image(n)?;
            write_output_grid(&args.out, &img)?;
        }
    }
    Ok(())
}

fn cmd_add_noise(args: AddNoiseArgs) -> Result<()> {
    let input = io::read_input_grid(&args.input)?;
    let noisy = add_gaussian_noise(&input, args.std, args.seed)?;
    if args
        .out
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
    {
        // Quantized output: clamp into the image range.
        let clamped: Vec<f64> = noisy.values().iter().map(|v| v.clamp(0.0, 255.0)).collect();
        let grid = ScalarGrid::from_values(noisy.geometry().clone(), clamped)?;
        write_output_grid(&args.out, &grid)?;
    } else {
        write_output_grid(&args.out, &noisy)?;
    }
    Ok(())
}

fn cmd_estimate_gamma(args: EstimateGammaArgs) -> Result<()> {
    let input = io::read_input_grid(&args.input)?;
    let mut cfg = if input.geometry().ndim() == 2 {
        GammaPipelineConfig::default_2d()
    } else {
        GammaPipelineConfig::default_1d()
    };
    if let Some(v) = args.alpha_over {
        cfg.alpha_over = v;
    }
    if let Some(v) = args.window {
        cfg.smooth_1d.window = v;
    }
    if let Some(v) = args.robust_passes {
        cfg.smooth_1d.robust_passes = v;
    }
    if let Some(v) = args.gauss_sigma {
        cfg.smooth_2d.gauss_sigma = v;
    }
    if let Some(v) = args.stride {
        cfg.diff_stride = v;
    }
    let mut solver_cfg = PdhgConfig::default();
    if let Some(v) = args.max_iters {
        solver_cfg.max_iters = v;
    }

    let stages = estimate_gamma_stages(&input, &cfg, &solver_cfg)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    io::write_grid_csv(&args.out_dir.join("u_overreg.csv"), &stages.u_overreg)?;
    io::write_grid_csv(&args.out_dir.join("residual.csv"), &stages.residual)?;
    io::write_grid_csv(&args.out_dir.join("smoothed_residual.csv"), &stages.smoothed)?;
    let gamma_grid = stages.gamma.as_grid().expect("pipeline gamma is a grid");
    io::write_gamma_map(&args.out_dir.join("gamma.csv"), gamma_grid)?;
    println!("{}", args.out_dir.join("gamma.csv").display());
    Ok(())
}

fn cmd_denoise(args: DenoiseArgs) -> Result<()> {
    let noisy = io::read_input_grid(&args.input)?;
    let mut cfg = PdhgConfig::default();
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }

    let gamma = match (&args.gamma, args.gamma_const) {
        (Some(path), None) => Some(io::read_gamma_map(path)?),
        (None, Some(c)) => Some(GammaMap::constant(c)?),
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };

    let (u, report) = if let Some(alpha) = args.alpha {
        // Penalized mode.
        match args.reg {
            RegArg::Tv => solve_rof(&noisy, alpha, &cfg)?,
            RegArg::Tvpwl => {
                let gamma = gamma.context("tvpwl needs --gamma or --gamma-const")?;
                solve_tvpwl_penalized(&noisy, alpha, &gamma, &cfg)?
            }
            RegArg::Tgv => bail!("penalized TGV2 is not supported; use --eps or --sigma"),
        }
    } else {
        let eps = match (args.eps, args.sigma) {
            (Some(e), None) => e,
            (None, Some(s)) => s * (noisy.geometry().num_nodes() as f64).sqrt(),
            (None, None) => bail!("constrained mode needs --eps or --sigma (or pass --alpha)"),
            (Some(_), Some(_)) => unreachable!("clap conflict"),
        };
        let spec = match args.reg {
            RegArg::Tv => RegularizerSpec::Tv,
            RegArg::Tvpwl => RegularizerSpec::TvPwl {
                gamma: gamma.context("tvpwl needs --gamma or --gamma-const")?,
            },
            RegArg::Tgv => RegularizerSpec::Tgv2 { beta: args.beta },
        };
        solve_constrained(&noisy, &spec, eps, &cfg)?
    };

    if args
        .out
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
    {
        let clamped: Vec<f64> = u.values().iter().map(|v| v.clamp(0.0, 255.0)).collect();
        let grid = ScalarGrid::from_values(u.geometry().clone(), clamped)?;
        write_output_grid(&args.out, &grid)?;
    } else {
        write_output_grid(&args.out, &u)?;
    }

    let summary = json!({
        "iterations": report.iterations,
        "converged": report.converged,
        "final_rel_change": report.final_rel_change,
        "discrepancy": report.discrepancy,
        "final_objective": report.objective_trace.last(),
    });
    println!("{summary}");
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let a = io::read_input_grid(&args.a)?;
    let b = io::read_input_grid(&args.b)?;
    let range = args.range.unwrap_or_else(|| {
        if a.geometry().ndim() == 2 {
            255.0
        } else {
            let min = a.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let max = a.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (max - min).max(1e-9)
        }
    });
    let params = SsimParams::new(range);
    let p = psnr(&a, &b, range)?;
    let metrics = json!({
        "ssim": ssim(&a, &b, &params)?,
        "psnr": if p.is_finite() { json!(p) } else { json!("inf") },
        "mse": mse(&a, &b)?,
        "discrepancy": discrepancy(&a, &b)?,
        "dynamic_range": range,
    });
    let text = serde_json::to_string_pretty(&metrics)?;
    if let Some(out) = &args.out {
        std::fs::write(out, format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = RunConfig::from_json_file(&args.config)?;
    if let Some(dir) = args.out_dir {
        config.output_dir = dir;
    }
    let manifest = run_experiment(&config)?;
    println!(
        "{}",
        config.output_dir.join("manifest.json").display()
    );
    for m in &manifest.metrics.reconstructions {
        let ssim_txt = m
            .vs_truth
            .as_ref()
            .map(|q| format!("{:.4}", q.ssim))
            .unwrap_or_else(|| "-".into());
        eprintln!(
            "{}: ssim={} discrepancy={:.4} iters={}",
            m.reg, ssim_txt, m.discrepancy, m.solver.iterations
        );
    }
    Ok(())
}
