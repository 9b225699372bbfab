//! End-to-end experiment orchestration: load or synthesize a ground truth,
//! inject noise, estimate γ, run the requested constrained solves, score
//! them, and persist every stage artifact plus a JSON manifest.
//!
//! A run is fully described by a [`RunConfig`]; with a fixed seed the whole
//! output directory, including the manifest bytes, is reproducible.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tvpwl::{
    discrepancy, estimate_gamma_stages, grad, mse, psnr, solve_constrained, ssim, GammaMap,
    GammaPipelineConfig, PdhgConfig, RegularizerSpec, ScalarGrid, SolveReport, SsimParams,
};

use crate::io::{self, PgmImage};
use crate::noise::add_gaussian_noise;
use crate::synth;

#[derive(Debug, Error)]
#[error("[{stage}] {message}")]
pub struct ExperimentError {
    pub stage: &'static str,
    pub message: String,
}

fn stage_err(stage: &'static str, err: impl std::fmt::Display) -> ExperimentError {
    ExperimentError {
        stage,
        message: err.to_string(),
    }
}

// ------------------------------------------------------------- config -----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSpec {
    /// Segment-based 1D ground truth with an exact derivative.
    SynthSignal { n: usize },
    /// Piecewise-smooth 2D test image, values in [0, 255].
    SynthImage { n: usize },
    /// CSV signal or PGM image treated as the (clean) ground truth.
    Path { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub std: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOverrides {
    pub alpha_over: Option<f64>,
    pub window: Option<usize>,
    pub robust_passes: Option<usize>,
    pub gauss_sigma: Option<f64>,
    pub kernel_radius: Option<usize>,
    pub diff_stride: Option<usize>,
}

impl PipelineOverrides {
    pub fn apply(&self, mut cfg: GammaPipelineConfig) -> GammaPipelineConfig {
        if let Some(v) = self.alpha_over {
            cfg.alpha_over = v;
        }
        if let Some(v) = self.window {
            cfg.smooth_1d.window = v;
        }
        if let Some(v) = self.robust_passes {
            cfg.smooth_1d.robust_passes = v;
        }
        if let Some(v) = self.gauss_sigma {
            cfg.smooth_2d.gauss_sigma = v;
        }
        if let Some(v) = self.kernel_radius {
            cfg.smooth_2d.kernel_radius = Some(v);
        }
        if let Some(v) = self.diff_stride {
            cfg.diff_stride = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOverrides {
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
    pub check_every: Option<usize>,
}

impl SolverOverrides {
    pub fn apply(&self, mut cfg: PdhgConfig) -> PdhgConfig {
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if self.tau.is_some() {
            cfg.tau = self.tau;
        }
        if self.sigma.is_some() {
            cfg.sigma = self.sigma;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.check_every {
            cfg.check_every = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegChoice {
    Tv,
    TvPwl,
    Tgv2,
}

impl RegChoice {
    pub fn name(self) -> &'static str {
        match self {
            RegChoice::Tv => "tv",
            RegChoice::TvPwl => "tv_pwl",
            RegChoice::Tgv2 => "tgv2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsMode {
    /// `sigma * sqrt(N)` from the configured noise level.
    #[default]
    Auto,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    /// The full estimation pipeline on the noisy data.
    #[default]
    Estimate,
    /// The exact gradient magnitude of the synthetic ground truth.
    Exact,
    Const(f64),
    File(PathBuf),
}

fn default_regularizers() -> Vec<RegChoice> {
    vec![RegChoice::TvPwl, RegChoice::Tgv2]
}

fn default_beta() -> f64 {
    1.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: InputSpec,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub pipeline: PipelineOverrides,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default = "default_regularizers")]
    pub regularizers: Vec<RegChoice>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub eps: EpsMode,
    #[serde(default)]
    pub gamma_source: GammaSource,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| stage_err("config", e))?;
        serde_json::from_str(&text).map_err(|e| stage_err("config", e))
    }
}

// ------------------------------------------------------------ manifest ----

/// A metric that may legitimately be infinite (PSNR of identical grids);
/// serialized as a number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue(pub f64);

impl Serialize for MetricValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(MetricValue(v)),
            Raw::Text(t) if t == "inf" => Ok(MetricValue(f64::INFINITY)),
            Raw::Text(t) if t == "-inf" => Ok(MetricValue(f64::NEG_INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityBlock {
    pub ssim: f64,
    pub psnr: MetricValue,
    pub mse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_rel_change: f64,
    pub final_objective: f64,
}

impl SolverSummary {
    fn from_report(r: &SolveReport) -> Self {
        Self {
            iterations: r.iterations,
            converged: r.converged,
            final_rel_change: r.final_rel_change,
            final_objective: *r.objective_trace.last().unwrap_or(&f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconArtifact {
    pub reg: String,
    pub csv: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preview: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifacts {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ground_truth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truth_derivative: Option<String>,
    pub noisy: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noisy_preview: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u_overreg: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub smoothed_residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma_preview: Option<String>,
    pub reconstructions: Vec<ReconArtifact>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegMetrics {
    pub reg: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vs_truth: Option<QualityBlock>,
    pub discrepancy: f64,
    pub solver: SolverSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossSsim {
    pub a: String,
    pub b: String,
    pub ssim: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noisy_vs_truth: Option<QualityBlock>,
    pub reconstructions: Vec<RegMetrics>,
    pub cross_ssim: Vec<CrossSsim>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub dims: Vec<usize>,
    pub sigma: f64,
    pub eps: f64,
    pub ssim_dynamic_range: f64,
    pub artifacts: Artifacts,
    pub metrics: Metrics,
}

// ------------------------------------------------------------- running ----

fn write_stage_grid(
    dir: &Path,
    name: &str,
    grid: &ScalarGrid,
    preview: Preview,
) -> Result<(String, Option<String>), ExperimentError> {
    let csv_name = format!("{name}.csv");
    let csv_path = dir.join(&csv_name);
    io::write_grid_csv(&csv_path, grid).map_err(|e| stage_err("write", e))?;
    if grid.geometry().ndim() != 2 || matches!(preview, Preview::None) {
        return Ok((csv_name, None));
    }
    let pgm_name = format!("{name}.pgm");
    let pgm_path = dir.join(&pgm_name);
    let preview_vals: Vec<f64> = match preview {
        Preview::Clamp => grid.values().iter().map(|v| v.clamp(0.0, 255.0)).collect(),
        Preview::Affine => {
            let min = grid.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let max = grid.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = (max - min).max(1e-300);
            grid.values()
                .iter()
                .map(|v| (v - min) / span * 255.0)
                .collect()
        }
        Preview::None => unreachable!(),
    };
    let preview_grid = ScalarGrid::from_values(grid.geometry().clone(), preview_vals)
        .map_err(|e| stage_err("write", e))?;
    let image = PgmImage::from_grid(&preview_grid, &pgm_path).map_err(|e| stage_err("write", e))?;
    io::write_pgm(&pgm_path, &image, true).map_err(|e| stage_err("write", e))?;
    Ok((csv_name, Some(pgm_name)))
}

#[derive(Clone, Copy)]
enum Preview {
    None,
    /// Round and clamp into [0, 255] (image-valued artifacts).
    Clamp,
    /// Map [min, max] affinely onto [0, 255] (sign-carrying artifacts).
    Affine,
}

fn quality(a: &ScalarGrid, b: &ScalarGrid, params: &SsimParams) -> Result<QualityBlock, tvpwl::Error> {
    Ok(QualityBlock {
        ssim: ssim(a, b, params)?,
        psnr: MetricValue(psnr(a, b, params.dynamic_range)?),
        mse: mse(a, b)?,
    })
}

/// Run one experiment end to end, writing all artifacts and the manifest
/// into `config.output_dir`. Any stage failure aborts with a stage-tagged
/// error.
pub fn run_experiment(config: &RunConfig) -> Result<Manifest, ExperimentError> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| stage_err("setup", e))?;

    // --- input ---
    let (truth, exact_derivative) = match &config.input {
        InputSpec::SynthSignal { n } => {
            let (u, du) = synth::synth_signal(*n, &synth::default_segments())
                .map_err(|e| stage_err("input", e))?;
            (u, Some(du))
        }
        InputSpec::SynthImage { n } => {
            let u = synth::synth_image(*n).map_err(|e| stage_err("input", e))?;
            (u, None)
        }
        InputSpec::Path { path } => {
            let u = io::read_input_grid(path).map_err(|e| stage_err("input", e))?;
            (u, None)
        }
    };
    let dims = truth.geometry().dims().to_vec();
    let is_2d = dims.len() == 2;

    // --- noise ---
    let sigma = config.noise.std;
    let noisy =
        add_gaussian_noise(&truth, sigma, config.noise.seed).map_err(|e| stage_err("noise", e))?;

    // --- artifacts: inputs ---
    let (truth_csv, _) =
        write_stage_grid(&dir, "ground_truth", &truth, Preview::Clamp.if_2d(is_2d))?;
    let truth_derivative_csv = match &exact_derivative {
        Some(du) => Some(write_stage_grid(&dir, "truth_derivative", du, Preview::None)?.0),
        None => None,
    };
    let (noisy_csv, noisy_preview) =
        write_stage_grid(&dir, "noisy", &noisy, Preview::Clamp.if_2d(is_2d))?;

    // --- gamma ---
    let needs_gamma = config.regularizers.contains(&RegChoice::TvPwl);
    let solver_cfg = config.solver.apply(PdhgConfig::default());
    let mut artifacts = Artifacts {
        ground_truth: Some(truth_csv),
        truth_derivative: truth_derivative_csv,
        noisy: noisy_csv,
        noisy_preview,
        u_overreg: None,
        residual: None,
        smoothed_residual: None,
        gamma: None,
        gamma_preview: None,
        reconstructions: Vec::new(),
    };

    let gamma = if needs_gamma {
        let map = match &config.gamma_source {
            GammaSource::Estimate => {
                let pipeline_cfg = config.pipeline.apply(if is_2d {
                    GammaPipelineConfig::default_2d()
                } else {
                    GammaPipelineConfig::default_1d()
                });
                let stages = estimate_gamma_stages(&noisy, &pipeline_cfg, &solver_cfg)
                    .map_err(|e| stage_err("gamma", e))?;
                let (p, _) = write_stage_grid(
                    &dir,
                    "u_overreg",
                    &stages.u_overreg,
                    Preview::Clamp.if_2d(is_2d),
                )?;
                artifacts.u_overreg = Some(p);
                let (p, _) =
                    write_stage_grid(&dir, "residual", &stages.residual, Preview::Affine)?;
                artifacts.residual = Some(p);
                let (p, _) = write_stage_grid(
                    &dir,
                    "smoothed_residual",
                    &stages.smoothed,
                    Preview::Affine,
                )?;
                artifacts.smoothed_residual = Some(p);
                stages.gamma
            }
            GammaSource::Exact => match &exact_derivative {
                Some(du) => {
                    let vals = du.values().iter().map(|v| v.abs()).collect();
                    let grid = ScalarGrid::from_values(du.geometry().clone(), vals)
                        .map_err(|e| stage_err("gamma", e))?;
                    GammaMap::from_grid(grid).map_err(|e| stage_err("gamma", e))?
                }
                None if is_2d => {
                    // No analytic derivative: use the gradient magnitude of
                    // the ground truth.
                    GammaMap::from_grid(grad(&truth).pointwise_norm())
                        .map_err(|e| stage_err("gamma", e))?
                }
                None => {
                    return Err(stage_err(
                        "gamma",
                        "exact gamma needs a synthetic input with a known derivative",
                    ))
                }
            },
            GammaSource::Const(c) => GammaMap::constant(*c).map_err(|e| stage_err("gamma", e))?,
            GammaSource::File(path) => {
                let map = io::read_gamma_map(path).map_err(|e| stage_err("gamma", e))?;
                map.check_compatible(noisy.geometry())
                    .map_err(|e| stage_err("gamma", e))?;
                map
            }
        };
        // Persist the gamma actually used, at full precision plus preview.
        let dense = map
            .dense(noisy.geometry())
            .map_err(|e| stage_err("gamma", e))?;
        let gamma_grid = ScalarGrid::from_values(noisy.geometry().clone(), dense)
            .map_err(|e| stage_err("gamma", e))?;
        let gamma_path = dir.join("gamma.csv");
        let preview =
            io::write_gamma_map(&gamma_path, &gamma_grid).map_err(|e| stage_err("gamma", e))?;
        artifacts.gamma = Some("gamma.csv".into());
        artifacts.gamma_preview =
            preview.map(|p| p.file_name().unwrap().to_string_lossy().into_owned());
        Some(map)
    } else {
        None
    };

    // --- eps ---
    let eps = match config.eps {
        EpsMode::Auto => sigma * (noisy.geometry().num_nodes() as f64).sqrt(),
        EpsMode::Explicit(e) => {
            if e < 0.0 {
                return Err(stage_err("eps", format!("negative eps {e}")));
            }
            e
        }
    };

    // --- solve ---
    let mut reconstructions: Vec<(RegChoice, ScalarGrid, SolveReport)> = Vec::new();
    for &reg in &config.regularizers {
        let spec = match reg {
            RegChoice::Tv => RegularizerSpec::Tv,
            RegChoice::TvPwl => RegularizerSpec::TvPwl {
                gamma: gamma.clone().expect("gamma prepared above"),
            },
            RegChoice::Tgv2 => RegularizerSpec::Tgv2 { beta: config.beta },
        };
        let (u, report) =
            solve_constrained(&noisy, &spec, eps, &solver_cfg).map_err(|e| stage_err("solve", e))?;
        let (csv, preview) = write_stage_grid(
            &dir,
            &format!("recon_{}", reg.name()),
            &u,
            Preview::Clamp.if_2d(is_2d),
        )?;
        artifacts.reconstructions.push(ReconArtifact {
            reg: reg.name().into(),
            csv,
            preview,
        });
        reconstructions.push((reg, u, report));
    }

    // --- metrics ---
    let range = if is_2d {
        255.0
    } else {
        let min = truth.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = truth
            .values()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        (max - min).max(1e-9)
    };
    let params = SsimParams::new(range);
    let noisy_vs_truth = quality(&noisy, &truth, &params).map_err(|e| stage_err("metrics", e))?;
    let mut reg_metrics = Vec::new();
    for (reg, u, report) in &reconstructions {
        reg_metrics.push(RegMetrics {
            reg: reg.name().into(),
            vs_truth: Some(quality(u, &truth, &params).map_err(|e| stage_err("metrics", e))?),
            discrepancy: discrepancy(u, &noisy).map_err(|e| stage_err("metrics", e))?,
            solver: SolverSummary::from_report(report),
        });
    }
    let mut cross = Vec::new();
    for i in 0..reconstructions.len() {
        for j in i + 1..reconstructions.len() {
            let (ra, ua, _) = &reconstructions[i];
            let (rb, ub, _) = &reconstructions[j];
            cross.push(CrossSsim {
                a: ra.name().into(),
                b: rb.name().into(),
                ssim: ssim(ua, ub, &params).map_err(|e| stage_err("metrics", e))?,
            });
        }
    }

    let manifest = Manifest {
        config: config.clone(),
        dims,
        sigma,
        eps,
        ssim_dynamic_range: range,
        artifacts,
        metrics: Metrics {
            noisy_vs_truth: Some(noisy_vs_truth),
            reconstructions: reg_metrics,
            cross_ssim: cross,
        },
    };

    let text = serde_json::to_string_pretty(&manifest).map_err(|e| stage_err("write", e))?;
    fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| stage_err("write", e))?;
    Ok(manifest)
}

impl Preview {
    fn if_2d(self, is_2d: bool) -> Preview {
        if is_2d {
            self
        } else {
            Preview::None
        }
    }
}
