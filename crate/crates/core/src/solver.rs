//! First-order primal-dual (Chambolle–Pock) solvers for penalized and
//! residual-constrained denoising.
//!
//! Every problem is lowered to a flat saddle-point form
//! `min_x G(x) + F(Kx)` and iterated with
//!
//! ```text
//! y ← prox_{σF*}(y + σ K x̄)
//! x ← prox_{τG}(x − τ Kᵀ y)
//! x̄ ← x + θ (x − x_old)
//! ```
//!
//! with `τ = σ = 0.99 / ‖K‖` from power iteration unless overridden. The
//! fidelity is measured in the raw pixel-count norm; the regularizer carries
//! the cell measure through the dual-ball radii.

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarGrid};
use crate::ops::{div, grad, op_norm_estimate};
use crate::regularizer::{
    self, apply_sym_grad_flat, apply_sym_grad_transpose_flat, flat_tensor_norms, flatten_vector,
    pointwise_norms, project_flat_tensor, shrink_clip_factor, tv_value,
    tvpwl_value, GammaMap, RegularizerSpec,
};

/// Hyperparameters of one primal-dual solve.
#[derive(Debug, Clone)]
pub struct PdhgConfig {
    pub max_iters: usize,
    /// Relative-change stopping tolerance; 0 disables early stopping.
    pub tol: f64,
    /// Primal step; `None` derives it from a power-iteration norm estimate.
    pub tau: Option<f64>,
    /// Dual step; `None` derives it from a power-iteration norm estimate.
    pub sigma: Option<f64>,
    /// Extrapolation weight in [0, 1].
    pub theta: f64,
    /// Interval (in iterations) between stop checks and objective samples.
    pub check_every: usize,
}

impl Default for PdhgConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol: 1e-6,
            tau: None,
            sigma: None,
            theta: 1.0,
            check_every: 25,
        }
    }
}

impl PdhgConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.tol < 0.0 || !self.tol.is_finite() {
            return Err(Error::InvalidParameter("tol must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter("theta must lie in [0, 1]".into()));
        }
        if self.check_every < 1 {
            return Err(Error::InvalidParameter("check_every must be >= 1".into()));
        }
        for (name, v) in [("tau", self.tau), ("sigma", self.sigma)] {
            if let Some(s) = v {
                if !s.is_finite() || s <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be positive, got {s}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Convergence telemetry of one solve.
///
/// `objective_trace` records the best (lowest) primal objective seen up to
/// each sample point, taken every `check_every` iterations after an initial
/// sample, so the trace is nonincreasing by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_rel_change: f64,
    pub objective_trace: Vec<f64>,
    pub discrepancy: f64,
    pub converged: bool,
}

/// Relative-change stopping rule: `‖curr − prev‖₂ ≤ tol · (‖curr‖₂ + 1e−12)`.
pub fn stop_check(prev: &[f64], curr: &[f64], tol: f64) -> bool {
    let diff: f64 = prev
        .iter()
        .zip(curr)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = curr.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff <= tol * (scale + 1e-12)
}

/// Iterate state of the generic primal-dual loop.
#[derive(Debug, Clone)]
pub struct PdhgState {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub primal_bar: Vec<f64>,
}

impl PdhgState {
    pub fn new(primal0: Vec<f64>, dual_dim: usize) -> Self {
        let primal_bar = primal0.clone();
        Self {
            primal: primal0,
            dual: vec![0.0; dual_dim],
            primal_bar,
        }
    }
}

/// One exact primal-dual iteration. Deterministic given the state; a saddle
/// point is a fixed point of this map.
#[allow(clippy::too_many_arguments)]
pub fn pdhg_step(
    state: &mut PdhgState,
    apply_k: &dyn Fn(&[f64]) -> Vec<f64>,
    apply_kt: &dyn Fn(&[f64]) -> Vec<f64>,
    prox_g: &dyn Fn(&mut [f64], f64),
    prox_fstar: &dyn Fn(&mut [f64], f64),
    tau: f64,
    sigma: f64,
    theta: f64,
) {
    let kx = apply_k(&state.primal_bar);
    for (y, k) in state.dual.iter_mut().zip(&kx) {
        *y += sigma * k;
    }
    prox_fstar(&mut state.dual, sigma);

    let kty = apply_kt(&state.dual);
    let x_old = state.primal.clone();
    for (x, k) in state.primal.iter_mut().zip(&kty) {
        *x -= tau * k;
    }
    prox_g(&mut state.primal, tau);

    for ((bar, x), old) in state
        .primal_bar
        .iter_mut()
        .zip(&state.primal)
        .zip(&x_old)
    {
        *bar = x + theta * (x - old);
    }
}

type ApplyOp<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;
type ProxOp<'a> = Box<dyn Fn(&mut [f64], f64) + 'a>;
type Objective<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

struct FlatProblem<'a> {
    primal0: Vec<f64>,
    dual_dim: usize,
    apply_k: ApplyOp<'a>,
    apply_kt: ApplyOp<'a>,
    prox_g: ProxOp<'a>,
    prox_fstar: ProxOp<'a>,
    objective: Objective<'a>,
}

struct FlatOutcome {
    primal: Vec<f64>,
    iterations: usize,
    final_rel_change: f64,
    objective_trace: Vec<f64>,
    converged: bool,
}

fn run_flat(problem: &FlatProblem, cfg: &PdhgConfig) -> FlatOutcome {
    let (tau, sigma) = match (cfg.tau, cfg.sigma) {
        (Some(t), Some(s)) => (t, s),
        _ => {
            let est = op_norm_estimate(
                problem.apply_k.as_ref(),
                problem.apply_kt.as_ref(),
                problem.primal0.len(),
                100,
            );
            let norm = (est * 1.01).max(1e-12);
            let auto = 0.99 / norm;
            (cfg.tau.unwrap_or(auto), cfg.sigma.unwrap_or(auto))
        }
    };

    let mut state = PdhgState::new(problem.primal0.clone(), problem.dual_dim);
    let mut prev_check = state.primal.clone();
    let mut best_objective = (problem.objective)(&state.primal);
    let mut trace = vec![best_objective];
    let mut iterations = 0;
    let mut final_rel_change = f64::INFINITY;
    let mut converged = false;

    while iterations < cfg.max_iters {
        pdhg_step(
            &mut state,
            problem.apply_k.as_ref(),
            problem.apply_kt.as_ref(),
            problem.prox_g.as_ref(),
            problem.prox_fstar.as_ref(),
            tau,
            sigma,
            cfg.theta,
        );
        iterations += 1;

        if iterations % cfg.check_every == 0 || iterations == cfg.max_iters {
            let obj = (problem.objective)(&state.primal);
            if obj < best_objective {
                best_objective = obj;
            }
            trace.push(best_objective);

            let diff: f64 = prev_check
                .iter()
                .zip(&state.primal)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale: f64 = state.primal.iter().map(|v| v * v).sum::<f64>().sqrt();
            final_rel_change = diff / (scale + 1e-12);
            if stop_check(&prev_check, &state.primal, cfg.tol) {
                converged = true;
                break;
            }
            prev_check.copy_from_slice(&state.primal);
        }
    }

    FlatOutcome {
        primal: state.primal,
        iterations,
        final_rel_change,
        objective_trace: trace,
        converged,
    }
}

fn raw_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn grad_flat(geometry: &GridGeometry, u: &[f64]) -> Vec<f64> {
    let grid = ScalarGrid::from_values(geometry.clone(), u.to_vec()).expect("finite solver state");
    flatten_vector(&grad(&grid))
}

/// Flat `Kᵀ` for `K = grad`, i.e. `-div`.
fn grad_transpose_flat(geometry: &GridGeometry, p: &[f64]) -> Vec<f64> {
    let field = regularizer::unflatten_vector(geometry, p);
    div(&field).values().iter().map(|v| -v).collect()
}

/// Pointwise shrink-then-clip on a flat vector field: magnitudes are reduced
/// by `shrink[i] * s` and clipped to `clip`.
fn prox_dual_flat(geometry: &GridGeometry, p: &mut [f64], s: f64, clip: f64, gamma: &[f64]) {
    let n = geometry.num_nodes();
    let d = p.len() / n;
    let norms = pointwise_norms(geometry, p);
    for i in 0..n {
        let f = shrink_clip_factor(norms[i], s * gamma[i], clip);
        for k in 0..d {
            p[k * n + i] *= f;
        }
    }
}

/// ROF denoising `min_u ½‖u − f‖² + α TV(u)`.
pub fn solve_rof(
    f: &ScalarGrid,
    alpha: f64,
    cfg: &PdhgConfig,
) -> Result<(ScalarGrid, SolveReport)> {
    solve_penalized(f, alpha, &GammaMap::zero(), cfg)
}

/// Penalized piecewise-Lipschitz denoising
/// `min_u ½‖u − f‖² + α TV_pwL^γ(u)`; with γ = 0 this is exactly
/// [`solve_rof`].
pub fn solve_tvpwl_penalized(
    f: &ScalarGrid,
    alpha: f64,
    gamma: &GammaMap,
    cfg: &PdhgConfig,
) -> Result<(ScalarGrid, SolveReport)> {
    solve_penalized(f, alpha, gamma, cfg)
}

fn solve_penalized(
    f: &ScalarGrid,
    alpha: f64,
    gamma: &GammaMap,
    cfg: &PdhgConfig,
) -> Result<(ScalarGrid, SolveReport)> {
    cfg.validate()?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let geometry = f.geometry().clone();
    let gamma_dense = gamma.dense(&geometry)?;
    let cell = geometry.cell_measure();
    let n = geometry.num_nodes();
    let d = geometry.ndim();
    let f_vals = f.values().to_vec();
    let radius = alpha * cell;

    let geom_k = geometry.clone();
    let geom_kt = geometry.clone();
    let geom_prox = geometry.clone();
    let geom_obj = geometry.clone();
    let f_prox = f_vals.clone();
    let f_obj = f_vals.clone();
    let gamma_obj = gamma.clone();

    let problem = FlatProblem {
        primal0: f_vals.clone(),
        dual_dim: d * n,
        apply_k: Box::new(move |u| grad_flat(&geom_k, u)),
        apply_kt: Box::new(move |p| grad_transpose_flat(&geom_kt, p)),
        prox_g: Box::new(move |u, tau| {
            for (ui, fi) in u.iter_mut().zip(&f_prox) {
                *ui = (*ui + tau * fi) / (1.0 + tau);
            }
        }),
        prox_fstar: Box::new(move |p, sigma| {
            prox_dual_flat(&geom_prox, p, sigma, radius, &gamma_dense)
        }),
        objective: Box::new(move |u| {
            let grid = ScalarGrid::from_values(geom_obj.clone(), u.to_vec())
                .expect("finite solver state");
            let fit: f64 = u
                .iter()
                .zip(&f_obj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                * 0.5;
            fit + alpha * tvpwl_value(&grid, &gamma_obj).expect("gamma checked")
        }),
    };

    let out = run_flat(&problem, cfg);
    let discrepancy = raw_distance(&out.primal, &f_vals);
    let u = ScalarGrid::from_values(geometry, out.primal)?;
    Ok((
        u,
        SolveReport {
            iterations: out.iterations,
            final_rel_change: out.final_rel_change,
            objective_trace: out.objective_trace,
            discrepancy,
            converged: out.converged,
        },
    ))
}

/// Residual-method denoising `min_u 𝒥(u)  s.t.  ‖u − f‖₂ ≤ eps` with
/// 𝒥 ∈ {TV, TV_pwL^γ, TGV²}. Every iterate is feasible because the primal
/// prox is the exact ball projection. `eps = 0` returns `f` unchanged.
pub fn solve_constrained(
    f: &ScalarGrid,
    reg: &RegularizerSpec,
    eps: f64,
    cfg: &PdhgConfig,
) -> Result<(ScalarGrid, SolveReport)> {
    cfg.validate()?;
    reg.validate()?;
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be nonnegative, got {eps}"
        )));
    }
    if eps == 0.0 {
        let obj = constrained_objective_at(f, reg)?;
        return Ok((
            f.clone(),
            SolveReport {
                iterations: 0,
                final_rel_change: 0.0,
                objective_trace: vec![obj],
                discrepancy: 0.0,
                converged: true,
            },
        ));
    }
    match reg {
        RegularizerSpec::Tv => solve_constrained_first_order(f, &GammaMap::zero(), eps, cfg),
        RegularizerSpec::TvPwl { gamma } => solve_constrained_first_order(f, gamma, eps, cfg),
        RegularizerSpec::Tgv2 { beta } => solve_constrained_tgv(f, *beta, eps, cfg),
    }
}

fn constrained_objective_at(u: &ScalarGrid, reg: &RegularizerSpec) -> Result<f64> {
    Ok(match reg {
        RegularizerSpec::Tv => tv_value(u),
        RegularizerSpec::TvPwl { gamma } => tvpwl_value(u, gamma)?,
        RegularizerSpec::Tgv2 { beta } => regularizer::tgv2_value(u, *beta, 200),
    })
}

fn solve_constrained_first_order(
    f: &ScalarGrid,
    gamma: &GammaMap,
    eps: f64,
    cfg: &PdhgConfig,
) -> Result<(ScalarGrid, SolveReport)> {
    let geometry = f.geometry().clone();
    let gamma_dense = gamma.dense(&geometry)?;
    let cell = geometry.cell_measure();
    let n = geometry.num_nodes();
    let d = geometry.ndim();
    let f_vals = f.values().to_vec();

    let geom_k = geometry.clone();
    let geom_kt = geometry.clone();
    let geom_prox = geometry.clone();
    let geom_obj = geometry.clone();
    let f_prox = f_vals.clone();
    let gamma_obj = gamma.clone();

    let problem = FlatProblem {
        primal0: f_vals.clone(),
        dual_dim: d * n,
        apply_k: Box::new(move |u| grad_flat(&geom_k, u)),
        apply_kt: Box::new(move |p| grad_transpose_flat(&geom_kt, p)),
        prox_g: Box::new(move |u, _tau| project_ball_flat(u, &f_prox, eps)),
        prox_fstar: Box::new(move |p, sigma| {
            prox_dual_flat(&geom_prox, p, sigma, cell, &gamma_dense)
        }),
        objective: Box::new(move |u| {
            let grid = ScalarGrid::from_values(geom_obj.clone(), u.to_vec())
                .expect("finite solver state");
            tvpwl_value(&grid, &gamma_obj).expect("gamma checked")
        }),
    };

    let out = run_flat(&problem, cfg);
    let discrepancy = raw_distance(&out.primal, &f_vals);
    let u = ScalarGrid::from_values(geometry, out.primal)?;
    Ok((
        u,
        SolveReport {
            iterations: out.iterations,
            final_rel_change: out.final_rel_change,
            objective_trace: out.objective_trace,
            discrepancy,
            converged: out.converged,
        },
    ))
}

/// In-place projection of `u` onto `{‖u − f‖₂ ≤ eps}` in raw coordinates.
fn project_ball_flat(u: &mut [f64], f: &[f64], eps: f64) {
    let dist = raw_distance(u, f);
    if dist > eps {
        let s = eps / dist;
        for (ui, fi) in u.iter_mut().zip(f) {
            *ui = fi + s * (*ui - fi);
        }
    }
}

/// Constrained TGV²: primal `(u, w)`, `K(u, w) = (grad u − w, Ew)`, dual-ball
/// radii `cell` and `beta · cell`.
fn solve_constrained_tgv(
    f: &ScalarGrid,
    beta: f64,
    eps: f64,
    cfg: &PdhgConfig,
) -> Result<(ScalarGrid, SolveReport)> {
    let geometry = f.geometry().clone();
    let cell = geometry.cell_measure();
    let n = geometry.num_nodes();
    let d = geometry.ndim();
    let w_len = d * n;
    let p_len = d * n;
    let q_len = if d == 1 { n } else { 3 * n };
    let f_vals = f.values().to_vec();

    let mut primal0 = f_vals.clone();
    primal0.extend(std::iter::repeat_n(0.0, w_len));

    let geom_k = geometry.clone();
    let geom_kt = geometry.clone();
    let geom_prox = geometry.clone();
    let geom_obj = geometry.clone();
    let f_prox = f_vals.clone();

    let problem = FlatProblem {
        primal0,
        dual_dim: p_len + q_len,
        apply_k: Box::new(move |x| {
            let (u, w) = x.split_at(n);
            let mut gu = grad_flat(&geom_k, u);
            for (g, wi) in gu.iter_mut().zip(w) {
                *g -= wi;
            }
            let ew = apply_sym_grad_flat(&geom_k, w);
            gu.extend(ew);
            gu
        }),
        apply_kt: Box::new(move |y| {
            let (p, q) = y.split_at(p_len);
            let mut out = grad_transpose_flat(&geom_kt, p);
            let etq = apply_sym_grad_transpose_flat(&geom_kt, q);
            out.reserve(w_len);
            for i in 0..w_len {
                out.push(-p[i] + etq[i]);
            }
            out
        }),
        prox_g: Box::new(move |x, _tau| {
            let (u, _w) = x.split_at_mut(n);
            project_ball_flat(u, &f_prox, eps);
        }),
        prox_fstar: Box::new(move |y, _sigma| {
            let (p, q) = y.split_at_mut(p_len);
            let norms = pointwise_norms(&geom_prox, p);
            let dp = p.len() / n;
            for i in 0..n {
                if norms[i] > cell {
                    let s = cell / norms[i];
                    for k in 0..dp {
                        p[k * n + i] *= s;
                    }
                }
            }
            project_flat_tensor(&geom_prox, q, beta * cell);
        }),
        objective: Box::new(move |x| {
            let (u, w) = x.split_at(n);
            let gu = grad_flat(&geom_obj, u);
            let diff: Vec<f64> = gu.iter().zip(w).map(|(a, b)| a - b).collect();
            let fit: f64 = pointwise_norms(&geom_obj, &diff).iter().sum::<f64>() * cell;
            let ew = apply_sym_grad_flat(&geom_obj, w);
            let smooth: f64 = flat_tensor_norms(&geom_obj, &ew).iter().sum::<f64>() * cell;
            fit + beta * smooth
        }),
    };

    let out = run_flat(&problem, cfg);
    let u_vals = out.primal[..n].to_vec();
    let discrepancy = raw_distance(&u_vals, &f_vals);
    let u = ScalarGrid::from_values(geometry, u_vals)?;
    Ok((
        u,
        SolveReport {
            iterations: out.iterations,
            final_rel_change: out.final_rel_change,
            objective_trace: out.objective_trace,
            discrepancy,
            converged: out.converged,
        },
    ))
}
