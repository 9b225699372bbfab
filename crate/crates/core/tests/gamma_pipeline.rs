//! End-to-end properties of the γ-estimation pipeline.

use tvpwl::{
    estimate_gamma, estimate_gamma_stages, residual_after_overreg, GammaPipelineConfig,
    GridGeometry, PdhgConfig, ScalarGrid, Smooth1dConfig,
};

fn line(values: Vec<f64>) -> ScalarGrid {
    let g = GridGeometry::line(values.len()).unwrap();
    ScalarGrid::from_values(g, values).unwrap()
}

fn solver_cfg() -> PdhgConfig {
    PdhgConfig {
        max_iters: 40_000,
        tol: 1e-9,
        ..Default::default()
    }
}

/// Least-squares slope of `y` over the index range `[lo, hi)`.
fn fitted_slope(y: &[f64], lo: usize, hi: usize) -> f64 {
    let n = (hi - lo) as f64;
    let xm = (lo + hi - 1) as f64 / 2.0;
    let ym: f64 = y[lo..hi].iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, yi) in y.iter().enumerate().take(hi).skip(lo) {
        let dx = i as f64 - xm;
        num += dx * (yi - ym);
        den += dx * dx;
    }
    num / den
}

#[test]
fn residual_keeps_the_ramp_slope_away_from_the_jump() {
    // Ramp plus one jump; a strongly over-regularized TV solve flattens the
    // reconstruction, so the residual carries the slope on each segment.
    let n = 200;
    let slope = 0.02;
    let vals: Vec<f64> = (0..n)
        .map(|i| slope * i as f64 + if i >= n / 2 { 3.0 } else { 0.0 })
        .collect();
    let f = line(vals);
    // Large enough that the reconstruction is piecewise constant.
    let alpha_over = 2.0 * slope * (n * n) as f64;
    let (_u, r) = residual_after_overreg(&f, alpha_over, &solver_cfg()).unwrap();
    let s = fitted_slope(r.values(), 10, n / 2 - 10);
    assert!(
        (s - slope).abs() <= 0.2 * slope,
        "residual slope {s} vs true {slope}"
    );
    let s = fitted_slope(r.values(), n / 2 + 10, n - 10);
    assert!((s - slope).abs() <= 0.2 * slope);
}

#[test]
fn gamma_of_noiseless_ramp_matches_the_slope() {
    let n = 256;
    let slope = 0.05;
    let f = line((0..n).map(|i| slope * i as f64).collect());
    // Above the threshold where the TV solution collapses to the mean; the
    // dual variable has to travel a distance ~ slope*n^2/8, so the solve
    // gets a generous iteration budget.
    let alpha_over = slope * (n * n) as f64 / 4.0;
    let cfg = GammaPipelineConfig {
        alpha_over,
        smooth_1d: Smooth1dConfig {
            window: 51,
            robust_passes: 5,
        },
        diff_stride: 20,
        ..GammaPipelineConfig::default_1d()
    };
    let solver = PdhgConfig {
        max_iters: 300_000,
        tol: 0.0,
        ..Default::default()
    };
    let gamma = estimate_gamma(&f, &cfg, &solver).unwrap();
    let g = gamma.as_grid().unwrap();
    let band = 51 + 2 * 20;
    for i in band..n - band {
        let v = g.values()[i];
        assert!(
            (v - slope).abs() <= 0.25 * slope,
            "node {i}: gamma {v} vs slope {slope}"
        );
    }
}

#[test]
fn gamma_is_invariant_under_constant_shifts() {
    let n = 160;
    let vals: Vec<f64> = (0..n)
        .map(|i| (i as f64 * 0.11).sin() + if i > n / 2 { 1.5 } else { 0.0 })
        .collect();
    let shifted: Vec<f64> = vals.iter().map(|v| v + 1.0).collect();
    let cfg = GammaPipelineConfig {
        diff_stride: 10,
        smooth_1d: Smooth1dConfig {
            window: 21,
            robust_passes: 3,
        },
        ..GammaPipelineConfig::default_1d()
    };
    // Identical iteration paths for both solves keep the comparison down to
    // floating-point noise.
    let solver = PdhgConfig {
        max_iters: 20_000,
        tol: 0.0,
        ..Default::default()
    };
    let g1 = estimate_gamma(&line(vals), &cfg, &solver).unwrap();
    let g2 = estimate_gamma(&line(shifted), &cfg, &solver).unwrap();
    for (a, b) in g1
        .as_grid()
        .unwrap()
        .values()
        .iter()
        .zip(g2.as_grid().unwrap().values())
    {
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
}

#[test]
fn gamma_scales_linearly_with_coupled_scaling() {
    let n = 160;
    let c = 3.5;
    let vals: Vec<f64> = (0..n)
        .map(|i| (i as f64 * 0.07).cos() * 0.8 + if i > 100 { 2.0 } else { 0.0 })
        .collect();
    let scaled: Vec<f64> = vals.iter().map(|v| c * v).collect();
    let base = GammaPipelineConfig {
        alpha_over: 0.5,
        diff_stride: 10,
        smooth_1d: Smooth1dConfig {
            window: 21,
            robust_passes: 3,
        },
        ..GammaPipelineConfig::default_1d()
    };
    let mut coupled = base.clone();
    coupled.alpha_over = c * base.alpha_over;

    let g1 = estimate_gamma(&line(vals), &base, &solver_cfg()).unwrap();
    let g2 = estimate_gamma(&line(scaled), &coupled, &solver_cfg()).unwrap();
    for (a, b) in g1
        .as_grid()
        .unwrap()
        .values()
        .iter()
        .zip(g2.as_grid().unwrap().values())
    {
        assert!((c * a - b).abs() <= 1e-8, "{} vs {b}", c * a);
    }
}

#[test]
fn stages_are_exposed_and_consistent() {
    let n = 120;
    let vals: Vec<f64> = (0..n)
        .map(|i| if i > n / 3 { 1.0 } else { 0.0 } + 0.01 * i as f64)
        .collect();
    let f = line(vals);
    let cfg = GammaPipelineConfig {
        diff_stride: 8,
        ..GammaPipelineConfig::default_1d()
    };
    let stages = estimate_gamma_stages(&f, &cfg, &solver_cfg()).unwrap();
    // residual = f - u_overreg, reproducible from the exposed stages.
    for i in 0..n {
        let expect = f.values()[i] - stages.u_overreg.values()[i];
        assert!((stages.residual.values()[i] - expect).abs() <= 1e-12);
    }
    let g = stages.gamma.as_grid().unwrap();
    assert_eq!(g.geometry(), f.geometry());
    assert!(g.values().iter().all(|&v| v >= 0.0));
}

#[test]
fn gamma_estimate_in_2d_has_matching_geometry_and_is_nonnegative() {
    let rows = 24;
    let cols = 20;
    let g = GridGeometry::rect(rows, cols).unwrap();
    let vals: Vec<f64> = (0..rows * cols)
        .map(|i| {
            let r = (i / cols) as f64;
            let c = (i % cols) as f64;
            if r > 12.0 {
                10.0 + 0.3 * c
            } else {
                0.2 * r
            }
        })
        .collect();
    let f = ScalarGrid::from_values(g.clone(), vals).unwrap();
    let cfg = GammaPipelineConfig {
        alpha_over: 50.0,
        diff_stride: 3,
        ..GammaPipelineConfig::default_2d()
    };
    let gamma = estimate_gamma(&f, &cfg, &solver_cfg()).unwrap();
    let grid = gamma.as_grid().unwrap();
    assert_eq!(grid.geometry(), &g);
    assert!(grid.values().iter().all(|&v| v >= 0.0));
}
