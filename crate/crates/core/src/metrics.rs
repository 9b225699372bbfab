//! Image/signal quality metrics: SSIM, PSNR, MSE, and the data discrepancy.
//!
//! All metrics use raw pixel counts (no cell measure), matching the
//! discrepancy bound `‖u − f‖₂² ≤ σ²·N` of the residual method.

use crate::error::{Error, Result};
use crate::grid::ScalarGrid;

/// SSIM parameters: dynamic range and the Wang et al. stabilization
/// constants, with a Gaussian window (size 11, σ = 1.5; a length-11 Gaussian
/// in 1D).
#[derive(Debug, Clone)]
pub struct SsimParams {
    pub dynamic_range: f64,
    pub k1: f64,
    pub k2: f64,
    pub window_len: usize,
    pub window_sigma: f64,
}

impl SsimParams {
    pub fn new(dynamic_range: f64) -> Self {
        Self {
            dynamic_range,
            k1: 0.01,
            k2: 0.03,
            window_len: 11,
            window_sigma: 1.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.dynamic_range.is_finite() || self.dynamic_range <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "SSIM dynamic range must be positive, got {}",
                self.dynamic_range
            )));
        }
        if self.window_len < 2 {
            return Err(Error::InvalidParameter(
                "SSIM window must have at least 2 taps".into(),
            ));
        }
        Ok(())
    }

    /// Normalized Gaussian window weights.
    fn window(&self) -> Vec<f64> {
        let m = self.window_len;
        let c = (m as f64 - 1.0) / 2.0;
        let mut w: Vec<f64> = (0..m)
            .map(|j| {
                let d = j as f64 - c;
                (-d * d / (2.0 * self.window_sigma * self.window_sigma)).exp()
            })
            .collect();
        let sum: f64 = w.iter().sum();
        for v in &mut w {
            *v /= sum;
        }
        w
    }
}

fn ssim_formula(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
        / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
}

/// Mean local structural similarity between two grids. Windows slide over
/// the valid region only; grids smaller than the window fall back to a single
/// uniform window over the whole grid. `ssim(a, a) = 1`.
pub fn ssim(a: &ScalarGrid, b: &ScalarGrid, params: &SsimParams) -> Result<f64> {
    a.geometry().check_same(b.geometry(), "ssim")?;
    params.validate()?;
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let dims = a.geometry().dims().to_vec();
    let m = params.window_len;

    if dims.iter().any(|&d| d < m) {
        // Single uniform window over the whole grid.
        let n = a.geometry().num_nodes() as f64;
        let (mut mx, mut my) = (0.0, 0.0);
        for (&x, &y) in a.values().iter().zip(b.values()) {
            mx += x;
            my += y;
        }
        mx /= n;
        my /= n;
        let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.values().iter().zip(b.values()) {
            vx += x * x;
            vy += y * y;
            cov += x * y;
        }
        vx = vx / n - mx * mx;
        vy = vy / n - my * my;
        cov = cov / n - mx * my;
        return Ok(ssim_formula(mx, my, vx, vy, cov, c1, c2));
    }

    let w = params.window();
    match dims.len() {
        1 => {
            let n = dims[0];
            let xs = a.values();
            let ys = b.values();
            let mut total = 0.0;
            let count = n - m + 1;
            for start in 0..count {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for (j, &wj) in w.iter().enumerate() {
                    let x = xs[start + j];
                    let y = ys[start + j];
                    mx += wj * x;
                    my += wj * y;
                    sxx += wj * x * x;
                    syy += wj * y * y;
                    sxy += wj * x * y;
                }
                total += ssim_formula(
                    mx,
                    my,
                    sxx - mx * mx,
                    syy - my * my,
                    sxy - mx * my,
                    c1,
                    c2,
                );
            }
            Ok(total / count as f64)
        }
        _ => {
            let (rows, cols) = (dims[0], dims[1]);
            let xs = a.values();
            let ys = b.values();
            let mut total = 0.0;
            let count = (rows - m + 1) * (cols - m + 1);
            for r0 in 0..rows - m + 1 {
                for c0 in 0..cols - m + 1 {
                    let (mut mx, mut my, mut sxx, mut syy, mut sxy) =
                        (0.0, 0.0, 0.0, 0.0, 0.0);
                    for (jr, &wr) in w.iter().enumerate() {
                        for (jc, &wc) in w.iter().enumerate() {
                            let wij = wr * wc;
                            let idx = (r0 + jr) * cols + (c0 + jc);
                            let x = xs[idx];
                            let y = ys[idx];
                            mx += wij * x;
                            my += wij * y;
                            sxx += wij * x * x;
                            syy += wij * y * y;
                            sxy += wij * x * y;
                        }
                    }
                    total += ssim_formula(
                        mx,
                        my,
                        sxx - mx * mx,
                        syy - my * my,
                        sxy - mx * my,
                        c1,
                        c2,
                    );
                }
            }
            Ok(total / count as f64)
        }
    }
}

/// Mean squared error over raw pixel counts.
pub fn mse(a: &ScalarGrid, b: &ScalarGrid) -> Result<f64> {
    a.geometry().check_same(b.geometry(), "mse")?;
    let n = a.geometry().num_nodes() as f64;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

/// Peak signal-to-noise ratio; identical inputs give `f64::INFINITY`.
pub fn psnr(a: &ScalarGrid, b: &ScalarGrid, dynamic_range: f64) -> Result<f64> {
    if !dynamic_range.is_finite() || dynamic_range <= 0.0 {
        return Err(Error::InvalidParameter(
            "PSNR dynamic range must be positive".into(),
        ));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (dynamic_range * dynamic_range / m).log10())
}

/// Raw data discrepancy `‖u − f‖₂` (pixel counts, no cell measure), so that
/// `discrepancy² = N · mse`.
pub fn discrepancy(u: &ScalarGrid, f: &ScalarGrid) -> Result<f64> {
    u.geometry().check_same(f.geometry(), "discrepancy")?;
    Ok(u.values()
        .iter()
        .zip(f.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
