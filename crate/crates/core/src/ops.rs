//! Discrete differential operators.
//!
//! The gradient uses forward differences with a homogeneous Neumann far
//! boundary (the last difference along each axis is zero); the divergence is
//! defined as the exact negative adjoint of the gradient under the
//! cell-weighted inner product, so `⟨grad u, p⟩ = −⟨u, div p⟩` holds at the
//! level of floating-point summation order, not just asymptotically. The same
//! construction gives the symmetrized gradient / divergence pair used by
//! second-order regularization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarGrid, SymTensorGrid, VectorGrid};

/// Forward difference of `values` along `axis`, far boundary set to zero.
fn forward_diff(geometry: &GridGeometry, values: &[f64], axis: usize) -> Vec<f64> {
    let n = geometry.num_nodes();
    let stride = geometry.stride(axis);
    let extent = geometry.dims()[axis];
    let h = geometry.spacing()[axis];
    let mut out = vec![0.0; n];
    for i in 0..n {
        let coord = (i / stride) % extent;
        if coord + 1 < extent {
            out[i] = (values[i + stride] - values[i]) / h;
        }
    }
    out
}

/// Negative adjoint of [`forward_diff`] along one axis: backward differences
/// with the boundary rows fixed by the adjoint identity.
fn backward_div(geometry: &GridGeometry, values: &[f64], axis: usize) -> Vec<f64> {
    let n = geometry.num_nodes();
    let stride = geometry.stride(axis);
    let extent = geometry.dims()[axis];
    let h = geometry.spacing()[axis];
    let mut out = vec![0.0; n];
    for i in 0..n {
        let coord = (i / stride) % extent;
        let fwd = if coord + 1 < extent { values[i] } else { 0.0 };
        let bwd = if coord > 0 { values[i - stride] } else { 0.0 };
        out[i] = (fwd - bwd) / h;
    }
    out
}

/// Discrete gradient: component `k` holds the forward difference along axis
/// `k`, zero on the far boundary of that axis.
pub fn grad(u: &ScalarGrid) -> VectorGrid {
    let geometry = u.geometry().clone();
    let components = (0..geometry.ndim())
        .map(|axis| forward_diff(&geometry, u.values(), axis))
        .collect();
    VectorGrid::from_components(geometry, components)
        .expect("gradient of a valid grid is valid")
}

/// Discrete divergence, the exact negative adjoint of [`grad`]:
/// `⟨grad u, p⟩ = −⟨u, div p⟩` for all `u`, `p` on the same geometry.
pub fn div(p: &VectorGrid) -> ScalarGrid {
    let geometry = p.geometry().clone();
    let n = geometry.num_nodes();
    let mut out = vec![0.0; n];
    for (axis, comp) in p.components().iter().enumerate() {
        let part = backward_div(&geometry, comp, axis);
        for (o, v) in out.iter_mut().zip(&part) {
            *o += v;
        }
    }
    ScalarGrid::from_values(geometry, out).expect("divergence of a valid field is valid")
}

/// Symmetrized gradient of a 2D vector field:
/// `xx = ∂₀w₀`, `yy = ∂₁w₁`, `xy = (∂₁w₀ + ∂₀w₁)/2`, all with the same
/// forward-difference stencil as [`grad`].
pub fn sym_grad(w: &VectorGrid) -> Result<SymTensorGrid> {
    let geometry = w.geometry().clone();
    if geometry.ndim() != 2 {
        return Err(Error::UnsupportedDimension(
            "sym_grad requires a 2D field".into(),
        ));
    }
    let xx = forward_diff(&geometry, w.component(0), 0);
    let yy = forward_diff(&geometry, w.component(1), 1);
    let d1w0 = forward_diff(&geometry, w.component(0), 1);
    let d0w1 = forward_diff(&geometry, w.component(1), 0);
    let xy: Vec<f64> = d1w0
        .iter()
        .zip(&d0w1)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    SymTensorGrid::from_components(geometry, xx, yy, xy)
}

/// Negative adjoint of [`sym_grad`] under the tensor inner product (with the
/// off-diagonal counted twice): `⟨sym_grad w, q⟩ = −⟨w, sym_div q⟩`.
pub fn sym_div(q: &SymTensorGrid) -> VectorGrid {
    let geometry = q.geometry().clone();
    let div0_xx = backward_div(&geometry, q.xx(), 0);
    let div1_xy = backward_div(&geometry, q.xy(), 1);
    let div0_xy = backward_div(&geometry, q.xy(), 0);
    let div1_yy = backward_div(&geometry, q.yy(), 1);
    let c0: Vec<f64> = div0_xx.iter().zip(&div1_xy).map(|(a, b)| a + b).collect();
    let c1: Vec<f64> = div0_xy.iter().zip(&div1_yy).map(|(a, b)| a + b).collect();
    VectorGrid::from_components(geometry, vec![c0, c1])
        .expect("sym_div of a valid field is valid")
}

/// Power-iteration estimate of the largest singular value of a linear
/// operator given by matching `apply_k` / `apply_kt` closures on flat
/// vectors of length `input_dim`.
///
/// Each sweep produces the Rayleigh certificate `‖K v‖` for a unit `v`; the
/// running maximum over sweeps is returned, so the estimate never exceeds the
/// true norm and is nondecreasing in `iters` for a fixed seed.
pub fn op_norm_estimate<K, Kt>(apply_k: K, apply_kt: Kt, input_dim: usize, iters: usize) -> f64
where
    K: Fn(&[f64]) -> Vec<f64>,
    Kt: Fn(&[f64]) -> Vec<f64>,
{
    assert!(iters >= 1, "op_norm_estimate needs at least one iteration");
    let mut rng = ChaCha8Rng::seed_from_u64(0x706f776572);
    let mut v: Vec<f64> = (0..input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    if nv == 0.0 {
        return 0.0;
    }
    scale(&mut v, 1.0 / nv);

    let mut best = 0.0_f64;
    for _ in 0..iters {
        let w = apply_k(&v);
        let nw = norm(&w);
        if nw <= 1e-300 {
            return best;
        }
        best = best.max(nw);
        v = apply_kt(&w);
        let nv = norm(&v);
        if nv <= 1e-300 {
            return best;
        }
        scale(&mut v, 1.0 / nv);
    }
    best
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    for x in v {
        *x *= s;
    }
}
