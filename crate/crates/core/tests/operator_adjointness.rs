//! Adjoint identities of the discrete operators, checked against direct
//! summation written independently of the library's inner products.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvpwl::{div, grad, sym_div, sym_grad, GridGeometry, ScalarGrid, SymTensorGrid, VectorGrid};

fn random_geometry(rng: &mut ChaCha8Rng) -> GridGeometry {
    if rng.random_bool(0.4) {
        let n = rng.random_range(2..=32);
        let h = rng.random_range(0.25..2.0);
        GridGeometry::with_spacing(&[n], &[h]).unwrap()
    } else {
        let rows = rng.random_range(2..=32);
        let cols = rng.random_range(2..=32);
        let h0 = rng.random_range(0.25..2.0);
        let h1 = rng.random_range(0.25..2.0);
        GridGeometry::with_spacing(&[rows, cols], &[h0, h1]).unwrap()
    }
}

fn random_scalar(rng: &mut ChaCha8Rng, g: &GridGeometry) -> ScalarGrid {
    let vals = (0..g.num_nodes())
        .map(|_| rng.random_range(-4.0..4.0))
        .collect();
    ScalarGrid::from_values(g.clone(), vals).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, g: &GridGeometry) -> VectorGrid {
    let comps = (0..g.ndim())
        .map(|_| {
            (0..g.num_nodes())
                .map(|_| rng.random_range(-4.0..4.0))
                .collect()
        })
        .collect();
    VectorGrid::from_components(g.clone(), comps).unwrap()
}

fn random_tensor(rng: &mut ChaCha8Rng, g: &GridGeometry) -> SymTensorGrid {
    let mut comp = || -> Vec<f64> {
        (0..g.num_nodes())
            .map(|_| rng.random_range(-4.0..4.0))
            .collect()
    };
    SymTensorGrid::from_components(g.clone(), comp(), comp(), comp()).unwrap()
}

// Direct-summation pairings, independent of the library's inner().
fn dot_scalar(a: &ScalarGrid, b: &ScalarGrid) -> f64 {
    let cell = a.geometry().cell_measure();
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * cell
}

fn dot_vector(a: &VectorGrid, b: &VectorGrid) -> f64 {
    let cell = a.geometry().cell_measure();
    let mut s = 0.0;
    for (ca, cb) in a.components().iter().zip(b.components()) {
        s += ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>();
    }
    s * cell
}

fn dot_tensor(a: &SymTensorGrid, b: &SymTensorGrid) -> f64 {
    let cell = a.geometry().cell_measure();
    let mut s = 0.0;
    for i in 0..a.geometry().num_nodes() {
        s += a.xx()[i] * b.xx()[i] + a.yy()[i] * b.yy()[i] + 2.0 * a.xy()[i] * b.xy()[i];
    }
    s * cell
}

fn norm_scalar(a: &ScalarGrid) -> f64 {
    dot_scalar(a, a).sqrt()
}

fn norm_vector(a: &VectorGrid) -> f64 {
    dot_vector(a, a).sqrt()
}

fn norm_tensor(a: &SymTensorGrid) -> f64 {
    dot_tensor(a, a).sqrt()
}

#[test]
fn grad_div_adjoint_identity_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let g = random_geometry(&mut rng);
        let u = random_scalar(&mut rng, &g);
        let p = random_vector(&mut rng, &g);
        let lhs = dot_vector(&grad(&u), &p);
        let rhs = dot_scalar(&u, &div(&p));
        let bound = 1e-10 * (norm_scalar(&u) * norm_vector(&p) + 1.0);
        assert!(
            (lhs + rhs).abs() <= bound,
            "adjoint identity violated on {:?}: {lhs} vs {}",
            g.dims(),
            -rhs
        );
    }
}

#[test]
fn sym_grad_sym_div_adjoint_identity_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let rows = rng.random_range(2..=32);
        let cols = rng.random_range(2..=32);
        let h0 = rng.random_range(0.25..2.0);
        let h1 = rng.random_range(0.25..2.0);
        let g = GridGeometry::with_spacing(&[rows, cols], &[h0, h1]).unwrap();
        let w = random_vector(&mut rng, &g);
        let q = random_tensor(&mut rng, &g);
        let lhs = dot_tensor(&sym_grad(&w).unwrap(), &q);
        let rhs = dot_vector(&w, &sym_div(&q));
        let bound = 1e-10 * (norm_vector(&w) * norm_tensor(&q) + 1.0);
        assert!(
            (lhs + rhs).abs() <= bound,
            "sym adjoint identity violated on {rows}x{cols}: {lhs} vs {}",
            -rhs
        );
    }
}

#[test]
fn adjoint_identity_on_spec_sizes() {
    // The 4x4, 8x8, 6x6, and 5x7 cases called out per operation.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (rows, cols) in [(4, 4), (8, 8), (6, 6), (5, 7)] {
        let g = GridGeometry::rect(rows, cols).unwrap();
        let u = random_scalar(&mut rng, &g);
        let p = random_vector(&mut rng, &g);
        let lhs = dot_vector(&grad(&u), &p);
        let rhs = dot_scalar(&u, &div(&p));
        let scale = norm_scalar(&u) * norm_vector(&p) + 1.0;
        assert!((lhs + rhs).abs() <= 1e-12 * scale);

        let w = random_vector(&mut rng, &g);
        let q = random_tensor(&mut rng, &g);
        let lhs = dot_tensor(&sym_grad(&w).unwrap(), &q);
        let rhs = dot_vector(&w, &sym_div(&q));
        let scale = norm_vector(&w) * norm_tensor(&q) + 1.0;
        assert!((lhs + rhs).abs() <= 1e-12 * scale);
    }
}

#[test]
fn cauchy_schwarz_for_inner_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let g = random_geometry(&mut rng);
        let a = random_scalar(&mut rng, &g);
        let b = random_scalar(&mut rng, &g);
        let inner = a.inner(&b).unwrap();
        assert!(inner.abs() <= norm_scalar(&a) * norm_scalar(&b) + 1e-10);
    }
}

#[test]
fn op_norm_bounds_for_gradient_operators() {
    // grad on 64x64 with h = 1 stays below the classical sqrt(8) bound.
    let g = GridGeometry::rect(64, 64).unwrap();
    let n = g.num_nodes();
    let gk = g.clone();
    let apply_k = move |v: &[f64]| {
        let u = ScalarGrid::from_values(gk.clone(), v.to_vec()).unwrap();
        let p = grad(&u);
        let mut out = Vec::with_capacity(2 * v.len());
        for c in p.components() {
            out.extend_from_slice(c);
        }
        out
    };
    let gkt = g.clone();
    let apply_kt = move |w: &[f64]| {
        let p = VectorGrid::from_components(gkt.clone(), vec![w[..n].to_vec(), w[n..].to_vec()])
            .unwrap();
        div(&p).values().iter().map(|v| -v).collect()
    };
    let est = tvpwl::op_norm_estimate(apply_k, apply_kt, n, 200);
    assert!(est <= 8.0_f64.sqrt() + 1e-6, "estimate {est}");
    assert!(est > 2.0, "estimate should approach the bound, got {est}");

    // grad on a 1D line of 100 nodes stays below 2.
    let g = GridGeometry::line(100).unwrap();
    let gk = g.clone();
    let apply_k = move |v: &[f64]| {
        let u = ScalarGrid::from_values(gk.clone(), v.to_vec()).unwrap();
        grad(&u).component(0).to_vec()
    };
    let gkt = g.clone();
    let apply_kt = move |w: &[f64]| {
        let p = VectorGrid::from_components(gkt.clone(), vec![w.to_vec()]).unwrap();
        div(&p).values().iter().map(|v| -v).collect()
    };
    let est = tvpwl::op_norm_estimate(apply_k, apply_kt, 100, 200);
    assert!(est <= 2.0 + 1e-6, "estimate {est}");
    assert!(est > 1.9);
}
