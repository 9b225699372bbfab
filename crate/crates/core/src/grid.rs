//! Grid containers shared by all operators and solvers.
//!
//! A grid is a flat `Vec<f64>` in row-major order together with a
//! [`GridGeometry`] describing extents and per-axis spacing. Only 1D and 2D
//! geometries are supported. All sums over a grid carry the cell measure
//! `∏ h` so that discrete quantities mirror their continuum counterparts.

use crate::error::{Error, Result};

/// Extents and spacing of a rectangular 1D or 2D grid.
///
/// Invariants: every extent is at least 2 and every spacing is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    dims: Vec<usize>,
    spacing: Vec<f64>,
}

impl GridGeometry {
    /// 1D grid with `n` nodes and unit spacing.
    pub fn line(n: usize) -> Result<Self> {
        Self::with_spacing(&[n], &[1.0])
    }

    /// 2D grid with `rows × cols` nodes and unit spacing. Axis 0 runs over
    /// rows, axis 1 over columns; the flat index is `row * cols + col`.
    pub fn rect(rows: usize, cols: usize) -> Result<Self> {
        Self::with_spacing(&[rows, cols], &[1.0, 1.0])
    }

    pub fn with_spacing(dims: &[usize], spacing: &[f64]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(Error::InvalidGeometry(format!(
                "expected 1 or 2 axes, got {}",
                dims.len()
            )));
        }
        if dims.len() != spacing.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} extents but {} spacings",
                dims.len(),
                spacing.len()
            )));
        }
        for &n in dims {
            if n < 2 {
                return Err(Error::InvalidGeometry(format!("extent {n} < 2")));
            }
        }
        for &h in spacing {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::InvalidGeometry(format!("spacing {h} not positive")));
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            spacing: spacing.to_vec(),
        })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.dims.iter().product()
    }

    /// Measure of one grid cell, `∏ h`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Flat-index stride of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product()
    }

    pub(crate) fn check_same(&self, other: &Self, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GeometryMismatch(format!(
                "{what}: {:?} (h={:?}) vs {:?} (h={:?})",
                self.dims, self.spacing, other.dims, other.spacing
            )));
        }
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

/// Real scalar field sampled on a grid (signals, images, gamma maps,
/// residuals).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.num_nodes() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                geometry.num_nodes()
            )));
        }
        check_finite(&values)?;
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        let n = geometry.num_nodes();
        Self {
            geometry,
            values: vec![0.0; n],
        }
    }

    pub fn constant(geometry: GridGeometry, c: f64) -> Result<Self> {
        let n = geometry.num_nodes();
        Self::from_values(geometry, vec![c; n])
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Raw Euclidean norm of the values (no cell measure).
    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cell-weighted inner product with another scalar grid.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.geometry.check_same(&other.geometry, "inner")?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(s * self.geometry.cell_measure())
    }
}

/// Per-node vector field with one component array per axis (gradients,
/// auxiliary fields, dual variables).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorGrid {
    geometry: GridGeometry,
    components: Vec<Vec<f64>>,
}

impl VectorGrid {
    pub fn from_components(geometry: GridGeometry, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != geometry.ndim() {
            return Err(Error::GeometryMismatch(format!(
                "{} components for a {}D grid",
                components.len(),
                geometry.ndim()
            )));
        }
        for comp in &components {
            if comp.len() != geometry.num_nodes() {
                return Err(Error::GeometryMismatch(format!(
                    "component of length {} for a grid of {} nodes",
                    comp.len(),
                    geometry.num_nodes()
                )));
            }
            check_finite(comp)?;
        }
        Ok(Self {
            geometry,
            components,
        })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        let n = geometry.num_nodes();
        let d = geometry.ndim();
        Self {
            geometry,
            components: vec![vec![0.0; n]; d],
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k]
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.components
    }

    /// Pointwise Euclidean norm across components.
    pub fn pointwise_norm(&self) -> ScalarGrid {
        let n = self.geometry.num_nodes();
        let mut out = vec![0.0; n];
        for comp in &self.components {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += v * v;
            }
        }
        for o in &mut out {
            *o = o.sqrt();
        }
        ScalarGrid {
            geometry: self.geometry.clone(),
            values: out,
        }
    }

    /// Cell-weighted inner product, summed over all components.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.geometry.check_same(&other.geometry, "inner")?;
        let mut s = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            s += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        Ok(s * self.geometry.cell_measure())
    }
}

/// Per-node symmetric 2×2 tensor field (second-order TGV variables).
/// The off-diagonal entry is stored once; norms and inner products count it
/// twice so that pairings against symmetrized gradients stay isotropic.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorGrid {
    geometry: GridGeometry,
    xx: Vec<f64>,
    yy: Vec<f64>,
    xy: Vec<f64>,
}

impl SymTensorGrid {
    pub fn from_components(
        geometry: GridGeometry,
        xx: Vec<f64>,
        yy: Vec<f64>,
        xy: Vec<f64>,
    ) -> Result<Self> {
        if geometry.ndim() != 2 {
            return Err(Error::UnsupportedDimension(
                "symmetric tensor grids are 2D only".into(),
            ));
        }
        let n = geometry.num_nodes();
        for comp in [&xx, &yy, &xy] {
            if comp.len() != n {
                return Err(Error::GeometryMismatch(format!(
                    "tensor component of length {} for a grid of {n} nodes",
                    comp.len()
                )));
            }
            check_finite(comp)?;
        }
        Ok(Self {
            geometry,
            xx,
            yy,
            xy,
        })
    }

    pub fn zeros(geometry: GridGeometry) -> Result<Self> {
        let n = geometry.num_nodes();
        Self::from_components(geometry, vec![0.0; n], vec![0.0; n], vec![0.0; n])
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn xx(&self) -> &[f64] {
        &self.xx
    }

    pub fn yy(&self) -> &[f64] {
        &self.yy
    }

    pub fn xy(&self) -> &[f64] {
        &self.xy
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.xx, &mut self.yy, &mut self.xy)
    }

    /// Pointwise Frobenius norm, `sqrt(xx² + yy² + 2·xy²)`.
    pub fn pointwise_norm(&self) -> ScalarGrid {
        let n = self.geometry.num_nodes();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.xx[i] * self.xx[i]
                + self.yy[i] * self.yy[i]
                + 2.0 * self.xy[i] * self.xy[i])
                .sqrt();
        }
        ScalarGrid {
            geometry: self.geometry.clone(),
            values: out,
        }
    }

    /// Cell-weighted inner product with the off-diagonal counted twice.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.geometry.check_same(&other.geometry, "inner")?;
        let mut s = 0.0;
        for i in 0..self.geometry.num_nodes() {
            s += self.xx[i] * other.xx[i]
                + self.yy[i] * other.yy[i]
                + 2.0 * self.xy[i] * other.xy[i];
        }
        Ok(s * self.geometry.cell_measure())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_rejects_degenerate_axes() {
        assert!(GridGeometry::line(1).is_err());
        assert!(GridGeometry::with_spacing(&[4], &[0.0]).is_err());
        assert!(GridGeometry::with_spacing(&[4, 4, 4], &[1.0, 1.0, 1.0]).is_err());
        assert!(GridGeometry::with_spacing(&[4], &[-1.0]).is_err());
    }

    #[test]
    fn strides_and_measure() {
        let g = GridGeometry::with_spacing(&[3, 5], &[0.5, 2.0]).unwrap();
        assert_eq!(g.stride(0), 5);
        assert_eq!(g.stride(1), 1);
        assert_eq!(g.num_nodes(), 15);
        assert!((g.cell_measure() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_grid_rejects_nan() {
        let g = GridGeometry::line(3).unwrap();
        assert!(ScalarGrid::from_values(g.clone(), vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(ScalarGrid::from_values(g, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn inner_ones_on_2x2_counts_cell_measure() {
        let g = GridGeometry::rect(2, 2).unwrap();
        let ones = ScalarGrid::from_values(g.clone(), vec![1.0; 4]).unwrap();
        assert_eq!(ones.inner(&ones).unwrap(), 4.0);
        let zeros = ScalarGrid::zeros(g);
        assert_eq!(ones.inner(&zeros).unwrap(), 0.0);
    }

    #[test]
    fn inner_rejects_mismatched_geometry() {
        let a = ScalarGrid::zeros(GridGeometry::line(3).unwrap());
        let b = ScalarGrid::zeros(GridGeometry::line(4).unwrap());
        assert!(a.inner(&b).is_err());
    }

    #[test]
    fn tensor_requires_2d() {
        let g1 = GridGeometry::line(4).unwrap();
        assert!(SymTensorGrid::zeros(g1).is_err());
    }

    #[test]
    fn pointwise_norm_vector_345() {
        let g = GridGeometry::rect(2, 3).unwrap();
        let n = g.num_nodes();
        let p = VectorGrid::from_components(g, vec![vec![3.0; n], vec![4.0; n]]).unwrap();
        let norms = p.pointwise_norm();
        assert!(norms.values().iter().all(|&v| (v - 5.0).abs() < 1e-15));
    }

    #[test]
    fn pointwise_norm_tensor_counts_xy_twice() {
        let g = GridGeometry::rect(2, 2).unwrap();
        let n = g.num_nodes();
        let q = SymTensorGrid::from_components(g, vec![1.0; n], vec![1.0; n], vec![1.0; n])
            .unwrap();
        let norms = q.pointwise_norm();
        assert!(norms.values().iter().all(|&v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn pointwise_norm_zero_iff_all_components_zero() {
        let g = GridGeometry::line(4).unwrap();
        let p = VectorGrid::from_components(
            g,
            vec![vec![0.0, 1.0, 0.0, 0.0]],
        )
        .unwrap();
        let norms = p.pointwise_norm();
        assert_eq!(norms.values()[0], 0.0);
        assert!(norms.values()[1] > 0.0);
    }
}
