//! Uniform cell-centered rasters and the terrain quantities defined on them.
//!
//! Cell `(i, j)` holds the value sampled at
//! `(x0 + (i + 0.5) dx, y0 + (j + 0.5) dy)`; `i` runs west to east and `j`
//! runs south to north. Values are stored row-major with `i` fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a uniform rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3x3 cells, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "cell spacings must be positive and finite, got dx={dx}, dy={dy}"
            )));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self {
            nx,
            ny,
            x0,
            y0,
            dx,
            dy,
        })
    }

    /// Grid of `nx` x `ny` cells exactly covering `[xmin, xmax] x [ymin, ymax]`.
    pub fn from_extent(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid("cell counts must be positive".into()));
        }
        Self::new(
            nx,
            ny,
            x.0,
            y.0,
            (x.1 - x.0) / nx as f64,
            (y.1 - y.0) / ny as f64,
        )
    }

    /// Total number of cells `N`.
    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.dy
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.nx as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + self.ny as f64 * self.dy
    }

    /// Cell containing `(x, y)`, clamped to the grid.
    pub fn nearest_cell(&self, x: f64, y: f64) -> (usize, usize) {
        let clamp = |v: f64, n: usize| -> usize {
            if v <= 0.0 {
                0
            } else {
                (v as usize).min(n - 1)
            }
        };
        (
            clamp(((x - self.x0) / self.dx).floor(), self.nx),
            clamp(((y - self.y0) / self.dy).floor(), self.ny),
        )
    }

    /// Structural equality with a relative tolerance on the real-valued fields.
    pub fn matches(&self, other: &GridSpec) -> bool {
        let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-9 * scale.max(1.0);
        let scale = self.dx.max(self.dy) * (self.nx.max(self.ny) as f64);
        self.nx == other.nx
            && self.ny == other.ny
            && close(self.x0, other.x0, scale)
            && close(self.y0, other.y0, scale)
            && close(self.dx, other.dx, self.dx)
            && close(self.dy, other.dy, self.dy)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {}x{} grid vs {}x{} grid",
                self.nx, self.ny, other.nx, other.ny
            )))
        }
    }
}

/// A real value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value at cell ({}, {})",
                k % grid.nx,
                k / grid.nx
            )));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without validating finiteness; callers guarantee it.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Self::from_raw(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Burnt (`phi >= 0`) indicator per cell.
    pub fn burnt_mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v >= 0.0).collect()
    }

    pub fn burnt_count(&self) -> usize {
        self.values.iter().filter(|&&v| v >= 0.0).count()
    }

    /// First non-finite cell, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k % self.grid.nx, k / self.grid.nx))
    }
}

/// Fuel category of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fuel {
    A,
    B,
}

impl Fuel {
    pub fn from_label(label: i64) -> Option<Fuel> {
        match label {
            0 => Some(Fuel::A),
            1 => Some(Fuel::B),
            _ => None,
        }
    }

    pub fn label(self) -> u8 {
        match self {
            Fuel::A => 0,
            Fuel::B => 1,
        }
    }
}

/// Per-cell fuel category.
#[derive(Debug, Clone, PartialEq)]
pub struct FuelMap {
    grid: GridSpec,
    labels: Vec<Fuel>,
}

impl FuelMap {
    pub fn new(grid: GridSpec, labels: Vec<Fuel>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} fuel labels, got {}",
                grid.len(),
                labels.len()
            )));
        }
        Ok(Self { grid, labels })
    }

    pub fn uniform(grid: GridSpec, fuel: Fuel) -> Self {
        Self {
            grid,
            labels: vec![fuel; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Fuel) -> Self {
        let mut labels = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                labels.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, labels }
    }

    /// Nearest-neighbor resampling of this map onto `target`.
    pub fn resample(&self, target: GridSpec) -> Self {
        if self.grid.matches(&target) {
            return Self {
                grid: target,
                labels: self.labels.clone(),
            };
        }
        Self::from_fn(target, |x, y| {
            let (i, j) = self.grid.nearest_cell(x, y);
            self.labels[self.grid.index(i, j)]
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn labels(&self) -> &[Fuel] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Fuel {
        self.labels[self.grid.index(i, j)]
    }
}

/// Spatially and temporally constant wind vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wind {
    pub ux: f64,
    pub uy: f64,
}

impl Wind {
    pub const CALM: Wind = Wind { ux: 0.0, uy: 0.0 };

    pub fn new(ux: f64, uy: f64) -> Self {
        Self { ux, uy }
    }

    /// Wind of magnitude `speed` blowing toward compass `heading_deg`
    /// (0 = north, 90 = east).
    pub fn from_heading(speed: f64, heading_deg: f64) -> Self {
        let h = heading_deg.to_radians();
        Self {
            ux: speed * h.sin(),
            uy: speed * h.cos(),
        }
    }

    #[inline]
    pub fn speed(&self) -> f64 {
        self.ux.hypot(self.uy)
    }

    pub fn reversed(&self) -> Self {
        Self {
            ux: -self.ux,
            uy: -self.uy,
        }
    }
}

/// Gradient of `z` by central differences at interior cells and first-order
/// one-sided differences on the boundary rows and columns.
pub fn gradient(z: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    let g = *z.grid();
    if g.nx < 3 || g.ny < 3 {
        return Err(Error::InvalidGrid(format!(
            "gradient needs at least 3x3 cells, got {}x{}",
            g.nx, g.ny
        )));
    }
    let v = z.values();
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        let row = j * nx;
        gx[row] = (v[row + 1] - v[row]) / g.dx;
        for i in 1..nx - 1 {
            gx[row + i] = (v[row + i + 1] - v[row + i - 1]) / (2.0 * g.dx);
        }
        gx[row + nx - 1] = (v[row + nx - 1] - v[row + nx - 2]) / g.dx;
    }
    for i in 0..nx {
        gy[i] = (v[nx + i] - v[i]) / g.dy;
        for j in 1..ny - 1 {
            gy[j * nx + i] = (v[(j + 1) * nx + i] - v[(j - 1) * nx + i]) / (2.0 * g.dy);
        }
        gy[(ny - 1) * nx + i] = (v[(ny - 1) * nx + i] - v[(ny - 2) * nx + i]) / g.dy;
    }
    Ok((ScalarField::from_raw(g, gx), ScalarField::from_raw(g, gy)))
}

/// Elevation gradient `(dz/dx, dz/dy)`.
pub fn elevation_gradient(z: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    gradient(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> GridSpec {
        GridSpec::from_extent(n, n, (-1.0, 1.0), (-1.0, 1.0)).unwrap()
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridSpec::new(2, 5, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(5, 5, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(GridSpec::new(5, 5, 0.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn cell_centers() {
        let g = GridSpec::new(4, 3, 10.0, 20.0, 2.0, 0.5).unwrap();
        assert_eq!(g.center(0, 0), (11.0, 20.25));
        assert_eq!(g.center(3, 2), (17.0, 21.25));
        assert_eq!(g.nearest_cell(11.9, 20.9), (0, 1));
        assert_eq!(g.nearest_cell(-100.0, 100.0), (0, 2));
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = grid(9);
        let z = ScalarField::from_fn(g, |x, _| 2.0 * x);
        let (gx, gy) = elevation_gradient(&z).unwrap();
        for k in 0..g.len() {
            assert_abs_diff_eq!(gx.values()[k], 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(gy.values()[k], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let z = ScalarField::constant(grid(5), 3.5);
        let (gx, gy) = elevation_gradient(&z).unwrap();
        assert!(gx.values().iter().chain(gy.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_parabola_uses_stencils() {
        // centers at x = 0, 0.25, 0.5, 0.75, 1
        let g = GridSpec::new(5, 5, -0.125, -0.125, 0.25, 0.25).unwrap();
        let z = ScalarField::from_fn(g, |x, _| x * x);
        let (gx, _) = elevation_gradient(&z).unwrap();
        assert_abs_diff_eq!(gx.get(2, 2), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gx.get(0, 2), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(gx.get(4, 2), 1.75, epsilon = 1e-14);
    }

    #[test]
    fn fuel_resampling_is_nearest_neighbor() {
        let coarse = GridSpec::from_extent(4, 4, (0.0, 4.0), (0.0, 4.0)).unwrap();
        let fine = GridSpec::from_extent(8, 8, (0.0, 4.0), (0.0, 4.0)).unwrap();
        let map = FuelMap::from_fn(coarse, |x, _| if x < 2.0 { Fuel::A } else { Fuel::B });
        let r = map.resample(fine);
        for j in 0..8 {
            for i in 0..8 {
                let want = if i < 4 { Fuel::A } else { Fuel::B };
                assert_eq!(r.get(i, j), want);
            }
        }
    }

    #[test]
    fn wind_heading() {
        let w = Wind::from_heading(2.0, 90.0);
        assert_abs_diff_eq!(w.ux, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.uy, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(Wind::new(3.0, 4.0).speed(), 5.0);
    }

    #[test]
    fn scalar_field_rejects_nan() {
        let g = grid(3);
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(ScalarField::new(g, v).is_err());
        assert!(ScalarField::new(g, vec![0.0; 8]).is_err());
    }
}
