//! Third-order ENO one-sided derivatives.
//!
//! Each grid line is padded with three ghost values per side by linear
//! extrapolation, so linear data stays exact up to the boundary.

use crate::grid::{GridSpec, ScalarField};

const GHOSTS: usize = 3;

/// Left- and right-biased derivative approximations per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct UpwindDerivatives {
    pub dx_minus: ScalarField,
    pub dx_plus: ScalarField,
    pub dy_minus: ScalarField,
    pub dy_plus: ScalarField,
}

/// ENO3 approximations of `d phi/dx` and `d phi/dy` from both sides.
pub fn eno3_derivatives(phi: &ScalarField) -> UpwindDerivatives {
    let g = *phi.grid();
    let mut ws = Eno3Workspace::new(&g);
    let n = g.len();
    let (mut xm, mut xp, mut ym, mut yp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    ws.compute(phi.values(), &mut xm, &mut xp, &mut ym, &mut yp);
    UpwindDerivatives {
        dx_minus: ScalarField::from_raw(g, xm),
        dx_plus: ScalarField::from_raw(g, xp),
        dy_minus: ScalarField::from_raw(g, ym),
        dy_plus: ScalarField::from_raw(g, yp),
    }
}

/// Reusable scratch space for repeated derivative evaluations on one grid.
#[derive(Debug, Clone)]
pub(crate) struct Eno3Workspace {
    grid: GridSpec,
    ext: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
    minus: Vec<f64>,
    plus: Vec<f64>,
}

impl Eno3Workspace {
    pub(crate) fn new(grid: &GridSpec) -> Self {
        let m = grid.nx.max(grid.ny) + 2 * GHOSTS;
        Self {
            grid: *grid,
            ext: vec![0.0; m],
            d1: vec![0.0; m],
            d2: vec![0.0; m],
            d3: vec![0.0; m],
            minus: vec![0.0; m],
            plus: vec![0.0; m],
        }
    }

    pub(crate) fn compute(
        &mut self,
        phi: &[f64],
        dx_minus: &mut [f64],
        dx_plus: &mut [f64],
        dy_minus: &mut [f64],
        dy_plus: &mut [f64],
    ) {
        let GridSpec { nx, ny, dx, dy, .. } = self.grid;
        for j in 0..ny {
            let row = &phi[j * nx..(j + 1) * nx];
            self.line(row.iter().copied(), nx, dx);
            dx_minus[j * nx..(j + 1) * nx].copy_from_slice(&self.minus[..nx]);
            dx_plus[j * nx..(j + 1) * nx].copy_from_slice(&self.plus[..nx]);
        }
        for i in 0..nx {
            self.line((0..ny).map(|j| phi[j * nx + i]), ny, dy);
            for j in 0..ny {
                dy_minus[j * nx + i] = self.minus[j];
                dy_plus[j * nx + i] = self.plus[j];
            }
        }
    }

    fn line(&mut self, values: impl Iterator<Item = f64>, n: usize, h: f64) {
        let len = n + 2 * GHOSTS;
        let ext = &mut self.ext[..len];
        for (k, v) in values.enumerate() {
            ext[GHOSTS + k] = v;
        }
        let first = ext[GHOSTS];
        let last = ext[GHOSTS + n - 1];
        let slope_lo = ext[GHOSTS + 1] - first;
        let slope_hi = last - ext[GHOSTS + n - 2];
        for m in 1..=GHOSTS {
            ext[GHOSTS - m] = first - m as f64 * slope_lo;
            ext[GHOSTS + n - 1 + m] = last + m as f64 * slope_hi;
        }

        // d1[k] ~ D1 at k+1/2, d2[k] ~ D2 at k, d3[k] ~ D3 at k+1/2
        let d1 = &mut self.d1[..len];
        for k in 0..len - 1 {
            d1[k] = (ext[k + 1] - ext[k]) / h;
        }
        let d2 = &mut self.d2[..len];
        for k in 1..len - 1 {
            d2[k] = (d1[k] - d1[k - 1]) / (2.0 * h);
        }
        let d3 = &mut self.d3[..len];
        for k in 1..len - 2 {
            d3[k] = (d2[k + 1] - d2[k]) / (3.0 * h);
        }

        for i in 0..n {
            let p = i + GHOSTS;
            self.minus[i] = eno3_at(d1, d2, d3, p, p - 1, h);
            self.plus[i] = eno3_at(d1, d2, d3, p, p, h);
        }
    }
}

/// ENO3 derivative at point `p` starting from the first divided difference
/// at `k + 1/2` (`k = p - 1` for the left-biased, `k = p` for the right).
#[inline]
fn eno3_at(d1: &[f64], d2: &[f64], d3: &[f64], p: usize, k: usize, h: f64) -> f64 {
    let q1 = d1[k];
    let (c2, kstar) = if d2[k].abs() <= d2[k + 1].abs() {
        (d2[k], k - 1)
    } else {
        (d2[k + 1], k)
    };
    let s = p as f64 - k as f64;
    let q2 = c2 * (2.0 * s - 1.0) * h;
    let c3 = if d3[kstar].abs() <= d3[kstar + 1].abs() {
        d3[kstar]
    } else {
        d3[kstar + 1]
    };
    let t = p as f64 - kstar as f64;
    let q3 = c3 * (3.0 * t * t - 6.0 * t + 2.0) * h * h;
    q1 + q2 + q3
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> GridSpec {
        GridSpec::from_extent(n, 9, (-1.0, 1.0), (-1.0, 1.0)).unwrap()
    }

    #[test]
    fn exact_on_linear_data() {
        let g = grid(17);
        let phi = ScalarField::from_fn(g, |x, y| 1.5 * x - 0.25 * y + 3.0);
        let d = eno3_derivatives(&phi);
        for k in 0..g.len() {
            assert_abs_diff_eq!(d.dx_minus.values()[k], 1.5, epsilon = 1e-12);
            assert_abs_diff_eq!(d.dx_plus.values()[k], 1.5, epsilon = 1e-12);
            assert_abs_diff_eq!(d.dy_minus.values()[k], -0.25, epsilon = 1e-12);
            assert_abs_diff_eq!(d.dy_plus.values()[k], -0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_on_cubic_interior() {
        let g = grid(21);
        let phi = ScalarField::from_fn(g, |x, _| x * x * x - x * x + 0.5 * x);
        let d = eno3_derivatives(&phi);
        for j in 0..g.ny {
            for i in 4..g.nx - 4 {
                let x = g.x(i);
                let exact = 3.0 * x * x - 2.0 * x + 0.5;
                assert_abs_diff_eq!(d.dx_minus.get(i, j), exact, epsilon = 1e-10);
                assert_abs_diff_eq!(d.dx_plus.get(i, j), exact, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn third_order_on_smooth_data() {
        let err = |n: usize| {
            let g = GridSpec::from_extent(n, 5, (0.0, 1.0), (0.0, 1.0)).unwrap();
            let phi = ScalarField::from_fn(g, |x, _| (3.0 * x).sin());
            let d = eno3_derivatives(&phi);
            (4..n - 4)
                .map(|i| (d.dx_minus.get(i, 2) - 3.0 * (3.0 * g.x(i)).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 6.0, "ratio {ratio}");
    }

    #[test]
    fn kink_is_bracketed_without_oscillation() {
        let g = grid(20);
        let h = g.dx;
        let phi = ScalarField::from_fn(g, |x, _| x.abs());
        let d = eno3_derivatives(&phi);
        for k in 0..g.len() {
            for v in [d.dx_minus.values()[k], d.dx_plus.values()[k]] {
                assert!(v >= -1.0 - h * h && v <= 1.0 + h * h, "value {v}");
            }
        }
        // cells either side of x = 0
        assert_abs_diff_eq!(d.dx_minus.get(9, 4), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.dx_plus.get(10, 4), 1.0, epsilon = 1e-12);
    }
}
