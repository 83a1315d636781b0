//! Empirical rate of spread and its extension to every level set of `phi`.
//!
//! Head (`theta <= pi/2`):  `eps + a sqrt(U cos^n theta) + eps psi cos gamma`
//! Rear (`theta > pi/2`):   `eps (alpha + (1 - alpha)|sin theta|) + eps psi cos gamma`
//! with `psi = 5.275 beta^-0.3 tan^2 chi`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{elevation_gradient, Fuel, FuelMap, ScalarField, Wind};

/// Gradients below this magnitude are treated as degenerate.
pub const GRAD_EPS: f64 = 1e-9;

const SLOPE_COEFF: f64 = 5.275;
const SLOPE_EXP: f64 = -0.3;

/// The eight unknown spread parameters, ordered
/// `(n, eps_A, eps_B, a_A, a_B, alpha, beta_A, beta_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub n: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub a_a: f64,
    pub a_b: f64,
    pub alpha: f64,
    pub beta_a: f64,
    pub beta_b: f64,
}

pub const PARAM_NAMES: [&str; 8] = [
    "n", "eps_a", "eps_b", "a_a", "a_b", "alpha", "beta_a", "beta_b",
];

impl ParamVector {
    pub const DIM: usize = 8;

    pub fn from_array(p: [f64; 8]) -> Self {
        Self {
            n: p[0],
            eps_a: p[1],
            eps_b: p[2],
            a_a: p[3],
            a_b: p[4],
            alpha: p[5],
            beta_a: p[6],
            beta_b: p[7],
        }
    }

    pub fn from_slice(p: &[f64]) -> Result<Self> {
        let arr: [f64; 8] = p.try_into().map_err(|_| Error::InvalidParameter {
            name: "p",
            reason: format!("expected 8 components, got {}", p.len()),
        })?;
        Ok(Self::from_array(arr))
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.n,
            self.eps_a,
            self.eps_b,
            self.a_a,
            self.a_b,
            self.alpha,
            self.beta_a,
            self.beta_b,
        ]
    }

    /// Same `(eps, a, beta)` for both fuels.
    pub fn uniform(n: f64, eps: f64, a: f64, alpha: f64, beta: f64) -> Self {
        Self::from_array([n, eps, eps, a, a, alpha, beta, beta])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in PARAM_NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("non-finite value {v}"),
                });
            }
        }
        let nonneg = [
            ("n", self.n),
            ("eps_a", self.eps_a),
            ("eps_b", self.eps_b),
            ("a_a", self.a_a),
            ("a_b", self.a_b),
        ];
        for (name, v) in nonneg {
            if v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be >= 0, got {v}"),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in [0, 1], got {}", self.alpha),
            });
        }
        for (name, v) in [("beta_a", self.beta_a), ("beta_b", self.beta_b)] {
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn local(&self, fuel: Fuel) -> LocalParams {
        let (eps, a, beta) = match fuel {
            Fuel::A => (self.eps_a, self.a_a, self.beta_a),
            Fuel::B => (self.eps_b, self.a_b, self.beta_b),
        };
        LocalParams {
            n: self.n,
            eps,
            a,
            alpha: self.alpha,
            beta,
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Parameters seen by a single cell once its fuel is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalParams {
    pub n: f64,
    pub eps: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Angles entering the rate of spread at one point of the front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadGeometry {
    /// Angle between outward normal and wind, in `[0, pi]`.
    pub theta: f64,
    /// Angle between elevation gradient and outward normal, in `[0, pi]`.
    pub gamma: f64,
    /// Terrain slope `|grad z|`.
    pub tan_chi: f64,
}

impl SpreadGeometry {
    pub fn flat(theta: f64) -> Self {
        Self {
            theta,
            gamma: 0.0,
            tan_chi: 0.0,
        }
    }
}

/// `psi = 5.275 beta^-0.3 tan_chi^2`.
pub fn slope_factor(beta: f64, tan_chi: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: format!("packing ratio must be > 0, got {beta}"),
        });
    }
    if !(tan_chi >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tan_chi",
            reason: format!("slope must be >= 0, got {tan_chi}"),
        });
    }
    Ok(psi(beta, tan_chi))
}

#[inline]
fn psi(beta: f64, tan_chi: f64) -> f64 {
    SLOPE_COEFF * beta.powf(SLOPE_EXP) * tan_chi * tan_chi
}

/// Rate of spread for one cell, floored at zero.
pub fn rate_of_spread(p: &LocalParams, wind_speed: f64, geom: &SpreadGeometry) -> f64 {
    let slope = p.eps * psi(p.beta, geom.tan_chi) * geom.gamma.cos();
    if geom.theta <= std::f64::consts::FRAC_PI_2 {
        head_or_rear(p, wind_speed, geom.theta.cos().clamp(0.0, 1.0), true, slope)
    } else {
        let sin = geom.theta.sin().abs();
        (p.eps * (p.alpha + (1.0 - p.alpha) * sin) + slope).max(0.0)
    }
}

/// Branch evaluation from `cos theta`; `head` selects the first branch.
#[inline]
fn head_or_rear(p: &LocalParams, wind_speed: f64, cos_theta: f64, head: bool, slope: f64) -> f64 {
    let f = if head {
        let c = cos_theta.clamp(0.0, 1.0);
        p.eps + p.a * (wind_speed * c.powf(p.n)).sqrt() + slope
    } else {
        let sin = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        p.eps * (p.alpha + (1.0 - p.alpha) * sin) + slope
    };
    f.max(0.0)
}

/// Precomputed terrain, fuel and wind for evaluating speed fields repeatedly
/// under one parameter vector.
#[derive(Debug, Clone)]
pub struct SpreadModel {
    local: Vec<LocalParams>,
    /// `eps * psi` per cell.
    slope_gain: Vec<f64>,
    /// Unit elevation gradient per cell; zero where the terrain is flat.
    slope_dir: Vec<(f64, f64)>,
    wind_dir: (f64, f64),
    wind_speed: f64,
}

impl SpreadModel {
    pub fn new(z: &ScalarField, fuel: &FuelMap, wind: Wind, p: &ParamVector) -> Result<Self> {
        p.validate()?;
        z.grid().ensure_same(fuel.grid(), "elevation vs fuel map")?;
        let (gx, gy) = elevation_gradient(z)?;
        let n = z.grid().len();
        let mut local = Vec::with_capacity(n);
        let mut slope_gain = Vec::with_capacity(n);
        let mut slope_dir = Vec::with_capacity(n);
        let pa = p.local(Fuel::A);
        let pb = p.local(Fuel::B);
        for k in 0..n {
            let lp = match fuel.labels()[k] {
                Fuel::A => pa,
                Fuel::B => pb,
            };
            let (sx, sy) = (gx.values()[k], gy.values()[k]);
            let tan_chi = sx.hypot(sy);
            if tan_chi < GRAD_EPS {
                slope_gain.push(0.0);
                slope_dir.push((0.0, 0.0));
            } else {
                slope_gain.push(lp.eps * psi(lp.beta, tan_chi));
                slope_dir.push((sx / tan_chi, sy / tan_chi));
            }
            local.push(lp);
        }
        let wind_speed = wind.speed();
        let wind_dir = if wind_speed > 0.0 {
            (wind.ux / wind_speed, wind.uy / wind_speed)
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            local,
            slope_gain,
            slope_dir,
            wind_dir,
            wind_speed,
        })
    }

    /// Speed at cell `k` given the outward unit normal, or `None` when the
    /// normal is undefined.
    #[inline]
    pub fn speed_at(&self, k: usize, normal: Option<(f64, f64)>) -> f64 {
        let lp = &self.local[k];
        let (cos_theta, cos_gamma) = match normal {
            Some((nx, ny)) => {
                let ct = if self.wind_speed > 0.0 {
                    (nx * self.wind_dir.0 + ny * self.wind_dir.1).clamp(-1.0, 1.0)
                } else {
                    1.0
                };
                let (sx, sy) = self.slope_dir[k];
                (ct, (nx * sx + ny * sy).clamp(-1.0, 1.0))
            }
            None => (1.0, 1.0),
        };
        let slope = self.slope_gain[k] * cos_gamma;
        head_or_rear(lp, self.wind_speed, cos_theta, cos_theta >= 0.0, slope)
    }

    /// Evaluates the speed at every cell of `phi` into `out`.
    pub fn fill(&self, phi: &ScalarField, out: &mut [f64]) {
        let g = phi.grid();
        let v = phi.values();
        let (nx, ny) = (g.nx, g.ny);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let px = if i == 0 {
                    (v[k + 1] - v[k]) / g.dx
                } else if i == nx - 1 {
                    (v[k] - v[k - 1]) / g.dx
                } else {
                    (v[k + 1] - v[k - 1]) / (2.0 * g.dx)
                };
                let py = if j == 0 {
                    (v[k + nx] - v[k]) / g.dy
                } else if j == ny - 1 {
                    (v[k] - v[k - nx]) / g.dy
                } else {
                    (v[k + nx] - v[k - nx]) / (2.0 * g.dy)
                };
                let m = px.hypot(py);
                // phi is positive inside, so the outward normal is -grad phi
                let normal = (m >= GRAD_EPS).then(|| (-px / m, -py / m));
                out[k] = self.speed_at(k, normal);
            }
        }
    }
}

/// Rate of spread at every cell for the given front and environment.
pub fn speed_field(
    phi: &ScalarField,
    z: &ScalarField,
    fuel: &FuelMap,
    wind: Wind,
    p: &ParamVector,
) -> Result<ScalarField> {
    phi.grid().ensure_same(z.grid(), "phi vs elevation")?;
    let model = SpreadModel::new(z, fuel, wind, p)?;
    let mut out = vec![0.0; phi.grid().len()];
    model.fill(phi, &mut out);
    Ok(ScalarField::from_raw(*phi.grid(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::signed_distance_from_circle;
    use crate::grid::GridSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn lp() -> LocalParams {
        LocalParams {
            n: 3.0,
            eps: 0.4,
            a: 0.5,
            alpha: 0.5,
            beta: 0.02,
        }
    }

    #[test]
    fn slope_factor_values() {
        // 5.275 * 0.02^-0.3 * 0.01
        let expected = 5.275 * (0.3 * 50.0_f64.ln()).exp() * 0.01;
        assert_abs_diff_eq!(slope_factor(0.02, 0.1).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(slope_factor(0.02, 0.1).unwrap(), 0.17066, epsilon = 1e-4);
        assert_eq!(slope_factor(0.3, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(slope_factor(1.0, 1.0).unwrap(), 5.275, epsilon = 1e-15);
        assert!(slope_factor(0.0, 0.1).is_err());
        assert!(slope_factor(-1.0, 0.1).is_err());
    }

    #[test]
    fn head_rear_flank() {
        let p = lp();
        assert_abs_diff_eq!(
            rate_of_spread(&p, 1.0, &SpreadGeometry::flat(0.0)),
            0.9,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            rate_of_spread(&p, 1.0, &SpreadGeometry::flat(PI)),
            0.2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            rate_of_spread(&p, 1.0, &SpreadGeometry::flat(FRAC_PI_2)),
            0.4,
            epsilon = 1e-12
        );
        let just_past = FRAC_PI_2 + 1e-12;
        assert_abs_diff_eq!(
            rate_of_spread(&p, 1.0, &SpreadGeometry::flat(just_past)),
            0.4,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            rate_of_spread(&p, 0.0, &SpreadGeometry::flat(0.0)),
            0.4,
            epsilon = 1e-15
        );
    }

    #[test]
    fn uphill_minus_downhill() {
        let p = lp();
        let up = SpreadGeometry {
            theta: 0.0,
            gamma: 0.0,
            tan_chi: 0.1,
        };
        let down = SpreadGeometry { gamma: PI, ..up };
        let psi = slope_factor(p.beta, 0.1).unwrap();
        let diff = rate_of_spread(&p, 0.0, &up) - rate_of_spread(&p, 0.0, &down);
        assert_abs_diff_eq!(diff, 2.0 * p.eps * psi, epsilon = 1e-14);
    }

    #[test]
    fn steep_descent_is_clamped() {
        let p = lp();
        let g = SpreadGeometry {
            theta: PI,
            gamma: PI,
            tan_chi: 2.0,
        };
        assert_eq!(rate_of_spread(&p, 3.0, &g), 0.0);
    }

    fn admissible() -> impl Strategy<Value = LocalParams> {
        (
            0.0f64..5.0,
            0.0f64..3.0,
            0.0f64..3.0,
            0.0f64..=1.0,
            0.001f64..0.2,
        )
            .prop_map(|(n, eps, a, alpha, beta)| LocalParams {
                n,
                eps,
                a,
                alpha,
                beta,
            })
    }

    proptest! {
        #[test]
        fn continuous_at_flank(mut p in admissible(), n in 1.0f64..5.0, u in 0.0f64..10.0) {
            // cos^n vanishes at the flank only for n > 0
            p.n = n;
            let below = rate_of_spread(&p, u, &SpreadGeometry::flat(FRAC_PI_2 - 1e-9));
            let above = rate_of_spread(&p, u, &SpreadGeometry::flat(FRAC_PI_2 + 1e-9));
            prop_assert!((below - above).abs() < 1e-4 * (1.0 + p.a * u.sqrt()));
        }

        #[test]
        fn non_increasing_over_head(p in admissible(), u in 0.0f64..10.0, t1 in 0.0f64..FRAC_PI_2, t2 in 0.0f64..FRAC_PI_2) {
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let f_lo = rate_of_spread(&p, u, &SpreadGeometry::flat(lo));
            let f_hi = rate_of_spread(&p, u, &SpreadGeometry::flat(hi));
            prop_assert!(f_lo + 1e-12 >= f_hi);
        }

        #[test]
        fn head_monotone_in_wind_and_coupling(p in admissible(), u in 0.0f64..10.0, du in 0.0f64..5.0, da in 0.0f64..2.0) {
            let head = SpreadGeometry::flat(0.0);
            let base = rate_of_spread(&p, u, &head);
            prop_assert!(rate_of_spread(&p, u + du, &head) >= base);
            let q = LocalParams { a: p.a + da, ..p };
            prop_assert!(rate_of_spread(&q, u, &head) >= base);
            let rear = SpreadGeometry::flat(PI);
            prop_assert!((rate_of_spread(&p, u, &rear) - p.eps * p.alpha).abs() < 1e-12);
            prop_assert!((rate_of_spread(&q, u + du, &rear) - p.eps * p.alpha).abs() < 1e-12);
        }

        #[test]
        fn cosine_path_matches_angles(p in admissible(), u in 0.0f64..5.0, theta in 0.0f64..PI, gamma in 0.0f64..PI, tan_chi in 0.0f64..1.0) {
            let geom = SpreadGeometry { theta, gamma, tan_chi };
            let slope = p.eps * psi(p.beta, tan_chi) * gamma.cos();
            let ct = theta.cos();
            let fast = head_or_rear(&p, u, ct, theta <= FRAC_PI_2, slope);
            prop_assert!((fast - rate_of_spread(&p, u, &geom)).abs() < 1e-9);
        }

        #[test]
        fn flat_terrain_never_clamped(p in admissible(), u in 0.0f64..10.0, theta in 0.0f64..PI) {
            let f = rate_of_spread(&p, u, &SpreadGeometry::flat(theta));
            prop_assert!(f >= p.eps * p.alpha.min(1.0) - 1e-12);
        }
    }

    fn circle_setup(n: usize) -> (GridSpec, ScalarField, ScalarField, FuelMap) {
        let g = GridSpec::from_extent(n, n, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let phi = signed_distance_from_circle(g, (0.0, 0.0), 0.5).unwrap();
        (
            g,
            phi,
            ScalarField::constant(g, 0.0),
            FuelMap::uniform(g, Fuel::A),
        )
    }

    #[test]
    fn calm_flat_uniform_is_constant() {
        let (_, phi, z, fuel) = circle_setup(41);
        let p = ParamVector::uniform(3.0, 0.4, 0.5, 0.5, 0.02);
        let f = speed_field(&phi, &z, &fuel, Wind::CALM, &p).unwrap();
        assert!(f.values().iter().all(|&v| (v - 0.4).abs() < 1e-15));
    }

    #[test]
    fn circle_orientation_under_east_wind() {
        // 41 cells on [-1, 1]: center column is i = 20
        let (g, phi, z, fuel) = circle_setup(41);
        let p = ParamVector::uniform(3.0, 0.4, 0.5, 0.5, 0.02);
        let f = speed_field(&phi, &z, &fuel, Wind::new(1.0, 0.0), &p).unwrap();
        let j = 20;
        let east = g.nearest_cell(0.5, 0.0).0;
        let west = g.nearest_cell(-0.5, 0.0).0;
        assert_abs_diff_eq!(f.get(east, j), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(f.get(west, j), 0.2, epsilon = 1e-12);
        let north = g.nearest_cell(0.0, 0.5).1;
        assert_abs_diff_eq!(f.get(20, north), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn uphill_cell_faster_than_downhill_cell() {
        let (g, phi, _, fuel) = circle_setup(41);
        // elevation rising to the east: east side of the circle goes uphill
        let z = ScalarField::from_fn(g, |x, _| 0.1 * x);
        let p = ParamVector::uniform(3.0, 0.4, 0.5, 0.5, 0.02);
        let f = speed_field(&phi, &z, &fuel, Wind::CALM, &p).unwrap();
        let east = g.nearest_cell(0.5, 0.0).0;
        let west = g.nearest_cell(-0.5, 0.0).0;
        let psi = slope_factor(0.02, 0.1).unwrap();
        assert_abs_diff_eq!(
            f.get(east, 20) - f.get(west, 20),
            2.0 * 0.4 * psi,
            epsilon = 1e-10
        );
    }

    #[test]
    fn fuel_specific_parameters() {
        let g = GridSpec::from_extent(21, 21, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let phi = signed_distance_from_circle(g, (0.0, 0.0), 0.5).unwrap();
        let fuel = FuelMap::from_fn(g, |x, _| if x < 0.0 { Fuel::A } else { Fuel::B });
        let p = ParamVector::from_array([3.0, 0.8, 0.4, 0.7, 0.4, 0.5, 0.03, 0.08]);
        let f = speed_field(&phi, &ScalarField::constant(g, 0.0), &fuel, Wind::CALM, &p).unwrap();
        assert_abs_diff_eq!(f.get(2, 10), 0.8);
        assert_abs_diff_eq!(f.get(18, 10), 0.4);
    }

    #[test]
    fn degenerate_gradient_falls_back_to_head() {
        let g = GridSpec::from_extent(5, 5, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let phi = ScalarField::constant(g, 1.0);
        let p = ParamVector::uniform(3.0, 0.4, 0.5, 0.5, 0.02);
        let f = speed_field(
            &phi,
            &ScalarField::constant(g, 0.0),
            &FuelMap::uniform(g, Fuel::A),
            Wind::new(1.0, 0.0),
            &p,
        )
        .unwrap();
        assert!(f.values().iter().all(|&v| (v - 0.9).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = ParamVector::uniform(3.0, 0.4, 0.5, 0.5, 0.02);
        assert!(p.validate().is_ok());
        p.beta_b = 0.0;
        assert!(p.validate().is_err());
        p.beta_b = 0.1;
        p.alpha = 1.5;
        assert!(p.validate().is_err());
        assert!(ParamVector::from_slice(&[1.0; 7]).is_err());
    }
}
