//! Complete simulation input: terrain, fuel, wind, initial front and
//! sampling times.

use crate::error::{Error, Result};
use crate::grid::{FuelMap, GridSpec, ScalarField, Wind};
use crate::solver::SolverConfig;

/// Relative tolerance on `dt` dividing the time span.
const DIVIDES_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub grid: GridSpec,
    pub elevation: ScalarField,
    pub fuel: FuelMap,
    pub wind: Wind,
    /// Level set at `t0`, positive inside the burnt region.
    pub initial_phi: ScalarField,
    pub t0: f64,
    pub tf: f64,
    /// Sampling interval of the snapshots.
    pub dt: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.tf.is_finite() && self.t0 < self.tf) {
            return Err(Error::Scenario(format!(
                "time.t0 must be less than time.tf (got {} and {})",
                self.t0, self.tf
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Scenario(format!(
                "time.dt must be positive, got {}",
                self.dt
            )));
        }
        let k = (self.tf - self.t0) / self.dt;
        if (k - k.round()).abs() > DIVIDES_TOL * k.max(1.0) || k.round() < 1.0 {
            return Err(Error::Scenario(format!(
                "time.dt = {} does not divide tf - t0 = {}",
                self.dt,
                self.tf - self.t0
            )));
        }
        self.grid.ensure_same(self.elevation.grid(), "elevation")?;
        self.grid.ensure_same(self.fuel.grid(), "fuel")?;
        self.grid
            .ensure_same(self.initial_phi.grid(), "initial front")?;
        if !(self.wind.ux.is_finite() && self.wind.uy.is_finite()) {
            return Err(Error::Scenario("wind components must be finite".into()));
        }
        let burnt = self.initial_phi.burnt_count();
        if burnt == 0 || burnt == self.grid.len() {
            return Err(Error::NoFront(
                "initial level set must have both burnt and unburnt cells".into(),
            ));
        }
        Ok(())
    }

    /// Number of sampling intervals in `[t0, tf]`.
    pub fn steps(&self) -> usize {
        ((self.tf - self.t0) / self.dt).round() as usize
    }

    /// `t0 + k dt` for `k = 1..=K`; the last entry is exactly `tf`.
    pub fn sampling_times(&self) -> Vec<f64> {
        let k = self.steps();
        (1..=k)
            .map(|i| {
                if i == k {
                    self.tf
                } else {
                    self.t0 + i as f64 * self.dt
                }
            })
            .collect()
    }

    /// Default solver settings recording every sampling time.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(self.sampling_times())
    }
}
