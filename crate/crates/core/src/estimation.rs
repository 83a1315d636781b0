//! Closed-loop parameter estimation: simulate, compare with measured fronts,
//! update the parameters by pattern search.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distance::signed_distance_from_mask;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::metrics::{cost_j, metric_report, relative_error, SnapshotMetrics};
use crate::scenario::Scenario;
use crate::search::{minimize, SearchConfig, SearchTrace, StopReason};
use crate::solver::{simulate, simulate_from, times_match, FrontSeries, SolverConfig, DEFAULT_CFL};
use crate::spread::ParamVector;

/// `+1` on burnt cells, `-1` elsewhere.
pub fn sign_raster(phi: &ScalarField) -> ScalarField {
    let values = phi
        .values()
        .iter()
        .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    ScalarField::from_raw(*phi.grid(), values)
}

/// Burnt/unburnt rasters of a simulation at `p_star`, one per sampling time
/// plus the start.
pub fn generate_synthetic_measurements(
    scenario: &Scenario,
    p_star: &ParamVector,
) -> Result<FrontSeries> {
    generate_synthetic_measurements_with(scenario, p_star, &scenario.solver_config())
}

pub fn generate_synthetic_measurements_with(
    scenario: &Scenario,
    p_star: &ParamVector,
    solver: &SolverConfig,
) -> Result<FrontSeries> {
    scenario.validate()?;
    let sim = simulate(scenario, p_star, solver)?;
    let mut out = FrontSeries::new();
    for s in sim.snapshots() {
        out.push(s.time, sign_raster(&s.phi))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub p_hat: ParamVector,
    pub j_final: u64,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    pub snapshots: Vec<SnapshotMetrics>,
    pub stop_reason: StopReason,
    pub evaluations: usize,
    pub wall_seconds: f64,
    pub trace: SearchTrace,
}

impl EstimationReport {
    /// Fills in the relative error against known true parameters.
    pub fn with_truth(mut self, p_star: &ParamVector) -> Result<Self> {
        self.e = Some(relative_error(&self.p_hat, p_star)?);
        Ok(self)
    }
}

fn check_times(scenario: &Scenario, measured: &FrontSeries, solver: &SolverConfig) -> Result<()> {
    let grid = measured
        .grid()
        .ok_or_else(|| Error::SnapshotMismatch("no measured snapshots".into()))?;
    scenario
        .grid
        .ensure_same(grid, "scenario vs measurements")?;
    for t in measured.times() {
        let known =
            times_match(t, scenario.t0) || solver.snapshot_times.iter().any(|&s| times_match(s, t));
        if !known {
            return Err(Error::SnapshotMismatch(format!(
                "measured time {t} is not a solver snapshot time"
            )));
        }
    }
    Ok(())
}

/// Minimizes the symmetric-difference cost between simulated and measured
/// fronts over `search`'s box. Failed simulations score `+inf`.
pub fn estimate(
    scenario: &Scenario,
    measured: &FrontSeries,
    search: &SearchConfig,
    solver: &SolverConfig,
) -> Result<EstimationReport> {
    if search.dim() != ParamVector::DIM {
        return Err(Error::InvalidParameter {
            name: "bounds",
            reason: format!(
                "expected {} dimensions, got {}",
                ParamVector::DIM,
                search.dim()
            ),
        });
    }
    scenario.validate()?;
    solver.validate()?;
    check_times(scenario, measured, solver)?;

    let started = Instant::now();
    let objective = |x: &[f64]| -> f64 {
        let p = ParamVector::from_slice(x).expect("dimension checked");
        match simulate(scenario, &p, solver).and_then(|sim| cost_j(&sim, measured)) {
            Ok(j) => j as f64,
            Err(e) => {
                log::debug!("objective failed at {x:?}: {e}");
                f64::INFINITY
            }
        }
    };
    let mut cfg = search.clone();
    if cfg.target.is_none() {
        cfg.target = Some(0.0);
    }
    let result = minimize(objective, &cfg)?;
    let p_hat = ParamVector::from_slice(&result.best_point)?;
    let sim = simulate(scenario, &p_hat, solver)?;
    let table = metric_report(&sim, measured, None)?;
    Ok(EstimationReport {
        p_hat,
        j_final: table.j,
        r: table.r,
        e: None,
        snapshots: table.snapshots,
        stop_reason: result.trace.status,
        evaluations: result.trace.evals(),
        wall_seconds: started.elapsed().as_secs_f64(),
        trace: result.trace,
    })
}

/// Copy of `scenario` restarted from a burnt mask over `[t0, tf]`.
pub fn restart(scenario: &Scenario, start: &[bool], t0: f64, tf: f64) -> Result<Scenario> {
    let initial_phi = signed_distance_from_mask(scenario.grid, start)?;
    let s = Scenario {
        initial_phi,
        t0,
        tf,
        ..scenario.clone()
    };
    s.validate()?;
    Ok(s)
}

/// Simulates from a burnt mask at `start_time` for `horizon`, sampling at
/// the scenario interval. A zero horizon returns the start front alone.
pub fn forecast(
    scenario: &Scenario,
    p: &ParamVector,
    start: &[bool],
    start_time: f64,
    horizon: f64,
) -> Result<FrontSeries> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("must be finite and non-negative, got {horizon}"),
        });
    }
    let phi0 = signed_distance_from_mask(scenario.grid, start)?;
    if horizon == 0.0 {
        return FrontSeries::from_snapshots(vec![crate::solver::Snapshot {
            time: start_time,
            phi: phi0,
        }]);
    }
    let k = (horizon / scenario.dt).ceil().max(1.0) as usize;
    let end = start_time + horizon;
    let times: Vec<f64> = (1..=k)
        .map(|i| (start_time + i as f64 * scenario.dt).min(end))
        .map(|t| if times_match(t, end) { end } else { t })
        .collect();
    let mut times = times;
    times.dedup_by(|a, b| times_match(*a, *b));
    let config = SolverConfig::new(times).with_cfl(DEFAULT_CFL);
    simulate_from(scenario, p, &config, phi0, start_time)
}
