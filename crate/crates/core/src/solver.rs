//! Level-set front propagation: ENO3 in space, Godunov upwinding, SSP-RK2
//! (Heun) in time.
//!
//! With `phi` positive in the burnt region, a front moving outward at speed
//! `F >= 0` satisfies `phi_t = F |grad phi|`, i.e. the normal-flow equation
//! `phi_t + S |grad phi| = 0` with `S = -F`.

use crate::distance::reinitialize;
use crate::eno::{Eno3Workspace, UpwindDerivatives};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::scenario::Scenario;
use crate::spread::{ParamVector, SpreadModel};

/// Lower bound on the speed used when sizing time steps.
const SPEED_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Courant number in `(0, 1]`.
    pub cfl: f64,
    /// Output times; strictly increasing, none before the scenario start.
    pub snapshot_times: Vec<f64>,
    /// Reinitialize `phi` to a signed distance every this many snapshots.
    pub reinit_period: Option<usize>,
}

pub const DEFAULT_CFL: f64 = 0.5;

impl SolverConfig {
    pub fn new(snapshot_times: Vec<f64>) -> Self {
        Self {
            cfl: DEFAULT_CFL,
            snapshot_times,
            reinit_period: None,
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "cfl",
                reason: format!("must lie in (0, 1], got {}", self.cfl),
            });
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::InvalidParameter {
                name: "snapshot_times",
                reason: "must not be empty".into(),
            });
        }
        if self.snapshot_times.iter().any(|t| !t.is_finite())
            || self.snapshot_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParameter {
                name: "snapshot_times",
                reason: "must be finite and strictly increasing".into(),
            });
        }
        if self.reinit_period == Some(0) {
            return Err(Error::InvalidParameter {
                name: "reinit_period",
                reason: "must be at least 1 when set".into(),
            });
        }
        Ok(())
    }
}

/// One time-stamped level-set field.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub phi: ScalarField,
}

/// Time-ordered sequence of fronts on a common grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrontSeries {
    snapshots: Vec<Snapshot>,
}

impl FrontSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_snapshots(snapshots: Vec<Snapshot>) -> Result<Self> {
        let mut s = Self::new();
        for snap in snapshots {
            s.push(snap.time, snap.phi)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, time: f64, phi: ScalarField) -> Result<()> {
        if let Some(last) = self.snapshots.last() {
            if !(time > last.time) {
                return Err(Error::SnapshotMismatch(format!(
                    "time {time} does not follow {}",
                    last.time
                )));
            }
            last.phi.grid().ensure_same(phi.grid(), "front series")?;
        }
        self.snapshots.push(Snapshot { time, phi });
        Ok(())
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.snapshots.first().map(|s| s.phi.grid())
    }

    pub fn first(&self) -> Option<&Snapshot> {
        self.snapshots.first()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Snapshot whose time matches `t` to within `1e-9` relative.
    pub fn at_time(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| times_match(s.time, t))
    }

    /// Keeps only the snapshots whose index satisfies `keep`.
    pub fn select(&self, keep: impl Fn(usize) -> bool) -> FrontSeries {
        FrontSeries {
            snapshots: self
                .snapshots
                .iter()
                .enumerate()
                .filter(|(k, _)| keep(*k))
                .map(|(_, s)| s.clone())
                .collect(),
        }
    }
}

pub(crate) fn times_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Anything that can produce a per-cell normal speed from the current front.
pub trait SpeedFunction {
    fn fill_speed(&self, phi: &ScalarField, out: &mut [f64]);
}

impl SpeedFunction for SpreadModel {
    fn fill_speed(&self, phi: &ScalarField, out: &mut [f64]) {
        self.fill(phi, out);
    }
}

/// Uniform speed everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSpeed(pub f64);

impl SpeedFunction for ConstantSpeed {
    fn fill_speed(&self, _phi: &ScalarField, out: &mut [f64]) {
        out.fill(self.0);
    }
}

/// `S |grad phi|` with the Godunov upwind approximation of `|grad phi|`
/// for the equation `phi_t + S |grad phi| = 0`.
pub fn godunov_normal_speed_term(speed: &ScalarField, d: &UpwindDerivatives) -> ScalarField {
    let g = *speed.grid();
    let values = (0..g.len())
        .map(|k| {
            let s = speed.values()[k];
            s * godunov_norm(
                s,
                d.dx_minus.values()[k],
                d.dx_plus.values()[k],
                d.dy_minus.values()[k],
                d.dy_plus.values()[k],
            )
        })
        .collect();
    ScalarField::from_raw(g, values)
}

#[inline]
fn godunov_norm(s: f64, xm: f64, xp: f64, ym: f64, yp: f64) -> f64 {
    let sq = |a: f64| a * a;
    if s >= 0.0 {
        (sq(xm.max(0.0)).max(sq(xp.min(0.0))) + sq(ym.max(0.0)).max(sq(yp.min(0.0)))).sqrt()
    } else {
        (sq(xm.min(0.0)).max(sq(xp.max(0.0))) + sq(ym.min(0.0)).max(sq(yp.max(0.0)))).sqrt()
    }
}

/// Explicit integrator for an outward-moving front under a speed function.
pub struct Propagator<'a, S: SpeedFunction + ?Sized> {
    speed: &'a S,
    grid: GridSpec,
    cfl: f64,
    eno: Eno3Workspace,
    f: Vec<f64>,
    xm: Vec<f64>,
    xp: Vec<f64>,
    ym: Vec<f64>,
    yp: Vec<f64>,
    rhs: Vec<f64>,
}

impl<'a, S: SpeedFunction + ?Sized> Propagator<'a, S> {
    pub fn new(speed: &'a S, grid: GridSpec, cfl: f64) -> Self {
        let n = grid.len();
        Self {
            speed,
            grid,
            cfl,
            eno: Eno3Workspace::new(&grid),
            f: vec![0.0; n],
            xm: vec![0.0; n],
            xp: vec![0.0; n],
            ym: vec![0.0; n],
            yp: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }

    fn h(&self) -> f64 {
        self.grid.dx.min(self.grid.dy)
    }

    /// Fills `self.rhs` with `d phi/dt` and returns `max |F|`.
    fn evaluate(&mut self, phi: &ScalarField) -> f64 {
        self.speed.fill_speed(phi, &mut self.f);
        self.eno.compute(
            phi.values(),
            &mut self.xm,
            &mut self.xp,
            &mut self.ym,
            &mut self.yp,
        );
        let mut max_f = 0.0_f64;
        for k in 0..self.f.len() {
            let f = self.f[k];
            max_f = max_f.max(f.abs());
            // phi_t = -S|grad phi| with S = -F
            let norm = godunov_norm(-f, self.xm[k], self.xp[k], self.ym[k], self.yp[k]);
            self.rhs[k] = f * norm;
        }
        max_f
    }

    /// Largest step the CFL condition admits at the current state.
    pub fn admissible_dt(&mut self, phi: &ScalarField) -> f64 {
        let max_f = self.evaluate(phi);
        self.cfl * self.h() / max_f.max(SPEED_FLOOR)
    }

    /// One Heun step of size `dt`; rejects steps beyond the CFL bound.
    pub fn step(&mut self, phi: &ScalarField, dt: f64) -> Result<ScalarField> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive, got {dt}"),
            });
        }
        let max_f = self.evaluate(phi);
        let admissible = self.cfl * self.h() / max_f.max(SPEED_FLOOR);
        if dt > admissible * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, admissible });
        }
        Ok(self.finish_step(phi, dt))
    }

    /// Second Heun stage, assuming `self.rhs` holds `L(phi)`.
    fn finish_step(&mut self, phi: &ScalarField, dt: f64) -> ScalarField {
        let stage: Vec<f64> = phi
            .values()
            .iter()
            .zip(&self.rhs)
            .map(|(p, r)| p + dt * r)
            .collect();
        let stage = ScalarField::from_raw(self.grid, stage);
        self.evaluate(&stage);
        let out = phi
            .values()
            .iter()
            .zip(stage.values())
            .zip(&self.rhs)
            .map(|((p0, p1), r)| 0.5 * p0 + 0.5 * (p1 + dt * r))
            .collect();
        ScalarField::from_raw(self.grid, out)
    }

    /// Integrates from `t0` to `t1` with adaptive steps landing exactly on `t1`.
    pub fn advance(&mut self, phi: ScalarField, t0: f64, t1: f64) -> Result<ScalarField> {
        let mut phi = phi;
        let mut t = t0;
        while t < t1 && !times_match(t, t1) {
            let max_f = self.evaluate(&phi);
            let mut dt = self.cfl * self.h() / max_f.max(SPEED_FLOOR);
            let last = t + dt >= t1 || times_match(t + dt, t1);
            if last {
                dt = t1 - t;
            }
            phi = self.finish_step(&phi, dt);
            t = if last { t1 } else { t + dt };
            if let Some((i, j)) = phi.first_non_finite() {
                return Err(Error::NonFinite { i, j, time: t });
            }
        }
        Ok(phi)
    }

    /// Records `phi0` at `t0` and the evolved front at every requested time.
    pub fn run(
        &mut self,
        phi0: ScalarField,
        t0: f64,
        times: &[f64],
        reinit_period: Option<usize>,
    ) -> Result<FrontSeries> {
        if let Some(&t) = times.first() {
            if t < t0 && !times_match(t, t0) {
                return Err(Error::InvalidParameter {
                    name: "snapshot_times",
                    reason: format!("time {t} precedes the start time {t0}"),
                });
            }
        }
        let mut series = FrontSeries::new();
        let mut phi = phi0;
        let mut t = t0;
        series.push(t0, phi.clone())?;
        let mut since_reinit = 0;
        for &target in times.iter().filter(|&&s| !times_match(s, t0)) {
            phi = self.advance(phi, t, target)?;
            t = target;
            since_reinit += 1;
            if reinit_period.is_some_and(|p| since_reinit >= p) {
                if let Ok(r) = reinitialize(&phi) {
                    phi = r;
                }
                since_reinit = 0;
            }
            series.push(target, phi.clone())?;
        }
        Ok(series)
    }
}

/// Runs the spread model for `scenario` under parameters `p`.
pub fn simulate(
    scenario: &Scenario,
    p: &ParamVector,
    config: &SolverConfig,
) -> Result<FrontSeries> {
    simulate_from(
        scenario,
        p,
        config,
        scenario.initial_phi.clone(),
        scenario.t0,
    )
}

/// Same as [`simulate`] but starting from an arbitrary front at time `t0`.
pub fn simulate_from(
    scenario: &Scenario,
    p: &ParamVector,
    config: &SolverConfig,
    phi0: ScalarField,
    t0: f64,
) -> Result<FrontSeries> {
    config.validate()?;
    scenario
        .grid
        .ensure_same(phi0.grid(), "initial front vs scenario")?;
    let model = SpreadModel::new(&scenario.elevation, &scenario.fuel, scenario.wind, p)?;
    let mut prop = Propagator::new(&model, scenario.grid, config.cfl);
    prop.run(phi0, t0, &config.snapshot_times, config.reinit_period)
}
