//! TOML scenario files.
//!
//! ```toml
//! name = "example"
//!
//! [grid]
//! nx = 101
//! ny = 101
//! extent = [-1.0, 1.0, -1.0, 1.0]   # or x0, y0, dx, dy
//!
//! [elevation]
//! kind = "hill"                     # flat | hill | valley | raster
//! cx = 0.0
//! cy = 0.0
//! height = 0.2
//! width = 0.6
//!
//! [fuel]
//! kind = "split"                    # uniform | split | raster
//! normal = [1.0, 0.0]
//! offset = 0.0
//!
//! [wind]
//! ux = -0.5                         # or speed + heading_deg
//! uy = -2.0
//! units = "native"                  # native | mph | mps
//!
//! [front]
//! kind = "circle"                   # circle | mask
//! cx = 0.0
//! cy = 0.0
//! radius = 0.2
//!
//! [time]
//! t0 = 0.0
//! tf = 0.1
//! dt = 0.01
//! ```
//!
//! Optional sections: `[truth]` (a parameter vector), `[bounds]`
//! (`p_min`, `p_max`), `[optimizer]` and `[solver]`. Raster paths are
//! resolved relative to the scenario file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ascii_grid::AsciiRaster;
use crate::distance::{signed_distance_from_circle, signed_distance_from_mask};
use crate::error::{Error, Result};
use crate::grid::{Fuel, FuelMap, GridSpec, ScalarField, Wind};
use crate::scenario::Scenario;
use crate::search::SearchConfig;
use crate::solver::SolverConfig;
use crate::spread::ParamVector;

pub const MPH_TO_MPS: f64 = 0.44704;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub grid: GridSection,
    #[serde(default)]
    pub elevation: ElevationSpec,
    #[serde(default)]
    pub fuel: FuelSpec,
    #[serde(default)]
    pub wind: WindSpec,
    pub front: FrontSpec,
    pub time: TimeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<ParamVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSection>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    /// `[xmin, xmax, ymin, ymax]` of the cell edges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
}

/// Elevation surface. Hill and valley are Gaussian bumps
/// `z = +/- h exp(-((x - cx)^2 + (y - cy)^2) / w^2)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElevationSpec {
    #[default]
    Flat,
    Hill {
        cx: f64,
        cy: f64,
        height: f64,
        width: f64,
    },
    Valley {
        cx: f64,
        cy: f64,
        depth: f64,
        width: f64,
    },
    Raster {
        path: PathBuf,
    },
}

/// Fuel layout. `split` puts fuel B where `normal . (x, y) > offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FuelSpec {
    Uniform { fuel: Fuel },
    Split { normal: [f64; 2], offset: f64 },
    Raster { path: PathBuf },
}

impl Default for FuelSpec {
    fn default() -> Self {
        FuelSpec::Uniform { fuel: Fuel::A }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindUnits {
    #[default]
    Native,
    Mph,
    Mps,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ux: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    /// Direction the wind blows toward; 0 is north, 90 east.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading_deg: Option<f64>,
    #[serde(default)]
    pub units: WindUnits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrontSpec {
    Circle {
        cx: f64,
        cy: f64,
        radius: f64,
    },
    /// Raster with burnt cells `> 0.5`.
    Mask {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub p_min: [f64; 8],
    pub p_max: [f64; 8],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel_poll: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reinit_period: Option<usize>,
}

/// A built scenario with everything else the file carried.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSetup {
    pub scenario: Scenario,
    pub truth: Option<ParamVector>,
    pub bounds: Option<BoundsSection>,
    pub optimizer: OptimizerSection,
    pub solver: SolverConfig,
}

impl ScenarioSetup {
    /// Search settings over the scenario bounds with the file's overrides.
    pub fn search_config(&self) -> Result<SearchConfig> {
        let b = self.bounds.as_ref().ok_or_else(|| {
            Error::Scenario("a [bounds] section is required for estimation".into())
        })?;
        let mut cfg = SearchConfig::new(b.p_min.to_vec(), b.p_max.to_vec());
        let o = &self.optimizer;
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        if let Some(v) = o.max_iter {
            cfg.max_iter = v;
        }
        cfg.max_evals = o.max_evals;
        cfg.budget = o.budget_seconds.map(Duration::from_secs_f64);
        if let Some(v) = o.mesh_init {
            cfg.mesh_init = v;
            cfg.mesh_max = cfg.mesh_max.max(v);
        }
        if let Some(v) = o.mesh_max {
            cfg.mesh_max = v;
        }
        if let Some(v) = o.tol {
            cfg.tol = v;
        }
        if let Some(v) = o.parallel_poll {
            cfg.parallel_poll = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Validation failure tied to a `section.key` path.
struct Keyed {
    key: String,
    message: String,
}

enum BuildError {
    Keyed(Keyed),
    Other(Error),
}

impl From<Error> for BuildError {
    fn from(e: Error) -> Self {
        BuildError::Other(e)
    }
}

fn keyed(key: &str, message: impl Into<String>) -> BuildError {
    BuildError::Keyed(Keyed {
        key: key.to_string(),
        message: message.into(),
    })
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().trim().to_string();
            match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    Error::Scenario(format!("line {line}: {msg}"))
                }
                None => Error::Scenario(msg),
            }
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| Error::Scenario(format!("cannot serialize scenario: {e}")))
    }

    /// Builds the runtime scenario; raster paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<ScenarioSetup> {
        self.build_inner(base).map_err(|e| match e {
            BuildError::Keyed(k) => Error::Scenario(format!("{}: {}", k.key, k.message)),
            BuildError::Other(e) => e,
        })
    }

    fn build_inner(&self, base: &Path) -> Result<ScenarioSetup, BuildError> {
        let grid = self.grid_spec()?;
        let t = &self.time;
        if !t.dt.is_finite() || t.dt <= 0.0 {
            return Err(keyed("time.dt", format!("must be positive, got {}", t.dt)));
        }
        if !(t.t0.is_finite() && t.tf.is_finite() && t.t0 < t.tf) {
            return Err(keyed("time.tf", format!("must exceed time.t0 = {}", t.t0)));
        }
        let k = (t.tf - t.t0) / t.dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(keyed(
                "time.dt",
                format!("{} does not divide tf - t0 = {}", t.dt, t.tf - t.t0),
            ));
        }
        let elevation = self.elevation_field(grid, base)?;
        let fuel = self.fuel_map(grid, base)?;
        let wind = self.wind_vector()?;
        let initial_phi = self.initial_front(grid, base)?;
        let scenario = Scenario {
            name: self.name.clone(),
            grid,
            elevation,
            fuel,
            wind,
            initial_phi,
            t0: t.t0,
            tf: t.tf,
            dt: t.dt,
        };
        scenario.validate()?;

        if let Some(p) = &self.truth {
            p.validate().map_err(|e| keyed("truth", e.to_string()))?;
        }
        if let Some(b) = &self.bounds {
            for (k, (lo, hi)) in b.p_min.iter().zip(&b.p_max).enumerate() {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(keyed(
                        "bounds.p_min",
                        format!("component {k}: p_min = {lo} must be below p_max = {hi}"),
                    ));
                }
            }
        }
        let mut solver = scenario.solver_config();
        if let Some(cfl) = self.solver.cfl {
            solver.cfl = cfl;
        }
        solver.reinit_period = self.solver.reinit_period;
        solver
            .validate()
            .map_err(|e| keyed("solver.cfl", e.to_string()))?;
        let setup = ScenarioSetup {
            scenario,
            truth: self.truth,
            bounds: self.bounds.clone(),
            optimizer: self.optimizer.clone(),
            solver,
        };
        if setup.bounds.is_some() {
            setup
                .search_config()
                .map_err(|e| keyed("optimizer", e.to_string()))?;
        }
        Ok(setup)
    }

    fn grid_spec(&self) -> Result<GridSpec, BuildError> {
        let g = &self.grid;
        let bad = |e: Error| keyed("grid", e.to_string());
        match (g.extent, g.x0, g.y0, g.dx, g.dy) {
            (Some([x0, x1, y0, y1]), None, None, None, None) => {
                GridSpec::from_extent(g.nx, g.ny, (x0, x1), (y0, y1)).map_err(bad)
            }
            (None, Some(x0), Some(y0), Some(dx), Some(dy)) => {
                GridSpec::new(g.nx, g.ny, x0, y0, dx, dy).map_err(bad)
            }
            _ => Err(keyed(
                "grid",
                "give either `extent` or all of x0, y0, dx, dy",
            )),
        }
    }

    fn elevation_field(&self, grid: GridSpec, base: &Path) -> Result<ScalarField, BuildError> {
        let gauss = |cx: f64, cy: f64, amp: f64, w: f64| {
            ScalarField::from_fn(grid, move |x, y| {
                amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (w * w)).exp()
            })
        };
        Ok(match &self.elevation {
            ElevationSpec::Flat => ScalarField::constant(grid, 0.0),
            ElevationSpec::Hill {
                cx,
                cy,
                height,
                width,
            } => {
                check_positive("elevation.width", *width)?;
                gauss(*cx, *cy, *height, *width)
            }
            ElevationSpec::Valley {
                cx,
                cy,
                depth,
                width,
            } => {
                check_positive("elevation.width", *width)?;
                gauss(*cx, *cy, -*depth, *width)
            }
            ElevationSpec::Raster { path } => {
                let path = base.join(path);
                let raster = AsciiRaster::read(&path)?;
                let field = raster.to_field().map_err(|reason| Error::Raster {
                    path: path.clone(),
                    reason,
                })?;
                grid.ensure_same(field.grid(), "elevation raster")?;
                field
            }
        })
    }

    fn fuel_map(&self, grid: GridSpec, base: &Path) -> Result<FuelMap, BuildError> {
        Ok(match &self.fuel {
            FuelSpec::Uniform { fuel } => FuelMap::uniform(grid, *fuel),
            FuelSpec::Split { normal, offset } => {
                let [a, b] = *normal;
                if !(a.is_finite() && b.is_finite()) || (a == 0.0 && b == 0.0) {
                    return Err(keyed("fuel.normal", "must be a finite nonzero vector"));
                }
                let offset = *offset;
                FuelMap::from_fn(grid, move |x, y| {
                    if a * x + b * y > offset {
                        Fuel::B
                    } else {
                        Fuel::A
                    }
                })
            }
            FuelSpec::Raster { path } => {
                let path = base.join(path);
                let raster = AsciiRaster::read(&path)?;
                raster
                    .to_fuel_map()
                    .map_err(|reason| Error::Raster { path, reason })?
                    .resample(grid)
            }
        })
    }

    fn wind_vector(&self) -> Result<Wind, BuildError> {
        let w = &self.wind;
        let scale = match w.units {
            WindUnits::Native | WindUnits::Mps => 1.0,
            WindUnits::Mph => MPH_TO_MPS,
        };
        let wind = match (w.ux, w.uy, w.speed, w.heading_deg) {
            (None, None, None, None) => Wind::CALM,
            (Some(ux), Some(uy), None, None) => Wind::new(ux * scale, uy * scale),
            (None, None, Some(s), Some(h)) => {
                if !(s >= 0.0) {
                    return Err(keyed(
                        "wind.speed",
                        format!("must be non-negative, got {s}"),
                    ));
                }
                Wind::from_heading(s * scale, h)
            }
            _ => {
                return Err(keyed(
                    "wind",
                    "give either ux and uy or speed and heading_deg",
                ))
            }
        };
        if !(wind.ux.is_finite() && wind.uy.is_finite()) {
            return Err(keyed("wind", "components must be finite"));
        }
        Ok(wind)
    }

    fn initial_front(&self, grid: GridSpec, base: &Path) -> Result<ScalarField, BuildError> {
        match &self.front {
            FrontSpec::Circle { cx, cy, radius } => {
                check_positive("front.radius", *radius)?;
                Ok(signed_distance_from_circle(grid, (*cx, *cy), *radius)?)
            }
            FrontSpec::Mask { path } => {
                let path = base.join(path);
                let raster = AsciiRaster::read(&path)?;
                grid.ensure_same(&raster.grid, "front mask")?;
                signed_distance_from_mask(grid, &raster.to_mask())
                    .map_err(|e| keyed("front.path", e.to_string()))
            }
        }
    }
}

fn check_positive(key: &str, v: f64) -> Result<(), BuildError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(keyed(key, format!("must be positive, got {v}")))
    }
}

/// 1-based line of `section.key` in `text`, or of the section header when
/// the key is absent.
pub fn locate_key(text: &str, path: &str) -> Option<usize> {
    let (section, key) = match path.split_once('.') {
        Some((s, k)) => (s, Some(k)),
        None => (path, None),
    };
    let mut current = String::new();
    let mut header = None;
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section && header.is_none() {
                header = Some(n + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(k) = key {
            if let Some(rest) = t.strip_prefix(k) {
                if rest.trim_start().starts_with('=') {
                    return Some(n + 1);
                }
            }
        }
    }
    header
}

/// Parses and builds a scenario from source text; validation errors name
/// the offending key and its line.
pub fn load_str(text: &str, base: &Path) -> Result<ScenarioSetup> {
    let file = ScenarioFile::parse(text)?;
    file.build_inner(base).map_err(|e| match e {
        BuildError::Keyed(k) => match locate_key(text, &k.key) {
            Some(line) => Error::Scenario(format!("line {line}: {}: {}", k.key, k.message)),
            None => Error::Scenario(format!("{}: {}", k.key, k.message)),
        },
        BuildError::Other(e) => e,
    })
}

pub fn load(path: &Path) -> Result<ScenarioSetup> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_str(&text, &base)
}

pub const BUNDLED: [(&str, &str); 7] = [
    ("nowind_flat", include_str!("../scenarios/nowind_flat.toml")),
    ("wind_flat", include_str!("../scenarios/wind_flat.toml")),
    ("hill_nowind", include_str!("../scenarios/hill_nowind.toml")),
    (
        "valley_nowind",
        include_str!("../scenarios/valley_nowind.toml"),
    ),
    (
        "valley_estimation",
        include_str!("../scenarios/valley_estimation.toml"),
    ),
    (
        "hill_estimation",
        include_str!("../scenarios/hill_estimation.toml"),
    ),
    (
        "troy_template",
        include_str!("../scenarios/troy_template.toml"),
    ),
];

pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Loads a bundled scenario; raster paths resolve against the working
/// directory.
pub fn load_bundled(name: &str) -> Result<ScenarioSetup> {
    let text = bundled_source(name)
        .ok_or_else(|| Error::Scenario(format!("no bundled scenario named `{name}`")))?;
    load_str(text, &PathBuf::from("."))
}
