//! Level-set wildfire front propagation and estimation of the
//! rate-of-spread parameters from observed fronts.
//!
//! ```no_run
//! use firefront_core::{estimate, generate_synthetic_measurements, scenario_file};
//!
//! let setup = scenario_file::load_bundled("valley_estimation")?;
//! let truth = setup.truth.unwrap();
//! let measured = generate_synthetic_measurements(&setup.scenario, &truth)?;
//! let report = estimate(&setup.scenario, &measured, &setup.search_config()?, &setup.solver)?
//!     .with_truth(&truth)?;
//! println!("J = {}, e = {:?}", report.j_final, report.e);
//! # Ok::<(), firefront_core::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod ascii_grid;
pub mod contour;
pub mod distance;
pub mod eno;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod metrics;
pub mod scenario;
pub mod scenario_file;
pub mod search;
pub mod solver;
pub mod spread;

pub use contour::{extract_zero_contour, FrontPolyline};
pub use distance::{signed_distance_from_circle, signed_distance_from_mask};
pub use error::{Error, Result};
pub use estimation::{estimate, forecast, generate_synthetic_measurements, EstimationReport};
pub use grid::{Fuel, FuelMap, GridSpec, ScalarField, Wind};
pub use metrics::{cost_j, relative_error, similarity_indexes, MetricReport, Similarity};
pub use scenario::Scenario;
pub use scenario_file::{ScenarioFile, ScenarioSetup};
pub use search::{minimize, SearchConfig, SearchResult, SearchTrace, StopReason};
pub use solver::{simulate, FrontSeries, Snapshot, SolverConfig};
pub use spread::{rate_of_spread, ParamVector, SpreadModel};
