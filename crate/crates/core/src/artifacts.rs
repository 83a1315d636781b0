//! On-disk run outputs.
//!
//! ```text
//! <out>/fronts/index.csv         index,time,file
//! <out>/fronts/snap_0000.asc     burnt mask (1 burnt, 0 unburnt)
//! <out>/contours/snap_0000.csv   polyline,x,y
//! <out>/trace.csv                optimizer trace
//! <out>/report.json
//! ```
//!
//! A measured-front directory uses the `fronts/` layout, either at its root
//! or under `fronts/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::ascii_grid::AsciiRaster;
use crate::contour::extract_zero_contour;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::search::SearchTrace;
use crate::solver::FrontSeries;
use crate::spread::PARAM_NAMES;

pub const FRONTS_DIR: &str = "fronts";
pub const CONTOURS_DIR: &str = "contours";
pub const INDEX_FILE: &str = "index.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "report.json";

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn snap_name(k: usize, ext: &str) -> String {
    format!("snap_{k:04}.{ext}")
}

/// Writes one burnt-mask raster per snapshot plus `index.csv` into `dir`.
pub fn write_front_rasters(dir: &Path, series: &FrontSeries) -> Result<()> {
    create_dir(dir)?;
    let mut index = String::from("index,time,file\n");
    for (k, s) in series.snapshots().iter().enumerate() {
        let name = snap_name(k, "asc");
        AsciiRaster::from_mask(*s.phi.grid(), &s.phi.burnt_mask()).write(&dir.join(&name))?;
        writeln!(index, "{k},{},{name}", s.time).unwrap();
    }
    write_text(&dir.join(INDEX_FILE), &index)
}

/// Reads a directory written by [`write_front_rasters`]. Snapshots are
/// `+1` on burnt cells and `-1` elsewhere.
pub fn read_front_rasters(dir: &Path) -> Result<FrontSeries> {
    let dir = if dir.join(INDEX_FILE).is_file() {
        dir.to_path_buf()
    } else {
        dir.join(FRONTS_DIR)
    };
    let index_path = dir.join(INDEX_FILE);
    let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let bad = |line: usize, reason: String| Error::Raster {
        path: index_path.clone(),
        reason: format!("line {line}: {reason}"),
    };
    let mut rows: Vec<(f64, PathBuf)> = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(bad(
                n + 1,
                format!("expected 3 columns, got {}", cols.len()),
            ));
        }
        let time: f64 = cols[1]
            .parse()
            .map_err(|_| bad(n + 1, format!("bad time `{}`", cols[1])))?;
        rows.push((time, dir.join(cols[2])));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut series = FrontSeries::new();
    for (time, path) in rows {
        let raster = AsciiRaster::read(&path)?;
        let values = raster
            .to_mask()
            .iter()
            .map(|&b| if b { 1.0 } else { -1.0 })
            .collect();
        series.push(time, ScalarField::new(raster.grid, values)?)?;
    }
    if series.is_empty() {
        return Err(bad(1, "no snapshots listed".into()));
    }
    Ok(series)
}

/// Zero contours of one level set as `polyline,x,y` rows.
pub fn contour_csv(phi: &ScalarField) -> String {
    let mut s = String::from("polyline,x,y\n");
    for (k, line) in extract_zero_contour(phi).iter().enumerate() {
        for (x, y) in &line.points {
            writeln!(s, "{k},{x},{y}").unwrap();
        }
        if line.closed {
            if let Some((x, y)) = line.points.first() {
                writeln!(s, "{k},{x},{y}").unwrap();
            }
        }
    }
    s
}

pub fn write_contours(dir: &Path, series: &FrontSeries) -> Result<()> {
    create_dir(dir)?;
    for (k, s) in series.snapshots().iter().enumerate() {
        write_text(&dir.join(snap_name(k, "csv")), &contour_csv(&s.phi))?;
    }
    Ok(())
}

/// Fronts and contours of a simulated series under `out`.
pub fn write_series(out: &Path, series: &FrontSeries) -> Result<()> {
    write_front_rasters(&out.join(FRONTS_DIR), series)?;
    write_contours(&out.join(CONTOURS_DIR), series)
}

pub fn write_trace(path: &Path, trace: &SearchTrace) -> Result<()> {
    write_text(path, &trace.to_csv(&PARAM_NAMES))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
