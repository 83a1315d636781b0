//! ESRI ASCII grid rasters.
//!
//! ```text
//! ncols         4
//! nrows         3
//! xllcorner     0.0
//! yllcorner     0.0
//! cellsize      50.0
//! NODATA_value  -9999
//! <nrows lines of ncols values, north row first>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Fuel, FuelMap, GridSpec, ScalarField};

pub const DEFAULT_NODATA: f64 = -9999.0;

/// A raster as read from disk, values stored south row first.
#[derive(Debug, Clone, PartialEq)]
pub struct AsciiRaster {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub nodata: Option<f64>,
}

impl AsciiRaster {
    pub fn is_nodata(&self, v: f64) -> bool {
        self.nodata.is_some_and(|nd| v == nd)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|reason| Error::Raster {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let mut ncols = None;
        let mut nrows = None;
        let mut xll = None;
        let mut yll = None;
        let mut cellsize = None;
        let mut nodata = None;
        let mut centered = (false, false);
        let mut first_data: Option<(usize, &str)> = None;

        for (lineno, line) in lines.by_ref() {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default().to_ascii_lowercase();
            if key.parse::<f64>().is_ok() {
                first_data = Some((lineno, line));
                break;
            }
            let val = parts
                .next()
                .ok_or_else(|| format!("line {}: header key `{key}` has no value", lineno + 1))?;
            let num = || {
                val.parse::<f64>()
                    .map_err(|_| format!("line {}: bad value `{val}` for `{key}`", lineno + 1))
            };
            let count = || {
                val.parse::<usize>()
                    .map_err(|_| format!("line {}: bad count `{val}` for `{key}`", lineno + 1))
            };
            match key.as_str() {
                "ncols" => ncols = Some(count()?),
                "nrows" => nrows = Some(count()?),
                "xllcorner" => xll = Some(num()?),
                "yllcorner" => yll = Some(num()?),
                "xllcenter" => {
                    xll = Some(num()?);
                    centered.0 = true;
                }
                "yllcenter" => {
                    yll = Some(num()?);
                    centered.1 = true;
                }
                "cellsize" => cellsize = Some(num()?),
                "nodata_value" => nodata = Some(num()?),
                other => return Err(format!("line {}: unknown header key `{other}`", lineno + 1)),
            }
        }

        let missing = |k: &str| format!("missing header key `{k}`");
        let ncols = ncols.ok_or_else(|| missing("ncols"))?;
        let nrows = nrows.ok_or_else(|| missing("nrows"))?;
        let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;
        let mut x0 = xll.ok_or_else(|| missing("xllcorner"))?;
        let mut y0 = yll.ok_or_else(|| missing("yllcorner"))?;
        if centered.0 {
            x0 -= 0.5 * cellsize;
        }
        if centered.1 {
            y0 -= 0.5 * cellsize;
        }
        let grid =
            GridSpec::new(ncols, nrows, x0, y0, cellsize, cellsize).map_err(|e| e.to_string())?;

        let mut rows: Vec<f64> = Vec::with_capacity(grid.len());
        for (lineno, line) in first_data.into_iter().chain(lines) {
            for tok in line.split_whitespace() {
                let v = tok
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: bad value `{tok}`", lineno + 1))?;
                rows.push(v);
            }
        }
        if rows.len() != grid.len() {
            return Err(format!(
                "expected {} values ({ncols}x{nrows}), found {}",
                grid.len(),
                rows.len()
            ));
        }
        // file is north row first
        let mut values = Vec::with_capacity(grid.len());
        for r in (0..nrows).rev() {
            values.extend_from_slice(&rows[r * ncols..(r + 1) * ncols]);
        }
        Ok(Self {
            grid,
            values,
            nodata,
        })
    }

    pub fn to_field(&self) -> Result<ScalarField, String> {
        if let Some(k) = self.values.iter().position(|&v| self.is_nodata(v)) {
            return Err(format!(
                "nodata at cell ({}, {}) not allowed here",
                k % self.grid.nx,
                k / self.grid.nx
            ));
        }
        ScalarField::new(self.grid, self.values.clone()).map_err(|e| e.to_string())
    }

    pub fn to_fuel_map(&self) -> Result<FuelMap, String> {
        let labels = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if v.fract() == 0.0 {
                    if let Some(f) = Fuel::from_label(v as i64) {
                        return Ok(f);
                    }
                }
                Err(format!(
                    "fuel label {v} at cell ({}, {}) is not 0 or 1",
                    k % self.grid.nx,
                    k / self.grid.nx
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        FuelMap::new(self.grid, labels).map_err(|e| e.to_string())
    }

    /// Burnt mask: values > 0.5 are burnt, nodata is unburnt.
    pub fn to_mask(&self) -> Vec<bool> {
        self.values
            .iter()
            .map(|&v| !self.is_nodata(v) && v > 0.5)
            .collect()
    }

    pub fn format(&self) -> Result<String> {
        let g = &self.grid;
        if (g.dx - g.dy).abs() > 1e-12 * g.dx.max(g.dy) {
            return Err(Error::InvalidGrid(format!(
                "ASCII grids need square cells, got dx={} dy={}",
                g.dx, g.dy
            )));
        }
        let mut s = String::with_capacity(g.len() * 4 + 128);
        writeln!(s, "ncols         {}", g.nx).unwrap();
        writeln!(s, "nrows         {}", g.ny).unwrap();
        writeln!(s, "xllcorner     {}", g.x0).unwrap();
        writeln!(s, "yllcorner     {}", g.y0).unwrap();
        writeln!(s, "cellsize      {}", g.dx).unwrap();
        writeln!(s, "NODATA_value  {}", self.nodata.unwrap_or(DEFAULT_NODATA)).unwrap();
        for j in (0..g.ny).rev() {
            let row = &self.values[j * g.nx..(j + 1) * g.nx];
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                write!(s, "{v}").unwrap();
            }
            s.push('\n');
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.format()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn from_field(field: &ScalarField) -> Self {
        Self {
            grid: *field.grid(),
            values: field.values().to_vec(),
            nodata: Some(DEFAULT_NODATA),
        }
    }

    /// 1 = burnt, 0 = unburnt.
    pub fn from_mask(grid: GridSpec, mask: &[bool]) -> Self {
        Self {
            grid,
            values: mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            nodata: Some(DEFAULT_NODATA),
        }
    }

    pub fn from_fuel_map(fuel: &FuelMap) -> Self {
        Self {
            grid: *fuel.grid(),
            values: fuel.labels().iter().map(|f| f64::from(f.label())).collect(),
            nodata: Some(DEFAULT_NODATA),
        }
    }
}
