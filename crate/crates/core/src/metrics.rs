//! Agreement between simulated and measured fronts.
//!
//! Burnt regions are the cells with `phi >= 0`. The cost `J` counts cells
//! whose burnt/unburnt label differs, summed over snapshots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solver::FrontSeries;
use crate::spread::ParamVector;

/// Number of cells whose burnt label differs between `a` and `b`.
pub fn snapshot_mismatch(a: &ScalarField, b: &ScalarField) -> Result<u64> {
    a.grid().ensure_same(b.grid(), "mismatch count")?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .filter(|(x, y)| (**x >= 0.0) != (**y >= 0.0))
        .count() as u64)
}

/// Pairs every measured snapshot with the simulated one at the same time.
/// The simulated series' first time is the start time; measured snapshots
/// there are skipped unless `include_initial`.
fn paired<'a>(
    simulated: &'a FrontSeries,
    measured: &'a FrontSeries,
    include_initial: bool,
) -> Result<Vec<(f64, &'a ScalarField, &'a ScalarField)>> {
    let start = simulated
        .first()
        .ok_or_else(|| Error::SnapshotMismatch("simulated series is empty".into()))?
        .time;
    let mut out = Vec::with_capacity(measured.len());
    for m in measured.snapshots() {
        if !include_initial && crate::solver::times_match(m.time, start) {
            continue;
        }
        let s = simulated.at_time(m.time).ok_or_else(|| {
            Error::SnapshotMismatch(format!("no simulated snapshot at t = {}", m.time))
        })?;
        s.phi
            .grid()
            .ensure_same(m.phi.grid(), "simulated vs measured")?;
        out.push((m.time, &s.phi, &m.phi));
    }
    Ok(out)
}

/// Symmetric-difference cost over all measured snapshots after the start.
pub fn cost_j(simulated: &FrontSeries, measured: &FrontSeries) -> Result<u64> {
    cost_j_with(simulated, measured, false)
}

pub fn cost_j_with(
    simulated: &FrontSeries,
    measured: &FrontSeries,
    include_initial: bool,
) -> Result<u64> {
    paired(simulated, measured, include_initial)?
        .into_iter()
        .map(|(_, s, m)| snapshot_mismatch(s, m))
        .sum()
}

/// `||p_hat - p_star|| / ||p_star||`.
pub fn relative_error(p_hat: &ParamVector, p_star: &ParamVector) -> Result<f64> {
    let norm = p_star.norm();
    if norm == 0.0 {
        return Err(Error::UndefinedMetric(
            "reference parameter vector has zero norm".into(),
        ));
    }
    let diff: f64 = p_hat
        .to_array()
        .iter()
        .zip(p_star.to_array())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Sørensen, Jaccard and kappa agreement between two burnt areas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub ssi: f64,
    pub jsc: f64,
    pub ks: f64,
}

/// Cell counts behind the similarity indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCounts {
    pub simulated: u64,
    pub measured: u64,
    pub both: u64,
    pub total: u64,
}

impl OverlapCounts {
    pub fn of(simulated: &ScalarField, measured: &ScalarField) -> Result<Self> {
        simulated
            .grid()
            .ensure_same(measured.grid(), "similarity")?;
        let mut c = OverlapCounts {
            simulated: 0,
            measured: 0,
            both: 0,
            total: simulated.values().len() as u64,
        };
        for (s, m) in simulated.values().iter().zip(measured.values()) {
            let (a, b) = (*s >= 0.0, *m >= 0.0);
            c.simulated += u64::from(a);
            c.measured += u64::from(b);
            c.both += u64::from(a && b);
        }
        Ok(c)
    }

    pub fn union(&self) -> u64 {
        self.simulated + self.measured - self.both
    }

    pub fn ssi(&self) -> Result<f64> {
        let denom = self.simulated + self.measured;
        if denom == 0 {
            return Err(Error::UndefinedMetric(
                "SSI: both burnt areas are empty".into(),
            ));
        }
        Ok(2.0 * self.both as f64 / denom as f64)
    }

    pub fn jsc(&self) -> Result<f64> {
        let u = self.union();
        if u == 0 {
            return Err(Error::UndefinedMetric(
                "JSC: both burnt areas are empty".into(),
            ));
        }
        Ok(self.both as f64 / u as f64)
    }

    pub fn ks(&self) -> Result<f64> {
        let n = self.total as f64;
        let (a, b) = (self.simulated as f64, self.measured as f64);
        let agree = (self.both + (self.total - self.union())) as f64 / n;
        let chance = (a * b + (n - a) * (n - b)) / (n * n);
        if 1.0 - chance == 0.0 {
            return Err(Error::UndefinedMetric(
                "KS: chance agreement is 1 (both areas empty or both full)".into(),
            ));
        }
        Ok((agree - chance) / (1.0 - chance))
    }
}

pub fn similarity_indexes(simulated: &ScalarField, measured: &ScalarField) -> Result<Similarity> {
    let c = OverlapCounts::of(simulated, measured)?;
    Ok(Similarity {
        ssi: c.ssi()?,
        jsc: c.jsc()?,
        ks: c.ks()?,
    })
}

/// Per-snapshot row of the metric table; undefined indexes are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub time: f64,
    pub mismatch: u64,
    pub ssi: Option<f64>,
    pub jsc: Option<f64>,
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub j: u64,
    pub r: f64,
    pub cells: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    pub snapshots: Vec<SnapshotMetrics>,
}

/// Metric table over the measured snapshots after the start time.
pub fn metric_report(
    simulated: &FrontSeries,
    measured: &FrontSeries,
    params: Option<(&ParamVector, &ParamVector)>,
) -> Result<MetricReport> {
    let pairs = paired(simulated, measured, false)?;
    let cells = simulated.grid().map_or(0, |g| g.len()) as u64;
    let mut snapshots = Vec::with_capacity(pairs.len());
    let mut j = 0;
    for (time, s, m) in pairs {
        let mismatch = snapshot_mismatch(s, m)?;
        j += mismatch;
        let c = OverlapCounts::of(s, m)?;
        snapshots.push(SnapshotMetrics {
            time,
            mismatch,
            ssi: c.ssi().ok(),
            jsc: c.jsc().ok(),
            ks: c.ks().ok(),
        });
    }
    let e = params
        .map(|(hat, star)| relative_error(hat, star))
        .transpose()?;
    Ok(MetricReport {
        j,
        r: j as f64 / cells as f64,
        cells,
        e,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn field(g: GridSpec, burnt: &[bool]) -> ScalarField {
        ScalarField::new(
            g,
            burnt.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect(),
        )
        .unwrap()
    }

    fn g(n: usize) -> GridSpec {
        GridSpec::from_extent(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap()
    }

    fn series(fields: Vec<ScalarField>) -> FrontSeries {
        let mut s = FrontSeries::new();
        for (k, f) in fields.into_iter().enumerate() {
            s.push(k as f64 * 0.5, f).unwrap();
        }
        s
    }

    #[test]
    fn identical_series_cost_zero() {
        let grid = g(5);
        let a = series(vec![
            ScalarField::from_fn(grid, |x, _| 0.3 - x),
            ScalarField::from_fn(grid, |x, _| 0.6 - x),
        ]);
        assert_eq!(cost_j(&a, &a).unwrap(), 0);
    }

    #[test]
    fn counts_differing_cells() {
        let grid = g(5);
        let base = vec![false; 25];
        let mut other = base.clone();
        for k in [0, 3, 7, 12, 24] {
            other[k] = true;
        }
        let sim = series(vec![field(grid, &base), field(grid, &base)]);
        let meas = series(vec![field(grid, &base), field(grid, &other)]);
        assert_eq!(cost_j(&sim, &meas).unwrap(), 5);
        // start snapshot excluded by default
        let meas0 = series(vec![field(grid, &other), field(grid, &base)]);
        assert_eq!(cost_j(&sim, &meas0).unwrap(), 0);
        assert_eq!(cost_j_with(&sim, &meas0, true).unwrap(), 5);
    }

    #[test]
    fn zero_counts_as_burnt() {
        let grid = g(3);
        let a = ScalarField::constant(grid, 0.0);
        let b = ScalarField::constant(grid, 1e-300);
        assert_eq!(snapshot_mismatch(&a, &b).unwrap(), 0);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let sim = series(vec![ScalarField::constant(g(4), 1.0)]);
        let meas = series(vec![ScalarField::constant(g(5), 1.0)]);
        assert!(cost_j_with(&sim, &meas, true).is_err());
        let mut late = FrontSeries::new();
        late.push(3.0, ScalarField::constant(g(4), 1.0)).unwrap();
        assert!(cost_j(&sim, &late).is_err());
    }

    #[test]
    fn relative_error_values() {
        let star = ParamVector::from_array([3.0, 0.8, 0.4, 0.7, 0.4, 0.5, 0.03, 0.08]);
        assert_eq!(relative_error(&star, &star).unwrap(), 0.0);
        let hat = ParamVector::from_array([3.44, 0.91, 0.44, 0.78, 0.53, 0.5, 0.035, 0.066]);
        let e = relative_error(&hat, &star).unwrap();
        assert_abs_diff_eq!(e, 0.4804 / 3.2722, epsilon = 1e-4);
        let zero = ParamVector::from_array([0.0; 8]);
        assert!(relative_error(&hat, &zero).is_err());
    }

    #[test]
    fn similarity_small_cases() {
        let grid = g(3);
        let mut a = vec![false; 9];
        let mut b = vec![false; 9];
        a[0] = true;
        a[1] = true;
        b[1] = true;
        b[2] = true;
        let s = similarity_indexes(&field(grid, &a), &field(grid, &b)).unwrap();
        assert_abs_diff_eq!(s.ssi, 0.5);
        assert_abs_diff_eq!(s.jsc, 1.0 / 3.0);
        // P_a = (1 + 6)/9, P_e = (4 + 49)/81
        let (pa, pe) = (7.0 / 9.0, 53.0 / 81.0);
        assert_abs_diff_eq!(s.ks, (pa - pe) / (1.0 - pe), epsilon = 1e-15);

        let same = similarity_indexes(&field(grid, &a), &field(grid, &a)).unwrap();
        assert_eq!((same.ssi, same.jsc, same.ks), (1.0, 1.0, 1.0));

        let mut c = vec![false; 9];
        c[8] = true;
        let disjoint = similarity_indexes(&field(grid, &a), &field(grid, &c)).unwrap();
        assert_eq!((disjoint.ssi, disjoint.jsc), (0.0, 0.0));

        let empty = vec![false; 9];
        assert!(similarity_indexes(&field(grid, &empty), &field(grid, &empty)).is_err());
        let full = vec![true; 9];
        assert!(similarity_indexes(&field(grid, &full), &field(grid, &full)).is_err());
    }

    fn pair() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
        (
            proptest::collection::vec(any::<bool>(), 49),
            proptest::collection::vec(any::<bool>(), 49),
        )
    }

    proptest! {
        #[test]
        fn sorensen_jaccard_identity((a, b) in pair()) {
            let grid = g(7);
            if let Ok(s) = similarity_indexes(&field(grid, &a), &field(grid, &b)) {
                prop_assert!((s.ssi - 2.0 * s.jsc / (1.0 + s.jsc)).abs() < 1e-12);
                prop_assert!(s.ssi >= s.jsc);
                prop_assert!(s.ks <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn mismatch_is_a_metric((a, b) in pair(), c in proptest::collection::vec(any::<bool>(), 49)) {
            let grid = g(7);
            let (fa, fb, fc) = (field(grid, &a), field(grid, &b), field(grid, &c));
            let ab = snapshot_mismatch(&fa, &fb).unwrap();
            prop_assert_eq!(ab, snapshot_mismatch(&fb, &fa).unwrap());
            let bc = snapshot_mismatch(&fb, &fc).unwrap();
            let ac = snapshot_mismatch(&fa, &fc).unwrap();
            prop_assert!(ac <= ab + bc);
        }

        #[test]
        fn kappa_one_iff_identical((a, b) in pair()) {
            let grid = g(7);
            if let Ok(s) = similarity_indexes(&field(grid, &a), &field(grid, &b)) {
                prop_assert_eq!((s.ks - 1.0).abs() < 1e-12, a == b);
            }
        }
    }

    #[test]
    fn report_table() {
        let grid = g(4);
        let mut m1 = vec![false; 16];
        m1[5] = true;
        let mut s1 = m1.clone();
        s1[6] = true;
        let sim = series(vec![field(grid, &m1), field(grid, &s1)]);
        let meas = series(vec![field(grid, &m1), field(grid, &m1)]);
        let star = ParamVector::uniform(3.0, 1.0, 1.0, 0.5, 0.1);
        let rep = metric_report(&sim, &meas, Some((&star, &star))).unwrap();
        assert_eq!(rep.j, 1);
        assert_eq!(rep.cells, 16);
        assert_eq!(rep.r, 1.0 / 16.0);
        assert_eq!(rep.e, Some(0.0));
        assert_eq!(rep.snapshots.len(), 1);
        assert_eq!(rep.snapshots[0].ssi, Some(2.0 / 3.0));
    }
}
