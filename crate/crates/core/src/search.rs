//! Bound-constrained generalized pattern search.
//!
//! Variables are mapped affinely onto the unit box. Each iteration polls the
//! `2d` coordinate points `x +/- m e_i`, projected onto the box; a strict
//! improvement moves the incumbent and expands the mesh, otherwise the mesh
//! contracts.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Initial mesh size in scaled coordinates.
    pub mesh_init: f64,
    /// Upper limit for the mesh size after expansions; by default the
    /// initial size.
    pub mesh_max: f64,
    pub expand: f64,
    pub contract: f64,
    pub tol: f64,
    /// Maximum number of poll iterations.
    pub max_iter: usize,
    /// Optional cap on objective evaluations, the initial point included.
    pub max_evals: Option<usize>,
    /// Optional wall-clock budget.
    pub budget: Option<Duration>,
    pub seed: u64,
    /// Evaluate the whole poll set concurrently and take its best point.
    pub parallel_poll: bool,
    /// Start here instead of at a seeded random point.
    pub start: Option<Vec<f64>>,
    /// Stop as soon as the objective reaches this value.
    pub target: Option<f64>,
}

impl SearchConfig {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            lower,
            upper,
            mesh_init: 0.25,
            mesh_max: 0.25,
            expand: 2.0,
            contract: 0.5,
            tol: 1e-4,
            max_iter: 2000,
            max_evals: None,
            budget: None,
            seed: 0,
            parallel_poll: false,
            start: None,
            target: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad =
            |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return bad(
                "bounds",
                format!(
                    "lower/upper must have equal non-zero length, got {} and {}",
                    self.lower.len(),
                    self.upper.len()
                ),
            );
        }
        for (k, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(
                    "bounds",
                    format!("component {k}: need lower < upper, got [{lo}, {hi}]"),
                );
            }
        }
        if !(self.contract > 0.0 && self.contract < 1.0) {
            return bad(
                "contract",
                format!("must lie in (0, 1), got {}", self.contract),
            );
        }
        if !(self.expand > 1.0 && self.expand.is_finite()) {
            return bad("expand", format!("must be > 1, got {}", self.expand));
        }
        if !(self.tol > 0.0) {
            return bad("tol", format!("must be > 0, got {}", self.tol));
        }
        if !(self.mesh_init > 0.0 && self.mesh_init <= 1.0) {
            return bad(
                "mesh_init",
                format!("must lie in (0, 1], got {}", self.mesh_init),
            );
        }
        if !(self.mesh_max >= self.mesh_init && self.mesh_max <= 1.0) {
            return bad(
                "mesh_max",
                format!("must lie in [mesh_init, 1], got {}", self.mesh_max),
            );
        }
        if let Some(s) = &self.start {
            if s.len() != self.dim() {
                return bad(
                    "start",
                    format!("expected {} components, got {}", self.dim(), s.len()),
                );
            }
            if s.iter().any(|v| !v.is_finite()) {
                return bad("start", "must be finite".into());
            }
        }
        Ok(())
    }

    fn scale(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }

    fn unscale(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (lo, hi))| if *t >= 1.0 { *hi } else { lo + t * (hi - lo) })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MeshTol,
    StepTol,
    FvalTol,
    MaxIter,
    MaxEvals,
    TimeBudget,
}

/// Incumbent after one iteration (iteration 0 is the starting point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub mesh: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub records: Vec<IterRecord>,
    pub status: StopReason,
}

impl SearchTrace {
    pub fn evals(&self) -> usize {
        self.records.last().map_or(0, |r| r.evals)
    }

    /// Line-delimited CSV: `iteration,value,mesh,evals,x0,..,x{d-1}`.
    pub fn to_csv(&self, names: &[&str]) -> String {
        let mut s = String::from("iteration,value,mesh,evals");
        for n in names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{}",
                r.iteration, r.value, r.mesh, r.evals
            ));
            for v in &r.point {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub trace: SearchTrace,
}

struct Budget<'a> {
    cfg: &'a SearchConfig,
    evals: usize,
    started: Instant,
}

impl Budget<'_> {
    fn exhausted(&self) -> Option<StopReason> {
        if self.cfg.max_evals.is_some_and(|m| self.evals >= m) {
            return Some(StopReason::MaxEvals);
        }
        if self.cfg.budget.is_some_and(|b| self.started.elapsed() >= b) {
            return Some(StopReason::TimeBudget);
        }
        None
    }
}

/// Unit-box coordinates snapped to a 2^-40 lattice.
fn cache_key(u: &[f64]) -> Vec<i64> {
    u.iter()
        .map(|v| (v * (1u64 << 40) as f64).round() as i64)
        .collect()
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `objective` over the box `[lower, upper]`.
///
/// Non-finite objective values count as `+inf`.
pub fn minimize<F>(objective: F, cfg: &SearchConfig) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let d = cfg.dim();
    let mut budget = Budget {
        cfg,
        evals: 0,
        started: Instant::now(),
    };
    let eval = |u: &[f64]| sanitize(objective(&cfg.unscale(u)));

    let mut x = match &cfg.start {
        Some(s) => cfg.scale(s),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..d).map(|_| rng.random::<f64>()).collect()
        }
    };
    // incumbent in original coordinates, exactly as passed to the objective
    let mut xr = match &cfg.start {
        Some(s)
            if s.iter()
                .zip(cfg.lower.iter().zip(&cfg.upper))
                .all(|(v, (lo, hi))| v >= lo && v <= hi) =>
        {
            s.clone()
        }
        _ => cfg.unscale(&x),
    };
    let mut fx = sanitize(objective(&xr));
    budget.evals += 1;
    // revisited mesh points are looked up, not re-evaluated
    let mut cache: HashMap<Vec<i64>, f64> = HashMap::new();
    cache.insert(cache_key(&x), fx);
    let mut mesh = cfg.mesh_init;
    let mut records = vec![IterRecord {
        iteration: 0,
        point: xr.clone(),
        value: fx,
        mesh,
        evals: budget.evals,
    }];

    let status = 'outer: loop {
        let iteration = records.len();
        if cfg.target.is_some_and(|t| fx <= t) {
            break StopReason::FvalTol;
        }
        if iteration > cfg.max_iter {
            break StopReason::MaxIter;
        }
        if let Some(reason) = budget.exhausted() {
            break reason;
        }

        let trials: Vec<Vec<f64>> = (0..2 * d)
            .filter_map(|k| {
                let (i, sign) = (k / 2, if k % 2 == 0 { 1.0 } else { -1.0 });
                let mut t = x.clone();
                t[i] = (t[i] + sign * mesh).clamp(0.0, 1.0);
                (t[i] != x[i]).then_some(t)
            })
            .collect();

        let mut accepted: Option<(Vec<f64>, f64)> = None;
        if cfg.parallel_poll {
            let fresh: Vec<&Vec<f64>> = trials
                .iter()
                .filter(|t| !cache.contains_key(&cache_key(t)))
                .collect();
            let take = cfg.max_evals.map_or(fresh.len(), |m| {
                fresh.len().min(m.saturating_sub(budget.evals))
            });
            let values: Vec<f64> = fresh[..take].par_iter().map(|t| eval(t)).collect();
            budget.evals += take;
            for (t, &v) in fresh[..take].iter().zip(&values) {
                cache.insert(cache_key(t), v);
            }
            let mut best: Option<(usize, f64)> = None;
            for (k, t) in trials.iter().enumerate() {
                if let Some(&v) = cache.get(&cache_key(t)) {
                    if v < fx && best.is_none_or(|(_, b)| v < b) {
                        best = Some((k, v));
                    }
                }
            }
            accepted = best.map(|(k, v)| (trials[k].clone(), v));
        } else {
            for t in trials {
                let key = cache_key(&t);
                if let Some(&v) = cache.get(&key) {
                    if v < fx {
                        accepted = Some((t, v));
                        break;
                    }
                    continue;
                }
                if let Some(reason) = budget.exhausted() {
                    records.push(IterRecord {
                        iteration,
                        point: xr.clone(),
                        value: fx,
                        mesh,
                        evals: budget.evals,
                    });
                    break 'outer reason;
                }
                let v = eval(&t);
                budget.evals += 1;
                cache.insert(key, v);
                if v < fx {
                    accepted = Some((t, v));
                    break;
                }
            }
        }

        let mut stop = None;
        match accepted {
            Some((t, v)) => {
                let step = t
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let df = (fx - v).abs();
                xr = cfg.unscale(&t);
                x = t;
                fx = v;
                mesh = (mesh * cfg.expand).min(cfg.mesh_max);
                if step < cfg.tol && df < cfg.tol {
                    stop = Some(StopReason::StepTol);
                }
            }
            None => {
                mesh *= cfg.contract;
                if mesh < cfg.tol {
                    stop = Some(StopReason::MeshTol);
                }
            }
        }
        log::debug!(
            "gps iter {iteration}: f = {fx}, mesh = {mesh}, evals = {}",
            budget.evals
        );
        records.push(IterRecord {
            iteration,
            point: xr.clone(),
            value: fx,
            mesh,
            evals: budget.evals,
        });
        if let Some(s) = stop {
            break s;
        }
    };

    Ok(SearchResult {
        best_point: xr,
        best_value: fx,
        trace: SearchTrace { records, status },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    fn quad(p: &[f64]) -> f64 {
        (p[0] - 0.3).powi(2) + (p[1] + 0.2).powi(2)
    }

    #[test]
    fn shifted_quadratic() {
        let cfg = SearchConfig {
            seed: 7,
            ..SearchConfig::new(vec![-1.0, -1.0], vec![1.0, 1.0])
        };
        let res = minimize(quad, &cfg).unwrap();
        assert!((res.best_point[0] - 0.3).abs() < 1e-3);
        assert!((res.best_point[1] + 0.2).abs() < 1e-3);
        assert!(res.trace.evals() < 200, "evals = {}", res.trace.evals());
        assert_eq!(res.trace.status, StopReason::MeshTol);
    }

    #[test]
    fn start_at_minimizer_stays_put() {
        let cfg = SearchConfig {
            start: Some(vec![0.3, -0.2]),
            ..SearchConfig::new(vec![-1.0, -1.0], vec![1.0, 1.0])
        };
        let res = minimize(quad, &cfg).unwrap();
        assert!((res.best_point[0] - 0.3).abs() < 1e-15);
        assert!((res.best_point[1] + 0.2).abs() < 1e-15);
        assert_eq!(res.best_value, quad(&[0.3, -0.2]));
        assert_eq!(res.trace.status, StopReason::MeshTol);
    }

    #[test]
    fn active_bound() {
        let cfg = SearchConfig::new(vec![-1.0], vec![1.0]);
        let res = minimize(|p: &[f64]| (p[0] - 2.0).powi(2), &cfg).unwrap();
        assert_eq!(res.best_point[0], 1.0);
    }

    #[test]
    fn evaluations_stay_inside_box() {
        let seen = Mutex::new(Vec::new());
        let cfg = SearchConfig {
            seed: 3,
            ..SearchConfig::new(vec![0.0, 10.0, -5.0], vec![1.0, 20.0, -4.0])
        };
        minimize(
            |p: &[f64]| {
                seen.lock().unwrap().push(p.to_vec());
                -p.iter().sum::<f64>()
            },
            &cfg,
        )
        .unwrap();
        for p in seen.into_inner().unwrap() {
            for (k, v) in p.iter().enumerate() {
                assert!(*v >= cfg.lower[k] && *v <= cfg.upper[k]);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = SearchConfig {
            seed: 11,
            ..SearchConfig::new(vec![-2.0; 4], vec![2.0; 4])
        };
        let f = |p: &[f64]| {
            p.iter()
                .enumerate()
                .map(|(i, v)| (v - i as f64 * 0.3).abs())
                .sum::<f64>()
        };
        let a = minimize(f, &cfg).unwrap();
        let b = minimize(f, &cfg).unwrap();
        assert_eq!(a, b);
        let par = SearchConfig {
            parallel_poll: true,
            ..cfg
        };
        assert_eq!(minimize(f, &par).unwrap(), minimize(f, &par).unwrap());
    }

    #[test]
    fn accepted_values_non_increasing() {
        let cfg = SearchConfig {
            seed: 5,
            ..SearchConfig::new(vec![-3.0; 3], vec![3.0; 3])
        };
        // rugged objective
        let f = |p: &[f64]| p.iter().map(|v| v * v + (5.0 * v).sin().abs()).sum::<f64>();
        let res = minimize(f, &cfg).unwrap();
        for w in res.trace.records.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
    }

    #[test]
    fn nan_objective_is_rejected_point() {
        let cfg = SearchConfig {
            start: Some(vec![0.0]),
            ..SearchConfig::new(vec![-1.0], vec![1.0])
        };
        let res = minimize(|p: &[f64]| if p[0] > 0.0 { f64::NAN } else { p[0] }, &cfg).unwrap();
        assert_eq!(res.best_point[0], -1.0);
    }

    #[test]
    fn zero_iterations_evaluates_start_only() {
        let count = AtomicUsize::new(0);
        let cfg = SearchConfig {
            max_iter: 0,
            seed: 9,
            ..SearchConfig::new(vec![0.0; 8], vec![1.0; 8])
        };
        let res = minimize(
            |p: &[f64]| {
                count.fetch_add(1, Ordering::SeqCst);
                p.iter().sum()
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(count.load(Ordering::SeqCst), 1);
        assert_eq!(res.trace.status, StopReason::MaxIter);
        assert_eq!(res.trace.records.len(), 1);
    }

    #[test]
    fn evaluation_cap_is_respected() {
        let count = AtomicUsize::new(0);
        let cfg = SearchConfig {
            max_evals: Some(37),
            seed: 1,
            ..SearchConfig::new(vec![-1.0; 8], vec![1.0; 8])
        };
        let res = minimize(
            |p: &[f64]| {
                count.fetch_add(1, Ordering::SeqCst);
                p.iter().map(|v| (v - 0.123).abs()).sum()
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(count.load(Ordering::SeqCst), 37);
        assert_eq!(res.trace.evals(), 37);
        assert_eq!(res.trace.status, StopReason::MaxEvals);
    }

    #[test]
    fn target_stops_early() {
        let cfg = SearchConfig {
            start: Some(vec![0.5]),
            target: Some(0.0),
            ..SearchConfig::new(vec![0.0], vec![1.0])
        };
        let res = minimize(|p: &[f64]| (p[0] - 0.5).abs(), &cfg).unwrap();
        assert_eq!(res.trace.status, StopReason::FvalTol);
        assert_eq!(res.trace.evals(), 1);
    }

    #[test]
    fn invalid_configs() {
        assert!(SearchConfig::new(vec![1.0], vec![0.0]).validate().is_err());
        assert!(SearchConfig::new(vec![0.0], vec![1.0, 2.0])
            .validate()
            .is_err());
        let mut c = SearchConfig::new(vec![0.0], vec![1.0]);
        c.contract = 1.0;
        assert!(c.validate().is_err());
        c.contract = 0.5;
        c.expand = 1.0;
        assert!(c.validate().is_err());
        c.expand = 2.0;
        c.mesh_max = 0.1;
        assert!(c.validate().is_err());
        c.mesh_max = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn revisited_points_are_not_reevaluated() {
        let seen = Mutex::new(Vec::<Vec<u64>>::new());
        let cfg = SearchConfig {
            seed: 3,
            ..SearchConfig::new(vec![-1.0; 3], vec![1.0; 3])
        };
        let res = minimize(
            |p: &[f64]| {
                seen.lock()
                    .unwrap()
                    .push(p.iter().map(|v| v.to_bits()).collect());
                p.iter().map(|v| (v - 0.4).abs()).sum()
            },
            &cfg,
        )
        .unwrap();
        let mut pts = seen.into_inner().unwrap();
        let n = pts.len();
        assert_eq!(n, res.trace.evals());
        pts.sort();
        pts.dedup();
        assert_eq!(pts.len(), n);
    }

    #[test]
    fn mesh_never_exceeds_cap() {
        let cfg = SearchConfig {
            start: Some(vec![-1.0, -1.0]),
            mesh_init: 0.1,
            mesh_max: 0.2,
            ..SearchConfig::new(vec![-1.0, -1.0], vec![1.0, 1.0])
        };
        let res = minimize(|p: &[f64]| -p[0] - p[1], &cfg).unwrap();
        assert!(res.trace.records.iter().all(|r| r.mesh <= 0.2));
        let pts: Vec<&Vec<f64>> = res.trace.records.iter().map(|r| &r.point).collect();
        for w in pts.windows(2) {
            for (a, b) in w[0].iter().zip(w[1]) {
                assert!((a - b).abs() <= 0.2 * 2.0 + 1e-12);
            }
        }
        assert_eq!(res.best_point, vec![1.0, 1.0]);
    }
}
