//! Signed distance construction, positive inside the burnt region.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// `phi0(x) = radius - |x - center|`.
pub fn signed_distance_from_circle(
    grid: GridSpec,
    center: (f64, f64),
    radius: f64,
) -> Result<ScalarField> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "radius",
            reason: format!("must be positive, got {radius}"),
        });
    }
    Ok(ScalarField::from_fn(grid, |x, y| {
        radius - (x - center.0).hypot(y - center.1)
    }))
}

/// Exact Euclidean signed distance to the boundary of a burnt mask.
///
/// The front sits halfway between opposite-sign neighbors, so a cell whose
/// nearest opposite cell center lies at distance `d` gets `|phi| = d - h/2`
/// with `h = min(dx, dy)`.
pub fn signed_distance_from_mask(grid: GridSpec, inside: &[bool]) -> Result<ScalarField> {
    if inside.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "mask has {} cells, grid has {}",
            inside.len(),
            grid.len()
        )));
    }
    let n_in = inside.iter().filter(|&&b| b).count();
    if n_in == 0 {
        return Err(Error::NoFront("mask has no burnt cells".into()));
    }
    if n_in == inside.len() {
        return Err(Error::NoFront("mask has no unburnt cells".into()));
    }
    let to_inside = squared_edt(&grid, inside, true);
    let to_outside = squared_edt(&grid, inside, false);
    let half = 0.5 * grid.dx.min(grid.dy);
    let values = inside
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            if b {
                to_outside[k].sqrt() - half
            } else {
                half - to_inside[k].sqrt()
            }
        })
        .collect();
    Ok(ScalarField::from_raw(grid, values))
}

/// Rebuilds `phi` as the signed distance to its own burnt region.
pub fn reinitialize(phi: &ScalarField) -> Result<ScalarField> {
    signed_distance_from_mask(*phi.grid(), &phi.burnt_mask())
}

/// Squared distance from every cell center to the nearest center whose mask
/// value equals `target`. Separable lower-envelope transform, O(N).
fn squared_edt(grid: &GridSpec, mask: &[bool], target: bool) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut f: Vec<f64> = mask
        .iter()
        .map(|&m| if m == target { 0.0 } else { f64::INFINITY })
        .collect();
    let mut env = Envelope::with_capacity(nx.max(ny));

    let mut line = vec![0.0; nx];
    let mut out = vec![0.0; nx];
    for j in 0..ny {
        line.copy_from_slice(&f[j * nx..(j + 1) * nx]);
        env.transform(&line, grid.dx, &mut out);
        f[j * nx..(j + 1) * nx].copy_from_slice(&out);
    }

    let mut line = vec![0.0; ny];
    let mut out = vec![0.0; ny];
    for i in 0..nx {
        for j in 0..ny {
            line[j] = f[j * nx + i];
        }
        env.transform(&line, grid.dy, &mut out);
        for j in 0..ny {
            f[j * nx + i] = out[j];
        }
    }
    f
}

struct Envelope {
    parabolas: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            parabolas: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n),
        }
    }

    /// 1-D squared distance transform of `f` sampled with spacing `h`.
    fn transform(&mut self, f: &[f64], h: f64, out: &mut [f64]) {
        let pos = |q: usize| q as f64 * h;
        self.parabolas.clear();
        self.bounds.clear();
        for (q, &fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            let hq = fq + pos(q) * pos(q);
            loop {
                match self.parabolas.last() {
                    None => {
                        self.parabolas.push(q);
                        self.bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&p) => {
                        let hp = f[p] + pos(p) * pos(p);
                        let s = (hq - hp) / (2.0 * (pos(q) - pos(p)));
                        if s <= *self.bounds.last().unwrap() {
                            self.parabolas.pop();
                            self.bounds.pop();
                        } else {
                            self.parabolas.push(q);
                            self.bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        if self.parabolas.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let x = pos(q);
            while k + 1 < self.parabolas.len() && self.bounds[k + 1] < x {
                k += 1;
            }
            let p = self.parabolas[k];
            *o = (x - pos(p)).powi(2) + f[p];
        }
    }
}
