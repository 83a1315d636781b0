//! Zero level-set extraction by marching squares over the cell-center lattice.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grid::{GridSpec, ScalarField};

/// One connected piece of the front `{phi = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPolyline {
    pub points: Vec<(f64, f64)>,
    /// Closed polylines do not repeat their first point at the end.
    pub closed: bool,
}

impl FrontPolyline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Even-odd containment test; meaningful for closed polylines only.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let pts = &self.points;
        let mut inside = false;
        let mut j = pts.len().wrapping_sub(1);
        for i in 0..pts.len() {
            let (xi, yi) = pts[i];
            let (xj, yj) = pts[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Signed shoelace area (positive when counter-clockwise).
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut a = 0.0;
        for k in 0..n {
            let (x0, y0) = self.points[k];
            let (x1, y1) = self.points[(k + 1) % n];
            a += x0 * y1 - x1 * y0;
        }
        0.5 * a
    }
}

/// Rasterizes closed polylines with the even-odd rule.
pub fn rasterize(grid: &GridSpec, fronts: &[FrontPolyline]) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    for front in fronts.iter().filter(|f| f.closed) {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                if front.contains(x, y) {
                    let k = grid.index(i, j);
                    out[k] = !out[k];
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct EdgeId(usize);

/// Traces every connected component of `{phi = 0}`.
///
/// Cells with `phi >= 0` count as burnt. Crossing points are linearly
/// interpolated along lattice edges; ambiguous saddle squares are resolved
/// by the sign of the four-corner average. Fronts that leave the grid come
/// back as open polylines.
pub fn extract_zero_contour(phi: &ScalarField) -> Vec<FrontPolyline> {
    let g = *phi.grid();
    let v = phi.values();
    let (nx, ny) = (g.nx, g.ny);

    let horizontal = |i: usize, j: usize| EdgeId(2 * (j * nx + i));
    let vertical = |i: usize, j: usize| EdgeId(2 * (j * nx + i) + 1);

    let mut points: HashMap<EdgeId, (f64, f64)> = HashMap::new();
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();

    let crossing = |a: (usize, usize), b: (usize, usize)| -> (f64, f64) {
        let va = v[g.index(a.0, a.1)];
        let vb = v[g.index(b.0, b.1)];
        let t = va / (va - vb);
        let (xa, ya) = g.center(a.0, a.1);
        let (xb, yb) = g.center(b.0, b.1);
        (xa + t * (xb - xa), ya + t * (yb - ya))
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [
                v[g.index(i, j)],
                v[g.index(i + 1, j)],
                v[g.index(i + 1, j + 1)],
                v[g.index(i, j + 1)],
            ];
            let case = c
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &val)| acc | (u8::from(val >= 0.0) << k));
            if case == 0 || case == 15 {
                continue;
            }
            let bottom = horizontal(i, j);
            let right = vertical(i + 1, j);
            let top = horizontal(i, j + 1);
            let left = vertical(i, j);

            let mut add = |e: EdgeId| {
                points.entry(e).or_insert_with(|| {
                    if e == bottom {
                        crossing((i, j), (i + 1, j))
                    } else if e == right {
                        crossing((i + 1, j), (i + 1, j + 1))
                    } else if e == top {
                        crossing((i, j + 1), (i + 1, j + 1))
                    } else {
                        crossing((i, j), (i, j + 1))
                    }
                });
            };

            let cut_br_tl = [(bottom, right), (top, left)];
            let cut_bl_tr = [(left, bottom), (right, top)];
            let centre_inside = c.iter().sum::<f64>() >= 0.0;
            let pair: &[(EdgeId, EdgeId)] = match case {
                5 if centre_inside => &cut_br_tl,
                5 => &cut_bl_tr,
                10 if centre_inside => &cut_bl_tr,
                10 => &cut_br_tl,
                _ => {
                    let inside = |k: usize| case & (1 << k) != 0;
                    let mut edges = Vec::with_capacity(2);
                    if inside(0) != inside(1) {
                        edges.push(bottom);
                    }
                    if inside(1) != inside(2) {
                        edges.push(right);
                    }
                    if inside(3) != inside(2) {
                        edges.push(top);
                    }
                    if inside(0) != inside(3) {
                        edges.push(left);
                    }
                    debug_assert_eq!(edges.len(), 2);
                    add(edges[0]);
                    add(edges[1]);
                    segments.push((edges[0], edges[1]));
                    continue;
                }
            };
            for &(a, b) in pair {
                add(a);
                add(b);
                segments.push((a, b));
            }
        }
    }

    link_segments(&segments, &points)
}

fn link_segments(
    segments: &[(EdgeId, EdgeId)],
    points: &HashMap<EdgeId, (f64, f64)>,
) -> Vec<FrontPolyline> {
    let mut incident: HashMap<EdgeId, Vec<usize>> = HashMap::with_capacity(points.len());
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: EdgeId, used: &mut Vec<bool>| {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (chain, true);
            }
            chain.push(next);
            at = next;
            match incident[&at].iter().copied().find(|&s| !used[s]) {
                Some(s) => seg = s,
                None => return (chain, false),
            }
        }
    };

    // open chains start at edges touched by a single segment
    let mut ends: Vec<EdgeId> = incident
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    ends.sort_by_key(|e| e.0);
    for e in ends {
        let s = incident[&e][0];
        if used[s] {
            continue;
        }
        let (chain, closed) = walk(s, e, &mut used);
        out.push((chain, closed));
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (chain, closed) = walk(s, segments[s].0, &mut used);
            out.push((chain, closed));
        }
    }

    out.into_iter()
        .map(|(chain, closed)| FrontPolyline {
            points: chain.iter().map(|e| points[e]).collect(),
            closed,
        })
        .collect()
}
