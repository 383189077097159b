//! Level-set extraction (marching squares), area-based radius estimates and
//! the Hausdorff gap between two interfaces.

use std::collections::HashMap;

use crate::exec;
use crate::grid::{Field, Grid2D};

/// A polyline through level crossings. Closed curves do not repeat their
/// first point.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCurve {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl InterfaceCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Polyline length, including the closing segment of closed curves.
    pub fn arc_length(&self) -> f64 {
        let mut l: f64 = self.points.windows(2).map(|w| dist(w[0], w[1])).sum();
        if self.closed && self.points.len() > 2 {
            l += dist(self.points[self.points.len() - 1], self.points[0]);
        }
        l
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

// Edge keys: horizontal edge from node (i, j) to (i+1, j) is 2k, vertical edge
// from (i, j) to (i, j+1) is 2k+1, with k the node index of (i, j).
fn h_edge(g: &Grid2D, i: usize, j: usize) -> usize {
    2 * g.index(i, j)
}
fn v_edge(g: &Grid2D, i: usize, j: usize) -> usize {
    2 * g.index(i, j) + 1
}

fn edge_point(g: &Grid2D, v: &[f64], key: usize, level: f64) -> [f64; 2] {
    let k = key / 2;
    let (i, j) = (k % g.nx(), k / g.nx());
    let horizontal = key.is_multiple_of(2);
    let (a, b) = if horizontal { (k, k + 1) } else { (k, k + g.nx()) };
    let t = (level - v[a]) / (v[b] - v[a]);
    if horizontal {
        [g.x(i) + t * g.hx(), g.y(j)]
    } else {
        [g.x(i), g.y(j) + t * g.hy()]
    }
}

/// Marching-squares extraction of `{f = level}`.
///
/// Crossings are linearly interpolated along cell edges and the segments are
/// stitched into polylines. Saddle cells are disambiguated by the sign of the
/// cell-centre average.
pub fn extract_level_set(f: &Field, level: f64) -> Vec<InterfaceCurve> {
    let g = *f.grid();
    let v = f.values();
    let above = |k: usize| v[k] >= level;
    let mut segments: Vec<[usize; 2]> = Vec::new();
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() - 1 {
            let c = [
                g.index(i, j),
                g.index(i + 1, j),
                g.index(i + 1, j + 1),
                g.index(i, j + 1),
            ];
            let s = c.map(above);
            let bottom = h_edge(&g, i, j);
            let right = v_edge(&g, i + 1, j);
            let top = h_edge(&g, i, j + 1);
            let left = v_edge(&g, i, j);
            let mut crossings = Vec::with_capacity(4);
            if s[0] != s[1] {
                crossings.push(bottom);
            }
            if s[1] != s[2] {
                crossings.push(right);
            }
            if s[3] != s[2] {
                crossings.push(top);
            }
            if s[0] != s[3] {
                crossings.push(left);
            }
            match crossings.len() {
                0 => {}
                2 => segments.push([crossings[0], crossings[1]]),
                4 => {
                    let centre = c.iter().map(|&k| v[k]).sum::<f64>() / 4.0;
                    if (centre >= level) == s[0] {
                        // corners 0 and 2 joined through the centre: cut off 1 and 3
                        segments.push([bottom, right]);
                        segments.push([left, top]);
                    } else {
                        segments.push([bottom, left]);
                        segments.push([right, top]);
                    }
                }
                _ => unreachable!("a cell has an even number of sign changes"),
            }
        }
    }
    stitch(&segments)
        .into_iter()
        .map(|(keys, closed)| InterfaceCurve {
            points: keys.iter().map(|&e| edge_point(&g, v, e, level)).collect(),
            closed,
        })
        .collect()
}

fn stitch(segments: &[[usize; 2]]) -> Vec<(Vec<usize>, bool)> {
    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &e in seg {
            by_edge.entry(e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut keys = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let [a, b] = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (keys, true);
            }
            keys.push(next);
            at = next;
            match by_edge[&next].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => return (keys, false),
            }
        }
    };

    // open chains start at an edge touched by a single segment
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        for &e in &segments[s] {
            if !used[s] && by_edge[&e].len() == 1 {
                out.push(walk(s, e, &mut used));
            }
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(walk(s, segments[s][0], &mut used));
        }
    }
    out
}

/// Area of the cell part `{f < level}` (or `{f >= level}`) by splitting each
/// cell into four triangles around its centre and integrating the linear
/// interpolant exactly on each.
pub fn inside_area(f: &Field, level: f64, negative_inside: bool) -> f64 {
    let g = *f.grid();
    let v = f.values();
    let tri_area = g.hx() * g.hy() / 4.0;
    let sign = if negative_inside { 1.0 } else { -1.0 };
    exec::sum_rows(g.ny() - 1, |j| {
        let mut s = 0.0;
        for i in 0..g.nx() - 1 {
            let c = [
                v[g.index(i, j)],
                v[g.index(i + 1, j)],
                v[g.index(i + 1, j + 1)],
                v[g.index(i, j + 1)],
            ]
            .map(|x| sign * (x - level));
            let m = (c[0] + c[1] + c[2] + c[3]) / 4.0;
            for t in 0..4 {
                s += negative_fraction(c[t], c[(t + 1) % 4], m);
            }
        }
        s * tri_area
    })
}

/// Fraction of a triangle where the linear interpolant of the vertex values
/// is negative.
fn negative_fraction(a: f64, b: f64, c: f64) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(f64::total_cmp);
    let [lo, mid, hi] = v;
    if hi < 0.0 {
        1.0
    } else if lo >= 0.0 {
        0.0
    } else if mid >= 0.0 {
        // only `lo` negative
        lo * lo / ((lo - mid) * (lo - hi))
    } else {
        1.0 - hi * hi / ((hi - lo) * (hi - mid))
    }
}

/// Effective radius `sqrt(A / pi)` of the region inside the level set.
pub fn radius_estimate(f: &Field, level: f64, negative_inside: bool) -> Option<f64> {
    let a = inside_area(f, level, negative_inside);
    (a > 0.0).then(|| (a / std::f64::consts::PI).sqrt())
}

/// Symmetric Hausdorff distance between the point sets of two curve lists.
pub fn interface_gap(a: &[InterfaceCurve], b: &[InterfaceCurve]) -> Option<f64> {
    let pa: Vec<[f64; 2]> = a.iter().flat_map(|c| c.points.iter().copied()).collect();
    let pb: Vec<[f64; 2]> = b.iter().flat_map(|c| c.points.iter().copied()).collect();
    if pa.is_empty() || pb.is_empty() {
        return None;
    }
    let directed = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        exec::max_indexed(from.len(), |k| {
            to.iter().map(|&q| dist(from[k], q)).fold(f64::INFINITY, f64::min)
        })
    };
    Some(directed(&pa, &pb).max(directed(&pb, &pa)))
}
