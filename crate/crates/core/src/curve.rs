use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::vec2::{point_segment_distance, Vec2};
use std::collections::HashMap;

/// Closed simple polyline with outward unit normals.
///
/// "Outward" means pointing toward the unbounded component (the region `Omega`
/// of the obstacle problem). Vertex `i` connects to vertex `(i + 1) % len`.
#[derive(Debug, Clone)]
pub struct Curve {
    pub vertices: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    pub arc_spacing: f64,
}

impl Curve {
    /// Circle sampled counter-clockwise with outward normals.
    pub fn circle(center: Vec2, radius: f64, n: usize) -> Curve {
        let mut vertices = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let dir = Vec2::new(th.cos(), th.sin());
            vertices.push(center + dir * radius);
            normals.push(dir);
        }
        Curve {
            vertices,
            normals,
            arc_spacing: 2.0 * std::f64::consts::PI * radius / n as f64,
        }
    }

    /// Builds a curve from a closed vertex loop: resamples to near-uniform
    /// arclength and orients normals toward the unbounded side.
    pub fn from_closed_vertices(verts: &[Vec2], arc_spacing: f64) -> Result<Curve> {
        if verts.len() < 3 {
            return Err(Error::DegenerateCurve(format!("{} vertices", verts.len())));
        }
        let vertices = resample_closed(verts, arc_spacing);
        let mut c = Curve { vertices, normals: Vec::new(), arc_spacing };
        c.normals = c.outward_normals_by_winding();
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn next(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    #[inline]
    pub fn prev(&self, i: usize) -> usize {
        (i + self.len() - 1) % self.len()
    }

    pub fn length(&self) -> f64 {
        let m = self.len();
        (0..m).map(|i| self.vertices[i].dist(self.vertices[self.next(i)])).sum()
    }

    /// Trapezoid quadrature weight per vertex: half the two adjacent segment
    /// lengths, with each chord corrected to the circular arc through the
    /// neighboring vertices. Exact for sampled circles; removes the O(ds^2)
    /// chord bias that would otherwise cap the quadrature accuracy.
    pub fn weights(&self) -> Vec<f64> {
        let m = self.len();
        let arcs: Vec<f64> = (0..m).map(|i| self.segment_arc(i)).collect();
        (0..m).map(|i| 0.5 * (arcs[(i + m - 1) % m] + arcs[i])).collect()
    }

    /// Arc-length estimate of segment `i -> i+1` from the circumcircles of the
    /// two vertex triples containing it.
    fn segment_arc(&self, i: usize) -> f64 {
        let m = self.len();
        let a = self.vertices[(i + m - 1) % m];
        let b = self.vertices[i];
        let c = self.vertices[(i + 1) % m];
        let d = self.vertices[(i + 2) % m];
        let chord = b.dist(c);
        let arc1 = chord_to_arc(chord, circumradius(a, b, c));
        let arc2 = chord_to_arc(chord, circumradius(b, c, d));
        0.5 * (arc1 + arc2)
    }

    pub fn centroid(&self) -> Vec2 {
        let mut acc = Vec2::ZERO;
        for v in &self.vertices {
            acc += *v;
        }
        acc / self.len() as f64
    }

    /// Unit tangents by centered differences.
    pub fn tangents(&self) -> Vec<Vec2> {
        let m = self.len();
        (0..m)
            .map(|i| (self.vertices[self.next(i)] - self.vertices[self.prev(i)]).normalized())
            .collect()
    }

    /// Normals from centered-difference tangents, oriented away from the
    /// enclosed region (using the loop winding).
    fn outward_normals_by_winding(&self) -> Vec<Vec2> {
        let m = self.len();
        let mut area2 = 0.0;
        for i in 0..m {
            area2 += self.vertices[i].cross(self.vertices[self.next(i)]);
        }
        // CCW loop (positive area): rot90 of the tangent points inward.
        let sign = if area2 > 0.0 { -1.0 } else { 1.0 };
        self.tangents().iter().map(|t| t.rot90() * sign).collect()
    }

    /// Signed curvature by 5-point finite differences along arclength.
    ///
    /// Sign convention: a circle with outward normals has curvature `-1/R`,
    /// so the curve bends away from its normal field.
    pub fn curvature(&self) -> Vec<f64> {
        let m = self.len();
        let ds = self.length() / m as f64;
        let v = &self.vertices;
        (0..m)
            .map(|i| {
                let im2 = (i + m - 2) % m;
                let im1 = (i + m - 1) % m;
                let ip1 = (i + 1) % m;
                let ip2 = (i + 2) % m;
                let d1 = (v[im2] - v[ip2] + (v[ip1] - v[im1]) * 8.0) / (12.0 * ds);
                let d2 = ((v[ip1] + v[im1]) * 16.0 - v[i] * 30.0 - v[ip2] - v[im2])
                    / (12.0 * ds * ds);
                d2.dot(self.normals[i]) / d1.norm2().max(1e-300)
            })
            .collect()
    }

    /// Minimum osculating radius, a curvature-based estimate of the two-sided
    /// touching-ball radius.
    pub fn min_osculating_radius(&self) -> f64 {
        let kmax = self.curvature().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        if kmax == 0.0 {
            f64::INFINITY
        } else {
            1.0 / kmax
        }
    }

    /// Copy smoothed by `passes` rounds of 1-2-1 vertex averaging, normals
    /// recomputed and kept on the same side. Vertex-level noise from grid
    /// extraction otherwise dominates curvature estimates.
    pub fn smoothed(&self, passes: usize) -> Curve {
        let m = self.len();
        let mut verts = self.vertices.clone();
        for _ in 0..passes {
            let prev = verts.clone();
            for i in 0..m {
                verts[i] = (prev[(i + m - 1) % m] + prev[i] * 2.0 + prev[(i + 1) % m]) * 0.25;
            }
        }
        let mut out = Curve { vertices: verts, normals: Vec::new(), arc_spacing: self.arc_spacing };
        let tangents = out.tangents();
        out.normals = tangents
            .iter()
            .zip(&self.normals)
            .map(|(t, n0)| {
                let n = t.rot90();
                if n.dot(*n0) >= 0.0 {
                    n
                } else {
                    -n
                }
            })
            .collect();
        out
    }

    /// Largest / smallest consecutive vertex distance.
    pub fn spacing_bounds(&self) -> (f64, f64) {
        let m = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..m {
            let d = self.vertices[i].dist(self.vertices[self.next(i)]);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    pub fn min_distance_to(&self, p: Vec2) -> f64 {
        let m = self.len();
        let mut best = f64::INFINITY;
        for i in 0..m {
            best = best.min(point_segment_distance(p, self.vertices[i], self.vertices[self.next(i)]));
        }
        best
    }
}

/// Circumradius of the circle through three points; infinite when collinear.
fn circumradius(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let cross = (b - a).cross(c - a).abs();
    if cross < 1e-300 {
        return f64::INFINITY;
    }
    (a.dist(b) * b.dist(c) * c.dist(a)) / (2.0 * cross)
}

fn chord_to_arc(chord: f64, radius: f64) -> f64 {
    if !radius.is_finite() || chord >= 2.0 * radius {
        return chord;
    }
    2.0 * radius * (chord / (2.0 * radius)).asin()
}

/// Symmetric Hausdorff distance between two closed polylines, using
/// point-to-segment distances in both directions.
pub fn hausdorff_distance(a: &Curve, b: &Curve) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::DegenerateCurve("empty curve".into()));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

fn directed_hausdorff(a: &Curve, b: &Curve) -> f64 {
    a.vertices
        .iter()
        .map(|p| b.min_distance_to(*p))
        .fold(0.0f64, f64::max)
}

/// Resamples a closed vertex loop to near-uniform arclength spacing.
pub fn resample_closed(verts: &[Vec2], target_ds: f64) -> Vec<Vec2> {
    let m = verts.len();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for i in 0..m {
        let d = verts[i].dist(verts[(i + 1) % m]);
        cum.push(cum[i] + d);
    }
    let total = *cum.last().unwrap();
    let count = ((total / target_ds).round() as usize).max(8);
    let step = total / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    for k in 0..count {
        let s = k as f64 * step;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] <= s {
            seg += 1;
        }
        let len = (cum[seg + 1] - cum[seg]).max(1e-300);
        let t = (s - cum[seg]) / len;
        let p0 = verts[seg % m];
        let p1 = verts[(seg + 1) % m];
        out.push(p0 + (p1 - p0) * t);
    }
    out
}

/// Level-set contour extraction by cell-edge linear interpolation
/// (marching-squares connectivity, saddles resolved by the cell-center value).
///
/// The result is resampled to near-uniform `arc_spacing` and carries outward
/// unit normals pointing toward larger field values.
pub fn extract_free_boundary(field: &ScalarField, level: f64, arc_spacing: f64) -> Result<Curve> {
    let loops = extract_loops(field, level)?;
    let spacing = field.grid.spacing;
    let mut real: Vec<&Vec<Vec2>> = loops
        .iter()
        .filter(|l| l.len() >= 3 && loop_length(l) > 4.0 * spacing)
        .collect();
    if real.is_empty() {
        return Err(Error::NoContour);
    }
    if real.len() > 1 {
        return Err(Error::MultipleComponents(real.len()));
    }
    let verts = resample_closed(real.pop().unwrap(), arc_spacing);
    let mut curve = Curve { vertices: verts, normals: Vec::new(), arc_spacing };
    curve.normals = oriented_normals(&curve, field);
    let (lo, hi) = curve.spacing_bounds();
    if lo < 0.4 * arc_spacing || hi > 2.0 * arc_spacing {
        return Err(Error::DegenerateCurve(format!(
            "resampled spacing [{lo}, {hi}] outside bounds for target {arc_spacing}"
        )));
    }
    Ok(curve)
}

fn loop_length(l: &[Vec2]) -> f64 {
    let m = l.len();
    (0..m).map(|i| l[i].dist(l[(i + 1) % m])).sum()
}

/// Normals oriented toward larger field values.
fn oriented_normals(curve: &Curve, field: &ScalarField) -> Vec<Vec2> {
    let tangents = curve.tangents();
    let eps = 0.5 * field.grid.spacing;
    let mut votes = 0i64;
    for (i, t) in tangents.iter().enumerate() {
        let n = t.rot90();
        let p = curve.vertices[i];
        let plus = field.bilinear(p + n * eps);
        let minus = field.bilinear(p - n * eps);
        votes += if plus > minus { 1 } else { -1 };
    }
    let sign = if votes >= 0 { 1.0 } else { -1.0 };
    tangents.iter().map(|t| t.rot90() * sign).collect()
}

/// Extracts all closed loops of the level set, as vertex lists.
fn extract_loops(field: &ScalarField, level: f64) -> Result<Vec<Vec<Vec2>>> {
    let g = &field.grid;
    let above = |i: usize, j: usize| field.at(i, j) > level;

    let any_above = field.values.iter().any(|v| *v > level);
    let any_below = field.values.iter().any(|v| *v <= level);
    if !any_above || !any_below {
        return Err(Error::NoContour);
    }

    // Edge key: (node index, axis) with axis 0 = toward +x, 1 = toward +y.
    let crossing = |i0: usize, j0: usize, i1: usize, j1: usize| -> Vec2 {
        let f0 = field.at(i0, j0);
        let f1 = field.at(i1, j1);
        let t = ((level - f0) / (f1 - f0)).clamp(0.0, 1.0);
        let p0 = g.pos(i0, j0);
        let p1 = g.pos(i1, j1);
        p0 + (p1 - p0) * t
    };

    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    struct EdgeKey(usize, u8);

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let b0 = above(i, j);
            let b1 = above(i + 1, j);
            let b2 = above(i + 1, j + 1);
            let b3 = above(i, j + 1);
            let case = b0 as u8 | (b1 as u8) << 1 | (b2 as u8) << 2 | (b3 as u8) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            let e_bottom = EdgeKey(g.idx(i, j), 0);
            let e_right = EdgeKey(g.idx(i + 1, j), 1);
            let e_top = EdgeKey(g.idx(i, j + 1), 0);
            let e_left = EdgeKey(g.idx(i, j), 1);
            let mut push = |a: EdgeKey, b: EdgeKey| segments.push((a, b));
            match case {
                1 | 14 => push(e_left, e_bottom),
                2 | 13 => push(e_bottom, e_right),
                3 | 12 => push(e_left, e_right),
                4 | 11 => push(e_right, e_top),
                6 | 9 => push(e_bottom, e_top),
                7 | 8 => push(e_left, e_top),
                5 | 10 => {
                    let center = 0.25
                        * (field.at(i, j)
                            + field.at(i + 1, j)
                            + field.at(i + 1, j + 1)
                            + field.at(i, j + 1));
                    let center_above = center > level;
                    // case 5: corners 0 and 2 above; case 10: corners 1 and 3.
                    let join_through_center = center_above == (case == 5);
                    if join_through_center {
                        push(e_bottom, e_right);
                        push(e_top, e_left);
                    } else {
                        push(e_left, e_bottom);
                        push(e_right, e_top);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    if segments.is_empty() {
        return Err(Error::NoContour);
    }

    // Stitch segments into loops by shared edge keys.
    let mut incidence: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        incidence.entry(*a).or_default().push(s);
        incidence.entry(*b).or_default().push(s);
    }

    let edge_pos = |k: EdgeKey| -> Vec2 {
        let (i, j) = (k.0 % g.nx, k.0 / g.nx);
        match k.1 {
            0 => crossing(i, j, i + 1, j),
            _ => crossing(i, j, i, j + 1),
        }
    };

    let mut visited = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if visited[start] {
            continue;
        }
        let mut keys: Vec<EdgeKey> = Vec::new();
        let mut cur = start;
        let mut enter = segments[start].0;
        let closed = loop {
            visited[cur] = true;
            let (a, b) = segments[cur];
            let exit = if enter == a { b } else { a };
            keys.push(exit);
            let nexts = &incidence[&exit];
            let next = nexts.iter().copied().find(|s| !visited[*s]);
            match next {
                Some(s) => {
                    cur = s;
                    enter = exit;
                }
                // closed if the exit edge returns to the starting segment
                None => break exit == segments[start].0 || exit == segments[start].1,
            }
        };
        if closed && keys.len() >= 3 {
            let mut pts: Vec<Vec2> = keys.into_iter().map(edge_pos).collect();
            pts.dedup_by(|a, b| a.dist(*b) < 1e-12);
            if pts.len() >= 3 && pts[0].dist(*pts.last().unwrap()) < 1e-12 {
                pts.pop();
            }
            if pts.len() >= 3 {
                loops.push(pts);
            }
        }
    }
    if loops.is_empty() {
        return Err(Error::NoContour);
    }
    Ok(loops)
}
