use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::vec2::{segment_intersection, Vec2};

/// Default tolerance for the alignment `N . nu >= 1 - EPS_ALIGNMENT`.
pub const EPS_ALIGNMENT: f64 = 0.05;

/// Collar coordinates `(z, s)` around a reference curve `Z`, with straight
/// transversal segments `z + s N(z)`.
///
/// The reference is a smoothed copy of the free boundary; `N` is its
/// (renormalized) normal field. `jacobian[i][k]` samples the area element of
/// the collar map at reference vertex `i` and offset `jac_offsets[k]`.
#[derive(Debug, Clone)]
pub struct TransversalFrame {
    pub reference: Curve,
    pub transversal: Vec<Vec2>,
    pub collar_halfwidth: f64,
    pub jacobian: Vec<Vec<f64>>,
    pub jac_offsets: Vec<f64>,
    pub min_alignment: f64,
}

/// One transversal/curve intersection, with the interpolated curve normal at
/// the hit point.
#[derive(Debug, Clone, Copy)]
pub struct HeightHit {
    pub s: f64,
    pub point: Vec2,
    pub normal: Vec2,
}

/// Builds a transversal frame from a free-boundary curve.
///
/// The reference is `gamma0` smoothed by `smoothing` passes of local
/// averaging; `N` is the smoothed normal field renormalized to unit length.
/// Fails with [`Error::FrameTilt`] if `min_i N_i . nu0_i < 1 - EPS_ALIGNMENT`
/// and with [`Error::CollarOverlap`] if the straight transversal segments
/// intersect anywhere in the collar.
pub fn build_frame(gamma0: &Curve, collar_halfwidth: f64, smoothing: usize) -> Result<TransversalFrame> {
    if gamma0.len() < 8 {
        return Err(Error::DegenerateCurve("too few vertices for a frame".into()));
    }
    if !(collar_halfwidth > 0.0) {
        return Err(Error::InvalidInput("collar halfwidth must be positive".into()));
    }
    let m = gamma0.len();
    // reference = smoothed boundary; transversal field = its normals,
    // oriented like the original outward normals
    let reference = gamma0.smoothed(smoothing);
    let transversal = reference.normals.clone();

    let min_alignment = transversal
        .iter()
        .zip(&gamma0.normals)
        .map(|(n, nu)| n.dot(*nu))
        .fold(f64::INFINITY, f64::min);
    if min_alignment < 1.0 - EPS_ALIGNMENT {
        return Err(Error::FrameTilt {
            min_alignment,
            required: 1.0 - EPS_ALIGNMENT,
        });
    }

    // collar embedding: transversal segments must be pairwise disjoint
    let seg: Vec<(Vec2, Vec2)> = (0..m)
        .map(|i| {
            (
                reference.vertices[i] - transversal[i] * collar_halfwidth,
                reference.vertices[i] + transversal[i] * collar_halfwidth,
            )
        })
        .collect();
    for i in 0..m {
        for j in i + 1..m {
            if segment_intersection(seg[i].0, seg[i].1, seg[j].0, seg[j].1).is_some() {
                return Err(Error::CollarOverlap { halfwidth: collar_halfwidth });
            }
        }
    }

    let jac_offsets: Vec<f64> = (0..9)
        .map(|k| collar_halfwidth * (k as f64 / 4.0 - 1.0))
        .collect();
    let mut frame = TransversalFrame {
        reference,
        transversal,
        collar_halfwidth,
        jacobian: Vec::new(),
        jac_offsets: jac_offsets.clone(),
        min_alignment,
    };
    let mut jacobian = Vec::with_capacity(m);
    for i in 0..m {
        let row: Vec<f64> = jac_offsets.iter().map(|s| frame.jacobian_at(i, *s)).collect();
        if row.iter().any(|j| !(*j > 0.0)) {
            return Err(Error::CollarOverlap { halfwidth: collar_halfwidth });
        }
        jacobian.push(row);
    }
    frame.jacobian = jacobian;
    Ok(frame)
}

impl TransversalFrame {
    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    /// Point of the collar map at reference vertex `i`, offset `s`.
    pub fn point(&self, i: usize, s: f64) -> Vec2 {
        self.reference.vertices[i] + self.transversal[i] * s
    }

    /// Area element of the collar map `(arclength, s) -> z + s N(z)` at
    /// reference vertex `i` and offset `s`, by centered finite differences
    /// along the reference.
    pub fn jacobian_at(&self, i: usize, s: f64) -> f64 {
        let m = self.len();
        let ip = (i + 1) % m;
        let im = (i + m - 1) % m;
        let dl = self.reference.vertices[ip].dist(self.reference.vertices[im]);
        let dx = self.point(ip, s) - self.point(im, s);
        (dx.cross(self.transversal[i]) / dl).abs()
    }

    /// Scalar height of `gamma` over the reference: for each vertex `z_i`,
    /// the parameter `s` at which the transversal segment meets `gamma`.
    pub fn height_hits(&self, gamma: &Curve) -> Result<Vec<HeightHit>> {
        let m = self.len();
        let mg = gamma.len();
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let a = self.point(i, -self.collar_halfwidth);
            let b = self.point(i, self.collar_halfwidth);
            let mut hits: Vec<HeightHit> = Vec::new();
            for e in 0..mg {
                let q0 = gamma.vertices[e];
                let q1 = gamma.vertices[gamma.next(e)];
                if let Some((t_seg, t_edge)) = segment_intersection(a, b, q0, q1) {
                    let s = -self.collar_halfwidth + 2.0 * self.collar_halfwidth * t_seg;
                    if hits.iter().any(|h| (h.s - s).abs() < 1e-10) {
                        continue;
                    }
                    let n0 = gamma.normals[e];
                    let n1 = gamma.normals[gamma.next(e)];
                    hits.push(HeightHit {
                        s,
                        point: q0 + (q1 - q0) * t_edge,
                        normal: (n0 + (n1 - n0) * t_edge).normalized(),
                    });
                }
            }
            match hits.len() {
                0 => return Err(Error::OutsideCollar { index: i }),
                1 => out.push(hits[0]),
                n => return Err(Error::NonGraphical { index: i, hits: n }),
            }
        }
        Ok(out)
    }
}

/// Height function of `gamma` in the frame: `eta(z_i)` per reference vertex.
pub fn height_function(frame: &TransversalFrame, gamma: &Curve) -> Result<Vec<f64>> {
    Ok(frame.height_hits(gamma)?.iter().map(|h| h.s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_frame_has_radial_transversals_and_polar_jacobian() {
        let gamma = Curve::circle(Vec2::ZERO, 0.4, 256);
        let frame = build_frame(&gamma, 0.1, 0).unwrap();
        for (i, n) in frame.transversal.iter().enumerate() {
            let radial = frame.reference.vertices[i].normalized();
            assert!(n.dot(radial) > 1.0 - 1e-8);
        }
        // polar area element: J(z, s) = (0.4 + s) / 0.4
        for i in (0..frame.len()).step_by(17) {
            for s in [-0.08, -0.03, 0.0, 0.05, 0.1] {
                let j = frame.jacobian_at(i, s);
                let exact = (0.4 + s) / 0.4;
                assert!((j - exact).abs() < 1e-3, "J {j} vs {exact} at s={s}");
            }
        }
    }

    #[test]
    fn oversized_collar_overlaps() {
        let gamma = Curve::circle(Vec2::ZERO, 0.4, 128);
        assert!(matches!(
            build_frame(&gamma, 4.0, 0),
            Err(Error::CollarOverlap { .. })
        ));
    }

    #[test]
    fn ellipse_frame_alignment() {
        let mut verts = Vec::new();
        for k in 0..256 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
            verts.push(Vec2::new(0.5 * th.cos(), 0.4 * th.sin()));
        }
        let gamma = Curve::from_closed_vertices(&verts, 0.012).unwrap();
        let frame = build_frame(&gamma, 0.05, 2).unwrap();
        // brute-force check over all vertices
        let min = frame
            .transversal
            .iter()
            .zip(&gamma.normals)
            .map(|(n, nu)| n.dot(*nu))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 0.95, "min alignment {min}");
        assert!((frame.min_alignment - min).abs() < 1e-14);
    }

    #[test]
    fn height_of_concentric_circle() {
        let gamma = Curve::circle(Vec2::ZERO, 0.4, 256);
        let frame = build_frame(&gamma, 0.1, 0).unwrap();
        let inner = Curve::circle(Vec2::ZERO, 0.35, 256);
        let eta = height_function(&frame, &inner).unwrap();
        for e in eta {
            assert!((e + 0.05).abs() < 1e-6, "eta {e}");
        }
    }

    #[test]
    fn height_of_reference_is_zero() {
        let gamma = Curve::circle(Vec2::ZERO, 0.4, 200);
        let frame = build_frame(&gamma, 0.08, 0).unwrap();
        let eta = height_function(&frame, &gamma).unwrap();
        for e in eta {
            assert!(e.abs() < 1e-12, "eta {e}");
        }
    }

    #[test]
    fn height_of_translated_circle_is_cosine() {
        let gamma = Curve::circle(Vec2::ZERO, 0.4, 512);
        let frame = build_frame(&gamma, 0.1, 0).unwrap();
        let moved = Curve::circle(Vec2::new(0.01, 0.0), 0.4, 512);
        let eta = height_function(&frame, &moved).unwrap();
        for (i, e) in eta.iter().enumerate() {
            let th = 2.0 * std::f64::consts::PI * i as f64 / 512.0;
            assert!(
                (e - 0.01 * th.cos()).abs() < 2e-4,
                "eta {e} vs {} at {th}",
                0.01 * th.cos()
            );
        }
    }

    #[test]
    fn curve_outside_collar_is_reported() {
        let gamma = Curve::circle(Vec2::ZERO, 0.4, 128);
        let frame = build_frame(&gamma, 0.05, 0).unwrap();
        let far = Curve::circle(Vec2::ZERO, 0.2, 128);
        assert!(matches!(
            height_function(&frame, &far),
            Err(Error::OutsideCollar { .. })
        ));
    }
}
