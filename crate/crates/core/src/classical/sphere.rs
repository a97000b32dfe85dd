use std::f64::consts::PI;

use nalgebra::Unit;

use super::Vec3;
use crate::error::{HolonomyError, Result};

const UNIT_TOL: f64 = 1e-12;
const TANGENCY_TOL: f64 = 1e-10;
const ANTIPODAL_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    GeodesicInterpolated,
    AsGiven,
}

/// A closed loop of unit vectors; the segment from the last point back to
/// the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePath {
    points: Vec<Vec3>,
    mode: PathMode,
}

impl SpherePath {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        Self::with_mode(points, PathMode::AsGiven)
    }

    fn with_mode(points: Vec<Vec3>, mode: PathMode) -> Result<Self> {
        if points.len() < 3 {
            return Err(HolonomyError::InvalidInput(format!(
                "a sphere path needs at least 3 points, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !((p.norm() - 1.0).abs() <= UNIT_TOL) {
                return Err(HolonomyError::InvalidInput(format!("point {i} is not a unit vector")));
            }
        }
        let n = points.len();
        for k in 0..n {
            if points[k].angle(&points[(k + 1) % n]) >= PI - ANTIPODAL_MARGIN {
                return Err(HolonomyError::AntipodalSegment { index: k });
            }
        }
        Ok(Self { points, mode })
    }

    /// Normalizes arbitrary nonzero directions.
    pub fn from_directions(dirs: &[[f64; 3]]) -> Result<Self> {
        Self::new(normalize_all(dirs)?)
    }

    /// Geodesic polygon through `vertices` (closed), refined so that the
    /// whole loop carries about `total_points` points, distributed by arc length.
    pub fn geodesic_polygon(vertices: &[[f64; 3]], total_points: usize) -> Result<Self> {
        let verts = normalize_all(vertices)?;
        let nv = verts.len();
        if nv < 2 {
            return Err(HolonomyError::InvalidInput("need at least two vertices".into()));
        }
        let arcs: Vec<f64> = (0..nv).map(|k| verts[k].angle(&verts[(k + 1) % nv])).collect();
        for (k, a) in arcs.iter().enumerate() {
            if *a >= PI - ANTIPODAL_MARGIN {
                return Err(HolonomyError::AntipodalSegment { index: k });
            }
        }
        let length: f64 = arcs.iter().sum();
        let mut points = Vec::with_capacity(total_points.max(nv));
        for k in 0..nv {
            let a = verts[k];
            let b = verts[(k + 1) % nv];
            let pieces = if length > 0.0 {
                ((total_points as f64 * arcs[k] / length).round() as usize).max(1)
            } else {
                1
            };
            for m in 0..pieces {
                points.push(slerp(&a, &b, m as f64 / pieces as f64));
            }
        }
        Self::with_mode(points, PathMode::GeodesicInterpolated)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mode(&self) -> PathMode {
        self.mode
    }

    pub fn base(&self) -> Vec3 {
        self.points[0]
    }

    /// Same base point, opposite orientation.
    pub fn reversed(&self) -> Self {
        let mut points = vec![self.points[0]];
        points.extend(self.points[1..].iter().rev());
        Self {
            points,
            mode: self.mode,
        }
    }

    /// This loop followed by `other`; both must start at the same point.
    pub fn concat(&self, other: &SpherePath) -> Result<Self> {
        if (self.base() - other.base()).norm() > UNIT_TOL {
            return Err(HolonomyError::BasePointMismatch);
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter());
        Self::with_mode(points, PathMode::AsGiven)
    }
}

fn normalize_all(dirs: &[[f64; 3]]) -> Result<Vec<Vec3>> {
    dirs.iter()
        .map(|d| {
            let v = Vec3::new(d[0], d[1], d[2]);
            let r = v.norm();
            if r > 0.0 && r.is_finite() {
                Ok(v / r)
            } else {
                Err(HolonomyError::InvalidInput("zero or non-finite direction".into()))
            }
        })
        .collect()
}

/// Great-circle interpolation between unit vectors.
pub(crate) fn slerp(a: &Vec3, b: &Vec3, t: f64) -> Vec3 {
    let omega = a.angle(b);
    if omega < 1e-15 {
        return *a;
    }
    let s = omega.sin();
    let p = a * (((1.0 - t) * omega).sin() / s) + b * ((t * omega).sin() / s);
    p.normalize()
}

/// A unit tangent vector to the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    base: Vec3,
    dir: Vec3,
}

impl TangentVector {
    /// `dir` is normalized; it must be tangent at `base` within 1e-10.
    pub fn new(base: Vec3, dir: Vec3) -> Result<Self> {
        if (base.norm() - 1.0).abs() > UNIT_TOL {
            return Err(HolonomyError::InvalidInput("base is not a unit vector".into()));
        }
        let r = dir.norm();
        if !(r > 0.0 && r.is_finite()) {
            return Err(HolonomyError::InvalidInput("zero tangent direction".into()));
        }
        let dir = dir / r;
        if dir.dot(&base).abs() > TANGENCY_TOL {
            return Err(HolonomyError::InvalidInput("direction is not tangent at base".into()));
        }
        Ok(Self { base, dir })
    }

    pub fn base(&self) -> Vec3 {
        self.base
    }

    pub fn dir(&self) -> Vec3 {
        self.dir
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportScheme {
    /// Exact Levi-Civita transport along each geodesic segment (rotation
    /// about the segment's normal axis).
    #[default]
    GeodesicRotation,
    /// Project onto the next tangent plane and renormalize; O(step^2) error
    /// per step.
    Projection,
}

/// Moves the tangent vector `v` at `from` to the tangent plane at `to`.
pub fn transport_step(v: &Vec3, from: &Vec3, to: &Vec3, scheme: TransportScheme) -> Vec3 {
    match scheme {
        TransportScheme::GeodesicRotation => {
            let axis = from.cross(to);
            let s = axis.norm();
            if s < 1e-300 {
                return *v;
            }
            let angle = s.atan2(from.dot(to));
            let rot = nalgebra::Rotation3::from_axis_angle(&Unit::new_unchecked(axis / s), angle);
            rot * v
        }
        TransportScheme::Projection => (v - to * v.dot(to)).normalize(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportResult {
    pub final_vector: TangentVector,
    /// Signed angle from the initial to the returned vector, positive
    /// counterclockwise seen from outside the sphere.
    pub holonomy_angle: f64,
    /// Largest `|v.p|` or `|‖v‖ - 1|` seen along the way.
    pub max_drift: f64,
}

pub fn sphere_parallel_transport(path: &SpherePath, v0: &TangentVector) -> Result<TransportResult> {
    sphere_parallel_transport_with(path, v0, TransportScheme::default())
}

pub fn sphere_parallel_transport_with(
    path: &SpherePath,
    v0: &TangentVector,
    scheme: TransportScheme,
) -> Result<TransportResult> {
    let base = path.base();
    if (v0.base - base).norm() > UNIT_TOL {
        return Err(HolonomyError::BasePointMismatch);
    }
    let pts = path.points();
    let n = pts.len();
    let mut v = v0.dir;
    let mut max_drift: f64 = 0.0;
    for k in 0..n {
        let to = &pts[(k + 1) % n];
        v = transport_step(&v, &pts[k], to, scheme);
        max_drift = max_drift.max(v.dot(to).abs()).max((v.norm() - 1.0).abs());
    }
    let holonomy_angle = base.dot(&v0.dir.cross(&v)).atan2(v0.dir.dot(&v));
    Ok(TransportResult {
        final_vector: TangentVector { base, dir: v },
        holonomy_angle,
        max_drift,
    })
}

/// Signed area of the geodesic polygon through `vertices`, positive when
/// the vertices run counterclockwise seen from outside. Triangle fan from
/// the first vertex using `tan(Omega/2) = a.(b x c) / (1 + a.b + b.c + c.a)`.
pub fn signed_polygon_area(vertices: &[Vec3]) -> f64 {
    let a = vertices[0];
    vertices[1..]
        .windows(2)
        .map(|w| {
            let (b, c) = (w[0], w[1]);
            let num = a.dot(&b.cross(&c));
            let den = 1.0 + a.dot(&b) + b.dot(&c) + c.dot(&a);
            2.0 * num.atan2(den)
        })
        .sum()
}

/// Holonomy per unit area of a small geodesic square of side `patch_size`
/// centred at `center`. Equals the Gaussian curvature (1) on the unit sphere.
pub fn sphere_patch_curvature(center: Vec3, patch_size: f64) -> Result<f64> {
    if !(patch_size > 0.0 && patch_size < 1.0) {
        return Err(HolonomyError::InvalidInput("patch size must be in (0, 1)".into()));
    }
    let c = center.normalize();
    let helper = if c.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = c.cross(&helper).normalize();
    let e2 = c.cross(&e1);
    let h = 0.5 * patch_size;
    let corners: Vec<Vec3> = [(-h, -h), (h, -h), (h, h), (-h, h)]
        .iter()
        .map(|&(a, b)| (c + e1 * a + e2 * b).normalize())
        .collect();
    let dirs: Vec<[f64; 3]> = corners.iter().map(|p| [p.x, p.y, p.z]).collect();
    let path = SpherePath::geodesic_polygon(&dirs, 64)?;
    let base = path.base();
    let edge = corners[1] - corners[0];
    let v0 = TangentVector::new(base, edge - base * edge.dot(&base))?;
    let t = sphere_parallel_transport(&path, &v0)?;
    let area = signed_polygon_area(&corners);
    Ok(t.holonomy_angle / area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn octant(points: usize) -> SpherePath {
        SpherePath::geodesic_polygon(&[[0., 0., 1.], [1., 0., 0.], [0., 1., 0.]], points).unwrap()
    }

    fn north_tangent(path: &SpherePath, dir: [f64; 3]) -> TangentVector {
        TangentVector::new(path.base(), Vec3::new(dir[0], dir[1], dir[2])).unwrap()
    }

    #[test]
    fn octant_holonomy_is_quarter_turn() {
        let p = octant(10_000);
        let t = sphere_parallel_transport(&p, &north_tangent(&p, [1., 0., 0.])).unwrap();
        assert!((t.holonomy_angle - FRAC_PI_2).abs() < 1e-6);
        let t = sphere_parallel_transport(&p, &north_tangent(&p, [1., 1., 0.])).unwrap();
        assert!((t.holonomy_angle - FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn half_equator_holonomy_is_half_turn() {
        let p =
            SpherePath::geodesic_polygon(&[[0., 0., 1.], [1., 0., 0.], [0., 1., 0.], [-1., 0., 0.]], 10_000).unwrap();
        let t = sphere_parallel_transport(&p, &north_tangent(&p, [0., 1., 0.])).unwrap();
        assert!((t.holonomy_angle.abs() - PI).abs() < 1e-6, "{}", t.holonomy_angle);
    }

    #[test]
    fn back_and_forth_path_has_no_holonomy() {
        let p = SpherePath::from_directions(&[[0., 0., 1.], [0.5, 0., 1.], [1., 0., 1.], [0.5, 0., 1.]]).unwrap();
        let t = sphere_parallel_transport(&p, &north_tangent(&p, [0., 1., 0.])).unwrap();
        assert!(t.holonomy_angle.abs() < 1e-9);
    }

    #[test]
    fn rejects_mismatched_base_and_antipodes() {
        let p = octant(30);
        let v = TangentVector::new(Vec3::x(), Vec3::y()).unwrap();
        assert_eq!(sphere_parallel_transport(&p, &v), Err(HolonomyError::BasePointMismatch));
        assert!(matches!(
            SpherePath::from_directions(&[[0., 0., 1.], [0., 0., -1.], [1., 0., 0.]]),
            Err(HolonomyError::AntipodalSegment { index: 0 })
        ));
    }

    #[test]
    fn projection_scheme_converges_first_order() {
        // v0 at 45 degrees to the first leg makes the projection error visible.
        let errs: Vec<f64> = [200, 400, 800]
            .iter()
            .map(|&n| {
                let p = octant(n);
                let v0 = north_tangent(&p, [1., 1., 0.]);
                let t = sphere_parallel_transport_with(&p, &v0, TransportScheme::Projection).unwrap();
                (t.holonomy_angle - FRAC_PI_2).abs()
            })
            .collect();
        assert!(errs[0] > 1e-4);
        assert!(
            (errs[0] / errs[1] - 2.0).abs() < 0.2 && (errs[1] / errs[2] - 2.0).abs() < 0.2,
            "{errs:?}"
        );
    }

    #[test]
    fn patch_curvature_is_gaussian_curvature() {
        for c in [Vec3::z(), Vec3::new(0.3, -0.5, 0.8), Vec3::x()] {
            let k = sphere_patch_curvature(c, 0.05).unwrap();
            assert!((k - 1.0).abs() < 1e-3, "{k}");
        }
    }
}
