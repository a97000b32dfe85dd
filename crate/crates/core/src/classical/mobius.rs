use std::f64::consts::{PI, TAU};

use super::Vec3;
use crate::error::{HolonomyError, Result};

const STEPS_PER_CIRCUIT: usize = 1024;
const PATCH_SIDE_POINTS: usize = 64;

/// Half-twist embedding
/// `x(u, w) = ((R + w cos(u/2)) cos u, (R + w cos(u/2)) sin u, w sin(u/2))`
/// with `u` in [0, 2π) and `|w| <= half_width`. The chart point `(u + 2π, w)`
/// is the surface point `(u, -w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusStrip {
    pub radius: f64,
    pub half_width: f64,
}

impl Default for MobiusStrip {
    fn default() -> Self {
        Self {
            radius: 1.0,
            half_width: 0.3,
        }
    }
}

impl MobiusStrip {
    pub fn embed(&self, u: f64, w: f64) -> Vec3 {
        let r = self.radius + w * (u / 2.0).cos();
        Vec3::new(r * u.cos(), r * u.sin(), w * (u / 2.0).sin())
    }

    fn partials(&self, u: f64, w: f64) -> (Vec3, Vec3) {
        let (s2, c2) = (u / 2.0).sin_cos();
        let (s, c) = u.sin_cos();
        let r = self.radius + w * c2;
        let xu = Vec3::new(-r * s - 0.5 * w * s2 * c, r * c - 0.5 * w * s2 * s, 0.5 * w * c2);
        let xw = Vec3::new(c2 * c, c2 * s, s2);
        (xu, xw)
    }

    /// Unit normal `x_u × x_w / |x_u × x_w|` of the chart at `(u, w)`.
    pub fn normal(&self, u: f64, w: f64) -> Vec3 {
        let (xu, xw) = self.partials(u, w);
        xu.cross(&xw).normalize()
    }

    /// Area element `|x_u × x_w|`.
    pub fn area_element(&self, u: f64, w: f64) -> f64 {
        let (xu, xw) = self.partials(u, w);
        xu.cross(&xw).norm()
    }

    /// Transports a normal vector along a chart path. The normal bundle has
    /// rank one, so each step projects the carried vector onto the next
    /// normal line and renormalizes. Returns the initial and final vectors.
    pub fn transport_normal(&self, chart_path: &[(f64, f64)]) -> (Vec3, Vec3) {
        let (u0, w0) = chart_path[0];
        let start = self.normal(u0, w0);
        let mut v = start;
        for &(u, w) in &chart_path[1..] {
            let n = self.normal(u, w);
            let p = v.dot(&n);
            v = n * p.signum();
        }
        (start, v)
    }

    /// Angle between the initial and transported normal after following a
    /// chart path whose ends are the same surface point (0 or π).
    pub fn loop_holonomy(&self, chart_path: &[(f64, f64)]) -> f64 {
        let (start, end) = self.transport_normal(chart_path);
        start.cross(&end).norm().atan2(start.dot(&end))
    }
}

/// Orientation (±1) of the surface normal after transporting it `circuits`
/// times around the centre line of the default strip.
pub fn mobius_transport(circuits: u32) -> i32 {
    let strip = MobiusStrip::default();
    let steps = STEPS_PER_CIRCUIT * circuits as usize;
    let path: Vec<(f64, f64)> = (0..=steps)
        .map(|k| (TAU * k as f64 / STEPS_PER_CIRCUIT as f64, 0.0))
        .collect();
    let (start, end) = strip.transport_normal(&path);
    if start.dot(&end) >= 0.0 {
        1
    } else {
        -1
    }
}

/// Largest `|holonomy| / area` over small square chart patches of side
/// `patch_size` spread over the strip interior.
pub fn mobius_flatness_check(patch_size: f64) -> Result<f64> {
    let strip = MobiusStrip::default();
    let margin = strip.half_width - 0.5 * patch_size;
    if !(patch_size > 0.0) || margin <= 0.0 {
        return Err(HolonomyError::InvalidInput(format!(
            "patch size must be in (0, {})",
            2.0 * strip.half_width
        )));
    }
    let w_centers = [-0.5 * margin, 0.0, 0.5 * margin];
    let mut worst: f64 = 0.0;
    for i in 0..8 {
        let uc = PI * i as f64 / 4.0;
        for &wc in &w_centers {
            let path = square_patch(uc, wc, patch_size);
            let hol = strip.loop_holonomy(&path);
            let area = strip.area_element(uc, wc) * patch_size * patch_size;
            worst = worst.max(hol.abs() / area);
        }
    }
    Ok(worst)
}

/// Counterclockwise chart square with explicit return to its first point.
pub(crate) fn square_patch(uc: f64, wc: f64, side: f64) -> Vec<(f64, f64)> {
    let h = 0.5 * side;
    let corners = [(uc - h, wc - h), (uc + h, wc - h), (uc + h, wc + h), (uc - h, wc + h)];
    let mut path = Vec::with_capacity(4 * PATCH_SIDE_POINTS + 1);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for m in 0..PATCH_SIDE_POINTS {
            let t = m as f64 / PATCH_SIDE_POINTS as f64;
            path.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    path.push(corners[0]);
    path
}
