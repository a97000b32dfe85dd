//! Aharonov-Bohm loop integrals and a classifier that sorts holonomies into
//! curvature-driven, topology-driven and confined-flux types.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::classical::{signed_polygon_area, sphere_parallel_transport, MobiusStrip, SpherePath, TangentVector, Vec3};
use crate::error::{HolonomyError, Result};
use crate::principal_angle;

pub type Vec2 = nalgebra::Vector2<f64>;

const SEGMENT_SUBDIVISIONS: usize = 32;
const ROMBERG_LEVELS: usize = 8;
const ROMBERG_RTOL: f64 = 1e-13;
const BOUNDARY_MARGIN: f64 = 1e-9;
const CENTER_MARGIN: f64 = 1e-9;
const FLUX_SUBDIVISIONS: usize = 16;
const CHART_EDGE_POINTS: usize = 16;
const MIN_PROBES: usize = 8;
const CONE_APEX_RADIUS: f64 = 1e-3;

/// Patches are flat when `|holonomy| / area` is below this fraction of the
/// largest holonomy density seen over all probes.
pub const FLAT_RELATIVE_THRESHOLD: f64 = 1e-6;
/// Two holonomies (radians) are the same below this difference.
pub const HOLONOMY_TOL: f64 = 1e-6;

/// Bilinear interpolation of tabulated potential components on a regular
/// grid. Values are row-major: index `j * nx + i` is the node
/// `(x0 + i dx, y0 + j dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGrid {
    origin: Vec2,
    spacing: Vec2,
    nx: usize,
    ny: usize,
    ax: Vec<f64>,
    ay: Vec<f64>,
}

impl UserGrid {
    pub fn new(origin: [f64; 2], spacing: [f64; 2], nx: usize, ny: usize, ax: Vec<f64>, ay: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(HolonomyError::InvalidInput(
                "grid needs at least 2 nodes per axis".into(),
            ));
        }
        if !(spacing[0] > 0.0 && spacing[1] > 0.0) {
            return Err(HolonomyError::InvalidInput("grid spacing must be positive".into()));
        }
        for v in [&ax, &ay] {
            if v.len() != nx * ny {
                return Err(HolonomyError::DimensionMismatch {
                    expected: nx * ny,
                    found: v.len(),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(HolonomyError::InvalidInput("grid values must be finite".into()));
            }
        }
        Ok(Self {
            origin: Vec2::new(origin[0], origin[1]),
            spacing: Vec2::new(spacing[0], spacing[1]),
            nx,
            ny,
            ax,
            ay,
        })
    }

    /// Tabulates `f` on the grid nodes.
    pub fn sample(origin: [f64; 2], spacing: [f64; 2], nx: usize, ny: usize, f: impl Fn(Vec2) -> Vec2) -> Result<Self> {
        let mut ax = Vec::with_capacity(nx * ny);
        let mut ay = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let a = f(Vec2::new(
                    origin[0] + i as f64 * spacing[0],
                    origin[1] + j as f64 * spacing[1],
                ));
                ax.push(a.x);
                ay.push(a.y);
            }
        }
        Self::new(origin, spacing, nx, ny, ax, ay)
    }

    /// Lower-left and upper-right corners.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let extent = Vec2::new(
            self.spacing.x * (self.nx - 1) as f64,
            self.spacing.y * (self.ny - 1) as f64,
        );
        (self.origin, self.origin + extent)
    }

    fn locate(&self, p: &Vec2) -> Result<(usize, usize, f64, f64)> {
        let (lo, hi) = self.bounds();
        let slack = 1e-12 * (hi - lo).amax();
        if !(p.x >= lo.x - slack && p.x <= hi.x + slack && p.y >= lo.y - slack && p.y <= hi.y + slack) {
            return Err(HolonomyError::InvalidInput(format!(
                "point ({}, {}) lies outside the potential grid",
                p.x, p.y
            )));
        }
        let fx = ((p.x - lo.x) / self.spacing.x).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - lo.y) / self.spacing.y).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        Ok((i, j, fx - i as f64, fy - j as f64))
    }

    fn corners(&self, v: &[f64], i: usize, j: usize) -> [f64; 4] {
        let k = j * self.nx + i;
        [v[k], v[k + 1], v[k + self.nx], v[k + self.nx + 1]]
    }

    fn eval(&self, p: &Vec2) -> Result<Vec2> {
        let (i, j, tx, ty) = self.locate(p)?;
        let bil = |c: [f64; 4]| (1.0 - ty) * ((1.0 - tx) * c[0] + tx * c[1]) + ty * ((1.0 - tx) * c[2] + tx * c[3]);
        Ok(Vec2::new(
            bil(self.corners(&self.ax, i, j)),
            bil(self.corners(&self.ay, i, j)),
        ))
    }

    fn curl(&self, p: &Vec2) -> Result<f64> {
        let (i, j, tx, ty) = self.locate(p)?;
        let ay = self.corners(&self.ay, i, j);
        let ax = self.corners(&self.ax, i, j);
        let day_dx = ((1.0 - ty) * (ay[1] - ay[0]) + ty * (ay[3] - ay[2])) / self.spacing.x;
        let dax_dy = ((1.0 - tx) * (ax[2] - ax[0]) + tx * (ax[3] - ax[1])) / self.spacing.y;
        Ok(day_dx - dax_dy)
    }
}

/// Planar vector potential `A(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorPotentialField {
    /// Flux `flux` confined to a disk of radius `radius`: uniform field
    /// inside (`A ∝ r`), pure gauge `flux / (2π r²) (-y, x)` outside.
    ConfinedFluxSolenoid {
        center: [f64; 2],
        radius: f64,
        flux: f64,
    },
    /// Uniform field `b` in the symmetric gauge `A = b/2 (-y, x)`.
    UniformField {
        b: f64,
    },
    UserGrid(UserGrid),
}

impl VectorPotentialField {
    pub fn solenoid(center: [f64; 2], radius: f64, flux: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !flux.is_finite() || !center.iter().all(|c| c.is_finite()) {
            return Err(HolonomyError::InvalidInput(
                "solenoid needs a finite center, positive radius and finite flux".into(),
            ));
        }
        Ok(Self::ConfinedFluxSolenoid { center, radius, flux })
    }

    pub fn eval(&self, p: &Vec2) -> Result<Vec2> {
        match self {
            Self::ConfinedFluxSolenoid { center, radius, flux } => {
                let d = p - Vec2::new(center[0], center[1]);
                let r2 = d.norm_squared();
                let k = if r2 < radius * radius {
                    flux / (TAU * radius * radius)
                } else {
                    flux / (TAU * r2)
                };
                Ok(Vec2::new(-d.y, d.x) * k)
            }
            Self::UniformField { b } => Ok(Vec2::new(-p.y, p.x) * (0.5 * b)),
            Self::UserGrid(g) => g.eval(p),
        }
    }

    /// Field strength `∂_x A_y - ∂_y A_x`.
    pub fn curl(&self, p: &Vec2) -> Result<f64> {
        match self {
            Self::ConfinedFluxSolenoid { center, radius, flux } => {
                let d = p - Vec2::new(center[0], center[1]);
                Ok(if d.norm() < *radius {
                    flux / (PI * radius * radius)
                } else {
                    0.0
                })
            }
            Self::UniformField { b } => Ok(*b),
            Self::UserGrid(g) => g.curl(p),
        }
    }

    fn solenoid_parts(&self) -> Option<(Vec2, f64, f64)> {
        match self {
            Self::ConfinedFluxSolenoid { center, radius, flux } => {
                Some((Vec2::new(center[0], center[1]), *radius, *flux))
            }
            _ => None,
        }
    }
}

/// Closed planar polygon; the last point joins back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarLoop {
    points: Vec<Vec2>,
}

impl PlanarLoop {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(HolonomyError::InvalidInput(format!(
                "a planar loop needs at least 3 points, got {n}"
            )));
        }
        if !points.iter().all(|p| p.x.is_finite() && p.y.is_finite()) {
            return Err(HolonomyError::InvalidInput("loop points must be finite".into()));
        }
        for k in 0..n {
            if points[k] == points[(k + 1) % n] {
                return Err(HolonomyError::InvalidInput(format!(
                    "loop points {k} and {} coincide",
                    (k + 1) % n
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn from_xy(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Vec2::new(p[0], p[1])).collect())
    }

    /// Counterclockwise circle with `n` vertices.
    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    Vec2::new(center[0] + radius * t.cos(), center[1] + radius * t.sin())
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn segments(&self) -> impl Iterator<Item = (usize, Vec2, Vec2)> + '_ {
        let n = self.points.len();
        (0..n).map(move |k| (k, self.points[k], self.points[(k + 1) % n]))
    }

    pub fn reversed(&self) -> Self {
        let mut points = vec![self.points[0]];
        points.extend(self.points[1..].iter().rev());
        Self { points }
    }

    /// The same loop traversed `count` times from the same base point.
    pub fn repeated(&self, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(HolonomyError::InvalidInput("repeat count must be positive".into()));
        }
        Self::new(
            self.points
                .iter()
                .cycle()
                .take(count * self.points.len())
                .copied()
                .collect(),
        )
    }

    /// Shoelace area, positive for counterclockwise loops (counted with
    /// multiplicity).
    pub fn signed_area(&self) -> f64 {
        0.5 * self.segments().map(|(_, a, b)| cross(&a, &b)).sum::<f64>()
    }
}

fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn segment_distance(c: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let d = b - a;
    let t = ((c - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (a + d * t - c).norm()
}

/// Signed number of turns the loop makes about `center`.
pub fn winding_number(lp: &PlanarLoop, center: [f64; 2]) -> Result<i64> {
    let c = Vec2::new(center[0], center[1]);
    let mut total = 0.0;
    for (index, a, b) in lp.segments() {
        if segment_distance(&c, &a, &b) < CENTER_MARGIN {
            return Err(HolonomyError::CenterOnLoop { index });
        }
        let (pa, pb) = (a - c, b - c);
        total += cross(&pa, &pb).atan2(pa.dot(&pb));
    }
    Ok((total / TAU).round() as i64)
}

fn check_solenoid_clearance(field: &VectorPotentialField, lp: &PlanarLoop) -> Result<()> {
    if let Some((c, radius, _)) = field.solenoid_parts() {
        for (index, a, b) in lp.segments() {
            let near = segment_distance(&c, &a, &b);
            let far = (a - c).norm().max((b - c).norm());
            if near < radius + BOUNDARY_MARGIN && far > radius - BOUNDARY_MARGIN {
                return Err(HolonomyError::LoopThroughSolenoid { index });
            }
        }
    }
    Ok(())
}

/// Romberg table seeded with the composite trapezoid rule on
/// `SEGMENT_SUBDIVISIONS` pieces. Returns the value and an error estimate.
fn segment_integral(field: &VectorPotentialField, a: &Vec2, b: &Vec2) -> Result<(f64, f64)> {
    let d = b - a;
    let g = |t: f64| -> Result<f64> { Ok(field.eval(&(a + d * t))?.dot(&d)) };
    let mut n = SEGMENT_SUBDIVISIONS;
    let mut sum = 0.5 * (g(0.0)? + g(1.0)?);
    let mut abs_sum = sum.abs();
    for k in 1..n {
        let v = g(k as f64 / n as f64)?;
        sum += v;
        abs_sum += v.abs();
    }
    let scale = abs_sum / n as f64;
    let mut prev = vec![sum / n as f64];
    let mut err = f64::INFINITY;
    for level in 1..=ROMBERG_LEVELS {
        let mut mid = 0.0;
        for k in 0..n {
            mid += g((k as f64 + 0.5) / n as f64)?;
        }
        n *= 2;
        let mut row = vec![0.5 * prev[0] + mid / n as f64];
        let mut f = 1.0;
        for j in 1..=level {
            f *= 4.0;
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / (f - 1.0));
        }
        err = (row[level] - prev[level - 1]).abs();
        prev = row;
        if err <= ROMBERG_RTOL * scale.max(prev[level].abs()) {
            break;
        }
    }
    Ok((prev[prev.len() - 1], err))
}

/// `∮ A · dr` and its quadrature error estimate.
pub fn line_integral(field: &VectorPotentialField, lp: &PlanarLoop) -> Result<(f64, f64)> {
    check_solenoid_clearance(field, lp)?;
    let mut total = 0.0;
    let mut err = 0.0;
    for (_, a, b) in lp.segments() {
        let (v, e) = segment_integral(field, &a, &b)?;
        total += v;
        err += e;
    }
    Ok((total, err))
}

/// Signed area of (triangle 0, a, b) ∩ disk(0, r).
fn triangle_disk_area(a: &Vec2, b: &Vec2, r: f64) -> f64 {
    let d = b - a;
    let qa = d.norm_squared();
    let qb = 2.0 * a.dot(&d);
    let qc = a.norm_squared() - r * r;
    let mut ts = vec![0.0];
    let disc = qb * qb - 4.0 * qa * qc;
    if disc > 0.0 {
        let s = disc.sqrt();
        for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    ts.windows(2)
        .map(|w| {
            let p = a + d * w[0];
            let q = a + d * w[1];
            let m = a + d * (0.5 * (w[0] + w[1]));
            if m.norm_squared() <= r * r {
                0.5 * cross(&p, &q)
            } else {
                0.5 * r * r * cross(&p, &q).atan2(p.dot(&q))
            }
        })
        .sum()
}

/// `∫ curl A` over the surface spanned by the loop, counted with winding
/// multiplicity.
pub fn flux_through(field: &VectorPotentialField, lp: &PlanarLoop) -> Result<f64> {
    match field {
        VectorPotentialField::ConfinedFluxSolenoid { center, radius, flux } => {
            let c = Vec2::new(center[0], center[1]);
            let covered: f64 = lp
                .segments()
                .map(|(_, a, b)| triangle_disk_area(&(a - c), &(b - c), *radius))
                .sum();
            Ok(flux * covered / (PI * radius * radius))
        }
        VectorPotentialField::UniformField { b } => Ok(b * lp.signed_area()),
        VectorPotentialField::UserGrid(_) => {
            let p0 = lp.points[0];
            let m = FLUX_SUBDIVISIONS;
            let mut total = 0.0;
            for w in lp.points[1..].windows(2) {
                let (e1, e2) = (w[0] - p0, w[1] - p0);
                let cell = 0.5 * cross(&e1, &e2) / (m * m) as f64;
                if cell == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                for i in 0..m {
                    for j in 0..m - i {
                        let (u, v) = ((i as f64 + 1.0 / 3.0) / m as f64, (j as f64 + 1.0 / 3.0) / m as f64);
                        acc += field.curl(&(p0 + e1 * u + e2 * v))?;
                        if i + j + 1 < m {
                            let (u, v) = ((i as f64 + 2.0 / 3.0) / m as f64, (j as f64 + 2.0 / 3.0) / m as f64);
                            acc += field.curl(&(p0 + e1 * u + e2 * v))?;
                        }
                    }
                }
                total += acc * cell;
            }
            Ok(total)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolonomyClass {
    FlatTopological,
    CurvedGeometric,
    AbType,
}

impl HolonomyClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FlatTopological => "flat_topological",
            Self::CurvedGeometric => "curved_geometric",
            Self::AbType => "ab_type",
        }
    }
}

impl std::fmt::Display for HolonomyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ABReport {
    pub line_integral: f64,
    pub flux_through_surface: f64,
    /// `q ∮A·dr / ħ` reduced to (-π, π].
    pub phase: f64,
    pub unwrapped_phase: f64,
    /// Turns about the solenoid axis; `None` for fields without one.
    pub winding_number: Option<i64>,
    pub classification: HolonomyClass,
    pub stokes_residual: f64,
    pub quadrature_error: f64,
}

/// Aharonov-Bohm phase picked up by charge `q` around `lp`.
pub fn ab_phase(field: &VectorPotentialField, lp: &PlanarLoop, q: f64, hbar: f64) -> Result<ABReport> {
    if !(hbar > 0.0) || !q.is_finite() {
        return Err(HolonomyError::InvalidInput(
            "need finite charge and positive hbar".into(),
        ));
    }
    let (line, quadrature_error) = line_integral(field, lp)?;
    let flux = flux_through(field, lp)?;
    let winding = match field.solenoid_parts() {
        Some((c, _, _)) => Some(winding_number(lp, [c.x, c.y])?),
        None => None,
    };
    let subject = HolonomySubject::Field(field.clone());
    let classification = classify_holonomy(&subject, &canonical_probes(&subject))?.class;
    let unwrapped = q * line / hbar;
    Ok(ABReport {
        line_integral: line,
        flux_through_surface: flux,
        phase: principal_angle(unwrapped),
        unwrapped_phase: unwrapped,
        winding_number: winding,
        classification,
        stokes_residual: (line - flux).abs(),
        quadrature_error,
    })
}

/// What a set of probe loops is transported over. Chart coordinates are
/// `(x, y)` for fields and cones, `(θ, φ)` for the unit sphere and `(u, w)`
/// for the Möbius strip.
#[derive(Debug, Clone, PartialEq)]
pub enum HolonomySubject {
    Field(VectorPotentialField),
    Sphere,
    Mobius(MobiusStrip),
    /// Flat cone with the given deficit angle, apex at the origin. Tangent
    /// vectors carried around the apex rotate by the deficit.
    Cone {
        deficit: f64,
    },
}

impl HolonomySubject {
    fn simply_connected(&self) -> bool {
        !matches!(self, Self::Mobius(_))
    }

    fn cone_field(deficit: f64) -> VectorPotentialField {
        VectorPotentialField::ConfinedFluxSolenoid {
            center: [0.0, 0.0],
            radius: CONE_APEX_RADIUS,
            flux: deficit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeRole {
    /// Small contractible square; measures holonomy per unit area.
    SmallPatch,
    /// Member of a family of loops that are homotopic to each other.
    Deformation { family: usize },
}

/// Closed loop in chart coordinates. Steps that jump by more than half a
/// period in the periodic coordinate are taken the short way round.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeLoop {
    pub chart: Vec<[f64; 2]>,
    pub role: ProbeRole,
}

impl ProbeLoop {
    pub fn patch(center: [f64; 2], side: f64) -> Self {
        let h = 0.5 * side;
        let (x, y) = (center[0], center[1]);
        Self {
            chart: vec![[x - h, y - h], [x + h, y - h], [x + h, y + h], [x - h, y + h]],
            role: ProbeRole::SmallPatch,
        }
    }

    pub fn deformation(family: usize, chart: Vec<[f64; 2]>) -> Self {
        Self {
            chart,
            role: ProbeRole::Deformation { family },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: HolonomyClass,
    /// Largest `|holonomy| / area` over the small patches.
    pub max_patch_curvature: f64,
    pub flat_threshold: f64,
    /// Largest disagreement inside a deformation family.
    pub max_family_spread: f64,
    pub nontrivial_holonomy: bool,
    pub probes: usize,
}

/// Densifies a chart loop, unrolling the periodic coordinate. For the
/// Möbius strip a wrap in `u` also flips `w`.
fn unroll_chart(chart: &[[f64; 2]], period: f64, flip: bool, pieces: usize) -> Vec<[f64; 2]> {
    let n = chart.len();
    let mut out = Vec::with_capacity(n * pieces + 1);
    let mut cur = chart[0];
    let mut wraps = 0i64;
    for k in 0..n {
        let raw = chart[(k + 1) % n];
        let du = raw[0] - chart[k][0];
        let shift = (du / period).round();
        wraps -= shift as i64;
        let sign = if flip && wraps % 2 != 0 { -1.0 } else { 1.0 };
        let next = [cur[0] + du - shift * period, raw[1] * sign];
        for m in 0..pieces {
            let t = m as f64 / pieces as f64;
            out.push([cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])]);
        }
        cur = next;
    }
    out.push(cur);
    out
}

fn sphere_point(c: &[f64; 2]) -> Vec3 {
    let (st, ct) = c[0].sin_cos();
    let (sp, cp) = c[1].sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

/// Holonomy angle and enclosed area of one probe.
fn probe_holonomy(subject: &HolonomySubject, probe: &ProbeLoop) -> Result<(f64, f64)> {
    if probe.chart.len() < 3 {
        return Err(HolonomyError::InvalidInput("probe loops need at least 3 points".into()));
    }
    match subject {
        HolonomySubject::Field(field) => planar_holonomy(field, probe),
        HolonomySubject::Cone { deficit } => planar_holonomy(&HolonomySubject::cone_field(*deficit), probe),
        HolonomySubject::Sphere => {
            let dense = unroll_chart(&probe.chart, TAU, false, CHART_EDGE_POINTS);
            let pts: Vec<Vec3> = dense[..dense.len() - 1].iter().map(sphere_point).collect();
            let path = SpherePath::new(pts.clone())?;
            let base = path.base();
            let edge = pts[1] - base;
            let v0 = TangentVector::new(base, edge - base * edge.dot(&base))?;
            let hol = sphere_parallel_transport(&path, &v0)?.holonomy_angle;
            Ok((hol, signed_polygon_area(&pts).abs()))
        }
        HolonomySubject::Mobius(strip) => {
            let dense = unroll_chart(&probe.chart, TAU, true, CHART_EDGE_POINTS);
            let path: Vec<(f64, f64)> = dense.iter().map(|c| (c[0], c[1])).collect();
            let hol = strip.loop_holonomy(&path);
            let n = probe.chart.len();
            let chart_area = 0.5
                * (0..n)
                    .map(|k| {
                        let (a, b) = (probe.chart[k], probe.chart[(k + 1) % n]);
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum::<f64>()
                    .abs();
            let cu = probe.chart.iter().map(|c| c[0]).sum::<f64>() / n as f64;
            let cw = probe.chart.iter().map(|c| c[1]).sum::<f64>() / n as f64;
            Ok((hol, chart_area * strip.area_element(cu, cw)))
        }
    }
}

fn planar_holonomy(field: &VectorPotentialField, probe: &ProbeLoop) -> Result<(f64, f64)> {
    let lp = PlanarLoop::from_xy(&probe.chart)?;
    let (line, _) = line_integral(field, &lp)?;
    Ok((line, lp.signed_area().abs()))
}

/// Sorts the holonomy of `subject` into one of three classes from probe
/// loops:
///
/// - some small patch has `|holonomy| / area` above the flatness threshold,
///   or a deformation family disagrees: `curved_geometric`;
/// - otherwise, if the space is simply connected yet some probe picks up a
///   nontrivial holonomy, it must come from a confined region the probes
///   avoid: `ab_type`;
/// - otherwise `flat_topological`.
pub fn classify_holonomy(subject: &HolonomySubject, probes: &[ProbeLoop]) -> Result<Classification> {
    if probes.len() < MIN_PROBES {
        return Err(HolonomyError::InsufficientProbes(format!(
            "need at least {MIN_PROBES} probe loops, got {}",
            probes.len()
        )));
    }
    if !probes.iter().any(|p| p.role == ProbeRole::SmallPatch) {
        return Err(HolonomyError::InsufficientProbes("no small contractible patch".into()));
    }
    let mut families: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    let mut patch_densities = Vec::new();
    let mut densest: f64 = 0.0;
    let mut nontrivial = false;
    for probe in probes {
        let (hol, area) = probe_holonomy(subject, probe)?;
        if area > 0.0 {
            densest = densest.max(hol.abs() / area);
        }
        nontrivial |= principal_angle(hol).abs() > HOLONOMY_TOL;
        match probe.role {
            ProbeRole::SmallPatch => {
                if !(area > 0.0) {
                    return Err(HolonomyError::InvalidInput("small patch encloses no area".into()));
                }
                patch_densities.push(hol.abs() / area);
            }
            ProbeRole::Deformation { family } => families.entry(family).or_default().push(hol),
        }
    }
    if !families.values().any(|f| f.len() >= 2) {
        return Err(HolonomyError::InsufficientProbes(
            "no deformation family with at least two loops".into(),
        ));
    }
    let max_patch_curvature = patch_densities.iter().copied().fold(0.0, f64::max);
    let flat_threshold = FLAT_RELATIVE_THRESHOLD * densest;
    let max_family_spread = families
        .values()
        .flat_map(|f| f.iter().map(move |h| principal_angle(h - f[0]).abs()))
        .fold(0.0, f64::max);

    let curved = max_patch_curvature > flat_threshold || max_family_spread > HOLONOMY_TOL;
    let class = if curved {
        HolonomyClass::CurvedGeometric
    } else if subject.simply_connected() && nontrivial {
        HolonomyClass::AbType
    } else {
        HolonomyClass::FlatTopological
    };
    Ok(Classification {
        class,
        max_patch_curvature,
        flat_threshold,
        max_family_spread,
        nontrivial_holonomy: nontrivial,
        probes: probes.len(),
    })
}

fn circle_chart(center: [f64; 2], rx: f64, ry: f64, n: usize, wobble: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            let s = 1.0 + wobble * (5.0 * t).cos();
            [center[0] + rx * s * t.cos(), center[1] + ry * s * t.sin()]
        })
        .collect()
}

fn square_chart(center: [f64; 2], half: f64, per_side: usize) -> Vec<[f64; 2]> {
    let corners = [[-half, -half], [half, -half], [half, half], [-half, half]];
    let mut out = Vec::new();
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for m in 0..per_side {
            let t = m as f64 / per_side as f64;
            out.push([
                center[0] + a[0] + t * (b[0] - a[0]),
                center[1] + a[1] + t * (b[1] - a[1]),
            ]);
        }
    }
    out
}

/// Probes around an excluded disk of size `scale` at `c`: exterior patches,
/// enclosing loops of several shapes and loops beside the disk.
fn excluded_region_probes(c: [f64; 2], scale: f64) -> Vec<ProbeLoop> {
    let mut probes: Vec<ProbeLoop> = (0..6)
        .map(|k| {
            let t = PI * k as f64 / 3.0;
            ProbeLoop::patch(
                [c[0] + 2.5 * scale * t.cos(), c[1] + 2.5 * scale * t.sin()],
                0.1 * scale,
            )
        })
        .collect();
    let shifted = [c[0] + 0.3 * scale, c[1]];
    for chart in [
        circle_chart(c, 2.0 * scale, 2.0 * scale, 128, 0.0),
        circle_chart(shifted, 3.0 * scale, 3.0 * scale, 128, 0.0),
        circle_chart(c, 3.0 * scale, 2.0 * scale, 128, 0.0),
        square_chart(c, 2.5 * scale, 32),
        circle_chart(c, 2.0 * scale, 2.0 * scale, 256, 0.2),
    ] {
        probes.push(ProbeLoop::deformation(0, chart));
    }
    for chart in [
        circle_chart([c[0] + 4.0 * scale, c[1]], scale, scale, 64, 0.0),
        circle_chart([c[0] - 5.0 * scale, c[1]], 1.5 * scale, scale, 64, 0.0),
    ] {
        probes.push(ProbeLoop::deformation(1, chart));
    }
    probes
}

/// A default probe set adequate for classifying `subject`.
pub fn canonical_probes(subject: &HolonomySubject) -> Vec<ProbeLoop> {
    match subject {
        HolonomySubject::Field(VectorPotentialField::ConfinedFluxSolenoid { center, radius, .. }) => {
            excluded_region_probes(*center, *radius)
        }
        HolonomySubject::Cone { .. } => excluded_region_probes([0.0, 0.0], 0.25),
        HolonomySubject::Field(VectorPotentialField::UniformField { .. }) => {
            planar_box_probes(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0))
        }
        HolonomySubject::Field(VectorPotentialField::UserGrid(g)) => {
            let (lo, hi) = g.bounds();
            planar_box_probes(lo, hi)
        }
        HolonomySubject::Sphere => {
            let mut probes = Vec::new();
            for theta in [PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
                for phi in [0.0, PI] {
                    probes.push(ProbeLoop::patch([theta, phi], 0.05));
                }
            }
            for theta in [PI / 6.0, PI / 4.0, PI / 3.0] {
                let chart = (0..64).map(|k| [theta, TAU * k as f64 / 64.0]).collect();
                probes.push(ProbeLoop::deformation(0, chart));
            }
            probes
        }
        HolonomySubject::Mobius(strip) => {
            let hw = strip.half_width;
            let mut probes = Vec::new();
            for k in 0..3 {
                for w in [-0.4 * hw, 0.4 * hw] {
                    probes.push(ProbeLoop::patch([TAU * k as f64 / 3.0 + 0.5, w], 0.1 * hw));
                }
            }
            for w0 in [0.0, 0.3 * hw, -0.3 * hw, 0.6 * hw] {
                let n = 64;
                let chart = (0..n)
                    .map(|k| {
                        let t = k as f64 / n as f64;
                        [TAU * t, w0 * (1.0 - 2.0 * t)]
                    })
                    .collect();
                probes.push(ProbeLoop::deformation(0, chart));
            }
            probes
        }
    }
}

fn planar_box_probes(lo: Vec2, hi: Vec2) -> Vec<ProbeLoop> {
    let size = (hi - lo).min();
    let mut probes = Vec::new();
    for fx in [0.25, 0.5, 0.75] {
        for fy in [0.3, 0.7] {
            probes.push(ProbeLoop::patch(
                [lo.x + fx * (hi.x - lo.x), lo.y + fy * (hi.y - lo.y)],
                0.05 * size,
            ));
        }
    }
    let mid = (lo + hi) * 0.5;
    for r in [0.2, 0.3, 0.4] {
        probes.push(ProbeLoop::deformation(
            0,
            circle_chart([mid.x, mid.y], r * size, r * size, 128, 0.0),
        ));
    }
    probes
}
