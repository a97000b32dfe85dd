use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::params::{ClassifySubject, Params};
use super::report::{Check, Provenance, RunReport, Value};
use super::{Scenario, ScenarioError};
use crate::classical::{
    foucault_precession, mobius_flatness_check, mobius_transport, signed_polygon_area, sphere_parallel_transport_with,
    thomas_rotation, MobiusStrip, SpherePath, TangentVector, TransportScheme, Vec3, VelocityLoop,
};
use crate::dynamics::{
    adiabatic_track, coherent_spin_state, propagate, propagate_eigenstate, HamiltonianFamily, ParameterLoop,
    DEFAULT_GAP_TOL,
};
use crate::error::HolonomyError;
use crate::gauge::{
    ab_phase, canonical_probes, classify_holonomy, HolonomySubject, PlanarLoop, Vec2, VectorPotentialField,
};
use crate::phase::{
    adiabatic_split, bargmann_holonomy, connection_integral, curvature_flux_sphere, decompose_phase, horizontal_lift,
    DEFAULT_CLOSURE_TOL,
};
use crate::{angle_diff, principal_angle};

/// Tolerances applied by the report checks.
mod tol {
    pub const ADIABATIC_SPLIT: f64 = 2e-2;
    pub const CROSS_METHOD: f64 = 1e-3;
    pub const IDENTITY: f64 = 1e-12;
    pub const SPHERE: f64 = 1e-6;
    pub const FLATNESS: f64 = 1e-6;
    pub const FOUCAULT_PER_DAY: f64 = 1e-4;
    pub const THOMAS: f64 = 1e-3;
    pub const ORTHOGONALITY: f64 = 1e-9;
    pub const AB_PHASE: f64 = 1e-6;
    pub const AB_EXTERIOR: f64 = 1e-9;
    pub const CHERN: f64 = 1e-6;
}

#[derive(Default)]
struct Out {
    outputs: BTreeMap<String, Value>,
    diagnostics: BTreeMap<String, Value>,
    checks: Vec<Check>,
}

impl Out {
    fn out(&mut self, k: &str, v: impl Into<Value>) {
        self.outputs.insert(k.to_string(), v.into());
    }

    fn diag(&mut self, k: &str, v: impl Into<Value>) {
        self.diagnostics.insert(k.to_string(), v.into());
    }

    fn diag_opt(&mut self, k: &str, v: Option<f64>) {
        if let Some(v) = v {
            self.diag(k, v);
        }
    }
}

/// Executes a validated scenario. Deterministic for a given scenario and seed.
pub fn run(scenario: &Scenario) -> Result<RunReport, ScenarioError> {
    let out = dispatch(scenario).map_err(|source| ScenarioError::Engine {
        id: scenario.id.clone(),
        source,
    })?;
    Ok(RunReport {
        id: scenario.id.clone(),
        kind: scenario.kind,
        outputs: out.outputs,
        diagnostics: out.diagnostics,
        checks: out.checks,
        provenance: Provenance {
            engine: "holonomy-core".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            hbar: scenario.constants.hbar,
            c: scenario.constants.c,
            seed: scenario.seed,
        },
    })
}

/// Solid-angle prediction for the spin-1/2 `level` on a cone traversed
/// counterclockwise.
fn cone_phase(theta: f64, level: usize) -> f64 {
    let sign = if level == 0 { -1.0 } else { 1.0 };
    principal_angle(sign * PI * (1.0 - theta.cos()))
}

fn dispatch(s: &Scenario) -> Result<Out, HolonomyError> {
    let hbar = s.constants.hbar;
    let mut o = Out::default();
    match &s.params {
        &Params::BerryAdiabatic {
            theta,
            field,
            period,
            points,
            steps,
            level,
            closure_tol,
        } => {
            let fam = HamiltonianFamily::spin_half_in_field(hbar);
            let lp = ParameterLoop::field_cone(field, theta, points, period)?;
            let rec = propagate_eigenstate(&fam, &lp, level, steps, hbar)?;
            let split = decompose_phase(&rec, closure_tol)?;
            let split_report = adiabatic_split(&rec, closure_tol)?;
            let tracked = adiabatic_track(&fam, &lp, level, DEFAULT_GAP_TOL)?;
            let barg = bargmann_holonomy(&tracked, true)?;
            let conn = connection_integral(&fam, &lp, level, DEFAULT_GAP_TOL)?;
            let expected = cone_phase(theta, level);

            o.out("geometric_phase", split.geometric);
            o.out("dynamical_phase", split.dynamical);
            o.out("total_phase", split.total);
            o.out("bargmann_phase", barg.geometric_phase);
            o.out("connection_phase", conn.geometric_phase);
            o.out("solid_angle_prediction", expected);
            o.diag("closure_fidelity", split.closure_fidelity);
            o.diag("max_norm_drift", rec.max_norm_drift);
            o.diag("points", points);
            o.diag("steps_per_segment", steps);
            o.diag("period", period);
            o.diag_opt("split_estimated_error", split_report.diagnostics.estimated_error);
            o.diag_opt("bargmann_estimated_error", barg.diagnostics.estimated_error);
            o.diag_opt("connection_estimated_error", conn.diagnostics.estimated_error);
            o.diag(
                "split_vs_bargmann",
                angle_diff(split.geometric, barg.geometric_phase).abs(),
            );
            o.diag(
                "bargmann_vs_connection",
                angle_diff(barg.geometric_phase, conn.geometric_phase).abs(),
            );
            o.checks.push(Check::angle(
                "adiabatic_split",
                split.geometric,
                expected,
                tol::ADIABATIC_SPLIT,
            ));
            o.checks.push(Check::angle(
                "bargmann",
                barg.geometric_phase,
                expected,
                tol::CROSS_METHOD,
            ));
            o.checks.push(Check::angle(
                "connection_integral",
                conn.geometric_phase,
                expected,
                tol::CROSS_METHOD,
            ));
        }
        &Params::AharonovAnandan {
            theta,
            field,
            points,
            steps,
        } => {
            // Static field along +z; the parameter only labels time.
            let half = 0.5 * hbar * field;
            let fam = HamiltonianFamily::diagonal_drift(vec![-half, half], vec![vec![0.0], vec![0.0]])?;
            let lp = ParameterLoop::uniform((0..points).map(|k| vec![k as f64]).collect(), TAU / field)?;
            let psi0 = coherent_spin_state([theta.sin(), 0.0, theta.cos()])?;
            let rec = propagate(&fam, &lp, &psi0, steps, hbar)?;
            let split = decompose_phase(&rec, DEFAULT_CLOSURE_TOL)?;
            let barg = bargmann_holonomy(&rec.states, false)?;
            // The spin precesses clockwise about the field.
            let expected = principal_angle(PI * (1.0 - theta.cos()));

            o.out("geometric_phase", split.geometric);
            o.out("dynamical_phase", split.dynamical);
            o.out("total_phase", split.total);
            o.out("bargmann_phase", barg.geometric_phase);
            o.out("solid_angle_prediction", expected);
            o.diag("closure_fidelity", split.closure_fidelity);
            o.diag("max_norm_drift", rec.max_norm_drift);
            o.diag("points", points);
            o.diag("steps_per_segment", steps);
            o.diag_opt("bargmann_estimated_error", barg.diagnostics.estimated_error);
            o.checks.push(Check::angle(
                "aharonov_anandan",
                split.geometric,
                expected,
                tol::CROSS_METHOD,
            ));
            o.checks.push(Check::angle(
                "bargmann",
                barg.geometric_phase,
                expected,
                tol::CROSS_METHOD,
            ));
        }
        &Params::Bargmann {
            theta,
            points,
            random_phases,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let states = (0..points)
                .map(|k| {
                    let phi = TAU * k as f64 / points as f64;
                    let st = coherent_spin_state([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])?;
                    Ok(if random_phases {
                        st.with_phase(rng.random_range(-PI..PI))
                    } else {
                        st
                    })
                })
                .collect::<Result<Vec<_>, HolonomyError>>()?;
            let barg = bargmann_holonomy(&states, true)?;
            let lift = horizontal_lift(&states, true)?;
            let expected = cone_phase(theta, 0);
            o.out("bargmann_phase", barg.geometric_phase);
            o.out("horizontal_lift_phase", lift.geometric_phase);
            o.out("solid_angle_prediction", expected);
            o.diag("points", points);
            o.diag_opt("bargmann_estimated_error", barg.diagnostics.estimated_error);
            o.checks.push(Check::angle(
                "bargmann",
                barg.geometric_phase,
                expected,
                tol::CROSS_METHOD,
            ));
            o.checks.push(Check::at_most(
                "lift_vs_bargmann",
                angle_diff(lift.geometric_phase, barg.geometric_phase).abs(),
                tol::IDENTITY,
            ));
        }
        &Params::ConnectionIntegral {
            theta,
            field,
            points,
            level,
            chern_grid,
        } => {
            let fam = HamiltonianFamily::spin_half_in_field(hbar);
            let lp = ParameterLoop::field_cone(field, theta, points, 1.0)?;
            let conn = connection_integral(&fam, &lp, level, DEFAULT_GAP_TOL)?;
            let flux = curvature_flux_sphere(&fam, level, [0.0; 3], field, chern_grid, chern_grid, DEFAULT_GAP_TOL)?;
            let expected = cone_phase(theta, level);
            let expected_flux = if level == 0 { -TAU } else { TAU };
            o.out("connection_phase", conn.geometric_phase);
            o.out("solid_angle_prediction", expected);
            o.out("curvature_flux", flux.total);
            o.out("chern_number", flux.chern_number);
            o.diag("points", points);
            o.diag_opt("unwrapped_phase", conn.diagnostics.unwrapped_phase);
            o.diag_opt("connection_estimated_error", conn.diagnostics.estimated_error);
            o.diag("quantization_error", flux.quantization_error);
            o.diag("plaquettes", flux.plaquettes);
            o.checks.push(Check::angle(
                "connection_integral",
                conn.geometric_phase,
                expected,
                tol::CROSS_METHOD,
            ));
            o.checks
                .push(Check::within("curvature_flux", flux.total, expected_flux, tol::CHERN));
        }
        Params::SphereTransport {
            vertices,
            points,
            scheme,
        } => {
            let path = SpherePath::geodesic_polygon(vertices, *points)?;
            let base = path.base();
            let toward = path.points()[1] - base;
            let v0 = TangentVector::new(base, toward - base * toward.dot(&base))?;
            let t = sphere_parallel_transport_with(&path, &v0, *scheme)?;
            let corners: Vec<Vec3> = vertices
                .iter()
                .map(|v| Vec3::new(v[0], v[1], v[2]).normalize())
                .collect();
            let area = signed_polygon_area(&corners);
            o.out("holonomy_angle", t.holonomy_angle);
            o.out("enclosed_area", area);
            o.diag("points", path.len());
            o.diag("max_drift", t.max_drift);
            o.diag(
                "scheme",
                match scheme {
                    TransportScheme::GeodesicRotation => "geodesic_rotation",
                    TransportScheme::Projection => "projection",
                },
            );
            if *scheme == TransportScheme::GeodesicRotation {
                o.checks.push(Check::angle(
                    "holonomy_vs_area",
                    t.holonomy_angle,
                    principal_angle(area),
                    tol::SPHERE,
                ));
            }
        }
        &Params::Mobius { circuits, patch_size } => {
            let orientation = mobius_transport(circuits) as i64;
            let flatness = mobius_flatness_check(patch_size)?;
            let subject = HolonomySubject::Mobius(MobiusStrip::default());
            let class = classify_holonomy(&subject, &canonical_probes(&subject))?;
            let expected = if circuits % 2 == 0 { 1 } else { -1 };
            o.out("orientation", orientation);
            o.out("flatness", flatness);
            o.out("classification", class.class.as_str());
            o.diag("circuits", circuits as usize);
            o.diag("patch_size", patch_size);
            o.checks.push(Check::equal("orientation", orientation, expected as i64));
            o.checks.push(Check::at_most("flatness", flatness, tol::FLATNESS));
        }
        &Params::Foucault { latitude, days } => {
            let precession = foucault_precession(latitude, days)?;
            let expected = -TAU * latitude.sin() * days;
            o.out("precession", precession);
            o.out("precession_per_day", precession / days);
            o.out("expected", expected);
            o.diag("latitude", latitude);
            o.diag("days", days);
            o.checks.push(Check::within(
                "precession",
                precession,
                expected,
                tol::FOUCAULT_PER_DAY * days,
            ));
        }
        &Params::Thomas { speed, points } => {
            let c = s.constants.c;
            let lp = VelocityLoop::circular(speed, points, c)?;
            let t = thomas_rotation(&lp)?;
            let beta = speed / c;
            let gamma = 1.0 / (1.0 - beta * beta).sqrt();
            let expected = -TAU * (gamma - 1.0);
            let det = t.rotation.determinant();
            o.out("angle", t.angle);
            o.out("abs_angle", t.angle.abs());
            o.out("expected", expected);
            o.out("gamma", gamma);
            o.out("axis_x", t.axis.x);
            o.out("axis_y", t.axis.y);
            o.out("axis_z", t.axis.z);
            o.diag("orthogonality_error", t.orthogonality_error);
            o.diag("determinant", det);
            o.diag("boost_residual", t.boost_residual);
            o.diag("points", points);
            o.checks.push(Check::within("angle", t.angle, expected, tol::THOMAS));
            o.checks.push(Check::at_most(
                "orthogonality",
                t.orthogonality_error,
                tol::ORTHOGONALITY,
            ));
            o.checks
                .push(Check::within("determinant", det, 1.0, tol::ORTHOGONALITY));
        }
        &Params::AbPhase {
            flux,
            radius,
            center,
            q,
            loop_radius,
            loop_points,
            windings,
            random_loops,
        } => {
            let field = VectorPotentialField::solenoid(center, radius, flux)?;
            let lp = PlanarLoop::circle(center, loop_radius, loop_points)?.repeated(windings)?;
            let r = ab_phase(&field, &lp, q, hbar)?;
            let expected = if loop_radius > radius {
                principal_angle(q * flux * windings as f64 / hbar)
            } else {
                principal_angle(q * r.flux_through_surface / hbar)
            };
            o.out("phase", r.phase);
            o.out("unwrapped_phase", r.unwrapped_phase);
            o.out("line_integral", r.line_integral);
            o.out("flux_through_surface", r.flux_through_surface);
            o.out("expected_phase", expected);
            o.out("classification", r.classification.as_str());
            if let Some(w) = r.winding_number {
                o.out("winding_number", w);
            }
            o.diag("stokes_residual", r.stokes_residual);
            o.diag("quadrature_error", r.quadrature_error);
            o.checks.push(Check::angle("phase", r.phase, expected, tol::AB_PHASE));

            let subject = HolonomySubject::Field(field.clone());
            let class = classify_holonomy(&subject, &canonical_probes(&subject))?;
            o.out("exterior_flatness", class.max_patch_curvature);
            o.checks.push(Check::at_most(
                "exterior_flatness",
                class.max_patch_curvature,
                tol::AB_EXTERIOR,
            ));

            if random_loops > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                let mut phases = Vec::with_capacity(random_loops);
                let mut worst: f64 = 0.0;
                for _ in 0..random_loops {
                    let lp = random_enclosing_loop(&mut rng, center, radius, loop_radius, loop_points)?
                        .repeated(windings)?;
                    let r = ab_phase(&field, &lp, q, hbar)?;
                    worst = worst.max(angle_diff(r.phase, expected).abs());
                    phases.push(r.unwrapped_phase);
                }
                let spread = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - phases.iter().copied().fold(f64::INFINITY, f64::min);
                o.out("random_max_error", worst);
                o.out("random_spread", spread);
                o.diag("random_loops", random_loops);
                o.checks
                    .push(Check::at_most("random_loops_phase", worst, tol::AB_PHASE));
                o.checks
                    .push(Check::at_most("deformation_spread", spread, tol::AB_PHASE));
            }
        }
        &Params::Classify { subject, expect } => {
            let subj = match subject {
                ClassifySubject::Mobius => HolonomySubject::Mobius(MobiusStrip::default()),
                ClassifySubject::Sphere => HolonomySubject::Sphere,
                ClassifySubject::Solenoid { flux, radius } => {
                    HolonomySubject::Field(VectorPotentialField::solenoid([0.0, 0.0], radius, flux)?)
                }
                ClassifySubject::Cone { deficit } => HolonomySubject::Cone { deficit },
                ClassifySubject::Uniform { b } => HolonomySubject::Field(VectorPotentialField::UniformField { b }),
            };
            let probes = canonical_probes(&subj);
            let c = classify_holonomy(&subj, &probes)?;
            o.out("classification", c.class.as_str());
            o.out("max_patch_curvature", c.max_patch_curvature);
            o.out("max_family_spread", c.max_family_spread);
            o.out("nontrivial_holonomy", c.nontrivial_holonomy);
            o.diag("flat_threshold", c.flat_threshold);
            o.diag("probes", c.probes);
            if let Some(e) = expect {
                o.checks
                    .push(Check::equal("classification", c.class.as_str(), e.as_str()));
            }
        }
    }
    Ok(o)
}

/// Star-shaped loop `r(φ) = R (1 + Σ a_m cos(mφ + p_m))` about a slightly
/// shifted centre. Requires `loop_radius >= 2 radius`, which keeps it clear of
/// the solenoid.
pub(crate) fn random_enclosing_loop(
    rng: &mut ChaCha8Rng,
    center: [f64; 2],
    radius: f64,
    loop_radius: f64,
    n: usize,
) -> Result<PlanarLoop, HolonomyError> {
    let shift = Vec2::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)) * radius;
    let harmonics: Vec<(f64, f64)> = (1..=4)
        .map(|m| (rng.random_range(-0.15..0.15) / m as f64, rng.random_range(0.0..TAU)))
        .collect();
    let c = Vec2::new(center[0], center[1]) + shift;
    PlanarLoop::new(
        (0..n)
            .map(|k| {
                let phi = TAU * k as f64 / n as f64;
                let r = loop_radius
                    * (1.0
                        + harmonics
                            .iter()
                            .enumerate()
                            .map(|(m, (a, p))| a * ((m + 1) as f64 * phi + p).cos())
                            .sum::<f64>());
                c + Vec2::new(phi.cos(), phi.sin()) * r
            })
            .collect(),
    )
}

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b` inclusive.
pub fn sweep_values(grid: &str) -> Result<Vec<f64>, ScenarioError> {
    let bad = || ScenarioError::validation("grid", format!("expected `start:stop:count`, got `{grid}`"));
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

/// Runs `scenario` once per value of parameter `name`, on up to `jobs`
/// threads. Results keep the order of `values`.
pub fn run_sweep(
    scenario: &Scenario,
    name: &str,
    values: &[f64],
    jobs: usize,
) -> Result<Vec<Result<RunReport, ScenarioError>>, ScenarioError> {
    let variants = values
        .iter()
        .map(|&v| {
            let mut s = scenario.with_param(name, v)?;
            s.id = format!("{}[{name}={v}]", scenario.id);
            Ok(s)
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ScenarioError::InternalInvariantBroken(e.to_string()))?;
    Ok(pool.install(|| variants.par_iter().map(run).collect()))
}

#[cfg(test)]
mod tests {
    use super::super::parse_scenario;
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(sweep_values("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(sweep_values("2:5:1").unwrap(), vec![2.0]);
        assert!(sweep_values("0:1").is_err());
        assert!(sweep_values("a:1:2").is_err());
    }

    #[test]
    fn random_loops_stay_outside() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let lp = random_enclosing_loop(&mut rng, [0.0, 0.0], 1.0, 2.0, 128).unwrap();
            assert!(lp.points().iter().all(|p| p.norm() > 1.1));
        }
    }

    #[test]
    fn engine_errors_keep_the_id() {
        // Far too fast to be adiabatic: the state does not return to its ray.
        let s =
            parse_scenario("id = \"fast\"\nkind = \"berry_adiabatic\"\n[params]\ntheta = 1.0\nperiod = 1.0\n").unwrap();
        let err = run(&s).unwrap_err();
        assert!(matches!(&err, ScenarioError::Engine { id, source: HolonomyError::OpenLoop { .. } } if id == "fast"));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn deterministic_reports() {
        let text = "id = \"ab\"\nkind = \"ab_phase\"\nseed = 4\n[params]\nflux = 3.141592653589793\nrandom_loops = 3\n";
        let a = run(&parse_scenario(text).unwrap()).unwrap();
        let b = run(&parse_scenario(text).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.passed(), "{a:?}");
    }

    #[test]
    fn sweep_keeps_order() {
        let s = parse_scenario("id = \"f\"\nkind = \"foucault\"\n[params]\nlatitude = 0.1\n").unwrap();
        let values = sweep_values("0:1:5").unwrap();
        let reports = run_sweep(&s, "latitude", &values, 3).unwrap();
        for (r, v) in reports.iter().zip(&values) {
            let r = r.as_ref().unwrap();
            assert!((r.output("expected").unwrap() + TAU * v.sin()).abs() < 1e-15);
        }
    }
}
