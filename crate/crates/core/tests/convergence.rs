use std::f64::consts::PI;

use holonomy_core::angle_diff;
use holonomy_core::classical::{sphere_parallel_transport_with, SpherePath, TangentVector, TransportScheme};
use holonomy_core::dynamics::{
    adiabatic_track, propagate_eigenstate, HamiltonianFamily, ParameterLoop, DEFAULT_GAP_TOL,
};
use holonomy_core::phase::{bargmann_holonomy, decompose_phase};

const THETA: f64 = PI / 3.0;

fn cone_oracle() -> f64 {
    -PI * (1.0 - THETA.cos())
}

#[test]
fn bargmann_error_shrinks_quadratically() {
    let fam = HamiltonianFamily::spin_half_in_field(1.0);
    let errors: Vec<f64> = [50, 100, 200, 400, 800]
        .iter()
        .map(|&n| {
            let lp = ParameterLoop::field_cone(1.0, THETA, n, 1.0).unwrap();
            let states = adiabatic_track(&fam, &lp, 0, DEFAULT_GAP_TOL).unwrap();
            angle_diff(bargmann_holonomy(&states, true).unwrap().geometric_phase, cone_oracle()).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{errors:?}");
    }
}

#[test]
fn split_approaches_solid_angle_as_loop_slows() {
    let fam = HamiltonianFamily::spin_half_in_field(1.0);
    let errors: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&period| {
            let lp = ParameterLoop::field_cone(1.0, THETA, 2000, period).unwrap();
            let rec = propagate_eigenstate(&fam, &lp, 0, 16, 1.0).unwrap();
            angle_diff(decompose_phase(&rec, 0.9).unwrap().geometric, cone_oracle()).abs()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 2e-2);
}

#[test]
fn substep_refinement_converges() {
    let fam = HamiltonianFamily::spin_half_in_field(1.0);
    let lp = ParameterLoop::field_cone(1.0, THETA, 500, 1e3).unwrap();
    let phases: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|&steps| {
            let rec = propagate_eigenstate(&fam, &lp, 0, steps, 1.0).unwrap();
            decompose_phase(&rec, 0.9).unwrap().geometric
        })
        .collect();
    let diffs: Vec<f64> = phases.windows(2).map(|w| angle_diff(w[0], w[1]).abs()).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

#[test]
fn projection_transport_converges_to_exact() {
    let triangle = [[0.1, 0.2, 1.0], [1.0, 0.1, 0.3], [0.2, 0.9, -0.1]];
    let transport = |n: usize, scheme: TransportScheme| {
        let path = SpherePath::geodesic_polygon(&triangle, n).unwrap();
        let base = path.base();
        let toward = path.points()[1] - base;
        let t = (toward - base * toward.dot(&base)).normalize();
        let v0 = TangentVector::new(base, t * 0.7f64.cos() + base.cross(&t) * 0.7f64.sin()).unwrap();
        sphere_parallel_transport_with(&path, &v0, scheme)
            .unwrap()
            .holonomy_angle
    };
    let exact = transport(300, TransportScheme::GeodesicRotation);
    let errors: Vec<f64> = [300, 3000, 30000]
        .iter()
        .map(|&n| angle_diff(transport(n, TransportScheme::Projection), exact).abs())
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 1e-3);
}
