use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holonomy_core::angle_diff;
use holonomy_core::classical::{foucault_precession, sphere_parallel_transport, SpherePath, TangentVector, Vec3};
use holonomy_core::gauge::{ab_phase, line_integral, winding_number, PlanarLoop, Vec2, VectorPotentialField};
use holonomy_core::linalg::{eigh, expm_unitary, ComplexMatrix, Ray, State};
use holonomy_core::phase::{bargmann_holonomy, horizontal_lift};
use holonomy_core::scenario::{corpus, emit_report, parse_scenario, run, Format};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> State {
    State::new(
        (0..dim)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        h[(i, i)] = c(scale * rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..dim {
            let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// Smooth closed loop of rays with arbitrary representatives.
fn random_ray_loop(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Vec<State> {
    let base = random_state(rng, dim);
    let h1 = random_state(rng, dim);
    let h2 = random_state(rng, dim);
    let (w1, w2) = (rng.random_range(0.1..0.6), rng.random_range(0.0..0.3));
    (0..n)
        .map(|k| {
            let phi = TAU * k as f64 / n as f64;
            let amps = (0..dim)
                .map(|i| {
                    base.amplitudes()[i]
                        + h1.amplitudes()[i] * Complex64::from_polar(w1, phi)
                        + h2.amplitudes()[i] * Complex64::from_polar(w2, 2.0 * phi)
                })
                .collect();
            State::new(amps).unwrap().with_phase(rng.random_range(-PI..PI))
        })
        .collect()
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}

fn gamma(states: &[State]) -> f64 {
    bargmann_holonomy(states, true).unwrap().geometric_phase
}

fn unit(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2]).normalize()
}

fn transport(path: &SpherePath) -> f64 {
    let base = path.base();
    let toward = path.points()[1] - base;
    let v0 = TangentVector::new(base, toward - base * toward.dot(&base)).unwrap();
    sphere_parallel_transport(path, &v0).unwrap().holonomy_angle
}

/// Spherical excess from the interior angles, signed by orientation.
fn girard_area(a: Vec3, b: Vec3, cc: Vec3) -> f64 {
    let corner = |p: Vec3, q: Vec3, r: Vec3| {
        let tq = (q - p * p.dot(&q)).normalize();
        let tr = (r - p * p.dot(&r)).normalize();
        tq.dot(&tr).clamp(-1.0, 1.0).acos()
    };
    let excess = corner(a, b, cc) + corner(b, cc, a) + corner(cc, a, b) - PI;
    excess * a.dot(&b.cross(&cc)).signum()
}

/// Random point within `spread` radians of `center`.
fn near(rng: &mut ChaCha8Rng, center: Vec3, spread: f64) -> Vec3 {
    let helper = if center.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = center.cross(&helper).normalize();
    let e2 = center.cross(&e1);
    let r = rng.random_range(0.05..spread);
    let a = rng.random_range(0.0..TAU);
    (center * r.cos() + (e1 * a.cos() + e2 * a.sin()) * r.sin()).normalize()
}

fn star_loop(rng: &mut ChaCha8Rng, center: Vec2, mean: f64, n: usize) -> Vec<Vec2> {
    let wobble: Vec<(f64, f64)> = (1..=4)
        .map(|m| (rng.random_range(-0.15..0.15) / m as f64, rng.random_range(0.0..TAU)))
        .collect();
    (0..n)
        .map(|k| {
            let phi = TAU * k as f64 / n as f64;
            let r = mean
                * (1.0
                    + wobble
                        .iter()
                        .enumerate()
                        .map(|(m, (a, p))| a * ((m + 1) as f64 * phi + p).cos())
                        .sum::<f64>());
            center + Vec2::new(phi.cos(), phi.sin()) * r
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_composes(seed in any::<u64>(), dim in 1usize..6, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(&mut rng, dim, 1.0);
        let a = expm_unitary(&h, t1, 1.0).unwrap();
        let b = expm_unitary(&h, t2, 1.0).unwrap();
        let ab = expm_unitary(&h, t1 + t2, 1.0).unwrap();
        prop_assert!(max_diff(&(&a * &b), &ab) < 1e-10);
        prop_assert!(ab.unitarity_error() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs(seed in any::<u64>(), dim in 1usize..7, scale in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(&mut rng, dim, scale);
        let e = eigh(&h).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let mut rebuilt = ComplexMatrix::zeros(dim);
        for (lambda, v) in e.values.iter().zip(&e.vectors) {
            let a = v.amplitudes();
            for i in 0..dim {
                for j in 0..dim {
                    rebuilt[(i, j)] += a[i] * a[j].conj() * lambda;
                }
            }
        }
        prop_assert!(max_diff(&rebuilt, &h) < 1e-11 * scale.max(1.0) * dim as f64);
        for i in 0..dim {
            for j in 0..dim {
                let ov = e.vectors[i].braket(&e.vectors[j]).norm();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ov - expected).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn ray_ignores_complex_scaling(seed in any::<u64>(), dim in 1usize..6, modulus in 1e-3f64..1e3, arg in -PI..PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng, dim);
        let t = s.scaled(Complex64::from_polar(modulus, arg)).unwrap();
        let (a, b) = (Ray::new(&s), Ray::new(&t));
        prop_assert!(a == b);
        let diff: f64 = a.representative().amplitudes().iter()
            .zip(b.representative().amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn bargmann_is_gauge_invariant(seed in any::<u64>(), dim in 2usize..6, n in 8usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = random_ray_loop(&mut rng, dim, n);
        let rephased: Vec<State> = states.iter().map(|s| s.with_phase(rng.random_range(-PI..PI))).collect();
        prop_assert!(angle_diff(gamma(&states), gamma(&rephased)).abs() < 1e-12);
    }

    #[test]
    fn bargmann_is_unitarily_invariant(seed in any::<u64>(), dim in 2usize..6, n in 8usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = random_ray_loop(&mut rng, dim, n);
        let u = expm_unitary(&random_hermitian(&mut rng, dim, 2.0), 1.0, 1.0).unwrap();
        let moved: Vec<State> = states.iter().map(|s| u.apply(s).unwrap()).collect();
        prop_assert!(angle_diff(gamma(&states), gamma(&moved)).abs() < 1e-12);
    }

    #[test]
    fn reversal_negates_holonomy(seed in any::<u64>(), dim in 2usize..6, n in 8usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = random_ray_loop(&mut rng, dim, n);
        let mut rev = states.clone();
        rev.reverse();
        prop_assert!(angle_diff(gamma(&states), -gamma(&rev)).abs() < 1e-12);
    }

    #[test]
    fn lift_matches_bargmann(seed in any::<u64>(), dim in 2usize..6, n in 8usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = random_ray_loop(&mut rng, dim, n);
        let lift = horizontal_lift(&states, true).unwrap().geometric_phase;
        prop_assert!(angle_diff(lift, gamma(&states)).abs() < 1e-12);
    }

    #[test]
    fn sphere_triangle_matches_girard(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = unit([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let (a, b, cc) = (near(&mut rng, center, 1.2), near(&mut rng, center, 1.2), near(&mut rng, center, 1.2));
        prop_assume!(a.cross(&b).norm() > 0.05 && b.cross(&cc).norm() > 0.05 && cc.cross(&a).norm() > 0.05);
        prop_assume!(a.dot(&b.cross(&cc)).abs() > 1e-3);
        let path = SpherePath::geodesic_polygon(&[a.into(), b.into(), cc.into()], 600).unwrap();
        prop_assert!(angle_diff(transport(&path), girard_area(a, b, cc)).abs() < 1e-9);
    }

    #[test]
    fn sphere_holonomy_adds_over_concatenation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = unit([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let (b1, c1) = (near(&mut rng, base, 1.0), near(&mut rng, base, 1.0));
        let (b2, c2) = (near(&mut rng, base, 1.0), near(&mut rng, base, 1.0));
        for (p, q) in [(b1, c1), (b2, c2)] {
            prop_assume!(base.cross(&p).norm() > 0.05 && p.cross(&q).norm() > 0.05 && q.cross(&base).norm() > 0.05);
        }
        let first = SpherePath::geodesic_polygon(&[base.into(), b1.into(), c1.into()], 300).unwrap();
        let second = SpherePath::geodesic_polygon(&[base.into(), b2.into(), c2.into()], 300).unwrap();
        let both = first.concat(&second).unwrap();
        prop_assert!(angle_diff(transport(&both), transport(&first) + transport(&second)).abs() < 1e-9);
        prop_assert!(angle_diff(transport(&first.reversed()), -transport(&first)).abs() < 1e-9);
    }

    #[test]
    fn foucault_follows_sine_law(lat in -FRAC_PI_2..FRAC_PI_2, days in 0.1f64..3.0) {
        let p = foucault_precession(lat, days).unwrap();
        prop_assert!((p + TAU * lat.sin() * days).abs() < 1e-4 * days);
    }

    #[test]
    fn uniform_field_obeys_stokes(seed in any::<u64>(), b in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let mean = rng.random_range(0.2..3.0);
        let n = rng.random_range(5..200);
        let lp = PlanarLoop::new(star_loop(&mut rng, center, mean, n)).unwrap();
        let field = VectorPotentialField::UniformField { b };
        let (line, _) = line_integral(&field, &lp).unwrap();
        prop_assert!((line - b * lp.signed_area()).abs() < 1e-10 * (1.0 + (b * mean * mean).abs()));
    }

    #[test]
    fn solenoid_phase_depends_only_on_winding(seed in any::<u64>(), flux in -10.0f64..10.0, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = VectorPotentialField::solenoid([0.0, 0.0], 1.0, flux).unwrap();
        let shift = Vec2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let mean = rng.random_range(2.0..5.0);
        let around = PlanarLoop::new(star_loop(&mut rng, shift, mean, 128)).unwrap();
        let r = ab_phase(&field, &around.repeated(k).unwrap(), 1.0, 1.0).unwrap();
        prop_assert_eq!(r.winding_number, Some(k as i64));
        prop_assert!((r.unwrapped_phase - k as f64 * flux).abs() < 1e-9 * (1.0 + flux.abs()));
        let rev = ab_phase(&field, &around.reversed(), 1.0, 1.0).unwrap();
        prop_assert!((rev.unwrapped_phase + flux).abs() < 1e-9 * (1.0 + flux.abs()));

        // A loop that does not enclose the solenoid picks up nothing.
        let far = Vec2::new(rng.random_range(4.0..6.0), 0.0);
        let mean = rng.random_range(0.5..2.0);
        let outside = PlanarLoop::new(star_loop(&mut rng, far, mean, 96)).unwrap();
        prop_assert_eq!(winding_number(&outside, [0.0, 0.0]).unwrap(), 0);
        prop_assert!(line_integral(&field, &outside).unwrap().0.abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        for name in ["bargmann_gauge", "ab_solenoid", "foucault_paris"] {
            let entry = corpus().iter().find(|e| e.name == name).unwrap();
            let s = parse_scenario(entry.text).unwrap().with_seed(seed);
            for format in [Format::Json, Format::Csv] {
                let a = emit_report(&run(&s).unwrap(), format).unwrap();
                let b = emit_report(&run(&parse_scenario(entry.text).unwrap().with_seed(seed)).unwrap(), format).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
