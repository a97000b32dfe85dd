use std::f64::consts::{FRAC_PI_2, TAU};

use super::sphere::{transport_step, TransportScheme};
use super::Vec3;
use crate::angle_diff;
use crate::error::{HolonomyError, Result};

const STEPS_PER_DAY: f64 = 10_000.0;

/// Ground-frame rotation of a Foucault pendulum's swing plane after
/// `duration` sidereal days at `latitude` (radians).
///
/// The pendulum's site is carried around its latitude circle in the
/// inertial frame and the swing direction is parallel-transported along it;
/// the angle is read off against the co-rotating east/north frame and
/// accumulated continuously. Negative is clockwise seen from above.
pub fn foucault_precession(latitude: f64, duration: f64) -> Result<f64> {
    if !latitude.is_finite() || latitude.abs() > FRAC_PI_2 + 1e-12 {
        return Err(HolonomyError::InvalidInput(format!(
            "latitude {latitude} outside [-π/2, π/2]"
        )));
    }
    if !duration.is_finite() {
        return Err(HolonomyError::InvalidInput("non-finite duration".into()));
    }
    let lat = latitude.clamp(-FRAC_PI_2, FRAC_PI_2);
    let (sl, cl) = lat.sin_cos();
    let steps = ((STEPS_PER_DAY * duration.abs()).ceil() as usize).max(16);
    let site = |phi: f64| Vec3::new(cl * phi.cos(), cl * phi.sin(), sl);
    let east = |phi: f64| Vec3::new(-phi.sin(), phi.cos(), 0.0);
    let north = |phi: f64| Vec3::new(-sl * phi.cos(), -sl * phi.sin(), cl);
    let frame_angle = |v: &Vec3, phi: f64| v.dot(&north(phi)).atan2(v.dot(&east(phi)));

    let mut v = north(0.0);
    let mut prev = frame_angle(&v, 0.0);
    let mut total = 0.0;
    for k in 0..steps {
        let a = TAU * duration * k as f64 / steps as f64;
        let b = TAU * duration * (k + 1) as f64 / steps as f64;
        v = transport_step(&v, &site(a), &site(b), TransportScheme::GeodesicRotation);
        let cur = frame_angle(&v, b);
        total += angle_diff(cur, prev);
        prev = cur;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_turns_full_circle() {
        assert!((foucault_precession(FRAC_PI_2, 1.0).unwrap() + TAU).abs() < 1e-6);
        assert!((foucault_precession(-FRAC_PI_2, 1.0).unwrap() - TAU).abs() < 1e-6);
    }

    #[test]
    fn equator_does_not_precess() {
        assert!(foucault_precession(0.0, 1.0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn paris() {
        let lat = 48.85f64.to_radians();
        let got = foucault_precession(lat, 1.0).unwrap();
        assert!((got + TAU * lat.sin()).abs() < 1e-4);
        assert!((got + 4.731).abs() < 1e-3);
    }

    #[test]
    fn scales_with_duration() {
        let lat = 0.6;
        let half = foucault_precession(lat, 0.5).unwrap();
        let three = foucault_precession(lat, 3.0).unwrap();
        assert!((half + 0.5 * TAU * lat.sin()).abs() < 1e-6);
        assert!((three + 3.0 * TAU * lat.sin()).abs() < 1e-6);
    }

    #[test]
    fn bad_latitude() {
        assert!(foucault_precession(2.0, 1.0).is_err());
    }
}
