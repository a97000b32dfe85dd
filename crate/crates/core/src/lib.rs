//! Geometric phases and holonomies at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: small dense complex linear algebra (Jacobi eigensolver,
//!   unitary exponentials, states and rays).
//! - [`dynamics`]: driving a state around a parameter loop with the
//!   time-dependent Schrödinger equation, and adiabatic eigenvector tracking.
//! - [`phase`]: dynamical/geometric phase split, Bargmann products, horizontal
//!   lifts, Berry connection and curvature.
//! - [`classical`]: parallel transport on the sphere, the Möbius strip,
//!   Foucault's pendulum and Thomas precession.
//! - [`gauge`]: Aharonov-Bohm loop integrals and the holonomy classifier.
//! - [`scenario`]: scenario files, dispatch and machine-readable reports.

// `!(x > 0.0)` also rejects NaN; index loops read closer to the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classical;
pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod linalg;
pub mod phase;
pub mod scenario;

pub use error::{HolonomyError, Result};

use std::f64::consts::{PI, TAU};

/// Run-level physical constants. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Constants {
    /// Reduced Planck constant.
    pub hbar: f64,
    /// Speed of light.
    pub c: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { hbar: 1.0, c: 1.0 }
    }
}

/// Reduces an angle to the principal branch (-π, π].
pub fn principal_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Smallest signed difference `a - b` on the circle, in (-π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    principal_angle(a - b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_branch_edges() {
        assert_eq!(principal_angle(PI), PI);
        assert!((principal_angle(-PI) - PI).abs() < 1e-15);
        assert!((principal_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((principal_angle(-TAU) - 0.0).abs() < 1e-15);
        assert!((principal_angle(1.0) - 1.0).abs() < 1e-15);
        assert!((angle_diff(PI - 1e-3, -PI + 1e-3) + 2e-3).abs() < 1e-12);
    }
}
