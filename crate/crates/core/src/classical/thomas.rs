use std::f64::consts::TAU;

use nalgebra::{Matrix3, Matrix4, Vector4};

use super::Vec3;
use crate::error::{HolonomyError, Result};

/// Closed loop of velocities visited by a gyroscope, joined by pure boosts.
/// The last velocity connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityLoop {
    velocities: Vec<Vec3>,
    c: f64,
}

impl VelocityLoop {
    pub fn new(velocities: Vec<Vec3>, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(HolonomyError::InvalidInput(format!(
                "speed of light must be positive, got {c}"
            )));
        }
        if velocities.len() < 3 {
            return Err(HolonomyError::InvalidInput(
                "a velocity loop needs at least 3 points".into(),
            ));
        }
        for (index, v) in velocities.iter().enumerate() {
            let speed = v.norm();
            if !speed.is_finite() || speed >= c {
                return Err(HolonomyError::SuperluminalVelocity { index, speed, c });
            }
        }
        Ok(Self { velocities, c })
    }

    /// Uniform circular motion in the xy-plane, counterclockwise seen from +z,
    /// sampled at `n` points.
    pub fn circular(speed: f64, n: usize, c: f64) -> Result<Self> {
        let velocities = (0..n)
            .map(|k| {
                let phi = TAU * k as f64 / n as f64;
                Vec3::new(-phi.sin(), phi.cos(), 0.0) * speed
            })
            .collect();
        Self::new(velocities, c)
    }

    pub fn velocities(&self) -> &[Vec3] {
        &self.velocities
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Sum of `v_k × v_{k+1}`; its direction is the loop's orientation.
    pub fn orbital_normal(&self) -> Vec3 {
        let n = self.velocities.len();
        (0..n)
            .map(|k| self.velocities[k].cross(&self.velocities[(k + 1) % n]))
            .sum()
    }
}

/// Pure boost taking lab coordinates `(ct, x)` to those of a frame moving
/// with dimensionless velocity `beta`.
pub fn lorentz_boost(beta: &Vec3) -> Matrix4<f64> {
    let b2 = beta.norm_squared();
    let gamma = 1.0 / (1.0 - b2).sqrt();
    let mut m = Matrix4::identity();
    m[(0, 0)] = gamma;
    for i in 0..3 {
        m[(0, i + 1)] = -gamma * beta[i];
        m[(i + 1, 0)] = -gamma * beta[i];
        for j in 0..3 {
            let extra = if b2 > 0.0 {
                (gamma - 1.0) * beta[i] * beta[j] / b2
            } else {
                0.0
            };
            m[(i + 1, j + 1)] += extra;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThomasRotation {
    /// Rotation of the gyroscope axis after one circuit, in the frame of the
    /// first velocity.
    pub rotation: Matrix3<f64>,
    /// Signed angle; positive when the rotation axis is along the orbital
    /// normal.
    pub angle: f64,
    pub axis: Vec3,
    /// `max |R Rᵀ - I|`.
    pub orthogonality_error: f64,
    /// Largest deviation of the composed transformation from a pure rotation
    /// (time-space block entries).
    pub boost_residual: f64,
}

/// Composes the pure boosts between consecutive velocities of the loop and
/// extracts the residual spatial rotation.
pub fn thomas_rotation(lp: &VelocityLoop) -> Result<ThomasRotation> {
    let betas: Vec<Vec3> = lp.velocities.iter().map(|v| v / lp.c).collect();
    let n = betas.len();
    let mut l = lorentz_boost(&betas[0]);
    for k in 1..=n {
        let next = &betas[k % n];
        let g = 1.0 / (1.0 - next.norm_squared()).sqrt();
        let u_lab = Vector4::new(g, g * next.x, g * next.y, g * next.z);
        let u = l * u_lab;
        let rel = Vec3::new(u[1], u[2], u[3]) / u[0];
        l = lorentz_boost(&rel) * l;
    }
    let m = l * lorentz_boost(&-betas[0]);
    if !m.iter().all(|x| x.is_finite()) {
        return Err(HolonomyError::InvalidInput("boost composition overflowed".into()));
    }
    let boost_residual = (1..4)
        .map(|i| m[(0, i)].abs().max(m[(i, 0)].abs()))
        .fold((m[(0, 0)] - 1.0).abs(), f64::max);
    let rotation: Matrix3<f64> = m.fixed_view::<3, 3>(1, 1).transpose();
    let orthogonality_error = (rotation * rotation.transpose() - Matrix3::identity()).amax();

    let anti = Vec3::new(
        rotation[(2, 1)] - rotation[(1, 2)],
        rotation[(0, 2)] - rotation[(2, 0)],
        rotation[(1, 0)] - rotation[(0, 1)],
    );
    let s = 0.5 * anti.norm();
    let cos = 0.5 * (rotation.trace() - 1.0);
    let mut angle = s.atan2(cos);
    let mut axis = if s > 1e-15 {
        anti / (2.0 * s)
    } else {
        lp.orbital_normal().try_normalize(0.0).unwrap_or(Vec3::z())
    };
    if axis.dot(&lp.orbital_normal()) < 0.0 {
        angle = -angle;
        axis = -axis;
    }
    Ok(ThomasRotation {
        rotation,
        angle,
        axis,
        orthogonality_error,
        boost_residual,
    })
}
