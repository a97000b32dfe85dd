//! Classical holonomies: Levi-Civita transport on the unit sphere, the
//! Möbius strip's normal line bundle, Foucault's pendulum and the Thomas
//! (Wigner) rotation of a gyroscope around a velocity-space loop.

mod foucault;
mod mobius;
mod sphere;
mod thomas;

pub use foucault::foucault_precession;
pub use mobius::{mobius_flatness_check, mobius_transport, MobiusStrip};
pub use sphere::{
    signed_polygon_area, sphere_parallel_transport, sphere_parallel_transport_with, sphere_patch_curvature,
    transport_step, PathMode, SpherePath, TangentVector, TransportResult, TransportScheme,
};
pub use thomas::{lorentz_boost, thomas_rotation, ThomasRotation, VelocityLoop};

pub type Vec3 = nalgebra::Vector3<f64>;
