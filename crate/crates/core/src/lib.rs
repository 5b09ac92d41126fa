//! Numerical laboratory for hydrogen-like atoms in the sharp-field picture:
//! bound eigenfunctions, Hartree ground states, ball-regularized electrostatics,
//! radiation kernels along characteristics, Bohm trajectories, first-order
//! pulse amplitudes, photon guiding and energy-momentum audits.
//!
//! Everything is in Hartree atomic units (e = ħ = m_e = 1, c = 1/α).
//! Closed-form kernels are generic over [`Real`]; solvers work in `f64`.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod audit;
pub mod bohm;
pub mod electrostatics;
pub mod error;
pub mod hartree;
pub mod hydrogen;
pub mod ode;
pub mod perturbation;
pub mod photon;
pub mod quadrature;
pub mod radiation;
pub mod special;
pub mod units;

use num_traits::{Float, FloatConst, FromPrimitive};

pub use error::{Error, Result};

/// Scalar type accepted by the closed-form kernels.
pub trait Real: Float + FloatConst + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Three-vector used by the `f64` solvers.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex three-vector (Weber fields, Fourier samples).
pub type CVec3 = nalgebra::Vector3<num_complex::Complex64>;
pub use num_complex::Complex64;

pub type BallCharge = electrostatics::BallCharge<f64>;
pub type BallCharge32 = electrostatics::BallCharge<f32>;
pub type Spherical = hydrogen::Spherical<f64>;

pub use units::{ALPHA, C_LIGHT};
