//! Reconstruction of 2D acoustic pressure fields from sparse microphone
//! measurements.
//!
//! The main ingredients:
//!
//! * [`roomsim`] — frequency-domain image-source model of a rectangular
//!   room, used as ground truth.
//! * [`pibi`] — the boundary-integral network: a small fully-connected
//!   network represents a density on the boundary of the reconstruction
//!   region, and the interior field is obtained by quadrature of the
//!   Kirchhoff-Helmholtz integral. The reconstruction satisfies the
//!   Helmholtz equation by construction.
//! * [`pinn`] — baseline physics-informed network penalizing the Helmholtz
//!   residual at interior collocation points.
//! * [`harness`] — configuration-driven sweeps over frequency, microphone
//!   count and integration/collocation points, with CSV and image output.

pub mod greens;
pub mod metrics;
pub mod neural;
pub mod pibi;
pub mod pinn;
pub mod roomsim;
pub mod special_math;

pub mod harness;

pub use greens::{Point2, Point3, UnitVec2, Wavenumber};
pub use special_math::Complex64;

/// Derives independent RNG streams from one base seed (splitmix64 steps).
pub(crate) fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
