//! Ground-truth generator: frequency-domain 2D image-source model of a
//! rectangular room.
//!
//! Wall reflections are modeled by mirrored virtual sources weighted by
//! `beta^o`, where `o` counts the wall bounces of an image. Each frequency is
//! evaluated directly through the 2D Green's function, so the simulated field
//! is an exact Helmholtz solution away from the (image) sources; there is no
//! time-domain synthesis and no windowing.

use crate::greens::{green_2d, GreensError, Point2, Wavenumber};
use crate::special_math::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum RoomsimError {
    /// Room or region parameters violate an invariant.
    InvalidSpec(String),
    /// An evaluation point coincides with a (possibly mirrored) source.
    CoincidentSource { x: f64, y: f64 },
}

impl fmt::Display for RoomsimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoomsimError::InvalidSpec(msg) => write!(f, "invalid room/region spec: {msg}"),
            RoomsimError::CoincidentSource { x, y } => {
                write!(f, "evaluation point coincides with an image source at ({x}, {y})")
            }
        }
    }
}

impl std::error::Error for RoomsimError {}

/// Rectangular room `[0, Lx] x [0, Ly]` with a single omnidirectional source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomSpec {
    pub length_x: f64,
    pub length_y: f64,
    pub source: Point2,
    /// Wall reflection coefficient, identical on all four walls.
    pub beta: f64,
    /// Speed of sound, m/s.
    pub c: f64,
}

impl RoomSpec {
    pub fn new(
        length_x: f64,
        length_y: f64,
        source: Point2,
        beta: f64,
        c: f64,
    ) -> Result<Self, RoomsimError> {
        if !(length_x > 0.0 && length_y > 0.0) {
            return Err(RoomsimError::InvalidSpec(format!(
                "room dimensions must be positive, got ({length_x}, {length_y})"
            )));
        }
        if !(source.x > 0.0 && source.x < length_x && source.y > 0.0 && source.y < length_y) {
            return Err(RoomsimError::InvalidSpec(format!(
                "source ({}, {}) must lie strictly inside the room",
                source.x, source.y
            )));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(RoomsimError::InvalidSpec(format!(
                "reflection coefficient must be in [0, 1), got {beta}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(RoomsimError::InvalidSpec(format!(
                "speed of sound must be positive, got {c}"
            )));
        }
        Ok(Self { length_x, length_y, source, beta, c })
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x > 0.0 && p.x < self.length_x && p.y > 0.0 && p.y < self.length_y
    }
}

/// Axis-aligned rectangular reconstruction region (source-free by contract).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub origin: Point2,
    pub side_x: f64,
    pub side_y: f64,
}

impl Region {
    pub fn new(origin: Point2, side_x: f64, side_y: f64) -> Result<Self, RoomsimError> {
        if !(side_x > 0.0 && side_y > 0.0 && origin.x.is_finite() && origin.y.is_finite()) {
            return Err(RoomsimError::InvalidSpec(format!(
                "region sides must be positive, got ({side_x}, {side_y})"
            )));
        }
        Ok(Self { origin, side_x, side_y })
    }

    /// Closed-region containment.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.origin.x
            && p.x <= self.origin.x + self.side_x
            && p.y >= self.origin.y
            && p.y <= self.origin.y + self.side_y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.origin.x + 0.5 * self.side_x, self.origin.y + 0.5 * self.side_y)
    }
}

/// Checks that the region sits strictly inside the room and does not contain
/// the source.
pub fn validate_region(room: &RoomSpec, region: &Region) -> Result<(), RoomsimError> {
    let (x0, y0) = (region.origin.x, region.origin.y);
    let (x1, y1) = (x0 + region.side_x, y0 + region.side_y);
    if !(x0 > 0.0 && y0 > 0.0 && x1 < room.length_x && y1 < room.length_y) {
        return Err(RoomsimError::InvalidSpec(
            "region must be strictly contained in the room".into(),
        ));
    }
    if region.contains(room.source) {
        return Err(RoomsimError::InvalidSpec(
            "region must be source-free, but the source lies inside it".into(),
        ));
    }
    Ok(())
}

/// Complex microphone readings at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub positions: Vec<Point2>,
    pub values: Vec<Complex64>,
    pub frequency_hz: f64,
}

/// Result of the T60 -> reflection-coefficient conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionEstimate {
    pub beta: f64,
    /// Set when the requested T60 implies absorption >= 1; beta is then 0.
    pub fully_absorbing: bool,
}

/// Sabine-style 2D estimate of a uniform wall reflection coefficient from a
/// target reverberation time.
///
/// Uses `alpha = (24 ln 10 / c) * A / (P * t60)` with area `A = Lx * Ly` and
/// perimeter `P = 2 (Lx + Ly)`, then `beta = sqrt(1 - alpha)` clamped to
/// `[0, 0.999]`.
pub fn reflection_from_t60(room_dims: (f64, f64), t60: f64, c: f64) -> ReflectionEstimate {
    assert!(t60 > 0.0, "t60 must be positive");
    let (lx, ly) = room_dims;
    let area = lx * ly;
    let perimeter = 2.0 * (lx + ly);
    let alpha = (24.0 * std::f64::consts::LN_10 / c) * area / (perimeter * t60);
    if alpha >= 1.0 {
        ReflectionEstimate { beta: 0.0, fully_absorbing: true }
    } else {
        ReflectionEstimate { beta: (1.0 - alpha).sqrt().min(0.999), fully_absorbing: false }
    }
}

/// Pressure at `r` from the source and all image sources with at most
/// `max_order` wall reflections.
pub fn image_source_field(
    room: &RoomSpec,
    r: Point2,
    k: Wavenumber,
    max_order: u32,
) -> Result<Complex64, RoomsimError> {
    assert!(room.contains(r), "evaluation point must lie inside the room");
    let order = max_order as i64;
    // o >= 2|n| - 1, so |n| beyond (order + 1)/2 can't meet the cutoff.
    let n_max = (order + 1) / 2;
    let mut beta_pow = Vec::with_capacity(max_order as usize + 1);
    let mut p = 1.0;
    for _ in 0..=max_order {
        beta_pow.push(p);
        p *= room.beta;
    }

    let mut sum = Complex64::new(0.0, 0.0);
    for nx in -n_max..=n_max {
        for ny in -n_max..=n_max {
            for sigma_x in 0..=1i64 {
                for sigma_y in 0..=1i64 {
                    let bounces =
                        (nx - sigma_x).abs() + nx.abs() + (ny - sigma_y).abs() + ny.abs();
                    if bounces > order {
                        continue;
                    }
                    let img = Point2::new(
                        (1 - 2 * sigma_x) as f64 * room.source.x + 2.0 * nx as f64 * room.length_x,
                        (1 - 2 * sigma_y) as f64 * room.source.y + 2.0 * ny as f64 * room.length_y,
                    );
                    let g = green_2d(img, r, k).map_err(|e| match e {
                        GreensError::CoincidentPoints { .. } => {
                            RoomsimError::CoincidentSource { x: img.x, y: img.y }
                        }
                        other => RoomsimError::InvalidSpec(other.to_string()),
                    })?;
                    sum += beta_pow[bounces as usize] * g;
                }
            }
        }
    }
    Ok(sum)
}

/// Row-major grid of `nx * ny` equally spaced points spanning the closed
/// region (both edges included).
pub fn make_grid(region: &Region, nx: usize, ny: usize) -> Vec<Point2> {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2 points per axis");
    let dx = region.side_x / (nx - 1) as f64;
    let dy = region.side_y / (ny - 1) as f64;
    let mut points = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            points.push(Point2::new(
                region.origin.x + ix as f64 * dx,
                region.origin.y + iy as f64 * dy,
            ));
        }
    }
    points
}

/// Samples the image-source field at the microphone positions, optionally
/// adding circularly-symmetric complex Gaussian noise at the given SNR.
///
/// The per-microphone noise power is `|p|^2 / (M 10^{snr/10})`, so the
/// expected vector-level SNR matches `snr_db`. Deterministic given `seed`.
pub fn simulate_measurements(
    room: &RoomSpec,
    positions: &[Point2],
    frequency_hz: f64,
    max_order: u32,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<Measurements, RoomsimError> {
    let k = Wavenumber::from_frequency(frequency_hz, room.c)
        .map_err(|e| RoomsimError::InvalidSpec(e.to_string()))?;
    let mut values = Vec::with_capacity(positions.len());
    for &p in positions {
        values.push(image_source_field(room, p, k, max_order)?);
    }
    if let Some(snr) = snr_db {
        let signal_power: f64 = values.iter().map(|v| v.norm_sqr()).sum();
        let noise_var = signal_power / (positions.len() as f64 * 10f64.powf(snr / 10.0));
        let sigma = (0.5 * noise_var).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut values {
            let n_re: f64 = StandardNormal.sample(&mut rng);
            let n_im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(sigma * n_re, sigma * n_im);
        }
    }
    Ok(Measurements { positions: positions.to_vec(), values, frequency_hz })
}
