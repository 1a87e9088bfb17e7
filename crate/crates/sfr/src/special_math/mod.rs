//! Complex arithmetic and the cylinder functions (Bessel J/Y, Hankel H1)
//! that the 2D free-field Green's function is built from.

mod bessel;

pub use bessel::{bessel, bessel_j0, bessel_j1, bessel_y0, bessel_y1, hankel1, BesselKind, BesselOrder};
pub use num_complex::Complex64;

use std::fmt;

/// Argument outside the domain of a special function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainError {
    message: String,
}

impl DomainError {
    pub(crate) fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain error: {}", self.message)
    }
}

impl std::error::Error for DomainError {}
