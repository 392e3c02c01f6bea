//! Element type shared by real (scalar-ODE) and complex (Fourier) state vectors.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    fn zero() -> Self {
        Self::default()
    }
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    /// `Re(self * conj(other))`.
    fn re_dot(self, other: Self) -> f64;
    fn abs(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re_dot(self, other: Self) -> f64 {
        self * other
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re_dot(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// `Σ_k Re(a_k conj(b_k))`.
pub fn re_inner<E: Scalar>(a: &[E], b: &[E]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re_dot(*y)).sum()
}

pub fn all_finite<E: Scalar>(v: &[E]) -> bool {
    v.iter().all(|x| x.is_finite())
}
