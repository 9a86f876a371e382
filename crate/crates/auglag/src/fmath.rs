//! Float intrinsics routed through `num-traits` so the crate builds without
//! `std` (libm backs them there; the std implementations win otherwise).

use num_traits::Float;

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    Float::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    Float::ln(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, p: f64) -> f64 {
    Float::powf(x, p)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    Float::abs(x)
}

#[inline]
pub(crate) fn fmax(a: f64, b: f64) -> f64 {
    Float::max(a, b)
}

#[inline]
pub(crate) fn fmin(a: f64, b: f64) -> f64 {
    Float::min(a, b)
}
