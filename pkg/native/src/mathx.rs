//! Transcendentals routed through the system libm.
//!
//! Rust's std implements sin/cos natively and can differ from the platform
//! libm by 1 ulp; CPython's math module calls libm directly. Cross-backend
//! bit-reproducibility requires both sides to use the same functions, so
//! the kernels call these thin wrappers instead of the f64 methods.

extern "C" {
    fn sin(x: f64) -> f64;
    fn cos(x: f64) -> f64;
    fn atan2(y: f64, x: f64) -> f64;
    fn exp(x: f64) -> f64;
    fn log(x: f64) -> f64;
    fn fmod(x: f64, y: f64) -> f64;
}

#[inline]
pub fn m_sin(x: f64) -> f64 {
    unsafe { sin(x) }
}

#[inline]
pub fn m_cos(x: f64) -> f64 {
    unsafe { cos(x) }
}

#[inline]
pub fn m_atan2(y: f64, x: f64) -> f64 {
    unsafe { atan2(y, x) }
}

#[inline]
pub fn m_exp(x: f64) -> f64 {
    unsafe { exp(x) }
}

#[inline]
pub fn m_log(x: f64) -> f64 {
    unsafe { log(x) }
}

#[inline]
pub fn m_fmod(x: f64, y: f64) -> f64 {
    unsafe { fmod(x, y) }
}
