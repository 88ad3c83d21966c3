//! Counter-based random streams.
//!
//! Draws are pure functions of (root_seed, stream, purpose, counter); the
//! construction must stay bit-identical to the Python implementation in
//! `uuvsim/rng.py`.

use crate::mathx::{m_exp, m_log};

pub const PURPOSE_PARAMS: u64 = 0;
pub const PURPOSE_RESET: u64 = 1;

const GOLDEN: u64 = 0x9E3779B97F4A7C15;
const PURPOSE_SALT: u64 = 0x632BE59BD9B4E019;
const INV_2_53: f64 = 1.0 / 9007199254740992.0;

pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

pub fn draw_u64(root_seed: u64, stream: u64, purpose: u64, counter: u64) -> u64 {
    let mut h = mix64(root_seed);
    h = mix64(h ^ stream.wrapping_add(GOLDEN));
    h = mix64(h ^ purpose.wrapping_add(PURPOSE_SALT));
    h = mix64(h ^ counter);
    h
}

pub fn u01(bits: u64) -> f64 {
    (bits >> 11) as f64 * INV_2_53
}

pub fn uniform(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

pub fn log_uniform(lo: f64, hi: f64, u: f64) -> f64 {
    m_exp(uniform(m_log(lo), m_log(hi), u))
}

/// Draw the next uniform from a counted lane, advancing the counter.
pub fn next_uniform(root: u64, stream: u64, purpose: u64, counter: &mut u64,
                    lo: f64, hi: f64) -> f64 {
    let bits = draw_u64(root, stream, purpose, *counter);
    *counter += 1;
    uniform(lo, hi, u01(bits))
}

pub fn next_log_uniform(root: u64, stream: u64, purpose: u64, counter: &mut u64,
                        lo: f64, hi: f64) -> f64 {
    let bits = draw_u64(root, stream, purpose, *counter);
    *counter += 1;
    log_uniform(lo, hi, u01(bits))
}
