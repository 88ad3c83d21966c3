//! Vehicle parameters and the 6-DOF step kernel.
//!
//! Every function mirrors the order-pinned scalar helpers in
//! `uuvsim/dynamics.py` and `uuvsim/vehicle.py` expression for expression;
//! do not reorder arithmetic here without changing both sides.

use std::f64::consts::PI;

use crate::mathx::{m_cos, m_fmod, m_sin};

pub const TWO_PI: f64 = 2.0 * PI;
pub const PITCH_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - 1e-3;

#[derive(Clone)]
pub struct KernelParams {
    pub m_total: [f64; 36],
    pub chol: [f64; 36],
    pub dlin: [f64; 36],
    pub dquad: [f64; 6],
    pub weight: f64,
    pub buoyancy: f64,
    pub rg: [f64; 3],
    pub rb: [f64; 3],
    pub alloc: Vec<f64>, // flat row-major 6 x n
    pub kmax: Vec<f64>,
    pub curve: Vec<u8>, // 0 linear, 1 quadratic_signed
    pub n_thrusters: usize,
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut r = m_fmod(a + PI, TWO_PI);
    if r <= 0.0 {
        r += TWO_PI;
    }
    r - PI
}

pub fn cholesky6(m: &[f64; 36]) -> Result<[f64; 36], String> {
    let mut l = [0.0f64; 36];
    for i in 0..6 {
        for j in 0..=i {
            let mut s = m[i * 6 + j];
            for k in 0..j {
                s -= l[i * 6 + k] * l[j * 6 + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err("matrix is not positive definite".into());
                }
                l[i * 6 + i] = s.sqrt();
            } else {
                l[i * 6 + j] = s / l[j * 6 + j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve6(l: &[f64; 36], b: &[f64; 6]) -> [f64; 6] {
    let mut y = [0.0f64; 6];
    for i in 0..6 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * 6 + k] * y[k];
        }
        y[i] = s / l[i * 6 + i];
    }
    let mut x = [0.0f64; 6];
    for i in (0..6).rev() {
        let mut s = y[i];
        for k in (i + 1)..6 {
            s -= l[k * 6 + i] * x[k];
        }
        x[i] = s / l[i * 6 + i];
    }
    x
}

fn cross(ax: f64, ay: f64, az: f64, bx: f64, by: f64, bz: f64) -> (f64, f64, f64) {
    (ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx)
}

fn coriolis6(m: &[f64; 36], v: &[f64; 6]) -> [f64; 6] {
    let mut a1 = [0.0f64; 3];
    let mut a2 = [0.0f64; 3];
    for i in 0..3 {
        let mut s = 0.0;
        let base = i * 6;
        for j in 0..6 {
            s += m[base + j] * v[j];
        }
        a1[i] = s;
    }
    for i in 3..6 {
        let mut s = 0.0;
        let base = i * 6;
        for j in 0..6 {
            s += m[base + j] * v[j];
        }
        a2[i - 3] = s;
    }
    let (c0, c1, c2) = cross(v[3], v[4], v[5], a1[0], a1[1], a1[2]);
    let (t0, t1, t2) = cross(v[0], v[1], v[2], a1[0], a1[1], a1[2]);
    let (s0, s1, s2) = cross(v[3], v[4], v[5], a2[0], a2[1], a2[2]);
    [c0, c1, c2, t0 + s0, t1 + s1, t2 + s2]
}

fn damping6(dlin: &[f64; 36], dquad: &[f64; 6], v: &[f64; 6]) -> [f64; 6] {
    let mut out = [0.0f64; 6];
    for i in 0..6 {
        let mut s = 0.0;
        let base = i * 6;
        for j in 0..6 {
            s += dlin[base + j] * v[j];
        }
        out[i] = s + dquad[i] * v[i].abs() * v[i];
    }
    out
}

fn restoring6(w: f64, b: f64, rg: &[f64; 3], rb: &[f64; 3],
              sphi: f64, cphi: f64, sth: f64, cth: f64) -> [f64; 6] {
    let cth_sphi = cth * sphi;
    let cth_cphi = cth * cphi;
    let fgx = -w * sth;
    let fgy = w * cth_sphi;
    let fgz = w * cth_cphi;
    let fbx = b * sth;
    let fby = -b * cth_sphi;
    let fbz = -b * cth_cphi;
    let (mgx, mgy, mgz) = cross(rg[0], rg[1], rg[2], fgx, fgy, fgz);
    let (mbx, mby, mbz) = cross(rb[0], rb[1], rb[2], fbx, fby, fbz);
    [fgx + fbx, fgy + fby, fgz + fbz, mgx + mbx, mgy + mby, mgz + mbz]
}

/// One semi-implicit Euler sub-step. Returns the index of the first
/// non-finite output component, or -1 when all 12 are finite.
pub fn substep(kp: &KernelParams, s: &mut [f64; 12], tau: &[f64; 6], dt: f64) -> i32 {
    let v = [s[6], s[7], s[8], s[9], s[10], s[11]];
    let sphi = m_sin(s[3]);
    let cphi = m_cos(s[3]);
    let sth = m_sin(s[4]);
    let cth = m_cos(s[4]);
    let spsi = m_sin(s[5]);
    let cpsi = m_cos(s[5]);

    let c = coriolis6(&kp.m_total, &v);
    let d = damping6(&kp.dlin, &kp.dquad, &v);
    let g = restoring6(kp.weight, kp.buoyancy, &kp.rg, &kp.rb, sphi, cphi, sth, cth);
    let mut rhs = [0.0f64; 6];
    for i in 0..6 {
        rhs[i] = tau[i] - c[i] - d[i] + g[i];
    }
    let acc = cholesky_solve6(&kp.chol, &rhs);

    let u2 = v[0] + dt * acc[0];
    let v2 = v[1] + dt * acc[1];
    let w2 = v[2] + dt * acc[2];
    let p2 = v[3] + dt * acc[3];
    let q2 = v[4] + dt * acc[4];
    let r2 = v[5] + dt * acc[5];

    let xdot = cpsi * cth * u2 + (-spsi * cphi + cpsi * sth * sphi) * v2
        + (spsi * sphi + cpsi * cphi * sth) * w2;
    let ydot = spsi * cth * u2 + (cpsi * cphi + sphi * sth * spsi) * v2
        + (-cpsi * sphi + sth * spsi * cphi) * w2;
    let zdot = -sth * u2 + cth * sphi * v2 + cth * cphi * w2;
    let tth = sth / cth;
    let phidot = p2 + sphi * tth * q2 + cphi * tth * r2;
    let thetadot = cphi * q2 - sphi * r2;
    let psidot = sphi / cth * q2 + cphi / cth * r2;

    let x2 = s[0] + dt * xdot;
    let y2 = s[1] + dt * ydot;
    let z2 = s[2] + dt * zdot;
    let phi2 = wrap_angle(s[3] + dt * phidot);
    let mut theta2 = wrap_angle(s[4] + dt * thetadot);
    let psi2 = wrap_angle(s[5] + dt * psidot);

    if theta2 > PITCH_LIMIT {
        theta2 = PITCH_LIMIT;
    } else if theta2 < -PITCH_LIMIT {
        theta2 = -PITCH_LIMIT;
    }

    let out = [x2, y2, z2, phi2, theta2, psi2, u2, v2, w2, p2, q2, r2];
    for (i, c) in out.iter().enumerate() {
        if !c.is_finite() {
            return i as i32;
        }
    }
    *s = out;
    -1
}

/// Clamp throttles, apply thrust curves, mix through the allocation matrix.
pub fn wrench_from_action(kp: &KernelParams, action: &[f64], tau: &mut [f64; 6]) {
    let n = kp.n_thrusters;
    let mut forces = vec![0.0f64; n];
    for i in 0..n {
        let mut t = action[i];
        if t > 1.0 {
            t = 1.0;
        } else if t < -1.0 {
            t = -1.0;
        }
        forces[i] = if kp.curve[i] == 0 {
            kp.kmax[i] * t
        } else {
            kp.kmax[i] * (t * t.abs())
        };
    }
    for r in 0..6 {
        let mut s = 0.0;
        let base = r * n;
        for i in 0..n {
            s += kp.alloc[base + i] * forces[i];
        }
        tau[r] = s;
    }
}
