//! Task logic: trajectory generators, observations, reward, reset, and the
//! per-env step contract. Mirrors `uuvsim/tasks.py` exactly.

use crate::model::{substep, wrap_angle, KernelParams};
use crate::mathx::{m_atan2, m_cos, m_sin};
use crate::rng;

pub const KIND_STATION: u8 = 0;
pub const KIND_CIRCLE: u8 = 1;
pub const KIND_HELIX: u8 = 2;
pub const KIND_LEMNISCATE: u8 = 3;

pub const DIVERGENCE_RADIUS: f64 = 10.0;
const RESET_POS_HALF: f64 = 1.0;
const RESET_ROLL_PITCH_HALF: f64 = 0.1;
const RESET_YAW_HALF: f64 = 0.5;

#[derive(Clone)]
pub struct TaskCfg {
    pub kind: u8,
    pub target: [f64; 6],
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub omega: f64,
    pub climb: f64,
    pub scale: f64,
    pub depth: f64,
    pub lookahead: usize,
    pub episode_len: i64,
    pub control_dt: f64,
    pub n_substeps: u32,
    pub sub_dt: f64,
}

impl TaskCfg {
    pub fn obs_dim(&self) -> usize {
        if self.kind == KIND_STATION {
            12
        } else {
            6 * self.lookahead + 6
        }
    }
}

pub fn traj(t: &TaskCfg, time: f64) -> (f64, f64, f64, f64) {
    let ang = t.omega * time;
    let ca = m_cos(ang);
    let sa = m_sin(ang);
    if t.kind == KIND_CIRCLE {
        let x = t.cx + t.radius * ca;
        let y = t.cy + t.radius * sa;
        (x, y, t.depth, m_atan2(ca, -sa))
    } else if t.kind == KIND_HELIX {
        let x = t.cx + t.radius * ca;
        let y = t.cy + t.radius * sa;
        let z = t.depth + t.climb * time;
        (x, y, z, m_atan2(ca, -sa))
    } else {
        let x = t.cx + t.scale * ca;
        let y = t.cy + t.scale * (sa * ca);
        let c2a = ca * ca - sa * sa;
        (x, y, t.depth, m_atan2(c2a, -sa))
    }
}

fn reference(t: &TaskCfg, step: i64) -> (f64, f64, f64) {
    if t.kind == KIND_STATION {
        (t.target[0], t.target[1], t.target[2])
    } else {
        let (x, y, z, _) = traj(t, step as f64 * t.control_dt);
        (x, y, z)
    }
}

pub fn observe(t: &TaskCfg, s: &[f64; 12], step: i64, out: &mut [f64]) {
    if t.kind == KIND_STATION {
        let tg = &t.target;
        out[0] = tg[0] - s[0];
        out[1] = tg[1] - s[1];
        out[2] = tg[2] - s[2];
        out[3] = wrap_angle(tg[3] - s[3]);
        out[4] = wrap_angle(tg[4] - s[4]);
        out[5] = wrap_angle(tg[5] - s[5]);
        out[6..12].copy_from_slice(&s[6..12]);
    } else {
        for k in 1..=t.lookahead {
            let time = (step + k as i64) as f64 * t.control_dt;
            let (rx, ry, rz, rpsi) = traj(t, time);
            let base = (k - 1) * 6;
            out[base] = rx - s[0];
            out[base + 1] = ry - s[1];
            out[base + 2] = rz - s[2];
            out[base + 3] = wrap_angle(0.0 - s[3]);
            out[base + 4] = wrap_angle(0.0 - s[4]);
            out[base + 5] = wrap_angle(rpsi - s[5]);
        }
        let base = 6 * t.lookahead;
        out[base..base + 6].copy_from_slice(&s[6..12]);
    }
}

pub fn reset(t: &TaskCfg, root_seed: u64, env: u64, counter: &mut u64) -> [f64; 12] {
    let (sx, sy, sz, ref_psi) = if t.kind == KIND_STATION {
        (t.target[0], t.target[1], t.target[2], t.target[5])
    } else {
        traj(t, 0.0)
    };
    let p = rng::PURPOSE_RESET;
    let x = sx + rng::next_uniform(root_seed, env, p, counter, -RESET_POS_HALF, RESET_POS_HALF);
    let y = sy + rng::next_uniform(root_seed, env, p, counter, -RESET_POS_HALF, RESET_POS_HALF);
    let z = sz + rng::next_uniform(root_seed, env, p, counter, -RESET_POS_HALF, RESET_POS_HALF);
    let phi = rng::next_uniform(root_seed, env, p, counter, -RESET_ROLL_PITCH_HALF, RESET_ROLL_PITCH_HALF);
    let theta = rng::next_uniform(root_seed, env, p, counter, -RESET_ROLL_PITCH_HALF, RESET_ROLL_PITCH_HALF);
    let psi = wrap_angle(ref_psi + rng::next_uniform(root_seed, env, p, counter, -RESET_YAW_HALF, RESET_YAW_HALF));
    [x, y, z, phi, theta, psi, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
}

pub struct StepOutcome {
    pub new_step: i64,
    pub reward: f64,
    pub done: bool,
}

/// One control step on a single env; the state is updated in place and kept
/// at the last finite value if integration fails.
pub fn env_step(kp: &KernelParams, t: &TaskCfg, s: &mut [f64; 12], step: i64,
                action: &[f64]) -> StepOutcome {
    let mut tau = [0.0f64; 6];
    crate::model::wrench_from_action(kp, action, &mut tau);
    let mut failed = false;
    for _ in 0..t.n_substeps {
        if substep(kp, s, &tau, t.sub_dt) >= 0 {
            failed = true;
            break;
        }
    }
    let new_step = step + 1;
    let (rx, ry, rz) = reference(t, new_step);
    let dx = rx - s[0];
    let dy = ry - s[1];
    let dz = rz - s[2];
    let pos_err = (dx * dx + dy * dy + dz * dz).sqrt();
    let reward = -pos_err;
    let done = failed || pos_err > DIVERGENCE_RADIUS || new_step >= t.episode_len;
    StepOutcome { new_step, reward, done }
}
