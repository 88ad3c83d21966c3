//! Batched engine: config parsing, per-env parameter construction
//! (including domain randomization), and the threaded lockstep step loop.
//!
//! Work is partitioned across worker threads by contiguous env ranges; envs
//! are independent, so results are bit-identical for any thread count.

use serde::Deserialize;

use crate::model::{cholesky6, KernelParams};
use crate::rng;
use crate::task::{self, TaskCfg};

// ---------------------------------------------------------------------------
// Config documents (same JSON schema as the Python CLI).
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct ConfigDoc {
    seed: u64,
    vehicle: Option<VehicleDoc>,
    vehicle_params: Option<String>,
    #[serde(default)]
    task: TaskDoc,
    #[serde(default)]
    batch: BatchDoc,
}

#[derive(Deserialize, Clone)]
struct VehicleDoc {
    mass: f64,
    inertia: Vec<Vec<f64>>,
    r_g: [f64; 3],
    r_b: [f64; 3],
    weight: f64,
    buoyancy: f64,
    added_mass: Vec<Vec<f64>>,
    damping_linear: Vec<Vec<f64>>,
    damping_quadratic: [f64; 6],
    thrusters: Vec<ThrusterDoc>,
}

#[derive(Deserialize, Clone)]
struct ThrusterDoc {
    position: [f64; 3],
    direction: [f64; 3],
    max_thrust: f64,
    curve: Option<String>,
}

#[derive(Deserialize)]
struct TaskDoc {
    kind: Option<String>,
    target: Option<[f64; 6]>,
    center: Option<[f64; 2]>,
    radius: Option<f64>,
    angular_rate: Option<f64>,
    climb_rate: Option<f64>,
    scale: Option<f64>,
    depth: Option<f64>,
    lookahead: Option<usize>,
    episode_len: Option<i64>,
    control_dt: Option<f64>,
    n_substeps: Option<u32>,
}

impl Default for TaskDoc {
    fn default() -> Self {
        TaskDoc {
            kind: None, target: None, center: None, radius: None,
            angular_rate: None, climb_rate: None, scale: None, depth: None,
            lookahead: None, episode_len: None, control_dt: None,
            n_substeps: None,
        }
    }
}

#[derive(Deserialize, Default)]
struct BatchDoc {
    num_envs: Option<usize>,
    threads: Option<usize>,
    randomization: Option<RangesDoc>,
}

#[derive(Deserialize, Clone)]
pub struct RangesDoc {
    mass: Option<[f64; 2]>,
    added_mass: Option<[f64; 2]>,
    damping_linear: Option<[f64; 2]>,
    damping_quadratic: Option<[f64; 2]>,
    max_thrust: Option<[f64; 2]>,
    rb_offset: Option<f64>,
    buoyancy_ratio: Option<[f64; 2]>,
    per_episode: Option<bool>,
}

#[derive(Clone, Copy)]
pub struct Ranges {
    mass: [f64; 2],
    added_mass: [f64; 2],
    damping_linear: [f64; 2],
    damping_quadratic: [f64; 2],
    max_thrust: [f64; 2],
    rb_offset: f64,
    buoyancy_ratio: [f64; 2],
    pub per_episode: bool,
}

impl Ranges {
    fn from_doc(d: &RangesDoc) -> Result<Ranges, String> {
        let r = Ranges {
            mass: d.mass.unwrap_or([1.0, 1.0]),
            added_mass: d.added_mass.unwrap_or([1.0, 1.0]),
            damping_linear: d.damping_linear.unwrap_or([1.0, 1.0]),
            damping_quadratic: d.damping_quadratic.unwrap_or([1.0, 1.0]),
            max_thrust: d.max_thrust.unwrap_or([1.0, 1.0]),
            rb_offset: d.rb_offset.unwrap_or(0.0),
            buoyancy_ratio: d.buoyancy_ratio.unwrap_or([1.0, 1.0]),
            per_episode: d.per_episode.unwrap_or(false),
        };
        for (name, [lo, hi]) in [
            ("mass", r.mass), ("added_mass", r.added_mass),
            ("damping_linear", r.damping_linear),
            ("damping_quadratic", r.damping_quadratic),
            ("max_thrust", r.max_thrust), ("buoyancy_ratio", r.buoyancy_ratio),
        ] {
            if !(0.0 < lo && lo <= hi) {
                return Err(format!("range {name} must satisfy 0 < lo <= hi"));
            }
        }
        if r.rb_offset < 0.0 {
            return Err("rb_offset must be >= 0".into());
        }
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// Base vehicle data kept for per-episode resampling.
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct BaseVehicle {
    mass: f64,
    inertia: [f64; 9],
    rg: [f64; 3],
    rb: [f64; 3],
    weight: f64,
    buoyancy: f64,
    added: [f64; 36],
    dlin: [f64; 36],
    dquad: [f64; 6],
    positions: Vec<[f64; 3]>,
    directions: Vec<[f64; 3]>,
    kmax: Vec<f64>,
    curve: Vec<u8>,
}

fn flatten<const N: usize>(rows: &[Vec<f64>], side: usize, name: &str) -> Result<[f64; N], String> {
    let mut out = [0.0f64; N];
    if rows.len() != side {
        return Err(format!("{name} must be {side}x{side}"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != side {
            return Err(format!("{name} must be {side}x{side}"));
        }
        for (j, v) in row.iter().enumerate() {
            out[i * side + j] = *v;
        }
    }
    Ok(out)
}

impl BaseVehicle {
    fn from_doc(d: &VehicleDoc) -> Result<BaseVehicle, String> {
        if !(d.mass > 0.0) {
            return Err("mass must be positive".into());
        }
        if d.weight < 0.0 || d.buoyancy < 0.0 {
            return Err("weight and buoyancy must be >= 0".into());
        }
        if d.thrusters.is_empty() {
            return Err("layout needs at least one thruster".into());
        }
        let mut positions = Vec::new();
        let mut directions = Vec::new();
        let mut kmax = Vec::new();
        let mut curve = Vec::new();
        for t in &d.thrusters {
            let n = (t.direction[0] * t.direction[0]
                + t.direction[1] * t.direction[1]
                + t.direction[2] * t.direction[2]).sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err("thruster direction must be unit norm".into());
            }
            if !(t.max_thrust > 0.0) {
                return Err("max_thrust must be positive".into());
            }
            let code = match t.curve.as_deref() {
                None | Some("quadratic_signed") => 1u8,
                Some("linear") => 0u8,
                Some(other) => return Err(format!("unknown thrust curve {other:?}")),
            };
            positions.push(t.position);
            directions.push(t.direction);
            kmax.push(t.max_thrust);
            curve.push(code);
        }
        for q in d.damping_quadratic.iter() {
            if *q < 0.0 {
                return Err("damping_quadratic components must be >= 0".into());
            }
        }
        Ok(BaseVehicle {
            mass: d.mass,
            inertia: flatten::<9>(&d.inertia, 3, "inertia")?,
            rg: d.r_g,
            rb: d.r_b,
            weight: d.weight,
            buoyancy: d.buoyancy,
            added: flatten::<36>(&d.added_mass, 6, "added_mass")?,
            dlin: flatten::<36>(&d.damping_linear, 6, "damping_linear")?,
            dquad: d.damping_quadratic,
            positions,
            directions,
            kmax,
            curve,
        })
    }
}

/// Assemble the flattened kernel block from raw coefficients; mirrors
/// `VehicleParams.__init__` in Python (matrix layout and Cholesky included).
fn build_kernel(mass: f64, inertia: &[f64; 9], rg: [f64; 3], rb: [f64; 3],
                weight: f64, buoyancy: f64, added: &[f64; 36],
                dlin: &[f64; 36], dquad: &[f64; 6],
                positions: &[[f64; 3]], directions: &[[f64; 3]],
                kmax: &[f64], curve: &[u8]) -> Result<KernelParams, String> {
    let s = [
        0.0, -rg[2], rg[1],
        rg[2], 0.0, -rg[0],
        -rg[1], rg[0], 0.0,
    ];
    let nm = -mass;
    let mut m_rb = [0.0f64; 36];
    for i in 0..3 {
        m_rb[i * 6 + i] = mass;
        for j in 0..3 {
            m_rb[i * 6 + (j + 3)] = nm * s[i * 3 + j];
            m_rb[(i + 3) * 6 + j] = mass * s[i * 3 + j];
            m_rb[(i + 3) * 6 + (j + 3)] = inertia[i * 3 + j];
        }
    }
    let mut m_total = [0.0f64; 36];
    for k in 0..36 {
        m_total[k] = m_rb[k] + added[k];
    }
    let chol = cholesky6(&m_total)
        .map_err(|e| format!("M_RB + M_A is not positive definite: {e}"))?;
    let n = positions.len();
    let mut alloc = vec![0.0f64; 6 * n];
    for i in 0..n {
        let [px, py, pz] = positions[i];
        let [dx, dy, dz] = directions[i];
        alloc[i] = dx;
        alloc[n + i] = dy;
        alloc[2 * n + i] = dz;
        alloc[3 * n + i] = py * dz - pz * dy;
        alloc[4 * n + i] = pz * dx - px * dz;
        alloc[5 * n + i] = px * dy - py * dx;
    }
    Ok(KernelParams {
        m_total,
        chol,
        dlin: *dlin,
        dquad: *dquad,
        weight,
        buoyancy,
        rg,
        rb,
        alloc,
        kmax: kmax.to_vec(),
        curve: curve.to_vec(),
        n_thrusters: n,
    })
}

/// Nine draws in fixed order; mirrors `uuvsim/randomize.py::sample_params`.
fn sample_params(base: &BaseVehicle, r: &Ranges, root: u64, env: u64,
                 counter: &mut u64) -> Result<KernelParams, String> {
    let p = rng::PURPOSE_PARAMS;
    let f_mass = rng::next_log_uniform(root, env, p, counter, r.mass[0], r.mass[1]);
    let f_added = rng::next_log_uniform(root, env, p, counter, r.added_mass[0], r.added_mass[1]);
    let f_dlin = rng::next_log_uniform(root, env, p, counter, r.damping_linear[0], r.damping_linear[1]);
    let f_dquad = rng::next_log_uniform(root, env, p, counter, r.damping_quadratic[0], r.damping_quadratic[1]);
    let f_thrust = rng::next_log_uniform(root, env, p, counter, r.max_thrust[0], r.max_thrust[1]);
    let dbx = rng::next_uniform(root, env, p, counter, -r.rb_offset, r.rb_offset);
    let dby = rng::next_uniform(root, env, p, counter, -r.rb_offset, r.rb_offset);
    let dbz = rng::next_uniform(root, env, p, counter, -r.rb_offset, r.rb_offset);
    let ratio = rng::next_uniform(root, env, p, counter, r.buoyancy_ratio[0], r.buoyancy_ratio[1]);

    let weight = base.weight * f_mass;
    let mut inertia = [0.0f64; 9];
    for k in 0..9 {
        inertia[k] = base.inertia[k] * f_mass;
    }
    let mut added = [0.0f64; 36];
    let mut dlin = [0.0f64; 36];
    for k in 0..36 {
        added[k] = base.added[k] * f_added;
        dlin[k] = base.dlin[k] * f_dlin;
    }
    let mut dquad = [0.0f64; 6];
    for k in 0..6 {
        dquad[k] = base.dquad[k] * f_dquad;
    }
    let kmax: Vec<f64> = base.kmax.iter().map(|k| k * f_thrust).collect();
    let rb = [base.rb[0] + dbx, base.rb[1] + dby, base.rb[2] + dbz];
    build_kernel(base.mass * f_mass, &inertia, base.rg, rb, weight,
                 ratio * weight, &added, &dlin, &dquad,
                 &base.positions, &base.directions, &kmax, &base.curve)
        .map_err(|e| format!("randomized parameters invalid: {e}"))
}

// ---------------------------------------------------------------------------
// Engine.
// ---------------------------------------------------------------------------

pub struct Engine {
    pub m: usize,
    pub task: TaskCfg,
    pub root_seed: u64,
    base: BaseVehicle,
    ranges: Option<Ranges>,
    params: Vec<KernelParams>,
    states: Vec<f64>,
    steps: Vec<i64>,
    reset_ctr: Vec<u64>,
    param_ctr: Vec<u64>,
    pub threads: usize,
    pub obs_dim: usize,
    pub n_act: usize,
}

fn auto_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl Engine {
    pub fn from_config(text: &str) -> Result<Engine, String> {
        let doc: ConfigDoc = serde_json::from_str(text)
            .map_err(|e| format!("config is not valid JSON: {e}"))?;
        let vdoc = if let Some(v) = doc.vehicle {
            v
        } else if let Some(path) = doc.vehicle_params {
            let body = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read vehicle parameter file {path}: {e}"))?;
            serde_json::from_str(&body)
                .map_err(|e| format!("vehicle parameter file {path}: {e}"))?
        } else {
            return Err("config must include 'vehicle' or 'vehicle_params'".into());
        };
        let base = BaseVehicle::from_doc(&vdoc)?;

        let t = doc.task;
        let kind = match t.kind.as_deref().unwrap_or("station_keeping") {
            "station_keeping" => task::KIND_STATION,
            "circle" => task::KIND_CIRCLE,
            "helix" => task::KIND_HELIX,
            "lemniscate" => task::KIND_LEMNISCATE,
            other => return Err(format!("unknown task kind {other:?}")),
        };
        let center = t.center.unwrap_or([0.0, 0.0]);
        let control_dt = t.control_dt.unwrap_or(0.05);
        let n_substeps = t.n_substeps.unwrap_or(10);
        let lookahead = t.lookahead.unwrap_or(5);
        let episode_len = t.episode_len.unwrap_or(600);
        if !(control_dt > 0.0) || n_substeps < 1 || lookahead < 1 || episode_len < 1 {
            return Err("invalid task timing settings".into());
        }
        let radius = t.radius.unwrap_or(1.0);
        let scale = t.scale.unwrap_or(2.0);
        if (kind == task::KIND_CIRCLE || kind == task::KIND_HELIX) && !(radius > 0.0) {
            return Err("radius must be positive".into());
        }
        if kind == task::KIND_LEMNISCATE && !(scale > 0.0) {
            return Err("scale must be positive".into());
        }
        let task_cfg = TaskCfg {
            kind,
            target: t.target.unwrap_or([0.0, 0.0, 2.0, 0.0, 0.0, 0.0]),
            cx: center[0],
            cy: center[1],
            radius,
            omega: t.angular_rate.unwrap_or(0.1),
            climb: t.climb_rate.unwrap_or(0.05),
            scale,
            depth: t.depth.unwrap_or(2.0),
            lookahead,
            episode_len,
            control_dt,
            n_substeps,
            sub_dt: control_dt / n_substeps as f64,
        };

        let m = doc.batch.num_envs.unwrap_or(64);
        if m < 1 {
            return Err("batch.num_envs must be >= 1".into());
        }
        let threads = match doc.batch.threads.unwrap_or(0) {
            0 => auto_threads(),
            n => n,
        };
        let ranges = match &doc.batch.randomization {
            Some(rd) => Some(Ranges::from_doc(rd)?),
            None => None,
        };

        let obs_dim = task_cfg.obs_dim();
        let n_act = base.kmax.len();
        let mut engine = Engine {
            m,
            task: task_cfg,
            root_seed: doc.seed,
            base,
            ranges,
            params: Vec::with_capacity(m),
            states: vec![0.0; m * 12],
            steps: vec![0; m],
            reset_ctr: vec![0; m],
            param_ctr: vec![0; m],
            threads,
            obs_dim,
            n_act,
        };

        let base_kernel = build_kernel(
            engine.base.mass, &engine.base.inertia, engine.base.rg,
            engine.base.rb, engine.base.weight, engine.base.buoyancy,
            &engine.base.added, &engine.base.dlin, &engine.base.dquad,
            &engine.base.positions, &engine.base.directions,
            &engine.base.kmax, &engine.base.curve)?;
        for e in 0..m {
            let kp = match engine.ranges {
                Some(ref r) => {
                    let mut ctr = 0u64;
                    let kp = sample_params(&engine.base, r, engine.root_seed,
                                           e as u64, &mut ctr)
                        .map_err(|err| format!("env {e}: {err}"))?;
                    engine.param_ctr[e] = ctr;
                    kp
                }
                None => base_kernel.clone(),
            };
            engine.params.push(kp);
        }
        engine.reset(engine.root_seed);
        Ok(engine)
    }

    /// Re-seed episode streams and redraw every initial state.
    pub fn reset(&mut self, seed: u64) {
        self.root_seed = seed;
        for e in 0..self.m {
            self.reset_ctr[e] = 0;
            let s = task::reset(&self.task, self.root_seed, e as u64,
                                &mut self.reset_ctr[e]);
            self.states[e * 12..(e + 1) * 12].copy_from_slice(&s);
            self.steps[e] = 0;
        }
    }

    pub fn write_obs(&self, out: &mut [f64]) {
        for e in 0..self.m {
            let mut s = [0.0f64; 12];
            s.copy_from_slice(&self.states[e * 12..(e + 1) * 12]);
            task::observe(&self.task, &s, self.steps[e],
                          &mut out[e * self.obs_dim..(e + 1) * self.obs_dim]);
        }
    }

    pub fn step(&mut self, actions: &[f64], obs: &mut [f64], rew: &mut [f64],
                done: &mut [u8]) {
        let m = self.m;
        let nt = self.threads.clamp(1, m);
        let chunk = (m + nt - 1) / nt;
        let task_cfg = &self.task;
        let base = &self.base;
        let ranges = self.ranges;
        let root = self.root_seed;
        let n_act = self.n_act;
        let obs_dim = self.obs_dim;

        struct Chunk<'a> {
            start: usize,
            states: &'a mut [f64],
            steps: &'a mut [i64],
            reset_ctr: &'a mut [u64],
            param_ctr: &'a mut [u64],
            params: &'a mut [KernelParams],
            obs: &'a mut [f64],
            rew: &'a mut [f64],
            done: &'a mut [u8],
            actions: &'a [f64],
        }

        let mut chunks: Vec<Chunk> = Vec::with_capacity(nt);
        {
            let mut st = self.states.as_mut_slice();
            let mut sp = self.steps.as_mut_slice();
            let mut rc = self.reset_ctr.as_mut_slice();
            let mut pc = self.param_ctr.as_mut_slice();
            let mut pr = self.params.as_mut_slice();
            let mut ob = obs;
            let mut rw = rew;
            let mut dn = done;
            let mut ac = actions;
            let mut start = 0usize;
            while start < m {
                let len = chunk.min(m - start);
                let (st_a, st_b) = st.split_at_mut(len * 12);
                let (sp_a, sp_b) = sp.split_at_mut(len);
                let (rc_a, rc_b) = rc.split_at_mut(len);
                let (pc_a, pc_b) = pc.split_at_mut(len);
                let (pr_a, pr_b) = pr.split_at_mut(len);
                let (ob_a, ob_b) = ob.split_at_mut(len * obs_dim);
                let (rw_a, rw_b) = rw.split_at_mut(len);
                let (dn_a, dn_b) = dn.split_at_mut(len);
                let (ac_a, ac_b) = ac.split_at(len * n_act);
                st = st_b; sp = sp_b; rc = rc_b; pc = pc_b; pr = pr_b;
                ob = ob_b; rw = rw_b; dn = dn_b; ac = ac_b;
                chunks.push(Chunk {
                    start,
                    states: st_a, steps: sp_a, reset_ctr: rc_a, param_ctr: pc_a,
                    params: pr_a, obs: ob_a, rew: rw_a, done: dn_a, actions: ac_a,
                });
                start += len;
            }
        }

        let run = |c: &mut Chunk| {
            let len = c.steps.len();
            for k in 0..len {
                let e = (c.start + k) as u64;
                let mut s = [0.0f64; 12];
                s.copy_from_slice(&c.states[k * 12..(k + 1) * 12]);
                let act = &c.actions[k * n_act..(k + 1) * n_act];
                let out = task::env_step(&c.params[k], task_cfg, &mut s,
                                         c.steps[k], act);
                c.rew[k] = out.reward;
                c.done[k] = out.done as u8;
                if out.done {
                    if let Some(ref r) = ranges {
                        if r.per_episode {
                            c.params[k] = sample_params(base, r, root, e,
                                                        &mut c.param_ctr[k])
                                .unwrap_or_else(|err| panic!("env {e}: {err}"));
                        }
                    }
                    s = task::reset(task_cfg, root, e, &mut c.reset_ctr[k]);
                    c.steps[k] = 0;
                } else {
                    c.steps[k] = out.new_step;
                }
                task::observe(task_cfg, &s, c.steps[k],
                              &mut c.obs[k * obs_dim..(k + 1) * obs_dim]);
                c.states[k * 12..(k + 1) * 12].copy_from_slice(&s);
            }
        };

        if chunks.len() == 1 {
            run(&mut chunks[0]);
        } else {
            std::thread::scope(|scope| {
                for c in chunks.iter_mut() {
                    scope.spawn(|| run(c));
                }
            });
        }
    }

    pub fn copy_states(&self, out: &mut [f64]) {
        out.copy_from_slice(&self.states);
    }

    pub fn copy_steps(&self, out: &mut [i64]) {
        out.copy_from_slice(&self.steps);
    }
}
