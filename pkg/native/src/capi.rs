//! Versioned C ABI over the engine.
//!
//! Error contract: every function returns an i32 code (0 ok, 1 invalid
//! config, 2 invalid handle, 3 bad buffer size, 4 runtime error); the
//! message for the most recent failure on the calling thread is available
//! through `uuvsim_last_error`. Panics never unwind across the boundary.
//! Buffers are caller-allocated; lengths are element counts.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::CStr;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::engine::Engine;

pub const ABI_VERSION: u32 = 1;

const OK: i32 = 0;
const ERR_CONFIG: i32 = 1;
const ERR_HANDLE: i32 = 2;
const ERR_SIZE: i32 = 3;
const ERR_RUNTIME: i32 = 4;

type Registry = Mutex<HashMap<u64, Arc<Mutex<Engine>>>>;

static REGISTRY: OnceLock<Registry> = OnceLock::new();
static NEXT_HANDLE: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn registry() -> &'static Registry {
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(code: i32, msg: impl Into<String>) -> i32 {
    set_error(msg);
    code
}

fn lookup(handle: u64) -> Result<Arc<Mutex<Engine>>, i32> {
    registry()
        .lock()
        .unwrap()
        .get(&handle)
        .cloned()
        .ok_or_else(|| fail(ERR_HANDLE, format!("handle {handle} is not valid")))
}

fn guarded<F: FnOnce() -> i32>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic in native core".to_string());
            fail(ERR_RUNTIME, msg)
        }
    }
}

#[no_mangle]
pub extern "C" fn uuvsim_abi_version() -> u32 {
    ABI_VERSION
}

/// Create an engine from a UTF-8 JSON config; writes the handle to `out`.
#[no_mangle]
pub extern "C" fn uuvsim_create(config: *const c_char, out: *mut u64) -> i32 {
    guarded(|| {
        if config.is_null() || out.is_null() {
            return fail(ERR_CONFIG, "null pointer argument");
        }
        let text = match unsafe { CStr::from_ptr(config) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(ERR_CONFIG, "config is not valid UTF-8"),
        };
        match Engine::from_config(text) {
            Ok(engine) => {
                let h = NEXT_HANDLE.fetch_add(1, Ordering::Relaxed);
                registry().lock().unwrap().insert(h, Arc::new(Mutex::new(engine)));
                unsafe { *out = h };
                OK
            }
            Err(e) => fail(ERR_CONFIG, e),
        }
    })
}

/// Dimensions: out[0..4] = num_envs, obs_dim, action_dim, episode_len.
#[no_mangle]
pub extern "C" fn uuvsim_spec(handle: u64, out: *mut u64) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(ERR_SIZE, "null pointer argument");
        }
        let eng = match lookup(handle) {
            Ok(e) => e,
            Err(code) => return code,
        };
        let eng = eng.lock().unwrap();
        unsafe {
            *out.add(0) = eng.m as u64;
            *out.add(1) = eng.obs_dim as u64;
            *out.add(2) = eng.n_act as u64;
            *out.add(3) = eng.task.episode_len as u64;
        }
        OK
    })
}

#[no_mangle]
pub extern "C" fn uuvsim_reset(handle: u64, seed: u64, obs: *mut f64,
                               obs_len: u64) -> i32 {
    guarded(|| {
        let eng = match lookup(handle) {
            Ok(e) => e,
            Err(code) => return code,
        };
        let mut eng = eng.lock().unwrap();
        let want = (eng.m * eng.obs_dim) as u64;
        if obs.is_null() || obs_len != want {
            return fail(ERR_SIZE, format!("obs buffer must hold {want} f64"));
        }
        eng.reset(seed);
        let out = unsafe { std::slice::from_raw_parts_mut(obs, obs_len as usize) };
        eng.write_obs(out);
        OK
    })
}

#[no_mangle]
pub extern "C" fn uuvsim_step(handle: u64, actions: *const f64, actions_len: u64,
                              obs: *mut f64, obs_len: u64, rew: *mut f64,
                              rew_len: u64, done: *mut u8, done_len: u64) -> i32 {
    guarded(|| {
        let eng = match lookup(handle) {
            Ok(e) => e,
            Err(code) => return code,
        };
        let mut eng = eng.lock().unwrap();
        let m = eng.m as u64;
        let want_act = m * eng.n_act as u64;
        let want_obs = m * eng.obs_dim as u64;
        if actions.is_null() || actions_len != want_act {
            return fail(ERR_SIZE, format!("actions buffer must hold {want_act} f64"));
        }
        if obs.is_null() || obs_len != want_obs {
            return fail(ERR_SIZE, format!("obs buffer must hold {want_obs} f64"));
        }
        if rew.is_null() || rew_len != m {
            return fail(ERR_SIZE, format!("rewards buffer must hold {m} f64"));
        }
        if done.is_null() || done_len != m {
            return fail(ERR_SIZE, format!("dones buffer must hold {m} u8"));
        }
        let act = unsafe { std::slice::from_raw_parts(actions, actions_len as usize) };
        let obs_s = unsafe { std::slice::from_raw_parts_mut(obs, obs_len as usize) };
        let rew_s = unsafe { std::slice::from_raw_parts_mut(rew, rew_len as usize) };
        let done_s = unsafe { std::slice::from_raw_parts_mut(done, done_len as usize) };
        eng.step(act, obs_s, rew_s, done_s);
        OK
    })
}

/// Copy the raw per-env 12-component states (row-major, env-major).
#[no_mangle]
pub extern "C" fn uuvsim_states(handle: u64, out: *mut f64, len: u64) -> i32 {
    guarded(|| {
        let eng = match lookup(handle) {
            Ok(e) => e,
            Err(code) => return code,
        };
        let eng = eng.lock().unwrap();
        let want = (eng.m * 12) as u64;
        if out.is_null() || len != want {
            return fail(ERR_SIZE, format!("states buffer must hold {want} f64"));
        }
        let s = unsafe { std::slice::from_raw_parts_mut(out, len as usize) };
        eng.copy_states(s);
        OK
    })
}

#[no_mangle]
pub extern "C" fn uuvsim_step_counts(handle: u64, out: *mut i64, len: u64) -> i32 {
    guarded(|| {
        let eng = match lookup(handle) {
            Ok(e) => e,
            Err(code) => return code,
        };
        let eng = eng.lock().unwrap();
        if out.is_null() || len != eng.m as u64 {
            return fail(ERR_SIZE, format!("step buffer must hold {} i64", eng.m));
        }
        let s = unsafe { std::slice::from_raw_parts_mut(out, len as usize) };
        eng.copy_steps(s);
        OK
    })
}

#[no_mangle]
pub extern "C" fn uuvsim_set_threads(handle: u64, n: u64) -> i32 {
    guarded(|| {
        let eng = match lookup(handle) {
            Ok(e) => e,
            Err(code) => return code,
        };
        let mut eng = eng.lock().unwrap();
        eng.threads = if n == 0 {
            std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1)
        } else {
            n as usize
        };
        OK
    })
}

#[no_mangle]
pub extern "C" fn uuvsim_destroy(handle: u64) -> i32 {
    guarded(|| {
        match registry().lock().unwrap().remove(&handle) {
            Some(_) => OK,
            None => fail(ERR_HANDLE, format!("handle {handle} is not valid")),
        }
    })
}

/// Copy the calling thread's last error message; returns its full length.
#[no_mangle]
pub extern "C" fn uuvsim_last_error(buf: *mut c_char, cap: u64) -> i64 {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap as usize);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            }
        }
        bytes.len() as i64
    })
}
