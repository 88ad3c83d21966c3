//! uuvsim-core: batched 6-DOF underwater-vehicle simulation kernels behind a
//! C-compatible ABI. The Python package loads this library as its fast batch
//! backend; external runtimes can drive the same engine through the exported
//! `uuvsim_*` symbols (see capi.rs for the contract).

mod capi;
mod mathx;
mod engine;
mod model;
mod rng;
mod task;

pub use capi::ABI_VERSION;
