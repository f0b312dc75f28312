//! C ABI over `fogsim`.
//!
//! Every fallible call returns a [`FogStatus`]. On failure the message is
//! kept per thread and read with [`fogsim_last_error`]. Handles are opaque
//! and must be released with their matching `_free` function. Strings
//! returned by the library are freed with [`fogsim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fogsim::electre::{Electre, Proximity, ThresholdRule};
use fogsim::harness::{run_experiment, ExperimentConfig};
use fogsim::metrics::RunSummary;
use fogsim::topology::{build_generic_topology, generate_as_topology, Topology};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FogStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Simulation = 5,
    Panic = 6,
}

/// Opaque network topology.
pub struct FogTopology(Topology);

/// Opaque list of run summaries, in the order the sweep produced them.
pub struct FogSummaries(Vec<RunSummary>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &fogsim::Error) -> FogStatus {
    use fogsim::Error as E;
    match e {
        E::Config { .. } | E::Json(_) => FogStatus::Config,
        E::Io(_) | E::Csv(_) => FogStatus::Io,
        E::TooFewAlternatives { .. } | E::InvalidMatrix(_) | E::NoCandidates | E::UnknownNode(_) => {
            FogStatus::InvalidArgument
        }
        _ => FogStatus::Simulation,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (FogStatus, String)>) -> FogStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FogStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FogStatus::Panic
        }
    }
}

fn lib_err(e: fogsim::Error) -> (FogStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FogStatus, String) {
    (FogStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FogStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FogStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, (FogStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (FogStatus::Simulation, "output contains a NUL byte".to_owned()))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fogsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fogsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The fixed three-tier topology with three fog nodes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_topology_generic(out: *mut *mut FogTopology) -> FogStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(FogTopology(build_generic_topology())));
        Ok(())
    })
}

/// A random AS-like topology with about `nodes` nodes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_topology_random(seed: u64, nodes: usize, out: *mut *mut FogTopology) -> FogStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = generate_as_topology(seed, nodes).map_err(lib_err)?.topology;
        *out = Box::into_raw(Box::new(FogTopology(t)));
        Ok(())
    })
}

/// Parses a topology from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_topology_from_json(json: *const c_char, out: *mut *mut FogTopology) -> FogStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = Topology::from_json(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FogTopology(t)));
        Ok(())
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fogsim_topology_node_count(t: *const FogTopology) -> usize {
    t.as_ref().map_or(0, |t| t.0.node_count())
}

/// Serializes the topology. Free the result with `fogsim_string_free`.
///
/// # Safety
/// `t` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_topology_to_json(t: *const FogTopology, out: *mut *mut c_char) -> FogStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("topology"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_string(t.0.to_json().map_err(lib_err)?)?;
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fogsim_topology_free(t: *mut FogTopology) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Picks one of `n` candidates with ELECTRE III.
///
/// `costs` is row-major, `n_criteria` rows of `n` values, lower is better.
/// `weights` holds `n_criteria` values or is null for equal weights.
/// `hops` and `propagation` break ties towards the nearest candidate. The
/// chosen id is written to `out_chosen`.
///
/// # Safety
/// Every non-null array must have the stated length.
#[no_mangle]
pub unsafe extern "C" fn fogsim_electre_select(
    ids: *const usize,
    n: usize,
    costs: *const f64,
    n_criteria: usize,
    weights: *const f64,
    hops: *const usize,
    propagation: *const f64,
    out_chosen: *mut usize,
) -> FogStatus {
    guard(|| {
        if ids.is_null() || costs.is_null() || hops.is_null() || propagation.is_null() || out_chosen.is_null() {
            return Err(null("ids, costs, hops, propagation or out_chosen"));
        }
        if n == 0 || n_criteria == 0 {
            return Err((FogStatus::InvalidArgument, "need at least one candidate and one criterion".into()));
        }
        let ids = std::slice::from_raw_parts(ids, n);
        let flat = std::slice::from_raw_parts(costs, n * n_criteria);
        let rows: Vec<Vec<f64>> = flat.chunks(n).map(<[f64]>::to_vec).collect();
        let weights = if weights.is_null() {
            vec![1.0 / n_criteria as f64; n_criteria]
        } else {
            std::slice::from_raw_parts(weights, n_criteria).to_vec()
        };
        let hops = std::slice::from_raw_parts(hops, n);
        let pr = std::slice::from_raw_parts(propagation, n);
        let prox: Vec<Proximity> = (0..n).map(|i| Proximity { hops: hops[i], propagation: pr[i] }).collect();
        let electre = Electre::new(weights, ThresholdRule::default()).map_err(lib_err)?;
        *out_chosen = electre.decide(ids, &rows, &prox).map_err(lib_err)?.chosen;
        Ok(())
    })
}

/// Runs a sweep described by a JSON experiment config (same keys as the
/// CLI `--config` file). Nothing is written to disk unless `out_dir` is set.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_run(config_json: *const c_char, out: *mut *mut FogSummaries) -> FogStatus {
    guard(|| {
        let text = str_arg(config_json, "config_json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ExperimentConfig::from_json(text).map_err(lib_err)?;
        let runs = run_experiment(&config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FogSummaries(runs)));
        Ok(())
    })
}

/// Number of runs, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fogsim_summaries_len(s: *const FogSummaries) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

unsafe fn run_at<'a>(s: *const FogSummaries, index: usize) -> Result<&'a RunSummary, (FogStatus, String)> {
    let s = s.as_ref().ok_or_else(|| null("summaries"))?;
    s.0.get(index)
        .ok_or_else(|| (FogStatus::InvalidArgument, format!("run index {index} out of range ({} runs)", s.0.len())))
}

/// Headline numbers of run `index`. Metrics that are undefined for the run
/// (no completed loop, no ELECTRE decision) are written as NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FogRunStats {
    pub seed: u64,
    pub duration: u64,
    pub generated: u64,
    pub served: u64,
    pub outstanding: u64,
    pub mean_loop_transfer_rate: f64,
    pub mean_loop_execution_delay: f64,
    pub mean_total_response: f64,
    pub tie_rate: f64,
}

/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_summaries_stats(s: *const FogSummaries, index: usize, out: *mut FogRunStats) -> FogStatus {
    guard(|| {
        let r = run_at(s, index)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = FogRunStats {
            seed: r.seed,
            duration: r.duration,
            generated: r.generated,
            served: r.served,
            outstanding: r.saturation.outstanding(),
            mean_loop_transfer_rate: r.mean_loop_transfer_rate.unwrap_or(f64::NAN),
            mean_loop_execution_delay: r.mean_loop_execution_delay.unwrap_or(f64::NAN),
            mean_total_response: r.total_response.mean.unwrap_or(f64::NAN),
            tie_rate: r.tie_rate.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Policy name of run `index`. Free with `fogsim_string_free`.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_summaries_policy(s: *const FogSummaries, index: usize, out: *mut *mut c_char) -> FogStatus {
    guard(|| {
        let r = run_at(s, index)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_string(r.policy.clone())?;
        Ok(())
    })
}

/// Full summary of run `index` as JSON. Free with `fogsim_string_free`.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_summaries_json(s: *const FogSummaries, index: usize, out: *mut *mut c_char) -> FogStatus {
    guard(|| {
        let r = run_at(s, index)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(r).map_err(|e| lib_err(e.into()))?;
        *out = to_c_string(text)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fogsim_summaries_free(s: *mut FogSummaries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
