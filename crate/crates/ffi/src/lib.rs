//! C ABI over `infowar-core`.
//!
//! Every function returns an [`InfowarStatus`]. On failure a message is
//! available from [`infowar_last_error_message`] on the same thread. Handles
//! are opaque and released with their matching `_free` function. Strings
//! handed out by the library are released with [`infowar_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use infowar_core::agents::{Agent, HeuristicAgent, ScriptedAgent};
use infowar_core::engine::{run_simulation, OutcomeKind, RunTelemetry, SimConfig};
use infowar_core::net::{generate_graph, load_edge_list, GraphKind, GraphParams, OpinionNetwork};
use infowar_core::persist;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfowarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidNetwork = 4,
    InvalidAgent = 5,
    RunFailed = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfowarAgentKind {
    Heuristic = 0,
    Silent = 1,
    /// Replays a JSONL script of `{"message":..,"potency":..}` lines.
    Scripted = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfowarOutcome {
    RedMajority = 0,
    BlueMajority = 1,
    Stalemate = 2,
}

pub struct InfowarConfig(SimConfig);

pub struct InfowarNetwork(OpinionNetwork);

pub struct InfowarRun(RunTelemetry);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let message = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

struct Failure(InfowarStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> InfowarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            InfowarStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            InfowarStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(InfowarStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(InfowarStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread, or null. Owned by the
/// library and valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn infowar_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn infowar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a JSON config. Omitted keys take defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infowar_config_from_json(json: *const c_char, out: *mut *mut InfowarConfig) -> InfowarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let config = persist::load_config(text).map_err(|e| Failure(InfowarStatus::InvalidConfig, e.to_string()))?;
        *out = Box::into_raw(Box::new(InfowarConfig(config)));
        Ok(())
    })
}

/// Overrides the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn infowar_config_set_seed(config: *mut InfowarConfig, seed: u64) -> InfowarStatus {
    guard(|| {
        out_arg(config, "config")?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn infowar_config_free(config: *mut InfowarConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Generates a network. `kind` is one of `complete`, `erdos_renyi`,
/// `barabasi_albert`, `watts_strogatz`; parameters the kind does not use are
/// ignored.
///
/// # Safety
/// `kind` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infowar_network_generate(
    kind: *const c_char,
    n: usize,
    p: f64,
    m: usize,
    k: usize,
    beta: f64,
    seed: u64,
    out: *mut *mut InfowarNetwork,
) -> InfowarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind: GraphKind =
            str_arg(kind, "kind")?.parse().map_err(|e: String| Failure(InfowarStatus::InvalidNetwork, e))?;
        let params = GraphParams { p, m, k, beta };
        let net = generate_graph(kind, &params, n, seed).map_err(|e| Failure(InfowarStatus::InvalidNetwork, e.to_string()))?;
        *out = Box::into_raw(Box::new(InfowarNetwork(net)));
        Ok(())
    })
}

/// Loads a `u,v` edge list. `n` of 0 infers the node count.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infowar_network_from_edge_list(
    text: *const c_char,
    n: usize,
    out: *mut *mut InfowarNetwork,
) -> InfowarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let loaded = load_edge_list(text, (n > 0).then_some(n))
            .map_err(|e| Failure(InfowarStatus::InvalidNetwork, e.to_string()))?;
        *out = Box::into_raw(Box::new(InfowarNetwork(loaded.network)));
        Ok(())
    })
}

/// # Safety
/// `network` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn infowar_network_size(
    network: *const InfowarNetwork,
    nodes: *mut usize,
    edges: *mut usize,
) -> InfowarStatus {
    guard(|| {
        let net = &handle(network, "network")?.0;
        *out_arg(nodes, "nodes")? = net.node_count();
        *out_arg(edges, "edges")? = net.edge_count();
        Ok(())
    })
}

/// # Safety
/// `network` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn infowar_network_free(network: *mut InfowarNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

unsafe fn make_agent(kind: InfowarAgentKind, script: *const c_char, config: &SimConfig) -> Result<Box<dyn Agent>, Failure> {
    Ok(match kind {
        InfowarAgentKind::Heuristic => Box::new(HeuristicAgent::new(config.economics_view())),
        InfowarAgentKind::Silent => Box::new(ScriptedAgent::silent()),
        InfowarAgentKind::Scripted => {
            let text = str_arg(script, "script")?;
            Box::new(ScriptedAgent::from_jsonl(text).map_err(|e| Failure(InfowarStatus::InvalidAgent, e.to_string()))?)
        }
    })
}

/// Runs a simulation to termination. `red_script` and `blue_script` are
/// read only for `INFOWAR_AGENT_KIND_SCRIPTED` and may be null otherwise.
///
/// # Safety
/// Handles must be live, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn infowar_run(
    config: *const InfowarConfig,
    network: *const InfowarNetwork,
    red_kind: InfowarAgentKind,
    red_script: *const c_char,
    blue_kind: InfowarAgentKind,
    blue_script: *const c_char,
    out: *mut *mut InfowarRun,
) -> InfowarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = &handle(config, "config")?.0;
        let net = &handle(network, "network")?.0;
        let mut red = make_agent(red_kind, red_script, config)?;
        let mut blue = make_agent(blue_kind, blue_script, config)?;
        let telemetry = run_simulation(config.clone(), net, red.as_mut(), blue.as_mut())
            .map_err(|e| Failure(InfowarStatus::RunFailed, e.to_string()))?;
        *out = Box::into_raw(Box::new(InfowarRun(telemetry)));
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn infowar_run_outcome(
    run: *const InfowarRun,
    outcome: *mut InfowarOutcome,
    round: *mut u32,
) -> InfowarStatus {
    guard(|| {
        let t = &handle(run, "run")?.0;
        let o = t.outcome.ok_or_else(|| Failure(InfowarStatus::Internal, "run has no outcome".into()))?;
        *out_arg(outcome, "outcome")? = match o.kind {
            OutcomeKind::RedMajority => InfowarOutcome::RedMajority,
            OutcomeKind::BlueMajority => InfowarOutcome::BlueMajority,
            OutcomeKind::Stalemate => InfowarOutcome::Stalemate,
        };
        *out_arg(round, "round")? = o.at_round;
        Ok(())
    })
}

/// Remaining Blue energy in hundredths.
///
/// # Safety
/// `run` must be a live handle; `cents` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infowar_run_blue_energy_cents(run: *const InfowarRun, cents: *mut i64) -> InfowarStatus {
    guard(|| {
        *out_arg(cents, "cents")? = handle(run, "run")?.0.final_blue_energy_cents();
        Ok(())
    })
}

unsafe fn export(run: *const InfowarRun, out: *mut *mut c_char, f: impl FnOnce(&RunTelemetry) -> Result<String, String>) -> InfowarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = f(&handle(run, "run")?.0).map_err(|e| Failure(InfowarStatus::RunFailed, e))?;
        *out = to_c_string(text);
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; free the result with `infowar_string_free`.
#[no_mangle]
pub unsafe extern "C" fn infowar_run_rounds_csv(run: *const InfowarRun, out: *mut *mut c_char) -> InfowarStatus {
    export(run, out, |t| Ok(persist::export_rounds_csv(t)))
}

/// # Safety
/// `run` must be a live handle; free the result with `infowar_string_free`.
#[no_mangle]
pub unsafe extern "C" fn infowar_run_messages_jsonl(run: *const InfowarRun, out: *mut *mut c_char) -> InfowarStatus {
    export(run, out, |t| Ok(persist::export_messages_jsonl(t)))
}

/// # Safety
/// `run` must be a live handle; free the result with `infowar_string_free`.
#[no_mangle]
pub unsafe extern "C" fn infowar_run_states_csv(run: *const InfowarRun, out: *mut *mut c_char) -> InfowarStatus {
    export(run, out, |t| Ok(persist::export_states_csv(t)))
}

/// # Safety
/// `run` must be a live handle; free the result with `infowar_string_free`.
#[no_mangle]
pub unsafe extern "C" fn infowar_run_metrics_csv(run: *const InfowarRun, out: *mut *mut c_char) -> InfowarStatus {
    export(run, out, |t| persist::export_metrics_csv(t).map_err(|e| e.to_string()))
}

/// # Safety
/// `run` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn infowar_run_free(run: *mut InfowarRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
