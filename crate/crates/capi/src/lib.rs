//! C ABI for the 3-majority dynamics simulator.
//!
//! Conventions: every fallible function returns a [`TrimajStatus`] code and
//! writes results through out-pointers; handles are opaque and must be
//! released with their `_free` function; `trimaj_last_error` returns a
//! thread-local message for the most recent failure on this thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use trimaj::harness::{
    parse_adversary_kind, run_trial, AdversaryConfig, BudgetSpec, Cell, ExperimentSpec,
};
use trimaj::observer::TerminalKind;
use trimaj::opinion::Configuration;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| slot.replace(Some(message)));
}

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrimajStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    RunFailed = 5,
    BufferTooSmall = 6,
}

/// Terminal states of a trial.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrimajTerminal {
    StrictConsensus = 0,
    AlmostConsensus = 1,
    MaxRoundsExceeded = 2,
}

/// Verdict of one trial.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TrimajOutcome {
    pub rounds: u64,
    pub terminal: TrimajTerminal,
    /// Winning opinion id, or -1 when the run was censored.
    pub winner: i64,
    /// 1 when the winner was active in the initial configuration.
    pub winner_valid: u8,
    /// Nodes not on the leading opinion at the final round.
    pub residual: u64,
    /// Small-opinion closure violations observed over the trajectory.
    pub violations: u64,
    /// First round the adversary's non-valid target had zero support after
    /// being active, or -1 if that never happened.
    pub target_extinction_round: i64,
}

/// Opaque simulator handle: one experiment cell plus its master seed.
pub struct TrimajSimulator {
    spec: ExperimentSpec,
    cell: Cell,
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn trimaj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the last error message recorded on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn trimaj_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Creates a simulator for one `(n, k)` cell.
///
/// `adversary_kind` may be NULL (meaning "null") or one of: "null",
/// "static-plant", "dynamic-sustain", "dynamic-balance-big",
/// "dynamic-feed-min-big", "dynamic-random". `target < 0` means no target.
/// `gamma` and `c_stop` must be positive; `max_rounds = 0` selects the
/// default budget derived from `(n, k)`.
///
/// # Safety
/// `out` must be a valid pointer. `adversary_kind`, when non-NULL, must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn trimaj_simulator_new(
    n: u64,
    k: u32,
    seed: u64,
    adversary_kind: *const c_char,
    budget: u64,
    target: i64,
    gamma: f64,
    c_stop: f64,
    max_rounds: u64,
    out: *mut *mut TrimajSimulator,
) -> TrimajStatus {
    if out.is_null() {
        return TrimajStatus::NullPointer;
    }
    let kind = if adversary_kind.is_null() {
        "null".to_string()
    } else {
        match CStr::from_ptr(adversary_kind).to_str() {
            Ok(s) => s.to_string(),
            Err(_) => return TrimajStatus::InvalidUtf8,
        }
    };
    let kind = match parse_adversary_kind(&kind) {
        Ok(kind) => kind,
        Err(err) => {
            set_last_error(err.to_string());
            return TrimajStatus::InvalidArgument;
        }
    };
    if target > i64::from(u32::MAX) {
        set_last_error(format!("target {target} exceeds the opinion id range"));
        return TrimajStatus::InvalidArgument;
    }

    let mut spec = ExperimentSpec::single_cell(n, k);
    spec.seed = seed;
    spec.max_rounds = max_rounds;
    spec.adversary = AdversaryConfig {
        kind,
        budget: BudgetSpec::Explicit(budget),
        target: (target >= 0).then_some(target as u32),
        sustain_level: None,
    };
    spec.thresholds.gamma = gamma;
    spec.thresholds.c_stop = c_stop;
    if let Err(err) = spec.validate() {
        set_last_error(err.to_string());
        return TrimajStatus::InvalidArgument;
    }
    let cell = spec.cells()[0];
    *out = Box::into_raw(Box::new(TrimajSimulator { spec, cell }));
    TrimajStatus::Ok
}

/// Runs one deterministic trial; the same `(seed, trial)` always produces
/// the same outcome.
///
/// # Safety
/// `simulator` must be a live handle from [`trimaj_simulator_new`] and
/// `outcome` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trimaj_simulator_run(
    simulator: *const TrimajSimulator,
    trial: u64,
    outcome: *mut TrimajOutcome,
) -> TrimajStatus {
    if simulator.is_null() || outcome.is_null() {
        return TrimajStatus::NullPointer;
    }
    let sim = &*simulator;
    match run_trial(&sim.spec, &sim.cell, trial, false) {
        Ok(result) => {
            let o = result.outcome;
            *outcome = TrimajOutcome {
                rounds: o.rounds,
                terminal: match o.terminal {
                    TerminalKind::StrictConsensus => TrimajTerminal::StrictConsensus,
                    TerminalKind::AlmostConsensus => TrimajTerminal::AlmostConsensus,
                    TerminalKind::MaxRoundsExceeded => TrimajTerminal::MaxRoundsExceeded,
                },
                winner: o.winner.map_or(-1, |w| i64::from(w.0)),
                winner_valid: u8::from(o.winner_valid),
                residual: o.residual,
                violations: o.violations.len() as u64,
                target_extinction_round: o
                    .adversary_target_extinction
                    .map_or(-1, |r| r as i64),
            };
            TrimajStatus::Ok
        }
        Err(err) => {
            set_last_error(err.to_string());
            TrimajStatus::RunFailed
        }
    }
}

/// Releases a simulator handle. NULL is a no-op.
///
/// # Safety
/// `simulator` must be NULL or a handle from [`trimaj_simulator_new`] that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn trimaj_simulator_free(simulator: *mut TrimajSimulator) {
    if !simulator.is_null() {
        drop(Box::from_raw(simulator));
    }
}

/// Computes the per-node adoption distribution of a configuration given in
/// canonical text form `n=<int>;<id>:<count>,...`. Writes up to `capacity`
/// `(id, probability)` pairs in ascending id order and stores the active
/// count in `written`; returns `BufferTooSmall` (with `written` set) when
/// `capacity` does not cover the active set.
///
/// # Safety
/// `config` must be NUL-terminated; `ids` and `probs` must point to at
/// least `capacity` elements; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn trimaj_adoption_probabilities(
    config: *const c_char,
    ids: *mut u32,
    probs: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> TrimajStatus {
    if config.is_null() || written.is_null() {
        return TrimajStatus::NullPointer;
    }
    let text = match CStr::from_ptr(config).to_str() {
        Ok(s) => s,
        Err(_) => return TrimajStatus::InvalidUtf8,
    };
    let cfg: Configuration = match text.parse() {
        Ok(cfg) => cfg,
        Err(err) => {
            set_last_error(format!("{err}"));
            return TrimajStatus::ParseError;
        }
    };
    let dist = trimaj::dynamics::adoption_distribution(&cfg);
    *written = dist.probs().len();
    if dist.probs().len() > capacity {
        return TrimajStatus::BufferTooSmall;
    }
    if ids.is_null() || probs.is_null() {
        return TrimajStatus::NullPointer;
    }
    for (i, &(id, p)) in dist.probs().iter().enumerate() {
        *ids.add(i) = id.0;
        *probs.add(i) = p;
    }
    TrimajStatus::Ok
}

/// Dynamic-adversary budget `floor(beta sqrt(n) / (k^{5/2} ln n))`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trimaj_f_dynamic_bound(
    n: u64,
    k: u32,
    beta: f64,
    out: *mut u64,
) -> TrimajStatus {
    if out.is_null() {
        return TrimajStatus::NullPointer;
    }
    if n < 2 || k < 1 {
        set_last_error(format!("need n >= 2 and k >= 1, got n = {n}, k = {k}"));
        return TrimajStatus::InvalidArgument;
    }
    *out = trimaj::adversary::f_dynamic_bound(n, k, beta);
    TrimajStatus::Ok
}

/// Static-adversary budget `floor(n/k - sqrt(k n ln n))`; fails with
/// `InvalidArgument` when the regime is too small for a positive bound.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trimaj_f_static_bound(n: u64, k: u32, out: *mut u64) -> TrimajStatus {
    if out.is_null() {
        return TrimajStatus::NullPointer;
    }
    if n < 2 || k < 1 {
        set_last_error(format!("need n >= 2 and k >= 1, got n = {n}, k = {k}"));
        return TrimajStatus::InvalidArgument;
    }
    match trimaj::adversary::f_static_bound(n, k) {
        Ok(f) => {
            *out = f;
            TrimajStatus::Ok
        }
        Err(err) => {
            set_last_error(err.to_string());
            TrimajStatus::InvalidArgument
        }
    }
}
