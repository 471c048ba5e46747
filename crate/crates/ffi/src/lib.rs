//! C ABI over the `matlql` library.
//!
//! Every fallible function returns a [`MatlqlStatus`]; on failure the
//! message is kept per thread and read back with
//! [`matlql_last_error_message`]. Configs and trainers are opaque handles
//! that the caller frees with the matching `_free` function. Panics never
//! cross the boundary; they surface as `MATLQL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use matlql::harness::run::build_trainer;
use matlql::harness::{self, ExperimentConfig};
use matlql::theory::{self, BoundInputs};
use matlql::trainer::{Phase, Trainer};
use matlql::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatlqlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Parse = 4,
    Domain = 5,
    Contract = 6,
    Io = 7,
    /// Any other library error; see the message.
    Failed = 8,
    Panic = 9,
    OutOfRange = 10,
}

/// Parsed experiment configuration.
pub struct MatlqlConfig(ExperimentConfig);

/// One arm's agents and environment, stepping episode by episode.
pub struct MatlqlTrainer(Trainer);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MatlqlBoundInputs {
    pub covering_time: f64,
    pub q_max: f64,
    pub state_count: f64,
    pub action_product: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub omega: f64,
    pub psi: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MatlqlBounds {
    pub ln_polynomial: f64,
    pub ln_linear: f64,
    pub iterations: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MatlqlWelch {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Nonzero when both samples have zero variance.
    pub degenerate: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> MatlqlStatus {
    match e {
        Error::Config(_) => MatlqlStatus::Config,
        Error::Parse { .. } => MatlqlStatus::Parse,
        Error::Domain(_) => MatlqlStatus::Domain,
        Error::Contract(_) => MatlqlStatus::Contract,
        Error::Io { .. } => MatlqlStatus::Io,
        _ => MatlqlStatus::Failed,
    }
}

struct Fail(MatlqlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MatlqlStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, record any failure and turn it into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MatlqlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MatlqlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            MatlqlStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MatlqlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copy `s` with a trailing NUL into `buf` when it fits and return the
/// size needed including the NUL.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize) -> usize {
    let need = s.len() + 1;
    if !buf.is_null() && len >= need {
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
        *buf.add(s.len()) = 0;
    }
    need
}

/// Last failure message on this thread. Returns the buffer size needed
/// including the NUL; `buf` may be null to query it. Empty after a success.
///
/// # Safety
/// `buf` is null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn matlql_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, len))
}

/// Parse config text. Relative paths inside it resolve against `base_dir`
/// (which may be null for the current directory).
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn matlql_config_parse(
    text: *const c_char,
    base_dir: *const c_char,
    out_config: *mut *mut MatlqlConfig,
) -> MatlqlStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let body = self::text(text, "text")?;
        let dir = if base_dir.is_null() { "." } else { self::text(base_dir, "base_dir")? };
        let cfg = ExperimentConfig::parse(body, "<ffi>", Path::new(dir))?;
        *slot = Box::into_raw(Box::new(MatlqlConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `path` is NUL-terminated; `out_config` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn matlql_config_load(path: *const c_char, out_config: *mut *mut MatlqlConfig) -> MatlqlStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let cfg = ExperimentConfig::load(Path::new(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(MatlqlConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `config` is null or came from `matlql_config_parse`/`_load` and is not used again.
#[no_mangle]
pub unsafe extern "C" fn matlql_config_free(config: *mut MatlqlConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of arms, or 0 for a null handle.
///
/// # Safety
/// `config` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn matlql_config_arm_count(config: *const MatlqlConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.arms.len())
}

/// Number of seeds, or 0 for a null handle.
///
/// # Safety
/// `config` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn matlql_config_seed_count(config: *const MatlqlConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.seeds.len())
}

/// Run every arm and seed and write the full output directory.
///
/// # Safety
/// `config` is a live handle; `out_dir` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn matlql_run(config: *const MatlqlConfig, out_dir: *const c_char) -> MatlqlStatus {
    guard(|| {
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let dir = text(out_dir, "out_dir")?;
        let run = harness::run_experiment(&cfg.0)?;
        let summary = harness::summarize(&run)?;
        harness::emit_outputs(Path::new(dir), &run, &summary)?;
        Ok(())
    })
}

/// Replay the scripted toy trace; `*out_passed` is 1 when every value matches.
///
/// # Safety
/// `out_passed` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn matlql_golden_trace(out_passed: *mut i32) -> MatlqlStatus {
    guard(|| {
        let slot = out(out_passed, "out_passed")?;
        *slot = i32::from(harness::golden_trace()?.passed());
        Ok(())
    })
}

/// Both convergence-time bounds (as natural logs) and the iteration count.
///
/// # Safety
/// `inputs` and `out_bounds` are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn matlql_bounds(inputs: *const MatlqlBoundInputs, out_bounds: *mut MatlqlBounds) -> MatlqlStatus {
    guard(|| {
        let x = inputs.as_ref().ok_or_else(|| null("inputs"))?;
        let slot = out(out_bounds, "out_bounds")?;
        let b = BoundInputs {
            covering_time: x.covering_time,
            q_max: x.q_max,
            state_count: x.state_count,
            action_product: x.action_product,
            delta: x.delta,
            epsilon: x.epsilon,
            gamma: x.gamma,
            omega: x.omega,
            psi: x.psi,
        };
        *slot = MatlqlBounds {
            ln_polynomial: theory::ln_polynomial_rate_bound(&b)?,
            ln_linear: theory::ln_linear_rate_bound(&b)?,
            iterations: theory::iterations_for_accuracy(b.q_max, b.beta(), b.epsilon)?,
        };
        Ok(())
    })
}

/// # Safety
/// `out_iterations` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn matlql_iterations_for_accuracy(
    q_max: f64,
    beta: f64,
    eps: f64,
    out_iterations: *mut u64,
) -> MatlqlStatus {
    guard(|| {
        let slot = out(out_iterations, "out_iterations")?;
        *slot = theory::iterations_for_accuracy(q_max, beta, eps)?;
        Ok(())
    })
}

/// Two-sided Welch t-test of two samples.
///
/// # Safety
/// `a` and `b` point to `na` and `nb` doubles; `out_result` is valid.
#[no_mangle]
pub unsafe extern "C" fn matlql_welch_t_test(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_result: *mut MatlqlWelch,
) -> MatlqlStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(null("sample"));
        }
        let slot = out(out_result, "out_result")?;
        let w = harness::welch_t_test(std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb))?;
        *slot = MatlqlWelch { t: w.t, df: w.df, p: w.p, degenerate: i32::from(w.degenerate) };
        Ok(())
    })
}

/// Build the learners and environment of arm `arm` for `seed`.
///
/// # Safety
/// `config` is a live handle; `out_trainer` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn matlql_trainer_new(
    config: *const MatlqlConfig,
    arm: usize,
    seed: u64,
    out_trainer: *mut *mut MatlqlTrainer,
) -> MatlqlStatus {
    guard(|| {
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let slot = out(out_trainer, "out_trainer")?;
        let arm = cfg.0.arms.get(arm).ok_or_else(|| {
            Fail(MatlqlStatus::OutOfRange, format!("arm {arm} of {}", cfg.0.arms.len()))
        })?;
        *slot = Box::into_raw(Box::new(MatlqlTrainer(build_trainer(arm, seed)?)));
        Ok(())
    })
}

/// # Safety
/// `trainer` is null or a live handle not used again.
#[no_mangle]
pub unsafe extern "C" fn matlql_trainer_free(trainer: *mut MatlqlTrainer) {
    if !trainer.is_null() {
        drop(Box::from_raw(trainer));
    }
}

/// # Safety
/// `trainer` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn matlql_trainer_num_agents(trainer: *const MatlqlTrainer) -> usize {
    trainer.as_ref().map_or(0, |t| t.0.slots().len())
}

/// Play one episode, learning when `training` is nonzero. Writes each
/// agent's return into `out_returns`, which holds `len` doubles and must
/// fit every agent.
///
/// # Safety
/// `trainer` is a live handle; `out_returns` is valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn matlql_trainer_run_episode(
    trainer: *mut MatlqlTrainer,
    training: i32,
    out_returns: *mut f64,
    len: usize,
) -> MatlqlStatus {
    guard(|| {
        let t = trainer.as_mut().ok_or_else(|| null("trainer"))?;
        if out_returns.is_null() {
            return Err(null("out_returns"));
        }
        let n = t.0.slots().len();
        if len < n {
            return Err(Fail(MatlqlStatus::OutOfRange, format!("buffer of {len} for {n} agents")));
        }
        let phase = if training != 0 { Phase::Training } else { Phase::Execution };
        let record = t.0.run_episode(phase)?;
        let dst = std::slice::from_raw_parts_mut(out_returns, n);
        for (d, a) in dst.iter_mut().zip(&record.agents) {
            *d = a.ret;
        }
        Ok(())
    })
}

/// Agent `agent`'s table checkpoint as text. `*out_needed` receives the
/// size including the NUL; the text is copied only if `len` suffices.
///
/// # Safety
/// `trainer` is a live handle; `buf` is null or valid for `len` bytes;
/// `out_needed` is valid.
#[no_mangle]
pub unsafe extern "C" fn matlql_trainer_checkpoint(
    trainer: *const MatlqlTrainer,
    agent: usize,
    buf: *mut c_char,
    len: usize,
    out_needed: *mut usize,
) -> MatlqlStatus {
    guard(|| {
        let t = trainer.as_ref().ok_or_else(|| null("trainer"))?;
        let needed = out(out_needed, "out_needed")?;
        let slot = t.0.slots().get(agent).ok_or_else(|| {
            Fail(MatlqlStatus::OutOfRange, format!("agent {agent} of {}", t.0.slots().len()))
        })?;
        *needed = copy_out(&slot.learner.checkpoint(), buf, len);
        Ok(())
    })
}
