//! C ABI over the glc library.
//!
//! Graphs and knot diagrams cross the boundary as opaque handles. Every
//! fallible function returns a [`GlcStatus`]; on failure a message is kept per
//! thread and can be fetched with [`glc_last_error_message`]. Strings handed
//! to the caller are NUL-terminated, heap-allocated, and must be released with
//! [`glc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use glc::actors::{auto_partition, events_to_jsonl, parse_partition, prepare, ActorError, Scheduler, SchedulerPolicy};
use glc::rewrite::{reduce, Mode, ReduceConfig, RewriteError, Strategy};
use glc::{KnotDiagram, PortGraph};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    DomainError = 5,
    LimitExceeded = 6,
    Panic = 7,
}

pub const GLC_MODE_GLC: u32 = 0;
pub const GLC_MODE_CHEMLAMBDA: u32 = 1;
pub const GLC_STRATEGY_PRIORITY: u32 = 0;
pub const GLC_STRATEGY_RANDOM: u32 = 1;
pub const GLC_SCHEDULER_ROUND_ROBIN: u32 = 0;
pub const GLC_SCHEDULER_RANDOM: u32 = 1;

/// Opaque port graph.
pub struct GlcGraph(PortGraph);

/// Opaque knot diagram.
pub struct GlcKnot(KnotDiagram);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (GlcStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GlcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GlcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            GlcStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((GlcStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (GlcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| (GlcStatus::NullArgument, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| (GlcStatus::NullArgument, format!("{what} is null")))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn parse_err(e: impl std::fmt::Display) -> Failure {
    (GlcStatus::ParseError, e.to_string())
}

fn domain_err(e: impl std::fmt::Display) -> Failure {
    (GlcStatus::DomainError, e.to_string())
}

fn mode(m: u32) -> Result<Mode, Failure> {
    match m {
        GLC_MODE_GLC => Ok(Mode::Glc),
        GLC_MODE_CHEMLAMBDA => Ok(Mode::Chemlambda),
        _ => Err((GlcStatus::InvalidArgument, format!("unknown mode {m}"))),
    }
}

/// Error message of the most recent call on this thread, or NULL when that
/// call succeeded. The caller owns the returned string.
#[no_mangle]
pub extern "C" fn glc_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn glc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse molecule text into a new graph.
///
/// # Safety
/// `mol` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_from_mol(mol: *const c_char, out: *mut *mut GlcGraph) -> GlcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = glc::parse_mol(text(mol, "mol")?).map_err(parse_err)?;
        *out = Box::into_raw(Box::new(GlcGraph(g)));
        Ok(())
    })
}

/// Translate a lambda term into a new graph.
///
/// # Safety
/// `term` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_from_term(term: *const c_char, out: *mut *mut GlcGraph) -> GlcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let t = glc::parse_term(text(term, "term")?).map_err(parse_err)?;
        *out = Box::into_raw(Box::new(GlcGraph(glc::term_to_graph(&t))));
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a graph from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_free(g: *mut GlcGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_node_count(g: *const GlcGraph, out: *mut usize) -> GlcStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(g, "graph")?.0.node_count();
        Ok(())
    })
}

/// Canonical molecule text of the graph.
///
/// # Safety
/// `g` must be a live graph; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_to_mol(g: *const GlcGraph, out: *mut *mut c_char) -> GlcStatus {
    guard(|| {
        let s = glc::to_mol(&handle(g, "graph")?.0);
        *out_ptr(out, "out")? = to_c(s);
        Ok(())
    })
}

/// Graphviz text of the graph.
///
/// # Safety
/// `g` must be a live graph; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_to_dot(g: *const GlcGraph, out: *mut *mut c_char) -> GlcStatus {
    guard(|| {
        let s = glc::dot::to_dot(&handle(g, "graph")?.0);
        *out_ptr(out, "out")? = to_c(s);
        Ok(())
    })
}

/// Lambda term read back from the graph.
///
/// # Safety
/// `g` must be a live graph; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_readback(g: *const GlcGraph, out: *mut *mut c_char) -> GlcStatus {
    guard(|| {
        let t = glc::graph_to_term(&handle(g, "graph")?.0).map_err(domain_err)?;
        *out_ptr(out, "out")? = to_c(t.to_string());
        Ok(())
    })
}

/// # Safety
/// `a` and `b` must be live graphs; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_graph_isomorphic(a: *const GlcGraph, b: *const GlcGraph, out: *mut bool) -> GlcStatus {
    guard(|| {
        let r = glc::is_isomorphic(&handle(a, "a")?.0, &handle(b, "b")?.0).map_err(domain_err)?;
        *out_ptr(out, "out")? = r;
        Ok(())
    })
}

/// Reduce the graph in place. `seed` is used by the random strategy only.
/// On `LimitExceeded` the graph holds the partial result. `steps` and
/// `trace_jsonl` may be NULL.
///
/// # Safety
/// `g` must be a live graph; non-NULL out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_reduce(g: *mut GlcGraph, mode_id: u32, strategy: u32, seed: u64, max_steps: usize, steps: *mut usize, trace_jsonl: *mut *mut c_char) -> GlcStatus {
    guard(|| {
        let graph = out_ptr(g, "graph")?;
        let strategy = match strategy {
            GLC_STRATEGY_PRIORITY => Strategy::Priority,
            GLC_STRATEGY_RANDOM => Strategy::Random(seed),
            s => return Err((GlcStatus::InvalidArgument, format!("unknown strategy {s}"))),
        };
        let cfg = ReduceConfig::new(mode(mode_id)?, strategy).max_steps(max_steps);
        let (result, failure) = match reduce(&graph.0, &cfg) {
            Ok(r) => (r, None),
            Err(RewriteError::StepLimitExceeded { limit, partial }) => (*partial, Some((GlcStatus::LimitExceeded, format!("step limit of {limit} reached")))),
            Err(e) => return Err(domain_err(e)),
        };
        let (out, trace) = result;
        if let Some(s) = steps.as_mut() {
            *s = trace.len();
        }
        if let Some(t) = trace_jsonl.as_mut() {
            *t = to_c(trace.to_jsonl());
        }
        graph.0 = out;
        failure.map_or(Ok(()), Err)
    })
}

/// Run the actor simulation on a copy of `g`. The partition is either the
/// text `partition` (lines `node-id actor-name`) or, when it is NULL, an
/// automatic split into `auto_actors` actors. Writes the final graph to
/// `out` (also on `LimitExceeded`) and the event log to `log_jsonl` if it is
/// not NULL.
///
/// # Safety
/// `g` must be a live graph; `partition` NULL or NUL-terminated; `out`
/// writable; `log_jsonl` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn glc_actors_run(
    g: *const GlcGraph,
    partition: *const c_char,
    auto_actors: usize,
    mode_id: u32,
    scheduler: u32,
    seed: u64,
    max_events: usize,
    out: *mut *mut GlcGraph,
    log_jsonl: *mut *mut c_char,
) -> GlcStatus {
    guard(|| {
        let graph = &handle(g, "graph")?.0;
        let out = out_ptr(out, "out")?;
        let part = if partition.is_null() {
            if auto_actors == 0 {
                return Err((GlcStatus::InvalidArgument, "auto_actors must be positive".into()));
            }
            auto_partition(graph, auto_actors)
        } else {
            parse_partition(text(partition, "partition")?).map_err(parse_err)?
        };
        let policy = match scheduler {
            GLC_SCHEDULER_ROUND_ROBIN => SchedulerPolicy::RoundRobin,
            GLC_SCHEDULER_RANDOM => SchedulerPolicy::Random(seed),
            s => return Err((GlcStatus::InvalidArgument, format!("unknown scheduler {s}"))),
        };
        let mut sys = prepare(graph, &part).map_err(domain_err)?.with_mode(mode(mode_id)?);
        let (result, failure) = match sys.run(&mut Scheduler::new(policy), max_events) {
            Ok(r) => (r, None),
            Err(ActorError::EventLimitExceeded { limit, partial }) => (*partial, Some((GlcStatus::LimitExceeded, format!("event limit of {limit} reached")))),
            Err(e) => return Err(domain_err(e)),
        };
        let (final_graph, events) = result;
        if let Some(l) = log_jsonl.as_mut() {
            *l = to_c(events_to_jsonl(&events));
        }
        *out = Box::into_raw(Box::new(GlcGraph(final_graph)));
        failure.map_or(Ok(()), Err)
    })
}

/// Parse PD text into a new knot diagram.
///
/// # Safety
/// `pd` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_knot_from_pd(pd: *const c_char, out: *mut *mut GlcKnot) -> GlcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let d = glc::parse_pd(text(pd, "pd")?).map_err(parse_err)?;
        *out = Box::into_raw(Box::new(GlcKnot(d)));
        Ok(())
    })
}

/// # Safety
/// `k` must be NULL or a diagram from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn glc_knot_free(k: *mut GlcKnot) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Kauffman bracket, printed with descending exponents.
///
/// # Safety
/// `k` must be a live diagram; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_knot_bracket(k: *const GlcKnot, out: *mut *mut c_char) -> GlcStatus {
    guard(|| {
        let p = glc::bracket(&handle(k, "knot")?.0).map_err(domain_err)?;
        *out_ptr(out, "out")? = to_c(p.to_string());
        Ok(())
    })
}

/// Crossing relations, one per line.
///
/// # Safety
/// `k` must be a live diagram; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glc_knot_relations(k: *const GlcKnot, out: *mut *mut c_char) -> GlcStatus {
    guard(|| {
        let rels = glc::knot::extract_relations(&handle(k, "knot")?.0).map_err(domain_err)?;
        *out_ptr(out, "out")? = to_c(rels.iter().map(|r| format!("{r}\n")).collect());
        Ok(())
    })
}
