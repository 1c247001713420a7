//! C ABI for the ambris simulator.
//!
//! The surface follows the usual opaque-handle pattern: a JSON run
//! configuration is parsed into an `AmbrisConfig`, which hands out result,
//! codebook, and field-map handles with plain-scalar accessors. Every
//! function returns an [`AmbrisStatus`]; on any non-`Ok` status a detailed
//! message is available from [`ambris_last_error_message`] until the next
//! failing call on the same thread.
//!
//! Ownership: every `*_new`/`*_parse`/`*_search`/`*_map` output must be
//! released with the matching `*_free`; the `free` functions accept null.
//! Handles are not synchronized, but any number of threads may use distinct
//! handles concurrently. Beam and cell indices are 1-based, phase and grid
//! indices 0-based, matching the CSV outputs.
//!
//! The committed header (`include/ambris.h`) mirrors this file; regenerate
//! it with cbindgen (see `cbindgen.toml`) after changing the surface.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ambris::cli::{parse_config, run_command, with_worker_pool, Command, RunConfig};
use ambris::codebook::{compose_weights, Codebook};
use ambris::fieldmap::{map_peak, reflected_field_map, FieldMap};
use ambris::metrics::{ber_from_contrast, wrap_2pi};
use ambris::search::SearchResult;
use ambris::Error;

/// Status code returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbrisStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad configuration or argument value (config syntax, unknown keys,
    /// out-of-range indices, invariant violations).
    InvalidArgument = 3,
    /// Domain error in the model (singular distance, undefined phase,
    /// mismatched dimensions).
    Domain = 4,
    /// File system error while writing outputs.
    Io = 5,
    /// Unexpected internal failure.
    Internal = 6,
}

/// Parsed run configuration (opaque).
pub struct AmbrisConfig {
    inner: RunConfig,
}

/// Search or evaluation outcome (opaque).
pub struct AmbrisResult {
    inner: SearchResult,
}

/// Focusing codebook (opaque).
pub struct AmbrisCodebook {
    inner: Codebook,
}

/// Reflected-field map (opaque).
pub struct AmbrisMap {
    inner: FieldMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn status_from(err: &Error) -> AmbrisStatus {
    match err {
        Error::SingularDistance(_) | Error::UndefinedArgument(_) | Error::DimensionMismatch(_) => {
            AmbrisStatus::Domain
        }
        Error::Invalid { .. } | Error::Config(_) | Error::OutOfRange(_) => {
            AmbrisStatus::InvalidArgument
        }
        Error::Io { .. } => AmbrisStatus::Io,
    }
}

fn fail(err: Error) -> AmbrisStatus {
    set_error(&err.to_string());
    status_from(&err)
}

/// Run `body`, translating panics into `Internal` instead of unwinding
/// across the FFI boundary.
fn guarded<F: FnOnce() -> AmbrisStatus>(body: F) -> AmbrisStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            AmbrisStatus::Internal
        }
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, AmbrisStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(AmbrisStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        AmbrisStatus::InvalidUtf8
    })
}

macro_rules! nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!("null argument: ", stringify!($ptr)));
            return AmbrisStatus::NullArgument;
        }
    };
}

/// Copy the most recent error message for this thread into `buffer`.
///
/// Returns the full message length including the trailing NUL. When
/// `capacity` is smaller, the copy is truncated but still NUL-terminated;
/// with a null buffer or zero capacity nothing is copied. Returns 0 when no
/// error has occurred yet.
///
/// # Safety
/// `buffer` must point to at least `capacity` writable bytes, or be null.
#[no_mangle]
pub unsafe extern "C" fn ambris_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(message) = slot.as_ref() else {
            return 0;
        };
        let bytes = message.as_bytes_with_nul();
        if !buffer.is_null() && capacity > 0 {
            let count = bytes.len().min(capacity);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buffer.cast(), count);
            // always terminate, even when truncating
            *buffer.add(count - 1) = 0;
        }
        bytes.len()
    })
}

/// Parse a JSON run configuration (schema version 1) into a handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ambris_config_parse(
    json: *const c_char,
    out: *mut *mut AmbrisConfig,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(out);
        let text = match cstr_arg(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_config(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(AmbrisConfig { inner }));
                AmbrisStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` must come from [`ambris_config_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ambris_config_free(config: *mut AmbrisConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Set the worker thread count (0 restores the library default).
///
/// # Safety
/// `config` must be a live handle from [`ambris_config_parse`].
#[no_mangle]
pub unsafe extern "C" fn ambris_config_set_threads(
    config: *mut AmbrisConfig,
    threads: usize,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(config);
        (*config).inner.threads = threads;
        AmbrisStatus::Ok
    })
}

/// Override the output directory used by [`ambris_run_command`].
///
/// # Safety
/// `config` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ambris_config_set_out_dir(
    config: *mut AmbrisConfig,
    dir: *const c_char,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(config);
        let dir = match cstr_arg(dir) {
            Ok(d) => d,
            Err(status) => return status,
        };
        (*config).inner.out_dir = PathBuf::from(dir);
        AmbrisStatus::Ok
    })
}

/// Evaluate every (beam, phase) pair of the configured scenario.
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ambris_evaluate(
    config: *const AmbrisConfig,
    out: *mut *mut AmbrisResult,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(config);
        nonnull!(out);
        let cfg = &(*config).inner;
        let run = || -> Result<SearchResult, Error> {
            let cs = cfg.channel_set()?;
            with_worker_pool(cfg.threads, || {
                ambris::search::evaluate_grid_channels(
                    &cs,
                    cfg.scenario.tag_reflection,
                    cfg.scenario.noise_sigma,
                    &cfg.codebook()?,
                    &cfg.phase_grid()?,
                )
            })?
        };
        match run() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(AmbrisResult { inner }));
                AmbrisStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Run the quantized-feedback search. `budget` 0 means the full grid.
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ambris_feedback_search(
    config: *const AmbrisConfig,
    budget: usize,
    out: *mut *mut AmbrisResult,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(config);
        nonnull!(out);
        let cfg = &(*config).inner;
        let run = || -> Result<SearchResult, Error> {
            let cs = cfg.channel_set()?;
            let cb = cfg.codebook()?;
            let pg = cfg.phase_grid()?;
            let budget = if budget == 0 {
                cb.beam_count() * pg.len()
            } else {
                budget
            };
            Ok(ambris::search::feedback_search_channels(
                &cs,
                cfg.scenario.tag_reflection,
                cfg.scenario.noise_sigma,
                &cb,
                &pg,
                &cfg.quantizer,
                budget,
            )?
            .result)
        };
        match run() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(AmbrisResult { inner }));
                AmbrisStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `result` must come from an evaluate/search call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ambris_result_free(result: *mut AmbrisResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of beams and phase-grid points covered by a result.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_result_dims(
    result: *const AmbrisResult,
    out_beams: *mut usize,
    out_phases: *mut usize,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(result);
        nonnull!(out_beams);
        nonnull!(out_phases);
        let res = &(*result).inner;
        *out_beams = res.beam_count();
        *out_phases = res.phase_count();
        AmbrisStatus::Ok
    })
}

/// Contrast and BER of one pair. `beam` is 1-based, `phase` 0-based.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_result_entry(
    result: *const AmbrisResult,
    beam: usize,
    phase: usize,
    out_contrast: *mut f64,
    out_ber: *mut f64,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(result);
        nonnull!(out_contrast);
        nonnull!(out_ber);
        let res = &(*result).inner;
        if beam == 0 || beam > res.beam_count() || phase >= res.phase_count() {
            return fail(Error::OutOfRange(format!(
                "pair ({beam}, {phase}) outside {}x{}",
                res.beam_count(),
                res.phase_count()
            )));
        }
        *out_contrast = res.contrast_matrix[beam - 1][phase];
        *out_ber = res.ber_matrix[beam - 1][phase];
        AmbrisStatus::Ok
    })
}

/// Winning pair of the search (1-based beam, 0-based phase).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_result_best(
    result: *const AmbrisResult,
    out_beam: *mut usize,
    out_phase: *mut usize,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(result);
        nonnull!(out_beam);
        nonnull!(out_phase);
        *out_beam = (*result).inner.best_beam;
        *out_phase = (*result).inner.best_phase;
        AmbrisStatus::Ok
    })
}

/// No-RIS reference contrast and BER.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_result_reference(
    result: *const AmbrisResult,
    out_contrast: *mut f64,
    out_ber: *mut f64,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(result);
        nonnull!(out_contrast);
        nonnull!(out_ber);
        *out_contrast = (*result).inner.ref_contrast;
        *out_ber = (*result).inner.ref_ber;
        AmbrisStatus::Ok
    })
}

/// Build the focusing codebook for the configured scenario.
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ambris_codebook_new(
    config: *const AmbrisConfig,
    out: *mut *mut AmbrisCodebook,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(config);
        nonnull!(out);
        match (*config).inner.codebook() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(AmbrisCodebook { inner }));
                AmbrisStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `codebook` must come from [`ambris_codebook_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ambris_codebook_free(codebook: *mut AmbrisCodebook) {
    if !codebook.is_null() {
        drop(Box::from_raw(codebook));
    }
}

/// Number of beams and of cells per beam.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_codebook_dims(
    codebook: *const AmbrisCodebook,
    out_beams: *mut usize,
    out_cells: *mut usize,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(codebook);
        nonnull!(out_beams);
        nonnull!(out_cells);
        let cb = &(*codebook).inner;
        *out_beams = cb.beam_count();
        *out_cells = cb.cells();
        AmbrisStatus::Ok
    })
}

/// Reflection phase of one cell in `[0, 2*pi)`. Both indices are 1-based.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_codebook_phase(
    codebook: *const AmbrisCodebook,
    beam: usize,
    cell: usize,
    out_phase_rad: *mut f64,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(codebook);
        nonnull!(out_phase_rad);
        let cb = &(*codebook).inner;
        let beam = match cb.beam(beam) {
            Ok(b) => b,
            Err(e) => return fail(e),
        };
        if cell == 0 || cell > beam.len() {
            return fail(Error::OutOfRange(format!(
                "cell index {cell} not in 1..={}",
                beam.len()
            )));
        }
        *out_phase_rad = wrap_2pi(beam[cell - 1].arg());
        AmbrisStatus::Ok
    })
}

/// Sample the reflected field of one beam over the configured map grid.
/// `beam` is 1-based; `delta_deg` is the common phase shift in degrees.
///
/// # Safety
/// `config` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ambris_field_map(
    config: *const AmbrisConfig,
    beam: usize,
    delta_deg: f64,
    include_direct: bool,
    out: *mut *mut AmbrisMap,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(config);
        nonnull!(out);
        let cfg = &(*config).inner;
        let run = || -> Result<FieldMap, Error> {
            let cb = cfg.codebook()?;
            let weights = if cfg.ris_absent {
                vec![ambris::Complex64::new(0.0, 0.0); cb.cells()]
            } else {
                compose_weights(cb.beam(beam)?, delta_deg.to_radians())
            };
            with_worker_pool(cfg.threads, || {
                reflected_field_map(
                    &cfg.scenario,
                    &weights,
                    &cfg.map_grid,
                    include_direct,
                    cfg.floor_db,
                )
            })?
        };
        match run() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(AmbrisMap { inner }));
                AmbrisStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `map` must come from [`ambris_field_map`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ambris_map_free(map: *mut AmbrisMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Grid dimensions of a field map.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_map_dims(
    map: *const AmbrisMap,
    out_nx: *mut usize,
    out_ny: *mut usize,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(map);
        nonnull!(out_nx);
        nonnull!(out_ny);
        let fm = &(*map).inner;
        *out_nx = fm.rows();
        *out_ny = fm.cols();
        AmbrisStatus::Ok
    })
}

/// Map value in dB at grid indices `(i, j)` (0-based).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_map_value(
    map: *const AmbrisMap,
    i: usize,
    j: usize,
    out_db: *mut f64,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(map);
        nonnull!(out_db);
        let fm = &(*map).inner;
        if i >= fm.rows() || j >= fm.cols() {
            return fail(Error::OutOfRange(format!(
                "({i}, {j}) outside {}x{}",
                fm.rows(),
                fm.cols()
            )));
        }
        *out_db = fm.values[i][j];
        AmbrisStatus::Ok
    })
}

/// Location and value of the map maximum (row-major tie-break).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ambris_map_peak(
    map: *const AmbrisMap,
    out_i: *mut usize,
    out_j: *mut usize,
    out_db: *mut f64,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(map);
        nonnull!(out_i);
        nonnull!(out_j);
        nonnull!(out_db);
        let (i, j, db) = map_peak(&(*map).inner);
        *out_i = i;
        *out_j = j;
        *out_db = db;
        AmbrisStatus::Ok
    })
}

/// Energy-detector BER for a contrast and noise level.
///
/// # Safety
/// `out_ber` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ambris_ber_from_contrast(
    contrast: f64,
    sigma: f64,
    out_ber: *mut f64,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(out_ber);
        match ber_from_contrast(contrast, sigma) {
            Ok(ber) => {
                *out_ber = ber;
                AmbrisStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Execute one of the file-emitting commands into the config's output
/// directory: `"codebook"`, `"evaluate"`, `"search"`, or `"report"`.
/// Field maps are available through [`ambris_field_map`] instead.
///
/// # Safety
/// `config` must be a live handle; `command` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ambris_run_command(
    config: *const AmbrisConfig,
    command: *const c_char,
) -> AmbrisStatus {
    guarded(|| {
        nonnull!(config);
        let name = match cstr_arg(command) {
            Ok(n) => n,
            Err(status) => return status,
        };
        let cmd = match name {
            "codebook" => Command::Codebook,
            "evaluate" => Command::Evaluate,
            "search" => Command::Search,
            "report" => Command::Report,
            other => {
                return fail(Error::Config(format!(
                    "unknown command `{other}`, expected codebook/evaluate/search/report"
                )))
            }
        };
        match run_command(&cmd, &(*config).inner) {
            Ok(_) => AmbrisStatus::Ok,
            Err(e) => fail(e),
        }
    })
}
