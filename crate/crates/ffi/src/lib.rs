//! C ABI over `det_core`.
//!
//! Trees are exposed as an opaque `DetTree` handle owned by the caller and
//! released with [`det_tree_free`]. Every function returns a [`DetStatus`];
//! on failure a message is available from [`det_last_error`] on the calling
//! thread until the next failing call. Dimension indices are 0-based and
//! sample buffers are row-major, allocated by the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use det_core::{BuildConfig, Condition, DetError, Ensemble, FitTest, Order};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Domain = 4,
    ZeroDensity = 5,
    Io = 6,
    Format = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetOrder {
    Constant = 0,
    Linear = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetFitTest {
    Kolmogorov = 0,
    HalfMass = 1,
}

/// Construction parameters; obtain defaults from [`det_build_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DetBuildConfig {
    /// A `DetOrder` value.
    pub order: i32,
    /// A `DetFitTest` value.
    pub fit_test: i32,
    /// Nonzero enables the pairwise quadrant independence test.
    pub pairwise_independence: i32,
    pub alpha: f64,
    pub min_leaf_count: usize,
    pub max_depth: usize,
    pub bounds_padding_rel: f64,
}

/// Opaque tree handle.
pub struct DetTree {
    inner: det_core::DetTree,
}

struct Failure {
    status: DetStatus,
    message: String,
}

impl Failure {
    fn new(status: DetStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<DetError> for Failure {
    fn from(e: DetError) -> Self {
        let status = match &e {
            DetError::Domain(_) => DetStatus::Domain,
            DetError::DimensionMismatch { .. } | DetError::DimensionOutOfRange { .. } => {
                DetStatus::Dimension
            }
            DetError::InvalidInput(_) | DetError::EmptyTree => DetStatus::InvalidArgument,
            DetError::ZeroDensity => DetStatus::ZeroDensity,
            DetError::Csv { .. } | DetError::Format(_) => DetStatus::Format,
            DetError::Io(_) => DetStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guarded(f: impl FnOnce() -> Result<(), Failure>) -> DetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DetStatus::Ok,
        Ok(Err(fail)) => {
            set_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            DetStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(
            DetStatus::NullPointer,
            format!("{name} is null"),
        ))
    } else {
        Ok(())
    }
}

unsafe fn tree_ref<'a>(tree: *const DetTree) -> Result<&'a det_core::DetTree, Failure> {
    non_null(tree, "tree")?;
    Ok(&(*tree).inner)
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    non_null(p, "path")?;
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::new(DetStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn condition(
    tree: &det_core::DetTree,
    dims: *const usize,
    values: *const f64,
    len: usize,
) -> Result<Condition, Failure> {
    let dims = slice(dims, len, "cond_dims")?;
    let values = slice(values, len, "cond_values")?;
    let entries: Vec<(usize, f64)> = dims.iter().copied().zip(values.iter().copied()).collect();
    Ok(Condition::new(entries, tree.dims())?)
}

unsafe fn emit_tree(out: *mut *mut DetTree, tree: det_core::DetTree) {
    *out = Box::into_raw(Box::new(DetTree { inner: tree }));
}

/// Message of the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn det_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn det_build_config_default() -> DetBuildConfig {
    let d = BuildConfig::default();
    DetBuildConfig {
        order: DetOrder::Linear as i32,
        fit_test: DetFitTest::Kolmogorov as i32,
        pairwise_independence: i32::from(d.pairwise_independence),
        alpha: d.alpha,
        min_leaf_count: d.min_leaf_count,
        max_depth: d.max_depth,
        bounds_padding_rel: d.bounds_padding_rel,
    }
}

/// Builds a tree from `rows * dims` row-major samples. `config` may be NULL
/// for defaults.
///
/// # Safety
/// `data` must point to `rows * dims` doubles, `config` to a valid config or
/// be NULL, and `out` to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn det_tree_build(
    data: *const f64,
    rows: usize,
    dims: usize,
    config: *const DetBuildConfig,
    out: *mut *mut DetTree,
) -> DetStatus {
    guarded(|| {
        non_null(out, "out")?;
        let len = rows
            .checked_mul(dims)
            .ok_or_else(|| Failure::new(DetStatus::InvalidArgument, "rows * dims overflows"))?;
        let values = slice(data, len, "data")?.to_vec();
        let cfg = if config.is_null() {
            det_build_config_default()
        } else {
            *config
        };
        let cfg = BuildConfig {
            order: match cfg.order {
                0 => Order::Constant,
                1 => Order::Linear,
                v => {
                    return Err(Failure::new(
                        DetStatus::InvalidArgument,
                        format!("unknown order {v}"),
                    ))
                }
            },
            fit_test: match cfg.fit_test {
                0 => FitTest::Kolmogorov,
                1 => FitTest::HalfMass,
                v => {
                    return Err(Failure::new(
                        DetStatus::InvalidArgument,
                        format!("unknown fit test {v}"),
                    ))
                }
            },
            pairwise_independence: cfg.pairwise_independence != 0,
            alpha: cfg.alpha,
            min_leaf_count: cfg.min_leaf_count,
            max_depth: cfg.max_depth,
            bounds_padding_rel: cfg.bounds_padding_rel,
        };
        let names = (1..=dims).map(|i| format!("x{i}")).collect();
        let ensemble = Ensemble::new(values, dims, names)?;
        let tree = det_core::build_tree(&ensemble, &cfg)?;
        emit_tree(out, tree);
        Ok(())
    })
}

/// Reads a tree document from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn det_tree_load(path: *const c_char, out: *mut *mut DetTree) -> DetStatus {
    guarded(|| {
        non_null(out, "out")?;
        let tree = det_core::io::read_tree(path_arg(path)?)?;
        emit_tree(out, tree);
        Ok(())
    })
}

/// Writes `tree` as a JSON document to `path`.
///
/// # Safety
/// `tree` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn det_tree_save(tree: *const DetTree, path: *const c_char) -> DetStatus {
    guarded(|| {
        let tree = tree_ref(tree)?;
        det_core::io::write_tree(path_arg(path)?, tree)?;
        Ok(())
    })
}

/// Parses a tree from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn det_tree_from_json(
    json: *const c_char,
    out: *mut *mut DetTree,
) -> DetStatus {
    guarded(|| {
        non_null(out, "out")?;
        non_null(json, "json")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Failure::new(DetStatus::Format, "document is not valid UTF-8"))?;
        emit_tree(out, det_core::io::tree_from_json(text)?);
        Ok(())
    })
}

/// Serializes `tree` into `buf` with a trailing NUL. `len_out` receives the
/// document length without the NUL, also when the buffer is too small; pass
/// a NULL `buf` with `capacity` 0 to query it.
///
/// # Safety
/// `buf` must have room for `capacity` bytes; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn det_tree_to_json(
    tree: *const DetTree,
    buf: *mut c_char,
    capacity: usize,
    len_out: *mut usize,
) -> DetStatus {
    guarded(|| {
        let tree = tree_ref(tree)?;
        non_null(len_out, "len_out")?;
        let text = det_core::io::tree_to_json(tree);
        *len_out = text.len();
        if capacity < text.len() + 1 {
            return Err(Failure::new(
                DetStatus::BufferTooSmall,
                format!("need {} bytes, have {capacity}", text.len() + 1),
            ));
        }
        non_null(buf, "buf")?;
        ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `tree` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn det_tree_free(tree: *mut DetTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn det_tree_dims(tree: *const DetTree, out: *mut usize) -> DetStatus {
    guarded(|| {
        let t = tree_ref(tree)?;
        non_null(out, "out")?;
        *out = t.dims();
        Ok(())
    })
}

/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn det_tree_leaf_count(tree: *const DetTree, out: *mut usize) -> DetStatus {
    guarded(|| {
        let t = tree_ref(tree)?;
        non_null(out, "out")?;
        *out = t.leaf_count();
        Ok(())
    })
}

/// Number of samples the tree was built from.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn det_tree_sample_size(tree: *const DetTree, out: *mut u64) -> DetStatus {
    guarded(|| {
        let t = tree_ref(tree)?;
        non_null(out, "out")?;
        *out = t.n();
        Ok(())
    })
}

/// Density estimate at `x` (length `dims`); zero outside the root cuboid.
///
/// # Safety
/// `x` must point to `dims` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn det_tree_density(
    tree: *const DetTree,
    x: *const f64,
    dims: usize,
    out: *mut f64,
) -> DetStatus {
    guarded(|| {
        let t = tree_ref(tree)?;
        non_null(out, "out")?;
        let x = slice(x, dims, "x")?;
        *out = t.density(x)?;
        Ok(())
    })
}

/// Estimated marginal density of the conditioned coordinates.
///
/// # Safety
/// `cond_dims` and `cond_values` must each hold `cond_len` entries.
#[no_mangle]
pub unsafe extern "C" fn det_tree_marginal_estimate(
    tree: *const DetTree,
    cond_dims: *const usize,
    cond_values: *const f64,
    cond_len: usize,
    out: *mut f64,
) -> DetStatus {
    guarded(|| {
        let t = tree_ref(tree)?;
        non_null(out, "out")?;
        let cond = condition(t, cond_dims, cond_values, cond_len)?;
        let set = det_core::find_conditioned_leaves(t, &cond)?;
        *out = det_core::conditional_marginal_estimate(&set);
        Ok(())
    })
}

fn check_capacity(count: usize, dims: usize, capacity: usize) -> Result<(), Failure> {
    let need = count
        .checked_mul(dims)
        .ok_or_else(|| Failure::new(DetStatus::InvalidArgument, "count * dims overflows"))?;
    if capacity < need {
        return Err(Failure::new(
            DetStatus::BufferTooSmall,
            format!("need {need} doubles, have {capacity}"),
        ));
    }
    Ok(())
}

unsafe fn fill(out: *mut f64, samples: &Ensemble) -> Result<(), Failure> {
    let data = samples.as_slice();
    if !data.is_empty() {
        non_null(out, "out")?;
        ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    }
    Ok(())
}

/// Draws `count` samples into `out` (`capacity` doubles, row-major).
///
/// # Safety
/// `out` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn det_tree_sample(
    tree: *const DetTree,
    seed: u64,
    count: usize,
    out: *mut f64,
    capacity: usize,
) -> DetStatus {
    guarded(|| {
        let t = tree_ref(tree)?;
        check_capacity(count, t.dims(), capacity)?;
        let samples = det_core::sample_unconditional(t, seed, count)?;
        fill(out, &samples)
    })
}

/// Draws `count` rows with the coordinates in `cond_dims` fixed to
/// `cond_values`. Rows span all dimensions.
///
/// # Safety
/// Condition arrays must hold `cond_len` entries and `out` must have room for
/// `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn det_tree_sample_conditional(
    tree: *const DetTree,
    cond_dims: *const usize,
    cond_values: *const f64,
    cond_len: usize,
    seed: u64,
    count: usize,
    out: *mut f64,
    capacity: usize,
) -> DetStatus {
    guarded(|| {
        let t = tree_ref(tree)?;
        let cond = condition(t, cond_dims, cond_values, cond_len)?;
        check_capacity(count, t.dims(), capacity)?;
        let samples = det_core::sample_conditional(t, &cond, seed, count)?;
        fill(out, &samples)
    })
}
