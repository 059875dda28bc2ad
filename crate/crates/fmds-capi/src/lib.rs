//! C ABI for the `fmds` library.
//!
//! Conventions:
//! - Handles (`FmdsMatrix`, `FmdsEmbedding`) are opaque; create them through
//!   the constructors here and release them with the matching `_free`.
//! - Every fallible function returns an `int32_t` status: `FMDS_OK` (0) on
//!   success, a nonzero `FMDS_ERR_*` code otherwise. On failure the out
//!   parameters are left untouched and a message is recorded; fetch it with
//!   [`fmds_last_error_message`]. The message is thread-local and remains
//!   valid until the next failing call on the same thread.
//! - Panics never cross the boundary; they are reported as `FMDS_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fmds::experiment::{run_distances, run_embed, EmbedConfig, EmbedMethod, ExperimentConfig};
use fmds::isomap::{DisconnectedPolicy, NeighborRule};
use fmds::mds::{schoenberg_check, stress, Embedding};
use fmds::metrics::DissimilarityMatrix;
use fmds::Error;

/// Success.
pub const FMDS_OK: i32 = 0;
/// A pointer was null, an index out of range, or an argument malformed.
pub const FMDS_ERR_INVALID: i32 = 1;
/// Input outside the mathematical domain of the operation.
pub const FMDS_ERR_DOMAIN: i32 = 2;
/// The requested (family, operation) combination is deliberately not provided.
pub const FMDS_ERR_UNSUPPORTED: i32 = 3;
/// A numerical routine failed to converge.
pub const FMDS_ERR_NUMERIC: i32 = 4;
/// The neighborhood graph is disconnected and the policy forbids dropping points.
pub const FMDS_ERR_DISCONNECTED: i32 = 5;
/// A matrix destined for classical scaling contains a non-finite entry.
pub const FMDS_ERR_NONFINITE: i32 = 6;
/// Filesystem failure.
pub const FMDS_ERR_IO: i32 = 7;
/// Malformed JSON or CSV; the message names the offending field.
pub const FMDS_ERR_PARSE: i32 = 8;
/// A panic was caught at the boundary (library bug; please report).
pub const FMDS_ERR_PANIC: i32 = 9;

/// Opaque pairwise-dissimilarity matrix.
pub struct FmdsMatrix {
    inner: DissimilarityMatrix,
}

/// Opaque Euclidean embedding (points, eigenvalues, requested dimension).
pub struct FmdsEmbedding {
    inner: Embedding,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn record(code: i32, message: &str) -> i32 {
    let sanitized = CString::new(message.replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("fmds: unrepresentable error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
    code
}

fn record_error(e: &Error) -> i32 {
    let code = match e {
        Error::InvalidArgument(_) => FMDS_ERR_INVALID,
        Error::DomainError(_) => FMDS_ERR_DOMAIN,
        Error::Unsupported(_) => FMDS_ERR_UNSUPPORTED,
        Error::Numeric(_) => FMDS_ERR_NUMERIC,
        Error::Disconnected { .. } => FMDS_ERR_DISCONNECTED,
        Error::NonFiniteEntry { .. } => FMDS_ERR_NONFINITE,
        Error::Io(_) => FMDS_ERR_IO,
        Error::Parse(_) => FMDS_ERR_PARSE,
    };
    record(code, &e.to_string())
}

fn invalid(message: &str) -> i32 {
    record(FMDS_ERR_INVALID, message)
}

/// Run `f` with panics converted to `FMDS_ERR_PANIC`.
fn guarded(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => record(FMDS_ERR_PANIC, "fmds: internal panic caught at the C boundary"),
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string or null.
unsafe fn utf8_arg<'a>(text: *const c_char, name: &str) -> Result<&'a str, i32> {
    if text.is_null() {
        return Err(invalid(&format!("{name} must not be null")));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| invalid(&format!("{name} must be valid UTF-8")))
}

// ---------------------------------------------------------------------------
// Library metadata and errors

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fmds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or null if none.
/// Valid until the next failing fmds call on the same thread.
#[no_mangle]
pub extern "C" fn fmds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        if msg.as_bytes().is_empty() {
            std::ptr::null()
        } else {
            msg.as_ptr()
        }
    })
}

// ---------------------------------------------------------------------------
// Matrix construction and access

/// Build a matrix from a row-major `n x n` buffer. The buffer must be
/// symmetric with a zero diagonal and nonnegative entries (`inf` is allowed,
/// NaN is not); points are labeled "0" .. "n-1".
///
/// # Safety
/// `values` must point to `n * n` readable doubles; `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_from_data(
    n: usize,
    values: *const f64,
    out: *mut *mut FmdsMatrix,
) -> i32 {
    guarded(|| {
        if values.is_null() || out.is_null() {
            return invalid("fmds_matrix_from_data: values and out must not be null");
        }
        let data = std::slice::from_raw_parts(values, n * n);
        let labels = (0..n).map(|i| i.to_string()).collect();
        let matrix = nalgebra::DMatrix::from_row_slice(n, n, data);
        match DissimilarityMatrix::new(labels, matrix) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(FmdsMatrix { inner: m }));
                FMDS_OK
            }
            Err(e) => record_error(&e),
        }
    })
}

/// Run the distance stage of a JSON experiment config (same schema as
/// `fmds distances --config`).
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` must be a valid destination.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_from_config_json(
    config_json: *const c_char,
    out: *mut *mut FmdsMatrix,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return invalid("fmds_matrix_from_config_json: out must not be null");
        }
        let text = match utf8_arg(config_json, "config_json") {
            Ok(t) => t,
            Err(code) => return code,
        };
        let result = ExperimentConfig::from_json(text).and_then(|cfg| run_distances(&cfg));
        match result {
            Ok(m) => {
                *out = Box::into_raw(Box::new(FmdsMatrix { inner: m }));
                FMDS_OK
            }
            Err(e) => record_error(&e),
        }
    })
}

/// Load a matrix saved by `fmds_matrix_save_csv` or the CLI.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid destination.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_load_csv(
    path: *const c_char,
    out: *mut *mut FmdsMatrix,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return invalid("fmds_matrix_load_csv: out must not be null");
        }
        let path = match utf8_arg(path, "path") {
            Ok(p) => p,
            Err(code) => return code,
        };
        match fmds::io::load_matrix_csv(path) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(FmdsMatrix { inner: m }));
                FMDS_OK
            }
            Err(e) => record_error(&e),
        }
    })
}

/// Save a matrix as labeled CSV.
///
/// # Safety
/// `matrix` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_save_csv(
    matrix: *const FmdsMatrix,
    path: *const c_char,
) -> i32 {
    guarded(|| {
        let Some(m) = matrix.as_ref() else {
            return invalid("fmds_matrix_save_csv: matrix must not be null");
        };
        let path = match utf8_arg(path, "path") {
            Ok(p) => p,
            Err(code) => return code,
        };
        match fmds::io::save_matrix_csv(path, &m.inner) {
            Ok(()) => FMDS_OK,
            Err(e) => record_error(&e),
        }
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_size(matrix: *const FmdsMatrix) -> usize {
    match matrix.as_ref() {
        Some(m) => m.inner.n(),
        None => 0,
    }
}

/// Read one entry.
///
/// # Safety
/// `matrix` must be a live handle; `out` a valid destination for one double.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_get(
    matrix: *const FmdsMatrix,
    i: usize,
    j: usize,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let Some(m) = matrix.as_ref() else {
            return invalid("fmds_matrix_get: matrix must not be null");
        };
        if out.is_null() {
            return invalid("fmds_matrix_get: out must not be null");
        }
        let n = m.inner.n();
        if i >= n || j >= n {
            return invalid(&format!("fmds_matrix_get: index ({i}, {j}) out of range for n = {n}"));
        }
        *out = m.inner.values[(i, j)];
        FMDS_OK
    })
}

/// Covering radius: the largest distance from any point to its nearest
/// other point. Needs at least two points.
///
/// # Safety
/// `matrix` must be a live handle; `out` a valid destination for one double.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_covering_radius(
    matrix: *const FmdsMatrix,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let Some(m) = matrix.as_ref() else {
            return invalid("fmds_matrix_covering_radius: matrix must not be null");
        };
        if out.is_null() {
            return invalid("fmds_matrix_covering_radius: out must not be null");
        }
        match m.inner.covering_radius() {
            Ok(r) => {
                *out = r;
                FMDS_OK
            }
            Err(e) => record_error(&e),
        }
    })
}

/// Schoenberg test: is the matrix isometrically embeddable in Euclidean
/// space? Writes 1 or 0 to `out_embeddable` and the most negative
/// double-centered eigenvalue to `out_min_eigenvalue` (either may be null).
///
/// # Safety
/// `matrix` must be a live handle; non-null out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_embeddable(
    matrix: *const FmdsMatrix,
    out_embeddable: *mut i32,
    out_min_eigenvalue: *mut f64,
) -> i32 {
    guarded(|| {
        let Some(m) = matrix.as_ref() else {
            return invalid("fmds_matrix_embeddable: matrix must not be null");
        };
        match schoenberg_check(&m.inner) {
            Ok(report) => {
                if !out_embeddable.is_null() {
                    *out_embeddable = i32::from(report.embeddable);
                }
                if !out_min_eigenvalue.is_null() {
                    *out_min_eigenvalue = report.min_eigenvalue;
                }
                FMDS_OK
            }
            Err(e) => record_error(&e),
        }
    })
}

/// Release a matrix handle. Null is a no-op.
///
/// # Safety
/// `matrix` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fmds_matrix_free(matrix: *mut FmdsMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

// ---------------------------------------------------------------------------
// Embeddings

fn embed_with(
    matrix: *const FmdsMatrix,
    out: *mut *mut FmdsEmbedding,
    config: EmbedConfig,
    name: &str,
) -> i32 {
    // Safety: contract of the public wrappers.
    let Some(m) = (unsafe { matrix.as_ref() }) else {
        return invalid(&format!("{name}: matrix must not be null"));
    };
    if out.is_null() {
        return invalid(&format!("{name}: out must not be null"));
    }
    match run_embed(&m.inner, &config) {
        Ok(outcome) => {
            unsafe {
                *out = Box::into_raw(Box::new(FmdsEmbedding {
                    inner: outcome.embedding,
                }));
            }
            FMDS_OK
        }
        Err(e) => record_error(&e),
    }
}

/// Classical scaling of the matrix into `dim` dimensions.
///
/// # Safety
/// `matrix` must be a live handle; `out` a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fmds_classical_scaling(
    matrix: *const FmdsMatrix,
    dim: usize,
    out: *mut *mut FmdsEmbedding,
) -> i32 {
    guarded(|| {
        embed_with(
            matrix,
            out,
            EmbedConfig {
                method: EmbedMethod::ClassicalScaling,
                dim,
            },
            "fmds_classical_scaling",
        )
    })
}

fn isomap_policy(largest_component: i32) -> DisconnectedPolicy {
    if largest_component != 0 {
        DisconnectedPolicy::LargestComponent
    } else {
        DisconnectedPolicy::Fail
    }
}

/// Isomap with a radius neighborhood graph. When the graph is disconnected,
/// `largest_component = 0` fails with `FMDS_ERR_DISCONNECTED` and nonzero
/// embeds the largest component (point count via `fmds_embedding_size`).
///
/// # Safety
/// `matrix` must be a live handle; `out` a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fmds_isomap_radius(
    matrix: *const FmdsMatrix,
    radius: f64,
    dim: usize,
    largest_component: i32,
    out: *mut *mut FmdsEmbedding,
) -> i32 {
    guarded(|| {
        embed_with(
            matrix,
            out,
            EmbedConfig {
                method: EmbedMethod::Isomap {
                    rule: NeighborRule::Radius(radius),
                    policy: isomap_policy(largest_component),
                },
                dim,
            },
            "fmds_isomap_radius",
        )
    })
}

/// Isomap with a symmetrized k-nearest-neighbor graph; see
/// [`fmds_isomap_radius`] for the disconnection policy.
///
/// # Safety
/// `matrix` must be a live handle; `out` a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fmds_isomap_knn(
    matrix: *const FmdsMatrix,
    k: usize,
    dim: usize,
    largest_component: i32,
    out: *mut *mut FmdsEmbedding,
) -> i32 {
    guarded(|| {
        embed_with(
            matrix,
            out,
            EmbedConfig {
                method: EmbedMethod::Isomap {
                    rule: NeighborRule::KNearest(k),
                    policy: isomap_policy(largest_component),
                },
                dim,
            },
            "fmds_isomap_knn",
        )
    })
}

/// Number of embedded points, or 0 for a null handle.
///
/// # Safety
/// `embedding` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmds_embedding_size(embedding: *const FmdsEmbedding) -> usize {
    match embedding.as_ref() {
        Some(e) => e.inner.n(),
        None => 0,
    }
}

/// Embedding dimension, or 0 for a null handle.
///
/// # Safety
/// `embedding` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmds_embedding_dim(embedding: *const FmdsEmbedding) -> usize {
    match embedding.as_ref() {
        Some(e) => e.inner.dim(),
        None => 0,
    }
}

/// Copy the coordinates, point-major, into a caller buffer of exactly
/// `size * dim` doubles (row i holds point i).
///
/// # Safety
/// `embedding` must be a live handle; `buffer` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fmds_embedding_coords(
    embedding: *const FmdsEmbedding,
    buffer: *mut f64,
    len: usize,
) -> i32 {
    guarded(|| {
        let Some(e) = embedding.as_ref() else {
            return invalid("fmds_embedding_coords: embedding must not be null");
        };
        if buffer.is_null() {
            return invalid("fmds_embedding_coords: buffer must not be null");
        }
        let (n, d) = (e.inner.n(), e.inner.dim());
        if len != n * d {
            return invalid(&format!(
                "fmds_embedding_coords: buffer holds {len} doubles but the embedding is {n} x {d}"
            ));
        }
        let out = std::slice::from_raw_parts_mut(buffer, len);
        for i in 0..n {
            for j in 0..d {
                out[i * d + j] = e.inner.coords[(i, j)];
            }
        }
        FMDS_OK
    })
}

/// Copy the double-centered eigenvalues (descending; length = point count)
/// into a caller buffer of exactly `size` doubles.
///
/// # Safety
/// `embedding` must be a live handle; `buffer` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fmds_embedding_eigenvalues(
    embedding: *const FmdsEmbedding,
    buffer: *mut f64,
    len: usize,
) -> i32 {
    guarded(|| {
        let Some(e) = embedding.as_ref() else {
            return invalid("fmds_embedding_eigenvalues: embedding must not be null");
        };
        if buffer.is_null() {
            return invalid("fmds_embedding_eigenvalues: buffer must not be null");
        }
        let eigs = &e.inner.eigenvalues;
        if len != eigs.len() {
            return invalid(&format!(
                "fmds_embedding_eigenvalues: buffer holds {len} doubles but there are {} eigenvalues",
                eigs.len()
            ));
        }
        std::slice::from_raw_parts_mut(buffer, len).copy_from_slice(eigs);
        FMDS_OK
    })
}

/// Normalized stress of the embedding against a matrix of the same size.
///
/// # Safety
/// `embedding` and `matrix` must be live handles; `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn fmds_embedding_stress(
    embedding: *const FmdsEmbedding,
    matrix: *const FmdsMatrix,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let Some(e) = embedding.as_ref() else {
            return invalid("fmds_embedding_stress: embedding must not be null");
        };
        let Some(m) = matrix.as_ref() else {
            return invalid("fmds_embedding_stress: matrix must not be null");
        };
        if out.is_null() {
            return invalid("fmds_embedding_stress: out must not be null");
        }
        match stress(&e.inner.coords, &m.inner) {
            Ok(s) => {
                *out = s;
                FMDS_OK
            }
            Err(e) => record_error(&e),
        }
    })
}

/// Release an embedding handle. Null is a no-op.
///
/// # Safety
/// `embedding` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fmds_embedding_free(embedding: *mut FmdsEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn cstring(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        let ptr = fmds_last_error_message();
        assert!(!ptr.is_null(), "expected an error message");
        unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string()
    }

    const CONFIG: &str = r#"{
        "seed": 4,
        "model": {
            "family": {"kind": "normal_location", "params": {"dim": 1}},
            "thetas": {"kind": "grid", "lo": [0.0], "hi": [2.0], "counts": [6]}
        },
        "dissimilarity": {"metric": "wasserstein2", "route": "auto"},
        "mode": {"mode": "population"}
    }"#;

    #[test]
    fn version_is_static_and_matches_cargo() {
        let v = unsafe { CStr::from_ptr(fmds_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn config_json_to_classical_scaling_roundtrip() {
        let json = cstring(CONFIG);
        let mut matrix: *mut FmdsMatrix = ptr::null_mut();
        assert_eq!(
            unsafe { fmds_matrix_from_config_json(json.as_ptr(), &mut matrix) },
            FMDS_OK
        );
        assert_eq!(unsafe { fmds_matrix_size(matrix) }, 6);

        // W2 between unit normals is the location gap; grid spacing is 0.4.
        let mut d = f64::NAN;
        assert_eq!(unsafe { fmds_matrix_get(matrix, 0, 5, &mut d) }, FMDS_OK);
        assert!((d - 2.0).abs() < 1e-12, "d(0, 5) = {d}");

        let mut cover = f64::NAN;
        assert_eq!(
            unsafe { fmds_matrix_covering_radius(matrix, &mut cover) },
            FMDS_OK
        );
        assert!((cover - 0.4).abs() < 1e-12, "covering radius {cover}");

        let mut embeddable = -1;
        let mut min_eig = f64::NAN;
        assert_eq!(
            unsafe { fmds_matrix_embeddable(matrix, &mut embeddable, &mut min_eig) },
            FMDS_OK
        );
        assert_eq!(embeddable, 1);

        let mut emb: *mut FmdsEmbedding = ptr::null_mut();
        assert_eq!(
            unsafe { fmds_classical_scaling(matrix, 1, &mut emb) },
            FMDS_OK
        );
        assert_eq!(unsafe { fmds_embedding_size(emb) }, 6);
        assert_eq!(unsafe { fmds_embedding_dim(emb) }, 1);

        let mut coords = vec![0.0; 6];
        assert_eq!(
            unsafe { fmds_embedding_coords(emb, coords.as_mut_ptr(), coords.len()) },
            FMDS_OK
        );
        // A line of equispaced points embeds exactly (up to sign and shift).
        let gaps: Vec<f64> = coords.windows(2).map(|w| w[1] - w[0]).collect();
        for g in &gaps {
            assert!((g.abs() - 0.4).abs() < 1e-9, "gap {g}");
        }

        let mut s = f64::NAN;
        assert_eq!(
            unsafe { fmds_embedding_stress(emb, matrix, &mut s) },
            FMDS_OK
        );
        assert!(s < 1e-9, "stress {s}");

        let mut eigs = vec![0.0; 6];
        assert_eq!(
            unsafe { fmds_embedding_eigenvalues(emb, eigs.as_mut_ptr(), eigs.len()) },
            FMDS_OK
        );
        assert!(eigs[0] > 0.0 && eigs[1].abs() < 1e-9 * eigs[0]);

        unsafe {
            fmds_embedding_free(emb);
            fmds_matrix_free(matrix);
        }
    }

    #[test]
    fn from_data_validates_and_isomap_honors_policy() {
        // Two clusters 10 apart; radius 1.5 disconnects them.
        let n = 4;
        let pts = [0.0f64, 1.0, 10.0, 11.0];
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = (pts[i] - pts[j]).abs();
            }
        }
        let mut matrix: *mut FmdsMatrix = ptr::null_mut();
        assert_eq!(
            unsafe { fmds_matrix_from_data(n, values.as_ptr(), &mut matrix) },
            FMDS_OK
        );

        let mut emb: *mut FmdsEmbedding = ptr::null_mut();
        let code = unsafe { fmds_isomap_radius(matrix, 1.5, 1, 0, &mut emb) };
        assert_eq!(code, FMDS_ERR_DISCONNECTED);
        assert!(emb.is_null());
        assert!(last_error().contains("disconnected"));

        assert_eq!(
            unsafe { fmds_isomap_radius(matrix, 1.5, 1, 1, &mut emb) },
            FMDS_OK
        );
        assert_eq!(unsafe { fmds_embedding_size(emb) }, 2);
        unsafe { fmds_embedding_free(emb) };

        // Asymmetric data is rejected up front.
        values[1] = 5.0;
        let mut bad: *mut FmdsMatrix = ptr::null_mut();
        let code = unsafe { fmds_matrix_from_data(n, values.as_ptr(), &mut bad) };
        assert_eq!(code, FMDS_ERR_INVALID);
        assert!(bad.is_null());

        unsafe { fmds_matrix_free(matrix) };
    }

    #[test]
    fn csv_roundtrip_preserves_entries() {
        let json = cstring(CONFIG);
        let mut matrix: *mut FmdsMatrix = ptr::null_mut();
        assert_eq!(
            unsafe { fmds_matrix_from_config_json(json.as_ptr(), &mut matrix) },
            FMDS_OK
        );
        let dir = tempfile::tempdir().unwrap();
        let path = cstring(dir.path().join("m.csv").to_str().unwrap());
        assert_eq!(
            unsafe { fmds_matrix_save_csv(matrix, path.as_ptr()) },
            FMDS_OK
        );

        let mut loaded: *mut FmdsMatrix = ptr::null_mut();
        assert_eq!(
            unsafe { fmds_matrix_load_csv(path.as_ptr(), &mut loaded) },
            FMDS_OK
        );
        let (mut a, mut b) = (0.0, 0.0);
        unsafe {
            assert_eq!(fmds_matrix_get(matrix, 1, 4, &mut a), FMDS_OK);
            assert_eq!(fmds_matrix_get(loaded, 1, 4, &mut b), FMDS_OK);
            fmds_matrix_free(matrix);
            fmds_matrix_free(loaded);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn errors_carry_codes_and_messages() {
        // Null pointers.
        assert_eq!(
            unsafe { fmds_matrix_from_data(2, ptr::null(), ptr::null_mut()) },
            FMDS_ERR_INVALID
        );
        assert!(last_error().contains("must not be null"));
        assert_eq!(unsafe { fmds_matrix_size(ptr::null()) }, 0);
        unsafe {
            fmds_matrix_free(ptr::null_mut());
            fmds_embedding_free(ptr::null_mut());
        }

        // Parse errors name the offending field.
        let bad = cstring(r#"{"seed": "not a number"}"#);
        let mut matrix: *mut FmdsMatrix = ptr::null_mut();
        assert_eq!(
            unsafe { fmds_matrix_from_config_json(bad.as_ptr(), &mut matrix) },
            FMDS_ERR_PARSE
        );
        assert!(last_error().contains("seed"), "message: {}", last_error());

        // Out-of-range index.
        let json = cstring(CONFIG);
        assert_eq!(
            unsafe { fmds_matrix_from_config_json(json.as_ptr(), &mut matrix) },
            FMDS_OK
        );
        let mut d = 0.0;
        assert_eq!(
            unsafe { fmds_matrix_get(matrix, 0, 99, &mut d) },
            FMDS_ERR_INVALID
        );
        assert!(last_error().contains("out of range"));

        // Wrong buffer length.
        let mut emb: *mut FmdsEmbedding = ptr::null_mut();
        assert_eq!(
            unsafe { fmds_classical_scaling(matrix, 2, &mut emb) },
            FMDS_OK
        );
        let mut too_short = vec![0.0; 3];
        assert_eq!(
            unsafe { fmds_embedding_coords(emb, too_short.as_mut_ptr(), 3) },
            FMDS_ERR_INVALID
        );
        unsafe {
            fmds_embedding_free(emb);
            fmds_matrix_free(matrix);
        }
    }

    #[test]
    fn generated_header_declares_the_surface() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fmds.h");
        let text = std::fs::read_to_string(&header)
            .unwrap_or_else(|e| panic!("missing {}: {e}", header.display()));
        for needle in [
            "typedef struct FmdsMatrix FmdsMatrix;",
            "typedef struct FmdsEmbedding FmdsEmbedding;",
            "fmds_classical_scaling",
            "fmds_isomap_radius",
            "fmds_last_error_message",
            "#define FMDS_ERR_DISCONNECTED 5",
        ] {
            assert!(text.contains(needle), "header lacks {needle:?}");
        }
    }
}
