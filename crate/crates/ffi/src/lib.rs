//! C ABI for `urban-lra`.
//!
//! Objects cross the boundary as opaque handles created by `ulra_*_new` /
//! `ulra_*_read_*` functions and released by the matching `ulra_*_free`.
//! Every fallible function returns a [`UlraStatus`]; on failure a
//! description is available from [`ulra_last_error`] on the same thread.
//! Matrices are passed as row-major `double` arrays. Array outputs are
//! written to caller-provided buffers whose length is checked.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use urban_lra::clustering::{self, ClusteringConfig};
use urban_lra::lra::{self, SvdFactors};
use urban_lra::matrix::{RttdMatrix, N_TTD};
use urban_lra::urbanform;
use urban_lra::ustas::{self, JointEmbedding};
use urban_lra::{io, Error, Mat};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UlraStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Io = 4,
    Schema = 5,
    NonFinite = 6,
    NoConvergence = 7,
    RankOutOfRange = 8,
    Undefined = 9,
    NoRankSatisfies = 10,
    CoincidentCenters = 11,
    DegenerateEllipse = 12,
    Panic = 13,
}

impl From<&Error> for UlraStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } | Error::Stream(_) => UlraStatus::Io,
            Error::Schema(_) | Error::Csv(_) | Error::Json(_) => UlraStatus::Schema,
            Error::InvalidArgument(_) | Error::BandOverflow { .. } => UlraStatus::InvalidArgument,
            Error::NonFinite { .. } => UlraStatus::NonFinite,
            Error::NoConvergence { .. } => UlraStatus::NoConvergence,
            Error::RankOutOfRange { .. } => UlraStatus::RankOutOfRange,
            Error::Undefined(_) => UlraStatus::Undefined,
            Error::NoRankSatisfies { .. } => UlraStatus::NoRankSatisfies,
            Error::CoincidentCenters(..) => UlraStatus::CoincidentCenters,
            Error::DegenerateEllipse(_) => UlraStatus::DegenerateEllipse,
        }
    }
}

/// Region × 144 count matrix with its region ids.
pub struct UlraMatrix {
    inner: RttdMatrix,
}

/// Full thin singular value decomposition of a matrix.
pub struct UlraSvd {
    inner: SvdFactors,
}

/// Rank-r joint embedding of regions and demand-hour columns.
pub struct UlraEmbedding {
    inner: JointEmbedding,
}

/// Standard deviational ellipse. Rotation is the major axis in degrees
/// clockwise from north, in [0, 180).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UlraEllipse {
    pub center_x: f64,
    pub center_y: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub rotation_deg: f64,
    pub axis_ratio: f64,
}

/// Number of matrix columns: 6 demand categories × 24 hours.
pub const ULRA_N_TTD: usize = 144;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

struct Failure(UlraStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(UlraStatus::from(&e), e.to_string())
    }
}

fn fail(status: UlraStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, converting errors and panics to a status and recording the
/// message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UlraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UlraStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("panic: {msg}"));
            UlraStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(UlraStatus::NullPointer, format!("{name} is null")))
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(UlraStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, needed: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len < needed {
        return Err(fail(
            UlraStatus::BufferTooSmall,
            format!("{name} holds {len} values, {needed} needed"),
        ));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(UlraStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, needed))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(UlraStatus::NullPointer, format!("{name} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(fail(UlraStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(UlraStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn points_mat(points: &[f64], m: usize, dim: usize) -> Mat {
    Mat::from_row_major(m, dim, points.to_vec())
}

fn copy_mat(m: &Mat, out: &mut [f64]) {
    out.copy_from_slice(m.as_slice());
}

/// Message of the last failure on this thread, or NULL if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ulra_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ulra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a matrix from `m` strictly increasing region ids and `m × 144`
/// row-major nonnegative integral counts.
///
/// # Safety
/// `region_ids` must point to `m` values and `counts` to `m * 144` values;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ulra_matrix_new(
    region_ids: *const usize,
    counts: *const f64,
    m: usize,
    out: *mut *mut UlraMatrix,
) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ids = input(region_ids, m, "region_ids")?.to_vec();
        let counts = input(counts, m * N_TTD, "counts")?;
        let inner = RttdMatrix::new(ids, Mat::from_row_major(m, N_TTD, counts.to_vec()))?;
        *out = Box::into_raw(Box::new(UlraMatrix { inner }));
        Ok(())
    })
}

/// Reads a matrix CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ulra_matrix_read_csv(path: *const c_char, out: *mut *mut UlraMatrix) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = io::read_matrix(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(UlraMatrix { inner }));
        Ok(())
    })
}

/// Writes a matrix CSV file.
///
/// # Safety
/// `matrix` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ulra_matrix_write_csv(matrix: *const UlraMatrix, path: *const c_char) -> UlraStatus {
    guard(|| {
        let matrix = deref(matrix, "matrix")?;
        io::write_matrix(&path_arg(path)?, &matrix.inner)?;
        Ok(())
    })
}

/// Number of regions (rows); 0 for NULL.
///
/// # Safety
/// `matrix` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ulra_matrix_rows(matrix: *const UlraMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.inner.m())
}

/// Copies the region ids into `out` (at least `ulra_matrix_rows` entries).
///
/// # Safety
/// `matrix` must be a live handle and `out` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ulra_matrix_region_ids(matrix: *const UlraMatrix, out: *mut usize, len: usize) -> UlraStatus {
    guard(|| {
        let matrix = deref(matrix, "matrix")?;
        let ids = &matrix.inner.region_ids;
        output(out, len, ids.len(), "out")?.copy_from_slice(ids);
        Ok(())
    })
}

/// Releases a matrix; NULL is ignored.
///
/// # Safety
/// `matrix` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ulra_matrix_free(matrix: *mut UlraMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Decomposes a matrix.
///
/// # Safety
/// `matrix` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ulra_svd_new(matrix: *const UlraMatrix, out: *mut *mut UlraSvd) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let matrix = deref(matrix, "matrix")?;
        let inner = lra::svd(&matrix.inner.values)?;
        *out = Box::into_raw(Box::new(UlraSvd { inner }));
        Ok(())
    })
}

/// Number of singular values, `min(rows, 144)`; 0 for NULL.
///
/// # Safety
/// `svd` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ulra_svd_len(svd: *const UlraSvd) -> usize {
    svd.as_ref().map_or(0, |s| s.inner.p())
}

/// Copies the singular values, in nonincreasing order, into `out`.
///
/// # Safety
/// `svd` must be a live handle and `out` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ulra_svd_singular_values(svd: *const UlraSvd, out: *mut f64, len: usize) -> UlraStatus {
    guard(|| {
        let s = &deref(svd, "svd")?.inner.s;
        output(out, len, s.len(), "out")?.copy_from_slice(s);
        Ok(())
    })
}

/// Share of squared singular-value mass in the leading `r` values.
///
/// # Safety
/// `svd` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ulra_energy_ratio(svd: *const UlraSvd, r: usize, out: *mut f64) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = lra::energy_ratio(&deref(svd, "svd")?.inner.s, r)?;
        Ok(())
    })
}

/// Relative Frobenius error of the rank-`r` reconstruction of `matrix`
/// from its decomposition `svd`.
///
/// # Safety
/// `matrix` and `svd` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ulra_reconstruction_error(
    matrix: *const UlraMatrix,
    svd: *const UlraSvd,
    r: usize,
    out: *mut f64,
) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let matrix = deref(matrix, "matrix")?;
        let svd = deref(svd, "svd")?;
        *out = lra::reconstruction_error_with(&matrix.inner.values, &svd.inner, r)?;
        Ok(())
    })
}

/// Smallest rank in `1..=r_max` whose energy is at least `energy` and
/// whose error is at most `error`.
///
/// # Safety
/// `matrix` and `svd` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ulra_suggest_rank(
    matrix: *const UlraMatrix,
    svd: *const UlraSvd,
    r_max: usize,
    energy: f64,
    error: f64,
    out: *mut usize,
) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let matrix = deref(matrix, "matrix")?;
        let svd = deref(svd, "svd")?;
        let report = lra::rank_scan_with(&matrix.inner.values, &svd.inner, r_max, false)?;
        *out = lra::suggest_rank(&report, energy, error)?;
        Ok(())
    })
}

/// Releases a decomposition; NULL is ignored.
///
/// # Safety
/// `svd` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ulra_svd_free(svd: *mut UlraSvd) {
    if !svd.is_null() {
        drop(Box::from_raw(svd));
    }
}

/// Rank-`r` joint embedding from a decomposition.
///
/// # Safety
/// `svd` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ulra_embedding_new(svd: *const UlraSvd, r: usize, out: *mut *mut UlraEmbedding) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let t = deref(svd, "svd")?.inner.truncate(r)?;
        let inner = ustas::joint_embedding(&t)?;
        *out = Box::into_raw(Box::new(UlraEmbedding { inner }));
        Ok(())
    })
}

/// Embedding rank; 0 for NULL.
///
/// # Safety
/// `embedding` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ulra_embedding_rank(embedding: *const UlraEmbedding) -> usize {
    embedding.as_ref().map_or(0, |e| e.inner.rank())
}

/// Copies the `rows × rank` region coordinates, row-major.
///
/// # Safety
/// `embedding` must be a live handle and `out` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ulra_embedding_region_coords(
    embedding: *const UlraEmbedding,
    out: *mut f64,
    len: usize,
) -> UlraStatus {
    guard(|| {
        let c = &deref(embedding, "embedding")?.inner.region_coords;
        copy_mat(c, output(out, len, c.nrows() * c.ncols(), "out")?);
        Ok(())
    })
}

/// Copies the `144 × rank` demand-hour coordinates, row-major.
///
/// # Safety
/// `embedding` must be a live handle and `out` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ulra_embedding_ttd_coords(
    embedding: *const UlraEmbedding,
    out: *mut f64,
    len: usize,
) -> UlraStatus {
    guard(|| {
        let c = &deref(embedding, "embedding")?.inner.ttd_coords;
        copy_mat(c, output(out, len, c.nrows() * c.ncols(), "out")?);
        Ok(())
    })
}

/// Releases an embedding; NULL is ignored.
///
/// # Safety
/// `embedding` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ulra_embedding_free(embedding: *mut UlraEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}

/// Spherical K-means over `m` points of dimension `dim` (row-major).
/// Writes one label per point and the final inertia (sum of cosine
/// distances). Results depend only on the inputs and `seed`.
///
/// # Safety
/// `points` must hold `m * dim` values, `labels` point to `labels_len`
/// writable values and `inertia` be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn ulra_kmeans(
    points: *const f64,
    m: usize,
    dim: usize,
    k: usize,
    seed: u64,
    restarts: usize,
    labels: *mut usize,
    labels_len: usize,
    inertia: *mut f64,
) -> UlraStatus {
    guard(|| {
        let pts = points_mat(input(points, m * dim, "points")?, m, dim);
        let labels = output(labels, labels_len, m, "labels")?;
        let config = ClusteringConfig {
            n_restarts: restarts,
            ..ClusteringConfig::new(k, seed)
        };
        let result = clustering::kmeans(&pts, &config)?;
        labels.copy_from_slice(&result.labels);
        if let Some(inertia) = inertia.as_mut() {
            *inertia = result.inertia;
        }
        Ok(())
    })
}

/// Dunn, Davies–Bouldin and Silhouette indices (cosine distance) of a
/// labelling. Any of the outputs may be NULL.
///
/// # Safety
/// `points` must hold `m * dim` values and `labels` `m` values.
#[no_mangle]
pub unsafe extern "C" fn ulra_validity(
    points: *const f64,
    m: usize,
    dim: usize,
    labels: *const usize,
    dunn: *mut f64,
    davies_bouldin: *mut f64,
    silhouette: *mut f64,
) -> UlraStatus {
    guard(|| {
        let pts = points_mat(input(points, m * dim, "points")?, m, dim);
        let labels = input(labels, m, "labels")?;
        if let Some(out) = dunn.as_mut() {
            *out = clustering::dunn_index(&pts, labels)?;
        }
        if let Some(out) = davies_bouldin.as_mut() {
            *out = clustering::davies_bouldin(&pts, labels)?;
        }
        if let Some(out) = silhouette.as_mut() {
            *out = clustering::silhouette(&pts, labels)?;
        }
        Ok(())
    })
}

/// Weighted standard deviational ellipse of `n` points.
///
/// # Safety
/// `xs`, `ys` and `weights` must each hold `n` values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn ulra_deviational_ellipse(
    xs: *const f64,
    ys: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut UlraEllipse,
) -> UlraStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let xs = input(xs, n, "xs")?;
        let ys = input(ys, n, "ys")?;
        let ws = input(weights, n, "weights")?;
        let pts: Vec<(f64, f64, f64)> = (0..n).map(|i| (xs[i], ys[i], ws[i])).collect();
        let e = urbanform::deviational_ellipse(&pts)?;
        *out = UlraEllipse {
            center_x: e.center_x,
            center_y: e.center_y,
            semi_major: e.semi_major,
            semi_minor: e.semi_minor,
            rotation_deg: e.rotation_deg,
            axis_ratio: e.axis_ratio,
        };
        Ok(())
    })
}
