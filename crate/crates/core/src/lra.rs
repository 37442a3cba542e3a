//! Singular value decomposition, rank-r truncation and the rank-selection
//! diagnostics (spectrum, reconstruction error, energy ratio).
//!
//! The decomposition is a one-sided (Hestenes) Jacobi SVD: columns of the
//! working matrix are rotated pairwise until mutually orthogonal, at which
//! point their norms are the singular values. It is deterministic, needs no
//! workspace beyond two copies of the input and gives singular vectors that
//! are orthonormal to working precision, which is what the downstream
//! embedding relies on.
//!
//! "Energy" is squared singular-value mass, so that
//! `energy_ratio(r) + reconstruction_error(r)^2 = 1`.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Mat};
use crate::matrix::{demand_profiles, N_TTD};

const MAX_SWEEPS: usize = 80;

/// Full thin SVD `M = U · diag(S) · Vᵀ` with `p = min(m, n)` columns.
///
/// Sign convention: in every column of `U` the entry of largest magnitude
/// (first one on ties) is nonnegative; the matching column of `V` is flipped
/// with it.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

impl SvdFactors {
    pub fn p(&self) -> usize {
        self.s.len()
    }

    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// Number of strictly positive singular values.
    pub fn numerical_rank(&self) -> usize {
        self.s.iter().filter(|&&s| s > 0.0).count()
    }

    pub fn truncate(&self, r: usize) -> Result<TruncatedLra> {
        truncate(self, r)
    }
}

/// Leading `r` singular triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedLra {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

impl TruncatedLra {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Mat {
        reconstruct(self)
    }
}

pub fn svd(m: &Mat) -> Result<SvdFactors> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "svd needs a nonempty matrix, got {rows}x{cols}"
        )));
    }
    for i in 0..rows {
        for (j, v) in m.row(i).iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }

    if rows >= cols {
        let (u, s, v) = jacobi_tall(m)?;
        Ok(normalize_signs(u, s, v))
    } else {
        // Mᵀ = U'ΣV'ᵀ  =>  M = V'ΣU'ᵀ
        let (u_t, s, v_t) = jacobi_tall(&m.transpose())?;
        Ok(normalize_signs(v_t, s, u_t))
    }
}

/// One-sided Jacobi on a matrix with at least as many rows as columns.
/// Returns `(U, S, V)` sorted by nonincreasing singular value.
fn jacobi_tall(m: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = (rows as f64).sqrt() * f64::EPSILON;
    // columns this small are rounding noise and count as exact zeros
    let negligible = rows as f64 * f64::EPSILON * m.frobenius_norm();
    let negligible_sq = negligible * negligible;

    let mut converged = cols < 2;
    let mut residual = 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        residual = 0.0_f64;
        let mut rotated = false;
        for p in 0..cols - 1 {
            for q in p + 1..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                if alpha <= negligible_sq || beta <= negligible_sq {
                    continue;
                }
                let gamma = dot(&a[p], &a[q]);
                let off = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(off);
                if off <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps, residual });
    }

    let sigma: Vec<f64> = a
        .iter()
        .map(|col| {
            let s = norm2(col);
            if s <= negligible {
                0.0
            } else {
                s
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    // stable: ties keep decomposition order
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(cols);
    let mut s_sorted = Vec::with_capacity(cols);
    let mut v_sorted = Mat::zeros(cols, cols);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[j];
        s_sorted.push(s);
        u_cols.push((s > 0.0).then(|| a[j].iter().map(|x| x / s).collect()));
        for (i, &vij) in v[j].iter().enumerate() {
            v_sorted[(i, k)] = vij;
        }
    }
    let u = complete_orthonormal(rows, u_cols);
    Ok((u, s_sorted, v_sorted))
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills missing columns (zero singular values) with unit vectors orthogonal
/// to everything else, via twice-iterated Gram–Schmidt on the standard basis.
fn complete_orthonormal(rows: usize, cols: Vec<Option<Vec<f64>>>) -> Mat {
    let mut basis: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    let mut candidate = 0;
    let filled: Vec<Vec<f64>> = cols
        .into_iter()
        .map(|c| match c {
            Some(c) => c,
            None => loop {
                assert!(candidate < rows, "ran out of basis candidates");
                let mut e = vec![0.0; rows];
                e[candidate] = 1.0;
                candidate += 1;
                for _ in 0..2 {
                    for b in &basis {
                        let proj = dot(&e, b);
                        for (x, y) in e.iter_mut().zip(b) {
                            *x -= proj * y;
                        }
                    }
                }
                let nrm = norm2(&e);
                if nrm > 1e-3 {
                    e.iter_mut().for_each(|x| *x /= nrm);
                    basis.push(e.clone());
                    break e;
                }
            },
        })
        .collect();
    Mat::from_fn(rows, filled.len(), |i, j| filled[j][i])
}

fn normalize_signs(mut u: Mat, s: Vec<f64>, mut v: Mat) -> SvdFactors {
    for j in 0..s.len() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..u.nrows() {
            let a = u[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if u[(best, j)] < 0.0 {
            for i in 0..u.nrows() {
                u[(i, j)] = -u[(i, j)];
            }
            for i in 0..v.nrows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
    SvdFactors { u, s, v }
}

pub fn truncate(f: &SvdFactors, r: usize) -> Result<TruncatedLra> {
    if r == 0 || r > f.p() {
        return Err(Error::RankOutOfRange { rank: r, max: f.p() });
    }
    Ok(TruncatedLra {
        u: Mat::from_fn(f.m(), r, |i, j| f.u[(i, j)]),
        s: f.s[..r].to_vec(),
        v: Mat::from_fn(f.n(), r, |i, j| f.v[(i, j)]),
    })
}

/// `Ur · diag(Sr) · Vrᵀ`.
pub fn reconstruct(t: &TruncatedLra) -> Mat {
    let scaled_u = Mat::from_fn(t.u.nrows(), t.rank(), |i, j| t.u[(i, j)] * t.s[j]);
    scaled_u.matmul(&t.v.transpose())
}

/// `‖M̂_r − M‖_F / ‖M‖_F`, computed from an explicit reconstruction.
pub fn reconstruction_error(m: &Mat, r: usize) -> Result<f64> {
    reconstruction_error_with(m, &svd(m)?, r)
}

/// As [`reconstruction_error`] with precomputed factors of `m`.
pub fn reconstruction_error_with(m: &Mat, factors: &SvdFactors, r: usize) -> Result<f64> {
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Undefined("reconstruction error of a zero matrix".into()));
    }
    let approx = reconstruct(&truncate(factors, r)?);
    Ok(approx.sub(m).frobenius_norm() / norm)
}

/// Share of squared singular-value mass in the leading `r` values.
pub fn energy_ratio(s: &[f64], r: usize) -> Result<f64> {
    if r == 0 || r > s.len() {
        return Err(Error::RankOutOfRange { rank: r, max: s.len() });
    }
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return Err(Error::Undefined("energy ratio of an all-zero spectrum".into()));
    }
    Ok(s[..r].iter().map(|x| x * x).sum::<f64>() / total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankScanRow {
    pub r: usize,
    pub error: f64,
    pub energy: f64,
    /// `‖profiles(M) − profiles(M̂_r)‖_F`, when requested.
    pub profile_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankScanReport {
    pub rows: Vec<RankScanRow>,
    pub singular_values: Vec<f64>,
}

pub fn rank_scan(m: &Mat, r_max: usize, with_profiles: bool) -> Result<RankScanReport> {
    let factors = svd(m)?;
    rank_scan_with(m, &factors, r_max, with_profiles)
}

/// Scan over `r = 1..=r_max` using one decomposition.
///
/// Errors use the tail-energy form `sqrt(Σ_{i>r} σᵢ² / Σ σᵢ²)`, which is
/// monotone in floating point; profile residuals come from the explicit
/// residual matrix, peeled one rank-1 term at a time.
pub fn rank_scan_with(m: &Mat, factors: &SvdFactors, r_max: usize, with_profiles: bool) -> Result<RankScanReport> {
    let p = factors.p();
    if r_max == 0 || r_max > p {
        return Err(Error::RankOutOfRange { rank: r_max, max: p });
    }
    if with_profiles && m.ncols() != N_TTD {
        return Err(Error::InvalidArgument(format!(
            "profile residuals need {N_TTD} columns, got {}",
            m.ncols()
        )));
    }
    let sq: Vec<f64> = factors.s.iter().map(|s| s * s).collect();
    let mut suffix = vec![0.0; p + 1];
    for i in (0..p).rev() {
        suffix[i] = suffix[i + 1] + sq[i];
    }
    let mut prefix = vec![0.0; p + 1];
    for i in 0..p {
        prefix[i + 1] = prefix[i] + sq[i];
    }
    let total = prefix[p];
    if total == 0.0 {
        return Err(Error::Undefined("rank scan of a zero matrix".into()));
    }

    let mut residual = with_profiles.then(|| m.clone());
    let mut rows = Vec::with_capacity(r_max);
    for r in 1..=r_max {
        let profile_residual = residual.as_mut().map(|res| {
            let k = r - 1;
            let s = factors.s[k];
            for i in 0..res.nrows() {
                let ui = factors.u[(i, k)] * s;
                if ui == 0.0 {
                    continue;
                }
                for (j, x) in res.row_mut(i).iter_mut().enumerate() {
                    *x -= ui * factors.v[(j, k)];
                }
            }
            let prof = demand_profiles(res);
            norm2(&prof.iter().flatten().copied().collect::<Vec<_>>())
        });
        rows.push(RankScanRow {
            r,
            error: (suffix[r] / total).sqrt(),
            energy: prefix[r] / total,
            profile_residual,
        });
    }
    Ok(RankScanReport {
        rows,
        singular_values: factors.s.clone(),
    })
}

pub const DEFAULT_ENERGY_THRESHOLD: f64 = 0.90;
pub const DEFAULT_ERROR_THRESHOLD: f64 = 0.05;

/// Smallest scanned `r` with `energy ≥ energy_threshold` and
/// `error ≤ error_threshold`.
pub fn suggest_rank(report: &RankScanReport, energy_threshold: f64, error_threshold: f64) -> Result<usize> {
    if !(energy_threshold > 0.0 && energy_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "energy threshold {energy_threshold} outside (0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&error_threshold) {
        return Err(Error::InvalidArgument(format!(
            "error threshold {error_threshold} outside [0, 1]"
        )));
    }
    let energy_ok = |row: &RankScanRow| row.energy >= energy_threshold;
    let error_ok = |row: &RankScanRow| row.error <= error_threshold;
    if let Some(row) = report.rows.iter().find(|row| energy_ok(row) && error_ok(row)) {
        return Ok(row.r);
    }
    let r_max = report.rows.len();
    let constraint = match (report.rows.iter().any(energy_ok), report.rows.iter().any(error_ok)) {
        (false, true) => "energy",
        (true, false) => "error",
        _ => "energy and error",
    };
    Err(Error::NoRankSatisfies { r_max, constraint })
}
