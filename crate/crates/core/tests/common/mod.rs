#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use urban_lra::Mat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random test matrix of one of three kinds: uniform [0, 1), integer
/// counts, or signed Gaussian entries.
pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> Mat {
    let mut r = rng(seed);
    match seed % 3 {
        0 => Mat::from_fn(rows, cols, |_, _| r.random::<f64>()),
        1 => {
            let p = Poisson::new(4.0).unwrap();
            Mat::from_fn(rows, cols, |_, _| p.sample(&mut r))
        }
        _ => {
            let n = Normal::new(0.0, 1.0).unwrap();
            Mat::from_fn(rows, cols, |_, _| n.sample(&mut r))
        }
    }
}

/// The acceptance corpus: 50 matrices with 144 columns and 5 to 200 rows.
pub fn svd_corpus() -> Vec<Mat> {
    (0..50u64)
        .map(|i| {
            let rows = 5 + ((i * 37 + 11) % 196) as usize;
            random_matrix(1000 + i, rows, 144)
        })
        .collect()
}

fn to_nalgebra(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.nrows(), m.ncols(), m.as_slice())
}

/// Singular values as square roots of the eigenvalues of the smaller Gram
/// matrix, from nalgebra's symmetric eigensolver, in nonincreasing order.
pub fn gram_singular_values(m: &Mat) -> Vec<f64> {
    let a = to_nalgebra(m);
    let gram = if m.nrows() >= m.ncols() {
        a.transpose() * &a
    } else {
        &a * a.transpose()
    };
    let eig = SymmetricEigen::new(gram);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn cos_dist(a: &[f64], b: &[f64]) -> f64 {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        return 0.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    1.0 - d / (na * nb)
}

fn rows(points: &Mat) -> Vec<Vec<f64>> {
    points.rows_iter().map(|r| r.to_vec()).collect()
}

fn n_clusters(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&l| l + 1)
}

/// Exhaustive single-linkage Dunn index.
pub fn brute_dunn(points: &Mat, labels: &[usize]) -> f64 {
    let p = rows(points);
    let mut min_between = f64::INFINITY;
    let mut max_within = 0.0_f64;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let d = cos_dist(&p[i], &p[j]);
            if labels[i] == labels[j] {
                max_within = max_within.max(d);
            } else {
                min_between = min_between.min(d);
            }
        }
    }
    if max_within == 0.0 {
        if min_between > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        min_between / max_within
    }
}

/// Normalize members, average, renormalize.
pub fn spherical_center(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut c = vec![0.0; dim];
    for p in points {
        let n: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            for (ci, x) in c.iter_mut().zip(p) {
                *ci += x / n;
            }
        }
    }
    let n: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        c.iter_mut().for_each(|x| *x /= n);
    }
    c
}

pub fn brute_davies_bouldin(points: &Mat, labels: &[usize]) -> f64 {
    let p = rows(points);
    let k = n_clusters(labels);
    let members: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|c| p.iter().zip(labels).filter(|(_, &l)| l == c).map(|(x, _)| x.clone()).collect())
        .collect();
    let centers: Vec<Vec<f64>> = members.iter().map(|m| spherical_center(m)).collect();
    let scatter: Vec<f64> = (0..k)
        .map(|c| members[c].iter().map(|x| cos_dist(x, &centers[c])).sum::<f64>() / members[c].len() as f64)
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i != j {
                worst = worst.max((scatter[i] + scatter[j]) / cos_dist(&centers[i], &centers[j]));
            }
        }
        total += worst;
    }
    total / k as f64
}

pub fn brute_silhouette(points: &Mat, labels: &[usize]) -> f64 {
    let p = rows(points);
    let k = n_clusters(labels);
    let mut total = 0.0;
    for i in 0..p.len() {
        let own = labels[i];
        let own_size = labels.iter().filter(|&&l| l == own).count();
        if own_size == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..p.len() {
            if j != i {
                sums[labels[j]] += cos_dist(&p[i], &p[j]);
                counts[labels[j]] += 1;
            }
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / p.len() as f64
}

/// `k` blobs of `per` points each around random unit directions that are
/// pairwise at least `min_sep_deg` apart, with per-point angular jitter of
/// at most about `spread_deg`.
pub fn planted_blobs(seed: u64, k: usize, per: usize, dim: usize, min_sep_deg: f64, spread_deg: f64) -> (Mat, Vec<usize>) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let unit = |v: Vec<f64>| {
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    let min_cos = min_sep_deg.to_radians().cos();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    while dirs.len() < k {
        let d = unit((0..dim).map(|_| normal.sample(&mut r)).collect());
        if dirs.iter().all(|e| e.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() <= min_cos) {
            dirs.push(d);
        }
    }
    let jitter = spread_deg.to_radians() / (dim as f64).sqrt();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (c, d) in dirs.iter().enumerate() {
        for _ in 0..per {
            let scale = 0.5 + r.random::<f64>() * 2.0;
            let v: Vec<f64> = d.iter().map(|x| x + jitter * normal.sample(&mut r).clamp(-1.0, 1.0)).collect();
            data.extend(unit(v).into_iter().map(|x| x * scale));
            labels.push(c);
        }
    }
    (Mat::from_row_major(k * per, dim, data), labels)
}

/// Smallest angular difference between two axial directions, in degrees.
pub fn axial_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}
