//! Cosine-distance (spherical) K-means over region embeddings, internal
//! validity indices and cluster characterization against TTD coordinates.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    pub k: usize,
    pub n_restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop when no center moves further than this (Euclidean, unit centers).
    pub tol: f64,
}

impl ClusteringConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        ClusteringConfig {
            k,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.n_restarts == 0 {
            return Err(Error::InvalidArgument("n_restarts must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k: 2,
            n_restarts: 16,
            max_iters: 300,
            seed: 0,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    /// Unit-norm centers, `k × r`.
    pub centers: Mat,
    /// Sum of cosine distances of points to their centers.
    pub inertia: f64,
    pub iterations_run: usize,
    pub restart_chosen: usize,
    /// Inertia after initialization and after every Lloyd iteration of the
    /// chosen restart.
    pub inertia_trace: Vec<f64>,
    /// Iterations (over all restarts) whose inertia rose above the previous
    /// one by more than rounding slack. Zero for a correct run.
    pub monotonicity_violations: usize,
}

impl ClusterResult {
    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// `1 − cos(a, b)` in `[0, 2]`. A zero vector is at distance 1 from any
/// nonzero vector and 0 from another zero vector.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a);
    let nb = dot(b, b);
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => {
            let cos = dot(a, b) / (na * nb).sqrt();
            (1.0 - cos).clamp(0.0, 2.0)
        }
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

fn unit_rows(points: &Mat) -> Vec<Vec<f64>> {
    points.rows_iter().map(unit).collect()
}

/// Normalized mean of unit-normalized members (spherical K-means update).
fn spherical_centers(units: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = units.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    for (x, &l) in units.iter().zip(labels) {
        for (s, v) in sums[l].iter_mut().zip(x) {
            *s += v;
        }
    }
    sums.iter().map(|s| unit(s)).collect()
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn restart_rng(seed: u64, restart: usize, k: usize) -> ChaCha8Rng {
    let key = mix64(seed ^ mix64(k as u64) ^ mix64((restart as u64) << 20 | 0x5eed));
    ChaCha8Rng::seed_from_u64(key)
}

struct RestartOutcome {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
    violations: usize,
}

pub fn kmeans(points: &Mat, config: &ClusteringConfig) -> Result<ClusterResult> {
    config.validate()?;
    let m = points.nrows();
    if m < config.k {
        return Err(Error::InvalidArgument(format!(
            "{} points cannot form {} clusters",
            m, config.k
        )));
    }
    if points.ncols() == 0 {
        return Err(Error::InvalidArgument("points need at least one coordinate".into()));
    }
    let units = unit_rows(points);
    if units.iter().all(|u| u.iter().all(|&x| x == 0.0)) {
        return Err(Error::InvalidArgument("all points are zero vectors".into()));
    }

    let outcomes: Vec<RestartOutcome> = (0..config.n_restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = restart_rng(config.seed, restart, config.k);
            lloyd(&units, config, &mut rng)
        })
        .collect();

    let violations = outcomes.iter().map(|o| o.violations).sum();
    let (best_idx, best) = outcomes
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.inertia < a.1.inertia { b } else { a })
        .expect("at least one restart");
    let dim = points.ncols();
    let centers = Mat::from_fn(config.k, dim, |i, j| best.centers[i][j]);
    Ok(ClusterResult {
        labels: best.labels,
        centers,
        inertia: best.inertia,
        iterations_run: best.iterations,
        restart_chosen: best_idx,
        inertia_trace: best.trace,
        monotonicity_violations: violations,
    })
}

/// Greedy farthest-point seeding: a random nonzero first center, then
/// repeatedly the point farthest (by cosine distance) from all chosen ones.
fn farthest_point_init(units: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let nonzero: Vec<usize> = (0..units.len())
        .filter(|&i| units[i].iter().any(|&x| x != 0.0))
        .collect();
    let first = nonzero[rng.random_range(0..nonzero.len())];
    let mut chosen = vec![first];
    let mut min_dist: Vec<f64> = units.iter().map(|x| cosine_distance(x, &units[first])).collect();
    while chosen.len() < k {
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_dist.iter().enumerate() {
            if !chosen.contains(&i) && d > best_d {
                best = i;
                best_d = d;
            }
        }
        chosen.push(best);
        for (i, d) in min_dist.iter_mut().enumerate() {
            *d = d.min(cosine_distance(&units[i], &units[best]));
        }
    }
    chosen.into_iter().map(|i| units[i].clone()).collect()
}

fn assign(units: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    units
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = cosine_distance(x, center);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            (best, best_d)
        })
        .unzip()
}

/// Gives every empty cluster the point farthest from its current center,
/// taken from a cluster that keeps at least one member.
fn repair_empty(units: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut pick = None;
        let mut pick_d = f64::NEG_INFINITY;
        for (i, &d) in dists.iter().enumerate() {
            if sizes[labels[i]] >= 2 && d > pick_d {
                pick = Some(i);
                pick_d = d;
            }
        }
        let i = pick.expect("m >= k guarantees a donor cluster");
        sizes[labels[i]] -= 1;
        sizes[c] = 1;
        labels[i] = c;
        centers[c] = units[i].clone();
        dists[i] = cosine_distance(&units[i], &centers[c]);
    }
}

fn lloyd(units: &[Vec<f64>], config: &ClusteringConfig, rng: &mut ChaCha8Rng) -> RestartOutcome {
    let mut centers = farthest_point_init(units, config.k, rng);
    let (mut labels, mut dists) = assign(units, &centers);
    repair_empty(units, &mut labels, &mut dists, &mut centers);
    let mut inertia: f64 = dists.iter().sum();
    let mut trace = vec![inertia];
    let mut violations = 0;
    let mut iterations = 0;

    while iterations < config.max_iters {
        iterations += 1;
        let mut new_centers = spherical_centers(units, &labels, config.k);
        let movement = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let (mut new_labels, mut new_dists) = assign(units, &new_centers);
        repair_empty(units, &mut new_labels, &mut new_dists, &mut new_centers);
        let new_inertia: f64 = new_dists.iter().sum();
        if new_inertia > inertia + 1e-12 * inertia.max(1.0) {
            violations += 1;
        }
        let changed = new_labels != labels;
        centers = new_centers;
        labels = new_labels;
        inertia = new_inertia;
        trace.push(inertia);
        if !changed || movement < config.tol {
            break;
        }
    }
    RestartOutcome {
        labels,
        centers,
        inertia,
        iterations,
        trace,
        violations,
    }
}

/// Row-major `m × m` matrix of pairwise cosine distances.
fn pairwise(points: &Mat) -> Vec<f64> {
    let m = points.nrows();
    let rows: Vec<&[f64]> = points.rows_iter().collect();
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let v = cosine_distance(rows[i], rows[j]);
            d[i * m + j] = v;
            d[j * m + i] = v;
        }
    }
    d
}

/// Number of clusters after checking labels are dense and there are at
/// least two nonempty clusters.
fn check_labels(points: &Mat, labels: &[usize]) -> Result<usize> {
    if labels.len() != points.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} points",
            labels.len(),
            points.nrows()
        )));
    }
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if k < 2 {
        return Err(Error::InvalidArgument("validity indices need at least 2 clusters".into()));
    }
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!("cluster {c} is empty")));
    }
    Ok(k)
}

/// Minimum single-linkage separation over maximum cluster diameter.
/// Returns `f64::INFINITY` when every cluster has zero diameter but the
/// clusters are apart.
pub fn dunn_index(points: &Mat, labels: &[usize]) -> Result<f64> {
    check_labels(points, labels)?;
    Ok(dunn_from(&pairwise(points), labels))
}

fn dunn_from(d: &[f64], labels: &[usize]) -> f64 {
    let m = labels.len();
    let mut min_sep = f64::INFINITY;
    let mut max_diam = 0.0_f64;
    for i in 0..m {
        for j in i + 1..m {
            let v = d[i * m + j];
            if labels[i] == labels[j] {
                max_diam = max_diam.max(v);
            } else {
                min_sep = min_sep.min(v);
            }
        }
    }
    if max_diam == 0.0 {
        if min_sep > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        min_sep / max_diam
    }
}

/// Mean over clusters of the worst `(sᵢ + sⱼ) / d(cᵢ, cⱼ)` ratio, with
/// spherical centers and cosine distances.
pub fn davies_bouldin(points: &Mat, labels: &[usize]) -> Result<f64> {
    let k = check_labels(points, labels)?;
    let units = unit_rows(points);
    let centers = spherical_centers(&units, labels, k);
    let mut scatter = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for (x, &l) in units.iter().zip(labels) {
        scatter[l] += cosine_distance(x, &centers[l]);
        sizes[l] += 1;
    }
    for (s, &n) in scatter.iter_mut().zip(&sizes) {
        *s /= n as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = cosine_distance(&centers[i], &centers[j]);
            if d == 0.0 {
                return Err(Error::CoincidentCenters(i.min(j), i.max(j)));
            }
            worst = worst.max((scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Mean silhouette width under cosine distance; members of singleton
/// clusters contribute 0.
pub fn silhouette(points: &Mat, labels: &[usize]) -> Result<f64> {
    let k = check_labels(points, labels)?;
    Ok(silhouette_from(&pairwise(points), labels, k))
}

fn silhouette_from(d: &[f64], labels: &[usize], k: usize) -> f64 {
    let m = labels.len();
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..m {
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..m {
            if j != i {
                sums[labels[j]] += d[i * m + j];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / m as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityScores {
    pub k: usize,
    pub dunn: f64,
    pub davies_bouldin: f64,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub scores: Vec<ValidityScores>,
    pub recommended: usize,
    /// Clustering for each candidate, in the order of `scores`.
    pub results: Vec<ClusterResult>,
}

impl KSelection {
    pub fn result_for(&self, k: usize) -> Option<&ClusterResult> {
        self.scores.iter().position(|s| s.k == k).map(|i| &self.results[i])
    }
}

/// Runs K-means for each candidate `k` and recommends the `k` that wins the
/// most of: max Dunn, min Davies–Bouldin, max Silhouette. Ties go to the
/// smaller `k`.
pub fn select_k(points: &Mat, k_range: &[usize], config: &ClusteringConfig) -> Result<KSelection> {
    let m = points.nrows();
    if k_range.is_empty() {
        return Err(Error::InvalidArgument("empty k range".into()));
    }
    if let Some(&k) = k_range.iter().find(|&&k| k < 2 || k + 1 > m) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside [2, {}]",
            m.saturating_sub(1)
        )));
    }
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let d = pairwise(points);
    let evaluated: Vec<(ValidityScores, ClusterResult)> = ks
        .par_iter()
        .map(|&k| {
            let cfg = ClusteringConfig { k, ..config.clone() };
            let result = kmeans(points, &cfg)?;
            let scores = ValidityScores {
                k,
                dunn: dunn_from(&d, &result.labels),
                davies_bouldin: davies_bouldin(points, &result.labels)?,
                silhouette: silhouette_from(&d, &result.labels, k),
            };
            Ok((scores, result))
        })
        .collect::<Result<_>>()?;
    let (scores, results): (Vec<_>, Vec<_>) = evaluated.into_iter().unzip();

    let recommended = recommend(&scores);
    Ok(KSelection {
        scores,
        recommended,
        results,
    })
}

/// Majority vote over the three criteria; `scores` sorted by `k`.
pub fn recommend(scores: &[ValidityScores]) -> usize {
    fn best_by(scores: &[ValidityScores], key: impl Fn(&ValidityScores) -> f64) -> usize {
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if key(s) > key(&scores[best]) {
                best = i;
            }
        }
        scores[best].k
    }
    let votes = [
        best_by(scores, |s| s.dunn),
        best_by(scores, |s| -s.davies_bouldin),
        best_by(scores, |s| s.silhouette),
    ];
    let mut tally: Vec<(usize, usize)> = Vec::new();
    for k in votes {
        match tally.iter_mut().find(|(kk, _)| *kk == k) {
            Some((_, n)) => *n += 1,
            None => tally.push((k, 1)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
        .expect("three votes")
}

/// Cosine similarity of every cluster center with every TTD coordinate row,
/// `k × n`.
pub fn characterize_clusters(result: &ClusterResult, ttd_coords: &Mat) -> Result<Mat> {
    if result.centers.ncols() != ttd_coords.ncols() {
        return Err(Error::InvalidArgument(format!(
            "centers have rank {}, TTD coordinates rank {}",
            result.centers.ncols(),
            ttd_coords.ncols()
        )));
    }
    Ok(Mat::from_fn(result.k(), ttd_coords.nrows(), |c, td| {
        (1.0 - cosine_distance(result.centers.row(c), ttd_coords.row(td))).clamp(-1.0, 1.0)
    }))
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len() as f64;
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rows: HashMap<usize, f64> = HashMap::new();
    let mut cols: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| choose2(v)).sum();
    let expected = sum_a * sum_b / choose2(n);
    let max_index = (sum_a + sum_b) / 2.0;
    if max_index == expected {
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}
