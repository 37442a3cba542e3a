//! Urban spatial-temporal activity structures (USTAS) and the joint
//! region/demand embedding.
//!
//! Structure `i` pairs column `i` of `U` (its spatial signature over
//! regions) with column `i` of `V` (its signature over the 144 demand-hour
//! columns). Signs follow the decomposition's convention: the spatial
//! loading of largest magnitude is nonnegative.

use crate::error::{Error, Result};
use crate::ingest::{DemandCategory, HOURS};
use crate::linalg::Mat;
use crate::lra::TruncatedLra;
use crate::matrix::N_TTD;

#[derive(Debug, Clone, PartialEq)]
pub struct Ustas {
    /// 1-based position in the spectrum.
    pub index: usize,
    pub sigma: f64,
    pub spatial: Vec<f64>,
    pub temporal: Vec<f64>,
}

impl Ustas {
    /// Temporal loadings laid out as a demand × hour table.
    pub fn temporal_table(&self) -> Result<[[f64; HOURS]; DemandCategory::COUNT]> {
        temporal_table(&self.temporal)
    }
}

pub fn extract_ustas(t: &TruncatedLra) -> Result<Vec<Ustas>> {
    if let Some(i) = t.s.iter().position(|&s| s <= 0.0) {
        return Err(Error::Undefined(format!(
            "structure {} has zero singular value",
            i + 1
        )));
    }
    Ok((0..t.rank())
        .map(|i| Ustas {
            index: i + 1,
            sigma: t.s[i],
            spatial: t.u.column(i),
            temporal: t.v.column(i),
        })
        .collect())
}

/// Regions and TTD columns in one r-dimensional space whose dot products
/// reproduce the rank-r approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEmbedding {
    /// `Ur · diag(Sr)^½`, one row per region.
    pub region_coords: Mat,
    /// `Vr · diag(Sr)^½`, one row per TTD column.
    pub ttd_coords: Mat,
}

impl JointEmbedding {
    pub fn rank(&self) -> usize {
        self.region_coords.ncols()
    }
}

pub fn joint_embedding(t: &TruncatedLra) -> Result<JointEmbedding> {
    if let Some(&s) = t.s.iter().find(|&&s| s.is_nan() || s < 0.0) {
        return Err(Error::InvalidArgument(format!("negative singular value {s}")));
    }
    let roots: Vec<f64> = t.s.iter().map(|s| s.sqrt()).collect();
    let scale = |m: &Mat| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * roots[j]);
    Ok(JointEmbedding {
        region_coords: scale(&t.u),
        ttd_coords: scale(&t.v),
    })
}

pub fn temporal_table(temporal: &[f64]) -> Result<[[f64; HOURS]; DemandCategory::COUNT]> {
    if temporal.len() != N_TTD {
        return Err(Error::InvalidArgument(format!(
            "temporal vector has {} entries, expected {N_TTD}",
            temporal.len()
        )));
    }
    let mut out = [[0.0; HOURS]; DemandCategory::COUNT];
    for (c, &v) in temporal.iter().enumerate() {
        out[c / HOURS][c % HOURS] = v;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UstasSummary {
    pub index: usize,
    pub sigma: f64,
    /// `(region_id, loading)` sorted by descending `|loading|`.
    pub top_regions: Vec<(usize, f64)>,
    pub table: [[f64; HOURS]; DemandCategory::COUNT],
}

/// Top-`top_k` regions per structure and its 6 × 24 temporal table.
/// `region_ids[i]` labels spatial entry `i`.
pub fn ustas_report(structures: &[Ustas], region_ids: &[usize], top_k: usize) -> Result<Vec<UstasSummary>> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    structures
        .iter()
        .map(|u| {
            if u.spatial.len() != region_ids.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} region ids for {} spatial loadings",
                    region_ids.len(),
                    u.spatial.len()
                )));
            }
            let mut order: Vec<usize> = (0..u.spatial.len()).collect();
            order.sort_by(|&a, &b| u.spatial[b].abs().total_cmp(&u.spatial[a].abs()));
            let top_regions = order
                .into_iter()
                .take(top_k)
                .map(|i| (region_ids[i], u.spatial[i]))
                .collect();
            Ok(UstasSummary {
                index: u.index,
                sigma: u.sigma,
                top_regions,
                table: u.temporal_table()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_frobenius;
    use crate::lra::{reconstruct, svd, truncate};

    #[test]
    fn rank_one_structure() {
        let a = [0.6, 0.0, -0.8];
        let b = [0.0, 1.0, 0.0, 0.0];
        let m = Mat::from_fn(3, 4, |i, j| 5.0 * a[i] * b[j]);
        let t = truncate(&svd(&m).unwrap(), 1).unwrap();
        let u = extract_ustas(&t).unwrap();
        assert_eq!(u.len(), 1);
        assert!((u[0].sigma - 5.0).abs() < 1e-12);
        // largest-magnitude spatial entry (-0.8) flipped positive
        assert!((u[0].spatial[2] - 0.8).abs() < 1e-12);
        assert!((u[0].spatial[0] + 0.6).abs() < 1e-12);
        assert!((u[0].temporal[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_structures_and_embedding() {
        let t = truncate(&svd(&Mat::identity(3)).unwrap(), 3).unwrap();
        let u = extract_ustas(&t).unwrap();
        assert!(u.iter().all(|s| s.sigma == 1.0));
        let e = joint_embedding(&t).unwrap();
        assert!(e.region_coords.gram().max_identity_deviation() < 1e-12);
        assert!(e.ttd_coords.gram().max_identity_deviation() < 1e-12);
    }

    #[test]
    fn embedding_column_scaling() {
        let m = Mat::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]);
        let t = truncate(&svd(&m).unwrap(), 2).unwrap();
        let e = joint_embedding(&t).unwrap();
        let col0: f64 = e.region_coords.column(0).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((col0 - 2.0).abs() < 1e-12);
        let prod = e.region_coords.matmul(&e.ttd_coords.transpose());
        assert!(relative_frobenius(&prod, &reconstruct(&t)) < 1e-12);
    }

    #[test]
    fn zero_sigma_is_rejected() {
        let t = truncate(&svd(&Mat::zeros(2, 3)).unwrap(), 1).unwrap();
        assert!(extract_ustas(&t).is_err());
        assert!(joint_embedding(&t).is_ok());
    }

    #[test]
    fn report_top_regions_and_table() {
        let mut temporal = vec![0.0; N_TTD];
        temporal[DemandCategory::E.ordinal() * HOURS + 20] = 1.0;
        let u = Ustas {
            index: 1,
            sigma: 2.0,
            spatial: vec![0.0, 0.0, 0.0, -1.0],
            temporal,
        };
        let rep = ustas_report(&[u], &[10, 11, 12, 13], 1).unwrap();
        assert_eq!(rep[0].top_regions, vec![(13, -1.0)]);
        assert_eq!(rep[0].table[DemandCategory::E.ordinal()][20], 1.0);
        assert!(ustas_report(&[], &[], 0).is_err());
        assert!(temporal_table(&[0.0; 3]).is_err());
    }
}
