//! The region × temporally-dependent-travel-demand (R-TTD) count matrix.
//!
//! Columns are demand-major: all 24 hours of H, then Tr, W, D, E, O, so
//! column `ordinal(demand) * 24 + hour`.

use crate::error::{Error, Result};
use crate::ingest::{assign_region, map_demand, CategoryMap, CheckInRecord, DemandCategory, GridSpec, TimeInterval, HOURS};
use crate::linalg::Mat;

/// Number of TTD columns, `6 * 24`.
pub const N_TTD: usize = DemandCategory::COUNT * HOURS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TtdIndex {
    pub demand: DemandCategory,
    pub interval: TimeInterval,
}

impl TtdIndex {
    pub fn column(self) -> usize {
        ttd_index(self.demand, self.interval)
    }

    pub fn from_column(column: usize) -> Option<Self> {
        let demand = DemandCategory::from_ordinal(column / HOURS)?;
        let interval = TimeInterval::new(column % HOURS).ok()?;
        Some(TtdIndex { demand, interval })
    }

    /// Column label such as `Tr07`.
    pub fn label(self) -> String {
        format!("{}{:02}", self.demand.code(), self.interval.hour())
    }
}

pub fn ttd_index(demand: DemandCategory, interval: TimeInterval) -> usize {
    demand.ordinal() * HOURS + interval.hour()
}

/// All 144 column labels in layout order.
pub fn ttd_labels() -> Vec<String> {
    (0..N_TTD)
        .map(|c| TtdIndex::from_column(c).expect("column in range").label())
        .collect()
}

pub fn parse_ttd_label(label: &str) -> Option<TtdIndex> {
    let split = label.len().checked_sub(2)?;
    let (code, hour) = label.split_at(split);
    let demand: DemandCategory = code.parse().ok()?;
    let hour: usize = hour.parse().ok()?;
    Some(TtdIndex {
        demand,
        interval: TimeInterval::new(hour).ok()?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RttdMatrix {
    /// Grid region index for each row, strictly increasing.
    pub region_ids: Vec<usize>,
    pub values: Mat,
}

impl RttdMatrix {
    pub fn new(region_ids: Vec<usize>, values: Mat) -> Result<Self> {
        if values.ncols() != N_TTD {
            return Err(Error::Schema(format!(
                "matrix must have {N_TTD} columns, got {}",
                values.ncols()
            )));
        }
        if region_ids.len() != values.nrows() {
            return Err(Error::Schema(format!(
                "{} region ids for {} rows",
                region_ids.len(),
                values.nrows()
            )));
        }
        if region_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema("region ids must be strictly increasing".into()));
        }
        for i in 0..values.nrows() {
            for (j, &v) in values.row(i).iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::Schema(format!(
                        "entry ({i}, {j}) = {v} is not a nonnegative count"
                    )));
                }
            }
        }
        Ok(RttdMatrix { region_ids, values })
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn row_of_region(&self, region: usize) -> Option<usize> {
        self.region_ids.binary_search(&region).ok()
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Check-in total per row.
    pub fn row_totals(&self) -> Vec<f64> {
        self.values.rows_iter().map(|r| r.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub accepted: usize,
    pub outside: usize,
    pub dropped_by_tag: usize,
    /// Region ids whose row is entirely zero.
    pub empty_regions: Vec<usize>,
}

/// Counts records into the R-TTD matrix, one row per active region.
pub fn build_matrix(records: &[CheckInRecord], grid: &GridSpec, map: &CategoryMap) -> (RttdMatrix, BuildReport) {
    let region_ids = grid.active_regions();
    let mut row_of = vec![usize::MAX; grid.n_cells()];
    for (row, &region) in region_ids.iter().enumerate() {
        row_of[region] = row;
    }
    let unmasked = GridSpec {
        active_mask: None,
        ..grid.clone()
    };

    let mut values = Mat::zeros(region_ids.len(), N_TTD);
    let mut report = BuildReport::default();
    for rec in records {
        let Some(demand) = map_demand(&rec.demand_tag, map) else {
            report.dropped_by_tag += 1;
            continue;
        };
        let row = match assign_region(rec.x, rec.y, &unmasked) {
            Some(region) if row_of[region] != usize::MAX => row_of[region],
            _ => {
                report.outside += 1;
                continue;
            }
        };
        values[(row, ttd_index(demand, rec.hour()))] += 1.0;
        report.accepted += 1;
    }
    report.empty_regions = region_ids
        .iter()
        .zip(values.rows_iter())
        .filter(|(_, r)| r.iter().all(|&v| v == 0.0))
        .map(|(&id, _)| id)
        .collect();
    (RttdMatrix { region_ids, values }, report)
}

/// Per-demand hourly totals of any m×144 matrix: entry `[d][t]` is the sum
/// of column `ttd_index(d, t)`.
pub fn demand_profiles(values: &Mat) -> [[f64; HOURS]; DemandCategory::COUNT] {
    assert_eq!(values.ncols(), N_TTD, "profiles need {N_TTD} columns");
    let mut out = [[0.0; HOURS]; DemandCategory::COUNT];
    for row in values.rows_iter() {
        for (c, &v) in row.iter().enumerate() {
            out[c / HOURS][c % HOURS] += v;
        }
    }
    out
}

/// Frobenius norm of the difference of two profile tables.
pub fn profile_distance(
    a: &[[f64; HOURS]; DemandCategory::COUNT],
    b: &[[f64; HOURS]; DemandCategory::COUNT],
) -> f64 {
    let diff: Vec<f64> = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x - y)
        .collect();
    crate::linalg::norm2(&diff)
}
