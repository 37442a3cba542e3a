//! Standard deviational ellipse of the check-in mass and concentric-zone
//! cluster proportions.
//!
//! Rotation is measured in degrees clockwise from north (the +y axis) and
//! gives the bearing of the major axis, in `[0, 180)`. Axes are 1-sigma
//! weighted standard deviations along the rotated axes.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ingest::GridSpec;
use crate::matrix::RttdMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationalEllipse {
    pub center_x: f64,
    pub center_y: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub rotation_deg: f64,
    pub axis_ratio: f64,
}

impl DeviationalEllipse {
    /// Offsets of `(x, y)` from the center along the major and minor axes.
    pub fn to_axes(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        (dx * s + dy * c, dx * c - dy * s)
    }

    /// Semi-major length (same units as the input) of the concentric,
    /// similar ellipse passing through `(x, y)`.
    pub fn elliptical_radius(&self, x: f64, y: f64) -> f64 {
        let (major, minor) = self.to_axes(x, y);
        major.hypot(minor * self.axis_ratio)
    }
}

/// Relative size under which the covariance counts as isotropic.
const ISOTROPY_TOL: f64 = 1e-12;
/// Minimum `(semi_minor / semi_major)²` before the mass counts as collinear.
const COLLINEAR_TOL: f64 = 1e-12;

/// Weighted standard deviational ellipse of `(x, y, weight)` points.
pub fn deviational_ellipse(points: &[(f64, f64, f64)]) -> Result<DeviationalEllipse> {
    if let Some(p) = points.iter().find(|p| !(p.0.is_finite() && p.1.is_finite() && p.2.is_finite())) {
        return Err(Error::InvalidArgument(format!("non-finite point {p:?}")));
    }
    if points.iter().any(|p| p.2 < 0.0) {
        return Err(Error::InvalidArgument("negative weight".into()));
    }
    let total: f64 = points.iter().map(|p| p.2).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateEllipse("total weight is zero".into()));
    }
    if points.iter().filter(|p| p.2 > 0.0).count() < 3 {
        return Err(Error::DegenerateEllipse("fewer than 3 weighted points".into()));
    }
    let cx = points.iter().map(|p| p.0 * p.2).sum::<f64>() / total;
    let cy = points.iter().map(|p| p.1 * p.2).sum::<f64>() / total;

    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y, w) in points {
        let (dx, dy) = (x - cx, y - cy);
        sxx += w * dx * dx;
        syy += w * dy * dy;
        sxy += w * dx * dy;
    }
    let diff = sxx - syy;
    let disc = (diff * diff + 4.0 * sxy * sxy).sqrt();
    let rotation_deg = if disc <= ISOTROPY_TOL * (sxx + syy) {
        0.0
    } else if sxy == 0.0 {
        if sxx > syy {
            90.0
        } else {
            0.0
        }
    } else {
        let theta = ((diff + disc) / (2.0 * sxy)).atan().to_degrees();
        if theta < 0.0 {
            theta + 180.0
        } else {
            theta
        }
    };

    let (s, c) = rotation_deg.to_radians().sin_cos();
    let (mut var_major, mut var_minor) = (0.0, 0.0);
    for &(x, y, w) in points {
        let (dx, dy) = (x - cx, y - cy);
        let along = dx * s + dy * c;
        let across = dx * c - dy * s;
        var_major += w * along * along;
        var_minor += w * across * across;
    }
    var_major /= total;
    var_minor /= total;
    if var_minor > var_major {
        // only reachable in the isotropic branch through rounding
        std::mem::swap(&mut var_major, &mut var_minor);
    }
    if var_minor <= COLLINEAR_TOL * var_major {
        return Err(Error::DegenerateEllipse("points are collinear".into()));
    }
    let semi_major = var_major.sqrt();
    let semi_minor = var_minor.sqrt();
    Ok(DeviationalEllipse {
        center_x: cx,
        center_y: cy,
        semi_major,
        semi_minor,
        rotation_deg,
        axis_ratio: semi_major / semi_minor,
    })
}

/// Cell centers weighted by each region's total check-in count.
pub fn cell_weights(matrix: &RttdMatrix, grid: &GridSpec) -> Vec<(f64, f64, f64)> {
    matrix
        .region_ids
        .iter()
        .zip(matrix.row_totals())
        .map(|(&region, w)| {
            let (x, y) = grid.cell_center(region);
            (x, y, w)
        })
        .collect()
}

/// Concentric ellipses sharing the deviational ellipse's center, rotation
/// and axis ratio, given by their semi-major lengths in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSchedule {
    pub breakpoints_km: Vec<f64>,
}

impl ZoneSchedule {
    pub fn new(breakpoints_km: Vec<f64>) -> Result<Self> {
        if breakpoints_km.is_empty() {
            return Err(Error::InvalidArgument("zone schedule needs at least one breakpoint".into()));
        }
        if breakpoints_km[0] <= 0.0 || breakpoints_km.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "breakpoints must be positive and strictly increasing".into(),
            ));
        }
        Ok(ZoneSchedule { breakpoints_km })
    }

    /// Zone containing elliptical radius `radius_km`, if inside the last
    /// breakpoint.
    pub fn zone_of(&self, radius_km: f64) -> Option<usize> {
        self.breakpoints_km.iter().position(|&b| radius_km < b)
    }

    pub fn bounds(&self, zone: usize) -> (f64, f64) {
        let inner = if zone == 0 { 0.0 } else { self.breakpoints_km[zone - 1] };
        (inner, self.breakpoints_km[zone])
    }
}

impl Default for ZoneSchedule {
    /// 1, 3, 5, …, 17 km.
    fn default() -> Self {
        ZoneSchedule {
            breakpoints_km: (0..9).map(|i| 1.0 + 2.0 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub index: usize,
    pub inner_km: f64,
    pub outer_km: f64,
    /// Member cells per cluster.
    pub cluster_counts: Vec<usize>,
}

impl Zone {
    pub fn cell_count(&self) -> usize {
        self.cluster_counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_count() == 0
    }

    /// Share of cluster `c` among the zone's cells; `None` for an empty zone.
    pub fn proportion(&self, c: usize) -> Option<f64> {
        let n = self.cell_count();
        (n > 0).then(|| self.cluster_counts[c] as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneProfile {
    pub zones: Vec<Zone>,
    pub n_clusters: usize,
    /// Zone index per labelled region (`None` beyond the last ellipse).
    pub membership: Vec<Option<usize>>,
}

/// Cluster proportions per concentric zone. `labels[i]` is the cluster of
/// grid region `region_ids[i]`; cells are placed by their centers.
pub fn zone_profiles(
    labels: &[usize],
    region_ids: &[usize],
    grid: &GridSpec,
    ellipse: &DeviationalEllipse,
    schedule: &ZoneSchedule,
) -> Result<ZoneProfile> {
    if labels.len() != region_ids.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} regions",
            labels.len(),
            region_ids.len()
        )));
    }
    if let Some(&r) = region_ids.iter().find(|&&r| r >= grid.n_cells()) {
        return Err(Error::InvalidArgument(format!("region {r} outside the grid")));
    }
    let n_clusters = labels.iter().max().map_or(0, |&l| l + 1);
    let mut zones: Vec<Zone> = (0..schedule.breakpoints_km.len())
        .map(|index| {
            let (inner_km, outer_km) = schedule.bounds(index);
            Zone {
                index,
                inner_km,
                outer_km,
                cluster_counts: vec![0; n_clusters],
            }
        })
        .collect();
    let membership = region_ids
        .iter()
        .zip(labels)
        .map(|(&region, &label)| {
            let (x, y) = grid.cell_center(region);
            let zone = schedule.zone_of(ellipse.elliptical_radius(x, y) / 1000.0);
            if let Some(z) = zone {
                zones[z].cluster_counts[label] += 1;
            }
            zone
        })
        .collect();
    Ok(ZoneProfile {
        zones,
        n_clusters,
        membership,
    })
}

/// GeoJSON feature collection of labelled cells, in the grid's planar
/// coordinates.
pub fn cells_geojson(grid: &GridSpec, region_ids: &[usize], labels: &[usize], zones: &[Option<usize>]) -> Value {
    let features: Vec<Value> = region_ids
        .iter()
        .enumerate()
        .map(|(i, &region)| {
            let ((x0, y0), (x1, y1)) = grid.cell_bounds(region);
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]],
                },
                "properties": {
                    "region_id": region,
                    "cluster": labels.get(i),
                    "zone": zones.get(i).copied().flatten(),
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}
