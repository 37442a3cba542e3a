//! Synthetic cities with planted functional archetypes.
//!
//! Each archetype has a 6 × 24 temporal profile and a radial band around
//! the city center. Cells are drawn from their archetype's band; a cell's
//! expected row is `intensity · [(1 − ε)·own profile + ε·mean profile]`
//! where the mean profile is the equal-weight mixture of all archetypes, so
//! the expected matrix has rank at most the number of archetypes.
//!
//! Every archetype receives `cells_per_archetype · mean_checkins_per_cell`
//! expected check-ins. By default they are spread evenly over its cells.
//! With hotspots, `hotspot_share` of them goes to `hotspots_per_archetype`
//! cells (transport hubs, trading circles) and the rest is spread with
//! optional log-normal jitter, giving the heavy-tailed cell totals of real
//! check-in data. Hotspots are placed in pairs on opposite sides of the
//! center so the check-in mass stays centered.

use chrono::{FixedOffset, TimeZone};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CheckInRecord, DemandCategory, GridSpec, HOURS};
use crate::linalg::Mat;
use crate::matrix::{RttdMatrix, TtdIndex, N_TTD};

const DEFAULT_ARCHETYPES: &str = include_str!("../data/archetypes.json");

#[derive(Debug, Clone, PartialEq)]
pub struct Archetype {
    pub name: String,
    /// 144 nonnegative entries summing to 1, in TTD column order.
    pub temporal_profile: Vec<f64>,
    pub inner_km: f64,
    pub outer_km: f64,
}

impl Archetype {
    pub fn new(name: impl Into<String>, temporal_profile: Vec<f64>, inner_km: f64, outer_km: f64) -> Result<Self> {
        let name = name.into();
        if temporal_profile.len() != N_TTD {
            return Err(Error::InvalidArgument(format!(
                "archetype '{name}' profile has {} entries",
                temporal_profile.len()
            )));
        }
        if temporal_profile.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::InvalidArgument(format!("archetype '{name}' has a negative entry")));
        }
        let sum: f64 = temporal_profile.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidArgument(format!("archetype '{name}' profile is empty")));
        }
        if !(inner_km >= 0.0 && inner_km < outer_km) {
            return Err(Error::InvalidArgument(format!(
                "archetype '{name}' band [{inner_km}, {outer_km}) is invalid"
            )));
        }
        Ok(Archetype {
            name,
            temporal_profile: temporal_profile.iter().map(|v| v / sum).collect(),
            inner_km,
            outer_km,
        })
    }
}

/// File form of an archetype: a flat baseline plus weighted (demand, hours)
/// components, or an explicit 144-entry profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeDef {
    pub name: String,
    pub band_km: [f64; 2],
    #[serde(default)]
    pub baseline: f64,
    #[serde(default)]
    pub components: Vec<ProfileComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileComponent {
    pub demand: DemandCategory,
    pub hours: Vec<usize>,
    pub weight: f64,
}

impl ArchetypeDef {
    pub fn build(&self) -> Result<Archetype> {
        let profile = match &self.profile {
            Some(p) => p.clone(),
            None => {
                let mut p = vec![self.baseline; N_TTD];
                for comp in &self.components {
                    for &h in &comp.hours {
                        if h >= HOURS {
                            return Err(Error::InvalidArgument(format!(
                                "archetype '{}' uses hour {h}",
                                self.name
                            )));
                        }
                        p[comp.demand.ordinal() * HOURS + h] += comp.weight;
                    }
                }
                p
            }
        };
        Archetype::new(&self.name, profile, self.band_km[0], self.band_km[1])
    }
}

#[derive(Deserialize)]
struct ArchetypeFile {
    archetypes: Vec<ArchetypeDef>,
}

pub fn default_archetype_defs() -> Vec<ArchetypeDef> {
    serde_json::from_str::<ArchetypeFile>(DEFAULT_ARCHETYPES)
        .expect("bundled archetypes parse")
        .archetypes
}

/// CD, TD, developed RD, developing RD and OD, from the bundled data file.
pub fn default_archetypes() -> Vec<Archetype> {
    default_archetype_defs()
        .iter()
        .map(|d| d.build().expect("bundled archetypes are valid"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub grid: GridSpec,
    /// City center in planar meters; defaults to the grid's center.
    #[serde(default)]
    pub center: Option<(f64, f64)>,
    #[serde(default = "default_archetype_defs")]
    pub archetypes: Vec<ArchetypeDef>,
    pub cells_per_archetype: usize,
    pub mean_checkins_per_cell: f64,
    #[serde(default)]
    pub mixing_noise: f64,
    /// Poisson counts when true, rounded expectations otherwise.
    #[serde(default)]
    pub count_noise: bool,
    #[serde(default)]
    pub hotspots_per_archetype: usize,
    /// Fraction of an archetype's check-ins located at its hotspots.
    #[serde(default)]
    pub hotspot_share: f64,
    /// Standard deviation of the log-normal jitter on non-hotspot cells.
    #[serde(default)]
    pub intensity_spread: f64,
    pub seed: u64,
    #[serde(default = "yes")]
    pub emit_checkins: bool,
}

fn yes() -> bool {
    true
}

impl SynthSpec {
    /// 40 × 40 km city with the five default archetypes, 40 cells each,
    /// 500 check-ins per cell on average and no noise.
    pub fn default_city(seed: u64) -> Self {
        SynthSpec {
            grid: GridSpec::new(340_000.0, 3_440_000.0, 1000.0, 40, 40).expect("valid grid"),
            center: None,
            archetypes: default_archetype_defs(),
            cells_per_archetype: 40,
            mean_checkins_per_cell: 500.0,
            mixing_noise: 0.0,
            count_noise: false,
            hotspots_per_archetype: 0,
            hotspot_share: 0.0,
            intensity_spread: 0.0,
            seed,
            emit_checkins: false,
        }
    }

    /// The default city with 5% mixing, Poisson counts and two hotspots
    /// per archetype holding 75% of its check-ins.
    pub fn noisy_city(seed: u64) -> Self {
        SynthSpec {
            mixing_noise: 0.05,
            count_noise: true,
            hotspots_per_archetype: 2,
            hotspot_share: 0.75,
            intensity_spread: 0.5,
            ..SynthSpec::default_city(seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<Vec<Archetype>> {
        self.grid.validate()?;
        if self.archetypes.len() < 2 {
            return Err(Error::InvalidArgument("at least 2 archetypes are required".into()));
        }
        if self.cells_per_archetype == 0 {
            return Err(Error::InvalidArgument("cells_per_archetype must be positive".into()));
        }
        if !(self.mean_checkins_per_cell > 0.0 && self.mean_checkins_per_cell.is_finite()) {
            return Err(Error::InvalidArgument("mean_checkins_per_cell must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.mixing_noise) {
            return Err(Error::InvalidArgument("mixing_noise must be in [0, 1)".into()));
        }
        if self.intensity_spread.is_nan() || self.intensity_spread < 0.0 {
            return Err(Error::InvalidArgument("intensity_spread must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.hotspot_share) {
            return Err(Error::InvalidArgument("hotspot_share must be in [0, 1)".into()));
        }
        if self.hotspots_per_archetype >= self.cells_per_archetype
            || (self.hotspots_per_archetype == 0) != (self.hotspot_share == 0.0)
        {
            return Err(Error::InvalidArgument(
                "hotspots need 0 < hotspots_per_archetype < cells_per_archetype and a positive share".into(),
            ));
        }
        self.archetypes.iter().map(ArchetypeDef::build).collect()
    }

    fn center_xy(&self) -> (f64, f64) {
        self.center.unwrap_or((
            self.grid.origin_x + self.grid.n_cols as f64 * self.grid.cell_size / 2.0,
            self.grid.origin_y + self.grid.n_rows as f64 * self.grid.cell_size / 2.0,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    /// Grid with `active_mask` set to the occupied cells.
    pub grid: GridSpec,
    pub matrix: RttdMatrix,
    /// Expected (pre-noise, unrounded) counts.
    pub expected: Mat,
    /// Archetype index per matrix row.
    pub planted_labels: Vec<usize>,
    pub archetype_names: Vec<String>,
    pub center: (f64, f64),
    pub checkins: Option<Vec<CheckInRecord>>,
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_rng(seed: u64, region: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed) ^ mix64(region as u64 + 1))
}

pub fn generate_city(spec: &SynthSpec) -> Result<SyntheticCity> {
    let archetypes = spec.validate()?;
    let base_grid = GridSpec {
        active_mask: None,
        ..spec.grid.clone()
    };
    let (cx, cy) = spec.center_xy();
    let dist_km = |region: usize| {
        let (x, y) = base_grid.cell_center(region);
        (x - cx).hypot(y - cy) / 1000.0
    };

    // placement
    let mut placement_rng = ChaCha8Rng::seed_from_u64(mix64(spec.seed ^ 0x91ace));
    let mut owner: Vec<Option<usize>> = vec![None; base_grid.n_cells()];
    for (a, arch) in archetypes.iter().enumerate() {
        let candidates: Vec<usize> = (0..base_grid.n_cells())
            .filter(|&r| owner[r].is_none())
            .filter(|&r| {
                let d = dist_km(r);
                d >= arch.inner_km && d < arch.outer_km
            })
            .collect();
        if candidates.len() < spec.cells_per_archetype {
            return Err(Error::BandOverflow {
                archetype: arch.name.clone(),
                requested: spec.cells_per_archetype,
                available: candidates.len(),
            });
        }
        for i in sample(&mut placement_rng, candidates.len(), spec.cells_per_archetype) {
            owner[candidates[i]] = Some(a);
        }
    }
    let region_ids: Vec<usize> = (0..base_grid.n_cells()).filter(|&r| owner[r].is_some()).collect();
    let planted_labels: Vec<usize> = region_ids.iter().map(|&r| owner[r].expect("occupied")).collect();

    // intensities
    let mut rngs: Vec<ChaCha8Rng> = region_ids.iter().map(|&r| cell_rng(spec.seed, r)).collect();
    let jitter: Vec<f64> = rngs
        .iter_mut()
        .map(|rng| {
            if spec.intensity_spread > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                (spec.intensity_spread * z).exp()
            } else {
                1.0
            }
        })
        .collect();
    let center_of = |region: usize| base_grid.cell_center(region);
    let mut intensity = vec![0.0; region_ids.len()];
    for a in 0..archetypes.len() {
        let rows: Vec<usize> = (0..region_ids.len()).filter(|&i| planted_labels[i] == a).collect();
        let total = spec.cells_per_archetype as f64 * spec.mean_checkins_per_cell;
        let hot = pick_hotspots(
            &rows,
            spec.hotspots_per_archetype,
            |i| center_of(region_ids[i]),
            (cx, cy),
            &mut placement_rng,
        );
        let per_hotspot = if hot.is_empty() {
            0.0
        } else {
            total * spec.hotspot_share / hot.len() as f64
        };
        let rest_weight: f64 = rows.iter().filter(|i| !hot.contains(i)).map(|&i| jitter[i]).sum();
        for &i in &rows {
            intensity[i] = if hot.contains(&i) {
                per_hotspot
            } else {
                total * (1.0 - spec.hotspot_share) * jitter[i] / rest_weight
            };
        }
    }

    // expected and realized counts
    let mean_profile: Vec<f64> = (0..N_TTD)
        .map(|c| archetypes.iter().map(|a| a.temporal_profile[c]).sum::<f64>() / archetypes.len() as f64)
        .collect();
    let eps = spec.mixing_noise;
    let m = region_ids.len();
    let mut expected = Mat::zeros(m, N_TTD);
    let mut counts = Mat::zeros(m, N_TTD);
    for i in 0..m {
        let profile = &archetypes[planted_labels[i]].temporal_profile;
        for c in 0..N_TTD {
            let lambda = intensity[i] * ((1.0 - eps) * profile[c] + eps * mean_profile[c]);
            expected[(i, c)] = lambda;
            counts[(i, c)] = if spec.count_noise {
                if lambda > 0.0 {
                    Poisson::new(lambda)
                        .map_err(|e| Error::InvalidArgument(format!("poisson rate {lambda}: {e}")))?
                        .sample(&mut rngs[i])
                } else {
                    0.0
                }
            } else {
                lambda.round()
            };
        }
    }

    let grid = GridSpec {
        active_mask: Some(region_ids.clone()),
        ..base_grid
    };
    let checkins = spec
        .emit_checkins
        .then(|| emit_checkins(&grid, &region_ids, &counts, &mut rngs));
    let matrix = RttdMatrix::new(region_ids, counts)?;
    Ok(SyntheticCity {
        grid,
        matrix,
        expected,
        planted_labels,
        archetype_names: archetypes.into_iter().map(|a| a.name).collect(),
        center: (cx, cy),
        checkins,
    })
}

/// Picks `count` rows as hotspots: a random row, then the row closest to its
/// reflection through the center, and so on.
fn pick_hotspots(
    rows: &[usize],
    count: usize,
    position: impl Fn(usize) -> (f64, f64),
    (cx, cy): (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut hot = Vec::with_capacity(count);
    while hot.len() < count {
        let free: Vec<usize> = rows.iter().copied().filter(|i| !hot.contains(i)).collect();
        let first = free[rng.random_range(0..free.len())];
        hot.push(first);
        if hot.len() == count {
            break;
        }
        let (x, y) = position(first);
        let (tx, ty) = (2.0 * cx - x, 2.0 * cy - y);
        let partner = free
            .iter()
            .copied()
            .filter(|&i| i != first)
            .min_by(|&i, &j| {
                let (xi, yi) = position(i);
                let (xj, yj) = position(j);
                (xi - tx).hypot(yi - ty).total_cmp(&(xj - tx).hypot(yj - ty))
            })
            .expect("count < rows.len()");
        hot.push(partner);
    }
    hot
}

/// One record per count, at a random point inside the cell and a random
/// minute of the hour on a fixed day.
fn emit_checkins(grid: &GridSpec, region_ids: &[usize], counts: &Mat, rngs: &mut [ChaCha8Rng]) -> Vec<CheckInRecord> {
    let tz = FixedOffset::east_opt(8 * 3600).expect("valid offset");
    let mut out = Vec::with_capacity(counts.sum() as usize);
    for (i, &region) in region_ids.iter().enumerate() {
        let ((x0, y0), _) = grid.cell_bounds(region);
        let rng = &mut rngs[i];
        for c in 0..N_TTD {
            let ttd = TtdIndex::from_column(c).expect("column in range");
            for k in 0..counts[(i, c)] as usize {
                let x = x0 + rng.random_range(0.01..0.99) * grid.cell_size;
                let y = y0 + rng.random_range(0.01..0.99) * grid.cell_size;
                let minute = rng.random_range(0..60);
                let second = rng.random_range(0..60);
                let timestamp = tz
                    .with_ymd_and_hms(2012, 3, 1, ttd.interval.hour() as u32, minute, second)
                    .single()
                    .expect("valid local time");
                out.push(CheckInRecord {
                    user_id: format!("u{region}-{c}-{k}"),
                    timestamp,
                    x,
                    y,
                    demand_tag: ttd.demand.default_tag().to_string(),
                });
            }
        }
    }
    out
}
