//! Check-in parsing, demand-tag mapping, grid binning and deduplication.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the check-in CSV, in order.
pub const CHECKIN_HEADER: [&str; 5] = ["user_id", "timestamp", "x", "y", "demand_tag"];

/// Number of hourly intervals in a day.
pub const HOURS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckInRecord {
    pub user_id: String,
    pub timestamp: DateTime<FixedOffset>,
    /// Planar easting in meters.
    pub x: f64,
    /// Planar northing in meters.
    pub y: f64,
    pub demand_tag: String,
}

impl CheckInRecord {
    /// Hour of day in the record's own UTC offset.
    pub fn hour(&self) -> TimeInterval {
        TimeInterval(self.timestamp.hour() as u8)
    }
}

/// The six canonical demand categories, in their fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DemandCategory {
    H,
    Tr,
    W,
    D,
    E,
    O,
}

impl DemandCategory {
    pub const ALL: [DemandCategory; 6] = [
        DemandCategory::H,
        DemandCategory::Tr,
        DemandCategory::W,
        DemandCategory::D,
        DemandCategory::E,
        DemandCategory::O,
    ];

    pub const COUNT: usize = 6;

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            DemandCategory::H => "H",
            DemandCategory::Tr => "Tr",
            DemandCategory::W => "W",
            DemandCategory::D => "D",
            DemandCategory::E => "E",
            DemandCategory::O => "O",
        }
    }

    /// Plain-language tag written by the synthetic generator.
    pub fn default_tag(self) -> &'static str {
        match self {
            DemandCategory::H => "home",
            DemandCategory::Tr => "transportation",
            DemandCategory::W => "work",
            DemandCategory::D => "dining",
            DemandCategory::E => "entertainment",
            DemandCategory::O => "other",
        }
    }
}

impl fmt::Display for DemandCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DemandCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.code() == s)
            .ok_or_else(|| Error::Schema(format!("unknown demand category '{s}'")))
    }
}

/// One-hour slot of the day, `0..=23`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeInterval(u8);

impl TimeInterval {
    pub fn new(hour: usize) -> Result<Self> {
        if hour < HOURS {
            Ok(TimeInterval(hour as u8))
        } else {
            Err(Error::InvalidArgument(format!("hour {hour} outside 0..=23")))
        }
    }

    pub fn hour(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UnmatchedPolicy {
    /// Unknown tags are counted as O.
    #[default]
    #[serde(rename = "other")]
    MapToOther,
    #[serde(rename = "drop")]
    Drop,
}

/// Raw demand tag → canonical category.
///
/// Keys are compared after trimming and lowercasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMap {
    tags: HashMap<String, DemandCategory>,
    #[serde(default)]
    unmatched: UnmatchedPolicy,
}

fn normalize_tag(tag: &str) -> String {
    tag.trim().to_lowercase()
}

impl CategoryMap {
    pub fn new(
        tags: impl IntoIterator<Item = (String, DemandCategory)>,
        unmatched: UnmatchedPolicy,
    ) -> Self {
        CategoryMap {
            tags: tags
                .into_iter()
                .map(|(k, v)| (normalize_tag(&k), v))
                .collect(),
            unmatched,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CategoryMap = serde_json::from_str(text)?;
        Ok(CategoryMap::new(raw.tags, raw.unmatched))
    }

    pub fn to_json(&self) -> Result<String> {
        // sorted keys keep the file stable
        let tags: std::collections::BTreeMap<_, _> = self.tags.iter().collect();
        let value = serde_json::json!({ "tags": tags, "unmatched": self.unmatched });
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn policy(&self) -> UnmatchedPolicy {
        self.unmatched
    }

    pub fn map(&self, tag: &str) -> Option<DemandCategory> {
        map_demand(tag, self)
    }
}

impl Default for CategoryMap {
    /// Maps the category codes and their plain-language names; unknown tags
    /// become O.
    fn default() -> Self {
        let tags = DemandCategory::ALL.into_iter().flat_map(|c| {
            [
                (c.code().to_string(), c),
                (c.default_tag().to_string(), c),
            ]
        });
        CategoryMap::new(tags, UnmatchedPolicy::MapToOther)
    }
}

/// Resolves a raw tag. `None` means the record is dropped by policy.
pub fn map_demand(tag: &str, map: &CategoryMap) -> Option<DemandCategory> {
    match map.tags.get(&normalize_tag(tag)) {
        Some(&c) => Some(c),
        None => match map.unmatched {
            UnmatchedPolicy::MapToOther => Some(DemandCategory::O),
            UnmatchedPolicy::Drop => None,
        },
    }
}

/// Square lattice over the study rectangle. Regions are numbered row-major
/// from the bottom-left cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    #[serde(default)]
    pub active_mask: Option<Vec<usize>>,
}

fn default_cell_size() -> f64 {
    1000.0
}

impl GridSpec {
    pub fn new(origin_x: f64, origin_y: f64, cell_size: f64, n_cols: usize, n_rows: usize) -> Result<Self> {
        let grid = GridSpec {
            origin_x,
            origin_y,
            cell_size,
            n_cols,
            n_rows,
            active_mask: None,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_mask(mut self, mask: Vec<usize>) -> Result<Self> {
        self.active_mask = Some(mask);
        self.validate()?;
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let grid: GridSpec = serde_json::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::InvalidArgument("grid needs at least one cell".into()));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cell_size must be positive, got {}",
                self.cell_size
            )));
        }
        if !(self.origin_x.is_finite() && self.origin_y.is_finite()) {
            return Err(Error::InvalidArgument("grid origin must be finite".into()));
        }
        if let Some(mask) = &self.active_mask {
            let n = self.n_cells();
            if let Some(bad) = mask.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidArgument(format!(
                    "active_mask index {bad} >= {n} cells"
                )));
            }
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_cols * self.n_rows
    }

    /// Active region indices in increasing order.
    pub fn active_regions(&self) -> Vec<usize> {
        match &self.active_mask {
            Some(mask) => {
                let mut v: Vec<usize> = mask.iter().copied().collect::<HashSet<_>>().into_iter().collect();
                v.sort_unstable();
                v
            }
            None => (0..self.n_cells()).collect(),
        }
    }

    pub fn is_active(&self, region: usize) -> bool {
        region < self.n_cells()
            && self.active_mask.as_ref().is_none_or(|m| m.contains(&region))
    }

    /// Center of cell `region` in planar meters.
    pub fn cell_center(&self, region: usize) -> (f64, f64) {
        let col = region % self.n_cols;
        let row = region / self.n_cols;
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_size,
            self.origin_y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Corner coordinates (lower-left, upper-right) of cell `region`.
    pub fn cell_bounds(&self, region: usize) -> ((f64, f64), (f64, f64)) {
        let col = region % self.n_cols;
        let row = region / self.n_cols;
        let x0 = self.origin_x + col as f64 * self.cell_size;
        let y0 = self.origin_y + row as f64 * self.cell_size;
        ((x0, y0), (x0 + self.cell_size, y0 + self.cell_size))
    }
}

/// Grid cell containing `(x, y)`, or `None` outside the rectangle or mask.
///
/// Cells are half-open `[left, right) × [bottom, top)`.
pub fn assign_region(x: f64, y: f64, grid: &GridSpec) -> Option<usize> {
    if !(x.is_finite() && y.is_finite()) {
        return None;
    }
    let fx = ((x - grid.origin_x) / grid.cell_size).floor();
    let fy = ((y - grid.origin_y) / grid.cell_size).floor();
    if fx < 0.0 || fy < 0.0 || fx >= grid.n_cols as f64 || fy >= grid.n_rows as f64 {
        return None;
    }
    let region = fy as usize * grid.n_cols + fx as usize;
    match &grid.active_mask {
        Some(mask) if !mask.contains(&region) => None,
        _ => Some(region),
    }
}

/// Lon/lat (degrees) to local planar meters around a reference point using
/// an equirectangular approximation. Only suitable for small toy areas.
pub fn project_equirectangular(lon: f64, lat: f64, ref_lon: f64, ref_lat: f64) -> (f64, f64) {
    const EARTH_RADIUS_M: f64 = 6_371_008.8;
    let x = (lon - ref_lon).to_radians() * EARTH_RADIUS_M * ref_lat.to_radians().cos();
    let y = (lat - ref_lat).to_radians() * EARTH_RADIUS_M;
    (x, y)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub parsed: usize,
    /// 1-based file line numbers (the header is line 1) of skipped rows.
    pub skipped_lines: Vec<u64>,
}

impl ParseReport {
    pub fn skipped(&self) -> usize {
        self.skipped_lines.len()
    }
}

/// Parses the check-in CSV. Malformed rows are skipped and reported.
pub fn parse_records<R: Read>(input: R) -> Result<(Vec<CheckInRecord>, ParseReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers().map_err(stream_or_schema)?.clone();
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != CHECKIN_HEADER {
        return Err(Error::Schema(format!(
            "expected header '{}', got '{}'",
            CHECKIN_HEADER.join(","),
            got.join(",")
        )));
    }

    let mut records = Vec::new();
    let mut report = ParseReport::default();
    let mut row = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                let line = row.position().map_or(0, |p| p.line());
                match parse_row(&row) {
                    Some(rec) => {
                        records.push(rec);
                        report.parsed += 1;
                    }
                    None => report.skipped_lines.push(line),
                }
            }
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(stream_or_schema(e)),
                _ => {
                    let line = e.position().map_or(0, |p| p.line());
                    report.skipped_lines.push(line);
                }
            },
        }
    }
    Ok((records, report))
}

fn stream_or_schema(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Stream(io),
            _ => unreachable!(),
        }
    } else {
        Error::Schema(e.to_string())
    }
}

fn parse_row(row: &csv::StringRecord) -> Option<CheckInRecord> {
    if row.len() != CHECKIN_HEADER.len() {
        return None;
    }
    let user_id = row.get(0)?.trim();
    if user_id.is_empty() {
        return None;
    }
    let timestamp = DateTime::parse_from_rfc3339(row.get(1)?.trim()).ok()?;
    let x: f64 = row.get(2)?.trim().parse().ok()?;
    let y: f64 = row.get(3)?.trim().parse().ok()?;
    if !(x.is_finite() && y.is_finite()) {
        return None;
    }
    Some(CheckInRecord {
        user_id: user_id.to_string(),
        timestamp,
        x,
        y,
        demand_tag: row.get(4)?.trim().to_string(),
    })
}

/// Writes records in the check-in CSV format.
pub fn write_records<W: std::io::Write>(out: W, records: &[CheckInRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CHECKIN_HEADER)?;
    for r in records {
        w.write_record([
            r.user_id.as_str(),
            &r.timestamp.to_rfc3339(),
            &r.x.to_string(),
            &r.y.to_string(),
            r.demand_tag.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const DEFAULT_MIN_GAP_SECS: i64 = 60;

/// Drops exact duplicates and repeated check-ins by the same user at the
/// same coordinates less than `min_gap_secs` after that user's previous
/// retained check-in there. Returns the retained records and the drop count.
pub fn dedup_filter(records: &[CheckInRecord], min_gap_secs: i64) -> (Vec<CheckInRecord>, usize) {
    // (user, x bits, y bits) -> timestamps of retained records at that spot
    let mut retained_at: HashMap<(&str, u64, u64), Vec<i64>> = HashMap::new();
    let mut seen: HashSet<(&str, i64, u32, u64, u64, &str)> = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for r in records {
        let t = r.timestamp.timestamp();
        let exact = (
            r.user_id.as_str(),
            t,
            r.timestamp.timestamp_subsec_nanos(),
            r.x.to_bits(),
            r.y.to_bits(),
            r.demand_tag.as_str(),
        );
        if seen.contains(&exact) {
            dropped += 1;
            continue;
        }
        let key = (r.user_id.as_str(), r.x.to_bits(), r.y.to_bits());
        let times = retained_at.entry(key).or_default();
        if times.iter().any(|&prev| (t - prev).abs() < min_gap_secs) {
            dropped += 1;
            continue;
        }
        times.push(t);
        seen.insert(exact);
        out.push(r.clone());
    }
    (out, dropped)
}
