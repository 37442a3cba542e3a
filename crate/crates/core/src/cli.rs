//! Command-line front end. Every stage reads its inputs from files and
//! writes its outputs to files; `pipeline` chains the same stage functions
//! through an output directory, so its artifacts are byte-identical to
//! running the stages one by one.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::clustering::{characterize_clusters, select_k, ClusteringConfig};
use crate::error::{Error, Result};
use crate::ingest::{dedup_filter, parse_records, project_equirectangular, write_records, CategoryMap, GridSpec};
use crate::io;
use crate::lra::{rank_scan_with, suggest_rank, svd, DEFAULT_ENERGY_THRESHOLD, DEFAULT_ERROR_THRESHOLD};
use crate::matrix::build_matrix;
use crate::synth::{generate_city, SynthSpec};
use crate::urbanform::{cell_weights, cells_geojson, deviational_ellipse, zone_profiles, ZoneSchedule};
use crate::ustas::{extract_ustas, joint_embedding, ustas_report};

pub const CHECKINS_FILE: &str = "checkins.csv";
pub const CLEAN_CHECKINS_FILE: &str = "checkins_clean.csv";
pub const GRID_FILE: &str = "grid.json";
pub const CATEGORIES_FILE: &str = "categories.json";
pub const MATRIX_FILE: &str = "matrix.csv";
pub const PLANTED_FILE: &str = "planted_labels.csv";
pub const SPEC_FILE: &str = "spec.json";
pub const RANK_SCAN_FILE: &str = "rank_scan.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const REGION_EMBEDDING_FILE: &str = "embedding_regions.csv";
pub const TTD_EMBEDDING_FILE: &str = "embedding_ttd.csv";
pub const USTAS_SUMMARY_FILE: &str = "ustas_summary.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const CENTERS_FILE: &str = "centers.csv";
pub const VALIDITY_FILE: &str = "validity.csv";
pub const CHARACTERIZATION_FILE: &str = "characterization.csv";
pub const ELLIPSE_FILE: &str = "ellipse.json";
pub const ZONES_FILE: &str = "zones.csv";
pub const GEOJSON_FILE: &str = "cells.geojson";

const DEFAULT_RMAX: usize = 40;

#[derive(Debug, Parser)]
#[command(name = "urban-lra", version, about = "Functional regions from check-in data via low-rank approximation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, validate and de-duplicate a check-in CSV.
    Ingest(IngestArgs),
    /// Count check-ins into the region x (demand, hour) matrix.
    Build(BuildArgs),
    /// Reconstruction error and energy for ranks 1..=rmax.
    RankScan(RankScanArgs),
    /// Truncated SVD factors and the joint embedding.
    Decompose(DecomposeArgs),
    /// One file per activity structure, plus a summary.
    Ustas(UstasArgs),
    /// Spherical K-means over region embeddings with validity indices.
    Cluster(ClusterArgs),
    /// Deviational ellipse and concentric zone proportions.
    Zones(ZonesArgs),
    /// Generate a synthetic city with planted archetypes.
    Synth(SynthArgs),
    /// Run every stage from a directory of check-ins and grid.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub checkins: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Repeated check-ins by one user at one spot closer than this are dropped.
    #[arg(long, default_value_t = crate::ingest::DEFAULT_MIN_GAP_SECS)]
    pub min_gap_secs: i64,
    /// Treat x,y as lon,lat degrees and project them around this LON,LAT.
    #[arg(long, value_name = "LON,LAT", value_parser = parse_pair)]
    pub lonlat_ref: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub checkins: PathBuf,
    #[arg(long)]
    pub grid: PathBuf,
    /// Tag mapping JSON; codes and plain category names by default.
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RankScanArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RMAX)]
    pub rmax: usize,
    /// Add the demand-profile residual column.
    #[arg(long)]
    pub profiles: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full singular spectrum here.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Truncation rank; chosen from the thresholds when absent.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RMAX)]
    pub rmax: usize,
    #[arg(long, default_value_t = DEFAULT_ENERGY_THRESHOLD)]
    pub energy: f64,
    #[arg(long, default_value_t = DEFAULT_ERROR_THRESHOLD)]
    pub error: f64,
    /// Directory for U.csv, S.csv, V.csv and the embedding files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct UstasArgs {
    /// Directory holding U.csv, S.csv and V.csv.
    #[arg(long)]
    pub factors: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Also write an SVG heatmap per structure.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    /// Region embedding CSV (`region_id,c1..cr`).
    #[arg(long)]
    pub embedding: PathBuf,
    /// TTD embedding CSV; enables the characterization output.
    #[arg(long)]
    pub ttd_embedding: Option<PathBuf>,
    #[arg(long, conflicts_with = "k_range")]
    pub k: Option<usize>,
    /// Inclusive candidate range, e.g. `2..10`.
    #[arg(long, value_parser = parse_k_range)]
    pub k_range: Option<KRange>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ZonesArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub grid: PathBuf,
    /// Cluster file (`region_id,cluster`).
    #[arg(long)]
    pub labels: PathBuf,
    /// Zone semi-major lengths in km, e.g. `1,3,5`; 1..17 by 2 by default.
    #[arg(long, value_delimiter = ',')]
    pub breakpoints: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// City spec JSON; the noisy default city when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Directory with checkins.csv, grid.json and optionally categories.json.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::ingest::DEFAULT_MIN_GAP_SECS)]
    pub min_gap_secs: i64,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Largest rank scanned; capped at the matrix's rank bound.
    #[arg(long, default_value_t = DEFAULT_RMAX)]
    pub rmax: usize,
    #[arg(long, default_value_t = DEFAULT_ENERGY_THRESHOLD)]
    pub energy: f64,
    #[arg(long, default_value_t = DEFAULT_ERROR_THRESHOLD)]
    pub error: f64,
    #[arg(long, conflicts_with = "k_range")]
    pub k: Option<usize>,
    #[arg(long, value_parser = parse_k_range, default_value = "2..10")]
    pub k_range: KRange,
    #[arg(long, value_delimiter = ',')]
    pub breakpoints: Option<Vec<f64>>,
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl KRange {
    pub fn values(self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

fn parse_k_range(text: &str) -> std::result::Result<KRange, String> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got '{text}'"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad lower bound '{lo}'"))?;
    let hi: usize = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| format!("bad upper bound '{hi}'"))?;
    if lo < 1 || lo > hi {
        return Err(format!("need 1 <= LO <= HI, got {lo}..{hi}"));
    }
    Ok(KRange { lo, hi })
}

fn parse_pair(text: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("expected A,B, got '{text}'"))?;
    let a = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let b = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    Ok((a, b))
}

/// A failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.error.to_string().replace(['\n', '\r'], " ");
        write!(f, "error: stage={} kind={} msg={msg}", self.stage, self.error.kind())
    }
}

impl std::error::Error for StageError {}

fn tagged<T>(stage: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|error| StageError { stage, error })
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    let (mut records, report) = parse_records(io::open(&args.checkins)?)?;
    info!("ingest: parsed {} records, skipped {}", report.parsed, report.skipped());
    if !report.skipped_lines.is_empty() {
        warn!("ingest: skipped lines {:?}", report.skipped_lines);
    }
    if let Some((ref_lon, ref_lat)) = args.lonlat_ref {
        for r in &mut records {
            (r.x, r.y) = project_equirectangular(r.x, r.y, ref_lon, ref_lat);
        }
    }
    let (kept, dropped) = dedup_filter(&records, args.min_gap_secs);
    info!("ingest: dropped {dropped} duplicates, kept {}", kept.len());
    write_records(io::create(&args.out)?, &kept)
}

pub fn build(args: &BuildArgs) -> Result<()> {
    let (records, report) = parse_records(io::open(&args.checkins)?)?;
    if report.skipped() > 0 {
        warn!("build: skipped {} malformed lines", report.skipped());
    }
    let grid = GridSpec::from_json(&io::read_to_string(&args.grid)?)?;
    let map = match &args.categories {
        Some(path) => CategoryMap::from_json(&io::read_to_string(path)?)?,
        None => CategoryMap::default(),
    };
    let (matrix, report) = build_matrix(&records, &grid, &map);
    info!(
        "build: {} records -> {} x {} matrix; {} outside grid, {} dropped by tag, {} empty regions",
        records.len(),
        matrix.m(),
        matrix.n(),
        report.outside,
        report.dropped_by_tag,
        report.empty_regions.len()
    );
    io::write_matrix(&args.out, &matrix)
}

pub fn rank_scan(args: &RankScanArgs) -> Result<()> {
    let matrix = io::read_matrix(&args.matrix)?;
    let factors = svd(&matrix.values)?;
    let report = rank_scan_with(&matrix.values, &factors, args.rmax, args.profiles)?;
    info!("rank-scan: {} x {} matrix, {} ranks", matrix.m(), matrix.n(), report.rows.len());
    match suggest_rank(&report, DEFAULT_ENERGY_THRESHOLD, DEFAULT_ERROR_THRESHOLD) {
        Ok(r) => info!("rank-scan: suggested rank {r}"),
        Err(e) => warn!("rank-scan: {e}"),
    }
    io::write_rank_scan(&args.out, &report)?;
    if let Some(path) = &args.spectrum {
        io::write_spectrum(path, &report.singular_values)?;
    }
    Ok(())
}

pub fn decompose(args: &DecomposeArgs) -> Result<()> {
    let matrix = io::read_matrix(&args.matrix)?;
    let factors = svd(&matrix.values)?;
    let rank = match args.rank {
        Some(r) => r,
        None => {
            let report = rank_scan_with(&matrix.values, &factors, args.rmax.min(factors.p()), false)?;
            suggest_rank(&report, args.energy, args.error)?
        }
    };
    let t = factors.truncate(rank)?;
    info!(
        "decompose: {} x {} matrix, rank {rank}, numerical rank {}",
        matrix.m(),
        matrix.n(),
        factors.numerical_rank()
    );
    io::write_factors(&args.out, &matrix.region_ids, &t)?;
    let e = joint_embedding(&t)?;
    io::write_region_embedding(&args.out.join(REGION_EMBEDDING_FILE), &matrix.region_ids, &e.region_coords)?;
    io::write_ttd_embedding(&args.out.join(TTD_EMBEDDING_FILE), &e.ttd_coords)
}

pub fn ustas(args: &UstasArgs) -> Result<()> {
    let (region_ids, t) = io::read_factors(&args.factors)?;
    let structures = extract_ustas(&t)?;
    for u in &structures {
        io::write_ustas(&args.out.join(io::ustas_file_name(u.index)), u, &region_ids)?;
        if args.plots {
            let title = format!("USTAS {} (sigma = {})", u.index, io::fmt_f64(u.sigma));
            let svg = io::heatmap_svg(&u.temporal_table()?, &title);
            io::write_text(&args.out.join(format!("ustas_{:02}.svg", u.index)), &svg)?;
        }
    }
    let summary = ustas_report(&structures, &region_ids, args.top_k.min(region_ids.len().max(1)))?;
    io::write_ustas_summary(&args.out.join(USTAS_SUMMARY_FILE), &summary)?;
    info!("ustas: {} structures over {} regions", structures.len(), region_ids.len());
    Ok(())
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let (region_ids, points) = io::read_region_embedding(&args.embedding)?;
    let candidates = match (args.k, args.k_range) {
        (Some(k), _) => vec![k],
        (None, Some(range)) => range.values(),
        (None, None) => return Err(Error::InvalidArgument("one of --k or --k-range is required".into())),
    };
    let config = ClusteringConfig {
        n_restarts: args.restarts,
        max_iters: args.max_iters,
        ..ClusteringConfig::new(candidates[0], args.seed)
    };
    let selection = select_k(&points, &candidates, &config)?;
    let k = selection.recommended;
    let result = selection.result_for(k).expect("recommended k was evaluated");
    let violations: usize = selection.results.iter().map(|r| r.monotonicity_violations).sum();
    info!(
        "cluster: {} regions, k = {k} (candidates {:?}), inertia {}, sizes {:?}, {violations} monotonicity violations",
        region_ids.len(),
        candidates,
        io::fmt_f64(result.inertia),
        result.cluster_sizes()
    );
    io::write_labels(&args.out.join(LABELS_FILE), &region_ids, &result.labels)?;
    io::write_centers(&args.out.join(CENTERS_FILE), &result.centers)?;
    io::write_validity(&args.out.join(VALIDITY_FILE), &selection.scores)?;
    if let Some(path) = &args.ttd_embedding {
        let ttd = io::read_ttd_embedding(path)?;
        let similarity = characterize_clusters(result, &ttd)?;
        io::write_characterization(&args.out.join(CHARACTERIZATION_FILE), &similarity)?;
    }
    Ok(())
}

pub fn zones(args: &ZonesArgs) -> Result<()> {
    let matrix = io::read_matrix(&args.matrix)?;
    let grid = GridSpec::from_json(&io::read_to_string(&args.grid)?)?;
    let (region_ids, labels) = io::read_labels(&args.labels)?;
    let schedule = match &args.breakpoints {
        Some(b) => ZoneSchedule::new(b.clone())?,
        None => ZoneSchedule::default(),
    };
    let ellipse = deviational_ellipse(&cell_weights(&matrix, &grid))?;
    let profile = zone_profiles(&labels, &region_ids, &grid, &ellipse, &schedule)?;
    let outside = profile.membership.iter().filter(|z| z.is_none()).count();
    info!(
        "zones: ellipse axis ratio {}, rotation {} deg; {} zones, {outside} of {} cells beyond the last",
        io::fmt_f64(ellipse.axis_ratio),
        io::fmt_f64(ellipse.rotation_deg),
        profile.zones.len(),
        region_ids.len()
    );
    io::write_json(&args.out.join(ELLIPSE_FILE), &ellipse)?;
    io::write_zones(&args.out.join(ZONES_FILE), &profile)?;
    io::write_json(
        &args.out.join(GEOJSON_FILE),
        &cells_geojson(&grid, &region_ids, &labels, &profile.membership),
    )
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => SynthSpec::from_json(&io::read_to_string(path)?)?,
        None => SynthSpec {
            emit_checkins: true,
            ..SynthSpec::noisy_city(0)
        },
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let city = generate_city(&spec)?;
    let out = &args.out;
    if let Some(checkins) = &city.checkins {
        write_records(io::create(&out.join(CHECKINS_FILE))?, checkins)?;
    }
    io::write_matrix(&out.join(MATRIX_FILE), &city.matrix)?;
    io::write_text(&out.join(GRID_FILE), &(city.grid.to_json()? + "\n"))?;
    io::write_text(&out.join(CATEGORIES_FILE), &(CategoryMap::default().to_json()? + "\n"))?;
    io::write_text(&out.join(SPEC_FILE), &(spec.to_json()? + "\n"))?;
    io::write_labels(&out.join(PLANTED_FILE), &city.matrix.region_ids, &city.planted_labels)?;
    info!(
        "synth: {} cells, {} archetypes, {} check-ins{}",
        city.matrix.m(),
        city.archetype_names.len(),
        city.matrix.total(),
        if city.checkins.is_some() { "" } else { " (check-in file not requested)" }
    );
    Ok(())
}

/// Output layout of `pipeline` under its `--out` directory.
pub struct PipelineLayout {
    pub root: PathBuf,
}

impl PipelineLayout {
    pub fn new(root: &Path) -> Self {
        PipelineLayout { root: root.to_path_buf() }
    }

    pub fn clean_checkins(&self) -> PathBuf {
        self.root.join(CLEAN_CHECKINS_FILE)
    }

    pub fn matrix(&self) -> PathBuf {
        self.root.join(MATRIX_FILE)
    }

    pub fn rank_scan(&self) -> PathBuf {
        self.root.join(RANK_SCAN_FILE)
    }

    pub fn spectrum(&self) -> PathBuf {
        self.root.join(SPECTRUM_FILE)
    }

    pub fn factors(&self) -> PathBuf {
        self.root.join("factors")
    }

    pub fn ustas(&self) -> PathBuf {
        self.root.join("ustas")
    }

    pub fn clusters(&self) -> PathBuf {
        self.root.join("clusters")
    }

    pub fn zones(&self) -> PathBuf {
        self.root.join("zones")
    }
}

pub fn pipeline(args: &PipelineArgs) -> std::result::Result<(), StageError> {
    let layout = PipelineLayout::new(&args.out);
    let categories = args.input.join(CATEGORIES_FILE);
    tagged(
        "ingest",
        ingest(&IngestArgs {
            checkins: args.input.join(CHECKINS_FILE),
            out: layout.clean_checkins(),
            min_gap_secs: args.min_gap_secs,
            lonlat_ref: None,
        }),
    )?;
    tagged(
        "build",
        build(&BuildArgs {
            checkins: layout.clean_checkins(),
            grid: args.input.join(GRID_FILE),
            categories: categories.exists().then_some(categories),
            out: layout.matrix(),
        }),
    )?;
    let rank_bound = tagged("rank-scan", io::read_matrix(&layout.matrix()))
        .map(|m| m.m().min(m.n()))?;
    tagged(
        "rank-scan",
        rank_scan(&RankScanArgs {
            matrix: layout.matrix(),
            rmax: args.rmax.min(rank_bound),
            profiles: true,
            out: layout.rank_scan(),
            spectrum: Some(layout.spectrum()),
        }),
    )?;
    tagged(
        "decompose",
        decompose(&DecomposeArgs {
            matrix: layout.matrix(),
            rank: args.rank,
            rmax: args.rmax,
            energy: args.energy,
            error: args.error,
            out: layout.factors(),
        }),
    )?;
    tagged(
        "ustas",
        ustas(&UstasArgs {
            factors: layout.factors(),
            out: layout.ustas(),
            top_k: 10,
            plots: args.plots,
        }),
    )?;
    tagged(
        "cluster",
        cluster(&ClusterArgs {
            embedding: layout.factors().join(REGION_EMBEDDING_FILE),
            ttd_embedding: Some(layout.factors().join(TTD_EMBEDDING_FILE)),
            k: args.k,
            k_range: Some(args.k_range),
            seed: args.seed,
            restarts: ClusteringConfig::default().n_restarts,
            max_iters: ClusteringConfig::default().max_iters,
            out: layout.clusters(),
        }),
    )?;
    tagged(
        "zones",
        zones(&ZonesArgs {
            matrix: layout.matrix(),
            grid: args.input.join(GRID_FILE),
            labels: layout.clusters().join(LABELS_FILE),
            breakpoints: args.breakpoints.clone(),
            out: layout.zones(),
        }),
    )
}

fn stage_name(command: &Command) -> &'static str {
    match command {
        Command::Ingest(_) => "ingest",
        Command::Build(_) => "build",
        Command::RankScan(_) => "rank-scan",
        Command::Decompose(_) => "decompose",
        Command::Ustas(_) => "ustas",
        Command::Cluster(_) => "cluster",
        Command::Zones(_) => "zones",
        Command::Synth(_) => "synth",
        Command::Pipeline(_) => "pipeline",
    }
}

pub fn execute(command: &Command) -> std::result::Result<(), StageError> {
    let stage = stage_name(command);
    match command {
        Command::Ingest(a) => tagged(stage, ingest(a)),
        Command::Build(a) => tagged(stage, build(a)),
        Command::RankScan(a) => tagged(stage, rank_scan(a)),
        Command::Decompose(a) => tagged(stage, decompose(a)),
        Command::Ustas(a) => tagged(stage, ustas(a)),
        Command::Cluster(a) => tagged(stage, cluster(a)),
        Command::Zones(a) => tagged(stage, zones(a)),
        Command::Synth(a) => tagged(stage, synth(a)),
        Command::Pipeline(a) => pipeline(a),
    }
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit status: 0 on success, 1 on a stage failure
/// and 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_range_forms() {
        assert_eq!(parse_k_range("2..10"), Ok(KRange { lo: 2, hi: 10 }));
        assert_eq!(parse_k_range("2..=8"), Ok(KRange { lo: 2, hi: 8 }));
        assert!(parse_k_range("5..2").is_err());
        assert!(parse_k_range("0..3").is_err());
        assert!(parse_k_range("3").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["urban-lra", "rank-scan", "--bogus"]), 2);
        assert_eq!(run(["urban-lra", "frobnicate"]), 2);
        assert_eq!(run(["urban-lra", "cluster", "--embedding", "e.csv", "--k", "3", "--k-range", "2..4", "--out", "o"]), 2);
    }

    #[test]
    fn stage_failure_exits_1() {
        assert_eq!(run(["urban-lra", "rank-scan", "--matrix", "/nonexistent/m.csv", "--out", "/tmp/x.csv"]), 1);
    }

    #[test]
    fn error_line_is_single_line() {
        let e = StageError {
            stage: "build",
            error: Error::Schema("bad\nheader".into()),
        };
        assert_eq!(e.to_string(), "error: stage=build kind=schema msg=schema error: bad header");
    }
}
