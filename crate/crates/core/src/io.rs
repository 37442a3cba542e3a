//! Readers and writers for every on-disk artifact.
//!
//! All tables are UTF-8 CSV with a header row. Floats are written in their
//! shortest round-trip form, so reading a file back yields bit-identical
//! values; an infinite Dunn index is written as `inf`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::clustering::ValidityScores;
use crate::error::{Error, Result};
use crate::ingest::{DemandCategory, HOURS};
use crate::linalg::Mat;
use crate::lra::{RankScanReport, RankScanRow, TruncatedLra};
use crate::matrix::{parse_ttd_label, ttd_labels, RttdMatrix, N_TTD};
use crate::urbanform::ZoneProfile;
use crate::ustas::{Ustas, UstasSummary};

/// Shortest round-trip text for `v`; exponent form for very small or large
/// magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("line {line}: bad {what} '{field}'")))
}

fn parse_usize(field: &str, what: &str, line: u64) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("line {line}: bad {what} '{field}'")))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Creates `path` (and its parent directories) for writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[String]) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Schema(format!(
            "expected header '{}', found '{}'",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// Reads a headed table whose first column is an id and the remaining
/// `prefix1..prefixN` columns are floats. Returns ids and the value matrix.
fn read_labelled_table<R: Read>(input: R, id_name: &str, prefix: &str) -> Result<(Vec<String>, Mat)> {
    let mut rdr = csv_reader(input);
    let header = rdr.headers()?.clone();
    let width = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once(id_name.to_string())
        .chain(numbered(prefix, width))
        .collect();
    check_header(&mut rdr, &expected)?;
    if width == 0 {
        return Err(Error::Schema(format!("table has no {prefix}* columns")));
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        ids.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            data.push(parse_f64(field, "value", line)?);
        }
    }
    let m = ids.len();
    Ok((ids, Mat::from_row_major(m, width, data)))
}

fn write_labelled_table<W: Write>(out: W, id_name: &str, prefix: &str, ids: &[String], values: &Mat) -> Result<()> {
    if ids.len() != values.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{} ids for {} rows",
            ids.len(),
            values.nrows()
        )));
    }
    let mut w = csv_writer(out);
    let header: Vec<String> = std::iter::once(id_name.to_string())
        .chain(numbered(prefix, values.ncols()))
        .collect();
    w.write_record(&header)?;
    for (id, row) in ids.iter().zip(values.rows_iter()) {
        w.write_record(std::iter::once(id.clone()).chain(row.iter().map(|&v| fmt_f64(v))))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_ids(ids: &[String], what: &str) -> Result<Vec<usize>> {
    ids.iter()
        .enumerate()
        .map(|(i, s)| parse_usize(s, what, i as u64 + 2))
        .collect()
}

fn id_strings(ids: &[usize]) -> Vec<String> {
    ids.iter().map(usize::to_string).collect()
}

fn parse_ttd_ids(ids: &[String]) -> Result<()> {
    if ids.len() != N_TTD {
        return Err(Error::Schema(format!("expected {N_TTD} ttd rows, found {}", ids.len())));
    }
    for (c, id) in ids.iter().enumerate() {
        match parse_ttd_label(id) {
            Some(t) if t.column() == c => {}
            _ => return Err(Error::Schema(format!("line {}: expected ttd '{}', found '{id}'", c + 2, ttd_labels()[c]))),
        }
    }
    Ok(())
}

// ---- matrix -------------------------------------------------------------

pub fn matrix_header() -> Vec<String> {
    std::iter::once("region_id".to_string()).chain(ttd_labels()).collect()
}

pub fn write_matrix_to<W: Write>(out: W, matrix: &RttdMatrix) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(matrix_header())?;
    for (id, row) in matrix.region_ids.iter().zip(matrix.values.rows_iter()) {
        w.write_record(std::iter::once(id.to_string()).chain(row.iter().map(|&v| fmt_f64(v))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_from<R: Read>(input: R) -> Result<RttdMatrix> {
    let mut rdr = csv_reader(input);
    check_header(&mut rdr, &matrix_header())?;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != N_TTD + 1 {
            return Err(Error::Schema(format!("line {line}: expected {} fields", N_TTD + 1)));
        }
        ids.push(parse_usize(&rec[0], "region_id", line)?);
        for field in rec.iter().skip(1) {
            data.push(parse_f64(field, "count", line)?);
        }
    }
    let m = ids.len();
    RttdMatrix::new(ids, Mat::from_row_major(m, N_TTD, data))
}

pub fn write_matrix(path: &Path, matrix: &RttdMatrix) -> Result<()> {
    write_matrix_to(create(path)?, matrix)
}

pub fn read_matrix(path: &Path) -> Result<RttdMatrix> {
    read_matrix_from(open(path)?)
}

// ---- factors ------------------------------------------------------------

pub const U_FILE: &str = "U.csv";
pub const S_FILE: &str = "S.csv";
pub const V_FILE: &str = "V.csv";

/// Writes `U.csv` (`region_id,u1..ur`), `S.csv` (`index,sigma`) and `V.csv`
/// (`ttd,v1..vr`) into `dir`.
pub fn write_factors(dir: &Path, region_ids: &[usize], t: &TruncatedLra) -> Result<()> {
    write_labelled_table(create(&dir.join(U_FILE))?, "region_id", "u", &id_strings(region_ids), &t.u)?;
    write_spectrum(&dir.join(S_FILE), &t.s)?;
    write_labelled_table(create(&dir.join(V_FILE))?, "ttd", "v", &ttd_labels(), &t.v)
}

pub fn read_factors(dir: &Path) -> Result<(Vec<usize>, TruncatedLra)> {
    let (ids, u) = read_labelled_table(open(&dir.join(U_FILE))?, "region_id", "u")?;
    let region_ids = parse_ids(&ids, "region_id")?;
    let s = read_spectrum(&dir.join(S_FILE))?;
    let (ttd, v) = read_labelled_table(open(&dir.join(V_FILE))?, "ttd", "v")?;
    parse_ttd_ids(&ttd)?;
    if u.ncols() != s.len() || v.ncols() != s.len() {
        return Err(Error::Schema(format!(
            "factor ranks disagree: U has {}, S has {}, V has {}",
            u.ncols(),
            s.len(),
            v.ncols()
        )));
    }
    Ok((region_ids, TruncatedLra { u, s, v }))
}

/// `index,sigma`, 1-based.
pub fn write_spectrum(path: &Path, s: &[f64]) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["index", "sigma"])?;
    for (i, &v) in s.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv_reader(open(path)?);
    check_header(&mut rdr, &["index".into(), "sigma".into()])?;
    let mut s = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if parse_usize(&rec[0], "index", line)? != s.len() + 1 {
            return Err(Error::Schema(format!("line {line}: indices must run 1, 2, ...")));
        }
        s.push(parse_f64(&rec[1], "sigma", line)?);
    }
    Ok(s)
}

// ---- rank scan ----------------------------------------------------------

pub fn write_rank_scan_to<W: Write>(out: W, report: &RankScanReport) -> Result<()> {
    let with_profiles = report.rows.iter().any(|r| r.profile_residual.is_some());
    let mut w = csv_writer(out);
    let mut header = vec!["r", "error", "energy"];
    if with_profiles {
        header.push("profile_residual");
    }
    w.write_record(&header)?;
    for row in &report.rows {
        let mut fields = vec![row.r.to_string(), fmt_f64(row.error), fmt_f64(row.energy)];
        if with_profiles {
            fields.push(row.profile_residual.map(fmt_f64).unwrap_or_default());
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rank_scan(path: &Path, report: &RankScanReport) -> Result<()> {
    write_rank_scan_to(create(path)?, report)
}

/// Rows of a rank-scan CSV; singular values are not part of the file.
pub fn read_rank_scan(path: &Path) -> Result<Vec<RankScanRow>> {
    let mut rdr = csv_reader(open(path)?);
    let header = rdr.headers()?.clone();
    let with_profiles = header.len() == 4;
    let mut expected: Vec<String> = vec!["r".into(), "error".into(), "energy".into()];
    if with_profiles {
        expected.push("profile_residual".into());
    }
    check_header(&mut rdr, &expected)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        rows.push(RankScanRow {
            r: parse_usize(&rec[0], "r", line)?,
            error: parse_f64(&rec[1], "error", line)?,
            energy: parse_f64(&rec[2], "energy", line)?,
            profile_residual: if with_profiles && !rec[3].is_empty() {
                Some(parse_f64(&rec[3], "profile_residual", line)?)
            } else {
                None
            },
        });
    }
    Ok(rows)
}

// ---- USTAS --------------------------------------------------------------

pub const USTAS_SIGN_NOTE: &str =
    "# signs: the spatial loading of largest magnitude is nonnegative; temporal signs follow";

/// One structure as `section,id,hour,value` rows: a `sigma` row, one
/// `spatial` row per region and one `temporal` row per demand-hour.
pub fn write_ustas(path: &Path, structure: &Ustas, region_ids: &[usize]) -> Result<()> {
    if region_ids.len() != structure.spatial.len() {
        return Err(Error::InvalidArgument(format!(
            "{} region ids for {} spatial loadings",
            region_ids.len(),
            structure.spatial.len()
        )));
    }
    let table = structure.temporal_table()?;
    let mut out = create(path)?;
    writeln!(out, "{USTAS_SIGN_NOTE}").map_err(|e| Error::io(path, e))?;
    let mut w = csv_writer(out);
    w.write_record(["section", "id", "hour", "value"])?;
    w.write_record(["sigma", &structure.index.to_string(), "", &fmt_f64(structure.sigma)])?;
    for (id, &v) in region_ids.iter().zip(&structure.spatial) {
        w.write_record(["spatial", &id.to_string(), "", &fmt_f64(v)])?;
    }
    for (d, row) in table.iter().enumerate() {
        let code = DemandCategory::from_ordinal(d).expect("ordinal < COUNT").code();
        for (h, &v) in row.iter().enumerate() {
            w.write_record(["temporal", code, &h.to_string(), &fmt_f64(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a file written by [`write_ustas`]; returns the structure and the
/// region ids of its spatial loadings.
pub fn read_ustas(path: &Path) -> Result<(Ustas, Vec<usize>)> {
    let mut rdr = csv_reader(open(path)?);
    check_header(&mut rdr, &["section".into(), "id".into(), "hour".into(), "value".into()])?;
    let mut sigma = None;
    let mut region_ids = Vec::new();
    let mut spatial = Vec::new();
    let mut temporal = vec![None; N_TTD];
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let value = parse_f64(&rec[3], "value", line)?;
        match &rec[0] {
            "sigma" => sigma = Some((parse_usize(&rec[1], "index", line)?, value)),
            "spatial" => {
                region_ids.push(parse_usize(&rec[1], "region_id", line)?);
                spatial.push(value);
            }
            "temporal" => {
                let d: DemandCategory = rec[1]
                    .parse()
                    .map_err(|_| Error::Schema(format!("line {line}: bad demand '{}'", &rec[1])))?;
                let h = parse_usize(&rec[2], "hour", line)?;
                if h >= HOURS {
                    return Err(Error::Schema(format!("line {line}: hour {h} out of range")));
                }
                temporal[d.ordinal() * HOURS + h] = Some(value);
            }
            other => return Err(Error::Schema(format!("line {line}: unknown section '{other}'"))),
        }
    }
    let (index, sigma) = sigma.ok_or_else(|| Error::Schema("missing sigma row".into()))?;
    let temporal = temporal
        .into_iter()
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::Schema(format!("temporal section must cover all {N_TTD} columns")))?;
    Ok((
        Ustas {
            index,
            sigma,
            spatial,
            temporal,
        },
        region_ids,
    ))
}

pub fn ustas_file_name(index: usize) -> String {
    format!("ustas_{index:02}.csv")
}

/// `index,sigma,rank,region_id,loading`: the top regions of every
/// structure.
pub fn write_ustas_summary(path: &Path, summaries: &[UstasSummary]) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["index", "sigma", "rank", "region_id", "loading"])?;
    for s in summaries {
        for (rank, &(region, loading)) in s.top_regions.iter().enumerate() {
            w.write_record([
                s.index.to_string(),
                fmt_f64(s.sigma),
                (rank + 1).to_string(),
                region.to_string(),
                fmt_f64(loading),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---- embeddings ---------------------------------------------------------

pub fn write_region_embedding(path: &Path, region_ids: &[usize], coords: &Mat) -> Result<()> {
    write_labelled_table(create(path)?, "region_id", "c", &id_strings(region_ids), coords)
}

pub fn read_region_embedding(path: &Path) -> Result<(Vec<usize>, Mat)> {
    let (ids, coords) = read_labelled_table(open(path)?, "region_id", "c")?;
    Ok((parse_ids(&ids, "region_id")?, coords))
}

pub fn write_ttd_embedding(path: &Path, coords: &Mat) -> Result<()> {
    write_labelled_table(create(path)?, "ttd", "c", &ttd_labels(), coords)
}

pub fn read_ttd_embedding(path: &Path) -> Result<Mat> {
    let (ids, coords) = read_labelled_table(open(path)?, "ttd", "c")?;
    parse_ttd_ids(&ids)?;
    Ok(coords)
}

// ---- clusters -----------------------------------------------------------

pub fn write_labels(path: &Path, region_ids: &[usize], labels: &[usize]) -> Result<()> {
    if region_ids.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} region ids for {} labels",
            region_ids.len(),
            labels.len()
        )));
    }
    let mut w = csv_writer(create(path)?);
    w.write_record(["region_id", "cluster"])?;
    for (id, label) in region_ids.iter().zip(labels) {
        w.write_record([id.to_string(), label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Returns `(region_ids, labels)`.
pub fn read_labels(path: &Path) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rdr = csv_reader(open(path)?);
    check_header(&mut rdr, &["region_id".into(), "cluster".into()])?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        ids.push(parse_usize(&rec[0], "region_id", line)?);
        labels.push(parse_usize(&rec[1], "cluster", line)?);
    }
    Ok((ids, labels))
}

pub fn write_centers(path: &Path, centers: &Mat) -> Result<()> {
    let ids: Vec<String> = (0..centers.nrows()).map(|c| c.to_string()).collect();
    write_labelled_table(create(path)?, "cluster", "c", &ids, centers)
}

pub fn read_centers(path: &Path) -> Result<Mat> {
    let (ids, centers) = read_labelled_table(open(path)?, "cluster", "c")?;
    for (c, id) in ids.iter().enumerate() {
        if parse_usize(id, "cluster", c as u64 + 2)? != c {
            return Err(Error::Schema(format!("line {}: clusters must run 0, 1, ...", c + 2)));
        }
    }
    Ok(centers)
}

pub fn write_validity(path: &Path, scores: &[ValidityScores]) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["k", "dunn", "dbi", "silhouette"])?;
    for s in scores {
        w.write_record([
            s.k.to_string(),
            fmt_f64(s.dunn),
            fmt_f64(s.davies_bouldin),
            fmt_f64(s.silhouette),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_validity(path: &Path) -> Result<Vec<ValidityScores>> {
    let mut rdr = csv_reader(open(path)?);
    check_header(
        &mut rdr,
        &["k".into(), "dunn".into(), "dbi".into(), "silhouette".into()],
    )?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        out.push(ValidityScores {
            k: parse_usize(&rec[0], "k", line)?,
            dunn: parse_f64(&rec[1], "dunn", line)?,
            davies_bouldin: parse_f64(&rec[2], "dbi", line)?,
            silhouette: parse_f64(&rec[3], "silhouette", line)?,
        });
    }
    Ok(out)
}

/// `cluster,demand,hour,similarity` from a `k × 144` similarity matrix.
pub fn write_characterization(path: &Path, similarity: &Mat) -> Result<()> {
    if similarity.ncols() != N_TTD {
        return Err(Error::InvalidArgument(format!(
            "characterization needs {N_TTD} columns, found {}",
            similarity.ncols()
        )));
    }
    let mut w = csv_writer(create(path)?);
    w.write_record(["cluster", "demand", "hour", "similarity"])?;
    for (c, row) in similarity.rows_iter().enumerate() {
        for (col, &v) in row.iter().enumerate() {
            let d = DemandCategory::from_ordinal(col / HOURS).expect("column < N_TTD");
            w.write_record([c.to_string(), d.code().to_string(), (col % HOURS).to_string(), fmt_f64(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---- zones --------------------------------------------------------------

/// One row per (zone, cluster); an empty zone gets a single row with blank
/// cluster and proportion. `cell_count` is the cluster's cells in the zone.
pub fn write_zones(path: &Path, profile: &ZoneProfile) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["zone_index", "inner_km", "outer_km", "cluster", "proportion", "cell_count"])?;
    for z in &profile.zones {
        let head = [z.index.to_string(), fmt_f64(z.inner_km), fmt_f64(z.outer_km)];
        if z.is_empty() {
            w.write_record(head.iter().cloned().chain(["".into(), "".into(), "0".into()]))?;
            continue;
        }
        for c in 0..profile.n_clusters {
            let p = z.proportion(c).expect("zone is not empty");
            w.write_record(head.iter().cloned().chain([
                c.to_string(),
                fmt_f64(p),
                z.cluster_counts[c].to_string(),
            ]))?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---- plots --------------------------------------------------------------

/// 6 × 24 heatmap of a signed table: red for positive, blue for negative,
/// intensity scaled by the largest magnitude.
pub fn heatmap_svg(table: &[[f64; HOURS]; DemandCategory::COUNT], title: &str) -> String {
    const CELL: usize = 20;
    const LEFT: usize = 40;
    const TOP: usize = 30;
    let max = table
        .iter()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let width = LEFT + HOURS * CELL + 10;
    let height = TOP + DemandCategory::COUNT * CELL + 30;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="{LEFT}" y="18" font-size="12">{}</text>"#, escape_xml(title));
    for (d, row) in table.iter().enumerate() {
        let y = TOP + d * CELL;
        let code = DemandCategory::from_ordinal(d).expect("ordinal < COUNT").code();
        let _ = writeln!(s, r#"<text x="4" y="{}">{code}</text>"#, y + 14);
        for (h, &v) in row.iter().enumerate() {
            let t = if max > 0.0 { v.abs() / max } else { 0.0 };
            let fade = (255.0 * (1.0 - t)).round() as u8;
            let (r, g, b) = if v >= 0.0 { (255, fade, fade) } else { (fade, fade, 255) };
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="#{r:02x}{g:02x}{b:02x}"><title>{code}{h:02} {}</title></rect>"##,
                LEFT + h * CELL,
                fmt_f64(v)
            );
        }
    }
    for h in (0..HOURS).step_by(3) {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{h}</text>"#,
            LEFT + h * CELL + 4,
            TOP + DemandCategory::COUNT * CELL + 14
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
