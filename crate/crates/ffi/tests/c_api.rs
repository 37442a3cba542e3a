use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use urban_lra_ffi::*;

const N: usize = ULRA_N_TTD;

fn sample_counts(m: usize) -> (Vec<usize>, Vec<f64>) {
    let ids: Vec<usize> = (0..m).map(|i| 3 * i + 1).collect();
    let counts = (0..m * N)
        .map(|k| {
            let (i, j) = (k / N, k % N);
            ((i * 31 + j * 17 + (i * j) % 7) % 23) as f64
        })
        .collect();
    (ids, counts)
}

fn last_error() -> String {
    let p = ulra_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_matrix(m: usize) -> *mut UlraMatrix {
    let (ids, counts) = sample_counts(m);
    let mut h = ptr::null_mut();
    let st = unsafe { ulra_matrix_new(ids.as_ptr(), counts.as_ptr(), m, &mut h) };
    assert_eq!(st, UlraStatus::Ok);
    h
}

#[test]
fn decomposition_through_handles() {
    let m = 12;
    let matrix = new_matrix(m);
    unsafe {
        assert_eq!(ulra_matrix_rows(matrix), m);
        let mut ids = vec![0usize; m];
        assert_eq!(ulra_matrix_region_ids(matrix, ids.as_mut_ptr(), m), UlraStatus::Ok);
        assert_eq!(ids, sample_counts(m).0);

        let mut svd = ptr::null_mut();
        assert_eq!(ulra_svd_new(matrix, &mut svd), UlraStatus::Ok);
        let p = ulra_svd_len(svd);
        assert_eq!(p, m);
        let mut s = vec![0.0; p];
        assert_eq!(ulra_svd_singular_values(svd, s.as_mut_ptr(), p), UlraStatus::Ok);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));

        for r in 1..=p {
            let (mut energy, mut error) = (0.0, 0.0);
            assert_eq!(ulra_energy_ratio(svd, r, &mut energy), UlraStatus::Ok);
            assert_eq!(ulra_reconstruction_error(matrix, svd, r, &mut error), UlraStatus::Ok);
            assert!((error * error + energy - 1.0).abs() < 1e-10);
        }

        let mut rank = 0;
        assert_eq!(ulra_suggest_rank(matrix, svd, p, 0.5, 1.0, &mut rank), UlraStatus::Ok);
        assert!(rank >= 1 && rank <= p);

        let mut emb = ptr::null_mut();
        assert_eq!(ulra_embedding_new(svd, 3, &mut emb), UlraStatus::Ok);
        assert_eq!(ulra_embedding_rank(emb), 3);
        let mut regions = vec![0.0; m * 3];
        let mut ttd = vec![0.0; N * 3];
        assert_eq!(ulra_embedding_region_coords(emb, regions.as_mut_ptr(), regions.len()), UlraStatus::Ok);
        assert_eq!(ulra_embedding_ttd_coords(emb, ttd.as_mut_ptr(), ttd.len()), UlraStatus::Ok);

        let mut labels = vec![0usize; m];
        let mut inertia = 0.0;
        let st = ulra_kmeans(regions.as_ptr(), m, 3, 3, 7, 4, labels.as_mut_ptr(), m, &mut inertia);
        assert_eq!(st, UlraStatus::Ok);
        assert!(labels.iter().all(|&l| l < 3));
        assert!(inertia >= 0.0);
        let (mut dunn, mut dbi, mut sil) = (0.0, 0.0, 0.0);
        let st = ulra_validity(regions.as_ptr(), m, 3, labels.as_ptr(), &mut dunn, &mut dbi, &mut sil);
        assert_eq!(st, UlraStatus::Ok);
        assert!((-1.0..=1.0).contains(&sil));

        ulra_embedding_free(emb);
        ulra_svd_free(svd);
        ulra_matrix_free(matrix);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut h = ptr::null_mut();
        let ids = [2usize, 1];
        let counts = vec![1.0; 2 * N];
        assert_eq!(ulra_matrix_new(ids.as_ptr(), counts.as_ptr(), 2, &mut h), UlraStatus::Schema);
        assert!(h.is_null());
        assert!(last_error().contains("increasing"), "{}", last_error());

        assert_eq!(ulra_svd_new(ptr::null(), &mut ptr::null_mut()), UlraStatus::NullPointer);
        assert!(last_error().contains("matrix"));

        let matrix = new_matrix(4);
        let mut svd = ptr::null_mut();
        assert_eq!(ulra_svd_new(matrix, &mut svd), UlraStatus::Ok);
        let mut small = [0.0; 2];
        assert_eq!(ulra_svd_singular_values(svd, small.as_mut_ptr(), 2), UlraStatus::BufferTooSmall);
        let mut e = 0.0;
        assert_eq!(ulra_energy_ratio(svd, 9, &mut e), UlraStatus::RankOutOfRange);

        let path = CString::new("/nonexistent/dir/m.csv").unwrap();
        let mut read = ptr::null_mut();
        assert_eq!(ulra_matrix_read_csv(path.as_ptr(), &mut read), UlraStatus::Io);

        let xs = [0.0, 1.0, 2.0];
        let mut ell = UlraEllipse::default();
        let st = ulra_deviational_ellipse(xs.as_ptr(), xs.as_ptr(), [1.0; 3].as_ptr(), 3, &mut ell);
        assert_eq!(st, UlraStatus::DegenerateEllipse);

        ulra_svd_free(svd);
        ulra_matrix_free(matrix);
        ulra_matrix_free(ptr::null_mut());
    }
}

#[test]
fn matrix_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.csv").to_str().unwrap()).unwrap();
    unsafe {
        let matrix = new_matrix(5);
        assert_eq!(ulra_matrix_write_csv(matrix, path.as_ptr()), UlraStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ulra_matrix_read_csv(path.as_ptr(), &mut back), UlraStatus::Ok);
        assert_eq!(ulra_matrix_rows(back), 5);
        ulra_matrix_free(back);
        ulra_matrix_free(matrix);
    }
}

#[test]
fn ellipse_of_diagonal_points() {
    let xs: Vec<f64> = (-10..=10).map(|i| i as f64 + if i % 2 == 0 { 0.1 } else { -0.1 }).collect();
    let ys: Vec<f64> = (-10..=10).map(|i| i as f64).collect();
    let ws = vec![1.0; xs.len()];
    let mut e = UlraEllipse::default();
    let st = unsafe { ulra_deviational_ellipse(xs.as_ptr(), ys.as_ptr(), ws.as_ptr(), xs.len(), &mut e) };
    assert_eq!(st, UlraStatus::Ok);
    assert!((e.rotation_deg - 45.0).abs() < 1.0, "{e:?}");
    assert!(e.axis_ratio > 10.0);
}

fn header_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("urban_lra.h")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(header_path()).unwrap();
    let lib = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    for line in lib.lines().filter(|l| l.contains("extern \"C\" fn ")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.starts_with("#ifndef URBAN_LRA_H"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("skipping: no C compiler");
        return;
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(header_path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "urban_lra.h"

int main(void) {
    size_t ids[3] = {0, 1, 2};
    double counts[3 * ULRA_N_TTD];
    for (size_t i = 0; i < 3 * ULRA_N_TTD; i++) counts[i] = (double)((i * 7) % 5);
    UlraMatrix *m = NULL;
    if (ulra_matrix_new(ids, counts, 3, &m) != ULRA_STATUS_OK) return 1;
    UlraSvd *svd = NULL;
    if (ulra_svd_new(m, &svd) != ULRA_STATUS_OK) return 2;
    double energy = 0.0, error = 0.0;
    if (ulra_energy_ratio(svd, 1, &energy) != ULRA_STATUS_OK) return 3;
    if (ulra_reconstruction_error(m, svd, 1, &error) != ULRA_STATUS_OK) return 4;
    if (ulra_energy_ratio(svd, 99, &energy) != ULRA_STATUS_RANK_OUT_OF_RANGE) return 5;
    if (ulra_last_error() == NULL) return 6;
    printf("%s %.12f\n", ulra_version(), error * error + energy);
    ulra_svd_free(svd);
    ulra_matrix_free(m);
    return 0;
}
"#;

fn staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("liburban_lra_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_static_library() {
    let Some(lib) = staticlib().filter(|_| have_cc()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = header_path().parent().unwrap().to_path_buf();
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    assert_eq!(text.trim(), format!("{} 1.000000000000", env!("CARGO_PKG_VERSION")));
}
