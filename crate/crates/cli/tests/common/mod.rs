//! On-disk synthetic datasets in the layouts `multidx train` reads.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use multidx_core::audio::encode_wav_pcm16;
use multidx_core::imaging::encode_png;
use multidx_core::synthetic::{cough_clips, report_images, spectra, tabular_frame};
use multidx_core::Preset;

/// Preset feature columns plus a `label` column holding class names.
pub fn write_tabular_csv(path: &Path, preset: &Preset, n: usize, seed: u64) {
    let frame = tabular_frame(preset, n, seed);
    let names = preset.class_names();
    let mut out = String::new();
    let header: Vec<&str> = preset.features.iter().copied().chain(["label"]).collect();
    writeln!(out, "{}", header.iter().map(|h| csv_quote(h)).collect::<Vec<_>>().join(",")).unwrap();
    for r in 0..frame.n_rows() {
        let cells: Vec<String> = frame.row(r).iter().map(|v| v.map(|x| format!("{x}")).unwrap_or_default()).collect();
        writeln!(out, "{},{}", cells.join(","), names[frame.labels().unwrap()[r]]).unwrap();
    }
    std::fs::write(path, out).unwrap();
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', ' ']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One spectrum per row, intensity columns `w0..`, labels as indices.
pub fn write_spectra_csv(path: &Path, n: usize, len: usize, seed: u64) {
    let mut out = String::new();
    let header: Vec<String> = (0..len).map(|i| format!("w{i}")).chain(["label".to_string()]).collect();
    writeln!(out, "{}", header.join(",")).unwrap();
    for rec in spectra(n, len, seed) {
        let cells: Vec<String> = rec.intensities.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{},{}", cells.join(","), rec.label.unwrap()).unwrap();
    }
    std::fs::write(path, out).unwrap();
}

pub fn write_report_dirs(root: &Path, preset: &Preset, n: usize, seed: u64) {
    let names = preset.class_names();
    for s in report_images(n, 48, 40, seed) {
        let dir = root.join(&names[s.label]);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join(&s.name).with_extension("png"), encode_png(&s.image).unwrap()).unwrap();
    }
}

pub fn write_cough_dirs(root: &Path, preset: &Preset, n: usize, seed: u64) {
    let names = preset.class_names();
    for c in cough_clips(n, seed) {
        let dir = root.join(&names[c.label]);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join(&c.name), encode_wav_pcm16(&c.clip.samples, c.clip.sample_rate)).unwrap();
    }
}
