//! Dataset loaders for the directory and CSV layouts the presets consume.

use std::path::{Path, PathBuf};

use crate::audio::{decode_wav, AudioClip};
use crate::imaging::{read_png, GrayImage, SpectralRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub name: String,
    pub clip: AudioClip,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub name: String,
    pub image: GrayImage,
    pub label: usize,
}

/// Files with `extension` under `root/<class name>/`, one subdirectory per
/// class, each sorted by file name.
fn class_files(root: &Path, class_names: &[String], extension: &str) -> Result<Vec<(PathBuf, usize)>> {
    let mut out = Vec::new();
    for (label, class) in class_names.iter().enumerate() {
        let dir = root.join(class);
        if !dir.is_dir() {
            return Err(Error::Schema(format!("missing class directory {}", dir.display())));
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case(extension)))
            .collect();
        files.sort();
        out.extend(files.into_iter().map(|p| (p, label)));
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

fn display_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// WAV recordings laid out as `root/<class name>/*.wav`.
pub fn load_audio_dir(root: &Path, class_names: &[String]) -> Result<Vec<LabeledClip>> {
    class_files(root, class_names, "wav")?
        .into_iter()
        .map(|(path, label)| {
            let bytes = std::fs::read(&path)?;
            let clip = decode_wav(&bytes).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            Ok(LabeledClip { name: display_name(&path), clip, label })
        })
        .collect()
}

/// PNG images laid out as `root/<class name>/*.png`.
pub fn load_image_dir(root: &Path, class_names: &[String]) -> Result<Vec<ImageSample>> {
    class_files(root, class_names, "png")?
        .into_iter()
        .map(|(path, label)| {
            let image = read_png(&path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            Ok(ImageSample { name: display_name(&path), image, label })
        })
        .collect()
}

/// One spectrum per row: every column except `label_name` is an intensity,
/// in header order. Labels may be class names or class indices.
pub fn read_spectra_csv(path: &Path, label_name: &str, class_names: &[String]) -> Result<Vec<SpectralRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_col = header
        .iter()
        .position(|h| h == label_name)
        .ok_or_else(|| Error::Schema(format!("missing label column {label_name:?}")))?;
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let mut intensities = Vec::with_capacity(header.len() - 1);
        let mut label = None;
        for (c, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if c == label_col {
                label = class_names
                    .iter()
                    .position(|n| n == cell)
                    .or_else(|| cell.parse::<usize>().ok().filter(|&i| i < class_names.len()));
                if label.is_none() {
                    return Err(Error::Schema(format!("row {}: unrecognised label {cell:?}", line + 1)));
                }
            } else {
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::Schema(format!("row {}, column {:?}: not a number", line + 1, header[c])))?;
                intensities.push(v);
            }
        }
        if intensities.len() != header.len() - 1 {
            return Err(Error::Schema(format!("row {}: expected {} values", line + 1, header.len() - 1)));
        }
        out.push(SpectralRecord { intensities, label });
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}
