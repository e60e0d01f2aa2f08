use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::GrayImage;
use crate::{Error, Result};

/// Decodes a PNG; colour images are reduced with `0.299 R + 0.587 G + 0.114 B`.
pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Image(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(g) => g.as_raw().chunks_exact(2).map(|p| p[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(g) => g.as_raw().chunks_exact(2).map(|p| p[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => img
            .to_rgb16()
            .as_raw()
            .chunks_exact(3)
            .map(|p| luma(p[0] as f64, p[1] as f64, p[2] as f64) / 65535.0)
            .collect(),
        _ => img
            .to_rgb8()
            .as_raw()
            .chunks_exact(3)
            .map(|p| luma(p[0] as f64, p[1] as f64, p[2] as f64) / 255.0)
            .collect(),
    };
    GrayImage::new(w, h, pixels)
}

fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// 8-bit grayscale PNG.
pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    let raw: Vec<u8> = img.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, raw)
        .ok_or_else(|| Error::Image("pixel buffer does not match dimensions".into()))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png).map_err(|e| Error::Image(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn read_png(path: &Path) -> Result<GrayImage> {
    decode_png(&std::fs::read(path)?)
}

pub fn write_png(img: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
