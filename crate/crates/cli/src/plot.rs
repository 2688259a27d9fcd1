//! Binary PGM (P5) and PPM (P6) rendering of RAMaps, ConfMaps and
//! detection overlays. Image rows run from the farthest range bin at the top
//! to bin 0 at the bottom; columns follow the azimuth bins.

use std::io::Write;

use rodkit_core::crf::ConfMap;
use rodkit_core::postproc::Detection;
use rodkit_core::radar::{PolarGrid, RaMap};
use rodkit_core::{ClassId, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Image { width, height, channels, pixels: vec![0; width * height * channels] }
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.pixels[i..i + self.channels]
    }

    fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            self.pixels[i] = rgb[0];
        } else {
            self.pixels[i..i + 3].copy_from_slice(&rgb);
        }
    }

    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        Image { width: self.width, height: self.height, channels: 3, pixels: self.pixels.iter().flat_map(|&v| [v, v, v]).collect() }
    }

    pub fn write_pnm(&self, mut w: impl Write) -> Result<()> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        write!(w, "{magic}\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = Vec::with_capacity(self.pixels.len() + 32);
        self.write_pnm(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Magnitude scaled to the frame maximum; an all-zero map is black.
pub fn ramap_image<T: Scalar>(map: &RaMap<T>) -> Image {
    let mags: Vec<f64> = map.magnitudes().iter().map(|m| m.to_f64().unwrap_or(0.0)).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    let mut img = Image::new(map.azimuth_bins, map.range_bins, 1);
    for r in 0..map.range_bins {
        for a in 0..map.azimuth_bins {
            let v = if peak > 0.0 { mags[r * map.azimuth_bins + a] / peak } else { 0.0 };
            img.put(a, map.range_bins - 1 - r, [to_byte(v); 3]);
        }
    }
    img
}

/// Channels as color planes: pedestrian red, cyclist green, car blue.
pub fn confmap_image<T: Scalar>(conf: &ConfMap<T>) -> Image {
    let mut img = Image::new(conf.azimuth_bins, conf.range_bins, 3);
    for r in 0..conf.range_bins {
        for a in 0..conf.azimuth_bins {
            let v = |c| to_byte(conf.at(c, r, a).to_f64().unwrap_or(0.0));
            img.put(a, conf.range_bins - 1 - r, [v(ClassId::Pedestrian), v(ClassId::Cyclist), v(ClassId::Car)]);
        }
    }
    img
}

pub fn class_color(class: ClassId) -> [u8; 3] {
    match class {
        ClassId::Pedestrian => [255, 40, 40],
        ClassId::Cyclist => [40, 255, 40],
        ClassId::Car => [60, 120, 255],
    }
}

/// Marker offsets: a plus for pedestrians, a cross for cyclists, a hollow
/// square for cars.
fn marker(class: ClassId) -> Vec<(isize, isize)> {
    let mut m = vec![(0, 0)];
    for k in 1..=2isize {
        match class {
            ClassId::Pedestrian => m.extend([(k, 0), (-k, 0), (0, k), (0, -k)]),
            ClassId::Cyclist => m.extend([(k, k), (-k, -k), (k, -k), (-k, k)]),
            ClassId::Car => {}
        }
    }
    if class == ClassId::Car {
        for k in -2..=2isize {
            m.extend([(k, -2), (k, 2), (-2, k), (2, k)]);
        }
    }
    m
}

/// `base` in RGB with a class-colored marker at each detection.
pub fn overlay(base: &Image, dets: &[Detection], grid: &PolarGrid) -> Image {
    let mut img = base.to_rgb();
    for d in dets {
        let (Some(r), Some(a)) = (grid.range_bin(d.range_m), grid.azimuth_bin(d.azimuth_rad)) else {
            continue;
        };
        let y0 = (img.height - 1 - r) as isize;
        for (dx, dy) in marker(d.class) {
            let (x, y) = (a as isize + dx, y0 + dy);
            if x >= 0 && y >= 0 && (x as usize) < img.width && (y as usize) < img.height {
                img.put(x as usize, y as usize, class_color(d.class));
            }
        }
    }
    img
}
