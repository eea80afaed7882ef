//! Synthetic test images.

use std::fs;
use std::path::Path;

use evoimage_core::{RasterImage, RgbPixel, RngStream, StreamId};

use crate::args::SynthKind;
use crate::error::CliError;
use crate::imageio::save_png;

pub fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("size `{s}`: expected WIDTHxHEIGHT"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

pub fn parse_rgb(s: &str) -> Result<RgbPixel, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || CliError::Usage(format!("color `{s}`: expected R,G,B with values 0-255"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut c = [0u8; 3];
    for (slot, part) in c.iter_mut().zip(parts) {
        *slot = part.trim().parse().map_err(|_| bad())?;
    }
    Ok(c.into())
}

pub fn solid(width: usize, height: usize, color: RgbPixel) -> Result<RasterImage, CliError> {
    Ok(RasterImage::filled(width, height, color)?)
}

pub fn checkerboard(
    width: usize,
    height: usize,
    cell: usize,
    a: RgbPixel,
    b: RgbPixel,
) -> Result<RasterImage, CliError> {
    if cell == 0 {
        return Err(CliError::Usage("cell size must be positive".into()));
    }
    Ok(RasterImage::from_fn(width, height, |c| {
        if (c.i / cell + c.j / cell).is_multiple_of(2) { a } else { b }
    })?)
}

fn random_pixel(rng: &mut RngStream) -> RgbPixel {
    RgbPixel::new(rng.below(256) as u8, rng.below(256) as u8, rng.below(256) as u8)
}

pub fn random(width: usize, height: usize, seed: u64) -> Result<RasterImage, CliError> {
    let mut rng = RngStream::new(seed, StreamId::Flip);
    Ok(RasterImage::from_fn(width, height, |_| random_pixel(&mut rng))?)
}

/// A `grid x grid` board of random colors and a second board whose squares
/// are a non-trivial permutation of the first one's.
pub fn squares_pair(
    width: usize,
    height: usize,
    grid: usize,
    seed: u64,
) -> Result<(RasterImage, RasterImage), CliError> {
    if grid == 0 || !width.is_multiple_of(grid) || !height.is_multiple_of(grid) {
        return Err(CliError::Usage(format!(
            "grid {grid} must divide both sides of {width}x{height}"
        )));
    }
    let mut rng = RngStream::new(seed, StreamId::Flip);
    let count = grid * grid;
    let colors: Vec<RgbPixel> = (0..count).map(|_| random_pixel(&mut rng)).collect();
    let mut perm: Vec<usize> = (0..count).collect();
    for k in (1..count).rev() {
        perm.swap(k, rng.below(k + 1));
    }
    if count > 1 && perm.iter().enumerate().all(|(k, &p)| k == p) {
        perm.rotate_left(1);
    }
    let (sw, sh) = (width / grid, height / grid);
    let square = |c: evoimage_core::TorusCoord| (c.i / sh) * grid + c.j / sw;
    let first = RasterImage::from_fn(width, height, |c| colors[square(c)])?;
    let second = RasterImage::from_fn(width, height, |c| colors[perm[square(c)]])?;
    Ok((first, second))
}

pub fn synth(kind: SynthKind) -> Result<(), CliError> {
    match kind {
        SynthKind::Solid { rgb, size, out } => {
            let (w, h) = parse_size(&size)?;
            save_png(&out, &solid(w, h, parse_rgb(&rgb)?)?)
        }
        SynthKind::Checkerboard { rgb, rgb2, cell, size, out } => {
            let (w, h) = parse_size(&size)?;
            save_png(&out, &checkerboard(w, h, cell, parse_rgb(&rgb)?, parse_rgb(&rgb2)?)?)
        }
        SynthKind::Random { seed, size, out } => {
            let (w, h) = parse_size(&size)?;
            save_png(&out, &random(w, h, seed)?)
        }
        SynthKind::SquaresPair { seed, size, grid, out } => {
            let (w, h) = parse_size(&size)?;
            let (a, b) = squares_pair(w, h, grid, seed)?;
            fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            save_png(&Path::new(&out).join("color1.png"), &a)?;
            save_png(&Path::new(&out).join("color2.png"), &b)
        }
    }
}
