//! Aesthetic feature metrics: Benford's law fit of the luminance histogram,
//! global contrast factor, mean hue and Hasler-Süsstrunk colorfulness.

use crate::raster::{RasterImage, RgbPixel};

/// Benford first-digit frequencies, largest first.
pub const BENFORD_REFERENCE: [f64; 9] = [0.301, 0.176, 0.125, 0.097, 0.079, 0.067, 0.058, 0.051, 0.046];

/// Recorded in run manifests so feature values are self-describing.
pub const LUMA_CONVENTION: &str = "rec601 luma 0.299R+0.587G+0.114B; benford: 9 equal-width bins over [0,255]";
pub const GCF_CONVENTION: &str =
    "gcf: linear l=(luma/255)^2.2 averaged per superpixel, perceptual L=100*sqrt(l), non-wrapping 4-neighborhood";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub benford: f64,
    pub gcf: f64,
    pub hue: f64,
    pub colorfulness: f64,
}

/// Rec.601 luma in `[0, 255]`.
pub fn luma(p: RgbPixel) -> f64 {
    0.299 * f64::from(p.r) + 0.587 * f64::from(p.g) + 0.114 * f64::from(p.b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Histogram9 {
    pub bins: [f64; 9],
}

impl Histogram9 {
    /// Luma histogram with 9 equal-width bins over `[0, 255]`.
    pub fn of_luma(image: &RasterImage) -> Self {
        let mut bins = [0.0; 9];
        for &p in image.pixels() {
            let bin = ((luma(p) * 9.0 / 255.0).floor() as usize).min(8);
            bins[bin] += 1.0;
        }
        Self { bins }
    }

    pub fn normalized(&self) -> Self {
        let total: f64 = self.bins.iter().sum();
        if total == 0.0 {
            return *self;
        }
        Self {
            bins: self.bins.map(|b| b / total),
        }
    }

    /// Descending by frequency; equal bins keep their original order.
    pub fn sorted_desc(&self) -> Self {
        let mut bins = self.bins;
        // sort_by is stable
        bins.sort_by(|a, b| b.total_cmp(a));
        Self { bins }
    }
}

/// Similarity of the sorted luminance histogram to Benford's distribution,
/// `1 - d_total / d_max`, in `[0, 1]`.
pub fn benford(image: &RasterImage) -> f64 {
    benford_of_histogram(&Histogram9::of_luma(image))
}

pub fn benford_of_histogram(hist: &Histogram9) -> f64 {
    let h = hist.sorted_desc().normalized();
    let d_total: f64 = h
        .bins
        .iter()
        .zip(BENFORD_REFERENCE)
        .map(|(x, r)| (x - r).abs())
        .sum();
    let d_max = 2.0 * (1.0 - BENFORD_REFERENCE[0]);
    (1.0 - d_total / d_max).clamp(0.0, 1.0)
}

/// Superpixel sizes and their weights for the global contrast factor.
#[derive(Clone, Debug, PartialEq)]
pub struct GcfWeights {
    pub sizes: [usize; 9],
    pub weights: [f64; 9],
}

impl GcfWeights {
    pub const SIZES: [usize; 9] = [1, 2, 4, 8, 16, 25, 50, 100, 200];

    /// Matkovic et al. resolution weights,
    /// `w_i = (-0.406385 * i/9 + 0.334573) * i/9 + 0.0877526`, finest first.
    pub fn matkovic() -> Self {
        let weights = std::array::from_fn(|k| {
            let x = (k + 1) as f64 / 9.0;
            (-0.406385 * x + 0.334573) * x + 0.0877526
        });
        Self {
            sizes: Self::SIZES,
            weights,
        }
    }

    pub fn with_weights(weights: [f64; 9]) -> Self {
        Self {
            sizes: Self::SIZES,
            weights,
        }
    }
}

impl Default for GcfWeights {
    fn default() -> Self {
        Self::matkovic()
    }
}

fn linear_luminance(image: &RasterImage) -> Vec<f64> {
    image
        .pixels()
        .iter()
        .map(|&p| (luma(p) / 255.0).powf(2.2))
        .collect()
}

/// Perceptual luminance grid of superpixels of side `size`. Partial blocks at
/// the right and bottom edges average over the pixels they actually hold.
fn superpixel_grid(linear: &[f64], width: usize, height: usize, size: usize) -> (Vec<f64>, usize, usize) {
    let cols = width.div_ceil(size);
    let rows = height.div_ceil(size);
    // accumulate offsets from each block's first pixel so uniform blocks
    // average to exactly that pixel's value
    let mut base = vec![f64::NAN; rows * cols];
    let mut offset = vec![0.0; rows * cols];
    let mut count = vec![0u32; rows * cols];
    for i in 0..height {
        let bi = i / size;
        for j in 0..width {
            let cell = bi * cols + j / size;
            let v = linear[i * width + j];
            if count[cell] == 0 {
                base[cell] = v;
            } else {
                offset[cell] += v - base[cell];
            }
            count[cell] += 1;
        }
    }
    let perceptual = base
        .iter()
        .zip(&offset)
        .zip(&count)
        .map(|((b, o), &c)| 100.0 * (b + o / f64::from(c)).sqrt())
        .collect();
    (perceptual, rows, cols)
}

/// Mean over the grid of the summed absolute differences to the (up to four)
/// existing neighbors.
fn mean_local_contrast(grid: &[f64], rows: usize, cols: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let here = grid[i * cols + j];
            let mut lc = 0.0;
            if i > 0 {
                lc += (grid[(i - 1) * cols + j] - here).abs();
            }
            if i + 1 < rows {
                lc += (grid[(i + 1) * cols + j] - here).abs();
            }
            if j > 0 {
                lc += (grid[i * cols + j - 1] - here).abs();
            }
            if j + 1 < cols {
                lc += (grid[i * cols + j + 1] - here).abs();
            }
            total += lc;
        }
    }
    total / (rows * cols) as f64
}

/// Per-resolution mean local contrast `C_r`, in the order of `weights.sizes`.
pub fn gcf_contrasts(image: &RasterImage, weights: &GcfWeights) -> [f64; 9] {
    let linear = linear_luminance(image);
    let (w, h) = (image.width(), image.height());
    weights.sizes.map(|size| {
        let (grid, rows, cols) = superpixel_grid(&linear, w, h, size.max(1));
        mean_local_contrast(&grid, rows, cols)
    })
}

pub fn gcf(image: &RasterImage, weights: &GcfWeights) -> f64 {
    gcf_contrasts(image, weights)
        .iter()
        .zip(weights.weights)
        .map(|(c, w)| c * w)
        .sum()
}

/// HSV hue scaled to `[0, 1)`; achromatic pixels map to 0.
pub fn hue(p: RgbPixel) -> f64 {
    let (r, g, b) = (f64::from(p.r), f64::from(p.g), f64::from(p.b));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return 0.0;
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    sector / 6.0
}

/// Plain arithmetic mean of per-pixel hue (no circular averaging).
pub fn mean_hue(image: &RasterImage) -> f64 {
    let total: f64 = image.pixels().iter().map(|&p| hue(p)).sum();
    total / image.len() as f64
}

/// Hasler-Süsstrunk colorfulness with population statistics.
pub fn colorfulness(image: &RasterImage) -> f64 {
    let n = image.len() as f64;
    let (mut s_rg, mut s_yb, mut ss_rg, mut ss_yb) = (0.0, 0.0, 0.0, 0.0);
    for &p in image.pixels() {
        let (r, g, b) = (f64::from(p.r), f64::from(p.g), f64::from(p.b));
        let rg = (r - g).abs();
        let yb = ((r + g) / 2.0 - b).abs();
        s_rg += rg;
        s_yb += yb;
        ss_rg += rg * rg;
        ss_yb += yb * yb;
    }
    let (mu_rg, mu_yb) = (s_rg / n, s_yb / n);
    let var_rg = (ss_rg / n - mu_rg * mu_rg).max(0.0);
    let var_yb = (ss_yb / n - mu_yb * mu_yb).max(0.0);
    (var_rg + var_yb).sqrt() + 0.3 * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt()
}

pub fn evaluate(image: &RasterImage) -> FeatureVector {
    evaluate_with(image, &GcfWeights::default())
}

pub fn evaluate_with(image: &RasterImage, weights: &GcfWeights) -> FeatureVector {
    FeatureVector {
        benford: benford(image),
        gcf: gcf(image, weights),
        hue: mean_hue(image),
        colorfulness: colorfulness(image),
    }
}

pub fn feature_trace<'a>(frames: impl IntoIterator<Item = &'a RasterImage>) -> Vec<FeatureVector> {
    frames.into_iter().map(evaluate).collect()
}
