//! Raster images, per-pixel transition state and torus geometry.
//!
//! Coordinates follow matrix convention: `i` indexes rows (`0..m`), `j`
//! indexes columns (`0..n`), and pixels are stored row-major. All neighbor
//! arithmetic wraps, so the image is treated as an `m x n` torus.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RasterError {
    #[error("image dimensions must be positive (got {width}x{height})")]
    EmptyImage { width: usize, height: usize },
    #[error("pixel buffer holds {actual} pixels, expected {expected}")]
    PixelCount { expected: usize, actual: usize },
    #[error("incompatible images: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },
}

/// An 8-bit RGB pixel. Channel bounds are carried by the type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RgbPixel {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbPixel {
    pub const BLACK: RgbPixel = RgbPixel::new(0, 0, 0);
    pub const WHITE: RgbPixel = RgbPixel::new(255, 255, 255);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    /// Sum of absolute channel differences.
    pub fn l1_distance(self, other: RgbPixel) -> u32 {
        self.channels()
            .iter()
            .zip(other.channels())
            .map(|(&a, b)| u32::from(a.abs_diff(b)))
            .sum()
    }
}

impl From<[u8; 3]> for RgbPixel {
    fn from(c: [u8; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

/// Torus dimensions: `m` rows by `n` columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
}

impl Dims {
    pub fn len(self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn index(self, c: TorusCoord) -> usize {
        c.i * self.n + c.j
    }

    pub fn coord(self, index: usize) -> TorusCoord {
        TorusCoord {
            i: index / self.n,
            j: index % self.n,
        }
    }
}

/// Zero-based position on the torus; `i` is the row, `j` the column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusCoord {
    pub i: usize,
    pub j: usize,
}

impl TorusCoord {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

/// Von Neumann neighborhood in the fixed order up, down, left, right.
///
/// The order is part of the reproducibility contract: step probabilities and
/// seeded neighbor choices are indexed by it.
pub fn neighbors(c: TorusCoord, dims: Dims) -> [TorusCoord; 4] {
    let Dims { m, n } = dims;
    let up = (c.i + m - 1) % m;
    let down = (c.i + 1) % m;
    let left = (c.j + n - 1) % n;
    let right = (c.j + 1) % n;
    [
        TorusCoord::new(up, c.j),
        TorusCoord::new(down, c.j),
        TorusCoord::new(c.i, left),
        TorusCoord::new(c.i, right),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RasterImage {
    dims: Dims,
    pixels: Vec<RgbPixel>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, pixel: RgbPixel) -> Result<Self, RasterError> {
        Self::from_pixels(width, height, vec![pixel; width * height])
    }

    /// Builds an image from a row-major pixel buffer.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: Vec<RgbPixel>,
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyImage { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(RasterError::PixelCount {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            dims: Dims {
                m: height,
                n: width,
            },
            pixels,
        })
    }

    /// Builds an image by evaluating `f(coord)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(TorusCoord) -> RgbPixel,
    ) -> Result<Self, RasterError> {
        let dims = Dims {
            m: height,
            n: width,
        };
        let pixels = (0..dims.len()).map(|k| f(dims.coord(k))).collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.dims.n
    }

    pub fn height(&self) -> usize {
        self.dims.m
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[RgbPixel] {
        &self.pixels
    }

    pub fn get(&self, c: TorusCoord) -> RgbPixel {
        self.pixels[self.dims.index(c)]
    }

    pub fn set(&mut self, c: TorusCoord, pixel: RgbPixel) {
        let k = self.dims.index(c);
        self.pixels[k] = pixel;
    }

    pub fn at(&self, index: usize) -> RgbPixel {
        self.pixels[index]
    }

    pub fn set_at(&mut self, index: usize, pixel: RgbPixel) {
        self.pixels[index] = pixel;
    }

    /// Packed `RGBRGB...` bytes, row-major.
    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.channels()).collect()
    }

    pub fn from_rgb_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self, RasterError> {
        if bytes.len() != width * height * 3 {
            return Err(RasterError::PixelCount {
                expected: width * height,
                actual: bytes.len() / 3,
            });
        }
        let pixels = bytes
            .chunks_exact(3)
            .map(|c| RgbPixel::new(c[0], c[1], c[2]))
            .collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn ensure_same_dims(&self, other: &RasterImage) -> Result<(), RasterError> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(RasterError::DimensionMismatch {
                left_width: self.width(),
                left_height: self.height(),
                right_width: other.width(),
                right_height: other.height(),
            })
        }
    }
}

/// Number of pixels where `x` and `target` agree on all three channels.
pub fn agreement_count(x: &RasterImage, target: &RasterImage) -> Result<usize, RasterError> {
    x.ensure_same_dims(target)?;
    Ok(x
        .pixels
        .iter()
        .zip(&target.pixels)
        .filter(|(a, b)| a == b)
        .count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PixelState {
    Source,
    Target,
    /// Source and target agree here; the pixel never changes.
    Fixed,
}

const NOT_LISTED: u32 = u32::MAX;

/// Per-pixel transition state.
///
/// Besides the state grid the mask keeps the Source and Target pixels in two
/// index lists (with back-pointers) so counts are O(1) and both sets can be
/// sampled without scanning the whole image. List order is a deterministic
/// function of the flip history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateMask {
    dims: Dims,
    states: Vec<PixelState>,
    slot: Vec<u32>,
    source: Vec<u32>,
    target: Vec<u32>,
    fixed: usize,
}

impl StateMask {
    /// All non-fixed pixels start in `Source`.
    pub fn from_fixed(dims: Dims, fixed: &[bool]) -> Self {
        assert_eq!(fixed.len(), dims.len(), "fixed flags must cover the image");
        let mut states = Vec::with_capacity(dims.len());
        let mut slot = Vec::with_capacity(dims.len());
        let mut source = Vec::new();
        let mut fixed_count = 0;
        for (k, &is_fixed) in fixed.iter().enumerate() {
            if is_fixed {
                states.push(PixelState::Fixed);
                slot.push(NOT_LISTED);
                fixed_count += 1;
            } else {
                states.push(PixelState::Source);
                slot.push(source.len() as u32);
                source.push(k as u32);
            }
        }
        Self {
            dims,
            states,
            slot,
            source,
            target: Vec::new(),
            fixed: fixed_count,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn state(&self, index: usize) -> PixelState {
        self.states[index]
    }

    pub fn state_at(&self, c: TorusCoord) -> PixelState {
        self.states[self.dims.index(c)]
    }

    pub fn states(&self) -> &[PixelState] {
        &self.states
    }

    /// `|X|_S`
    pub fn source_count(&self) -> usize {
        self.source.len()
    }

    /// `|X|_T`
    pub fn target_count(&self) -> usize {
        self.target.len()
    }

    pub fn fixed_count(&self) -> usize {
        self.fixed
    }

    pub fn active_count(&self) -> usize {
        self.source.len() + self.target.len()
    }

    /// Flat indices of Source pixels, in list order.
    pub fn source_indices(&self) -> &[u32] {
        &self.source
    }

    /// Flat indices of Target pixels, in list order.
    pub fn target_indices(&self) -> &[u32] {
        &self.target
    }

    /// Moves a pixel between `Source` and `Target`. Returns `false` (and does
    /// nothing) when the pixel is `Fixed` or already in the requested state.
    pub fn set_state(&mut self, index: usize, new: PixelState) -> bool {
        let old = self.states[index];
        if old == new || old == PixelState::Fixed || new == PixelState::Fixed {
            return false;
        }
        let (from, to) = match old {
            PixelState::Source => (&mut self.source, &mut self.target),
            _ => (&mut self.target, &mut self.source),
        };
        let at = self.slot[index] as usize;
        from.swap_remove(at);
        if let Some(&moved) = from.get(at) {
            self.slot[moved as usize] = at as u32;
        }
        self.slot[index] = to.len() as u32;
        to.push(index as u32);
        self.states[index] = new;
        true
    }

    /// Counts recomputed from the state grid: `(source, target, fixed)`.
    pub fn recount(&self) -> (usize, usize, usize) {
        self.states
            .iter()
            .fold((0, 0, 0), |(s, t, f), state| match state {
                PixelState::Source => (s + 1, t, f),
                PixelState::Target => (s, t + 1, f),
                PixelState::Fixed => (s, t, f + 1),
            })
    }
}

/// Marks coordinates where `source == target` as `Fixed`, everything else `Source`.
pub fn build_mask(source: &RasterImage, target: &RasterImage) -> Result<StateMask, RasterError> {
    source.ensure_same_dims(target)?;
    let fixed: Vec<bool> = source
        .pixels
        .iter()
        .zip(&target.pixels)
        .map(|(s, t)| s == t)
        .collect();
    Ok(StateMask::from_fixed(source.dims, &fixed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(i: usize, j: usize) -> TorusCoord {
        TorusCoord::new(i, j)
    }

    #[test]
    fn neighbors_wrap_at_origin() {
        let got = neighbors(c(0, 0), Dims { m: 4, n: 4 });
        assert_eq!(got, [c(3, 0), c(1, 0), c(0, 3), c(0, 1)]);
    }

    #[test]
    fn neighbors_interior() {
        let got = neighbors(c(2, 2), Dims { m: 5, n: 5 });
        assert_eq!(got, [c(1, 2), c(3, 2), c(2, 1), c(2, 3)]);
    }

    #[test]
    fn neighbors_degenerate_torus() {
        assert_eq!(neighbors(c(0, 0), Dims { m: 1, n: 1 }), [c(0, 0); 4]);
    }

    #[test]
    fn empty_image_rejected() {
        assert!(matches!(
            RasterImage::filled(0, 3, RgbPixel::BLACK),
            Err(RasterError::EmptyImage { .. })
        ));
    }

    #[test]
    fn agreement_identity_and_disjoint() {
        let t = RasterImage::filled(8, 8, RgbPixel::WHITE).unwrap();
        let s = RasterImage::filled(8, 8, RgbPixel::BLACK).unwrap();
        assert_eq!(agreement_count(&t, &t).unwrap(), 64);
        assert_eq!(agreement_count(&s, &t).unwrap(), 0);
    }

    #[test]
    fn agreement_dimension_mismatch() {
        let a = RasterImage::filled(4, 4, RgbPixel::BLACK).unwrap();
        let b = RasterImage::filled(4, 5, RgbPixel::BLACK).unwrap();
        assert!(matches!(
            agreement_count(&a, &b),
            Err(RasterError::DimensionMismatch { .. })
        ));
        assert!(build_mask(&a, &b).is_err());
    }

    #[test]
    fn agreement_matches_direct_loop() {
        // fixed small palette so collisions actually happen
        let palette = [
            RgbPixel::new(0, 0, 0),
            RgbPixel::new(10, 0, 0),
            RgbPixel::new(0, 10, 0),
        ];
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            palette[(state >> 33) as usize % 3]
        };
        let x = RasterImage::from_fn(4, 4, |_| next()).unwrap();
        let t = RasterImage::from_fn(4, 4, |_| next()).unwrap();
        let mut expected = 0;
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = (x.get(c(i, j)), t.get(c(i, j)));
                if a.r == b.r && a.g == b.g && a.b == b.b {
                    expected += 1;
                }
            }
        }
        assert_eq!(agreement_count(&x, &t).unwrap(), expected);
    }

    #[test]
    fn mask_black_to_white_all_source() {
        let s = RasterImage::filled(5, 3, RgbPixel::BLACK).unwrap();
        let t = RasterImage::filled(5, 3, RgbPixel::WHITE).unwrap();
        let mask = build_mask(&s, &t).unwrap();
        assert_eq!(mask.source_count(), 15);
        assert_eq!(mask.target_count(), 0);
        assert_eq!(mask.fixed_count(), 0);
    }

    #[test]
    fn mask_identical_all_fixed() {
        let s = RasterImage::filled(5, 3, RgbPixel::new(1, 2, 3)).unwrap();
        let mask = build_mask(&s, &s).unwrap();
        assert_eq!((mask.source_count(), mask.target_count()), (0, 0));
        assert_eq!(mask.fixed_count(), 15);
    }

    #[test]
    fn mask_counts_differing_pixels() {
        let s = RasterImage::filled(6, 6, RgbPixel::BLACK).unwrap();
        let mut t = s.clone();
        let picked = [0usize, 7, 8, 20, 35];
        for &k in &picked {
            t.set_at(k, RgbPixel::new(0, 0, 1));
        }
        let direct = s.pixels().iter().zip(t.pixels()).filter(|(a, b)| a != b).count();
        let mask = build_mask(&s, &t).unwrap();
        assert_eq!(mask.source_count(), direct);
        assert_eq!(mask.source_count(), picked.len());
    }

    #[test]
    fn set_state_refuses_fixed() {
        let mut mask = StateMask::from_fixed(Dims { m: 1, n: 3 }, &[true, false, false]);
        assert!(!mask.set_state(0, PixelState::Target));
        assert!(mask.set_state(1, PixelState::Target));
        assert!(!mask.set_state(1, PixelState::Target));
        assert_eq!(mask.recount(), (1, 1, 1));
    }

    proptest! {
        #[test]
        fn neighbors_stay_in_bounds_and_invert(m in 1usize..12, n in 1usize..12, i in 0usize..12, j in 0usize..12) {
            let dims = Dims { m, n };
            let p = c(i % m, j % n);
            let nb = neighbors(p, dims);
            for q in nb {
                prop_assert!(q.i < m && q.j < n);
            }
            // up then down, down then up, left then right, right then left
            prop_assert_eq!(neighbors(nb[0], dims)[1], p);
            prop_assert_eq!(neighbors(nb[1], dims)[0], p);
            prop_assert_eq!(neighbors(nb[2], dims)[3], p);
            prop_assert_eq!(neighbors(nb[3], dims)[2], p);
        }

        #[test]
        fn mask_counts_survive_random_flips(
            fixed in proptest::collection::vec(any::<bool>(), 1..64),
            flips in proptest::collection::vec((any::<prop::sample::Index>(), any::<bool>()), 0..200),
        ) {
            let dims = Dims { m: 1, n: fixed.len() };
            let mut mask = StateMask::from_fixed(dims, &fixed);
            for (idx, to_target) in flips {
                let k = idx.index(fixed.len());
                let state = if to_target { PixelState::Target } else { PixelState::Source };
                mask.set_state(k, state);
                let (s, t, f) = mask.recount();
                prop_assert_eq!(s, mask.source_count());
                prop_assert_eq!(t, mask.target_count());
                prop_assert_eq!(f, mask.fixed_count());
                prop_assert_eq!(s + t + f, dims.len());
            }
            for (slot, &k) in mask.source_indices().iter().enumerate() {
                prop_assert_eq!(mask.state(k as usize), PixelState::Source);
                prop_assert_eq!(mask.slot[k as usize] as usize, slot);
            }
            for &k in mask.target_indices() {
                prop_assert_eq!(mask.state(k as usize), PixelState::Target);
            }
        }

        #[test]
        fn agreement_plus_disagreement_covers_image(
            bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..80),
        ) {
            // bits.0: S == T at this pixel; bits.1: X took T's value
            let n = bits.len();
            let s = RasterImage::from_fn(n, 1, |p| RgbPixel::new(0, 0, (p.j % 7) as u8)).unwrap();
            let t = RasterImage::from_fn(n, 1, |p| {
                if bits[p.j].0 { s.get(p) } else { RgbPixel::new(200, 0, (p.j % 7) as u8) }
            }).unwrap();
            let x = RasterImage::from_fn(n, 1, |p| if bits[p.j].1 { t.get(p) } else { s.get(p) }).unwrap();
            let mask = build_mask(&s, &t).unwrap();
            let disagreeing_active = (0..n)
                .filter(|&k| mask.state(k) != PixelState::Fixed && x.at(k) != t.at(k))
                .count();
            prop_assert_eq!(agreement_count(&x, &t).unwrap() + disagreeing_active, n);
        }
    }
}
