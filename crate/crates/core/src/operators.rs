//! Mutation operators: asymmetric mutation, uniform and biased random walks,
//! walk mutation, the alternating schedule, and the painting walk.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::raster::{neighbors, Dims, PixelState, RasterImage, RgbPixel, StateMask, TorusCoord};
use crate::rng::{RngStream, RunStreams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid operator parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown operator kind `{0}`")]
    UnknownKind(String),
    #[error("paint walk must start on an unpainted pixel, ({}, {}) is {state:?}", .coord.i, .coord.j)]
    StartNotSource {
        coord: TorusCoord,
        state: PixelState,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Asym,
    UniformWalk,
    BiasedWalk,
    AsymUniformWalk,
    AsymBiasedWalk,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 5] = [
        OperatorKind::Asym,
        OperatorKind::UniformWalk,
        OperatorKind::BiasedWalk,
        OperatorKind::AsymUniformWalk,
        OperatorKind::AsymBiasedWalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Asym => "ea-asym",
            OperatorKind::UniformWalk => "ea-uniform-walk",
            OperatorKind::BiasedWalk => "ea-biased-walk",
            OperatorKind::AsymUniformWalk => "ea-asym-uniform-walk",
            OperatorKind::AsymBiasedWalk => "ea-asym-biased-walk",
        }
    }

    pub fn uses_asymmetric(self) -> bool {
        matches!(
            self,
            OperatorKind::Asym | OperatorKind::AsymUniformWalk | OperatorKind::AsymBiasedWalk
        )
    }

    pub fn uses_walk(self) -> bool {
        self != OperatorKind::Asym
    }

    /// Uniform kinds ignore the configured bias.
    pub fn effective_alpha(self, alpha: f64) -> f64 {
        match self {
            OperatorKind::UniformWalk | OperatorKind::AsymUniformWalk => 0.0,
            _ => alpha,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = OperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let key = key.strip_prefix("ea-").unwrap_or(&key);
        match key {
            "asym" | "asymmetric" => Ok(OperatorKind::Asym),
            "uniform-walk" => Ok(OperatorKind::UniformWalk),
            "biased-walk" => Ok(OperatorKind::BiasedWalk),
            "asym-uniform-walk" => Ok(OperatorKind::AsymUniformWalk),
            "asym-biased-walk" => Ok(OperatorKind::AsymBiasedWalk),
            _ => Err(OperatorError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    pub c_s: f64,
    pub c_t: f64,
    pub alpha: f64,
    pub t_max: u64,
    /// Asymmetric generations between two walk generations in combined kinds.
    pub tau: u64,
    /// Painting only: paint every visited Source or Target pixel, not just
    /// unpainted ones.
    pub repaint: bool,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            kind: OperatorKind::Asym,
            c_s: 100.0,
            c_t: 50.0,
            alpha: 1.0,
            t_max: 100,
            tau: 1,
            repaint: false,
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<(), OperatorError> {
        let bad = |msg: String| Err(OperatorError::InvalidParameter(msg));
        if !(self.c_s.is_finite() && self.c_s >= 1.0) {
            return bad(format!("c_s must be >= 1, got {}", self.c_s));
        }
        if !(self.c_t.is_finite() && self.c_t >= 1.0) {
            return bad(format!("c_t must be >= 1, got {}", self.c_t));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if self.tau == 0 {
            return bad("tau must be positive".to_string());
        }
        Ok(())
    }
}

/// The concrete mutation applied in one generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    Asymmetric,
    Walk,
}

/// Combined kinds run one walk generation after every `tau` asymmetric ones:
/// generation `g` walks iff `g mod (tau + 1) == tau`.
pub fn select_operator(generation: u64, cfg: &OperatorConfig) -> MutationKind {
    match cfg.kind {
        OperatorKind::Asym => MutationKind::Asymmetric,
        OperatorKind::UniformWalk | OperatorKind::BiasedWalk => MutationKind::Walk,
        OperatorKind::AsymUniformWalk | OperatorKind::AsymBiasedWalk => {
            let tau = cfg.tau.max(1);
            if generation % (tau + 1) == tau {
                MutationKind::Walk
            } else {
                MutationKind::Asymmetric
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Asymmetric mutation
// ---------------------------------------------------------------------------

/// `min{c / (2 * count), 1}`, or 0 for an empty class.
pub fn flip_probability(c: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        (c / (2.0 * count as f64)).min(1.0)
    }
}

/// Pixels chosen by one asymmetric mutation, not yet applied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlipSet {
    pub to_target: Vec<usize>,
    pub to_source: Vec<usize>,
}

impl FlipSet {
    /// Change in `f(X, T)` if the flips are applied.
    pub fn fitness_delta(&self) -> i64 {
        self.to_target.len() as i64 - self.to_source.len() as i64
    }

    pub fn apply(
        &self,
        x: &mut RasterImage,
        mask: &mut StateMask,
        source: &RasterImage,
        target: &RasterImage,
    ) {
        for &k in &self.to_target {
            x.set_at(k, target.at(k));
            mask.set_state(k, PixelState::Target);
        }
        for &k in &self.to_source {
            x.set_at(k, source.at(k));
            mask.set_state(k, PixelState::Source);
        }
    }
}

/// Each entry of `pool` independently with probability `p`, via geometric
/// gaps. Draws one variate per selected entry plus one.
fn bernoulli_subset(pool: &[u32], p: f64, rng: &mut RngStream) -> Vec<usize> {
    if p <= 0.0 || pool.is_empty() {
        return Vec::new();
    }
    if p >= 1.0 {
        return pool.iter().map(|&k| k as usize).collect();
    }
    let ln_q = (1.0 - p).ln();
    let mut picked = Vec::new();
    let mut pos: u64 = 0;
    loop {
        pos = pos.saturating_add(rng.geometric_gap(ln_q));
        if pos >= pool.len() as u64 {
            break;
        }
        picked.push(pool[pos as usize] as usize);
        pos += 1;
    }
    picked
}

/// Samples the flips of one asymmetric mutation from the current mask.
///
/// Source pixels flip with `min{c_s/(2|X|_S), 1}`, Target pixels with
/// `min{c_t/(2|X|_T), 1}`; an empty class skips its pass. Fixed pixels are
/// never selected.
pub fn sample_asymmetric_flips(
    mask: &StateMask,
    c_s: f64,
    c_t: f64,
    rng: &mut RngStream,
) -> FlipSet {
    let p_s = flip_probability(c_s, mask.source_count());
    let p_t = flip_probability(c_t, mask.target_count());
    FlipSet {
        to_target: bernoulli_subset(mask.source_indices(), p_s, rng),
        to_source: bernoulli_subset(mask.target_indices(), p_t, rng),
    }
}

/// Returns the mutated offspring `(Y, mask')`; the parent is left untouched.
pub fn asymmetric_mutation(
    x: &RasterImage,
    mask: &StateMask,
    source: &RasterImage,
    target: &RasterImage,
    c_s: f64,
    c_t: f64,
    rng: &mut RngStream,
) -> (RasterImage, StateMask) {
    let flips = sample_asymmetric_flips(mask, c_s, c_t, rng);
    let mut y = x.clone();
    let mut mask_y = mask.clone();
    flips.apply(&mut y, &mut mask_y, source, target);
    (y, mask_y)
}

// ---------------------------------------------------------------------------
// Random walks
// ---------------------------------------------------------------------------

/// Step penalty `(max{sum_r |T_to^r - T_from^r|, 1})^alpha`, always >= 1.
pub fn gamma(target: &RasterImage, from: TorusCoord, to: TorusCoord, alpha: f64) -> f64 {
    let dist = target.get(from).l1_distance(target.get(to)).max(1);
    f64::from(dist).powf(alpha)
}

/// Step probabilities over `[up, down, left, right]`, proportional to `1/gamma`.
pub fn biased_step_probs(target: &RasterImage, c: TorusCoord, alpha: f64) -> [f64; 4] {
    if alpha == 0.0 {
        return [0.25; 4];
    }
    let nb = neighbors(c, target.dims());
    let inv = nb.map(|to| 1.0 / gamma(target, c, to, alpha));
    let total: f64 = inv.iter().sum();
    inv.map(|w| w / total)
}

/// Maps one uniform variate `u` in `[0, 1)` onto the cumulative distribution.
pub fn pick_neighbor(probs: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate().take(3) {
        acc += p;
        if u < acc {
            return k;
        }
    }
    3
}

/// One walk step from `c`; consumes exactly one variate.
pub fn walk_step(target: &RasterImage, c: TorusCoord, alpha: f64, rng: &mut RngStream) -> TorusCoord {
    let probs = biased_step_probs(target, c, alpha);
    let k = pick_neighbor(&probs, rng.uniform());
    neighbors(c, target.dims())[k]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkOutcome {
    pub end: TorusCoord,
    /// Source pixels turned into Target pixels.
    pub flipped: usize,
}

fn reveal(x: &mut RasterImage, mask: &mut StateMask, target: &RasterImage, k: usize) -> bool {
    if mask.state(k) == PixelState::Source {
        x.set_at(k, target.at(k));
        mask.set_state(k, PixelState::Target);
        true
    } else {
        false
    }
}

/// Sets the start pixel to its target value, then takes `steps` steps,
/// setting every visited pixel to its target value. `alpha = 0` is the
/// uniform walk.
#[allow(clippy::too_many_arguments)]
pub fn random_walk(
    x: &mut RasterImage,
    mask: &mut StateMask,
    target: &RasterImage,
    start: TorusCoord,
    alpha: f64,
    steps: u64,
    rng: &mut RngStream,
) -> WalkOutcome {
    let dims = target.dims();
    let mut at = start;
    let mut flipped = usize::from(reveal(x, mask, target, dims.index(at)));
    for _ in 0..steps {
        at = walk_step(target, at, alpha, rng);
        flipped += usize::from(reveal(x, mask, target, dims.index(at)));
    }
    WalkOutcome { end: at, flipped }
}

/// Walk of `t_max` steps from a start pixel drawn uniformly over the whole
/// image. Returns `None` without drawing when every pixel is Fixed.
pub fn walk_mutation(
    x: &mut RasterImage,
    mask: &mut StateMask,
    target: &RasterImage,
    alpha: f64,
    t_max: u64,
    streams: &mut RunStreams,
) -> Option<WalkOutcome> {
    if mask.active_count() == 0 {
        return None;
    }
    let dims: Dims = target.dims();
    let start = dims.coord(streams.start.below(dims.len()));
    Some(random_walk(x, mask, target, start, alpha, t_max, &mut streams.step))
}

// ---------------------------------------------------------------------------
// Painting
// ---------------------------------------------------------------------------

/// Biased walk that paints with the target color of its start pixel.
///
/// The start pixel must be unpainted (Source). It is painted, then `t_max`
/// steps follow; each visited Source pixel is painted with the same color
/// and becomes Target. With `repaint`, Target pixels on the path are painted
/// over as well. Fixed pixels are never written.
///
/// Returns the flat indices written, in order.
#[allow(clippy::too_many_arguments)]
pub fn paint_mutation(
    start: TorusCoord,
    x: &mut RasterImage,
    mask: &mut StateMask,
    target: &RasterImage,
    alpha: f64,
    t_max: u64,
    repaint: bool,
    rng: &mut RngStream,
) -> Result<Vec<usize>, OperatorError> {
    let dims = target.dims();
    let state = mask.state_at(start);
    if state != PixelState::Source {
        return Err(OperatorError::StartNotSource {
            coord: start,
            state,
        });
    }
    let color: RgbPixel = target.get(start);
    let mut written = Vec::new();
    let mut paint = |x: &mut RasterImage, mask: &mut StateMask, k: usize| {
        let writable = match mask.state(k) {
            PixelState::Source => true,
            PixelState::Target => repaint,
            PixelState::Fixed => false,
        };
        if writable {
            x.set_at(k, color);
            mask.set_state(k, PixelState::Target);
            written.push(k);
        }
    };
    let mut at = start;
    paint(x, mask, dims.index(at));
    for _ in 0..t_max {
        at = walk_step(target, at, alpha, rng);
        paint(x, mask, dims.index(at));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{agreement_count, build_mask};
    use crate::rng::StreamId;
    use proptest::prelude::*;

    fn px(r: u8, g: u8, b: u8) -> RgbPixel {
        RgbPixel::new(r, g, b)
    }

    fn random_image(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut rng = RngStream::new(seed, StreamId::Flip);
        RasterImage::from_fn(w, h, |_| {
            px(rng.below(256) as u8, rng.below(256) as u8, rng.below(256) as u8)
        })
        .unwrap()
    }

    #[test]
    fn default_parameters() {
        let cfg = OperatorConfig::default();
        assert_eq!((cfg.c_s, cfg.c_t), (100.0, 50.0));
        assert_eq!(cfg.t_max, 100);
        assert_eq!(cfg.tau, 1);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validate_rejects_bad_constants() {
        let mut cfg = OperatorConfig { c_s: 0.5, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = OperatorConfig { alpha: -0.1, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = OperatorConfig { tau: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in OperatorKind::ALL {
            assert_eq!(kind.name().parse::<OperatorKind>().unwrap(), kind);
        }
        assert_eq!("asym".parse::<OperatorKind>().unwrap(), OperatorKind::Asym);
        assert_eq!("biased-walk".parse::<OperatorKind>().unwrap(), OperatorKind::BiasedWalk);
        assert!("sideways-walk".parse::<OperatorKind>().is_err());
    }

    #[test]
    fn schedule_alternates_at_tau_one() {
        let cfg = OperatorConfig { kind: OperatorKind::AsymBiasedWalk, tau: 1, ..Default::default() };
        let got: Vec<_> = (0..4).map(|g| select_operator(g, &cfg)).collect();
        use MutationKind::*;
        assert_eq!(got, vec![Asymmetric, Walk, Asymmetric, Walk]);
    }

    #[test]
    fn schedule_tau_three() {
        let cfg = OperatorConfig { kind: OperatorKind::AsymUniformWalk, tau: 3, ..Default::default() };
        let got: Vec<_> = (0..8).map(|g| select_operator(g, &cfg)).collect();
        use MutationKind::*;
        assert_eq!(
            got,
            vec![Asymmetric, Asymmetric, Asymmetric, Walk, Asymmetric, Asymmetric, Asymmetric, Walk]
        );
    }

    #[test]
    fn schedule_pure_kinds() {
        for g in 0..10 {
            let asym = OperatorConfig::default();
            assert_eq!(select_operator(g, &asym), MutationKind::Asymmetric);
            let walk = OperatorConfig { kind: OperatorKind::UniformWalk, ..Default::default() };
            assert_eq!(select_operator(g, &walk), MutationKind::Walk);
        }
    }

    #[test]
    fn gamma_cases() {
        let t = RasterImage::from_pixels(2, 1, vec![px(10, 20, 30), px(20, 5, 35)]).unwrap();
        let (a, b) = (TorusCoord::new(0, 0), TorusCoord::new(0, 1));
        assert_eq!(gamma(&t, a, b, 1.0), 30.0);
        assert_eq!(gamma(&t, a, b, 0.0), 1.0);
        assert_eq!(gamma(&t, a, a, 2.5), 1.0);
    }

    #[test]
    fn probs_uniform_when_colors_equal_or_alpha_zero() {
        let flat = RasterImage::filled(3, 3, px(9, 9, 9)).unwrap();
        assert_eq!(biased_step_probs(&flat, TorusCoord::new(1, 1), 1.0), [0.25; 4]);
        let noisy = random_image(5, 5, 3);
        assert_eq!(biased_step_probs(&noisy, TorusCoord::new(2, 2), 0.0), [0.25; 4]);
    }

    #[test]
    fn probs_from_known_gammas() {
        // centre (1,1); up/down share its color, left/right are 2 away
        let c = px(100, 100, 100);
        let far = px(102, 100, 100);
        let t = RasterImage::from_pixels(
            3,
            3,
            vec![c, c, c, far, c, far, c, c, c],
        )
        .unwrap();
        let p = biased_step_probs(&t, TorusCoord::new(1, 1), 1.0);
        let expected = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn pick_neighbor_matches_floor_for_uniform() {
        for u in [0.0, 0.1, 0.25, 0.4999, 0.5, 0.75, 0.999_999] {
            assert_eq!(pick_neighbor(&[0.25; 4], u), ((u * 4.0).floor() as usize).min(3));
        }
    }

    #[test]
    fn zero_step_walk_sets_only_start() {
        let s = RasterImage::filled(6, 6, RgbPixel::BLACK).unwrap();
        let t = RasterImage::filled(6, 6, RgbPixel::WHITE).unwrap();
        let mut x = s.clone();
        let mut mask = build_mask(&s, &t).unwrap();
        let mut rng = RngStream::new(1, StreamId::Step);
        let start = TorusCoord::new(2, 4);
        let out = random_walk(&mut x, &mut mask, &t, start, 0.0, 0, &mut rng);
        assert_eq!(out, WalkOutcome { end: start, flipped: 1 });
        assert_eq!(agreement_count(&x, &t).unwrap(), 1);
        assert_eq!(x.get(start), RgbPixel::WHITE);
    }

    #[test]
    fn walk_mutation_on_converged_state_is_idempotent() {
        let s = RasterImage::filled(5, 5, RgbPixel::BLACK).unwrap();
        let t = random_image(5, 5, 9);
        let mut mask = build_mask(&s, &t).unwrap();
        let mut x = t.clone();
        for k in 0..25 {
            mask.set_state(k, PixelState::Target);
        }
        let before = x.clone();
        let mut streams = RunStreams::new(4);
        let out = walk_mutation(&mut x, &mut mask, &t, 1.0, 100, &mut streams).unwrap();
        assert_eq!(out.flipped, 0);
        assert_eq!(x, before);
        assert_eq!(agreement_count(&x, &t).unwrap(), 25);
    }

    #[test]
    fn walk_mutation_all_fixed_is_noop() {
        let t = random_image(4, 4, 2);
        let mut mask = build_mask(&t, &t).unwrap();
        let mut x = t.clone();
        let mut streams = RunStreams::new(4);
        assert!(walk_mutation(&mut x, &mut mask, &t, 1.0, 100, &mut streams).is_none());
    }

    #[test]
    fn asymmetric_skips_target_pass_at_start() {
        let s = RasterImage::filled(20, 20, RgbPixel::BLACK).unwrap();
        let t = RasterImage::filled(20, 20, RgbPixel::WHITE).unwrap();
        let mask = build_mask(&s, &t).unwrap();
        let mut rng = RngStream::new(11, StreamId::Flip);
        for _ in 0..50 {
            let flips = sample_asymmetric_flips(&mask, 100.0, 50.0, &mut rng);
            assert!(flips.to_source.is_empty());
        }
    }

    #[test]
    fn asymmetric_small_counts_clamp_to_one() {
        // 3 source pixels with c_s = 100: every one flips
        let s = RasterImage::filled(3, 1, RgbPixel::BLACK).unwrap();
        let t = RasterImage::filled(3, 1, RgbPixel::WHITE).unwrap();
        let mask = build_mask(&s, &t).unwrap();
        let mut rng = RngStream::new(0, StreamId::Flip);
        let (y, mask_y) = asymmetric_mutation(&s, &mask, &s, &t, 100.0, 50.0, &mut rng);
        assert_eq!(y, t);
        assert_eq!(mask_y.target_count(), 3);
    }

    #[test]
    fn asymmetric_flip_mean_matches_binomial() {
        // 200x200, half Source half Target; Monte Carlo mean of source->target flips
        let s = RasterImage::filled(200, 200, RgbPixel::BLACK).unwrap();
        let t = RasterImage::filled(200, 200, RgbPixel::WHITE).unwrap();
        let mut mask = build_mask(&s, &t).unwrap();
        for k in (0..40_000).step_by(2) {
            mask.set_state(k, PixelState::Target);
        }
        assert_eq!(mask.source_count(), 20_000);
        let mut rng = RngStream::new(2024, StreamId::Flip);
        let trials = 100_000;
        let mut total = 0usize;
        for _ in 0..trials {
            total += sample_asymmetric_flips(&mask, 100.0, 50.0, &mut rng).to_target.len();
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 50.0).abs() / 50.0 < 0.05, "mean flips {mean}");
    }

    #[test]
    fn paint_requires_source_start() {
        let s = RasterImage::filled(4, 4, RgbPixel::WHITE).unwrap();
        let t = random_image(4, 4, 5);
        let mut mask = build_mask(&s, &t).unwrap();
        let mut x = s.clone();
        let mut rng = RngStream::new(1, StreamId::Step);
        let start = TorusCoord::new(0, 0);
        paint_mutation(start, &mut x, &mut mask, &t, 1.0, 3, false, &mut rng).unwrap();
        let err = paint_mutation(start, &mut x, &mut mask, &t, 1.0, 3, false, &mut rng).unwrap_err();
        assert!(matches!(err, OperatorError::StartNotSource { .. }));
    }

    #[test]
    fn paint_zero_steps_paints_start_only() {
        let s = RasterImage::filled(4, 4, RgbPixel::WHITE).unwrap();
        let t = random_image(4, 4, 6);
        let mut mask = build_mask(&s, &t).unwrap();
        let mut x = s.clone();
        let mut rng = RngStream::new(1, StreamId::Step);
        let start = TorusCoord::new(1, 2);
        let written = paint_mutation(start, &mut x, &mut mask, &t, 0.5, 0, false, &mut rng).unwrap();
        assert_eq!(written, vec![6]);
        assert_eq!(x.get(start), t.get(start));
        assert_eq!(mask.target_count(), 1);
    }

    #[test]
    fn paint_union_equals_replayed_trajectory() {
        let s = RasterImage::filled(16, 16, RgbPixel::WHITE).unwrap();
        let t = random_image(16, 16, 8);
        let mask0 = build_mask(&s, &t).unwrap();
        assert_eq!(mask0.source_count(), 256);
        let start = TorusCoord::new(5, 9);
        let (alpha, t_max) = (0.75, 300);

        let mut mask = mask0.clone();
        let mut x = s.clone();
        let mut rng = RngStream::new(77, StreamId::Step);
        let written = paint_mutation(start, &mut x, &mut mask, &t, alpha, t_max, false, &mut rng).unwrap();

        // oracle: replay the trajectory with an independent step loop
        let mut replay = RngStream::new(77, StreamId::Step);
        let mut visited = std::collections::BTreeSet::new();
        let mut at = start;
        visited.insert(at);
        for _ in 0..t_max {
            let nb = neighbors(at, t.dims());
            let inv: Vec<f64> = nb
                .iter()
                .map(|&q| 1.0 / (t.get(q).l1_distance(t.get(at)).max(1) as f64).powf(alpha))
                .collect();
            let total: f64 = inv.iter().sum();
            let u = replay.uniform();
            let mut acc = 0.0;
            let mut k = 3;
            for (idx, w) in inv.iter().enumerate().take(3) {
                acc += w / total;
                if u < acc {
                    k = idx;
                    break;
                }
            }
            at = nb[k];
            visited.insert(at);
        }
        let painted: std::collections::BTreeSet<_> =
            written.iter().map(|&k| t.dims().coord(k)).collect();
        assert_eq!(painted, visited);
        assert!(written.len() as u64 <= t_max + 1);
        let color = t.get(start);
        for k in &written {
            assert_eq!(x.at(*k), color);
        }
    }

    #[test]
    fn repaint_overwrites_painted_pixels() {
        let s = RasterImage::filled(2, 1, RgbPixel::WHITE).unwrap();
        let t = RasterImage::from_pixels(2, 1, vec![px(1, 0, 0), px(0, 0, 1)]).unwrap();
        let mut mask = build_mask(&s, &t).unwrap();
        let mut x = s.clone();
        let mut rng = RngStream::new(3, StreamId::Step);
        // width-2 torus: every step lands on the other pixel or back on itself
        paint_mutation(TorusCoord::new(0, 0), &mut x, &mut mask, &t, 0.0, 0, true, &mut rng).unwrap();
        paint_mutation(TorusCoord::new(0, 1), &mut x, &mut mask, &t, 0.0, 8, true, &mut rng).unwrap();
        assert_eq!(x.pixels(), &[px(0, 0, 1), px(0, 0, 1)]);
    }

    proptest! {
        #[test]
        fn probs_sum_to_one(seed in any::<u64>(), alpha in 0.0f64..4.0, i in 0usize..6, j in 0usize..6) {
            let t = random_image(6, 6, seed);
            let p = biased_step_probs(&t, TorusCoord::new(i, j), alpha);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for v in p {
                prop_assert!(v > 0.0 && v <= 1.0);
            }
        }

        #[test]
        fn gamma_symmetric_and_channel_permutation_invariant(
            a in any::<[u8; 3]>(), b in any::<[u8; 3]>(), alpha in 0.0f64..3.0,
        ) {
            let t = RasterImage::from_pixels(2, 1, vec![a.into(), b.into()]).unwrap();
            let (p, q) = (TorusCoord::new(0, 0), TorusCoord::new(0, 1));
            prop_assert_eq!(gamma(&t, p, q, alpha), gamma(&t, q, p, alpha));
            let perm = |c: [u8; 3]| RgbPixel::new(c[2], c[0], c[1]);
            let tp = RasterImage::from_pixels(2, 1, vec![perm(a), perm(b)]).unwrap();
            prop_assert_eq!(gamma(&t, p, q, alpha), gamma(&tp, p, q, alpha));
        }

        #[test]
        fn asymmetric_keeps_pixels_in_source_or_target(seed in any::<u64>(), rounds in 1usize..20) {
            let s = random_image(8, 8, seed);
            let mut t = random_image(8, 8, seed ^ 0xABCD);
            for k in (0..64).step_by(5) {
                t.set_at(k, s.at(k));
            }
            let mut mask = build_mask(&s, &t).unwrap();
            let mut x = s.clone();
            let mut rng = RngStream::new(seed, StreamId::Flip);
            for _ in 0..rounds {
                let (y, m) = asymmetric_mutation(&x, &mask, &s, &t, 20.0, 10.0, &mut rng);
                x = y;
                mask = m;
                for k in 0..64 {
                    prop_assert!(x.at(k) == s.at(k) || x.at(k) == t.at(k));
                    if mask.state(k) == PixelState::Fixed {
                        prop_assert_eq!(x.at(k), s.at(k));
                    }
                }
            }
        }

        #[test]
        fn walks_never_decrease_agreement(seed in any::<u64>(), alpha in 0.0f64..2.0, steps in 0u64..200) {
            let s = random_image(7, 5, seed);
            let t = random_image(7, 5, seed.wrapping_add(1));
            let mut mask = build_mask(&s, &t).unwrap();
            let mut x = s.clone();
            let mut streams = RunStreams::new(seed);
            let mut last = agreement_count(&x, &t).unwrap();
            for _ in 0..5 {
                walk_mutation(&mut x, &mut mask, &t, alpha, steps, &mut streams);
                let now = agreement_count(&x, &t).unwrap();
                prop_assert!(now >= last);
                last = now;
            }
        }
    }
}
