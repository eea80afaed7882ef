//! The elitist transition loop and the painting loop, with milestone
//! detection and frame scheduling. All output goes through [`RunSink`].

use thiserror::Error;

use crate::features::{self, FeatureVector};
use crate::operators::{
    flip_probability, paint_mutation, sample_asymmetric_flips, select_operator, walk_mutation,
    MutationKind, OperatorConfig, OperatorError,
};
use crate::raster::{build_mask, PixelState, RasterError, RasterImage, RgbPixel, StateMask, TorusCoord};
use crate::rng::RunStreams;

pub type SinkError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("sink failed: {0}")]
    Sink(SinkError),
}

pub const DEFAULT_MILESTONES: [f64; 4] = [0.125, 0.375, 0.625, 0.875];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunMode {
    Transition,
    Painting,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub operator: OperatorConfig,
    pub seed: u64,
    pub max_generations: u64,
    pub frame_every: u64,
    /// Also attach features to every `n`th trace row; 0 means frames only.
    pub feature_every: u64,
    pub milestones: Vec<f64>,
    /// Transition with asymmetric kinds: once at most `floor(c_t / 2)` Source
    /// pixels remain, set them to their target values in one generation.
    pub tail_completion: bool,
}

impl RunConfig {
    pub fn transition(operator: OperatorConfig, seed: u64) -> Self {
        Self {
            mode: RunMode::Transition,
            operator,
            seed,
            max_generations: 1_000_000,
            frame_every: 100,
            feature_every: 0,
            milestones: DEFAULT_MILESTONES.to_vec(),
            tail_completion: true,
        }
    }

    /// Painting defaults: biased walk, `c_s = 200`.
    pub fn painting(alpha: f64, t_max: u64, seed: u64) -> Self {
        let operator = OperatorConfig {
            kind: crate::operators::OperatorKind::BiasedWalk,
            c_s: 200.0,
            alpha,
            t_max,
            ..OperatorConfig::default()
        };
        Self {
            mode: RunMode::Painting,
            ..Self::transition(operator, seed)
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.operator.validate()?;
        if self.max_generations == 0 {
            return Err(EngineError::InvalidConfig("max_generations must be positive".into()));
        }
        if self.frame_every == 0 {
            return Err(EngineError::InvalidConfig("frame_every must be positive".into()));
        }
        if self.milestones.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(EngineError::InvalidConfig("milestone fractions must lie in (0, 1]".into()));
        }
        if self.milestones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EngineError::InvalidConfig(
                "milestone fractions must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    fn tail_threshold(&self) -> Option<usize> {
        (self.mode == RunMode::Transition
            && self.tail_completion
            && self.operator.kind.uses_asymmetric())
        .then(|| (self.operator.c_t / 2.0).floor() as usize)
    }
}

/// `|X|_T / (|X|_S + |X|_T)`, or 1 when every pixel is Fixed.
pub fn fraction_target(mask: &StateMask) -> f64 {
    let active = mask.active_count();
    if active == 0 {
        1.0
    } else {
        mask.target_count() as f64 / active as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub generation: u64,
    /// Transition: `f(X, T)`. Painting: `f(X, S)`, i.e. pixels not yet painted.
    pub fitness: u64,
    pub fraction_target: f64,
    pub features: Option<FeatureVector>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MilestoneEvent {
    pub fraction: f64,
    pub generation: u64,
    pub frame_id: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    /// Every non-fixed pixel reached the target (or was painted).
    Converged,
    BudgetExhausted,
    /// Source and target images are identical.
    NothingToDo,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::BudgetExhausted => "budget-exhausted",
            RunStatus::NothingToDo => "nothing-to-do",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    /// Row 0 is the starting image; row `g` follows the `g`th mutation.
    pub rows: Vec<TraceRow>,
    pub milestones: Vec<MilestoneEvent>,
    pub status: RunStatus,
    pub generations: u64,
    /// Offspring that replaced their parent (transition) or generations in
    /// which at least one walk was launched (painting).
    pub accepted: u64,
    pub frames: u64,
}

impl RunTrace {
    pub fn accepted_ratio(&self) -> f64 {
        if self.generations == 0 {
            1.0
        } else {
            self.accepted as f64 / self.generations as f64
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Frame<'a> {
    pub id: u64,
    pub generation: u64,
    pub image: &'a RasterImage,
    /// Milestone fractions first crossed at this generation.
    pub milestones: &'a [f64],
    pub periodic: bool,
}

/// Receives run output. Every method defaults to doing nothing.
pub trait RunSink {
    fn frame(&mut self, _frame: &Frame<'_>) -> Result<(), SinkError> {
        Ok(())
    }

    /// Called after each trace row is appended, including row 0.
    fn generation(
        &mut self,
        _row: &TraceRow,
        _image: &RasterImage,
        _mask: &StateMask,
    ) -> Result<(), SinkError> {
        Ok(())
    }

    /// Painting only: one call per pixel write, in write order.
    fn pixel_written(&mut self, _generation: u64, _coord: TorusCoord, _color: RgbPixel) {}
}

impl RunSink for () {}

impl<S: RunSink + ?Sized> RunSink for &mut S {
    fn frame(&mut self, frame: &Frame<'_>) -> Result<(), SinkError> {
        (**self).frame(frame)
    }

    fn generation(&mut self, row: &TraceRow, image: &RasterImage, mask: &StateMask) -> Result<(), SinkError> {
        (**self).generation(row, image, mask)
    }

    fn pixel_written(&mut self, generation: u64, coord: TorusCoord, color: RgbPixel) {
        (**self).pixel_written(generation, coord, color)
    }
}

/// Shared bookkeeping of both loops: trace rows, milestones, frames.
struct Recorder<'c, S> {
    cfg: &'c RunConfig,
    sink: S,
    rows: Vec<TraceRow>,
    milestones: Vec<MilestoneEvent>,
    next_milestone: usize,
    frames: u64,
}

impl<'c, S: RunSink> Recorder<'c, S> {
    fn new(cfg: &'c RunConfig, sink: S) -> Self {
        Self {
            cfg,
            sink,
            rows: Vec::new(),
            milestones: Vec::new(),
            next_milestone: 0,
            frames: 0,
        }
    }

    fn record(&mut self, generation: u64, fitness: u64, x: &RasterImage, mask: &StateMask) -> Result<(), EngineError> {
        let fraction = fraction_target(mask);
        let first_new = self.next_milestone;
        while self.next_milestone < self.cfg.milestones.len()
            && fraction >= self.cfg.milestones[self.next_milestone]
        {
            self.next_milestone += 1;
        }
        let crossed = &self.cfg.milestones[first_new..self.next_milestone];
        let periodic = generation.is_multiple_of(self.cfg.frame_every);
        let emit = periodic || !crossed.is_empty();
        let wants_features =
            emit || (self.cfg.feature_every > 0 && generation.is_multiple_of(self.cfg.feature_every));
        let row = TraceRow {
            generation,
            fitness,
            fraction_target: fraction,
            features: wants_features.then(|| features::evaluate(x)),
        };
        if emit {
            let id = self.frames;
            for &f in crossed {
                self.milestones.push(MilestoneEvent {
                    fraction: f,
                    generation,
                    frame_id: id,
                });
            }
            self.sink
                .frame(&Frame {
                    id,
                    generation,
                    image: x,
                    milestones: crossed,
                    periodic,
                })
                .map_err(EngineError::Sink)?;
            self.frames += 1;
        }
        self.sink.generation(&row, x, mask).map_err(EngineError::Sink)?;
        self.rows.push(row);
        Ok(())
    }

    fn finish(self, status: RunStatus, generations: u64, accepted: u64) -> RunTrace {
        RunTrace {
            rows: self.rows,
            milestones: self.milestones,
            status,
            generations,
            accepted,
            frames: self.frames,
        }
    }
}

/// Runs the (1+1) EA from `source` towards `target`.
///
/// Each generation applies the scheduled mutation and keeps the offspring
/// iff `f(Y, T) >= f(X, T)`. Stops when every non-fixed pixel matches the
/// target or the generation budget is spent.
pub fn run_transition<S: RunSink>(
    source: &RasterImage,
    target: &RasterImage,
    cfg: &RunConfig,
    sink: S,
) -> Result<(RasterImage, RunTrace), EngineError> {
    cfg.validate()?;
    let mut mask = build_mask(source, target)?;
    let mut x = source.clone();
    let op = &cfg.operator;
    let alpha = op.kind.effective_alpha(op.alpha);
    let tail = cfg.tail_threshold();
    let mut streams = RunStreams::new(cfg.seed);
    let mut rec = Recorder::new(cfg, sink);

    let fitness = |mask: &StateMask| (mask.fixed_count() + mask.target_count()) as u64;

    if mask.active_count() == 0 {
        let row = TraceRow {
            generation: 0,
            fitness: fitness(&mask),
            fraction_target: 1.0,
            features: None,
        };
        rec.rows.push(row);
        return Ok((x, rec.finish(RunStatus::NothingToDo, 0, 0)));
    }

    rec.record(0, fitness(&mask), &x, &mask)?;
    let mut generation = 0;
    let mut accepted = 0;
    while mask.source_count() > 0 && generation < cfg.max_generations {
        let remaining = mask.source_count();
        let accept = if tail.is_some_and(|limit| remaining <= limit) {
            let flips: Vec<usize> = mask.source_indices().iter().map(|&k| k as usize).collect();
            for k in flips {
                x.set_at(k, target.at(k));
                mask.set_state(k, PixelState::Target);
            }
            true
        } else {
            match select_operator(generation, op) {
                MutationKind::Asymmetric => {
                    let flips = sample_asymmetric_flips(&mask, op.c_s, op.c_t, &mut streams.flip);
                    let keep = flips.fitness_delta() >= 0;
                    if keep {
                        flips.apply(&mut x, &mut mask, source, target);
                    }
                    keep
                }
                // walks only move pixels towards T, so f never drops
                MutationKind::Walk => {
                    walk_mutation(&mut x, &mut mask, target, alpha, op.t_max, &mut streams);
                    true
                }
            }
        };
        generation += 1;
        accepted += u64::from(accept);
        rec.record(generation, fitness(&mask), &x, &mask)?;
    }

    let status = if mask.source_count() == 0 {
        RunStatus::Converged
    } else {
        RunStatus::BudgetExhausted
    };
    Ok((x, rec.finish(status, generation, accepted)))
}

/// Evolutionary painting from `source` (usually blank) using the colors of
/// `target`.
///
/// Each generation sweeps the pixels in row-major order; every pixel that is
/// still unpainted when the sweep reaches it launches a paint walk with
/// probability `min{c_s / (2|X|_S), 1}`, where `|X|_S` is taken at the start
/// of the generation. Stops once nothing is left unpainted.
pub fn run_painting<S: RunSink>(
    source: &RasterImage,
    target: &RasterImage,
    cfg: &RunConfig,
    sink: S,
) -> Result<(RasterImage, RunTrace), EngineError> {
    cfg.validate()?;
    let mut mask = build_mask(source, target)?;
    let mut x = source.clone();
    let op = &cfg.operator;
    let dims = target.dims();
    let mut streams = RunStreams::new(cfg.seed);
    let mut rec = Recorder::new(cfg, sink);

    // f(X, S): unpainted pixels plus those where S already equals T
    let fitness = |mask: &StateMask| (mask.fixed_count() + mask.source_count()) as u64;

    if mask.active_count() == 0 {
        rec.rows.push(TraceRow {
            generation: 0,
            fitness: fitness(&mask),
            fraction_target: 1.0,
            features: None,
        });
        return Ok((x, rec.finish(RunStatus::NothingToDo, 0, 0)));
    }

    rec.record(0, fitness(&mask), &x, &mask)?;
    let mut generation = 0;
    let mut accepted = 0;
    let total = dims.len() as u64;
    while mask.source_count() > 0 && generation < cfg.max_generations {
        generation += 1;
        let p = flip_probability(op.c_s, mask.source_count());
        let ln_q = (1.0 - p).ln();
        let mut launched = false;
        let mut pos: u64 = 0;
        loop {
            // Bernoulli(p) selection over row-major positions via geometric gaps
            if p < 1.0 {
                pos = pos.saturating_add(streams.flip.geometric_gap(ln_q));
            }
            if pos >= total {
                break;
            }
            let k = pos as usize;
            pos += 1;
            if mask.state(k) != PixelState::Source {
                continue;
            }
            let start = dims.coord(k);
            let written = paint_mutation(
                start,
                &mut x,
                &mut mask,
                target,
                op.alpha,
                op.t_max,
                op.repaint,
                &mut streams.step,
            )?;
            launched = true;
            for w in written {
                rec.sink.pixel_written(generation, dims.coord(w), x.at(w));
            }
        }
        accepted += u64::from(launched);
        rec.record(generation, fitness(&mask), &x, &mask)?;
    }

    let status = if mask.source_count() == 0 {
        RunStatus::Converged
    } else {
        RunStatus::BudgetExhausted
    };
    Ok((x, rec.finish(status, generation, accepted)))
}
