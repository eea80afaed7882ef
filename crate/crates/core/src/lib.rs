//! Evolutionary image transition and painting.
//!
//! A single image `X` starts as the source `S` and is driven towards the
//! target `T` by a (1+1) EA with asymmetric mutation, by uniform or biased
//! random walks on the image torus, or by alternating the two. The painting
//! loop uses the same biased walks to paint a blank canvas with the colors
//! of `T`. [`features`] computes the aesthetic metrics used to follow a run.

pub mod engine;
pub mod features;
pub mod operators;
pub mod raster;
pub mod rng;

pub use engine::{
    fraction_target, run_painting, run_transition, EngineError, Frame, MilestoneEvent, RunConfig,
    RunMode, RunSink, RunStatus, RunTrace, SinkError, TraceRow, DEFAULT_MILESTONES,
};
pub use features::{FeatureVector, GcfWeights, Histogram9};
pub use operators::{MutationKind, OperatorConfig, OperatorError, OperatorKind};
pub use raster::{
    agreement_count, build_mask, neighbors, Dims, PixelState, RasterError, RasterImage, RgbPixel,
    StateMask, TorusCoord,
};
pub use rng::{RngStream, RunStreams, StreamId, PRNG_ID};
