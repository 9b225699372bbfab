//! File formats, synthetic data, noise injection, and experiment
//! orchestration behind the `tvpwl` command-line tool.

pub mod experiment;
pub mod io;
pub mod noise;
pub mod synth;

pub use experiment::{run_experiment, EpsMode, GammaSource, InputSpec, Manifest, RunConfig};
pub use noise::add_gaussian_noise;
pub use synth::{default_segments, synth_image, synth_signal, Segment, SegmentKind};
