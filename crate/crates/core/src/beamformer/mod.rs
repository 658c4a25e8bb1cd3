//! Delay-and-sum front end shared by all pipelines: channel traces to
//! per-angle complex images.

mod das;
mod hilbert;
mod mask;
mod stack;

pub use das::{
    beamform_stack, beamform_stacks, beamform_stacks_with, das_beamform, das_beamform_unnormalized,
    ApodizationSpec, ApodizationWindow, DasBeamformer,
};
pub use hilbert::{analytic_signal, HilbertPlan};
pub use mask::ApertureMask;
pub use stack::{AnalyticImageStack, FrameSeries};
