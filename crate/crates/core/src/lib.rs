//! Plane-wave ultrasound power Doppler toolkit.
//!
//! Five image-formation pipelines share one delay-and-sum front end:
//! coherent compounding (PD CC), frame multiply and sum (PD FMAS), acoustic
//! sub-aperture processing (ASAP), ASAP on FMAS-combined sub-apertures, and
//! SAMAS, which gates the ASAP-FMAS power with a suppressor derived from the
//! phase of the plain ASAP correlation. A ray-acoustics channel-data
//! simulator, clutter filters, quality metrics and a per-stage timing
//! harness complete the toolkit.
//!
//! Numeric kernels are generic over [`Real`] (`f32`/`f64`); the aliases at
//! the bottom of this file name the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod acquisition;
pub mod beamformer;
pub mod clutter;
pub mod compounding;
mod error;
mod fsutil;
pub mod metrics;
mod scalar;
pub mod simulator;
pub mod subaperture;

pub use error::{Error, Result};
pub use fsutil::write_atomic;
pub use scalar::{Cplx, Real};

pub use acquisition::{AcquisitionConfig, ImageGrid, Roi};
pub use beamformer::{ApertureMask, ApodizationSpec};
pub use compounding::FmasVariant;
pub use subaperture::{AperturePattern, SuppressorMode};

/// Channel data in single precision (the container's storage type).
pub type ChannelData32 = acquisition::ChannelDataSet<f32>;
/// Channel data in double precision.
pub type ChannelData64 = acquisition::ChannelDataSet<f64>;
pub type ImageStack32 = beamformer::AnalyticImageStack<f32>;
pub type ImageStack64 = beamformer::AnalyticImageStack<f64>;
pub type PowerImage32 = compounding::PowerImage<f32>;
pub type PowerImage64 = compounding::PowerImage<f64>;
pub type Correlation32 = subaperture::CorrelationImage<f32>;
pub type Correlation64 = subaperture::CorrelationImage<f64>;
