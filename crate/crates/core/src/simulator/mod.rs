//! Synthetic multi-angle RF channel data from point-scatterer scenes
//! (far-field ray acoustics: no attenuation, no multiple scattering, no
//! element directivity).

mod builtin;
mod pulse;
mod scene;
mod synth;

pub use builtin::{BuiltinScene, SceneSetup};
pub use pulse::{Envelope, PulseSpec};
pub use scene::{advance_scene, format_scene, parse_scene, read_scene, PhantomScene, Scatterer};
pub use synth::{
    synthesize_am_triplet, synthesize_sequence, synthesize_transmit, transmit_time, ContrastMode,
    RecordWindow, SequenceOptions, TransmitId,
};
