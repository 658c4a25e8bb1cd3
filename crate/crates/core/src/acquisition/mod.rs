//! Acquisition configuration, coordinate conventions, pixel grids, ROIs and
//! the raw channel-data container.

mod config;
mod container;
mod dataset;
mod grid;
mod kv;

pub use config::{spread_degrees, tukey, validate_config, AcquisitionConfig};
pub use container::{decode_dataset, encode_dataset, read_dataset, write_dataset, write_dataset_to};
pub use dataset::ChannelDataSet;
pub use grid::{format_rois, parse_rois, read_rois, ImageGrid, Roi, RoiShape};
pub use kv::KeyValues;
