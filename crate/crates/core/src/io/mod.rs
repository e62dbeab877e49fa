//! Snapshots, time series, plots and output manifests.

pub mod manifest;
pub mod plot;
pub mod snapshot;
pub mod timeseries;

pub use manifest::{Manifest, ManifestEntry};
pub use plot::{LinePlot, Marker, Series};
pub use snapshot::{Snapshot, SnapshotField};
pub use timeseries::{read_timeseries, write_timeseries, TimeSeriesRow};
