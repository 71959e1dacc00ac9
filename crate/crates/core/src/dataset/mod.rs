//! Dataset manifests, homography and detection files, and dataset fetching.

pub mod fetch;
pub mod files;
pub mod manifest;
pub mod synthetic;

pub use fetch::{fetch_dataset, FetchOptions, FetchOutcome, FetchReport};
pub use files::{
    convert_legacy, format_detections, load_detections, load_homography, parse_detections, write_detections,
    DETECTION_HEADER,
};
pub use manifest::{
    load_manifest, scan_dataset, DatasetManifest, Download, HomographyDirection, HomographyEntry, ImageEntry, Layout,
    Sequence, MANIFEST_SCHEMA,
};
pub use synthetic::{SyntheticDataset, SyntheticDetector};
