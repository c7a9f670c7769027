//! Digital-twin simulator for eye-tracking camera rigs.
//!
//! The crate renders synthetic near-infrared eye images for arbitrary camera
//! placements, degrades them through a sensor model, trains small gaze
//! estimators per configuration, and reports how accuracy trends across
//! hardware sweeps.

pub mod camera;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod optics;
pub mod par;
pub mod scene;

pub use camera::{project, Camera, CameraIntrinsics, CameraPose, Mat3, Vec2, Vec3};
pub use error::{Error, Result};
pub use image::{LinearImage, QuantizedImage};
pub use metrics::{angular_error, pearson_r, percentile, GazeSample};
pub use par::Exec;
