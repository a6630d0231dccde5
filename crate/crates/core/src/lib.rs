//! Planar natural-feature tracking.
//!
//! A [`pipeline::Tracker`] locates a textured planar target in grayscale
//! frames and reports its 6-DoF pose. Frames run through one of two phases:
//! detection (FAST corners, steered BRIEF descriptors, brute-force matching,
//! RANSAC homography, iterative PnP) until the target is found, then cheap
//! frame-to-frame tracking (template warp, NCC patch search, homography,
//! PnP) until it is lost.
//!
//! ```no_run
//! use nftrack::{camera::CameraIntrinsics, features::FeatureConfig, io, pipeline, target};
//!
//! let image = io::load_gray("target.png")?;
//! let config = pipeline::TrackerConfig::default();
//! let template = target::TargetTemplate::new(image, 0.297, 0.210, &config.features)?;
//! let mut tracker = pipeline::Tracker::new(template, CameraIntrinsics::default_320x240(), config)?;
//! let frame = io::load_gray("frame.pgm")?;
//! if let Some(pose) = tracker.process_frame(&frame)?.pose {
//!     println!("{:?}", pose.t);
//! }
//! # let _ = FeatureConfig::default();
//! # Ok::<(), nftrack::Error>(())
//! ```

pub mod camera;
pub mod error;
pub mod features;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod io;
pub mod matching;
pub mod pipeline;
pub mod target;
pub mod tracking;

pub use error::{Error, Result};
