//! Tracker configuration and its flat `key = value` text form.
//!
//! Keys are `section.field`, e.g. `features.fast_threshold = 20`. Blank lines
//! and lines starting with `#` are ignored. Absent keys keep their defaults.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::geometry::{PnpParams, RansacParams};
use crate::matching::DEFAULT_FILTER_FLOOR;
use crate::tracking::{MatchResolution, TrackingParams, ValidityParams, MAX_TRACKED_POINTS};

/// Which correspondences feed the PnP step after detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnpPoints {
    /// The four template corners transferred through the homography.
    Corners,
    /// Every RANSAC inlier.
    Inliers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub features: FeatureConfig,
    pub ransac: RansacParams,
    pub ransac_seed: u64,
    pub pnp: PnpParams,
    pub pnp_points: PnpPoints,
    pub validity: ValidityParams,
    pub tracking: TrackingParams,
    pub match_filter_floor: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            ransac: RansacParams::default(),
            ransac_seed: 0,
            pnp: PnpParams::default(),
            pnp_points: PnpPoints::Corners,
            validity: ValidityParams::default(),
            tracking: TrackingParams::default(),
            match_filter_floor: DEFAULT_FILTER_FLOOR,
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config { line, message: format!("bad value {value:?} for {key}") })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config { line, message: format!("bad boolean {value:?} for {key}") }),
    }
}

impl TrackerConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = TrackerConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let Some((key, value)) = s.split_once('=') else {
                return Err(Error::Config { line, message: format!("expected key = value, got {s:?}") });
            };
            let (key, v) = (key.trim(), value.trim());
            match key {
                "features.fast_threshold" => c.features.fast_threshold = parse(line, key, v)?,
                "features.max_features" => c.features.max_features = parse(line, key, v)?,
                "features.min_features" => c.features.min_features = parse(line, key, v)?,
                "features.pyramid_levels" => c.features.pyramid_levels = parse(line, key, v)?,
                "features.scale_factor" => c.features.scale_factor = parse(line, key, v)?,
                "features.orientation_radius" => c.features.orientation_radius = parse(line, key, v)?,
                "matching.filter_floor" => c.match_filter_floor = parse(line, key, v)?,
                "ransac.max_iterations" => c.ransac.max_iterations = parse(line, key, v)?,
                "ransac.inlier_threshold" => c.ransac.inlier_threshold = parse(line, key, v)?,
                "ransac.confidence" => c.ransac.confidence = parse(line, key, v)?,
                "ransac.min_inliers" => c.ransac.min_inliers = parse(line, key, v)?,
                "ransac.seed" => c.ransac_seed = parse(line, key, v)?,
                "pnp.max_iterations" => c.pnp.max_iterations = parse(line, key, v)?,
                "pnp.convergence_epsilon" => c.pnp.convergence_epsilon = parse(line, key, v)?,
                "pnp.damping_initial" => c.pnp.damping_initial = parse(line, key, v)?,
                "pnp.points" => {
                    c.pnp_points = match v {
                        "corners" => PnpPoints::Corners,
                        "inliers" => PnpPoints::Inliers,
                        _ => return Err(Error::Config { line, message: format!("bad pnp.points {v:?}") }),
                    }
                }
                "validity.translation_ratio" => c.validity.translation_ratio = parse(line, key, v)?,
                "validity.min_tracked_points" => c.validity.min_tracked_points = parse(line, key, v)?,
                "validity.max_rotation_deg" => {
                    c.validity.max_rotation_deg = if v == "none" { None } else { Some(parse(line, key, v)?) }
                }
                "tracking.max_points" => c.tracking.max_points = parse(line, key, v)?,
                "tracking.window_len" => c.tracking.window_len = parse(line, key, v)?,
                "tracking.search_radius" => c.tracking.window_len = 2 * parse::<usize>(line, key, v)?,
                "tracking.ncc_accept" => c.tracking.ncc_accept = parse(line, key, v)?,
                "tracking.match_resolution" => {
                    c.tracking.match_resolution = match v {
                        "half" => MatchResolution::Half,
                        "full" => MatchResolution::Full,
                        _ => return Err(Error::Config { line, message: format!("bad match_resolution {v:?}") }),
                    }
                }
                "tracking.use_ransac" => c.tracking.use_ransac = parse_bool(line, key, v)?,
                _ => return Err(Error::Config { line, message: format!("unknown key {key:?}") }),
            }
        }
        c.validate().map_err(|e| Error::Config { line: 0, message: e.to_string() })?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let f = &self.features;
        let _ = writeln!(s, "features.fast_threshold = {}", f.fast_threshold);
        let _ = writeln!(s, "features.max_features = {}", f.max_features);
        let _ = writeln!(s, "features.min_features = {}", f.min_features);
        let _ = writeln!(s, "features.pyramid_levels = {}", f.pyramid_levels);
        let _ = writeln!(s, "features.scale_factor = {}", f.scale_factor);
        let _ = writeln!(s, "features.orientation_radius = {}", f.orientation_radius);
        let _ = writeln!(s, "matching.filter_floor = {}", self.match_filter_floor);
        let r = &self.ransac;
        let _ = writeln!(s, "ransac.max_iterations = {}", r.max_iterations);
        let _ = writeln!(s, "ransac.inlier_threshold = {}", r.inlier_threshold);
        let _ = writeln!(s, "ransac.confidence = {}", r.confidence);
        let _ = writeln!(s, "ransac.min_inliers = {}", r.min_inliers);
        let _ = writeln!(s, "ransac.seed = {}", self.ransac_seed);
        let p = &self.pnp;
        let _ = writeln!(s, "pnp.max_iterations = {}", p.max_iterations);
        let _ = writeln!(s, "pnp.convergence_epsilon = {}", p.convergence_epsilon);
        let _ = writeln!(s, "pnp.damping_initial = {}", p.damping_initial);
        let points = match self.pnp_points {
            PnpPoints::Corners => "corners",
            PnpPoints::Inliers => "inliers",
        };
        let _ = writeln!(s, "pnp.points = {points}");
        let v = &self.validity;
        let _ = writeln!(s, "validity.translation_ratio = {}", v.translation_ratio);
        let _ = writeln!(s, "validity.min_tracked_points = {}", v.min_tracked_points);
        match v.max_rotation_deg {
            Some(d) => {
                let _ = writeln!(s, "validity.max_rotation_deg = {d}");
            }
            None => {
                let _ = writeln!(s, "validity.max_rotation_deg = none");
            }
        }
        let t = &self.tracking;
        let _ = writeln!(s, "tracking.max_points = {}", t.max_points);
        let _ = writeln!(s, "tracking.window_len = {}", t.window_len);
        let _ = writeln!(s, "tracking.ncc_accept = {}", t.ncc_accept);
        let res = match t.match_resolution {
            MatchResolution::Half => "half",
            MatchResolution::Full => "full",
        };
        let _ = writeln!(s, "tracking.match_resolution = {res}");
        let _ = writeln!(s, "tracking.use_ransac = {}", t.use_ransac);
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.ransac.validate()?;
        self.pnp.validate()?;
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.features.pyramid_levels == 0 || !(self.features.scale_factor > 1.0) {
            return bad("pyramid needs >= 1 level and scale factor > 1");
        }
        if self.features.max_features == 0 || self.features.fast_threshold == 0 {
            return bad("max_features and fast_threshold must be positive");
        }
        if !(self.validity.translation_ratio > 0.0) {
            return bad("translation_ratio must be positive");
        }
        if self.tracking.max_points == 0 || self.tracking.max_points > MAX_TRACKED_POINTS {
            return bad("tracking.max_points must be in 1..=25");
        }
        if self.tracking.window_len == 0 || !(-1.0..=1.0).contains(&self.tracking.ncc_accept) {
            return bad("bad tracking window or ncc threshold");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        assert_eq!(TrackerConfig::from_text("").unwrap(), TrackerConfig::default());
        assert_eq!(TrackerConfig::from_text("# comment\n\n").unwrap(), TrackerConfig::default());
    }

    #[test]
    fn text_roundtrip() {
        let mut c = TrackerConfig::default();
        c.features.fast_threshold = 31;
        c.match_filter_floor = 0;
        c.pnp_points = PnpPoints::Inliers;
        c.validity.max_rotation_deg = Some(12.5);
        c.tracking.match_resolution = MatchResolution::Full;
        c.tracking.use_ransac = true;
        c.ransac.inlier_threshold = 2.5;
        assert_eq!(TrackerConfig::from_text(&c.to_text()).unwrap(), c);
        assert_eq!(TrackerConfig::from_text(&TrackerConfig::default().to_text()).unwrap(), TrackerConfig::default());
    }

    #[test]
    fn search_radius_alias() {
        let c = TrackerConfig::from_text("tracking.search_radius = 16").unwrap();
        assert_eq!(c.tracking.window_len, 32);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = TrackerConfig::from_text("features.max_features = 10\nbogus = 1").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        let e = TrackerConfig::from_text("ransac.confidence = x").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }));
        assert!(TrackerConfig::from_text("no equals sign").is_err());
        assert!(TrackerConfig::from_text("tracking.max_points = 26").is_err());
        assert!(TrackerConfig::from_text("ransac.confidence = 1.0").is_err());
    }
}
