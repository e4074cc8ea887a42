//! Run configuration: a TOML file with one table per subsystem, overridden
//! by command-line flags and resolved into validated domain types.
//!
//! ```toml
//! [geometry]
//! antenna_count = 8
//! radius_mm = 65.0
//!
//! [noise]
//! sigma_deg = 45.0
//! seed = 7
//!
//! [beacons]
//! b1 = [12.0, 12.0]
//! b2 = [0.0, 0.0]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::{Method, Strategy, DEFAULT_GRID_STEP_DEG, DEFAULT_MIN_AMPLITUDE_DEG};
use crate::geometry::{ArrayGeometry, CarrierModel, Point, DEFAULT_CARRIER_HZ, SPEED_OF_LIGHT};
use crate::locator::{BeaconMap, LocateOptions};
use crate::pipeline::MeanMode;
use crate::simulator::{NoiseModel, SamplingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub antenna_count: usize,
    pub radius_mm: f64,
    pub orientation_offset_deg: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            antenna_count: 8,
            radius_mm: 65.0,
            orientation_offset_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierSection {
    pub frequency_hz: f64,
    pub propagation_speed_mps: f64,
}

impl Default for CarrierSection {
    fn default() -> Self {
        Self {
            frequency_hz: DEFAULT_CARRIER_HZ,
            propagation_speed_mps: SPEED_OF_LIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub cte_length_us: f64,
    pub guard_us: f64,
    pub reference_us: f64,
    pub slot_us: f64,
    pub sample_period_ns: f64,
    pub tone_rate_deg_per_us: f64,
    pub fixed_point_halfscale: i16,
    pub retained_indices: Vec<usize>,
    pub rotations: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = SamplingConfig::default();
        Self {
            cte_length_us: d.cte_length_us,
            guard_us: d.guard_us,
            reference_us: d.reference_us,
            slot_us: d.slot_us,
            sample_period_ns: d.sample_period_ns,
            tone_rate_deg_per_us: d.tone_rate_deg_per_us,
            fixed_point_halfscale: d.fixed_point_halfscale,
            retained_indices: d.retained_indices,
            rotations: d.rotations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_deg: f64,
    pub transient_corruption: bool,
    pub corruption_deg: f64,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let d = NoiseModel::default();
        Self {
            sigma_deg: d.sigma_deg,
            transient_corruption: d.transient_corruption,
            corruption_deg: d.corruption_deg,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub method: String,
    pub strategy: String,
    pub grid_step_deg: f64,
    pub min_amplitude_deg: f64,
    pub arithmetic_mean: bool,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            method: Method::Grid.to_string(),
            strategy: Strategy::AverageThenFit.to_string(),
            grid_step_deg: DEFAULT_GRID_STEP_DEG,
            min_amplitude_deg: DEFAULT_MIN_AMPLITUDE_DEG,
            arithmetic_mean: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocatorSection {
    pub heading_deg: f64,
    pub grid_step_m: f64,
    /// `[x_min, y_min, x_max, y_max]`; the beacons' bounding box when absent.
    pub bounds: Option<[f64; 4]>,
}

impl Default for LocatorSection {
    fn default() -> Self {
        Self {
            heading_deg: 0.0,
            grid_step_m: LocateOptions::default().grid_step_m,
            bounds: None,
        }
    }
}

/// The file as written by the user, before validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub geometry: GeometrySection,
    pub carrier: CarrierSection,
    pub sampling: SamplingSection,
    pub noise: NoiseSection,
    pub estimator: EstimatorSection,
    pub locator: LocatorSection,
    /// Beacon id to `[x, y]` in meters; the 12 m field square when empty.
    pub beacons: BTreeMap<String, [f64; 2]>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let g = &self.geometry;
        let geometry = ArrayGeometry::new(g.antenna_count, g.radius_mm, g.orientation_offset_deg)?;
        let carrier = CarrierModel::new(
            self.carrier.frequency_hz,
            self.carrier.propagation_speed_mps,
        )?;
        carrier.check_no_aliasing(&geometry)?;
        let s = &self.sampling;
        let sampling = SamplingConfig {
            cte_length_us: s.cte_length_us,
            guard_us: s.guard_us,
            reference_us: s.reference_us,
            slot_us: s.slot_us,
            sample_period_ns: s.sample_period_ns,
            tone_rate_deg_per_us: s.tone_rate_deg_per_us,
            fixed_point_halfscale: s.fixed_point_halfscale,
            retained_indices: s.retained_indices.clone(),
            rotations: s.rotations,
        };
        sampling.validate(geometry.antenna_count())?;
        let noise = NoiseModel {
            sigma_deg: self.noise.sigma_deg,
            transient_corruption: self.noise.transient_corruption,
            corruption_deg: self.noise.corruption_deg,
            seed: self.noise.seed,
        };
        noise.validate()?;
        let e = &self.estimator;
        if !(e.grid_step_deg > 0.0 && e.grid_step_deg < 360.0) {
            return Err(Error::Config(format!(
                "grid step must be in (0, 360), got {}",
                e.grid_step_deg
            )));
        }
        let beacons: BTreeMap<String, Point> = self
            .beacons
            .iter()
            .map(|(k, [x, y])| (k.clone(), Point::new(*x, *y)))
            .collect();
        let map = match (beacons.is_empty(), self.locator.bounds) {
            (true, None) => BeaconMap::field_square(),
            (true, Some(b)) => BeaconMap::with_bounds(
                BeaconMap::field_square().beacons().clone(),
                Point::new(b[0], b[1]),
                Point::new(b[2], b[3]),
            )?,
            (false, None) => BeaconMap::new(beacons)?,
            (false, Some(b)) => {
                BeaconMap::with_bounds(beacons, Point::new(b[0], b[1]), Point::new(b[2], b[3]))?
            }
        };
        if !(self.locator.grid_step_m > 0.0) {
            return Err(Error::Config("locator grid step must be positive".into()));
        }
        Ok(RunConfig {
            geometry,
            carrier,
            sampling,
            noise,
            method: e.method.parse()?,
            strategy: e.strategy.parse()?,
            grid_step_deg: e.grid_step_deg,
            min_amplitude_deg: e.min_amplitude_deg,
            mean_mode: if e.arithmetic_mean {
                MeanMode::Arithmetic
            } else {
                MeanMode::Circular
            },
            beacons: map,
            heading_deg: self.locator.heading_deg,
            locate: LocateOptions {
                grid_step_m: self.locator.grid_step_m,
                ..LocateOptions::default()
            },
            hash: self.hash(),
        })
    }
}

/// Validated settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: ArrayGeometry,
    pub carrier: CarrierModel,
    pub sampling: SamplingConfig,
    pub noise: NoiseModel,
    pub method: Method,
    pub strategy: Strategy,
    pub grid_step_deg: f64,
    pub min_amplitude_deg: f64,
    pub mean_mode: MeanMode,
    pub beacons: BeaconMap,
    pub heading_deg: f64,
    pub locate: LocateOptions,
    /// Hash of the resolved file, stamped into outputs.
    pub hash: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let rc = ConfigFile::parse("").unwrap().resolve().unwrap();
        assert_eq!(rc.geometry, ArrayGeometry::default());
        assert_eq!(rc.carrier, CarrierModel::default());
        assert_eq!(rc.sampling, SamplingConfig::default());
        assert_eq!(rc.method, Method::Grid);
        assert_eq!(rc.beacons, BeaconMap::field_square());
        assert_eq!(rc.hash.len(), 16);
    }

    #[test]
    fn sections_parse() {
        let text = r#"
[geometry]
radius_mm = 60.0

[noise]
sigma_deg = 45.0
seed = 9

[estimator]
method = "harmonic"
arithmetic_mean = true

[beacons]
a = [0.0, 0.0]
b = [10.0, 0.0]
c = [0.0, 10.0]
"#;
        let rc = ConfigFile::parse(text).unwrap().resolve().unwrap();
        assert_eq!(rc.geometry.radius_mm(), 60.0);
        assert_eq!(rc.noise.sigma_deg, 45.0);
        assert_eq!(rc.method, Method::Harmonic);
        assert_eq!(rc.mean_mode, MeanMode::Arithmetic);
        assert_eq!(rc.beacons.beacons().len(), 3);
    }

    #[test]
    fn violations_are_config_errors() {
        for text in [
            "[geometry]\nantenna_count = 2",
            "[sampling]\nslot_us = 3.3",
            "[estimator]\nmethod = \"music\"",
            "[geometry]\nbogus = 1",
            "[geometry]\nradius_mm = 120.0",
            "[beacons]\na = [0.0, 0.0]",
        ] {
            let r = ConfigFile::parse(text).and_then(|f| f.resolve());
            assert!(matches!(r, Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ConfigFile::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.noise.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(ConfigFile::parse(&a.to_toml()).unwrap(), a);
    }
}
