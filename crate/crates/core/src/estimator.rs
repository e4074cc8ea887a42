//! Angle-of-arrival recovery from folded difference profiles.
//!
//! Two routes are provided. [`estimate_grid`] searches the forward model
//! over a uniform angle grid and refines the best cell with a golden-section
//! search. [`estimate_harmonic`] reads the angle from the first circular
//! harmonic of the profile, which for a uniform circular array is
//! `A cos(aoa - psi_n)` with `psi_n` the azimuth of the chord from antenna
//! `n` to antenna `n + 1`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::angle::{circular_mean, circular_std, rms_circular_deviation, wrap180, wrap360};
use crate::error::{Error, Result};
use crate::geometry::{clockwise_azimuth, clockwise_unit, ArrayGeometry, CarrierModel, Point};
use crate::pipeline::{average_profiles, process_packet, DiffProfile, MeanMode, ProfileKind};
use crate::simulator::{PacketSamples, SamplingConfig};

pub const DEFAULT_GRID_STEP_DEG: f64 = 0.1;
pub const DEFAULT_MIN_AMPLITUDE_DEG: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Grid,
    Harmonic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Grid => "grid",
            Method::Harmonic => "harmonic",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Method::Grid),
            "harmonic" => Ok(Method::Harmonic),
            _ => Err(Error::Config(format!(
                "unknown method {s:?}; expected grid or harmonic"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Average the packets' profiles, then fit once.
    AverageThenFit,
    /// Fit every packet, then take the circular mean of the angles.
    FitThenAverage,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::AverageThenFit => "avg-fit",
            Strategy::FitThenAverage => "fit-avg",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg-fit" => Ok(Strategy::AverageThenFit),
            "fit-avg" => Ok(Strategy::FitThenAverage),
            _ => Err(Error::Config(format!(
                "unknown strategy {s:?}; expected avg-fit or fit-avg"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoAEstimate {
    /// Degrees in `[0, 360)`.
    pub angle_deg: f64,
    /// RMS wrapped misfit between profile and model at `angle_deg`.
    pub residual_deg: f64,
    pub method: Method,
    pub packets: usize,
    /// Circular standard deviation of per-packet estimates, when more than
    /// one packet contributed.
    pub dispersion_deg: Option<f64>,
    pub provenance: Vec<u32>,
}

/// Forward model with the chord vectors precomputed.
#[derive(Debug, Clone)]
pub struct ProfileModel {
    /// Chord from antenna n to n+1, scaled to degrees of phase per unit
    /// projection.
    chords: Vec<Point>,
}

impl ProfileModel {
    pub fn new(geom: &ArrayGeometry, carrier: &CarrierModel) -> Self {
        let scale = 360.0 / carrier.wavelength_mm();
        let pos = geom.antenna_positions();
        let n = pos.len();
        let chords = (0..n)
            .map(|i| {
                let c = pos[i] - pos[(i + 1) % n];
                Point::new(c.x * scale, c.y * scale)
            })
            .collect();
        Self { chords }
    }

    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }

    /// Peak phase difference of any adjacent pair.
    pub fn amplitude_deg(&self) -> f64 {
        self.chords
            .iter()
            .map(|c| c.x.hypot(c.y))
            .fold(0.0, f64::max)
    }

    /// Azimuth of each pair's chord (the pair axis).
    pub fn pair_axes_deg(&self) -> Vec<f64> {
        self.chords.iter().map(|c| clockwise_azimuth(*c)).collect()
    }

    pub fn profile_into(&self, aoa_deg: f64, out: &mut Vec<f64>) {
        let u = clockwise_unit(aoa_deg);
        out.clear();
        out.extend(self.chords.iter().map(|c| wrap180(c.dot(&u))));
    }

    pub fn profile(&self, aoa_deg: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        self.profile_into(aoa_deg, &mut v);
        v
    }

    pub fn residual(&self, values: &[f64], aoa_deg: f64) -> f64 {
        let u = clockwise_unit(aoa_deg);
        let ss: f64 = self
            .chords
            .iter()
            .zip(values)
            .map(|(c, v)| wrap180(v - wrap180(c.dot(&u))).powi(2))
            .sum();
        (ss / self.len() as f64).sqrt()
    }
}

fn check_profile(profile: &DiffProfile, geom: &ArrayGeometry) -> Result<()> {
    if profile.kind != ProfileKind::Folded || profile.len() != geom.antenna_count() {
        return Err(Error::Input(format!(
            "expected a folded profile of {} entries, got {:?} of {}",
            geom.antenna_count(),
            profile.kind,
            profile.len()
        )));
    }
    Ok(())
}

fn check_signal(model: &ProfileModel) -> Result<()> {
    if model.amplitude_deg() < 1e-6 {
        return Err(Error::Degenerate(
            "array baseline is too small to carry angular information".into(),
        ));
    }
    Ok(())
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes `f` on `[lo, hi]` assuming it is unimodal there.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Residual at every grid angle `0, step, 2 step, ..` below 360.
pub fn grid_residuals(
    profile: &DiffProfile,
    model: &ProfileModel,
    step_deg: f64,
) -> Vec<(f64, f64)> {
    let n = (360.0 / step_deg - 1e-9).ceil() as usize;
    (0..n)
        .map(|i| {
            let theta = i as f64 * step_deg;
            (theta, model.residual(&profile.values, theta))
        })
        .collect()
}

pub fn estimate_grid(
    profile: &DiffProfile,
    geom: &ArrayGeometry,
    carrier: &CarrierModel,
    step_deg: f64,
) -> Result<AoAEstimate> {
    let model = ProfileModel::new(geom, carrier);
    estimate_grid_with(profile, geom, &model, step_deg)
}

fn estimate_grid_with(
    profile: &DiffProfile,
    geom: &ArrayGeometry,
    model: &ProfileModel,
    step_deg: f64,
) -> Result<AoAEstimate> {
    check_profile(profile, geom)?;
    if !(step_deg > 0.0) || step_deg >= 360.0 {
        return Err(Error::Config(format!(
            "grid step must be in (0, 360), got {step_deg}"
        )));
    }
    check_signal(model)?;

    let mut best = (0.0, f64::INFINITY);
    for (theta, r) in grid_residuals(profile, model, step_deg) {
        if r < best.1 {
            best = (theta, r);
        }
    }
    let (refined, r) = golden_section(
        |t| model.residual(&profile.values, t),
        best.0 - step_deg,
        best.0 + step_deg,
        1e-9,
    );
    let (angle, residual) = if r <= best.1 { (refined, r) } else { best };
    Ok(AoAEstimate {
        angle_deg: wrap360(angle),
        residual_deg: residual,
        method: Method::Grid,
        packets: profile.provenance.len().max(1),
        dispersion_deg: None,
        provenance: profile.provenance.clone(),
    })
}

pub fn estimate_harmonic(
    profile: &DiffProfile,
    geom: &ArrayGeometry,
    carrier: &CarrierModel,
) -> Result<AoAEstimate> {
    let model = ProfileModel::new(geom, carrier);
    estimate_harmonic_with(profile, geom, &model, DEFAULT_MIN_AMPLITUDE_DEG)
}

/// As [`estimate_harmonic`] with an explicit minimum first-harmonic
/// amplitude (in the profile's units) below which the profile is rejected.
pub fn estimate_harmonic_with(
    profile: &DiffProfile,
    geom: &ArrayGeometry,
    model: &ProfileModel,
    min_amplitude: f64,
) -> Result<AoAEstimate> {
    check_profile(profile, geom)?;
    check_signal(model)?;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (v, psi) in profile.values.iter().zip(model.pair_axes_deg()) {
        let r = psi.to_radians();
        sx += v * r.cos();
        sy += v * r.sin();
    }
    let amplitude = 2.0 * sx.hypot(sy) / profile.len() as f64;
    if amplitude < min_amplitude {
        return Err(Error::Degenerate(format!(
            "first harmonic amplitude {amplitude:.3} is below {min_amplitude}; no directional signal"
        )));
    }
    let angle = wrap360(sy.atan2(sx).to_degrees());
    Ok(AoAEstimate {
        angle_deg: angle,
        residual_deg: model.residual(&profile.values, angle),
        method: Method::Harmonic,
        packets: profile.provenance.len().max(1),
        dispersion_deg: None,
        provenance: profile.provenance.clone(),
    })
}

/// Everything needed to go from packets to an angle.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub geometry: ArrayGeometry,
    pub carrier: CarrierModel,
    pub sampling: SamplingConfig,
    pub mean_mode: MeanMode,
    pub method: Method,
    pub grid_step_deg: f64,
    pub min_amplitude_deg: f64,
    model: ProfileModel,
}

impl Estimator {
    pub fn new(geometry: ArrayGeometry, carrier: CarrierModel, sampling: SamplingConfig) -> Self {
        let model = ProfileModel::new(&geometry, &carrier);
        Self {
            geometry,
            carrier,
            sampling,
            mean_mode: MeanMode::Circular,
            method: Method::Grid,
            grid_step_deg: DEFAULT_GRID_STEP_DEG,
            min_amplitude_deg: DEFAULT_MIN_AMPLITUDE_DEG,
            model,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_grid_step(mut self, step_deg: f64) -> Self {
        self.grid_step_deg = step_deg;
        self
    }

    pub fn with_mean_mode(mut self, mode: MeanMode) -> Self {
        self.mean_mode = mode;
        self
    }

    pub fn model(&self) -> &ProfileModel {
        &self.model
    }

    /// Fits one folded profile with the configured method.
    pub fn fit(&self, profile: &DiffProfile) -> Result<AoAEstimate> {
        match self.method {
            Method::Grid => {
                estimate_grid_with(profile, &self.geometry, &self.model, self.grid_step_deg)
            }
            Method::Harmonic => {
                estimate_harmonic_with(profile, &self.geometry, &self.model, self.min_amplitude_deg)
            }
        }
    }

    /// Folded profile of every packet.
    pub fn profiles(&self, packets: &[PacketSamples]) -> Result<Vec<DiffProfile>> {
        packets
            .par_iter()
            .map(|p| {
                process_packet(
                    p,
                    &self.sampling,
                    self.geometry.antenna_count(),
                    self.mean_mode,
                )
                .map(|(_, folded)| folded)
            })
            .collect()
    }

    pub fn estimate_packets(
        &self,
        packets: &[PacketSamples],
        strategy: Strategy,
    ) -> Result<AoAEstimate> {
        if packets.is_empty() {
            return Err(Error::Input("no packets to estimate from".into()));
        }
        let profiles = self.profiles(packets)?;
        self.estimate_profiles(&profiles, strategy)
    }

    /// Combines several folded profiles into one estimate.
    pub fn estimate_profiles(
        &self,
        profiles: &[DiffProfile],
        strategy: Strategy,
    ) -> Result<AoAEstimate> {
        if profiles.is_empty() {
            return Err(Error::Input("no profiles to estimate from".into()));
        }
        let provenance: Vec<u32> = profiles
            .iter()
            .flat_map(|p| p.provenance.iter().copied())
            .collect();
        match strategy {
            Strategy::AverageThenFit => {
                let avg = average_profiles(profiles, self.mean_mode)?;
                let mut est = self.fit(&avg)?;
                est.packets = profiles.len();
                est.provenance = provenance;
                if profiles.len() > 1 {
                    let angles: Vec<f64> = profiles
                        .par_iter()
                        .filter_map(|p| self.fit(p).ok().map(|e| e.angle_deg))
                        .collect();
                    est.dispersion_deg = circular_std(angles);
                }
                Ok(est)
            }
            Strategy::FitThenAverage => {
                let fits = profiles
                    .par_iter()
                    .map(|p| self.fit(p))
                    .collect::<Result<Vec<_>>>()?;
                let angles: Vec<f64> = fits.iter().map(|e| e.angle_deg).collect();
                let angle = circular_mean(angles.iter().copied()).ok_or_else(|| {
                    Error::Degenerate("per-packet angles cancel; no mean direction".into())
                })?;
                let ss: f64 = fits.iter().map(|e| e.residual_deg.powi(2)).sum();
                Ok(AoAEstimate {
                    angle_deg: wrap360(angle),
                    residual_deg: (ss / fits.len() as f64).sqrt(),
                    method: self.method,
                    packets: fits.len(),
                    dispersion_deg: if fits.len() > 1 {
                        circular_std(angles)
                    } else {
                        None
                    },
                    provenance,
                })
            }
        }
    }
}

/// RMS wrapped deviation between a folded profile and the model at `aoa`.
pub fn profile_deviation(
    profile: &DiffProfile,
    geom: &ArrayGeometry,
    carrier: &CarrierModel,
    aoa_deg: f64,
) -> f64 {
    let expected = crate::geometry::expected_profile(geom, carrier, aoa_deg);
    rms_circular_deviation(&profile.values, &expected.values)
}
