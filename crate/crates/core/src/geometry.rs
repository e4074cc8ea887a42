//! Circular array geometry and the plane-wave phase model.
//!
//! Angles in the board frame are measured clockwise from the board's 0°
//! reference, which is the +x axis. Antennas are numbered 1..=N clockwise.
//! An angle of arrival is the azimuth of the propagation direction of the
//! incident plane wave.

use crate::angle::wrap180;
use crate::error::{Error, Result};
use crate::pipeline::{DiffProfile, ProfileKind};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// BLE advertising channel 37.
pub const DEFAULT_CARRIER_HZ: f64 = 2.402e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

/// Unit vector for a clockwise board-frame azimuth in degrees.
pub fn clockwise_unit(azimuth_deg: f64) -> Point {
    let a = azimuth_deg.to_radians();
    Point::new(a.cos(), -a.sin())
}

/// Clockwise azimuth (degrees) of a board-frame vector.
pub fn clockwise_azimuth(v: Point) -> f64 {
    (-v.y).atan2(v.x).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    antenna_count: usize,
    radius_mm: f64,
    orientation_offset_deg: f64,
}

impl ArrayGeometry {
    pub fn new(antenna_count: usize, radius_mm: f64, orientation_offset_deg: f64) -> Result<Self> {
        if antenna_count < 3 {
            return Err(Error::Config(format!(
                "antenna_count must be at least 3, got {antenna_count}"
            )));
        }
        if !(radius_mm > 0.0) || !radius_mm.is_finite() {
            return Err(Error::Config(format!(
                "radius must be positive and finite, got {radius_mm} mm"
            )));
        }
        if !orientation_offset_deg.is_finite() {
            return Err(Error::Config("orientation offset must be finite".into()));
        }
        Ok(Self {
            antenna_count,
            radius_mm,
            orientation_offset_deg,
        })
    }

    pub fn antenna_count(&self) -> usize {
        self.antenna_count
    }

    pub fn radius_mm(&self) -> f64 {
        self.radius_mm
    }

    pub fn orientation_offset_deg(&self) -> f64 {
        self.orientation_offset_deg
    }

    /// Angular spacing between neighbouring antennas.
    pub fn step_deg(&self) -> f64 {
        360.0 / self.antenna_count as f64
    }

    /// Clockwise angular position of antenna `k` (1-based).
    pub fn antenna_angle_deg(&self, k: usize) -> f64 {
        self.orientation_offset_deg + (k - 1) as f64 * self.step_deg()
    }

    /// Distance between two neighbouring antennas.
    pub fn chord_mm(&self) -> f64 {
        2.0 * self.radius_mm * (self.step_deg() / 2.0).to_radians().sin()
    }

    /// Feed-point positions in millimeters, antenna 1 first, clockwise.
    pub fn antenna_positions(&self) -> Vec<Point> {
        (1..=self.antenna_count)
            .map(|k| self.antenna_position(k))
            .collect()
    }

    pub fn antenna_position(&self, k: usize) -> Point {
        let u = clockwise_unit(self.antenna_angle_deg(k));
        Point::new(self.radius_mm * u.x, self.radius_mm * u.y)
    }

    /// Index of the antenna following `k` around the ring.
    pub fn next_antenna(&self, k: usize) -> usize {
        k % self.antenna_count + 1
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self {
            antenna_count: 8,
            radius_mm: 65.0,
            orientation_offset_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierModel {
    frequency_hz: f64,
    propagation_speed_mps: f64,
}

impl CarrierModel {
    pub fn new(frequency_hz: f64, propagation_speed_mps: f64) -> Result<Self> {
        if !(frequency_hz > 0.0) || !(propagation_speed_mps > 0.0) {
            return Err(Error::Config(format!(
                "carrier frequency and propagation speed must be positive, got {frequency_hz} Hz, {propagation_speed_mps} m/s"
            )));
        }
        Ok(Self {
            frequency_hz,
            propagation_speed_mps,
        })
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn propagation_speed_mps(&self) -> f64 {
        self.propagation_speed_mps
    }

    pub fn wavelength_mm(&self) -> f64 {
        self.propagation_speed_mps / self.frequency_hz * 1000.0
    }

    /// Adjacent pairs must be closer than half a wavelength, otherwise the
    /// phase difference of a pair aliases.
    pub fn check_no_aliasing(&self, geom: &ArrayGeometry) -> Result<()> {
        let chord = geom.chord_mm();
        let lambda = self.wavelength_mm();
        if lambda <= 2.0 * chord {
            return Err(Error::Config(format!(
                "adjacent chord {chord:.3} mm is not below half the wavelength ({:.3} mm)",
                lambda / 2.0
            )));
        }
        Ok(())
    }
}

impl Default for CarrierModel {
    fn default() -> Self {
        Self {
            frequency_hz: DEFAULT_CARRIER_HZ,
            propagation_speed_mps: SPEED_OF_LIGHT,
        }
    }
}

/// Phase of antenna `antenna` relative to the board center for a plane wave
/// propagating along `aoa_deg`. Degrees, not wrapped.
pub fn spatial_phase(
    geom: &ArrayGeometry,
    carrier: &CarrierModel,
    aoa_deg: f64,
    antenna: usize,
) -> f64 {
    assert!(
        (1..=geom.antenna_count()).contains(&antenna),
        "antenna index {antenna} out of range"
    );
    let p = geom.antenna_position(antenna);
    360.0 / carrier.wavelength_mm() * p.dot(&clockwise_unit(aoa_deg))
}

/// Noise-free folded difference profile: entry `n` is the wrapped phase of
/// antenna `n+1` minus that of antenna `n+2`, pairs (A1,A2) .. (AN,A1).
pub fn expected_profile(geom: &ArrayGeometry, carrier: &CarrierModel, aoa_deg: f64) -> DiffProfile {
    let phases: Vec<f64> = (1..=geom.antenna_count())
        .map(|k| spatial_phase(geom, carrier, aoa_deg, k))
        .collect();
    let n = phases.len();
    let values = (0..n)
        .map(|i| wrap180(phases[i] - phases[(i + 1) % n]))
        .collect();
    DiffProfile::new(values, ProfileKind::Folded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::circular_diff;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn positions_clockwise_from_antenna_one() {
        let g = ArrayGeometry::new(8, 65.0, 0.0).unwrap();
        let p = g.antenna_positions();
        assert_eq!(p.len(), 8);
        assert!(close(p[0].x, 65.0, 1e-12) && close(p[0].y, 0.0, 1e-12));
        assert!(close(p[2].x, 0.0, 1e-12) && close(p[2].y, -65.0, 1e-12));
        let cx: f64 = p.iter().map(|q| q.x).sum();
        let cy: f64 = p.iter().map(|q| q.y).sum();
        assert!(cx.abs() < 1e-9 && cy.abs() < 1e-9);
    }

    #[test]
    fn four_antenna_unit_circle() {
        let g = ArrayGeometry::new(4, 1.0, 0.0).unwrap();
        let expected = [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)];
        for (p, (x, y)) in g.antenna_positions().iter().zip(expected) {
            assert!(close(p.x, x, 1e-12) && close(p.y, y, 1e-12));
        }
    }

    #[test]
    fn chord_matches_point_distance() {
        let g = ArrayGeometry::default();
        let p = g.antenna_positions();
        // 2 * 65 * sin(22.5 deg)
        assert!(close(g.chord_mm(), 49.748846207461675, 1e-9));
        for k in 0..8 {
            assert!(close(p[k].distance(&p[(k + 1) % 8]), g.chord_mm(), 1e-9));
        }
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(ArrayGeometry::new(2, 65.0, 0.0).is_err());
        assert!(ArrayGeometry::new(8, 0.0, 0.0).is_err());
        assert!(ArrayGeometry::new(8, -1.0, 0.0).is_err());
        assert!(CarrierModel::new(0.0, SPEED_OF_LIGHT).is_err());
    }

    #[test]
    fn default_carrier_does_not_alias() {
        let c = CarrierModel::default();
        assert!(close(c.wavelength_mm(), 124.8095162364696, 1e-9));
        c.check_no_aliasing(&ArrayGeometry::default()).unwrap();
        let big = ArrayGeometry::new(8, 90.0, 0.0).unwrap();
        assert!(c.check_no_aliasing(&big).is_err());
    }

    #[test]
    fn spatial_phase_along_antenna_one_axis() {
        let (g, c) = (ArrayGeometry::default(), CarrierModel::default());
        let p1 = spatial_phase(&g, &c, 0.0, 1);
        let p5 = spatial_phase(&g, &c, 0.0, 5);
        assert!(close(p1, -p5, 1e-9));
        // 360 * 65 / 124.8095...
        assert!(close(p1.abs(), 187.48570385983493, 1e-9));
        // antennas 3 and 7 lie on the wavefront through the center
        assert!(spatial_phase(&g, &c, 0.0, 3).abs() < 1e-9);
        assert!(spatial_phase(&g, &c, 0.0, 7).abs() < 1e-9);
        // antennas 2 and 8 mirror each other about the propagation axis
        assert!(close(
            spatial_phase(&g, &c, 0.0, 2),
            spatial_phase(&g, &c, 0.0, 8),
            1e-9
        ));
    }

    #[test]
    fn symmetric_pairs_around_antenna_three() {
        let (g, c) = (ArrayGeometry::default(), CarrierModel::default());
        // propagation perpendicular to the axis of A3 (at 90 deg clockwise)
        for aoa in [0.0, 180.0] {
            let p = expected_profile(&g, &c, aoa);
            assert!(close(p.values[1], p.values[2], 1e-9));
        }
    }

    #[test]
    fn profile_amplitude_bound() {
        let (g, c) = (ArrayGeometry::default(), CarrierModel::default());
        let bound = 143.4953453449328;
        let mut max_seen: f64 = 0.0;
        for i in 0..3600 {
            let p = expected_profile(&g, &c, i as f64 * 0.1);
            for v in &p.values {
                assert!(v.abs() <= bound + 1e-9);
                max_seen = max_seen.max(v.abs());
            }
        }
        assert!(close(max_seen, bound, 1e-3));
    }

    proptest! {
        #[test]
        fn ring_sum_is_zero(aoa in -720.0f64..720.0) {
            let p = expected_profile(&ArrayGeometry::default(), &CarrierModel::default(), aoa);
            // entries are inside (-180, 180) with defaults, so no unwrap is needed
            let s: f64 = p.values.iter().sum();
            prop_assert!(s.abs() < 1e-9);
            prop_assert!(p.values.iter().all(|v| v.abs() < 180.0));
        }

        #[test]
        fn periodic_in_aoa(aoa in 0.0f64..360.0) {
            let (g, c) = (ArrayGeometry::default(), CarrierModel::default());
            let a = expected_profile(&g, &c, aoa);
            let b = expected_profile(&g, &c, aoa + 360.0);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(circular_diff(*x, *y).abs() < 1e-9);
            }
        }

        #[test]
        fn rotation_shifts_profile(aoa in 0.0f64..360.0) {
            let (g, c) = (ArrayGeometry::default(), CarrierModel::default());
            let a = expected_profile(&g, &c, aoa);
            let b = expected_profile(&g, &c, aoa + 45.0);
            for n in 0..8 {
                prop_assert!(circular_diff(b.values[(n + 1) % 8], a.values[n]).abs() < 1e-9);
            }
        }
    }
}
