//! Receiver self-localization from bearings to beacons at known positions.
//!
//! World bearings are counter-clockwise from the world +x axis. Receiver
//! frame bearings are world bearings minus the receiver heading.

use std::collections::BTreeMap;

use crate::angle::{circular_diff, wrap360};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Default grid pitch of the field layout, meters.
pub const FIELD_GRID_PITCH_M: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BeaconMap {
    beacons: BTreeMap<String, Point>,
    min: Point,
    max: Point,
}

impl BeaconMap {
    /// Builds a map whose search area is the bounding box of the beacons.
    pub fn new(beacons: BTreeMap<String, Point>) -> Result<Self> {
        let (mut min, mut max) = (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in beacons.values() {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        // keep a usable area when all beacons share a coordinate
        if max.x - min.x < 1.0 {
            min.x -= 1.0;
            max.x += 1.0;
        }
        if max.y - min.y < 1.0 {
            min.y -= 1.0;
            max.y += 1.0;
        }
        Self::with_bounds(beacons, min, max)
    }

    pub fn with_bounds(beacons: BTreeMap<String, Point>, min: Point, max: Point) -> Result<Self> {
        if beacons.len() < 2 {
            return Err(Error::Config(format!(
                "a beacon map needs at least 2 beacons, got {}",
                beacons.len()
            )));
        }
        let list: Vec<_> = beacons.iter().collect();
        for (i, (a, pa)) in list.iter().enumerate() {
            for (b, pb) in &list[i + 1..] {
                if pa.distance(pb) < 1e-9 {
                    return Err(Error::Config(format!(
                        "beacons {a} and {b} share a position"
                    )));
                }
            }
        }
        if !(max.x > min.x && max.y > min.y) {
            return Err(Error::Config("area bounds are empty".into()));
        }
        Ok(Self { beacons, min, max })
    }

    /// Corner beacons of the 12 m field square, in meters.
    pub fn field_square() -> Self {
        let g = FIELD_GRID_PITCH_M;
        let beacons = [
            ("b2", 0.0, 0.0),
            ("b4", 0.0, 4.0),
            ("b1", 4.0, 4.0),
            ("b5", 4.0, 0.0),
        ]
        .into_iter()
        .map(|(id, x, y)| (id.to_string(), Point::new(x * g, y * g)))
        .collect();
        Self::new(beacons).expect("static layout is valid")
    }

    pub fn beacons(&self) -> &BTreeMap<String, Point> {
        &self.beacons
    }

    pub fn get(&self, id: &str) -> Option<Point> {
        self.beacons.get(id).copied()
    }

    pub fn bounds(&self) -> (Point, Point) {
        (self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate {
    pub position: Point,
    /// RMS bearing misfit at `position`, degrees.
    pub residual_deg: f64,
    pub beacons: Vec<String>,
}

/// Counter-clockwise world bearing from `from` to `to`.
pub fn world_bearing(from: Point, to: Point) -> f64 {
    (to.y - from.y).atan2(to.x - from.x).to_degrees()
}

/// Receiver-frame bearing of the source of a wave arriving with the given
/// clockwise propagation azimuth. The mapping is its own inverse.
pub fn bearing_from_aoa(aoa_deg: f64) -> f64 {
    wrap360(180.0 - aoa_deg)
}

pub fn aoa_from_bearing(bearing_deg: f64) -> f64 {
    wrap360(180.0 - bearing_deg)
}

/// Exact receiver-frame bearing to every beacon in `map`.
pub fn bearings_oracle(
    map: &BeaconMap,
    position: Point,
    heading_deg: f64,
) -> Result<BTreeMap<String, f64>> {
    map.beacons
        .iter()
        .map(|(id, p)| {
            if p.distance(&position) < 1e-9 {
                return Err(Error::Input(format!("position coincides with beacon {id}")));
            }
            Ok((
                id.clone(),
                wrap360(world_bearing(position, *p) - heading_deg),
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    pub grid_step_m: f64,
    /// Refinement stops once the pattern step falls below this.
    pub tolerance_m: f64,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            grid_step_m: 0.1,
            tolerance_m: 1e-9,
        }
    }
}

struct Objective {
    targets: Vec<(Point, f64)>,
}

impl Objective {
    fn sum_sq(&self, p: Point) -> f64 {
        self.targets
            .iter()
            .map(|(b, world)| circular_diff(*world, world_bearing(p, *b)).powi(2))
            .sum()
    }
}

/// Finds the position whose geometric bearings best match `bearings`
/// (receiver frame, rotated into the world by `heading_deg`).
pub fn locate(
    map: &BeaconMap,
    bearings: &BTreeMap<String, f64>,
    heading_deg: f64,
    opts: &LocateOptions,
) -> Result<PositionEstimate> {
    if bearings.len() < 2 {
        return Err(Error::Input(format!(
            "need bearings to at least 2 beacons, got {}",
            bearings.len()
        )));
    }
    if !(opts.grid_step_m > 0.0) {
        return Err(Error::Config("locator grid step must be positive".into()));
    }
    let targets = bearings
        .iter()
        .map(|(id, b)| {
            map.get(id)
                .map(|p| (p, b + heading_deg))
                .ok_or_else(|| Error::Input(format!("bearing for unknown beacon {id}")))
        })
        .collect::<Result<Vec<_>>>()?;

    // bearings that are all parallel leave the position free along a line
    let first = targets[0].1;
    if targets
        .iter()
        .all(|(_, w)| circular_diff(2.0 * w, 2.0 * first).abs() < 1e-6)
    {
        return Err(Error::Degenerate(
            "all bearing lines are parallel; position is not determined".into(),
        ));
    }

    let obj = Objective { targets };
    let (min, max) = map.bounds();
    let nx = ((max.x - min.x) / opts.grid_step_m).round() as usize;
    let ny = ((max.y - min.y) / opts.grid_step_m).round() as usize;
    let mut best = (min, f64::INFINITY);
    for ix in 0..=nx {
        for iy in 0..=ny {
            let p = Point::new(
                (min.x + ix as f64 * opts.grid_step_m).min(max.x),
                (min.y + iy as f64 * opts.grid_step_m).min(max.y),
            );
            let f = obj.sum_sq(p);
            if f < best.1 {
                best = (p, f);
            }
        }
    }

    let (position, f) = pattern_search(&obj, best.0, best.1, opts.grid_step_m, opts.tolerance_m);
    Ok(PositionEstimate {
        position,
        residual_deg: (f / obj.targets.len() as f64).sqrt(),
        beacons: bearings.keys().cloned().collect(),
    })
}

/// Compass search: try the four axis moves, halve the step when none helps.
fn pattern_search(
    obj: &Objective,
    start: Point,
    f_start: f64,
    step: f64,
    tol: f64,
) -> (Point, f64) {
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let (mut p, mut f, mut h) = (start, f_start, step);
    let mut iterations = 0;
    while h > tol && iterations < 100_000 {
        iterations += 1;
        let mut moved = false;
        for (dx, dy) in DIRS {
            let q = Point::new(p.x + dx * h, p.y + dy * h);
            let fq = obj.sum_sq(q);
            if fq < f {
                p = q;
                f = fq;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (p, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(x: f64, y: f64) -> Point {
        Point::new(x * FIELD_GRID_PITCH_M, y * FIELD_GRID_PITCH_M)
    }

    #[test]
    fn oracle_axis_conventions() {
        let mut b = BTreeMap::new();
        b.insert("e".to_string(), Point::new(1.0, 0.0));
        b.insert("n".to_string(), Point::new(0.0, 1.0));
        let map = BeaconMap::new(b).unwrap();
        let o = bearings_oracle(&map, Point::new(0.0, 0.0), 0.0).unwrap();
        assert!(o["e"].abs() < 1e-12);
        assert!((o["n"] - 90.0).abs() < 1e-12);
        let r = bearings_oracle(&map, Point::new(0.0, 0.0), 90.0).unwrap();
        assert!((r["e"] - 270.0).abs() < 1e-12);
        assert!(r["n"].abs() < 1e-12);
        assert!(bearings_oracle(&map, Point::new(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn aoa_bearing_mapping_is_an_involution() {
        for a in [0.0, 10.0, 90.0, 180.0, 271.5] {
            assert!(circular_diff(aoa_from_bearing(bearing_from_aoa(a)), a).abs() < 1e-12);
        }
        // a source straight ahead (+x) sends waves travelling towards -x
        assert!((bearing_from_aoa(180.0)).abs() < 1e-12);
        // a wave travelling towards -y comes from a source at +y
        assert!((bearing_from_aoa(90.0) - 90.0).abs() < 1e-12);
    }

    #[test]
    fn center_of_square() {
        let map = BeaconMap::field_square();
        let b = bearings_oracle(&map, grid(2.0, 2.0), 0.0).unwrap();
        let est = locate(&map, &b, 0.0, &LocateOptions::default()).unwrap();
        assert!(est.position.distance(&grid(2.0, 2.0)) < 0.01 * FIELD_GRID_PITCH_M);
        assert!(est.residual_deg < 1e-6);
        assert_eq!(est.beacons.len(), 4);
    }

    #[test]
    fn interior_grid_points() {
        let map = BeaconMap::field_square();
        for x in 1..4 {
            for y in 1..4 {
                let truth = grid(x as f64, y as f64);
                let heading = 17.0 * (x + y) as f64;
                let b = bearings_oracle(&map, truth, heading).unwrap();
                let est = locate(&map, &b, heading, &LocateOptions::default()).unwrap();
                assert!(
                    est.position.distance(&truth) < 0.01 * FIELD_GRID_PITCH_M,
                    "({x},{y})"
                );
            }
        }
    }

    #[test]
    fn random_round_trip() {
        let map = BeaconMap::field_square();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let truth = Point::new(rng.random_range(0.5..11.5), rng.random_range(0.5..11.5));
            let h = rng.random_range(0.0..360.0);
            let b = bearings_oracle(&map, truth, h).unwrap();
            let est = locate(&map, &b, h, &LocateOptions::default()).unwrap();
            assert!(est.position.distance(&truth) < 1e-4);
            assert!(est.residual_deg <= 1e-6);
        }
    }

    #[test]
    fn perturbed_bearing_error_is_bounded() {
        let map = BeaconMap::field_square();
        let truth = grid(2.0, 1.0);
        for delta in [-5.0, 5.0] {
            let mut b = bearings_oracle(&map, truth, 0.0).unwrap();
            *b.get_mut("b1").unwrap() += delta;
            let est = locate(&map, &b, 0.0, &LocateOptions::default()).unwrap();
            assert!(est.residual_deg > 0.0);
            // moving only the perturbed line sideways by d tan(5 deg) already
            // reconciles it; the joint fit cannot be worse than that
            let d = truth.distance(&map.get("b1").unwrap());
            let err = est.position.distance(&truth);
            assert!(err > 0.0 && err <= d * 5f64.to_radians().tan(), "{err}");
        }
    }

    #[test]
    fn translation_equivariance() {
        let base = BeaconMap::field_square();
        let shift = Point::new(-40.0, 7.5);
        let moved = BeaconMap::new(
            base.beacons()
                .iter()
                .map(|(k, p)| (k.clone(), *p + shift))
                .collect(),
        )
        .unwrap();
        let truth = Point::new(4.2, 8.1);
        let mut b = bearings_oracle(&base, truth, 0.0).unwrap();
        *b.get_mut("b4").unwrap() += 3.0;
        let e1 = locate(&base, &b, 0.0, &LocateOptions::default()).unwrap();
        let e2 = locate(&moved, &b, 0.0, &LocateOptions::default()).unwrap();
        let err1 = e1.position - truth;
        let err2 = e2.position - (truth + shift);
        assert!((err1.x - err2.x).abs() < 1e-6 && (err1.y - err2.y).abs() < 1e-6);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let map = BeaconMap::field_square();
        let mut one = BTreeMap::new();
        one.insert("b1".to_string(), 10.0);
        assert!(matches!(
            locate(&map, &one, 0.0, &LocateOptions::default()),
            Err(Error::Input(_))
        ));

        // receiver on the line through b2 and b4
        let b = bearings_oracle(&map, grid(0.0, 2.0), 0.0).unwrap();
        let pair: BTreeMap<_, _> = b
            .into_iter()
            .filter(|(k, _)| k == "b2" || k == "b4")
            .collect();
        assert!(matches!(
            locate(&map, &pair, 0.0, &LocateOptions::default()),
            Err(Error::Degenerate(_))
        ));

        let mut unknown = BTreeMap::new();
        unknown.insert("b1".to_string(), 10.0);
        unknown.insert("zz".to_string(), 20.0);
        assert!(locate(&map, &unknown, 0.0, &LocateOptions::default()).is_err());

        let mut dup = BTreeMap::new();
        dup.insert("a".to_string(), Point::new(1.0, 1.0));
        dup.insert("b".to_string(), Point::new(1.0, 1.0));
        assert!(BeaconMap::new(dup).is_err());
    }
}
