//! Helpers for angles in degrees: folding into a half-open range and
//! statistics on the circle.

/// Folds `x` into `[-180, 180)` as `mod(x + 180, 360) - 180`.
pub fn wrap180(x: f64) -> f64 {
    let mut r = (x + 180.0).rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        r -= 360.0;
    }
    r - 180.0
}

/// Folds `x` into `[0, 360)`.
pub fn wrap360(x: f64) -> f64 {
    let r = x.rem_euclid(360.0);
    if r >= 360.0 {
        r - 360.0
    } else {
        r
    }
}

/// Shortest signed difference `a - b` on the circle, in `[-180, 180)`.
pub fn circular_diff(a: f64, b: f64) -> f64 {
    wrap180(a - b)
}

/// Absolute angular distance between `a` and `b`, in `[0, 180]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    circular_diff(a, b).abs()
}

/// Resultant vector of unit vectors at the given angles (degrees).
pub fn resultant<I: IntoIterator<Item = f64>>(angles: I) -> (f64, f64, usize) {
    let mut c = 0.0;
    let mut s = 0.0;
    let mut n = 0;
    for a in angles {
        let r = a.to_radians();
        c += r.cos();
        s += r.sin();
        n += 1;
    }
    (c, s, n)
}

/// Resultant magnitude below which a circular mean is undefined.
pub const CANCELLATION_EPS: f64 = 1e-9;

/// Circular mean in `[-180, 180)`, or `None` for an empty input or when the
/// unit vectors cancel.
pub fn circular_mean<I: IntoIterator<Item = f64>>(angles: I) -> Option<f64> {
    let (c, s, n) = resultant(angles);
    if n == 0 || c.hypot(s) < CANCELLATION_EPS {
        return None;
    }
    Some(wrap180(s.atan2(c).to_degrees()))
}

/// Circular standard deviation `sqrt(-2 ln R)` in degrees, where `R` is the
/// mean resultant length. `None` for an empty input.
pub fn circular_std<I: IntoIterator<Item = f64>>(angles: I) -> Option<f64> {
    let (c, s, n) = resultant(angles);
    if n == 0 {
        return None;
    }
    let r = (c.hypot(s) / n as f64).min(1.0);
    if r <= 0.0 {
        return Some(f64::INFINITY);
    }
    Some((-2.0 * r.ln()).max(0.0).sqrt().to_degrees())
}

/// Root mean square of the wrapped element-wise differences.
pub fn rms_circular_deviation(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let ss: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| circular_diff(*x, *y).powi(2))
        .sum();
    (ss / a.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap180_matches_fold() {
        assert_eq!(wrap180(270.0), -90.0);
        assert_eq!(wrap180(180.0), -180.0);
        assert_eq!(wrap180(-180.0), -180.0);
        assert_eq!(wrap180(0.0), 0.0);
        assert_eq!(wrap180(-1e-300), 0.0);
        assert!(wrap180(-1e-14) < 180.0);
    }

    #[test]
    fn mean_across_seam() {
        let m = circular_mean([170.0, -170.0, 170.0, -170.0]).unwrap();
        assert!((m.abs() - 180.0).abs() < 1e-9);
        assert!(circular_mean([90.0, -90.0]).is_none());
        assert!(circular_mean(std::iter::empty()).is_none());
    }

    #[test]
    fn std_of_identical_is_zero() {
        assert!(circular_std([33.0; 5]).unwrap() < 1e-6);
    }

    proptest! {
        #[test]
        fn wrap180_in_range(x in -1e6f64..1e6) {
            let w = wrap180(x);
            prop_assert!((-180.0..180.0).contains(&w));
            let k = ((x - w) / 360.0).round();
            prop_assert!((x - w - 360.0 * k).abs() < 1e-6);
        }

        #[test]
        fn wrap360_in_range(x in -1e6f64..1e6) {
            let w = wrap360(x);
            prop_assert!((0.0..360.0).contains(&w));
        }
    }
}
