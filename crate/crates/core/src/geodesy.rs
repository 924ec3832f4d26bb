//! Spherical-Earth primitives: course wrapping, haversine distance, bearings
//! and the angular distance covered by a constantly accelerating vessel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A latitude/longitude pair in degrees.
///
/// Latitude lies in `[-90, 90]`; longitude is canonicalized to `[-180, 180)`
/// by [`GeoPoint::new`]. The fields are public so that model outputs, which
/// are not guaranteed to be valid coordinates, can still be carried around.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeoPoint<T> {
    pub lat: T,
    pub lon: T,
}

impl<T: Scalar> GeoPoint<T> {
    /// Validating constructor. Out-of-range latitudes are rejected, never
    /// clamped; longitude wraps into `[-180, 180)`.
    pub fn new(lat: T, lon: T) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidValue(format!("non-finite coordinate ({lat}, {lon})")));
        }
        if lat < T::lit(-90.0) || lat > T::lit(90.0) {
            return Err(Error::InvalidValue(format!("latitude {lat} outside [-90, 90]")));
        }
        Ok(GeoPoint {
            lat,
            lon: canonical_lon(lon),
        })
    }

    pub fn to_array(self) -> [T; 2] {
        [self.lat, self.lon]
    }
}

/// Sphere used for all distance and displacement computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel<T> {
    pub radius_m: T,
}

impl<T: Scalar> Default for EarthModel<T> {
    fn default() -> Self {
        EarthModel {
            radius_m: T::lit(EARTH_RADIUS_M),
        }
    }
}

impl<T: Scalar> EarthModel<T> {
    pub fn with_radius(radius_m: T) -> Result<Self> {
        if !(radius_m > T::zero()) || !radius_m.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "earth radius must be positive, got {radius_m}"
            )));
        }
        Ok(EarthModel { radius_m })
    }
}

/// Wraps a longitude into `[-180, 180)`.
pub fn canonical_lon<T: Scalar>(lon: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let wrapped = (lon + half).rem_euclid(&full);
    // rem_euclid can round up to exactly `full` for tiny negative inputs
    if wrapped >= full {
        -half
    } else {
        wrapped - half
    }
}

/// Wraps a course over ground into `[0, 360)`.
pub fn wrap_course<T: Scalar>(course: T) -> Result<T> {
    if !course.is_finite() {
        return Err(Error::InvalidValue(format!("non-finite course {course}")));
    }
    let full = T::lit(360.0);
    let wrapped = course.rem_euclid(&full);
    Ok(if wrapped >= full { T::zero() } else { wrapped })
}

/// Shortest signed arc from `from` to `to`, in degrees, within `[-180, 180)`.
pub fn signed_course_diff<T: Scalar>(to: T, from: T) -> T {
    canonical_lon(to - from)
}

/// Great-circle distance in metres by the haversine formula.
pub fn haversine_m<T: Scalar>(a: GeoPoint<T>, b: GeoPoint<T>, earth: EarthModel<T>) -> T {
    let two = T::lit(2.0);
    let (x1, x2) = (a.lat.radians(), b.lat.radians());
    let dx = x2 - x1;
    let dy = (b.lon - a.lon).radians();
    let h = (dx / two).sin().powi(2) + x1.cos() * x2.cos() * (dy / two).sin().powi(2);
    // h can exceed 1 by an ulp for antipodal points
    two * earth.radius_m * h.min(T::one()).sqrt().asin()
}

/// Initial great-circle bearing from `a` towards `b`, in degrees `[0, 360)`.
pub fn initial_bearing_deg<T: Scalar>(a: GeoPoint<T>, b: GeoPoint<T>) -> T {
    let (p1, p2) = (a.lat.radians(), b.lat.radians());
    let dl = (b.lon - a.lon).radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    let brg = y.atan2(x).degrees();
    wrap_course(brg).unwrap_or_else(|_| T::zero())
}

/// Angular distance in radians covered in `dt` seconds starting at speed `v`
/// with constant acceleration `accel`: `((v + a·dt/2)·dt) / R`.
pub fn angular_distance<T: Scalar>(v: T, accel: T, dt: T, earth: EarthModel<T>) -> T {
    (v + T::half() * accel * dt) * dt / earth.radius_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(lat: f64, lon: f64) -> GeoPoint<f64> {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn wrap_course_examples() {
        assert_eq!(wrap_course(370.0).unwrap(), 10.0);
        assert_eq!(wrap_course(-45.0).unwrap(), 315.0);
        assert_eq!(wrap_course(0.0).unwrap(), 0.0);
        assert_eq!(wrap_course(360.0).unwrap(), 0.0);
        assert_eq!(wrap_course(-1e-20).unwrap(), 0.0);
        assert!(wrap_course(f64::NAN).is_err());
        assert!(wrap_course(f64::INFINITY).is_err());
    }

    #[test]
    fn latitude_out_of_range_is_rejected() {
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(-91.0, 0.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert_eq!(p(10.0, 180.0).lon, -180.0);
        assert_eq!(p(10.0, 190.0).lon, -170.0);
        assert_eq!(p(10.0, -180.0).lon, -180.0);
    }

    #[test]
    fn haversine_examples() {
        let e = EarthModel::default();
        // oracle: R * acos(sin φ1 sin φ2 + cos φ1 cos φ2 cos Δλ)
        let oracle = |a: GeoPoint<f64>, b: GeoPoint<f64>| {
            let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
            let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * (b.lon - a.lon).to_radians().cos();
            EARTH_RADIUS_M * c.clamp(-1.0, 1.0).acos()
        };
        assert_eq!(haversine_m(p(0.0, 0.0), p(0.0, 0.0), e), 0.0);
        let d1 = haversine_m(p(0.0, 0.0), p(0.0, 1.0), e);
        let d2 = haversine_m(p(0.0, 0.0), p(1.0, 0.0), e);
        assert_relative_eq!(d1, oracle(p(0.0, 0.0), p(0.0, 1.0)), max_relative = 1e-12);
        assert!((d1 - 111_194.93).abs() < 0.01, "{d1}");
        assert!((d2 - 111_194.93).abs() < 0.01, "{d2}");
    }

    #[test]
    fn haversine_in_f32() {
        let e = EarthModel::<f32>::default();
        let a = GeoPoint::new(0.0f32, 0.0).unwrap();
        let b = GeoPoint::new(0.0f32, 1.0).unwrap();
        assert!((haversine_m(a, b, e) - 111_194.93).abs() < 1.0);
    }

    #[test]
    fn angular_distance_examples() {
        let e = EarthModel::default();
        assert_relative_eq!(angular_distance(10.0, 0.0, 120.0, e), 1.883535e-4, max_relative = 1e-6);
        assert_eq!(angular_distance(0.0, 0.0, 120.0, e), 0.0);
        assert_relative_eq!(angular_distance(10.0, 0.01, 120.0, e), 1.996546e-4, max_relative = 1e-6);
    }

    #[test]
    fn bearing_cardinal_directions() {
        let o = p(0.0, 0.0);
        assert_relative_eq!(initial_bearing_deg(o, p(1.0, 0.0)), 0.0);
        assert_relative_eq!(initial_bearing_deg(o, p(0.0, 1.0)), 90.0, epsilon = 1e-12);
        assert_relative_eq!(initial_bearing_deg(o, p(-1.0, 0.0)), 180.0, epsilon = 1e-12);
        assert_relative_eq!(initial_bearing_deg(o, p(0.0, -1.0)), 270.0, epsilon = 1e-12);
    }

    #[test]
    fn signed_diff_takes_short_arc() {
        assert_eq!(signed_course_diff(1.0, 359.0), 2.0);
        assert_eq!(signed_course_diff(359.0, 1.0), -2.0);
    }

    proptest! {
        #[test]
        fn haversine_symmetric_and_zero_on_self(
            la in -90.0..=90.0f64, lo in -180.0..180.0f64,
            lb in -90.0..=90.0f64, lob in -180.0..180.0f64,
        ) {
            let e = EarthModel::default();
            let (a, b) = (p(la, lo), p(lb, lob));
            prop_assert_eq!(haversine_m(a, b, e), haversine_m(b, a, e));
            prop_assert_eq!(haversine_m(a, a, e), 0.0);
            prop_assert!(haversine_m(a, b, e) >= 0.0);
        }

        #[test]
        fn equatorial_distance_is_arc_length(l1 in -179.0..179.0f64, dl in -1.0..1.0f64) {
            let e = EarthModel::default();
            let d = haversine_m(p(0.0, l1), p(0.0, l1 + dl), e);
            let arc = EARTH_RADIUS_M * dl.abs() * DEG;
            prop_assert!((d - arc).abs() <= 1e-9 * arc.max(1e-300));
        }

        #[test]
        fn wrap_course_idempotent_and_in_range(c in -1e6..1e6f64) {
            let w = wrap_course(c).unwrap();
            prop_assert!((0.0..360.0).contains(&w));
            prop_assert_eq!(wrap_course(w).unwrap(), w);
        }

        #[test]
        fn angular_distance_linear_in_dt(v in 0.0..30.0f64, dt in 1.0..600.0f64) {
            let e = EarthModel::default();
            let one = angular_distance(v, 0.0, dt, e);
            let two = angular_distance(v, 0.0, 2.0 * dt, e);
            prop_assert!((two - 2.0 * one).abs() <= 1e-15 * two.abs().max(1e-300));
        }
    }

    const DEG: f64 = crate::scalar::DEG_TO_RAD;
}
