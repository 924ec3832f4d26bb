//! Piecewise cubic Hermite interpolation on non-uniform knots.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cubic Hermite interpolant with three-point finite-difference slopes.
///
/// Interior slopes are the derivative of the parabola through the knot and
/// its two neighbours (exact for quadratics on any spacing); the end slopes
/// are one-sided differences. Linear data is therefore reproduced exactly.
#[derive(Debug, Clone)]
pub struct CubicHermite<T> {
    t: Vec<T>,
    y: Vec<T>,
    slope: Vec<T>,
}

impl<T: Scalar> CubicHermite<T> {
    pub fn new(t: &[T], y: &[T]) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::InvalidArgument("knot and value lengths differ".into()));
        }
        if t.len() < 2 {
            return Err(Error::InvalidArgument("need at least two knots".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("knots must be strictly increasing".into()));
        }
        let n = t.len();
        let h: Vec<T> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut slope = Vec::with_capacity(n);
        slope.push(delta[0]);
        for k in 1..n - 1 {
            slope.push((h[k - 1] * delta[k] + h[k] * delta[k - 1]) / (h[k - 1] + h[k]));
        }
        slope.push(delta[n - 2]);
        Ok(CubicHermite {
            t: t.to_vec(),
            y: y.to_vec(),
            slope,
        })
    }

    pub fn knots(&self) -> &[T] {
        &self.t
    }

    /// Value at `x`, clamped to the knot span. Returns the stored value
    /// bit-for-bit when `x` hits a knot.
    pub fn eval(&self, x: T) -> T {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.y[0];
        }
        if x >= self.t[n - 1] {
            return self.y[n - 1];
        }
        // first knot strictly greater than x
        let hi = self.t.partition_point(|&k| k <= x);
        let k = hi - 1;
        if self.t[k] == x {
            return self.y[k];
        }
        let h = self.t[k + 1] - self.t[k];
        let s = (x - self.t[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.slope[k] + h01 * self.y[k + 1] + h11 * h * self.slope[k + 1]
    }
}

/// Removes 360° jumps from a course sequence so consecutive values differ by
/// the shortest signed arc.
pub fn unwrap_degrees<T: Scalar>(courses: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(courses.len());
    for &c in courses {
        match out.last() {
            None => out.push(c),
            Some(&prev) => out.push(prev + crate::geodesy::signed_course_diff(c, prev)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reproduces_knots_exactly() {
        let t = [0.0, 50.0, 130.0, 170.0, 400.0];
        let y = [1.1, -2.3, 0.7, 5.0, 3.3];
        let h = CubicHermite::new(&t, &y).unwrap();
        for (a, b) in t.iter().zip(&y) {
            assert_eq!(h.eval(*a), *b);
        }
    }

    #[test]
    fn reproduces_quadratics_at_interior_slopes() {
        let t = [0.0, 1.0, 3.0, 4.5];
        let y: Vec<f64> = t.iter().map(|x| x * x).collect();
        let h = CubicHermite::new(&t, &y).unwrap();
        assert_relative_eq!(h.slope[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(h.slope[2], 6.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicHermite::new(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(CubicHermite::new(&[0.0], &[1.0]).is_err());
        assert!(CubicHermite::new(&[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn unwrap_crosses_north() {
        assert_eq!(unwrap_degrees(&[358.0, 2.0, 5.0]), vec![358.0, 362.0, 365.0]);
        assert_eq!(unwrap_degrees(&[2.0, 358.0]), vec![2.0, -2.0]);
        assert_eq!(unwrap_degrees(&[10.0, 200.0, 30.0]), vec![10.0, -160.0, -330.0]);
    }

    proptest! {
        #[test]
        fn linear_data_is_reproduced(
            gaps in prop::collection::vec(1.0..300.0f64, 3..12),
            a in -50.0..50.0f64, b in -0.01..0.01f64, frac in 0.0..1.0f64,
        ) {
            let mut t = vec![0.0];
            for g in &gaps { t.push(t.last().unwrap() + g); }
            let y: Vec<f64> = t.iter().map(|x| a + b * x).collect();
            let h = CubicHermite::new(&t, &y).unwrap();
            let x = frac * t.last().unwrap();
            prop_assert!((h.eval(x) - (a + b * x)).abs() < 1e-9);
        }
    }
}
