use super::TrajectoryPoint;
use crate::error::{Error, Result};
use crate::geodesy::{canonical_lon, wrap_course};
use crate::interp::{unwrap_degrees, CubicHermite};

/// Splits a time-sorted track wherever consecutive points are more than
/// `gap_min` minutes apart. Exactly `gap_min` does not split.
pub fn segment_trips(points: &[TrajectoryPoint], gap_min: f64) -> Vec<Vec<TrajectoryPoint>> {
    let gap_s = gap_min * 60.0;
    let mut out: Vec<Vec<TrajectoryPoint>> = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for p in points {
        if out.is_empty() || p.t - prev_t > gap_s {
            out.push(Vec::new());
        }
        out.last_mut().unwrap().push(*p);
        prev_t = p.t;
    }
    out
}

/// Resamples onto a uniform grid starting at the first timestamp and ending
/// at or before the last. Course and longitude are unwrapped before
/// interpolation so the 0/360 and ±180 seams are crossed the short way.
/// Acceleration and course rate are left at zero for
/// [`derive_kinematics`](super::derive_kinematics).
pub fn hermite_resample(segment: &[TrajectoryPoint], interval_s: f64) -> Result<Vec<TrajectoryPoint>> {
    if segment.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "resampling needs at least 4 points, got {}",
            segment.len()
        )));
    }
    if !(interval_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "interval must be positive, got {interval_s}"
        )));
    }
    let col = |f: fn(&TrajectoryPoint) -> f64| segment.iter().map(f).collect::<Vec<_>>();
    let t = col(|p| p.t);
    let lat = CubicHermite::new(&t, &col(|p| p.lat))?;
    let lon = CubicHermite::new(&t, &unwrap_degrees(&col(|p| p.lon)))?;
    let sog = CubicHermite::new(&t, &col(|p| p.sog))?;
    let cog = CubicHermite::new(&t, &unwrap_degrees(&col(|p| p.cog)))?;

    let t0 = t[0];
    let span = t[t.len() - 1] - t0;
    let n = (span / interval_s + 1e-9).floor() as usize + 1;
    (0..n)
        .map(|k| {
            let tk = t0 + k as f64 * interval_s;
            Ok(TrajectoryPoint {
                t: tk,
                lat: lat.eval(tk),
                lon: canonical_lon(lon.eval(tk)),
                sog: sog.eval(tk).max(0.0),
                cog: wrap_course(cog.eval(tk))?,
                accel: 0.0,
                cog_rate: 0.0,
            })
        })
        .collect()
}

/// Cuts a segment into consecutive non-overlapping pieces of `piece_len`
/// points. A shorter remainder is kept if it has at least `min_len` points.
/// Returns the pieces and the number of remainders dropped.
pub fn trim_segments(
    segment: Vec<TrajectoryPoint>,
    piece_len: usize,
    min_len: usize,
) -> (Vec<Vec<TrajectoryPoint>>, usize) {
    let piece_len = piece_len.max(1);
    let mut pieces = Vec::new();
    let mut dropped = 0;
    for chunk in segment.chunks(piece_len) {
        if chunk.len() == piece_len || chunk.len() >= min_len {
            pieces.push(chunk.to_vec());
        } else {
            dropped += 1;
        }
    }
    (pieces, dropped)
}
