use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrajectoryPoint;
use crate::error::{Error, Result};
use crate::geodesy::GeoPoint;
use crate::kinematics::KinematicState;

pub const N_FEATURES: usize = 6;
pub const FEATURES: [&str; N_FEATURES] = ["lat", "lon", "sog", "cog", "accel", "cog_rate"];

/// Per-feature min-max scaling fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
}

impl NormStats {
    /// Fits on the given feature rows. A constant feature gets a unit range
    /// so that `max > min` always holds.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64; N_FEATURES]>) -> Result<Self> {
        let mut min = [f64::INFINITY; N_FEATURES];
        let mut max = [f64::NEG_INFINITY; N_FEATURES];
        let mut any = false;
        for row in rows {
            any = true;
            for k in 0..N_FEATURES {
                min[k] = min[k].min(row[k]);
                max[k] = max[k].max(row[k]);
            }
        }
        if !any {
            return Err(Error::InvalidArgument("cannot fit normalization on no data".into()));
        }
        for k in 0..N_FEATURES {
            if !(max[k] > min[k]) {
                max[k] = min[k] + 1.0;
            }
        }
        Ok(NormStats { min, max })
    }

    pub fn range(&self, k: usize) -> f64 {
        self.max[k] - self.min[k]
    }

    /// `[lat_range, lon_range]`, degrees.
    pub fn position_ranges(&self) -> [f64; 2] {
        [self.range(0), self.range(1)]
    }

    pub fn normalize(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        std::array::from_fn(|k| (row[k] - self.min[k]) / self.range(k))
    }

    pub fn normalize_pos(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.min[0]) / self.range(0),
            (p[1] - self.min[1]) / self.range(1),
        ]
    }

    pub fn denormalize_pos(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0] * self.range(0) + self.min[0], p[1] * self.range(1) + self.min[1]]
    }
}

/// One supervised sample cut from a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPair {
    /// Index of the source segment.
    pub segment: usize,
    /// Index of the first input point within the segment.
    pub offset: usize,
    /// `w_in` normalized feature rows in [`FEATURES`] order.
    pub x: Vec<[f64; N_FEATURES]>,
    /// `w_out` normalized `[lat, lon]` targets.
    pub y: Vec<[f64; 2]>,
    /// Last observed state, raw units.
    pub state: KinematicState<f64>,
    /// Last observed position, raw degrees.
    pub anchor: GeoPoint<f64>,
}

impl WindowPair {
    pub fn w_in(&self) -> usize {
        self.x.len()
    }

    pub fn w_out(&self) -> usize {
        self.y.len()
    }

    /// Targets in degrees.
    pub fn truth_deg(&self, stats: &NormStats) -> Vec<[f64; 2]> {
        self.y.iter().map(|p| stats.denormalize_pos(*p)).collect()
    }

    /// The same sample with only the last `w_in` inputs and first `w_out`
    /// targets. The observed state is unchanged.
    pub fn truncated(&self, w_in: usize, w_out: usize) -> Result<WindowPair> {
        if w_in == 0 || w_out == 0 || w_in > self.w_in() || w_out > self.w_out() {
            return Err(Error::InvalidArgument(format!(
                "cannot cut a {}x{} window from {}x{}",
                w_in,
                w_out,
                self.w_in(),
                self.w_out()
            )));
        }
        let skip = self.w_in() - w_in;
        Ok(WindowPair {
            segment: self.segment,
            offset: self.offset + skip,
            x: self.x[skip..].to_vec(),
            y: self.y[..w_out].to_vec(),
            state: self.state,
            anchor: self.anchor,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub w_in: usize,
    pub w_out: usize,
    /// Sample spacing of the segments, seconds.
    pub interval_s: f64,
    pub test_frac: f64,
    pub val_frac: f64,
    pub seed: u64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            w_in: 15,
            w_out: 15,
            interval_s: 120.0,
            test_frac: 0.1,
            val_frac: 0.2,
            seed: 0,
        }
    }
}

/// Everything needed to rebuild a [`Dataset`] besides the windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub config: WindowConfig,
    /// Split of every input segment, by segment index.
    pub segment_split: Vec<Split>,
    pub segment_len: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub stats: NormStats,
    pub train: Vec<WindowPair>,
    pub val: Vec<WindowPair>,
    pub test: Vec<WindowPair>,
}

impl Dataset {
    pub fn split(&self, s: Split) -> &[WindowPair] {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn windows_per_segment(len: usize, w_in: usize, w_out: usize) -> usize {
    (len + 1).saturating_sub(w_in + w_out)
}

/// `(test, val, train)` segment counts: `floor(test_frac·n)` for test,
/// `round(val_frac·(n − test))` for validation, the rest for training.
pub fn split_counts(n: usize, test_frac: f64, val_frac: f64) -> (usize, usize, usize) {
    let test = ((test_frac * n as f64).floor() as usize).min(n);
    let val = ((val_frac * (n - test) as f64).round() as usize).min(n - test);
    (test, val, n - test - val)
}

/// Assigns whole segments to splits after a seeded shuffle, fits
/// normalization on the training windows and cuts every segment into
/// sliding windows.
pub fn make_windows(segments: &[Vec<TrajectoryPoint>], cfg: &WindowConfig) -> Result<Dataset> {
    if cfg.w_in == 0 || cfg.w_out == 0 {
        return Err(Error::InvalidArgument("window lengths must be >= 1".into()));
    }
    let n = segments.len();
    let (n_test, n_val, _) = split_counts(n, cfg.test_frac, cfg.val_frac);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut segment_split = vec![Split::Train; n];
    for (rank, &idx) in order.iter().enumerate() {
        if rank < n_test {
            segment_split[idx] = Split::Test;
        } else if rank < n_test + n_val {
            segment_split[idx] = Split::Val;
        }
    }

    let span = cfg.w_in + cfg.w_out;
    let train_rows: Vec<[f64; N_FEATURES]> = segments
        .iter()
        .zip(&segment_split)
        .filter(|(s, sp)| **sp == Split::Train && s.len() >= span)
        .flat_map(|(s, _)| s.iter().map(TrajectoryPoint::features))
        .collect();
    let stats = NormStats::fit(&train_rows)?;

    let mut ds = Dataset {
        meta: DatasetMeta {
            config: *cfg,
            segment_split: segment_split.clone(),
            segment_len: segments.iter().map(Vec::len).collect(),
        },
        stats,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (idx, seg) in segments.iter().enumerate() {
        let normalized: Vec<[f64; N_FEATURES]> = seg.iter().map(|p| ds.stats.normalize(&p.features())).collect();
        let mut windows = Vec::with_capacity(windows_per_segment(seg.len(), cfg.w_in, cfg.w_out));
        for offset in 0..windows_per_segment(seg.len(), cfg.w_in, cfg.w_out) {
            let last = offset + cfg.w_in - 1;
            let state = seg[last].state()?;
            windows.push(WindowPair {
                segment: idx,
                offset,
                x: normalized[offset..=last].to_vec(),
                y: normalized[last + 1..last + 1 + cfg.w_out]
                    .iter()
                    .map(|r| [r[0], r[1]])
                    .collect(),
                state,
                anchor: state.pos,
            });
        }
        match segment_split[idx] {
            Split::Train => ds.train.extend(windows),
            Split::Val => ds.val.extend(windows),
            Split::Test => ds.test.extend(windows),
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn segment(len: usize, lat0: f64) -> Vec<TrajectoryPoint> {
        (0..len)
            .map(|k| TrajectoryPoint {
                t: 120.0 * k as f64,
                lat: lat0 + 1e-3 * k as f64,
                lon: 5.0 + 2e-3 * k as f64,
                sog: 4.0 + 0.01 * k as f64,
                cog: (k * 7 % 360) as f64,
                accel: 0.001 * (k % 3) as f64,
                cog_rate: 0.01 * (k % 5) as f64,
            })
            .collect()
    }

    #[test]
    fn window_counts() {
        assert_eq!(windows_per_segment(90, 15, 15), 61);
        assert_eq!(windows_per_segment(29, 15, 15), 0);
        assert_eq!(windows_per_segment(30, 15, 15), 1);
    }

    #[test]
    fn split_arithmetic() {
        assert_eq!(split_counts(10, 0.1, 0.2), (1, 2, 7));
        assert_eq!(split_counts(200, 0.1, 0.2), (20, 36, 144));
        assert_eq!(split_counts(0, 0.1, 0.2), (0, 0, 0));
    }

    #[test]
    fn ten_segments_split_one_two_seven() {
        let segs: Vec<_> = (0..10).map(|i| segment(90, i as f64)).collect();
        let ds = make_windows(&segs, &WindowConfig::default()).unwrap();
        assert_eq!(ds.test.len(), 61);
        assert_eq!(ds.val.len(), 2 * 61);
        assert_eq!(ds.train.len(), 7 * 61);
        let again = make_windows(&segs, &WindowConfig::default()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn train_features_normalize_into_unit_interval() {
        let segs: Vec<_> = (0..10).map(|i| segment(60, 3.0 * i as f64)).collect();
        let ds = make_windows(&segs, &WindowConfig::default()).unwrap();
        for w in &ds.train {
            assert!(w
                .x
                .iter()
                .flatten()
                .chain(w.y.iter().flatten())
                .all(|v| (0.0..=1.0).contains(v)));
        }
        let mut far = segs[0][0].features();
        far[0] = 1000.0;
        assert!(ds.stats.normalize(&far)[0] > 1.0);
    }

    #[test]
    fn windows_do_not_straddle_segments() {
        let segs = vec![segment(40, 0.0), segment(31, 1.0), segment(20, 2.0)];
        let cfg = WindowConfig {
            test_frac: 0.0,
            val_frac: 0.0,
            ..Default::default()
        };
        let ds = make_windows(&segs, &cfg).unwrap();
        assert_eq!(ds.train.len(), 11 + 2);
        for w in &ds.train {
            assert!(w.offset + 30 <= segs[w.segment].len());
            assert_eq!(w.anchor.lat, segs[w.segment][w.offset + 14].lat);
        }
    }

    #[test]
    fn truncation_keeps_the_observed_state() {
        let segs = vec![segment(40, 0.0)];
        let cfg = WindowConfig {
            test_frac: 0.0,
            val_frac: 0.0,
            ..Default::default()
        };
        let ds = make_windows(&segs, &cfg).unwrap();
        let w = ds.train[0].truncated(5, 3).unwrap();
        assert_eq!(w.x, ds.train[0].x[10..].to_vec());
        assert_eq!(w.y, ds.train[0].y[..3].to_vec());
        assert_eq!(w.state, ds.train[0].state);
        assert!(ds.train[0].truncated(16, 3).is_err());
    }

    proptest! {
        #[test]
        fn position_round_trip(lat in -80.0..80.0f64, lon in -179.0..179.0f64, a in 0.5..3.0f64, b in 0.5..3.0f64) {
            let stats = NormStats { min: [lat - a, lon - b, 0.0, 0.0, 0.0, 0.0], max: [lat + a, lon + 2.0 * b, 1.0, 1.0, 1.0, 1.0] };
            let back = stats.denormalize_pos(stats.normalize_pos([lat, lon]));
            prop_assert!((back[0] - lat).abs() < 1e-12 && (back[1] - lon).abs() < 1e-12);
        }
    }
}
