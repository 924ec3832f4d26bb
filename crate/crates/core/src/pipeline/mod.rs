//! AIS preprocessing: ingestion, cleaning, trip segmentation, Hermite
//! resampling, kinematic features, trimming, windowing and splits.
//!
//! Stages run in that order; [`preprocess`] chains everything up to the
//! trimmed segments and [`make_windows`] turns those into a [`Dataset`].

mod clean;
mod features;
mod ingest;
mod io;
mod resample;
mod windows;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kinematics::KinematicState;

pub use clean::{clean, is_valid_mmsi, CleanConfig, CleanReport, VesselTrack};
pub use features::derive_kinematics;
pub use ingest::{parse_ais_csv, read_ais, write_ais_csv, AisRecord, ParseReport, AIS_HEADER};
pub use io::{read_dataset, write_dataset};
pub use resample::{hermite_resample, segment_trips, trim_segments};
pub use windows::{
    make_windows, split_counts, windows_per_segment, Dataset, DatasetMeta, NormStats, Split, WindowConfig, WindowPair,
    FEATURES, N_FEATURES,
};

/// One timestamped kinematic sample on a vessel track.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Seconds since the Unix epoch.
    pub t: f64,
    pub lat: f64,
    pub lon: f64,
    /// m/s.
    pub sog: f64,
    /// Degrees in `[0, 360)`.
    pub cog: f64,
    /// m/s².
    pub accel: f64,
    /// Degrees per second.
    pub cog_rate: f64,
}

impl TrajectoryPoint {
    pub fn features(&self) -> [f64; N_FEATURES] {
        [self.lat, self.lon, self.sog, self.cog, self.accel, self.cog_rate]
    }

    pub fn state(&self) -> Result<KinematicState<f64>> {
        KinematicState::new(self.lat, self.lon, self.sog, self.cog, self.accel, self.cog_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub interval_s: f64,
    pub gap_min: f64,
    pub min_points: usize,
    pub min_sog_kn: f64,
    pub segment_h: f64,
    /// Shortest trimmed remainder worth keeping, in points.
    pub min_segment_points: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            interval_s: 120.0,
            gap_min: 60.0,
            min_points: 300,
            min_sog_kn: 0.5,
            segment_h: 3.0,
            min_segment_points: 30,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub clean: CleanReport,
    pub trips: usize,
    /// Trips with fewer than four points, which cannot be resampled.
    pub trips_too_short_to_resample: usize,
    pub resampled_points: usize,
    pub pieces: usize,
    pub pieces_too_short: usize,
    pub segments: usize,
}

/// Cleaned records to trimmed, resampled segments with derived kinematics.
pub fn preprocess(
    records: &[AisRecord],
    cfg: &PreprocessConfig,
) -> Result<(Vec<Vec<TrajectoryPoint>>, PipelineReport)> {
    let (tracks, clean_report) = clean(
        records,
        &CleanConfig {
            min_sog_kn: cfg.min_sog_kn,
            min_points: cfg.min_points,
        },
    );
    let mut report = PipelineReport {
        clean: clean_report,
        ..Default::default()
    };
    let piece_len = (cfg.segment_h * 3600.0 / cfg.interval_s).round() as usize;
    let mut segments = Vec::new();
    for track in &tracks {
        for trip in segment_trips(&track.points, cfg.gap_min) {
            report.trips += 1;
            if trip.len() < 4 {
                report.trips_too_short_to_resample += 1;
                continue;
            }
            let mut grid = hermite_resample(&trip, cfg.interval_s)?;
            derive_kinematics(&mut grid);
            report.resampled_points += grid.len();
            let (pieces, dropped) = trim_segments(grid, piece_len, cfg.min_segment_points);
            report.pieces += pieces.len() + dropped;
            report.pieces_too_short += dropped;
            segments.extend(pieces);
        }
    }
    report.segments = segments.len();
    Ok((segments, report))
}
