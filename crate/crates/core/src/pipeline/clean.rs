use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{AisRecord, TrajectoryPoint};
use crate::geodesy::{canonical_lon, wrap_course};
use crate::scalar::KNOTS_TO_MPS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub min_sog_kn: f64,
    pub min_points: usize,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_sog_kn: 0.5,
            min_points: 300,
        }
    }
}

/// Records removed by each filter, applied in field order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub invalid_mmsi: usize,
    pub duplicate_timestamp: usize,
    pub low_sog: usize,
    pub short_vessels: usize,
    pub short_vessel_points: usize,
    pub vessels_kept: usize,
    pub points_kept: usize,
}

/// Time-sorted points of one vessel, speed in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselTrack {
    pub mmsi: u64,
    pub points: Vec<TrajectoryPoint>,
}

/// Vessel MMSIs are nine digits with a leading maritime identification digit
/// of 2 to 7.
pub fn is_valid_mmsi(mmsi: u64) -> bool {
    (200_000_000..=799_999_999).contains(&mmsi)
}

/// Noise filtering and grouping by vessel. Duplicate `(mmsi, timestamp)`
/// pairs keep the first record in input order; vessels are returned in
/// ascending MMSI order.
pub fn clean(records: &[AisRecord], cfg: &CleanConfig) -> (Vec<VesselTrack>, CleanReport) {
    let mut report = CleanReport::default();
    let mut seen = HashSet::new();
    let mut by_vessel: BTreeMap<u64, Vec<TrajectoryPoint>> = BTreeMap::new();
    for r in records {
        if !is_valid_mmsi(r.mmsi) {
            report.invalid_mmsi += 1;
            continue;
        }
        if !seen.insert((r.mmsi, r.timestamp)) {
            report.duplicate_timestamp += 1;
            continue;
        }
        if r.sog < cfg.min_sog_kn {
            report.low_sog += 1;
            continue;
        }
        by_vessel.entry(r.mmsi).or_default().push(TrajectoryPoint {
            t: r.timestamp as f64,
            lat: r.lat,
            lon: canonical_lon(r.lon),
            sog: r.sog * KNOTS_TO_MPS,
            // finite by construction in ingestion
            cog: wrap_course(r.cog).unwrap_or(0.0),
            accel: 0.0,
            cog_rate: 0.0,
        });
    }
    let mut tracks = Vec::new();
    for (mmsi, mut points) in by_vessel {
        if points.len() < cfg.min_points {
            report.short_vessels += 1;
            report.short_vessel_points += points.len();
            continue;
        }
        points.sort_by(|a, b| a.t.total_cmp(&b.t));
        report.vessels_kept += 1;
        report.points_kept += points.len();
        tracks.push(VesselTrack { mmsi, points });
    }
    (tracks, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(mmsi: u64, ts: i64, sog: f64) -> AisRecord {
        AisRecord {
            mmsi,
            timestamp: ts,
            lat: 10.0,
            lon: 20.0,
            sog,
            cog: 370.0,
            ship_type: 70,
        }
    }

    fn vessel(mmsi: u64, n: usize) -> Vec<AisRecord> {
        (0..n).map(|k| rec(mmsi, 1000 + 60 * k as i64, 8.0)).collect()
    }

    #[test]
    fn minimum_vessel_length() {
        let cfg = CleanConfig::default();
        let (tracks, rep) = clean(&vessel(366000001, 299), &cfg);
        assert!(tracks.is_empty());
        assert_eq!(rep.short_vessels, 1);
        let (tracks, _) = clean(&vessel(366000001, 300), &cfg);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].points[0].cog, 10.0);
        assert!((tracks[0].points[0].sog - 8.0 * 0.514444).abs() < 1e-12);
    }

    #[test]
    fn duplicates_keep_first_in_file_order() {
        let mut recs = vec![rec(366000001, 1000, 3.0), rec(366000001, 1000, 9.0)];
        recs.extend(vessel(366000001, 2).into_iter().map(|mut r| {
            r.timestamp += 10_000;
            r
        }));
        let cfg = CleanConfig {
            min_points: 1,
            ..Default::default()
        };
        let (tracks, rep) = clean(&recs, &cfg);
        assert_eq!(rep.duplicate_timestamp, 1);
        assert_eq!(tracks[0].points.len(), 3);
        assert!((tracks[0].points[0].sog - 3.0 * KNOTS_TO_MPS).abs() < 1e-12);
    }

    #[test]
    fn slow_and_invalid_records_are_dropped() {
        let recs = vec![
            rec(366000001, 1, 0.4),
            rec(366000001, 2, 0.5),
            rec(123, 3, 5.0),
            rec(999_999_999, 4, 5.0),
        ];
        let cfg = CleanConfig {
            min_points: 1,
            ..Default::default()
        };
        let (tracks, rep) = clean(&recs, &cfg);
        assert_eq!(rep.low_sog, 1);
        assert_eq!(rep.invalid_mmsi, 2);
        assert_eq!(tracks[0].points.len(), 1);
    }

    #[test]
    fn output_sorted_by_time() {
        let mut recs = vessel(366000001, 5);
        recs.reverse();
        let cfg = CleanConfig {
            min_points: 1,
            ..Default::default()
        };
        let (tracks, _) = clean(&recs, &cfg);
        assert!(tracks[0].points.windows(2).all(|w| w[0].t < w[1].t));
    }
}
