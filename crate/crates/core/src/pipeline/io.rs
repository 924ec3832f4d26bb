//! On-disk dataset layout: `train.csv`, `val.csv`, `test.csv` (one window
//! per row), `norm.json`, `meta.json` and `report.json`.
//!
//! Floats are written in shortest round-trip form, so a read after a write
//! reproduces every value bit for bit.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::windows::{Dataset, DatasetMeta, NormStats, WindowPair, FEATURES, N_FEATURES};
use crate::error::{Error, Result};
use crate::geodesy::GeoPoint;
use crate::kinematics::KinematicState;

const LEAD: [&str; 8] = ["segment", "offset", "lat", "lon", "sog", "cog", "accel", "cog_rate"];

fn header(w_in: usize, w_out: usize) -> Vec<String> {
    let mut h: Vec<String> = LEAD.iter().map(|s| s.to_string()).collect();
    for i in 0..w_in {
        h.extend(FEATURES.iter().map(|f| format!("x{i}_{f}")));
    }
    for j in 0..w_out {
        h.push(format!("y{j}_lat"));
        h.push(format!("y{j}_lon"));
    }
    h
}

fn write_split(path: &Path, windows: &[WindowPair], w_in: usize, w_out: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header(w_in, w_out))?;
    for win in windows {
        let s = &win.state;
        let mut row = vec![win.segment.to_string(), win.offset.to_string()];
        row.extend([s.pos.lat, s.pos.lon, s.sog, s.cog, s.accel, s.cog_rate].map(|v| v.to_string()));
        row.extend(win.x.iter().flatten().map(f64::to_string));
        row.extend(win.y.iter().flatten().map(f64::to_string));
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes the dataset and a free-form preprocessing report into `dir`,
/// creating it if needed.
pub fn write_dataset<R: Serialize + ?Sized>(dir: impl AsRef<Path>, ds: &Dataset, report: &R) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = &ds.meta.config;
    for (name, windows) in [("train.csv", &ds.train), ("val.csv", &ds.val), ("test.csv", &ds.test)] {
        write_split(&dir.join(name), windows, cfg.w_in, cfg.w_out)?;
    }
    write_json(&dir.join("norm.json"), &ds.stats)?;
    write_json(&dir.join("meta.json"), &ds.meta)?;
    write_json(&dir.join("report.json"), report)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn read_split(path: &Path, w_in: usize, w_out: usize) -> Result<Vec<WindowPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let expected = header(w_in, w_out);
    if rdr.headers()?.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Schema(format!("{}: unexpected window header", path.display())));
    }
    let bad = |what: &str| Error::Schema(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let int = |i: usize| row[i].parse::<usize>().map_err(|_| bad("index"));
        let nums: Vec<f64> = row
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().map_err(|_| bad("number")))
            .collect::<Result<_>>()?;
        let (s, rest) = nums.split_at(6);
        let (x, y) = rest.split_at(w_in * N_FEATURES);
        let state = KinematicState {
            pos: GeoPoint { lat: s[0], lon: s[1] },
            sog: s[2],
            cog: s[3],
            accel: s[4],
            cog_rate: s[5],
        };
        out.push(WindowPair {
            segment: int(0)?,
            offset: int(1)?,
            x: x.chunks_exact(N_FEATURES).map(|c| c.try_into().unwrap()).collect(),
            y: y.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
            state,
            anchor: state.pos,
        });
    }
    Ok(out)
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta: DatasetMeta = read_json(&dir.join("meta.json"))?;
    let stats: NormStats = read_json(&dir.join("norm.json"))?;
    let (w_in, w_out) = (meta.config.w_in, meta.config.w_out);
    Ok(Dataset {
        train: read_split(&dir.join("train.csv"), w_in, w_out)?,
        val: read_split(&dir.join("val.csv"), w_in, w_out)?,
        test: read_split(&dir.join("test.csv"), w_in, w_out)?,
        meta,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{make_windows, TrajectoryPoint, WindowConfig};

    #[test]
    fn write_read_round_trip_is_exact() {
        let segs: Vec<Vec<TrajectoryPoint>> = (0..10)
            .map(|i| {
                (0..35)
                    .map(|k| TrajectoryPoint {
                        t: 120.0 * k as f64,
                        lat: 0.1 * i as f64 + 1e-3 * (k as f64).sqrt(),
                        lon: -20.0 + 1.0 / (k as f64 + 3.0),
                        sog: 4.0 + 0.37 * k as f64,
                        cog: 359.99 - 0.1 * k as f64,
                        accel: 1e-4 / 3.0,
                        cog_rate: -0.007,
                    })
                    .collect()
            })
            .collect();
        let ds = make_windows(&segs, &WindowConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds, &serde_json::json!({"note": 1})).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_directory_is_io_error() {
        assert!(matches!(read_dataset("/nonexistent/ds"), Err(Error::Io { .. })));
    }
}
