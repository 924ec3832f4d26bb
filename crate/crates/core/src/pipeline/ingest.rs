use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AIS_HEADER: [&str; 7] = ["mmsi", "timestamp", "lat", "lon", "sog", "cog", "ship_type"];

/// One raw AIS position report. Speed is still in knots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AisRecord {
    pub mmsi: u64,
    /// Unix seconds, strictly positive.
    pub timestamp: i64,
    pub lat: f64,
    pub lon: f64,
    /// Knots.
    pub sog: f64,
    pub cog: f64,
    pub ship_type: u32,
}

/// Row counts from ingestion. Every skipped row lands in exactly one bucket.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub rows: usize,
    pub accepted: usize,
    /// Wrong field count or unparseable numbers.
    pub malformed: usize,
    pub bad_timestamp: usize,
    pub lat_out_of_range: usize,
    pub lon_out_of_range: usize,
    pub bad_sog: usize,
    pub bad_cog: usize,
}

enum Reject {
    Malformed,
    Timestamp,
    Lat,
    Lon,
    Sog,
    Cog,
}

fn parse_row(row: &csv::StringRecord) -> Result<AisRecord, Reject> {
    if row.len() != AIS_HEADER.len() {
        return Err(Reject::Malformed);
    }
    let f = |i: usize| row[i].trim();
    let num = |i: usize| f(i).parse::<f64>().map_err(|_| Reject::Malformed);
    let mmsi = f(0).parse::<u64>().map_err(|_| Reject::Malformed)?;
    let timestamp = f(1).parse::<i64>().map_err(|_| Reject::Malformed)?;
    let (lat, lon, sog, cog) = (num(2)?, num(3)?, num(4)?, num(5)?);
    let ship_type = f(6).parse::<u32>().map_err(|_| Reject::Malformed)?;
    if timestamp <= 0 {
        return Err(Reject::Timestamp);
    }
    if !(-90.0..=90.0).contains(&lat) {
        return Err(Reject::Lat);
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(Reject::Lon);
    }
    if !(sog.is_finite() && sog >= 0.0) {
        return Err(Reject::Sog);
    }
    if !cog.is_finite() {
        return Err(Reject::Cog);
    }
    Ok(AisRecord {
        mmsi,
        timestamp,
        lat,
        lon,
        sog,
        cog,
        ship_type,
    })
}

/// Reads AIS records from CSV text. The header must match [`AIS_HEADER`]
/// exactly; bad rows are skipped and counted.
pub fn read_ais<R: Read>(reader: R) -> Result<(Vec<AisRecord>, ParseReport)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(AIS_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "expected header `{}`, found `{}`",
            AIS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for row in rdr.records() {
        report.rows += 1;
        let parsed = match row {
            Ok(r) => parse_row(&r),
            Err(_) => Err(Reject::Malformed),
        };
        match parsed {
            Ok(rec) => {
                report.accepted += 1;
                out.push(rec);
            }
            Err(Reject::Malformed) => report.malformed += 1,
            Err(Reject::Timestamp) => report.bad_timestamp += 1,
            Err(Reject::Lat) => report.lat_out_of_range += 1,
            Err(Reject::Lon) => report.lon_out_of_range += 1,
            Err(Reject::Sog) => report.bad_sog += 1,
            Err(Reject::Cog) => report.bad_cog += 1,
        }
    }
    Ok((out, report))
}

pub fn parse_ais_csv(path: impl AsRef<Path>) -> Result<(Vec<AisRecord>, ParseReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ais(std::io::BufReader::new(file))
}

pub fn write_ais_csv<W: Write>(writer: W, records: &[AisRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(AIS_HEADER)?;
    for r in records {
        w.write_record([
            r.mmsi.to_string(),
            r.timestamp.to_string(),
            r.lat.to_string(),
            r.lon.to_string(),
            r.sog.to_string(),
            r.cog.to_string(),
            r.ship_type.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "mmsi,timestamp,lat,lon,sog,cog,ship_type\n";

    #[test]
    fn well_formed_rows_parse() {
        let text = format!(
            "{HEAD}366000001,1000,10.0,20.0,5.5,90,70\n366000001,1060,10.1,20.1,5.6,91,70\n366000002,1000,-5,100,0,359.9,30\n"
        );
        let (recs, rep) = read_ais(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(rep.accepted, 3);
        assert_eq!(recs[1].timestamp, 1060);
        assert_eq!(recs[2].cog, 359.9);
    }

    #[test]
    fn bad_rows_are_counted_and_skipped() {
        let text = format!(
            "{HEAD}366000001,1000,95.0,20.0,5.5,90,70\n366000001,x,10,20,5,90,70\n366000001,1000,10,20,5\n366000001,0,10,20,5,90,70\n366000001,1000,10,20,-1,90,70\n366000001,1000,10,20,5,90,70\n"
        );
        let (recs, rep) = read_ais(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(rep.rows, 6);
        assert_eq!(rep.lat_out_of_range, 1);
        assert_eq!(rep.malformed, 2);
        assert_eq!(rep.bad_timestamp, 1);
        assert_eq!(rep.bad_sog, 1);
    }

    #[test]
    fn header_only_is_empty() {
        let (recs, rep) = read_ais(HEAD.as_bytes()).unwrap();
        assert!(recs.is_empty());
        assert_eq!(rep.rows, 0);
    }

    #[test]
    fn renamed_column_is_a_schema_error() {
        let text = "mmsi,time,lat,lon,sog,cog,ship_type\n";
        assert!(matches!(read_ais(text.as_bytes()), Err(Error::Schema(_))));
        let text = "mmsi,timestamp,lat,lon,sog,cog\n";
        assert!(matches!(read_ais(text.as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(parse_ais_csv("/nonexistent/ais.csv"), Err(Error::Io { .. })));
    }

    #[test]
    fn write_then_read_round_trips() {
        let recs = vec![AisRecord {
            mmsi: 244000123,
            timestamp: 1_700_000_000,
            lat: 51.123456789,
            lon: -3.1,
            sog: 12.3,
            cog: 271.0,
            ship_type: 70,
        }];
        let mut buf = Vec::new();
        write_ais_csv(&mut buf, &recs).unwrap();
        let (back, _) = read_ais(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }
}
