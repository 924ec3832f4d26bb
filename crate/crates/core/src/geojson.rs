//! GeoJSON export of observed and predicted tracks.

use serde_json::{json, Value};

use crate::geodesy::GeoPoint;

/// A `LineString` feature, or `None` when fewer than two positions are
/// given (a line string needs at least two).
pub fn line_string(name: &str, points: &[GeoPoint<f64>], properties: Value) -> Option<Value> {
    if points.len() < 2 {
        return None;
    }
    let coords: Vec<[f64; 2]> = points.iter().map(|p| [p.lon, p.lat]).collect();
    let mut props = json!({ "name": name });
    if let (Some(dst), Value::Object(src)) = (props.as_object_mut(), properties) {
        dst.extend(src);
    }
    Some(json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": coords },
        "properties": props,
    }))
}

pub fn feature_collection(features: Vec<Value>) -> Value {
    json!({ "type": "FeatureCollection", "features": features })
}

/// Averages overlapping predictions into one track. `windows` holds, per
/// window, the track index of its first predicted point and the predicted
/// points; the result covers every index some window predicts, in order.
pub fn stitch(windows: &[(usize, Vec<GeoPoint<f64>>)]) -> Vec<(usize, GeoPoint<f64>)> {
    let mut acc: std::collections::BTreeMap<usize, (f64, f64, usize)> = Default::default();
    for (start, pts) in windows {
        for (j, p) in pts.iter().enumerate() {
            let e = acc.entry(start + j).or_insert((0.0, 0.0, 0));
            e.0 += p.lat;
            e.1 += p.lon;
            e.2 += 1;
        }
    }
    acc.into_iter()
        .map(|(i, (lat, lon, n))| {
            let n = n as f64;
            (
                i,
                GeoPoint {
                    lat: lat / n,
                    lon: lon / n,
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(lat: f64, lon: f64) -> GeoPoint<f64> {
        GeoPoint { lat, lon }
    }

    #[test]
    fn line_string_uses_lon_lat_order() {
        let f = line_string("observed", &[g(1.0, 2.0), g(3.0, 4.0)], json!({"ade_m": 5.0})).unwrap();
        assert_eq!(f["geometry"]["coordinates"], json!([[2.0, 1.0], [4.0, 3.0]]));
        assert_eq!(f["properties"]["name"], "observed");
        assert_eq!(f["properties"]["ade_m"], 5.0);
        assert!(line_string("x", &[g(0.0, 0.0)], Value::Null).is_none());
    }

    #[test]
    fn stitching_averages_overlaps() {
        let s = stitch(&[(3, vec![g(0.0, 0.0), g(2.0, 2.0)]), (4, vec![g(4.0, 0.0), g(6.0, 1.0)])]);
        assert_eq!(s, vec![(3, g(0.0, 0.0)), (4, g(3.0, 1.0)), (5, g(6.0, 1.0))]);
        assert!(stitch(&[]).is_empty());
    }

    #[test]
    fn empty_collection_is_valid() {
        let fc = feature_collection(vec![]);
        assert_eq!(fc["type"], "FeatureCollection");
        assert_eq!(fc["features"], json!([]));
    }
}
