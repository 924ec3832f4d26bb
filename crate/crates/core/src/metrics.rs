//! Regression metrics (MAE, MSE per coordinate) and haversine displacement
//! errors (ADE, FDE).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{haversine_m, EarthModel, GeoPoint};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordErrors<T> {
    /// `[lat, lon]`, degrees.
    pub mae: [T; 2],
    /// `[lat, lon]`, degrees².
    pub mse: [T; 2],
}

/// Per-coordinate mean absolute and mean squared error over `n` positions.
pub fn mae_mse<T: Scalar>(pred: &[[T; 2]], truth: &[[T; 2]]) -> Result<CoordErrors<T>> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidArgument("prediction and truth lengths differ".into()));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no positions to score".into()));
    }
    let mut abs = [T::zero(); 2];
    let mut sq = [T::zero(); 2];
    for (p, t) in pred.iter().zip(truth) {
        for k in 0..2 {
            let e = t[k] - p[k];
            abs[k] = abs[k] + e.abs();
            sq[k] = sq[k] + e * e;
        }
    }
    let n = T::from_usize(pred.len()).unwrap();
    Ok(CoordErrors {
        mae: [abs[0] / n, abs[1] / n],
        mse: [sq[0] / n, sq[1] / n],
    })
}

/// Average and final displacement error in metres.
pub fn ade_fde<T: Scalar>(pred: &[GeoPoint<T>], truth: &[GeoPoint<T>], earth: EarthModel<T>) -> Result<(T, T)> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidArgument("prediction and truth lengths differ".into()));
    }
    let Some((&last_p, &last_t)) = pred.last().zip(truth.last()) else {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    };
    let sum = pred
        .iter()
        .zip(truth)
        .fold(T::zero(), |acc, (p, t)| acc + haversine_m(*t, *p, earth));
    let ade = sum / T::from_usize(pred.len()).unwrap();
    Ok((ade, haversine_m(last_t, last_p, earth)))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> MeanStd<T> {
    pub fn of(values: &[T]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = T::from_usize(values.len()).unwrap();
        let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
        let var = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
        Some(MeanStd { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub mae_lat: T,
    pub mae_lon: T,
    pub mse_lat: T,
    pub mse_lon: T,
    pub ade_m: MeanStd<T>,
    pub fde_m: MeanStd<T>,
    pub n_windows: usize,
}

/// A predicted track and its ground truth over one window's horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredWindow<T> {
    pub pred: Vec<GeoPoint<T>>,
    pub truth: Vec<GeoPoint<T>>,
}

impl<T: Scalar> MetricsReport<T> {
    /// Aggregates per-window ADE/FDE (mean ± std over windows) and pooled
    /// per-coordinate MAE/MSE.
    pub fn from_windows(windows: &[ScoredWindow<T>], earth: EarthModel<T>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidArgument("no windows to score".into()));
        }
        let mut ades = Vec::with_capacity(windows.len());
        let mut fdes = Vec::with_capacity(windows.len());
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        for w in windows {
            let (a, f) = ade_fde(&w.pred, &w.truth, earth)?;
            ades.push(a);
            fdes.push(f);
            pred.extend(w.pred.iter().map(|p| p.to_array()));
            truth.extend(w.truth.iter().map(|p| p.to_array()));
        }
        let ce = mae_mse(&pred, &truth)?;
        Ok(MetricsReport {
            mae_lat: ce.mae[0],
            mae_lon: ce.mae[1],
            mse_lat: ce.mse[0],
            mse_lon: ce.mse[1],
            ade_m: MeanStd::of(&ades).unwrap(),
            fde_m: MeanStd::of(&fdes).unwrap(),
            n_windows: windows.len(),
        })
    }
}
