//! Data loss, finite-difference physics residuals and the weighted total
//! loss.
//!
//! Divisors follow the loss definitions exactly: the data loss averages over
//! the batch but sums over the horizon, the physics loss averages over both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{EarthModel, GeoPoint};
use crate::kinematics::{self, Approx, Displacement, KinematicState, Order, Rollout, Scheme};
use crate::scalar::Scalar;

/// Which kinematic model drives the physics residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysicsOrder {
    /// No physics term.
    #[default]
    None,
    /// Euler step with Taylor-midpoint course.
    First,
    /// Heun predictor-corrector.
    Second,
}

impl PhysicsOrder {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(PhysicsOrder::None),
            1 => Some(PhysicsOrder::First),
            2 => Some(PhysicsOrder::Second),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            PhysicsOrder::None => 0,
            PhysicsOrder::First => 1,
            PhysicsOrder::Second => 2,
        }
    }

    pub fn integrator(self) -> Option<Order> {
        match self {
            PhysicsOrder::None => None,
            PhysicsOrder::First => Some(Order::EulerMidpoint),
            PhysicsOrder::Second => Some(Order::Heun),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PhysicsConfig<T> {
    pub order: PhysicsOrder,
    pub approx: Approx,
    /// Weight of the physics term in the total loss.
    pub lambda: T,
    /// Seconds between consecutive horizon steps.
    pub dt: T,
    /// Residual normalizers, degrees. Taken from the training split.
    pub lat_range: T,
    pub lon_range: T,
    #[serde(default)]
    pub rollout: Rollout,
    #[serde(default)]
    pub earth: EarthModel<T>,
}

impl<T: Scalar> PhysicsConfig<T> {
    pub fn new(order: PhysicsOrder, approx: Approx, lambda: T, dt: T, lat_range: T, lon_range: T) -> Self {
        PhysicsConfig {
            order,
            approx,
            lambda,
            dt,
            lat_range,
            lon_range,
            rollout: Rollout::Literal,
            earth: EarthModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.dt > T::zero()) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.lat_range > T::zero()) || !(self.lon_range > T::zero()) {
            return Err(Error::InvalidArgument("residual ranges must be > 0".into()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> Option<Scheme> {
        self.order.integrator().map(|o| Scheme::new(o, self.approx))
    }

    pub fn is_active(&self) -> bool {
        self.order != PhysicsOrder::None
    }
}

/// Predictions and ground truth for `N` windows over an `H`-step horizon.
/// Positions are `[lat, lon]` in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch<T> {
    pub last_obs: Vec<GeoPoint<T>>,
    pub pred: Vec<Vec<[T; 2]>>,
    pub truth: Vec<Vec<[T; 2]>>,
    pub states: Vec<KinematicState<T>>,
}

impl<T: Scalar> PredictionBatch<T> {
    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.pred.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pred.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty prediction batch".into()));
        }
        if self.truth.len() != n || self.last_obs.len() != n || self.states.len() != n {
            return Err(Error::InvalidArgument("batch dimensions disagree".into()));
        }
        let h = self.horizon();
        if h == 0 {
            return Err(Error::InvalidArgument("horizon must be >= 1".into()));
        }
        if self.pred.iter().chain(&self.truth).any(|w| w.len() != h) {
            return Err(Error::InvalidArgument("ragged horizon in batch".into()));
        }
        Ok(())
    }
}

/// Units the data term is measured in during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataUnits {
    /// Min-max normalized coordinates.
    #[default]
    Normalized,
    /// Raw degrees.
    Degrees,
}

/// `(1/N) Σ_i Σ_j ‖y − ŷ‖²`. With `ranges = Some([lat, lon])` the errors are
/// first divided by those ranges, which is the min-max normalized error.
pub fn data_loss<T: Scalar>(batch: &PredictionBatch<T>, ranges: Option<[T; 2]>) -> Result<T> {
    batch.validate()?;
    let [sx, sy] = ranges.unwrap_or([T::one(), T::one()]);
    let mut sum = T::zero();
    for (p, y) in batch.pred.iter().zip(&batch.truth) {
        for (pj, yj) in p.iter().zip(y) {
            let ex = (yj[0] - pj[0]) / sx;
            let ey = (yj[1] - pj[1]) / sy;
            sum = sum + ex * ex + ey * ey;
        }
    }
    Ok(sum / T::from_usize(batch.len()).unwrap())
}

/// Step-to-step displacements of a predicted track. The first step is taken
/// from the last observed position, so `H` predictions give `H` deltas.
pub fn predicted_displacements<T: Scalar>(last_obs: GeoPoint<T>, pred: &[[T; 2]]) -> Vec<Displacement<T>> {
    let mut prev = last_obs.to_array();
    pred.iter()
        .map(|p| {
            let d = Displacement {
                dlat: p[0] - prev[0],
                dlon: p[1] - prev[1],
            };
            prev = *p;
            d
        })
        .collect()
}

/// Kinematically expected displacements for a window's last observed state.
pub fn expected_displacements<T: Scalar>(
    state: &KinematicState<T>,
    horizon: usize,
    cfg: &PhysicsConfig<T>,
) -> Result<Vec<Displacement<T>>> {
    let scheme = cfg
        .scheme()
        .ok_or_else(|| Error::InvalidArgument("physics order is None".into()))?;
    kinematics::expected_displacements(state, cfg.dt, horizon, scheme, cfg.rollout, cfg.earth)
}

/// Range-normalized residuals `(Δpred − Δexpected) / range` for one window.
pub fn window_residuals<T: Scalar>(
    last_obs: GeoPoint<T>,
    pred: &[[T; 2]],
    expected: &[Displacement<T>],
    cfg: &PhysicsConfig<T>,
) -> Vec<[T; 2]> {
    predicted_displacements(last_obs, pred)
        .into_iter()
        .zip(expected)
        .map(|(p, e)| [(p.dlat - e.dlat) / cfg.lat_range, (p.dlon - e.dlon) / cfg.lon_range])
        .collect()
}

/// `N × H × 2` normalized physics residuals.
pub fn physics_residuals<T: Scalar>(batch: &PredictionBatch<T>, cfg: &PhysicsConfig<T>) -> Result<Vec<Vec<[T; 2]>>> {
    batch.validate()?;
    cfg.validate()?;
    let h = batch.horizon();
    batch
        .states
        .iter()
        .zip(&batch.last_obs)
        .zip(&batch.pred)
        .map(|((state, anchor), pred)| {
            let expected = expected_displacements(state, h, cfg)?;
            Ok(window_residuals(*anchor, pred, &expected, cfg))
        })
        .collect()
}

/// `(1/(N·H)) Σ_i Σ_j (r_x² + r_y²)`.
pub fn physics_loss<T: Scalar>(residuals: &[Vec<[T; 2]>]) -> Result<T> {
    let count: usize = residuals.iter().map(Vec::len).sum();
    if count == 0 {
        return Err(Error::InvalidArgument("no residuals".into()));
    }
    let sum = residuals
        .iter()
        .flatten()
        .fold(T::zero(), |acc, r| acc + r[0] * r[0] + r[1] * r[1]);
    Ok(sum / T::from_usize(count).unwrap())
}

pub fn total_loss<T: Scalar>(l_data: T, l_phy: T, lambda: T) -> Result<T> {
    if !(lambda >= T::zero()) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(l_data + lambda * l_phy)
}

/// Gradient of the physics loss with respect to one window's predicted
/// positions (degrees), given that window's residuals. `count` is the total
/// number of residual steps `N·H` in the batch.
pub fn physics_loss_grad_window<T: Scalar>(residuals: &[[T; 2]], cfg: &PhysicsConfig<T>, count: usize) -> Vec<[T; 2]> {
    let scale = T::lit(2.0) / T::from_usize(count).unwrap();
    let h = residuals.len();
    (0..h)
        .map(|j| {
            let next = if j + 1 < h {
                residuals[j + 1]
            } else {
                [T::zero(), T::zero()]
            };
            [
                scale * (residuals[j][0] - next[0]) / cfg.lat_range,
                scale * (residuals[j][1] - next[1]) / cfg.lon_range,
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::dead_reckon;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn st(lat: f64, lon: f64, sog: f64, cog: f64, accel: f64, rate: f64) -> KinematicState<f64> {
        KinematicState::new(lat, lon, sog, cog, accel, rate).unwrap()
    }

    fn single(pred: Vec<[f64; 2]>, truth: Vec<[f64; 2]>, state: KinematicState<f64>) -> PredictionBatch<f64> {
        PredictionBatch {
            last_obs: vec![state.pos],
            pred: vec![pred],
            truth: vec![truth],
            states: vec![state],
        }
    }

    fn cfg(order: PhysicsOrder, approx: Approx) -> PhysicsConfig<f64> {
        PhysicsConfig::new(order, approx, 1.0, 120.0, 1.0, 1.0)
    }

    #[test]
    fn data_loss_examples() {
        let s = st(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let truth: Vec<[f64; 2]> = (0..15).map(|j| [j as f64 * 0.01, 1.0]).collect();
        let b = single(truth.clone(), truth.clone(), s);
        assert_eq!(data_loss(&b, None).unwrap(), 0.0);

        let off: Vec<[f64; 2]> = truth.iter().map(|p| [p[0] + 0.001, p[1] + 0.001]).collect();
        let b = single(off.clone(), truth.clone(), s);
        assert_relative_eq!(data_loss(&b, None).unwrap(), 3e-5, max_relative = 1e-9);

        let mut two = single(truth.clone(), truth.clone(), s);
        two.pred.push(off);
        two.truth.push(truth);
        two.last_obs.push(s.pos);
        two.states.push(s);
        assert_relative_eq!(data_loss(&two, None).unwrap(), 1.5e-5, max_relative = 1e-9);
    }

    #[test]
    fn data_loss_normalized_divides_by_range() {
        let s = st(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let b = single(vec![[0.002, 0.0]], vec![[0.0, 0.004]], s);
        let raw = data_loss(&b, None).unwrap();
        let norm = data_loss(&b, Some([2.0, 4.0])).unwrap();
        assert_relative_eq!(raw, 0.002f64.powi(2) + 0.004f64.powi(2));
        assert_relative_eq!(norm, 2.0e-6);
    }

    #[test]
    fn empty_or_ragged_batches_are_rejected() {
        let b: PredictionBatch<f64> = PredictionBatch {
            last_obs: vec![],
            pred: vec![],
            truth: vec![],
            states: vec![],
        };
        assert!(data_loss(&b, None).is_err());
        let s = st(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let ragged = single(vec![[0.0; 2]; 3], vec![[0.0; 2]; 2], s);
        assert!(data_loss(&ragged, None).is_err());
        assert!(physics_loss::<f64>(&[]).is_err());
    }

    #[test]
    fn predicted_displacement_examples() {
        let o = GeoPoint { lat: 0.0, lon: 0.0 };
        let d = predicted_displacements(o, &[[0.0, 0.0]; 4]);
        assert!(d.iter().all(|x| *x == Displacement::zero()));
        let d = predicted_displacements(o, &[[0.0, 0.01], [0.0, 0.02]]);
        assert_eq!(d[0], Displacement { dlat: 0.0, dlon: 0.01 });
        assert_eq!(d[1], Displacement { dlat: 0.0, dlon: 0.01 });
        let d = predicted_displacements(GeoPoint { lat: 1.0, lon: 2.0 }, &[[1.5, 2.5]]);
        assert_eq!(d, vec![Displacement { dlat: 0.5, dlon: 0.5 }]);
    }

    #[test]
    fn residuals_vanish_on_dead_reckoned_batch() {
        let e = EarthModel::default();
        for order in [PhysicsOrder::First, PhysicsOrder::Second] {
            for approx in [Approx::SmallAngle, Approx::GreatCircle] {
                let mut c = PhysicsConfig::new(order, approx, 1.0, 120.0, 0.05, 0.05);
                let s = st(48.5, -123.2, 7.5, 130.0, 0.002, 0.05);
                let track = dead_reckon(&s, 120.0, 15, c.scheme().unwrap(), Rollout::Literal, e).unwrap();
                let pred: Vec<[f64; 2]> = track.iter().map(|p| p.to_array()).collect();
                let b = single(pred.clone(), pred.clone(), s);
                let r = physics_residuals(&b, &c).unwrap();
                assert!(r.iter().flatten().all(|x| x[0].abs() < 1e-12 && x[1].abs() < 1e-12));

                c.rollout = Rollout::Propagated;
                let track = dead_reckon(&s, 120.0, 15, c.scheme().unwrap(), Rollout::Propagated, e).unwrap();
                let pred: Vec<[f64; 2]> = track.iter().map(|p| p.to_array()).collect();
                let b = single(pred.clone(), pred, s);
                let r = physics_residuals(&b, &c).unwrap();
                assert!(physics_loss(&r).unwrap() < 1e-24);
            }
        }
    }

    #[test]
    fn stationary_state_drift_residual() {
        let s = st(10.0, 20.0, 0.0, 0.0, 0.0, 0.0);
        let pred: Vec<[f64; 2]> = (1..=5).map(|j| [10.0, 20.0 + 0.001 * j as f64]).collect();
        let mut c = cfg(PhysicsOrder::First, Approx::SmallAngle);
        c.lon_range = 10.0;
        let b = single(pred.clone(), pred, s);
        let r = physics_residuals(&b, &c).unwrap();
        for x in &r[0] {
            assert_eq!(x[0], 0.0);
            assert_relative_eq!(x[1], 1e-4, max_relative = 1e-9);
        }
    }

    #[test]
    fn physics_residuals_need_an_order() {
        let s = st(0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let b = single(vec![[0.0; 2]], vec![[0.0; 2]], s);
        assert!(physics_residuals(&b, &cfg(PhysicsOrder::None, Approx::SmallAngle)).is_err());
    }

    #[test]
    fn physics_loss_examples() {
        assert_eq!(physics_loss(&[vec![[0.0, 0.0]; 4]]).unwrap(), 0.0);
        let r = vec![vec![[0.1, 0.0], [0.0, 0.1]]];
        assert_relative_eq!(physics_loss(&r).unwrap(), 0.01, max_relative = 1e-12);
        let doubled = vec![vec![[0.2, 0.0], [0.0, 0.2]]];
        assert_relative_eq!(physics_loss(&doubled).unwrap(), 0.04, max_relative = 1e-12);
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(0.5, 0.2, 0.0).unwrap(), 0.5);
        assert_relative_eq!(total_loss(0.5, 0.2, 0.01).unwrap(), 0.502);
        assert_eq!(total_loss(0.5, 0.0, 3.0).unwrap(), 0.5);
        assert!(total_loss(0.5, 0.2, -0.1).is_err());
    }

    #[test]
    fn second_order_tracks_a_turn_better_than_first() {
        // truth: analytic circle sampled every 10 s, heading 0 turning 0.5°/s at 8 m/s
        let e = EarthModel::<f64>::default();
        let (v, w, dt) = (8.0, 0.5f64, 10.0);
        let wr = w.to_radians();
        let r0 = v / wr;
        let circle = |t: f64| {
            let north = r0 * (wr * t).sin();
            let east = r0 * (1.0 - (wr * t).cos());
            [
                north / e.radius_m / crate::scalar::DEG_TO_RAD,
                east / e.radius_m / crate::scalar::DEG_TO_RAD,
            ]
        };
        let s = st(0.0, 0.0, v, 0.0, 0.0, w);
        let truth: Vec<[f64; 2]> = (1..=10).map(|j| circle(j as f64 * dt)).collect();
        let b = single(truth.clone(), truth, s);
        let mut rms = Vec::new();
        for order in [PhysicsOrder::First, PhysicsOrder::Second] {
            let c = PhysicsConfig::new(order, Approx::SmallAngle, 1.0, dt, 1e-3, 1e-3);
            rms.push(physics_loss(&physics_residuals(&b, &c).unwrap()).unwrap().sqrt());
        }
        assert!(rms[1] < rms[0], "{rms:?}");
    }

    #[test]
    fn physics_grad_matches_finite_differences() {
        let s = st(40.0, -60.0, 6.0, 75.0, 0.003, 0.04);
        let c = PhysicsConfig::new(PhysicsOrder::Second, Approx::GreatCircle, 1.0, 120.0, 0.3, 0.7);
        let pred = vec![[40.01, -59.98], [40.02, -59.95], [40.025, -59.93]];
        let exp = expected_displacements(&s, 3, &c).unwrap();
        let loss = |p: &[[f64; 2]]| physics_loss(&[window_residuals(s.pos, p, &exp, &c)]).unwrap();
        let r = window_residuals(s.pos, &pred, &exp, &c);
        let g = physics_loss_grad_window(&r, &c, 3);
        let eps = 1e-7;
        for j in 0..3 {
            for k in 0..2 {
                let mut hi = pred.clone();
                let mut lo = pred.clone();
                hi[j][k] += eps;
                lo[j][k] -= eps;
                let fd = (loss(&hi) - loss(&lo)) / (2.0 * eps);
                assert_relative_eq!(g[j][k], fd, epsilon = 1e-8, max_relative = 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn range_scaling_divides_loss_by_square(
            c in 0.5..20.0f64,
            drift in prop::collection::vec((-0.01..0.01f64, -0.01..0.01f64), 1..10),
        ) {
            let s = st(10.0, 10.0, 5.0, 45.0, 0.0, 0.0);
            let pred: Vec<[f64; 2]> = drift.iter().scan([10.0, 10.0], |acc, (a, b)| {
                acc[0] += a; acc[1] += b; Some(*acc)
            }).collect();
            let b = single(pred.clone(), pred, s);
            let base = PhysicsConfig::new(PhysicsOrder::First, Approx::SmallAngle, 1.0, 120.0, 0.2, 0.3);
            let scaled = PhysicsConfig { lat_range: 0.2 * c, lon_range: 0.3 * c, ..base };
            let l0 = physics_loss(&physics_residuals(&b, &base).unwrap()).unwrap();
            let l1 = physics_loss(&physics_residuals(&b, &scaled).unwrap()).unwrap();
            prop_assert!((l1 * c * c - l0).abs() <= 1e-9 * l0.max(1e-300));
        }

        #[test]
        fn total_loss_monotone_in_lambda(ld in 0.0..10.0f64, lp in 1e-6..10.0f64, l1 in 0.0..5.0f64, dl in 0.0..5.0f64) {
            prop_assert!(total_loss(ld, lp, l1 + dl).unwrap() >= total_loss(ld, lp, l1).unwrap());
        }

        #[test]
        fn data_loss_zero_on_perfect_prediction(
            pts in prop::collection::vec((-80.0..80.0f64, -180.0..180.0f64), 1..20),
        ) {
            let truth: Vec<[f64; 2]> = pts.iter().map(|(a, b)| [*a, *b]).collect();
            let s = st(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            let b = single(truth.clone(), truth, s);
            prop_assert_eq!(data_loss(&b, None).unwrap(), 0.0);
        }
    }
}
