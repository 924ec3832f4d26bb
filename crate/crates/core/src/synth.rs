//! Synthetic trajectories that satisfy the kinematic model exactly.
//!
//! A trajectory is a chain of legs. Each leg fixes the speed at its start
//! together with a constant acceleration and course rate; the course carries
//! over from the previous leg. Positions come from the propagated rollout of
//! the chosen integrator, so the physics residuals of a noise-free trajectory
//! under its own scheme vanish up to rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{haversine_m, initial_bearing_deg, EarthModel, GeoPoint};
use crate::kinematics::{advance, displacement, KinematicState, Scheme};
use crate::pipeline::{derive_kinematics, AisRecord, TrajectoryPoint};
use crate::scalar::KNOTS_TO_MPS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub duration_s: f64,
    /// Speed at the start of the leg, m/s.
    pub sog: f64,
    /// Degrees per second.
    pub cog_rate: f64,
    /// m/s².
    pub accel: f64,
}

/// Half-widths of uniform perturbations applied per trajectory in a fleet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Spread {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub cog_deg: f64,
    pub sog_mps: f64,
    pub cog_rate: f64,
    pub accel: f64,
}

/// How the trajectories of a fleet map onto vessels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Vessels {
    /// One MMSI per trajectory.
    #[default]
    Separate,
    /// A single MMSI; trajectory `i + 1` starts `gap_s` after trajectory `i`
    /// ends.
    Chained { gap_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Start position and course. Speed, acceleration and course rate are
    /// taken from the first leg.
    pub start: KinematicState<f64>,
    pub legs: Vec<Leg>,
    pub dt: f64,
    pub scheme: Scheme,
    #[serde(default)]
    pub noise_sigma_deg: f64,
    /// Timestamp of the first point, Unix seconds.
    #[serde(default = "default_start_t")]
    pub start_t: f64,
    #[serde(default)]
    pub spread: Spread,
    #[serde(default)]
    pub vessels: Vessels,
}

fn default_start_t() -> f64 {
    1_700_000_000.0
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.legs.is_empty() {
            return Err(Error::InvalidArgument("a trajectory needs at least one leg".into()));
        }
        for leg in &self.legs {
            if !(leg.duration_s >= 0.0) || !(leg.sog >= 0.0) || !leg.cog_rate.is_finite() || !leg.accel.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid leg {leg:?}")));
            }
        }
        if !(self.noise_sigma_deg >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// Number of points `generate` will emit.
    pub fn n_points(&self) -> usize {
        1 + self.legs.iter().map(|l| self.steps(l)).sum::<usize>()
    }

    pub fn duration_s(&self) -> f64 {
        (self.n_points() - 1) as f64 * self.dt
    }

    fn steps(&self, leg: &Leg) -> usize {
        (leg.duration_s / self.dt).round() as usize
    }
}

fn point(t: f64, s: &KinematicState<f64>) -> TrajectoryPoint {
    TrajectoryPoint {
        t,
        lat: s.pos.lat,
        lon: s.pos.lon,
        sog: s.sog,
        cog: s.cog,
        accel: s.accel,
        cog_rate: s.cog_rate,
    }
}

fn clean_track(spec: &SynthSpec) -> Result<Vec<TrajectoryPoint>> {
    let earth = EarthModel::default();
    let first = spec.legs[0];
    let mut state = KinematicState::new(
        spec.start.pos.lat,
        spec.start.pos.lon,
        first.sog,
        spec.start.cog,
        first.accel,
        first.cog_rate,
    )?;
    let mut out = vec![point(spec.start_t, &state)];
    let mut k = 0usize;
    for leg in &spec.legs {
        state.sog = leg.sog;
        state.accel = leg.accel;
        state.cog_rate = leg.cog_rate;
        // the leg's controls take effect at its first point
        let last = out.last_mut().unwrap();
        *last = point(last.t, &state);
        for _ in 0..spec.steps(leg) {
            let d = displacement(&state, spec.dt, earth, spec.scheme)?;
            state = advance(&state, d, spec.dt)?;
            k += 1;
            out.push(point(spec.start_t + k as f64 * spec.dt, &state));
        }
    }
    Ok(out)
}

/// Trajectory for `spec`, with Gaussian positional noise drawn from `seed`
/// when `spec.noise_sigma_deg > 0`.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<Vec<TrajectoryPoint>> {
    spec.validate()?;
    let track = clean_track(spec)?;
    add_noise(&track, spec.noise_sigma_deg, seed)
}

/// Perturbs latitude and longitude by independent `N(0, sigma²)` draws and
/// re-derives speed and course from consecutive positions (haversine
/// distance over elapsed time, initial bearing), then acceleration and
/// course rate by finite differences. The first point copies the speed and
/// course of the second.
pub fn add_noise(traj: &[TrajectoryPoint], sigma_deg: f64, seed: u64) -> Result<Vec<TrajectoryPoint>> {
    if !(sigma_deg >= 0.0) || !sigma_deg.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be >= 0, got {sigma_deg}"
        )));
    }
    if sigma_deg == 0.0 {
        return Ok(traj.to_vec());
    }
    let normal = Normal::new(0.0, sigma_deg).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<TrajectoryPoint> = traj
        .iter()
        .map(|p| {
            let lat = (p.lat + normal.sample(&mut rng)).clamp(-90.0, 90.0);
            let lon = crate::geodesy::canonical_lon(p.lon + normal.sample(&mut rng));
            TrajectoryPoint { lat, lon, ..*p }
        })
        .collect();
    let earth = EarthModel::default();
    for i in 1..out.len() {
        let a = GeoPoint {
            lat: out[i - 1].lat,
            lon: out[i - 1].lon,
        };
        let b = GeoPoint {
            lat: out[i].lat,
            lon: out[i].lon,
        };
        out[i].sog = haversine_m(a, b, earth) / (out[i].t - out[i - 1].t);
        out[i].cog = initial_bearing_deg(a, b);
    }
    if out.len() > 1 {
        out[0].sog = out[1].sog;
        out[0].cog = out[1].cog;
    }
    derive_kinematics(&mut out);
    Ok(out)
}

/// `n` trajectories from one template. Trajectory `i` perturbs the start and
/// the leg controls by uniform draws within `spec.spread`, and gets its own
/// noise seed. Returns `(mmsi, points)` pairs.
pub fn generate_fleet(spec: &SynthSpec, n: usize, seed: u64) -> Result<Vec<(u64, Vec<TrajectoryPoint>)>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |half: f64| {
        if half > 0.0 {
            rng.random_range(-half..=half)
        } else {
            0.0
        }
    };
    let s = spec.spread;
    let mut out = Vec::with_capacity(n);
    let mut t0 = spec.start_t;
    for i in 0..n {
        let mut one = spec.clone();
        one.start.pos.lat = (spec.start.pos.lat + jitter(s.lat_deg)).clamp(-89.0, 89.0);
        one.start.pos.lon = crate::geodesy::canonical_lon(spec.start.pos.lon + jitter(s.lon_deg));
        one.start.cog = crate::geodesy::wrap_course(spec.start.cog + jitter(s.cog_deg))?;
        for leg in &mut one.legs {
            leg.sog = (leg.sog + jitter(s.sog_mps)).max(0.0);
            leg.cog_rate += jitter(s.cog_rate);
            leg.accel += jitter(s.accel);
        }
        let mmsi = match spec.vessels {
            Vessels::Separate => {
                one.start_t = spec.start_t;
                200_000_001 + i as u64
            }
            Vessels::Chained { gap_s } => {
                one.start_t = t0;
                t0 += one.duration_s() + gap_s;
                200_000_001
            }
        };
        let track = generate(&one, seed.wrapping_add(1 + i as u64))?;
        out.push((mmsi, track));
    }
    Ok(out)
}

/// AIS rows for a trajectory: speed converted back to knots, timestamps
/// rounded to whole seconds.
pub fn to_ais_records(mmsi: u64, traj: &[TrajectoryPoint], ship_type: u32) -> Vec<AisRecord> {
    traj.iter()
        .map(|p| AisRecord {
            mmsi,
            timestamp: p.t.round() as i64,
            lat: p.lat,
            lon: p.lon,
            sog: p.sog / KNOTS_TO_MPS,
            cog: p.cog,
            ship_type,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{Approx, Order};
    use approx::assert_relative_eq;

    fn spec(legs: Vec<Leg>, cog: f64, dt: f64, order: Order) -> SynthSpec {
        SynthSpec {
            start: KinematicState::new(0.0, 0.0, 0.0, cog, 0.0, 0.0).unwrap(),
            legs,
            dt,
            scheme: Scheme::new(order, Approx::SmallAngle),
            noise_sigma_deg: 0.0,
            start_t: 1000.0,
            spread: Spread::default(),
            vessels: Vessels::Separate,
        }
    }

    fn leg(duration_s: f64, sog: f64, cog_rate: f64) -> Leg {
        Leg {
            duration_s,
            sog,
            cog_rate,
            accel: 0.0,
        }
    }

    #[test]
    fn zero_speed_stays_put() {
        let t = generate(&spec(vec![leg(600.0, 0.0, 0.0)], 45.0, 60.0, Order::Heun), 0).unwrap();
        assert_eq!(t.len(), 11);
        assert!(t.iter().all(|p| p.lat == 0.0 && p.lon == 0.0));
    }

    #[test]
    fn straight_east_has_equal_increments() {
        let t = generate(
            &spec(vec![leg(1200.0, 10.0, 0.0)], 90.0, 120.0, Order::EulerMidpoint),
            0,
        )
        .unwrap();
        let steps: Vec<f64> = t.windows(2).map(|w| w[1].lon - w[0].lon).collect();
        assert!(steps.iter().all(|s| *s > 0.0));
        for s in &steps {
            assert_relative_eq!(*s, steps[0], max_relative = 1e-9);
        }
        assert_relative_eq!(steps[0], 0.0107919, max_relative = 1e-5);
    }

    #[test]
    fn heun_turn_closes_its_circle() {
        // 360 s at 1°/s is one full turn
        let t = generate(&spec(vec![leg(360.0, 10.0, 1.0)], 0.0, 1.0, Order::Heun), 0).unwrap();
        let e = EarthModel::default();
        let a = GeoPoint {
            lat: t[0].lat,
            lon: t[0].lon,
        };
        let b = GeoPoint {
            lat: t[t.len() - 1].lat,
            lon: t[t.len() - 1].lon,
        };
        let circumference = 2.0 * std::f64::consts::PI * 10.0 / 1f64.to_radians();
        assert!(haversine_m(a, b, e) < 1e-3 * circumference);
    }

    #[test]
    fn derived_kinematics_are_recovered() {
        let mut s = spec(
            vec![Leg {
                duration_s: 3600.0,
                sog: 6.0,
                cog_rate: 0.05,
                accel: 1e-4,
            }],
            350.0,
            120.0,
            Order::Heun,
        );
        s.start.pos.lat = 40.0;
        let t = generate(&s, 0).unwrap();
        let mut d = t.clone();
        derive_kinematics(&mut d);
        for p in &d[1..] {
            assert!((p.accel - 1e-4).abs() < 1e-9);
            assert!((p.cog_rate - 0.05).abs() < 1e-9);
        }
    }

    #[test]
    fn legs_chain_course_and_switch_controls() {
        let t = generate(
            &spec(
                vec![leg(240.0, 5.0, 0.1), leg(240.0, 7.0, 0.0)],
                0.0,
                120.0,
                Order::Heun,
            ),
            0,
        )
        .unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t[2].sog, 7.0);
        assert_eq!(t[2].cog_rate, 0.0);
        assert_relative_eq!(t[2].cog, 24.0, max_relative = 1e-12);
        assert_relative_eq!(t[4].cog, 24.0, max_relative = 1e-12);
    }

    #[test]
    fn noise_is_reproducible_and_calibrated() {
        let base = generate(
            &spec(vec![leg(120.0 * 9999.0, 5.0, 0.0)], 0.0, 120.0, Order::EulerMidpoint),
            0,
        )
        .unwrap();
        assert_eq!(add_noise(&base, 0.0, 1).unwrap(), base);
        let a = add_noise(&base, 0.002, 7).unwrap();
        let b = add_noise(&base, 0.002, 7).unwrap();
        assert_eq!(a, b);
        let dev: Vec<f64> = a.iter().zip(&base).map(|(n, c)| n.lat - c.lat).collect();
        let mean = dev.iter().sum::<f64>() / dev.len() as f64;
        let sd = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (dev.len() - 1) as f64).sqrt();
        assert_eq!(dev.len(), 10_000);
        assert!((sd - 0.002).abs() < 0.1 * 0.002, "{sd}");
    }

    #[test]
    fn chained_fleet_shares_one_vessel() {
        let mut s = spec(vec![leg(600.0, 5.0, 0.0)], 0.0, 120.0, Order::Heun);
        s.vessels = Vessels::Chained { gap_s: 7200.0 };
        let fleet = generate_fleet(&s, 3, 9).unwrap();
        assert!(fleet.iter().all(|(m, _)| *m == 200_000_001));
        assert_eq!(fleet[1].1[0].t - fleet[0].1[0].t, 600.0 + 7200.0);
        let recs = to_ais_records(fleet[0].0, &fleet[0].1, 70);
        assert_eq!(recs.len(), 6);
        assert!((recs[0].sog - 5.0 / KNOTS_TO_MPS).abs() < 1e-12);
    }
}
