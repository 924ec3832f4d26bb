//! Expected-displacement models for a vessel moving on a sphere.
//!
//! Three single-step integrators are provided:
//!
//! * [`Order::EulerMidpoint`]: the first-order model used by the first-order
//!   physics loss. Speed includes the `a·dt/2` term and the course is taken
//!   at the Taylor midpoint `ψ + ψ̇·dt/2`.
//! * [`Order::Heun`]: predictor-corrector averaging the position rates at the
//!   start of the step and at the Euler-predicted end state.
//! * [`Order::ForwardEuler`]: the plain forward step (rates at the start of
//!   the step only). This is Heun's predictor on its own.
//!
//! Each integrator accepts either the small-angle (flat step, `1/cos(lat)`
//! longitude scale) or the great-circle (spherical destination point)
//! displacement approximation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{angular_distance, canonical_lon, wrap_course, EarthModel, GeoPoint};
use crate::scalar::Scalar;

/// Below this `cos(lat)` the `1/cos(lat)` longitude scale is refused.
pub const MIN_COS_LAT: f64 = 1e-3;

/// Position plus the kinematic inputs held constant over a prediction step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState<T> {
    pub pos: GeoPoint<T>,
    /// Speed over ground, m/s.
    pub sog: T,
    /// Course over ground, degrees clockwise from north.
    pub cog: T,
    /// m/s².
    pub accel: T,
    /// Degrees per second.
    pub cog_rate: T,
}

impl<T: Scalar> KinematicState<T> {
    /// Validating constructor: wraps the course and rejects negative or
    /// non-finite speed.
    pub fn new(lat: T, lon: T, sog: T, cog: T, accel: T, cog_rate: T) -> Result<Self> {
        let pos = GeoPoint::new(lat, lon)?;
        if !sog.is_finite() || sog < T::zero() {
            return Err(Error::InvalidValue(format!("speed over ground {sog} must be >= 0")));
        }
        if !accel.is_finite() || !cog_rate.is_finite() {
            return Err(Error::InvalidValue("non-finite acceleration or course rate".into()));
        }
        Ok(KinematicState {
            pos,
            sog,
            cog: wrap_course(cog)?,
            accel,
            cog_rate,
        })
    }

    /// Same state with acceleration and course rate zeroed: the vessel's
    /// instantaneous motion.
    fn frozen(self) -> Self {
        KinematicState {
            accel: T::zero(),
            cog_rate: T::zero(),
            ..self
        }
    }
}

/// Change in latitude and longitude over one step, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement<T> {
    pub dlat: T,
    pub dlon: T,
}

impl<T: Scalar> Displacement<T> {
    pub fn zero() -> Self {
        Displacement {
            dlat: T::zero(),
            dlon: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    ForwardEuler,
    EulerMidpoint,
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approx {
    #[default]
    SmallAngle,
    GreatCircle,
}

/// Second argument of the great-circle longitude `atan2`.
///
/// `Standard` uses `cos d − sin φ1·sin φ2` with the destination latitude
/// `φ2`; `Literal` uses `cos d − sin² φ1`, which is how the formula is
/// sometimes transcribed and is kept only for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreatCircleForm {
    #[default]
    Standard,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    pub order: Order,
    pub approx: Approx,
}

impl Scheme {
    pub const fn new(order: Order, approx: Approx) -> Self {
        Scheme { order, approx }
    }
}

/// How the kinematic state evolves across a multi-step rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rollout {
    /// Every step reuses the unchanged starting state, so all steps produce
    /// the same displacement.
    #[default]
    Literal,
    /// Position, speed (`+a·dt`) and course (`+ψ̇·dt`) advance each step.
    Propagated,
}

fn check_dt<T: Scalar>(dt: T) -> Result<()> {
    if dt > T::zero() && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")))
    }
}

fn cos_lat_checked<T: Scalar>(lat: T) -> Result<T> {
    let c = lat.radians().cos();
    if c < T::lit(MIN_COS_LAT) {
        return Err(Error::Domain(format!(
            "latitude {lat} too close to a pole for the small-angle longitude scale"
        )));
    }
    Ok(c)
}

/// Course at the middle of the step from a first-order Taylor expansion, in
/// radians. Not wrapped: it only ever feeds trigonometric functions.
pub fn midpoint_course_rad<T: Scalar>(cog: T, cog_rate: T, dt: T) -> T {
    (cog + T::half() * cog_rate * dt).radians()
}

/// Flat-step displacement with the `1/cos(lat)` longitude scale.
pub fn displacement_small_angle<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    earth: EarthModel<T>,
) -> Result<Displacement<T>> {
    check_dt(dt)?;
    let cos_lat = cos_lat_checked(s.pos.lat)?;
    let psi = midpoint_course_rad(s.cog, s.cog_rate, dt);
    let factor = (dt / earth.radius_m).degrees();
    let ramp = T::half() * s.accel * dt;
    let (sin_p, cos_p) = psi.sin_cos();
    Ok(Displacement {
        dlat: (s.sog * cos_p + ramp * cos_p) * factor,
        dlon: (s.sog * sin_p + ramp * sin_p) * factor / cos_lat,
    })
}

/// Spherical destination-point displacement over angular distance
/// `d = (v + a·dt/2)·dt / R` along the midpoint course.
pub fn displacement_great_circle<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    earth: EarthModel<T>,
) -> Result<Displacement<T>> {
    displacement_great_circle_form(s, dt, earth, GreatCircleForm::Standard)
}

pub fn displacement_great_circle_form<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    earth: EarthModel<T>,
    form: GreatCircleForm,
) -> Result<Displacement<T>> {
    check_dt(dt)?;
    let d = angular_distance(s.sog, s.accel, dt, earth);
    if d == T::zero() {
        // asin(sin φ) need not round-trip exactly
        return Ok(Displacement::zero());
    }
    let psi = midpoint_course_rad(s.cog, s.cog_rate, dt);
    let phi1 = s.pos.lat.radians();
    let (sin_d, cos_d) = d.sin_cos();
    let (sin_phi1, cos_phi1) = phi1.sin_cos();
    let (sin_p, cos_p) = psi.sin_cos();
    let phi2 = (sin_phi1 * cos_d + cos_phi1 * sin_d * cos_p).asin();
    let dlat_rad = phi2 - phi1;
    let second = match form {
        GreatCircleForm::Standard => cos_d - sin_phi1 * phi2.sin(),
        GreatCircleForm::Literal => cos_d - sin_phi1 * sin_phi1,
    };
    let dlon_rad = (sin_p * sin_d * cos_phi1).atan2(second);
    Ok(Displacement {
        dlat: dlat_rad.degrees(),
        dlon: dlon_rad.degrees(),
    })
}

/// Instantaneous position rates `(dlat/dt, dlon/dt)` in degrees per second.
pub fn state_derivative<T: Scalar>(s: &KinematicState<T>, earth: EarthModel<T>) -> Result<(T, T)> {
    let cos_lat = cos_lat_checked(s.pos.lat)?;
    let (sin_p, cos_p) = s.cog.radians().sin_cos();
    let r = earth.radius_m;
    Ok(((s.sog * cos_p / r).degrees(), (s.sog * sin_p / (r * cos_lat)).degrees()))
}

/// Position rate under a displacement approximation. For the small-angle
/// model this is exactly [`state_derivative`]; for the great-circle model it
/// is the mean rate along the great circle leaving the current position at
/// the current course and speed for `dt` seconds.
pub fn state_rate<T: Scalar>(s: &KinematicState<T>, dt: T, earth: EarthModel<T>, approx: Approx) -> Result<(T, T)> {
    match approx {
        Approx::SmallAngle => state_derivative(s, earth),
        Approx::GreatCircle => {
            let d = displacement_great_circle(&s.frozen(), dt, earth)?;
            Ok((d.dlat / dt, d.dlon / dt))
        }
    }
}

/// Plain forward Euler step: rates at the start of the step times `dt`.
pub fn displacement_forward_euler<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    earth: EarthModel<T>,
    approx: Approx,
) -> Result<Displacement<T>> {
    check_dt(dt)?;
    let (rlat, rlon) = state_rate(s, dt, earth, approx)?;
    Ok(Displacement {
        dlat: rlat * dt,
        dlon: rlon * dt,
    })
}

/// Heun predictor-corrector step with small-angle rates.
pub fn displacement_heun<T: Scalar>(s: &KinematicState<T>, dt: T, earth: EarthModel<T>) -> Result<Displacement<T>> {
    displacement_heun_with(s, dt, earth, Approx::SmallAngle)
}

/// Heun predictor-corrector step. The predicted end state sits at the Euler
/// position with speed `v + a·dt` and course `ψ + ψ̇·dt`; the same
/// approximation is used for both rate evaluations.
pub fn displacement_heun_with<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    earth: EarthModel<T>,
    approx: Approx,
) -> Result<Displacement<T>> {
    check_dt(dt)?;
    let (r0lat, r0lon) = state_rate(s, dt, earth, approx)?;
    let predicted = KinematicState {
        pos: GeoPoint {
            lat: s.pos.lat + r0lat * dt,
            lon: s.pos.lon + r0lon * dt,
        },
        sog: s.sog + s.accel * dt,
        cog: s.cog + s.cog_rate * dt,
        accel: s.accel,
        cog_rate: s.cog_rate,
    };
    let (r1lat, r1lon) = state_rate(&predicted, dt, earth, approx)?;
    Ok(Displacement {
        dlat: T::half() * (r0lat + r1lat) * dt,
        dlon: T::half() * (r0lon + r1lon) * dt,
    })
}

/// Single-step displacement under `scheme`.
pub fn displacement<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    earth: EarthModel<T>,
    scheme: Scheme,
) -> Result<Displacement<T>> {
    match scheme.order {
        Order::ForwardEuler => displacement_forward_euler(s, dt, earth, scheme.approx),
        Order::EulerMidpoint => match scheme.approx {
            Approx::SmallAngle => displacement_small_angle(s, dt, earth),
            Approx::GreatCircle => displacement_great_circle(s, dt, earth),
        },
        Order::Heun => displacement_heun_with(s, dt, earth, scheme.approx),
    }
}

fn shifted<T: Scalar>(pos: GeoPoint<T>, d: Displacement<T>) -> Result<GeoPoint<T>> {
    let lat = pos.lat + d.dlat;
    if !lat.is_finite() || lat.abs() > T::lit(90.0) {
        return Err(Error::Domain(format!("rollout left the valid latitude range ({lat})")));
    }
    Ok(GeoPoint {
        lat,
        lon: canonical_lon(pos.lon + d.dlon),
    })
}

/// State after one propagated step: position moved by `d`, speed advanced
/// by `a·dt` (floored at zero) and course by `ψ̇·dt` (wrapped).
pub fn advance<T: Scalar>(s: &KinematicState<T>, d: Displacement<T>, dt: T) -> Result<KinematicState<T>> {
    Ok(KinematicState {
        pos: shifted(s.pos, d)?,
        sog: (s.sog + s.accel * dt).max(T::zero()),
        cog: wrap_course(s.cog + s.cog_rate * dt)?,
        accel: s.accel,
        cog_rate: s.cog_rate,
    })
}

/// Per-step expected displacements over `steps` steps.
pub fn expected_displacements<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    steps: usize,
    scheme: Scheme,
    rollout: Rollout,
    earth: EarthModel<T>,
) -> Result<Vec<Displacement<T>>> {
    let mut out = Vec::with_capacity(steps);
    let mut state = *s;
    for _ in 0..steps {
        let d = displacement(&state, dt, earth, scheme)?;
        out.push(d);
        if rollout == Rollout::Propagated {
            state = advance(&state, d, dt)?;
        }
    }
    Ok(out)
}

/// Dead-reckoned positions after each of `steps` steps (the start position
/// is not included).
pub fn dead_reckon<T: Scalar>(
    s: &KinematicState<T>,
    dt: T,
    steps: usize,
    scheme: Scheme,
    rollout: Rollout,
    earth: EarthModel<T>,
) -> Result<Vec<GeoPoint<T>>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("dead reckoning needs at least one step".into()));
    }
    let mut out = Vec::with_capacity(steps);
    match rollout {
        Rollout::Literal => {
            let mut pos = s.pos;
            for _ in 0..steps {
                let d = displacement(s, dt, earth, scheme)?;
                pos = shifted(pos, d)?;
                out.push(pos);
            }
        }
        Rollout::Propagated => {
            let mut state = *s;
            for _ in 0..steps {
                let d = displacement(&state, dt, earth, scheme)?;
                state = advance(&state, d, dt)?;
                out.push(state.pos);
            }
        }
    }
    Ok(out)
}
