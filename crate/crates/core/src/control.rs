//! Pure pursuit steering and the kinematic bicycle model.

use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::geom::{VehiclePoint, WorldPoint};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("goal point coincides with the vehicle")]
    GoalAtOrigin,
}

/// Chassis and actuation parameters. The defaults are modeling choices for a
/// go-kart-sized vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_steer: f64,
    pub commanded_speed: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 1.05,
            max_steer: 0.45,
            commanded_speed: 6.85,
        }
    }
}

impl VehicleParams {
    /// Checks the parameter invariants, naming the first one violated.
    pub fn check(&self) -> Result<(), &'static str> {
        if !(self.wheelbase.is_finite() && self.wheelbase > 0.0) {
            return Err("wheelbase > 0");
        }
        if !(self.max_steer > 0.0 && self.max_steer < FRAC_PI_2) {
            return Err("0 < max_steer < pi/2");
        }
        if !(self.commanded_speed.is_finite() && self.commanded_speed > 0.0) {
            return Err("commanded_speed > 0");
        }
        Ok(())
    }
}

/// Planar pose and speed in the world frame. The pose refers to the rear
/// axle, which is also where the LiDAR is mounted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Counterclockwise from world `+x`, in `(-π, π]`.
    pub heading: f64,
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
            speed,
        }
    }

    pub fn position(&self) -> WorldPoint {
        WorldPoint::new(self.x, self.y)
    }

    /// World coordinates of a vehicle-frame point.
    pub fn to_world(&self, p: VehiclePoint) -> WorldPoint {
        let f = WorldPoint::from_angle(self.heading);
        let right = WorldPoint::new(f.y, -f.x);
        self.position() + f * p.forward + right * p.right
    }

    /// Vehicle-frame coordinates of a world point.
    pub fn to_vehicle(&self, p: WorldPoint) -> VehiclePoint {
        let f = WorldPoint::from_angle(self.heading);
        let d = p - self.position();
        VehiclePoint::new(d.dot(f), d.x * f.y - d.y * f.x)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = libm::fmod(angle, TAU);
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Steering angle that puts the rear axle on the circle through `goal`.
/// Positive steers left.
pub fn pure_pursuit_steer(goal: VehiclePoint, params: &VehicleParams) -> Result<f64, ControlError> {
    let d = goal.norm();
    if d == 0.0 || !d.is_finite() {
        return Err(ControlError::GoalAtOrigin);
    }
    let sin_alpha = -goal.right / d;
    let curvature = 2.0 * sin_alpha / d;
    let steer = libm::atan(params.wheelbase * curvature);
    Ok(steer.clamp(-params.max_steer, params.max_steer))
}

/// One forward-Euler step of the kinematic bicycle at the commanded speed.
pub fn step_vehicle(
    state: &VehicleState,
    steer: f64,
    params: &VehicleParams,
    dt: f64,
) -> VehicleState {
    let v = params.commanded_speed;
    let yaw_rate = v / params.wheelbase * libm::tan(steer);
    VehicleState {
        x: state.x + v * libm::cos(state.heading) * dt,
        y: state.y + v * libm::sin(state.heading) * dt,
        heading: normalize_angle(state.heading + yaw_rate * dt),
        speed: v,
    }
}
