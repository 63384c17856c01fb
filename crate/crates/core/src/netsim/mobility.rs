use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::types::{Energy, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn distance(&self, o: &Vec3) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussMarkovParams {
    /// Memory η: 1 keeps velocity fixed, 0 draws it afresh every step.
    pub memory: f64,
    pub mean_speed: f64,
    pub speed_sigma: f64,
    pub heading_sigma: f64,
}

/// Square area of side `side` in the horizontal plane, with a flight band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub side: f64,
    pub altitude_min: f64,
    pub altitude_max: f64,
}

/// ψ_i: kinematic and energy state of one UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub id: NodeId,
    pub position: Vec3,
    pub speed: f64,
    pub heading: f64,
    /// Mean heading the Gauss-Markov process reverts to.
    pub mean_heading: f64,
    pub energy: Energy,
    /// θ_i, stored for completeness.
    pub role_weight: f64,
    pub alive: bool,
}

impl UavState {
    pub fn velocity(&self) -> (f64, f64) {
        (self.speed * self.heading.cos(), self.speed * self.heading.sin())
    }
}

fn wrap_angle(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI);
    t - PI
}

/// Place a UAV uniformly in the area with a random heading and altitude.
pub fn spawn<R: Rng + ?Sized>(
    id: NodeId,
    area: &Area,
    params: &GaussMarkovParams,
    energy: Energy,
    rng: &mut R,
) -> UavState {
    let heading = rng.random_range(-PI..PI);
    let z = if area.altitude_max > area.altitude_min {
        rng.random_range(area.altitude_min..=area.altitude_max)
    } else {
        area.altitude_min
    };
    UavState {
        id,
        position: Vec3::new(rng.random_range(0.0..=area.side), rng.random_range(0.0..=area.side), z),
        speed: params.mean_speed,
        heading,
        mean_heading: heading,
        energy,
        role_weight: 1.0,
        alive: true,
    }
}

/// One Gauss-Markov step of length `dt`.
///
/// speed' = η·speed + (1−η)·mean + √(1−η²)·σ_s·N and the same form for the
/// heading around its mean. Position is integrated with the new velocity and
/// reflected at the area boundary; a reflection mirrors both the heading and
/// the mean heading so the process keeps moving inward. Altitude is held.
pub fn step_mobility<R: Rng + ?Sized>(
    state: &UavState,
    dt: f64,
    params: &GaussMarkovParams,
    area: &Area,
    rng: &mut R,
) -> UavState {
    let mut s = state.clone();
    if !s.alive {
        return s;
    }
    let eta = params.memory;
    let noise = (1.0 - eta * eta).max(0.0).sqrt();
    let ns: f64 = rng.sample(StandardNormal);
    let nh: f64 = rng.sample(StandardNormal);
    s.speed = (eta * s.speed + (1.0 - eta) * params.mean_speed + noise * params.speed_sigma * ns).max(0.0);
    // η·h + (1−η)·h̄ written relative to h̄ so the blend is correct across ±π.
    let offset = wrap_angle(s.heading - s.mean_heading);
    s.heading = wrap_angle(s.mean_heading + eta * offset + noise * params.heading_sigma * nh);

    let (vx, vy) = s.velocity();
    let (x, fx) = reflect_axis(s.position.x + vx * dt, area.side);
    let (y, fy) = reflect_axis(s.position.y + vy * dt, area.side);
    if fx {
        s.heading = wrap_angle(PI - s.heading);
        s.mean_heading = wrap_angle(PI - s.mean_heading);
    }
    if fy {
        s.heading = wrap_angle(-s.heading);
        s.mean_heading = wrap_angle(-s.mean_heading);
    }
    s.position.x = x;
    s.position.y = y;
    s.position.z = s.position.z.clamp(area.altitude_min, area.altitude_max);
    s
}

/// Fold `v` into [0, side]. The flag is set when the number of wall hits is odd.
fn reflect_axis(v: f64, side: f64) -> (f64, bool) {
    if (0.0..=side).contains(&v) {
        return (v, false);
    }
    let period = 2.0 * side;
    let m = v.rem_euclid(period);
    let folded = if m > side { period - m } else { m };
    let hits = if v < 0.0 { ((-v) / side).floor() as i64 + 1 } else { (v / side).floor() as i64 };
    (folded.clamp(0.0, side), hits % 2 == 1)
}
