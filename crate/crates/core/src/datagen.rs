//! Synthetic labeled datasets: 2-D vessel trajectories near a harbor and a
//! 4-D car-following scenario on a slope.
//!
//! Naval coordinates are in units of 10 m on a roughly 1 km square map.
//!
//! Every signal draws from its own generator seeded by `(seed, index)`, so the
//! output does not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::derive_seed;
use crate::signals::{Label, LabeledDataset, Signal};

/// A point the vessel passes at time `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub time: usize,
}

impl Waypoint {
    pub const fn new(x: f64, y: f64, time: usize) -> Waypoint {
        Waypoint { x, y, time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NavalFamily {
    /// Open sea straight to the harbor.
    Normal,
    /// Detour past the island, then the harbor.
    Island,
    /// Approach the passage, then turn back to open sea.
    Passage,
}

impl NavalFamily {
    pub fn label(self) -> Label {
        match self {
            NavalFamily::Normal => Label::Positive,
            NavalFamily::Island | NavalFamily::Passage => Label::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavalGenConfig {
    /// Normal trajectories.
    pub normal: usize,
    /// Anomalous trajectories, alternating between the island and passage families.
    pub anomalous: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Standard deviation of the per-sample position noise.
    pub noise: f64,
    /// Uniform jitter applied to every waypoint coordinate.
    pub position_jitter: f64,
    /// Uniform integer jitter applied to interior waypoint times.
    pub time_jitter: usize,
    /// Waypoint times are given for a 60-step horizon and rescaled.
    pub normal_route: Vec<Waypoint>,
    pub island_route: Vec<Waypoint>,
    pub passage_route: Vec<Waypoint>,
}

impl Default for NavalGenConfig {
    fn default() -> Self {
        NavalGenConfig {
            normal: 100,
            anomalous: 100,
            horizon: 60,
            seed: 0,
            noise: 0.5,
            position_jitter: 30.0,
            time_jitter: 3,
            normal_route: vec![
                Waypoint::new(50.0, 500.0, 0),
                Waypoint::new(450.0, 320.0, 30),
                Waypoint::new(800.0, 200.0, 60),
            ],
            island_route: vec![
                Waypoint::new(50.0, 500.0, 0),
                Waypoint::new(420.0, 100.0, 28),
                Waypoint::new(800.0, 200.0, 60),
            ],
            passage_route: vec![
                Waypoint::new(50.0, 500.0, 0),
                Waypoint::new(620.0, 440.0, 32),
                Waypoint::new(150.0, 600.0, 60),
            ],
        }
    }
}

impl NavalGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.normal == 0 || self.anomalous == 0 {
            return Err(Error::Config(
                "naval generator needs at least one signal per class".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::Config("naval horizon must be positive".into()));
        }
        if !(self.noise >= 0.0 && self.position_jitter >= 0.0) {
            return Err(Error::Config(
                "noise and jitter must be non-negative".into(),
            ));
        }
        for route in [&self.normal_route, &self.island_route, &self.passage_route] {
            if route.len() < 2
                || route[0].time != 0
                || route.windows(2).any(|w| w[0].time >= w[1].time)
            {
                return Err(Error::Config(
                    "routes need two or more waypoints with increasing times starting at 0".into(),
                ));
            }
        }
        Ok(())
    }

    fn route(&self, family: NavalFamily) -> &[Waypoint] {
        match family {
            NavalFamily::Normal => &self.normal_route,
            NavalFamily::Island => &self.island_route,
            NavalFamily::Passage => &self.passage_route,
        }
    }

    /// Family of the signal at `index`: normals first, then alternating anomalies.
    pub fn family(&self, index: usize) -> NavalFamily {
        if index < self.normal {
            NavalFamily::Normal
        } else if (index - self.normal).is_multiple_of(2) {
            NavalFamily::Island
        } else {
            NavalFamily::Passage
        }
    }
}

fn interpolate(points: &[(f64, f64, usize)], horizon: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(horizon + 1);
    for seg in points.windows(2) {
        let (x0, y0, t0) = seg[0];
        let (x1, y1, t1) = seg[1];
        let len = (t1 - t0) as f64;
        for t in t0..t1 {
            let a = (t - t0) as f64 / len;
            rows.push(vec![x0 + a * (x1 - x0), y0 + a * (y1 - y0)]);
        }
    }
    let &(x, y, _) = points.last().expect("route has waypoints");
    rows.push(vec![x, y]);
    rows
}

fn naval_signal(cfg: &NavalGenConfig, index: usize) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, index as u64));
    let route = cfg.route(cfg.family(index));
    let scale = cfg.horizon as f64 / route.last().map_or(1, |w| w.time) as f64;
    let last = route.len() - 1;
    let mut points: Vec<(f64, f64, usize)> = Vec::with_capacity(route.len());
    for (i, w) in route.iter().enumerate() {
        let mut jitter = || {
            if cfg.position_jitter > 0.0 {
                rng.random_range(-cfg.position_jitter..=cfg.position_jitter)
            } else {
                0.0
            }
        };
        let (dx, dy) = (jitter(), jitter());
        let mut time = if i == last {
            cfg.horizon
        } else {
            (w.time as f64 * scale).round() as usize
        };
        if i != 0 && i != last && cfg.time_jitter > 0 {
            let j = cfg.time_jitter as i64;
            time = (time as i64 + rng.random_range(-j..=j)).max(0) as usize;
        }
        // keep segment times strictly increasing inside [0, horizon]
        let lo = points.last().map_or(0, |p| p.2 + 1);
        let hi = cfg.horizon.saturating_sub(last - i);
        let time = if i == 0 {
            0
        } else {
            time.clamp(lo, hi.max(lo))
        };
        points.push((w.x + dx, w.y + dy, time));
    }
    let mut rows = interpolate(&points, cfg.horizon);
    if cfg.noise > 0.0 {
        let normal = Normal::new(0.0, cfg.noise).expect("noise is finite");
        for row in &mut rows {
            for v in row.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    Signal::from_rows(format!("naval-{index:05}"), &rows).expect("generated rows are rectangular")
}

pub fn generate_naval(cfg: &NavalGenConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let total = cfg.normal + cfg.anomalous;
    let signals: Vec<Signal> = (0..total)
        .into_par_iter()
        .map(|i| naval_signal(cfg, i))
        .collect();
    let labels = (0..total).map(|i| cfg.family(i).label()).collect();
    LabeledDataset::new(signals, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverPolicy {
    /// Constant throttle throughout.
    Aggressive,
    /// Light braking at the pothole, full stop when a pedestrian crosses.
    Safe,
}

impl DriverPolicy {
    pub fn label(self) -> Label {
        match self {
            DriverPolicy::Safe => Label::Positive,
            DriverPolicy::Aggressive => Label::Negative,
        }
    }
}

/// Two cars on a straight road inclined by `slope` radians. The observer
/// follows at constant speed; the signals are the leader's position and
/// velocity relative to the observer along the horizontal `y` and vertical
/// `z` axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrivingGenConfig {
    pub safe: usize,
    pub aggressive: usize,
    pub horizon: usize,
    /// Sampling period in seconds.
    pub dt: f64,
    pub seed: u64,
    pub slope: f64,
    /// White measurement noise on positions; velocities get a tenth of it.
    pub noise: f64,
    /// Standard deviation of a per-signal constant sensor offset, split
    /// between positions and velocities like `noise`.
    pub sensor_bias: f64,
    pub ego_speed: f64,
    pub initial_gap: f64,
    pub initial_speed: f64,
    pub ego_accel: f64,
    /// Leader throttle, drawn uniformly; both policies use it outside braking.
    pub accel: (f64, f64),
    /// Distance from the start, along the road, to the pothole.
    pub pothole_at: f64,
    pub brake_decel: f64,
    /// Braking duration in seconds, drawn uniformly.
    pub brake_duration: (f64, f64),
    pub pedestrian_probability: f64,
    pub crossing_at: f64,
    pub stop_decel: f64,
    pub stop_duration: f64,
}

impl Default for DrivingGenConfig {
    fn default() -> Self {
        DrivingGenConfig {
            safe: 150,
            aggressive: 150,
            horizon: 476,
            dt: 0.05,
            seed: 0,
            slope: 0.1,
            noise: 0.0,
            sensor_bias: 0.2,
            ego_speed: 8.0,
            initial_gap: 15.0,
            initial_speed: 8.0,
            ego_accel: 0.5,
            accel: (0.3, 0.9),
            pothole_at: 35.0,
            brake_decel: 2.0,
            brake_duration: (0.8, 1.6),
            pedestrian_probability: 0.5,
            crossing_at: 90.0,
            stop_decel: 4.0,
            stop_duration: 3.0,
        }
    }
}

impl DrivingGenConfig {
    pub fn validate(&self) -> Result<()> {
        let ranges = [self.accel, self.brake_duration];
        if self.safe == 0 || self.aggressive == 0 {
            return Err(Error::Config(
                "driving generator needs at least one signal per class".into(),
            ));
        }
        if self.horizon == 0 || !(self.dt > 0.0) {
            return Err(Error::Config(
                "driving horizon and dt must be positive".into(),
            ));
        }
        if ranges.iter().any(|(lo, hi)| !(lo <= hi))
            || !(self.noise >= 0.0 && self.sensor_bias >= 0.0)
        {
            return Err(Error::Config("invalid driving generator ranges".into()));
        }
        if !(0.0..=1.0).contains(&self.pedestrian_probability) {
            return Err(Error::Config(
                "pedestrian probability must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn policy(&self, index: usize) -> DriverPolicy {
        if index < self.safe {
            DriverPolicy::Safe
        } else {
            DriverPolicy::Aggressive
        }
    }
}

/// Leader speed and distance along the road for one driver.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingTrace {
    pub distance: Vec<f64>,
    pub speed: Vec<f64>,
    pub ego_distance: Vec<f64>,
    pub ego_speed: Vec<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Noise-free kinematics of one driver.
pub fn simulate_driver(
    cfg: &DrivingGenConfig,
    policy: DriverPolicy,
    rng: &mut ChaCha8Rng,
) -> DrivingTrace {
    let throttle = uniform(rng, cfg.accel);
    let brake_for = uniform(rng, cfg.brake_duration);
    let pedestrian = rng.random_bool(cfg.pedestrian_probability);
    let n = cfg.horizon + 1;
    let mut trace = DrivingTrace {
        distance: Vec::with_capacity(n),
        speed: Vec::with_capacity(n),
        ego_distance: Vec::with_capacity(n),
        ego_speed: Vec::with_capacity(n),
    };
    let (mut s, mut v) = (cfg.initial_gap, cfg.initial_speed);
    let (mut se, mut ve) = (0.0, cfg.ego_speed);
    // seconds spent braking at the pothole / stopped at the crossing
    let (mut braked, mut stopped) = (0.0, 0.0);
    for _ in 0..n {
        trace.distance.push(s);
        trace.speed.push(v);
        trace.ego_distance.push(se);
        trace.ego_speed.push(ve);
        let accel = match policy {
            DriverPolicy::Aggressive => throttle,
            DriverPolicy::Safe => {
                if s >= cfg.pothole_at && braked < brake_for {
                    braked += cfg.dt;
                    -cfg.brake_decel
                } else if pedestrian && s >= cfg.crossing_at && stopped < cfg.stop_duration {
                    if v <= 0.0 {
                        stopped += cfg.dt;
                    }
                    -cfg.stop_decel
                } else {
                    throttle
                }
            }
        };
        v = (v + accel * cfg.dt).max(0.0);
        s += v * cfg.dt;
        ve += cfg.ego_accel * cfg.dt;
        se += ve * cfg.dt;
    }
    trace
}

fn driving_signal(cfg: &DrivingGenConfig, index: usize) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, index as u64));
    let trace = simulate_driver(cfg, cfg.policy(index), &mut rng);
    let (cos, sin) = (cfg.slope.cos(), cfg.slope.sin());
    let pos_noise = Normal::new(0.0, cfg.noise).expect("noise is finite");
    let vel_noise = Normal::new(0.0, cfg.noise * 0.1).expect("noise is finite");
    let pos_bias = Normal::new(0.0, cfg.sensor_bias).expect("bias is finite");
    let vel_bias = Normal::new(0.0, cfg.sensor_bias * 0.1).expect("bias is finite");
    let bias = [
        pos_bias.sample(&mut rng),
        pos_bias.sample(&mut rng),
        vel_bias.sample(&mut rng),
        vel_bias.sample(&mut rng),
    ];
    let rows: Vec<Vec<f64>> = (0..=cfg.horizon)
        .map(|t| {
            let ds = trace.distance[t] - trace.ego_distance[t];
            let dv = trace.speed[t] - trace.ego_speed[t];
            let mut row = vec![ds * cos, ds * sin, dv * cos, dv * sin];
            for (v, b) in row.iter_mut().zip(&bias) {
                *v += b;
            }
            if cfg.noise > 0.0 {
                row[0] += pos_noise.sample(&mut rng);
                row[1] += pos_noise.sample(&mut rng);
                row[2] += vel_noise.sample(&mut rng);
                row[3] += vel_noise.sample(&mut rng);
            }
            row
        })
        .collect();
    Signal::from_rows(format!("drive-{index:05}"), &rows).expect("generated rows are rectangular")
}

pub fn generate_driving(cfg: &DrivingGenConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let total = cfg.safe + cfg.aggressive;
    let signals: Vec<Signal> = (0..total)
        .into_par_iter()
        .map(|i| driving_signal(cfg, i))
        .collect();
    let labels = (0..total).map(|i| cfg.policy(i).label()).collect();
    LabeledDataset::new(signals, labels)
}
