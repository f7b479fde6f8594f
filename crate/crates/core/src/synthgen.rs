//! Synthetic maneuver generation from a ground-truth whole-ship model.
//!
//! Commands are decided at sample boundaries from the simulated (noise-free)
//! state, then held for one sample period. Noise is added afterwards to the
//! pose and velocity channels only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::{config_matrix, InputCommand, ThrusterModel};
use crate::dataio::{Dataset, ManeuverLog, DEFAULT_DT};
use crate::model::{step_ship, Dynamics, ShipParams22, ShipState};
use crate::{Error, Result};

/// Run length that gives 366 samples per maneuver at 0.2 s, 4392 in total
/// for the standard set.
pub const DEFAULT_DURATION: f64 = 73.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManeuverKind {
    StraightLine,
    Zigzag,
    TurningCircle,
}

/// One maneuver. Angles are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverPlan {
    #[serde(default)]
    pub label: String,
    pub kind: ManeuverKind,
    pub rps: f64,
    #[serde(default)]
    pub zigzag_deviation: f64,
    #[serde(default)]
    pub zigzag_initial_angle: f64,
    #[serde(default)]
    pub circle_angle: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_duration() -> f64 {
    DEFAULT_DURATION
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl ManeuverPlan {
    pub fn straight_line(rps: f64) -> Self {
        Self {
            label: format!("straight_{rps}rps"),
            kind: ManeuverKind::StraightLine,
            rps,
            zigzag_deviation: 0.0,
            zigzag_initial_angle: 0.0,
            circle_angle: 0.0,
            duration: DEFAULT_DURATION,
            dt: DEFAULT_DT,
        }
    }

    /// `+deviation±angle` zigzag; the sign of `initial_angle` sets the first
    /// command.
    pub fn zigzag(rps: f64, deviation: f64, initial_angle: f64) -> Self {
        Self {
            label: format!("zigzag_{deviation:+}{initial_angle:+}_{rps}rps"),
            kind: ManeuverKind::Zigzag,
            rps,
            zigzag_deviation: deviation,
            zigzag_initial_angle: initial_angle,
            circle_angle: 0.0,
            duration: DEFAULT_DURATION,
            dt: DEFAULT_DT,
        }
    }

    pub fn turning_circle(rps: f64, angle: f64) -> Self {
        Self {
            label: format!("circle_{angle}deg_{rps}rps"),
            kind: ManeuverKind::TurningCircle,
            rps,
            zigzag_deviation: 0.0,
            zigzag_initial_angle: 0.0,
            circle_angle: angle,
            duration: DEFAULT_DURATION,
            dt: DEFAULT_DT,
        }
    }

    pub fn with_timing(mut self, duration: f64, dt: f64) -> Self {
        self.duration = duration;
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Validation(format!("plan `{}`: {msg}", self.label)));
        if !(self.rps >= 0.0) || !self.rps.is_finite() {
            return bad("rps must be non-negative");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if !(self.duration >= 10.0 * self.dt) || !self.duration.is_finite() {
            return bad("duration must cover at least 10 samples");
        }
        match self.kind {
            ManeuverKind::Zigzag => {
                if !(self.zigzag_deviation > 0.0) {
                    return bad("zigzag deviation must be positive");
                }
                if !(self.zigzag_initial_angle != 0.0) || !self.zigzag_initial_angle.is_finite() {
                    return bad("zigzag initial angle must be non-zero");
                }
            }
            ManeuverKind::TurningCircle => {
                if !(self.circle_angle != 0.0) || !self.circle_angle.is_finite() {
                    return bad("circle angle must be non-zero");
                }
            }
            ManeuverKind::StraightLine => {}
        }
        Ok(())
    }

    /// Samples in the log, including the initial state.
    pub fn samples(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }
}

/// Measurement noise standard deviations and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// `[x (m), y (m), psi (rad)]`
    pub pose_sigma: [f64; 3],
    /// `[u (m/s), v (m/s), r (rad/s)]`
    pub vel_sigma: [f64; 3],
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .pose_sigma
            .iter()
            .chain(&self.vel_sigma)
            .any(|s| !(*s >= 0.0) || !s.is_finite())
        {
            return Err(Error::Validation("noise deviations must be non-negative".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.pose_sigma.iter().chain(&self.vel_sigma).all(|s| *s == 0.0)
    }
}

/// Scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub maneuvers: Vec<ManeuverPlan>,
    #[serde(default)]
    pub noise: NoiseSpec,
}

/// Sign of the yaw moment produced by `alpha` on both pods.
fn yaw_direction(thr: &ThrusterModel, alpha: f64) -> f64 {
    let b = config_matrix(alpha, alpha, &thr.geometry);
    let s = b[(2, 0)] + b[(2, 1)];
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Closed-loop zigzag / fixed-angle schedule.
struct Controller {
    kind: ManeuverKind,
    rps: f64,
    angle: f64,
    deviation: f64,
    psi0: f64,
    direction: f64,
}

impl Controller {
    fn new(plan: &ManeuverPlan, thr: &ThrusterModel, psi0: f64) -> Self {
        let angle = match plan.kind {
            ManeuverKind::StraightLine => 0.0,
            ManeuverKind::Zigzag => plan.zigzag_initial_angle.to_radians(),
            ManeuverKind::TurningCircle => plan.circle_angle.to_radians(),
        };
        Self {
            kind: plan.kind,
            rps: plan.rps,
            angle,
            deviation: plan.zigzag_deviation.to_radians(),
            psi0,
            direction: yaw_direction(thr, angle),
        }
    }

    fn command(&mut self, state: &ShipState) -> InputCommand {
        if self.kind == ManeuverKind::Zigzag && (state.pose.psi - self.psi0) * self.direction > self.deviation {
            self.angle = -self.angle;
            self.direction = -self.direction;
        }
        InputCommand::new(self.rps, self.rps, self.angle, self.angle)
    }
}

/// Noise-free closed-loop run. Returns the states and the command applied
/// after each (the last one repeated so both series have equal length).
pub fn simulate_plan<D: Dynamics + ?Sized>(
    plan: &ManeuverPlan,
    dynamics: &D,
    thr: &ThrusterModel,
    x0: &ShipState,
) -> Result<(Vec<ShipState>, Vec<InputCommand>)> {
    plan.validate()?;
    let n = plan.samples();
    let mut ctl = Controller::new(plan, thr, x0.pose.psi);
    let mut states = Vec::with_capacity(n);
    let mut cmds = Vec::with_capacity(n);
    let mut state = *x0;
    for k in 0..n {
        let cmd = ctl.command(&state);
        states.push(state);
        cmds.push(cmd);
        if k + 1 < n {
            state = step_ship(dynamics, thr, &state, &cmd, plan.dt).map_err(|e| {
                log::error!("maneuver `{}` ({:?}, {} RPS) diverged at step {k}", plan.label, plan.kind, plan.rps);
                match e {
                    Error::IntegrationBlowup { .. } => Error::IntegrationBlowup { step: k },
                    other => other,
                }
            })?;
        }
    }
    Ok((states, cmds))
}

fn noisy(states: &mut [ShipState], noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Result<()> {
    if noise.is_zero() {
        return Ok(());
    }
    let normal = |s: f64| Normal::new(0.0, s).map_err(|e| Error::Validation(e.to_string()));
    let pose: Vec<Normal<f64>> = noise.pose_sigma.iter().map(|s| normal(*s)).collect::<Result<_>>()?;
    let vel: Vec<Normal<f64>> = noise.vel_sigma.iter().map(|s| normal(*s)).collect::<Result<_>>()?;
    for s in states.iter_mut() {
        s.pose.x += pose[0].sample(rng);
        s.pose.y += pose[1].sample(rng);
        s.pose.psi += pose[2].sample(rng);
        s.vel.u += vel[0].sample(rng);
        s.vel.v += vel[1].sample(rng);
        s.vel.r += vel[2].sample(rng);
    }
    Ok(())
}

/// Per-maneuver RNG: one ChaCha stream per maneuver index.
fn maneuver_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn generate_indexed<D: Dynamics + ?Sized>(
    plan: &ManeuverPlan,
    dynamics: &D,
    thr: &ThrusterModel,
    x0: &ShipState,
    noise: &NoiseSpec,
    index: usize,
) -> Result<ManeuverLog> {
    noise.validate()?;
    let (mut states, cmds) = simulate_plan(plan, dynamics, thr, x0)?;
    noisy(&mut states, noise, &mut maneuver_rng(noise.seed, index))?;
    ManeuverLog::from_states(plan.label.clone(), plan.dt, 0.0, cmds, &states)
}

/// Runs one plan and returns the measured log.
pub fn generate_maneuver<D: Dynamics + ?Sized>(
    plan: &ManeuverPlan,
    true_p: &D,
    thr: &ThrusterModel,
    x0: &ShipState,
    noise: &NoiseSpec,
) -> Result<ManeuverLog> {
    generate_indexed(plan, true_p, thr, x0, noise, 0)
}

/// Runs every plan from rest at the origin, in parallel.
pub fn generate_dataset<D: Dynamics + ?Sized>(
    plans: &[ManeuverPlan],
    true_p: &D,
    thr: &ThrusterModel,
    noise: &NoiseSpec,
) -> Result<Dataset> {
    thr.validate()?;
    let x0 = ShipState::at_rest();
    let logs = plans
        .par_iter()
        .enumerate()
        .map(|(i, plan)| generate_indexed(plan, true_p, thr, &x0, noise, i))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(logs)
}

/// The twelve estimation maneuvers: straight lines and +20+20 zigzags at
/// 3, 5, 7 and 10 RPS, turning circles at 10, 20 and 30 degrees at 5 RPS,
/// and a 30 degree circle at 10 RPS.
pub fn standard_12_plans() -> Vec<ManeuverPlan> {
    let speeds = [3.0, 5.0, 7.0, 10.0];
    let mut plans: Vec<ManeuverPlan> = speeds.iter().map(|&n| ManeuverPlan::straight_line(n)).collect();
    plans.extend(speeds.iter().map(|&n| ManeuverPlan::zigzag(n, 20.0, 20.0)));
    plans.extend([10.0, 20.0, 30.0].iter().map(|&a| ManeuverPlan::turning_circle(5.0, a)));
    plans.push(ManeuverPlan::turning_circle(10.0, 30.0));
    plans
}

pub fn standard_12_maneuvers(true_p: &ShipParams22, thr: &ThrusterModel, noise: &NoiseSpec) -> Result<Dataset> {
    generate_dataset(&standard_12_plans(), true_p, thr, noise)
}

/// Validation set: +A±A zigzags for A in {10, 20, 30} at four shaft speeds,
/// plus four turning circles not used for estimation.
pub fn validation_plans() -> Vec<ManeuverPlan> {
    let mut plans = Vec::new();
    for &n in &[3.0, 5.0, 7.0, 10.0] {
        for &a in &[10.0, 20.0, 30.0] {
            plans.push(ManeuverPlan::zigzag(n, a, a));
            plans.push(ManeuverPlan::zigzag(n, a, -a));
        }
    }
    plans.push(ManeuverPlan::turning_circle(3.0, 25.0));
    plans.push(ManeuverPlan::turning_circle(5.0, -20.0));
    plans.push(ManeuverPlan::turning_circle(7.0, 15.0));
    plans.push(ManeuverPlan::turning_circle(10.0, -25.0));
    plans
}

/// The +30+30 zigzag at 5 RPS used as the held-out check.
pub fn held_out_plan() -> ManeuverPlan {
    ManeuverPlan::zigzag(5.0, 30.0, 30.0)
}
