//! Parameter estimation: empirical initialization, equation-error (LO) and
//! output-error (GO) least squares, stability constraints, and the
//! LO-then-GO combination over growing maneuver sets.
//!
//! Both estimators compare velocities only. LO anchors every one-step
//! prediction at the measured state. GO rolls the velocity forward from the
//! measured initial velocity with its own predictions, using the logged
//! commands and measured pod angles at each step. Both use the same RK4 step
//! as the generator, so noiseless data at the true parameters gives zero
//! residual up to rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::ThrusterModel;
use crate::dataio::{Dataset, ManeuverLog};
use crate::model::{step_ship, BodyVelocity, Dynamics, ParameterVector, ShipParams22, ShipParams6, ShipState};
use crate::nlp::{solve, ConvergenceReason, NlsProblem, Sense, SolveOptions, SolveReport};
use crate::{Error, Result};

/// Residuals of a diverged rollout are replaced by this value.
pub const RESIDUAL_CLAMP: f64 = 1e6;

/// Hull particulars used for the empirical initial guess.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullSpecs {
    /// Mass (kg).
    pub m: f64,
    /// Length (m).
    #[serde(rename = "L")]
    pub length: f64,
    /// Beam (m).
    #[serde(rename = "B")]
    pub beam: f64,
    /// Draft (m).
    #[serde(rename = "D")]
    pub draft: f64,
    pub rho: f64,
    /// Displacement volume (m³).
    pub dispv: f64,
    #[serde(default)]
    pub x_g: f64,
}

impl HullSpecs {
    /// The 1:20 scale tug.
    pub fn qiuxin_no5() -> Self {
        Self {
            m: 187.6,
            length: 2.152,
            beam: 0.6952,
            draft: 0.2485,
            rho: 1000.0,
            dispv: 0.1876,
            x_g: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("m", self.m),
            ("L", self.length),
            ("B", self.beam),
            ("D", self.draft),
            ("rho", self.rho),
            ("dispv", self.dispv),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("hull `{name}` must be positive, got {v}")));
            }
        }
        if !self.x_g.is_finite() {
            return Err(Error::Validation("hull `x_g` must be finite".into()));
        }
        Ok(())
    }
}

/// Strip-theory added masses and the ellipsoid yaw inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroDerivatives {
    pub x_udot: f64,
    pub y_vdot: f64,
    pub n_rdot: f64,
    pub i_z: f64,
}

pub fn hydrodynamic_derivatives(specs: &HullSpecs) -> Result<HydroDerivatives> {
    use std::f64::consts::PI;
    specs.validate()?;
    let (m, l, b, d, rho) = (specs.m, specs.length, specs.beam, specs.draft, specs.rho);
    let (sa, sb) = (l / 2.0, b / 2.0);
    Ok(HydroDerivatives {
        x_udot: -0.05 * m,
        y_vdot: -0.5 * rho * d * d * l,
        n_rdot: -(0.1 * m * b * b + rho * PI * d * d * l.powi(3)) / 24.0,
        i_z: 4.0 / 15.0 * PI * rho * sa * sb * sb * (sa * sa + sb * sb),
    })
}

/// Mass matrix from the hull specs, every damping coefficient zero.
pub fn init_params_empirical(specs: &HullSpecs) -> Result<ShipParams22> {
    let h = hydrodynamic_derivatives(specs)?;
    let mut a = [0.0; 22];
    a[0] = specs.m - h.x_udot;
    a[1] = specs.m - h.y_vdot;
    a[2] = specs.m * specs.x_g;
    a[3] = specs.m * specs.x_g;
    a[4] = h.i_z - h.n_rdot;
    Ok(ShipParams22::from_array(&a))
}

/// Sign convention for the damping part of the stability constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    Off,
    /// `-X_u > 0` and `(-X_u)(Y_v N_r - Y_r N_v) > 0`.
    #[default]
    SignCorrected,
    /// `X_u > 0` and `X_u (Y_v N_r - Y_r N_v) > 0`, which excludes
    /// dissipative surge damping.
    PaperLiteral,
}

pub const CONSTRAINT_NAMES: [&str; 5] = ["m11", "m22", "m33", "surge_damping", "sway_yaw_damping"];

/// Values that must all be positive.
pub fn stability_constraints(p: &ShipParams22, mode: ConstraintMode) -> [f64; 5] {
    let det = p.y_v * p.n_r - p.y_r * p.n_v;
    let xu = match mode {
        ConstraintMode::PaperLiteral => p.x_u,
        _ => -p.x_u,
    };
    [p.m11, p.m22, p.m33, xu, xu * det]
}

/// A model the estimators can fit.
pub trait EstimableModel: ParameterVector + Serialize {
    fn as_22(&self) -> ShipParams22;
}

impl EstimableModel for ShipParams22 {
    fn as_22(&self) -> ShipParams22 {
        *self
    }
}

impl EstimableModel for ShipParams6 {
    fn as_22(&self) -> ShipParams22 {
        self.embed()
    }
}

/// Point the ridge term shrinks towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RidgeCenter {
    /// `lambda |theta|^2`
    Zero,
    /// `lambda |theta - theta_start|^2`, where `theta_start` is the point the
    /// solve starts from. Parameters the data cannot see keep their start
    /// values instead of collapsing to zero.
    #[default]
    Start,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMode {
    Lo,
    Go,
    #[default]
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    /// Ridge weight.
    pub lambda: f64,
    pub ridge_center: RidgeCenter,
    /// Per-maneuver weight diagonals; overrides those in the dataset.
    pub weights: Option<Vec<[f64; 3]>>,
    /// Symmetric box `|theta_i| <= bound` unless `lower`/`upper` are given.
    pub bound: f64,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub constraints: ConstraintMode,
    pub solver: SolveOptions,
    pub mode: EstimationMode,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-6,
            ridge_center: RidgeCenter::Start,
            weights: None,
            bound: 1e4,
            lower: None,
            upper: None,
            constraints: ConstraintMode::SignCorrected,
            solver: SolveOptions::default(),
            mode: EstimationMode::Combined,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Validation("lambda must be non-negative".into()));
        }
        if !(self.bound > 0.0) {
            return Err(Error::Validation("bound must be positive".into()));
        }
        self.solver.validate()
    }

    fn bounds(&self, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let pick = |v: &Option<Vec<f64>>, default: f64| -> Result<Vec<f64>> {
            match v {
                Some(v) if v.len() != dim => Err(Error::LengthMismatch { expected: dim, got: v.len() }),
                Some(v) => Ok(v.clone()),
                None => Ok(vec![default; dim]),
            }
        };
        Ok((pick(&self.lower, -self.bound)?, pick(&self.upper, self.bound)?))
    }

    /// The dataset with configured weights applied.
    pub fn weighted(&self, dataset: &Dataset) -> Result<Dataset> {
        let mut ds = dataset.clone();
        if let Some(w) = &self.weights {
            if w.len() != ds.len() {
                return Err(Error::LengthMismatch {
                    expected: ds.len(),
                    got: w.len(),
                });
            }
            for (m, w) in ds.maneuvers.iter_mut().zip(w) {
                m.weight = *w;
            }
        }
        ds.validate()?;
        Ok(ds)
    }
}

fn check_velocities(dataset: &Dataset) -> Result<()> {
    for m in &dataset.maneuvers {
        m.velocities()?;
    }
    Ok(())
}

fn measured_anchor(log: &ManeuverLog, k: usize, vel: BodyVelocity) -> ShipState {
    ShipState {
        alpha1: log.alphas[k][0],
        alpha2: log.alphas[k][1],
        pose: log.poses[k],
        vel,
    }
}

/// One RK4 step of the whole ship from sample `k`'s pod angles and pose with
/// velocity `vel`; returns the velocity part.
fn velocity_step<D: Dynamics + ?Sized>(
    p: &D,
    thr: &ThrusterModel,
    log: &ManeuverLog,
    k: usize,
    vel: BodyVelocity,
) -> Result<BodyVelocity> {
    let state = measured_anchor(log, k, vel);
    Ok(step_ship(p, thr, &state, &log.cmds[k], log.dt)?.vel)
}

fn weighted_diff(out: &mut Vec<f64>, w: &[f64; 3], pred: &BodyVelocity, meas: &BodyVelocity) {
    let (a, b) = (pred.to_array(), meas.to_array());
    for i in 0..3 {
        let d = w[i].sqrt() * (a[i] - b[i]);
        out.push(if d.is_finite() {
            d.clamp(-RESIDUAL_CLAMP, RESIDUAL_CLAMP)
        } else {
            RESIDUAL_CLAMP
        });
    }
}

fn lo_maneuver<D: Dynamics + ?Sized>(p: &D, thr: &ThrusterModel, log: &ManeuverLog) -> Result<Vec<f64>> {
    let vel = log.velocities()?;
    let mut out = Vec::with_capacity(3 * (log.len() - 1));
    for k in 0..log.len() - 1 {
        match velocity_step(p, thr, log, k, vel[k]) {
            Ok(pred) => weighted_diff(&mut out, &log.weight, &pred, &vel[k + 1]),
            Err(Error::IntegrationBlowup { .. } | Error::DegenerateParameters { .. }) => {
                out.extend([RESIDUAL_CLAMP; 3])
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Free-running velocity trajectory from the measured initial velocity.
/// Stops early on divergence; the second value is the step that diverged.
pub fn go_rollout<D: Dynamics + ?Sized>(
    p: &D,
    thr: &ThrusterModel,
    log: &ManeuverLog,
) -> Result<(Vec<BodyVelocity>, Option<usize>)> {
    let vel = log.velocities()?;
    let mut traj = Vec::with_capacity(log.len());
    traj.push(vel[0]);
    for k in 0..log.len() - 1 {
        match velocity_step(p, thr, log, k, traj[k]) {
            Ok(next) if next.to_array().iter().all(|x| x.abs() < RESIDUAL_CLAMP) => traj.push(next),
            Ok(_) | Err(Error::IntegrationBlowup { .. } | Error::DegenerateParameters { .. }) => {
                return Ok((traj, Some(k)))
            }
            Err(e) => return Err(e),
        }
    }
    Ok((traj, None))
}

fn go_maneuver<D: Dynamics + ?Sized>(p: &D, thr: &ThrusterModel, log: &ManeuverLog) -> Result<Vec<f64>> {
    let vel = log.velocities()?;
    let (traj, _) = go_rollout(p, thr, log)?;
    let mut out = Vec::with_capacity(3 * (log.len() - 1));
    for k in 1..log.len() {
        match traj.get(k) {
            Some(pred) => weighted_diff(&mut out, &log.weight, pred, &vel[k]),
            None => out.extend([RESIDUAL_CLAMP; 3]),
        }
    }
    Ok(out)
}

fn assemble<F>(dataset: &Dataset, per: F) -> Result<Vec<f64>>
where
    F: Fn(&ManeuverLog) -> Result<Vec<f64>> + Sync + Send,
{
    let parts = dataset
        .maneuvers
        .par_iter()
        .map(per)
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.concat())
}

/// Equation-error residuals, maneuvers concatenated in dataset order.
pub fn build_lo_residuals<D: Dynamics + ?Sized>(p: &D, thr: &ThrusterModel, dataset: &Dataset) -> Result<Vec<f64>> {
    check_velocities(dataset)?;
    assemble(dataset, |log| lo_maneuver(p, thr, log))
}

/// Output-error residuals over every sample after the first.
pub fn build_go_residuals<D: Dynamics + ?Sized>(p: &D, thr: &ThrusterModel, dataset: &Dataset) -> Result<Vec<f64>> {
    check_velocities(dataset)?;
    assemble(dataset, |log| go_maneuver(p, thr, log))
}

/// True if the free rollout of any maneuver diverges.
pub fn go_diverges<D: Dynamics + ?Sized>(p: &D, thr: &ThrusterModel, dataset: &Dataset) -> Result<bool> {
    for log in &dataset.maneuvers {
        if go_rollout(p, thr, log)?.1.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lo,
    Go,
}

fn problem<'a, P: EstimableModel>(
    method: Method,
    thr: &'a ThrusterModel,
    dataset: &'a Dataset,
    config: &EstimationConfig,
    start: &[f64],
) -> Result<NlsProblem<'a>> {
    let residual = move |theta: &[f64]| {
        let p = P::from_slice(theta);
        match method {
            Method::Lo => build_lo_residuals(&p, thr, dataset),
            Method::Go => build_go_residuals(&p, thr, dataset),
        }
    };
    let (lower, upper) = config.bounds(P::dim())?;
    let mut prob = NlsProblem::new(P::dim(), residual)
        .with_bounds(lower, upper)?
        .with_ridge(config.lambda)?;
    if config.ridge_center == RidgeCenter::Start {
        prob = prob.with_ridge_center(start.to_vec())?;
    }
    let mode = config.constraints;
    if mode != ConstraintMode::Off {
        for (i, name) in CONSTRAINT_NAMES.iter().enumerate() {
            prob = prob.with_inequality(*name, Sense::Positive, move |t: &[f64]| {
                stability_constraints(&P::from_slice(t).as_22(), mode)[i]
            });
        }
    }
    Ok(prob)
}

/// One solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fit<P> {
    pub params: P,
    pub method: Method,
    pub report: SolveReport,
    /// The free rollout diverges on some maneuver at the returned point.
    pub diverges: bool,
}

impl<P> Fit<P> {
    /// Failure per the combination rule: stalled, iteration cap, constraint
    /// violation, or a diverging rollout.
    pub fn failed(&self, constraint_tolerance: f64) -> bool {
        matches!(self.report.reason, ConvergenceReason::Stalled | ConvergenceReason::IterationCap)
            || self.report.max_violation() > constraint_tolerance
            || self.diverges
    }
}

/// Fits `P` by LO or GO from `p0`.
pub fn fit<P: EstimableModel>(
    method: Method,
    dataset: &Dataset,
    thr: &ThrusterModel,
    p0: &P,
    config: &EstimationConfig,
) -> Result<Fit<P>> {
    config.validate()?;
    let ds = config.weighted(dataset)?;
    check_velocities(&ds)?;
    let theta0 = p0.to_vec();
    if theta0.iter().any(|t| !t.is_finite()) {
        return Err(Error::Validation("initial parameters are not finite".into()));
    }
    let prob = problem::<P>(method, thr, &ds, config, &theta0)?;
    let mut report = solve(&prob, &theta0, &config.solver)?;
    if !config.solver.trace {
        report.trace.clear();
    }
    let params = P::from_slice(&report.theta);
    let diverges = go_diverges(&params, thr, &ds)?;
    Ok(Fit {
        params,
        method,
        report,
        diverges,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManeuverResidual {
    pub label: String,
    /// Root-mean-square of the weighted LO residuals.
    pub lo_rms: f64,
    pub go_rms: f64,
}

/// What one stage of the combination did.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Attempt {
    /// Number of maneuvers in the subset.
    pub stage: usize,
    pub maneuvers: Vec<String>,
    pub method: Method,
    /// `"initial"`, `"previous_go"` or `"lo"`.
    pub warm_start: String,
    pub reason: ConvergenceReason,
    pub iterations: usize,
    pub cost: f64,
    pub max_violation: f64,
    pub diverges: bool,
    pub failed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub initialization: Option<InitRecord>,
    pub constraint_mode: ConstraintMode,
    pub lambda: f64,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitRecord {
    pub specs: HullSpecs,
    pub derivatives: HydroDerivatives,
    pub params: ShipParams22,
}

impl InitRecord {
    pub fn empirical(specs: &HullSpecs) -> Result<Self> {
        Ok(Self {
            specs: *specs,
            derivatives: hydrodynamic_derivatives(specs)?,
            params: init_params_empirical(specs)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationResult {
    pub p_lo: Option<ShipParams22>,
    pub p_go: Option<ShipParams22>,
    /// GO failed even after an LO warm start at the last stage.
    pub degraded: bool,
    pub residuals: Vec<ManeuverResidual>,
    pub reports: Vec<SolveReport>,
    pub provenance: Provenance,
}

impl EstimationResult {
    /// GO parameters if present, otherwise LO.
    pub fn best(&self) -> &ShipParams22 {
        self.p_go
            .as_ref()
            .or(self.p_lo.as_ref())
            .expect("at least one parameter set")
    }
}

fn attempt<P>(stage: usize, ds: &Dataset, warm: &str, f: &Fit<P>, tol: f64) -> Attempt {
    Attempt {
        stage,
        maneuvers: ds.maneuvers.iter().map(|m| m.label.clone()).collect(),
        method: f.method,
        warm_start: warm.into(),
        reason: f.report.reason,
        iterations: f.report.iterations,
        cost: f.report.cost,
        max_violation: f.report.max_violation(),
        diverges: f.diverges,
        failed: f.failed(tol),
    }
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    }
}

pub fn maneuver_residuals<D: Dynamics + ?Sized>(
    p: &D,
    thr: &ThrusterModel,
    dataset: &Dataset,
) -> Result<Vec<ManeuverResidual>> {
    dataset
        .maneuvers
        .iter()
        .map(|log| {
            Ok(ManeuverResidual {
                label: log.label.clone(),
                lo_rms: rms(&lo_maneuver(p, thr, log)?),
                go_rms: rms(&go_maneuver(p, thr, log)?),
            })
        })
        .collect()
}

fn new_provenance(config: &EstimationConfig, init: Option<InitRecord>) -> Provenance {
    Provenance {
        initialization: init,
        constraint_mode: config.constraints,
        lambda: config.lambda,
        attempts: Vec::new(),
    }
}

pub fn estimate_lo(
    dataset: &Dataset,
    thr: &ThrusterModel,
    p0: &ShipParams22,
    config: &EstimationConfig,
) -> Result<EstimationResult> {
    single(Method::Lo, dataset, thr, p0, config, None)
}

pub fn estimate_go(
    dataset: &Dataset,
    thr: &ThrusterModel,
    p0: &ShipParams22,
    config: &EstimationConfig,
) -> Result<EstimationResult> {
    single(Method::Go, dataset, thr, p0, config, None)
}

fn single(
    method: Method,
    dataset: &Dataset,
    thr: &ThrusterModel,
    p0: &ShipParams22,
    config: &EstimationConfig,
    init: Option<InitRecord>,
) -> Result<EstimationResult> {
    let f = fit(method, dataset, thr, p0, config)?;
    let mut provenance = new_provenance(config, init);
    provenance.attempts.push(attempt(
        dataset.len(),
        dataset,
        "initial",
        &f,
        config.solver.constraint_tolerance,
    ));
    let weighted = config.weighted(dataset)?;
    Ok(EstimationResult {
        p_lo: (method == Method::Lo).then_some(f.params),
        p_go: (method == Method::Go).then_some(f.params),
        degraded: false,
        residuals: maneuver_residuals(&f.params, thr, &weighted)?,
        reports: vec![f.report],
        provenance,
    })
}

/// LO or GO alone, or the combination, per `config.mode`.
pub fn estimate(
    dataset: &Dataset,
    thr: &ThrusterModel,
    p0: &ShipParams22,
    config: &EstimationConfig,
    init: Option<InitRecord>,
) -> Result<EstimationResult> {
    match config.mode {
        EstimationMode::Lo => single(Method::Lo, dataset, thr, p0, config, init),
        EstimationMode::Go => single(Method::Go, dataset, thr, p0, config, init),
        EstimationMode::Combined => estimate_combined_from(dataset, thr, p0, config, init),
    }
}

/// The combination from the empirical initial guess.
pub fn estimate_combined(
    dataset: &Dataset,
    thr: &ThrusterModel,
    specs: &HullSpecs,
    config: &EstimationConfig,
) -> Result<EstimationResult> {
    let init = InitRecord::empirical(specs)?;
    let p0 = init.params;
    estimate_combined_from(dataset, thr, &p0, config, Some(init))
}

/// For `n = 1..=N`, fit GO on the first `n` maneuvers warm-started from the
/// previous stage. If GO fails, fit LO on the same maneuvers and retry GO
/// from the LO result.
pub fn estimate_combined_from(
    dataset: &Dataset,
    thr: &ThrusterModel,
    p0: &ShipParams22,
    config: &EstimationConfig,
    init: Option<InitRecord>,
) -> Result<EstimationResult> {
    config.validate()?;
    let full = config.weighted(dataset)?;
    check_velocities(&full)?;
    let tol = config.solver.constraint_tolerance;
    let mut provenance = new_provenance(config, init);
    let mut reports = Vec::new();
    let mut current = *p0;
    let mut p_lo = None;
    let mut degraded = false;
    let n_max = full.len();

    for n in 1..=n_max {
        let subset = full.prefix(n);
        let warm = if n == 1 { "initial" } else { "previous_go" };
        let go = fit(Method::Go, &subset, thr, &current, config)?;
        provenance.attempts.push(attempt(n, &subset, warm, &go, tol));
        log::info!("stage {n}/{n_max}: GO {:?} after {} iterations", go.report.reason, go.report.iterations);
        if !go.failed(tol) {
            current = go.params;
            reports.push(go.report);
            continue;
        }
        reports.push(go.report);

        let lo = fit(Method::Lo, &subset, thr, &current, config)?;
        provenance.attempts.push(attempt(n, &subset, warm, &lo, tol));
        let go2 = fit(Method::Go, &subset, thr, &lo.params, config)?;
        provenance.attempts.push(attempt(n, &subset, "lo", &go2, tol));
        log::info!("stage {n}/{n_max}: GO from LO {:?}", go2.report.reason);
        let go2_failed = go2.failed(tol);
        p_lo = Some(lo.params);
        current = if go2_failed && (go2.diverges || go2.report.max_violation() > tol) {
            lo.params
        } else {
            go2.params
        };
        reports.push(lo.report);
        reports.push(go2.report);
        if n == n_max && go2_failed {
            degraded = true;
            log::warn!("GO failed at the final stage; returning the LO estimate");
        }
    }

    let (p_go, p_lo) = if degraded { (None, p_lo) } else { (Some(current), p_lo) };
    let best = p_go.or(p_lo).unwrap_or(current);
    Ok(EstimationResult {
        p_lo,
        p_go,
        degraded,
        residuals: maneuver_residuals(&best, thr, &full)?,
        reports,
        provenance,
    })
}

/// Fits the diagonal 6-parameter model by GO, starting from the diagonal of
/// the empirical mass matrix and zero damping.
pub fn estimate_6param(
    dataset: &Dataset,
    thr: &ThrusterModel,
    p0: &ShipParams6,
    config: &EstimationConfig,
) -> Result<Fit<ShipParams6>> {
    let f = fit(Method::Go, dataset, thr, p0, config)?;
    if f.failed(config.solver.constraint_tolerance) {
        log::warn!("6-parameter fit ended with {:?}", f.report.reason);
    }
    Ok(f)
}

/// Diagonal 6-parameter start point from the hull specs.
pub fn init_params6_empirical(specs: &HullSpecs) -> Result<ShipParams6> {
    let p = init_params_empirical(specs)?;
    Ok(ShipParams6::from_array(&[p.m11, p.m22, p.m33, 0.0, 0.0, 0.0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate_dataset, ManeuverPlan, NoiseSpec};
    use approx::assert_abs_diff_eq;

    fn small_dataset(p: &ShipParams22, noise: &NoiseSpec) -> Dataset {
        let plans = vec![
            ManeuverPlan::straight_line(5.0).with_timing(20.0, 0.2),
            ManeuverPlan::zigzag(7.0, 20.0, 20.0).with_timing(30.0, 0.2),
            ManeuverPlan::turning_circle(5.0, 30.0).with_timing(20.0, 0.2),
        ];
        generate_dataset(&plans, p, &ThrusterModel::default(), noise).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn empirical_init_matches_hand_values() {
        let h = hydrodynamic_derivatives(&HullSpecs::qiuxin_no5()).unwrap();
        // oracle: the formulas evaluated independently
        let pi = std::f64::consts::PI;
        let iz = 4.0 / 15.0 * pi * 1000.0 * 1.076 * 0.3476f64.powi(2) * (1.076f64.powi(2) + 0.3476f64.powi(2));
        assert_abs_diff_eq!(h.i_z, iz, epsilon = 1e-9);
        assert_abs_diff_eq!(h.x_udot, -9.38, epsilon = 1e-3);
        assert_abs_diff_eq!(h.y_vdot, -66.4454, epsilon = 1e-3);
        assert_abs_diff_eq!(h.n_rdot, -80.9376, epsilon = 1e-3);
        assert_abs_diff_eq!(h.i_z, 139.2598, epsilon = 1e-3);
        let p = init_params_empirical(&HullSpecs::qiuxin_no5()).unwrap();
        assert_abs_diff_eq!(p.m11, 196.98, epsilon = 1e-3);
        assert_abs_diff_eq!(p.m22, 254.0454, epsilon = 1e-3);
        assert_abs_diff_eq!(p.m33, 220.1974, epsilon = 1e-3);
        assert_eq!(p.to_array()[5..], [0.0; 17]);
        assert_eq!((p.m23, p.m32), (0.0, 0.0));
    }

    #[test]
    fn bad_hull_specs_rejected() {
        let specs = HullSpecs { m: 0.0, ..HullSpecs::qiuxin_no5() };
        assert!(matches!(init_params_empirical(&specs), Err(Error::Validation(_))));
        let json = r#"{"m":187.6,"L":2.152,"B":0.6952,"D":0.2485,"rho":1000,"dispv":0.1876}"#;
        let specs: HullSpecs = serde_json::from_str(json).unwrap();
        assert_eq!(specs, HullSpecs::qiuxin_no5());
    }

    #[test]
    fn constraint_signs_on_reference_parameters() {
        let p = ShipParams22::qiuxin_no5();
        let c = stability_constraints(&p, ConstraintMode::SignCorrected);
        assert!(c.iter().all(|v| *v > 0.0), "{c:?}");
        let det = (-71.9041) * (-26.7122) - (-26.0498) * (-14.8953);
        // hand product of the four table entries
        assert_abs_diff_eq!(det, 1920.71670002 - 388.01958594, epsilon = 1e-8);
        assert_abs_diff_eq!(c[4], 8.9859 * det, epsilon = 1e-9);
        let lit = stability_constraints(&p, ConstraintMode::PaperLiteral);
        assert!(lit[3] < 0.0);
        let mut bad = p;
        bad.m11 = -1.0;
        assert!(stability_constraints(&bad, ConstraintMode::SignCorrected)[0] < 0.0);
    }

    #[test]
    fn residuals_vanish_at_truth_on_noiseless_data() {
        let p = ShipParams22::qiuxin_no5();
        let ds = small_dataset(&p, &NoiseSpec::none());
        let thr = ThrusterModel::default();
        let lo = build_lo_residuals(&p, &thr, &ds).unwrap();
        let go = build_go_residuals(&p, &thr, &ds).unwrap();
        assert_eq!(lo.len(), 3 * (ds.total_samples() - ds.len()));
        assert_eq!(go.len(), lo.len());
        assert!(norm(&lo) < 1e-8, "{}", norm(&lo));
        assert!(norm(&go) < 1e-6, "{}", norm(&go));
    }

    #[test]
    fn perturbation_increases_lo_residual() {
        let p = ShipParams22::qiuxin_no5();
        let ds = small_dataset(&p, &NoiseSpec::none());
        let thr = ThrusterModel::default();
        let base = norm(&build_lo_residuals(&p, &thr, &ds).unwrap());
        let a = p.to_array();
        for i in 0..22 {
            let mut b = a;
            b[i] += 0.01 * a[i].abs().max(1.0);
            let r = norm(&build_lo_residuals(&ShipParams22::from_array(&b), &thr, &ds).unwrap());
            assert!(r > base, "parameter {i}");
        }
    }

    #[test]
    fn missing_velocities_error() {
        let p = ShipParams22::qiuxin_no5();
        let mut ds = small_dataset(&p, &NoiseSpec::none());
        ds.maneuvers[1].velocities = None;
        let thr = ThrusterModel::default();
        assert!(build_lo_residuals(&p, &thr, &ds).is_err());
        assert!(build_go_residuals(&p, &thr, &ds).is_err());
    }

    #[test]
    fn single_step_go_equals_lo() {
        let p = ShipParams22::qiuxin_no5();
        let mut ds = small_dataset(&p, &NoiseSpec { vel_sigma: [0.01; 3], seed: 3, ..NoiseSpec::none() });
        for m in &mut ds.maneuvers {
            *m = m.truncated(2);
        }
        let thr = ThrusterModel::default();
        let q = init_params_empirical(&HullSpecs::qiuxin_no5()).unwrap();
        assert_eq!(build_lo_residuals(&q, &thr, &ds).unwrap(), build_go_residuals(&q, &thr, &ds).unwrap());
    }

    #[test]
    fn diverging_parameters_are_clamped() {
        let p = ShipParams22::qiuxin_no5();
        let ds = small_dataset(&p, &NoiseSpec::none());
        let thr = ThrusterModel::default();
        let mut a = p.to_array();
        // strongly negative damping
        for i in [5, 8, 18] {
            a[i] = 5e3;
        }
        let bad = ShipParams22::from_array(&a);
        let r = build_go_residuals(&bad, &thr, &ds).unwrap();
        assert!(r.iter().all(|x| x.is_finite() && x.abs() <= RESIDUAL_CLAMP));
        assert!(go_diverges(&bad, &thr, &ds).unwrap());
        assert!(!go_diverges(&p, &thr, &ds).unwrap());
    }

    #[test]
    fn go_stays_at_truth() {
        let p = ShipParams22::qiuxin_no5();
        let ds = small_dataset(&p, &NoiseSpec::none());
        let thr = ThrusterModel::default();
        let cfg = EstimationConfig { lambda: 0.0, ..Default::default() };
        let f = fit(Method::Go, &ds, &thr, &p, &cfg).unwrap();
        for (a, b) in f.params.to_array().iter().zip(p.to_array()) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn forced_failure_takes_lo_path() {
        let p = ShipParams22::qiuxin_no5();
        let ds = small_dataset(&p, &NoiseSpec::none()).prefix(2);
        let thr = ThrusterModel::default();
        let mut cfg = EstimationConfig::default();
        cfg.solver.max_iterations = 1;
        let res = estimate_combined(&ds, &thr, &HullSpecs::qiuxin_no5(), &cfg).unwrap();
        let a = &res.provenance.attempts;
        assert!(a.iter().any(|x| x.method == Method::Lo));
        assert!(a.iter().any(|x| x.warm_start == "lo"));
        assert!(res.p_lo.is_some());
        assert!(res.provenance.initialization.is_some());
    }

    #[test]
    fn single_maneuver_is_one_go_attempt() {
        let p = ShipParams22::qiuxin_no5();
        let ds = small_dataset(&p, &NoiseSpec::none()).prefix(1);
        let thr = ThrusterModel::default();
        let cfg = EstimationConfig::default();
        let res = estimate_combined_from(&ds, &thr, &p, &cfg, None).unwrap();
        assert_eq!(res.provenance.attempts.len(), 1);
        assert_eq!(res.provenance.attempts[0].method, Method::Go);
    }

    #[test]
    fn stationary_maneuver_does_not_crash() {
        let p = ShipParams22::qiuxin_no5();
        let plan = ManeuverPlan::straight_line(0.0).with_timing(10.0, 0.2);
        let ds = generate_dataset(&[plan], &p, &ThrusterModel::default(), &NoiseSpec::none()).unwrap();
        let p0 = init_params_empirical(&HullSpecs::qiuxin_no5()).unwrap();
        let res = estimate_lo(&ds, &ThrusterModel::default(), &p0, &EstimationConfig::default()).unwrap();
        assert!(res.p_lo.unwrap().to_array().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn six_parameter_self_recovery() {
        let truth = ShipParams6::from_array(&[216.4727, 183.4906, 0.0632 + 50.0, 44.1878, 152.938, 0.2629 + 20.0]);
        let plans = vec![
            ManeuverPlan::straight_line(5.0).with_timing(20.0, 0.2),
            ManeuverPlan::zigzag(7.0, 20.0, 20.0).with_timing(30.0, 0.2),
        ];
        let thr = ThrusterModel::default();
        let ds = generate_dataset(&plans, &truth, &thr, &NoiseSpec::none()).unwrap();
        let p0 = init_params6_empirical(&HullSpecs::qiuxin_no5()).unwrap();
        let cfg = EstimationConfig { lambda: 0.0, ..Default::default() };
        let f = estimate_6param(&ds, &thr, &p0, &cfg).unwrap();
        let r = build_go_residuals(&f.params, &thr, &ds).unwrap();
        let rmse = (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
        assert!(rmse < 1e-6, "rmse {rmse}, params {:?}", f.params);
    }
}
