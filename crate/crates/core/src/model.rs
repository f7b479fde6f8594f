//! Surge-decoupled 3-DOF vessel dynamics.
//!
//! ```text
//! eta_dot = J(psi) * nu
//! M * nu_dot = -C(nu) * nu - D(nu) * nu + tau
//! ```
//!
//! with `eta = [x, y, psi]` in the earth-fixed frame and `nu = [u, v, r]` in
//! the body frame. Two parameterisations are provided: the 22-entry
//! surge-decoupled model ([`ShipParams22`]) and the diagonal 6-entry
//! baseline ([`ShipParams6`]). Both implement [`Dynamics`], which is all the
//! integrator, the estimators and the validation code need.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::actuation::{InputCommand, ThrusterModel};
use crate::{Error, Result};

/// Body-fixed velocity `[u, v, r]` (m/s, m/s, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl BodyVelocity {
    pub fn new(u: f64, v: f64, r: f64) -> Self {
        Self { u, v, r }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.r)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.r]
    }
}

/// Earth-fixed pose `[x, y, psi]`. Heading is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self { x, y, psi }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.psi]
    }
}

/// Generalised control forces `[tau_u, tau_v, tau_r]` (N, N, N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlTorque {
    pub tau_u: f64,
    pub tau_v: f64,
    pub tau_r: f64,
}

impl ControlTorque {
    pub fn new(tau_u: f64, tau_v: f64, tau_r: f64) -> Self {
        Self {
            tau_u,
            tau_v,
            tau_r,
        }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.tau_u, self.tau_v, self.tau_r)
    }
}

/// Whole-ship state, laid out as `[alpha1, alpha2, x, y, psi, u, v, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShipState {
    pub alpha1: f64,
    pub alpha2: f64,
    pub pose: Pose,
    pub vel: BodyVelocity,
}

impl ShipState {
    pub fn at_rest() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.alpha1,
            self.alpha2,
            self.pose.x,
            self.pose.y,
            self.pose.psi,
            self.vel.u,
            self.vel.v,
            self.vel.r,
        ]
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        Self {
            alpha1: a[0],
            alpha2: a[1],
            pose: Pose::new(a[2], a[3], a[4]),
            vel: BodyVelocity::new(a[5], a[6], a[7]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Anything that maps body velocity and control forces to body acceleration.
pub trait Dynamics: Sync {
    fn acceleration(&self, vel: &BodyVelocity, tau: &ControlTorque) -> Result<Vector3<f64>>;
}

/// A dynamics model that can be flattened to and rebuilt from a parameter
/// vector, which is what the estimators optimise over.
pub trait ParameterVector: Dynamics + Clone + Send + Sync {
    const NAMES: &'static [&'static str];

    fn to_vec(&self) -> Vec<f64>;

    /// Panics if `values.len() != NAMES.len()`.
    fn from_slice(values: &[f64]) -> Self;

    fn dim() -> usize {
        Self::NAMES.len()
    }
}

/// Parameter names, in vector order, as used for JSON keys.
pub const PARAM22_NAMES: [&str; 22] = [
    "m11", "m22", "m23", "m32", "m33", "X_u", "X_uu_abs", "X_uuu", "Y_v", "Y_vv_abs", "Y_vvv",
    "Y_rv_abs", "Y_r", "Y_vr_abs", "Y_rr_abs", "N_v", "N_vv_abs", "N_rv_abs", "N_r", "N_rr_abs",
    "N_rrr", "N_vr_abs",
];

pub const PARAM6_NAMES: [&str; 6] = ["m11", "m22", "m33", "d11", "d22", "d33"];

/// Inertia and damping coefficients of the surge-decoupled model.
///
/// Field order is the canonical vector order. Absolute-value terms carry an
/// `_abs` suffix, e.g. `y_rv_abs` is the coefficient of `|r| v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr<22>")]
pub struct ShipParams22 {
    pub m11: f64,
    pub m22: f64,
    pub m23: f64,
    pub m32: f64,
    pub m33: f64,
    #[serde(rename = "X_u")]
    pub x_u: f64,
    #[serde(rename = "X_uu_abs")]
    pub x_uu_abs: f64,
    #[serde(rename = "X_uuu")]
    pub x_uuu: f64,
    #[serde(rename = "Y_v")]
    pub y_v: f64,
    #[serde(rename = "Y_vv_abs")]
    pub y_vv_abs: f64,
    #[serde(rename = "Y_vvv")]
    pub y_vvv: f64,
    #[serde(rename = "Y_rv_abs")]
    pub y_rv_abs: f64,
    #[serde(rename = "Y_r")]
    pub y_r: f64,
    #[serde(rename = "Y_vr_abs")]
    pub y_vr_abs: f64,
    #[serde(rename = "Y_rr_abs")]
    pub y_rr_abs: f64,
    #[serde(rename = "N_v")]
    pub n_v: f64,
    #[serde(rename = "N_vv_abs")]
    pub n_vv_abs: f64,
    #[serde(rename = "N_rv_abs")]
    pub n_rv_abs: f64,
    #[serde(rename = "N_r")]
    pub n_r: f64,
    #[serde(rename = "N_rr_abs")]
    pub n_rr_abs: f64,
    #[serde(rename = "N_rrr")]
    pub n_rrr: f64,
    #[serde(rename = "N_vr_abs")]
    pub n_vr_abs: f64,
}

/// Accepts either the keyed object form or a bare ordered array.
#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsRepr<const N: usize> {
    Array(Vec<f64>),
    Object(serde_json::Map<String, serde_json::Value>),
}

fn repr_to_values<const N: usize>(
    repr: ParamsRepr<N>,
    names: &[&str; N],
) -> std::result::Result<[f64; N], String> {
    let mut out = [0.0; N];
    match repr {
        ParamsRepr::Array(values) => {
            if values.len() != N {
                return Err(format!("expected {N} parameters, got {}", values.len()));
            }
            out.copy_from_slice(&values);
        }
        ParamsRepr::Object(map) => {
            for (slot, name) in out.iter_mut().zip(names) {
                *slot = map
                    .get(*name)
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| format!("missing or non-numeric parameter `{name}`"))?;
            }
            if let Some(extra) = map.keys().find(|k| !names.contains(&k.as_str())) {
                return Err(format!("unknown parameter `{extra}`"));
            }
        }
    }
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(format!("parameter `{}` is not finite", names[i]));
    }
    Ok(out)
}

impl TryFrom<ParamsRepr<22>> for ShipParams22 {
    type Error = String;

    fn try_from(repr: ParamsRepr<22>) -> std::result::Result<Self, String> {
        let values = repr_to_values(repr, &PARAM22_NAMES)?;
        Ok(Self::from_array(&values))
    }
}

impl ShipParams22 {
    /// Identified coefficients of the 1:20 scale twin-azimuth tug used as
    /// the default ground truth.
    pub fn qiuxin_no5() -> Self {
        Self::from_array(&[
            138.0574, 106.6003, 1.1254, -16.0598, 15.6476, -8.9859, -31.4285, -6.8953, -71.9041,
            -77.6429, -27.1394, -43.2207, -26.0498, 26.7652, 7.7996, -14.8953, -1.6306, 8.7911,
            -26.7122, -9.8284, -9.2320, -2.3474,
        ])
    }

    pub fn to_array(&self) -> [f64; 22] {
        [
            self.m11,
            self.m22,
            self.m23,
            self.m32,
            self.m33,
            self.x_u,
            self.x_uu_abs,
            self.x_uuu,
            self.y_v,
            self.y_vv_abs,
            self.y_vvv,
            self.y_rv_abs,
            self.y_r,
            self.y_vr_abs,
            self.y_rr_abs,
            self.n_v,
            self.n_vv_abs,
            self.n_rv_abs,
            self.n_r,
            self.n_rr_abs,
            self.n_rrr,
            self.n_vr_abs,
        ]
    }

    pub fn from_array(a: &[f64; 22]) -> Self {
        Self {
            m11: a[0],
            m22: a[1],
            m23: a[2],
            m32: a[3],
            m33: a[4],
            x_u: a[5],
            x_uu_abs: a[6],
            x_uuu: a[7],
            y_v: a[8],
            y_vv_abs: a[9],
            y_vvv: a[10],
            y_rv_abs: a[11],
            y_r: a[12],
            y_vr_abs: a[13],
            y_rr_abs: a[14],
            n_v: a[15],
            n_vv_abs: a[16],
            n_rv_abs: a[17],
            n_r: a[18],
            n_rr_abs: a[19],
            n_rrr: a[20],
            n_vr_abs: a[21],
        }
    }

    /// Checks finiteness and strictly positive diagonal inertia.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.to_array().iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "parameter {} is not finite",
                PARAM22_NAMES[i]
            )));
        }
        if self.m11 <= 0.0 || self.m22 <= 0.0 || self.m33 <= 0.0 {
            return Err(Error::Validation(
                "m11, m22 and m33 must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    pub fn mass_matrix(&self) -> Matrix3<f64> {
        mass_matrix(self)
    }
}

/// Diagonal 6-parameter baseline model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr<6>")]
pub struct ShipParams6 {
    pub m11: f64,
    pub m22: f64,
    pub m33: f64,
    pub d11: f64,
    pub d22: f64,
    pub d33: f64,
}

impl TryFrom<ParamsRepr<6>> for ShipParams6 {
    type Error = String;

    fn try_from(repr: ParamsRepr<6>) -> std::result::Result<Self, String> {
        let v = repr_to_values(repr, &PARAM6_NAMES)?;
        Ok(Self::from_array(&v))
    }
}

impl ShipParams6 {
    pub fn to_array(&self) -> [f64; 6] {
        [self.m11, self.m22, self.m33, self.d11, self.d22, self.d33]
    }

    pub fn from_array(a: &[f64; 6]) -> Self {
        Self {
            m11: a[0],
            m22: a[1],
            m33: a[2],
            d11: a[3],
            d22: a[4],
            d33: a[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("6-parameter model is not finite".into()));
        }
        if self.m11 <= 0.0 || self.m22 <= 0.0 || self.m33 <= 0.0 {
            return Err(Error::Validation("masses must be strictly positive".into()));
        }
        Ok(())
    }

    /// The same model expressed in the 22-parameter layout: linear damping
    /// only, no off-diagonal inertia.
    pub fn embed(&self) -> ShipParams22 {
        let mut a = [0.0; 22];
        a[0] = self.m11;
        a[1] = self.m22;
        a[4] = self.m33;
        a[5] = -self.d11;
        a[8] = -self.d22;
        a[18] = -self.d33;
        ShipParams22::from_array(&a)
    }
}

/// Planar rotation from body to earth frame.
pub fn rotation_matrix(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn mass_matrix(p: &ShipParams22) -> Matrix3<f64> {
    Matrix3::new(
        p.m11, 0.0, 0.0, //
        0.0, p.m22, p.m23, //
        0.0, p.m32, p.m33,
    )
}

pub fn coriolis_matrix(p: &ShipParams22, vel: &BodyVelocity) -> Matrix3<f64> {
    let c13 = -p.m22 * vel.v - p.m23 * vel.r;
    let c23 = p.m11 * vel.u;
    Matrix3::new(
        0.0, 0.0, c13, //
        0.0, 0.0, c23, //
        -c13, -c23, 0.0,
    )
}

pub fn damping_matrix(p: &ShipParams22, vel: &BodyVelocity) -> Matrix3<f64> {
    let (u, v, r) = (vel.u, vel.v, vel.r);
    let (au, av, ar) = (u.abs(), v.abs(), r.abs());
    let d11 = -p.x_u - p.x_uu_abs * au - p.x_uuu * u * u;
    let d22 = -p.y_v - p.y_vv_abs * av - p.y_rv_abs * ar - p.y_vvv * v * v;
    let d23 = -p.y_r - p.y_vr_abs * av - p.y_rr_abs * ar;
    let d32 = -p.n_v - p.n_vv_abs * av - p.n_rv_abs * ar;
    let d33 = -p.n_r - p.n_vr_abs * av - p.n_rr_abs * ar - p.n_rrr * r * r;
    Matrix3::new(
        d11, 0.0, 0.0, //
        0.0, d22, d23, //
        0.0, d32, d33,
    )
}

fn singularity_threshold(m: &Matrix3<f64>) -> f64 {
    let norm_inf = (0..3)
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    1e-12 * norm_inf.powi(3).max(1.0)
}

/// Solves `M x = b` exploiting the surge-decoupled block structure.
fn solve_block(m: &Matrix3<f64>, b: &Vector3<f64>) -> Result<Vector3<f64>> {
    let lower_det = m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    let det = m[(0, 0)] * lower_det;
    let threshold = singularity_threshold(m);
    if !(det.abs() >= threshold) {
        return Err(Error::DegenerateParameters { det, threshold });
    }
    Ok(Vector3::new(
        b[0] / m[(0, 0)],
        (m[(2, 2)] * b[1] - m[(1, 2)] * b[2]) / lower_det,
        (m[(1, 1)] * b[2] - m[(2, 1)] * b[1]) / lower_det,
    ))
}

pub fn dynamics_rhs_22(
    p: &ShipParams22,
    vel: &BodyVelocity,
    tau: &ControlTorque,
) -> Result<Vector3<f64>> {
    let nu = vel.to_vector();
    let rhs = -coriolis_matrix(p, vel) * nu - damping_matrix(p, vel) * nu + tau.to_vector();
    solve_block(&mass_matrix(p), &rhs)
}

pub fn dynamics_rhs_6(
    p: &ShipParams6,
    vel: &BodyVelocity,
    tau: &ControlTorque,
) -> Result<Vector3<f64>> {
    let m = Matrix3::from_diagonal(&Vector3::new(p.m11, p.m22, p.m33));
    let c = Matrix3::new(
        0.0,
        0.0,
        -p.m22 * vel.v,
        0.0,
        0.0,
        p.m11 * vel.u,
        p.m22 * vel.v,
        -p.m11 * vel.u,
        0.0,
    );
    let d = Matrix3::from_diagonal(&Vector3::new(p.d11, p.d22, p.d33));
    let nu = vel.to_vector();
    let rhs = -c * nu - d * nu + tau.to_vector();
    solve_block(&m, &rhs)
}

impl Dynamics for ShipParams22 {
    fn acceleration(&self, vel: &BodyVelocity, tau: &ControlTorque) -> Result<Vector3<f64>> {
        dynamics_rhs_22(self, vel, tau)
    }
}

impl Dynamics for ShipParams6 {
    fn acceleration(&self, vel: &BodyVelocity, tau: &ControlTorque) -> Result<Vector3<f64>> {
        dynamics_rhs_6(self, vel, tau)
    }
}

impl ParameterVector for ShipParams22 {
    const NAMES: &'static [&'static str] = &PARAM22_NAMES;

    fn to_vec(&self) -> Vec<f64> {
        self.to_array().to_vec()
    }

    fn from_slice(values: &[f64]) -> Self {
        Self::from_array(values.try_into().expect("22 parameters"))
    }
}

impl ParameterVector for ShipParams6 {
    const NAMES: &'static [&'static str] = &PARAM6_NAMES;

    fn to_vec(&self) -> Vec<f64> {
        self.to_array().to_vec()
    }

    fn from_slice(values: &[f64]) -> Self {
        Self::from_array(values.try_into().expect("6 parameters"))
    }
}

/// Time derivative of the whole-ship state under a held input command.
///
/// The returned [`ShipState`] holds rates, not a state.
pub fn whole_ship_rhs<D: Dynamics + ?Sized>(
    dynamics: &D,
    thr: &ThrusterModel,
    state: &ShipState,
    cmd: &InputCommand,
) -> Result<ShipState> {
    let alpha1_dot = thr.azimuth[0].rate(state.alpha1, cmd.alpha1_d);
    let alpha2_dot = thr.azimuth[1].rate(state.alpha2, cmd.alpha2_d);
    let tau = thr.torque(state.alpha1, state.alpha2, cmd.n1, cmd.n2);
    let eta_dot = rotation_matrix(state.pose.psi) * state.vel.to_vector();
    let nu_dot = dynamics.acceleration(&state.vel, &tau)?;
    Ok(ShipState {
        alpha1: alpha1_dot,
        alpha2: alpha2_dot,
        pose: Pose::new(eta_dot[0], eta_dot[1], eta_dot[2]),
        vel: BodyVelocity::from_vector(&nu_dot),
    })
}

/// One classical Runge–Kutta step. Any input the right-hand side depends on
/// is captured by the closure and therefore held over the step.
pub fn rk4_step<const N: usize, F>(rhs: F, x: &[f64; N], dt: f64) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |a: &[f64; N], h: f64, k: &[f64; N]| -> [f64; N] {
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = a[i] + h * k[i];
        }
        out
    };
    let k1 = rhs(x)?;
    let k2 = rhs(&axpy(x, 0.5 * dt, &k1))?;
    let k3 = rhs(&axpy(x, 0.5 * dt, &k2))?;
    let k4 = rhs(&axpy(x, dt, &k3))?;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::IntegrationBlowup { step: 0 })
    }
}

/// Advances the whole-ship state by one RK4 step with `cmd` held.
pub fn step_ship<D: Dynamics + ?Sized>(
    dynamics: &D,
    thr: &ThrusterModel,
    state: &ShipState,
    cmd: &InputCommand,
    dt: f64,
) -> Result<ShipState> {
    let rhs = |x: &[f64; 8]| -> Result<[f64; 8]> {
        Ok(whole_ship_rhs(dynamics, thr, &ShipState::from_array(x), cmd)?.to_array())
    };
    let next = rk4_step(rhs, &state.to_array(), dt)?;
    Ok(ShipState::from_array(&next))
}

/// Forward rollout with one RK4 step per command. The trajectory has
/// `cmds.len() + 1` entries and starts at `x0`.
pub fn simulate<D: Dynamics + ?Sized>(
    dynamics: &D,
    thr: &ThrusterModel,
    x0: &ShipState,
    cmds: &[InputCommand],
    dt: f64,
) -> Result<Vec<ShipState>> {
    if cmds.is_empty() {
        return Err(Error::InsufficientData("empty command series".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Validation(format!("time step must be positive, got {dt}")));
    }
    let mut traj = Vec::with_capacity(cmds.len() + 1);
    traj.push(*x0);
    let mut state = *x0;
    for (k, cmd) in cmds.iter().enumerate() {
        state = match step_ship(dynamics, thr, &state, cmd, dt) {
            Ok(s) => s,
            Err(Error::IntegrationBlowup { .. }) => {
                return Err(Error::IntegrationBlowup { step: k })
            }
            Err(e) => return Err(e),
        };
        traj.push(state);
    }
    Ok(traj)
}
