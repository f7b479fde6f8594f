//! Twin azimuth-thruster actuation: shaft speed to force, thruster angles and
//! forces to generalised control forces, and the azimuth slew dynamics.

use nalgebra::{DMatrix, DVector, Matrix3x2, Vector2};
use serde::{Deserialize, Serialize};

use crate::model::{rk4_step, ControlTorque};
use crate::nlp::{self, NlsProblem, SolveOptions, SolveReport};
use crate::{Error, Result};

/// Thruster positions relative to the body origin (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrusterGeometry {
    pub lx1: f64,
    pub ly1: f64,
    pub lx2: f64,
    pub ly2: f64,
}

impl Default for ThrusterGeometry {
    fn default() -> Self {
        Self {
            lx1: -0.8,
            ly1: 0.163,
            lx2: -0.8,
            ly2: -0.163,
        }
    }
}

/// Shaft speed (RPS) to per-thruster force (N):
/// `f(n) = (c5 n^5 + ... + c0) / divisor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrustPolynomial {
    /// Coefficients in descending powers, at most six of them.
    pub coefficients: Vec<f64>,
    pub divisor: f64,
}

impl Default for ThrustPolynomial {
    /// Bollard-pull fit of the scale tug, shared equally by both thrusters.
    fn default() -> Self {
        Self {
            coefficients: vec![-0.0001773, 0.001187, 0.04978, 0.151, 1.974, 0.0722],
            divisor: 2.0,
        }
    }
}

impl ThrustPolynomial {
    pub fn new(coefficients: Vec<f64>, divisor: f64) -> Self {
        Self {
            coefficients,
            divisor,
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() || self.coefficients.len() > 6 {
            return Err(Error::Validation(
                "thrust polynomial needs between 1 and 6 coefficients".into(),
            ));
        }
        if !(self.divisor != 0.0 && self.divisor.is_finite())
            || self.coefficients.iter().any(|c| !c.is_finite())
        {
            return Err(Error::Validation("thrust polynomial must be finite".into()));
        }
        Ok(())
    }

    pub fn thrust(&self, n: f64) -> f64 {
        thrust_from_rps(self, n)
    }
}

pub fn thrust_from_rps(poly: &ThrustPolynomial, n: f64) -> f64 {
    poly.coefficients.iter().fold(0.0, |acc, c| acc * n + c) / poly.divisor
}

/// Azimuth slew model `alpha_dot = K (e) / sqrt(e^2 + eps^2)`, `e = alpha_d - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzimuthModel {
    pub k_alpha: f64,
    pub epsilon: f64,
}

impl AzimuthModel {
    pub fn new(k_alpha: f64, epsilon: f64) -> Self {
        Self { k_alpha, epsilon }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_alpha > 0.0) || !(self.epsilon >= 0.0) || !self.k_alpha.is_finite() {
            return Err(Error::Validation(format!(
                "azimuth model needs K > 0 and epsilon >= 0, got K={} epsilon={}",
                self.k_alpha, self.epsilon
            )));
        }
        Ok(())
    }

    pub fn rate(&self, alpha: f64, alpha_d: f64) -> f64 {
        azimuth_rate(self, alpha, alpha_d)
    }
}

pub fn azimuth_rate(model: &AzimuthModel, alpha: f64, alpha_d: f64) -> f64 {
    let e = alpha_d - alpha;
    if model.epsilon == 0.0 {
        // sign(0) = 0 keeps the pod still at its setpoint
        if e == 0.0 {
            0.0
        } else {
            model.k_alpha * e.signum()
        }
    } else {
        model.k_alpha * e / (e * e + model.epsilon * model.epsilon).sqrt()
    }
}

/// Input command `[n1, n2, alpha1_d, alpha2_d]` (RPS, RPS, rad, rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputCommand {
    pub n1: f64,
    pub n2: f64,
    pub alpha1_d: f64,
    pub alpha2_d: f64,
}

impl InputCommand {
    pub fn new(n1: f64, n2: f64, alpha1_d: f64, alpha2_d: f64) -> Self {
        Self {
            n1,
            n2,
            alpha1_d,
            alpha2_d,
        }
    }
}

pub fn config_matrix(alpha1: f64, alpha2: f64, geom: &ThrusterGeometry) -> Matrix3x2<f64> {
    let (s1, c1) = alpha1.sin_cos();
    let (s2, c2) = alpha2.sin_cos();
    Matrix3x2::new(
        c1,
        c2,
        s1,
        s2,
        geom.lx1 * s1 + geom.ly1 * c1,
        geom.lx2 * s2 + geom.ly2 * c2,
    )
}

pub fn torques(alpha1: f64, alpha2: f64, f1: f64, f2: f64, geom: &ThrusterGeometry) -> ControlTorque {
    let t = config_matrix(alpha1, alpha2, geom) * Vector2::new(f1, f2);
    ControlTorque::new(t[0], t[1], t[2])
}

/// Everything between the input command and the generalised forces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThrusterModel {
    pub polynomial: ThrustPolynomial,
    pub geometry: ThrusterGeometry,
    pub azimuth: [AzimuthModel; 2],
}

impl Default for ThrusterModel {
    fn default() -> Self {
        Self {
            polynomial: ThrustPolynomial::default(),
            geometry: ThrusterGeometry::default(),
            azimuth: [AzimuthModel::new(0.1151, 0.0), AzimuthModel::new(0.1161, 0.0)],
        }
    }
}

impl ThrusterModel {
    pub fn validate(&self) -> Result<()> {
        self.polynomial.validate()?;
        self.azimuth[0].validate()?;
        self.azimuth[1].validate()
    }

    /// Generalised forces for the current pod angles and shaft speeds.
    pub fn torque(&self, alpha1: f64, alpha2: f64, n1: f64, n2: f64) -> ControlTorque {
        let f1 = self.polynomial.thrust(n1);
        let f2 = self.polynomial.thrust(n2);
        torques(alpha1, alpha2, f1, f2, &self.geometry)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrustFit {
    pub polynomial: ThrustPolynomial,
    pub residual_norm: f64,
}

/// Least-squares polynomial fit of bollard-pull samples `(rps, force)`.
///
/// The fitted polynomial models the sampled force directly; `divisor`
/// only sets how that force is shared per thruster afterwards.
pub fn fit_thrust_polynomial(samples: &[(f64, f64)], degree: usize, divisor: f64) -> Result<ThrustFit> {
    if degree > 5 {
        return Err(Error::Validation(format!("degree {degree} exceeds 5")));
    }
    if samples.iter().any(|(n, f)| !n.is_finite() || !f.is_finite()) {
        return Err(Error::Validation("non-finite bollard-pull sample".into()));
    }
    let mut abscissae: Vec<f64> = samples.iter().map(|s| s.0).collect();
    abscissae.sort_by(f64::total_cmp);
    abscissae.dedup();
    if abscissae.len() < degree + 1 {
        return Err(Error::InsufficientData(format!(
            "degree {degree} fit needs {} distinct speeds, got {}",
            degree + 1,
            abscissae.len()
        )));
    }

    // Scale the abscissa to [-1, 1] to keep the Vandermonde system well conditioned.
    let scale = samples.iter().map(|s| s.0.abs()).fold(0.0, f64::max).max(1.0);
    let cols = degree + 1;
    let a = DMatrix::from_fn(samples.len(), cols, |i, j| {
        (samples[i].0 / scale).powi((degree - j) as i32)
    });
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-13 * smax {
        return Err(Error::InsufficientData("rank-deficient design matrix".into()));
    }
    let mut x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InsufficientData(e.to_string()))?;
    // One step of iterative refinement.
    let correction = svd
        .solve(&(&b - &a * &x), 0.0)
        .map_err(|e| Error::InsufficientData(e.to_string()))?;
    x += correction;

    let coefficients: Vec<f64> = (0..cols)
        .map(|j| x[j] / scale.powi((degree - j) as i32))
        .collect();
    let poly = ThrustPolynomial::new(coefficients, 1.0);
    let residual_norm = samples
        .iter()
        .map(|(n, f)| (poly.thrust(*n) - f).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ThrustFit {
        polynomial: ThrustPolynomial::new(poly.coefficients, divisor),
        residual_norm,
    })
}

/// Commanded and measured azimuth angles of one pod (rad), uniformly sampled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AzimuthSeries {
    pub commanded: Vec<f64>,
    pub measured: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AzimuthFit {
    pub model: AzimuthModel,
    /// One-step prediction RMSE (rad).
    pub rmse: f64,
    /// Correlation between the free-run simulated and measured angle.
    pub correlation: f64,
    pub report: SolveReport,
}

fn azimuth_step(model: &AzimuthModel, alpha: f64, alpha_d: f64, dt: f64) -> f64 {
    rk4_step(|a: &[f64; 1]| Ok([azimuth_rate(model, a[0], alpha_d)]), &[alpha], dt)
        .map(|a| a[0])
        .unwrap_or(f64::NAN)
}

/// Simulates the pod angle from `alpha0` under the commanded series.
pub fn simulate_azimuth(model: &AzimuthModel, alpha0: f64, commanded: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(commanded.len());
    let mut a = alpha0;
    out.push(a);
    for &cmd in &commanded[..commanded.len().saturating_sub(1)] {
        a = azimuth_step(model, a, cmd, dt);
        out.push(a);
    }
    out
}

/// Identifies `(K, epsilon)` from one pod's log by minimising the squared
/// one-step RK4 prediction error.
pub fn estimate_azimuth_params(series: &AzimuthSeries, dt: f64, options: &SolveOptions) -> Result<AzimuthFit> {
    let n = series.commanded.len();
    if series.measured.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: series.measured.len(),
        });
    }
    if n < 3 {
        return Err(Error::InsufficientData("azimuth log needs at least 3 samples".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Validation("dt must be positive".into()));
    }
    let moving: Vec<f64> = (0..n - 1)
        .filter(|&k| (series.commanded[k] - series.measured[k]).abs() > 1e-9)
        .map(|k| (series.measured[k + 1] - series.measured[k]).abs() / dt)
        .collect();
    if moving.is_empty() {
        return Err(Error::Unidentifiable(
            "no commanded-angle transition in azimuth log".into(),
        ));
    }
    let k0 = moving.iter().copied().fold(0.0, f64::max);
    if !(k0 > 0.0) {
        return Err(Error::Unidentifiable("azimuth never moves".into()));
    }

    let residual = |theta: &[f64]| -> Result<Vec<f64>> {
        let m = AzimuthModel::new(theta[0], theta[1].abs());
        Ok((0..n - 1)
            .map(|k| {
                azimuth_step(&m, series.measured[k], series.commanded[k], dt) - series.measured[k + 1]
            })
            .collect())
    };
    let problem = NlsProblem::new(2, residual).with_bounds(vec![1e-9, 0.0], vec![1e3, 10.0])?;
    let report = nlp::solve(&problem, &[k0, 1e-2], options)?;
    let model = AzimuthModel::new(report.theta[0], report.theta[1]);
    let rmse = (2.0 * report.data_cost / (n - 1) as f64).sqrt();
    let sim = simulate_azimuth(&model, series.measured[0], &series.commanded, dt);
    let correlation = pearson(&sim, &series.measured);
    Ok(AzimuthFit {
        model,
        rmse,
        correlation,
        report,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn thrust_polynomial_values() {
        let p = ThrustPolynomial::default();
        assert_abs_diff_eq!(p.thrust(0.0), 0.0361, epsilon = 1e-15);
        assert_abs_diff_eq!(p.thrust(1.0), 1.123_994_85, epsilon = 1e-12);
        let zero = ThrustPolynomial::new(vec![0.0; 6], 2.0);
        assert_eq!(zero.thrust(7.3), 0.0);
    }

    #[test]
    fn config_matrix_cases() {
        let g = ThrusterGeometry::default();
        let t = config_matrix(0.0, 0.0, &g);
        assert_eq!(t.column(0).as_slice(), &[1.0, 0.0, 0.163]);
        assert_eq!(t.column(1).as_slice(), &[1.0, 0.0, -0.163]);
        let t = config_matrix(FRAC_PI_2, FRAC_PI_2, &g);
        for c in 0..2 {
            assert_abs_diff_eq!(t[(0, c)], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(t[(1, c)], 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(t[(2, c)], -0.8, epsilon = 1e-15);
        }
        let zero = ThrusterGeometry {
            lx1: 0.0,
            ly1: 0.0,
            lx2: 0.0,
            ly2: 0.0,
        };
        let t = config_matrix(0.0, 0.0, &zero);
        assert_eq!(t.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
    }

    #[test]
    fn torque_cases() {
        let g = ThrusterGeometry::default();
        assert_eq!(torques(0.0, 0.0, 1.0, 1.0, &g), ControlTorque::new(2.0, 0.0, 0.0));
        let t = torques(FRAC_PI_2, FRAC_PI_2, 1.0, 1.0, &g);
        assert_abs_diff_eq!(t.tau_u, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.tau_v, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.tau_r, -1.6, epsilon = 1e-15);
        assert_eq!(torques(0.4, -0.2, 0.0, 0.0, &g), ControlTorque::default());
    }

    #[test]
    fn azimuth_rate_cases() {
        let m = AzimuthModel::new(0.1151, 0.0);
        assert_eq!(m.rate(0.3, 0.3), 0.0);
        assert_eq!(m.rate(0.0, 0.3), 0.1151);
        assert_eq!(m.rate(0.3, 0.0), -0.1151);
        let m = AzimuthModel::new(1.0, 1.0);
        assert_abs_diff_eq!(m.rate(0.0, 1.0), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn exact_polynomial_recovery() {
        let truth = ThrustPolynomial::default();
        let samples: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let n = 2.0 * i as f64;
                (n, truth.thrust(n) * truth.divisor)
            })
            .collect();
        let fit = fit_thrust_polynomial(&samples, 5, 2.0).unwrap();
        for (a, b) in fit.polynomial.coefficients.iter().zip(&truth.coefficients) {
            assert_relative_eq!(*a, *b, max_relative = 1e-9);
        }
        assert!(fit.residual_norm < 1e-9);
    }

    #[test]
    fn constant_fit_is_mean() {
        let samples = [(1.0, 2.0), (2.0, 4.0), (3.0, 9.0)];
        let fit = fit_thrust_polynomial(&samples, 0, 1.0).unwrap();
        assert_abs_diff_eq!(fit.polynomial.coefficients[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_fit_matches_normal_equations() {
        let samples: Vec<(f64, f64)> = (0..15)
            .map(|i| {
                let n = i as f64 * 0.7;
                // deterministic pseudo-noise
                (n, 0.3 * n * n + 1.5 * n + 0.2 + 0.05 * ((i * 7919) % 13) as f64 / 13.0)
            })
            .collect();
        let fit = fit_thrust_polynomial(&samples, 2, 1.0).unwrap();
        let a = DMatrix::from_fn(samples.len(), 3, |i, j| samples[i].0.powi(2 - j as i32));
        let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
        let oracle = (a.transpose() * &a).lu().solve(&(a.transpose() * &b)).unwrap();
        for j in 0..3 {
            assert_relative_eq!(fit.polynomial.coefficients[j], oracle[j], max_relative = 1e-8);
        }
        let oracle_res = (&a * &oracle - &b).norm();
        assert_relative_eq!(fit.residual_norm, oracle_res, max_relative = 1e-8);
    }

    #[test]
    fn rank_deficient_fit() {
        let samples = [(1.0, 2.0), (1.0, 2.1), (2.0, 3.0)];
        assert!(matches!(
            fit_thrust_polynomial(&samples, 2, 1.0),
            Err(Error::InsufficientData(_))
        ));
    }

    fn synthetic_azimuth(k: f64, dt: f64) -> AzimuthSeries {
        let model = AzimuthModel::new(k, 0.0);
        let commanded: Vec<f64> = (0..300)
            .map(|i| match (i / 60) % 4 {
                0 => 0.35,
                1 => -0.35,
                2 => 0.17,
                _ => 0.52,
            })
            .collect();
        let measured = simulate_azimuth(&model, 0.0, &commanded, dt);
        AzimuthSeries { commanded, measured }
    }

    #[test]
    fn azimuth_round_trip() {
        for k in [0.1151, 0.1161] {
            let fit = estimate_azimuth_params(&synthetic_azimuth(k, 0.2), 0.2, &SolveOptions::default())
                .unwrap();
            assert!((fit.model.k_alpha - k).abs() / k < 0.01, "{fit:?}");
            assert!(fit.correlation > 0.99);
        }
    }

    #[test]
    fn azimuth_without_transition_is_unidentifiable() {
        let s = AzimuthSeries {
            commanded: vec![0.2; 50],
            measured: vec![0.2; 50],
        };
        assert!(matches!(
            estimate_azimuth_params(&s, 0.2, &SolveOptions::default()),
            Err(Error::Unidentifiable(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn torque_linear_in_force(
            a1 in -3.2..3.2f64, a2 in -3.2..3.2f64,
            f1 in -50.0..50.0f64, f2 in -50.0..50.0f64,
            g1 in -50.0..50.0f64, g2 in -50.0..50.0f64,
            s in -3.0..3.0f64,
        ) {
            let geom = ThrusterGeometry::default();
            let lhs = torques(a1, a2, s * f1 + g1, s * f2 + g2, &geom).to_vector();
            let rhs = s * torques(a1, a2, f1, f2, &geom).to_vector()
                + torques(a1, a2, g1, g2, &geom).to_vector();
            prop_assert!((lhs - rhs).amax() <= 1e-10 * (1.0 + lhs.amax()));
        }

        #[test]
        fn azimuth_rate_odd_and_bounded(
            k in 0.001..2.0f64, eps in 0.0..1.0f64, alpha in -3.0..3.0f64, e in -3.0..3.0f64,
        ) {
            let m = AzimuthModel::new(k, eps);
            let plus = m.rate(alpha, alpha + e);
            let minus = m.rate(alpha + e, alpha);
            prop_assert_eq!(plus, -minus);
            prop_assert!(plus.abs() <= k);
            if eps > 0.0 {
                prop_assert!(plus.abs() < k);
            }
        }

        #[test]
        fn config_columns_unit_planar_norm(a1 in -10.0..10.0f64, a2 in -10.0..10.0f64) {
            let t = config_matrix(a1, a2, &ThrusterGeometry::default());
            for c in 0..2 {
                prop_assert!((t[(0, c)].powi(2) + t[(1, c)].powi(2) - 1.0).abs() < 1e-15);
            }
        }
    }
}
