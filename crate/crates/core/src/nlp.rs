//! Bound- and inequality-constrained nonlinear least squares.
//!
//! Minimises
//!
//! ```text
//! 1/2 |r(theta)|^2 + lambda |theta|^2 + 1/2 w sum_i viol_i(theta)^2
//! ```
//!
//! with a Levenberg–Marquardt iteration on the augmented residual vector.
//! Inequalities enter through an exterior quadratic penalty whose weight `w`
//! is escalated over a fixed number of outer rounds. Bounds are enforced by
//! projecting every trial point.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

type ResidualFn<'a> = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a>;
type JacobianFn<'a> = Box<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Sync + 'a>;
type ScalarFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;

/// Required sign of an inequality constraint value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `h(theta) > 0`
    Positive,
    /// `h(theta) < 0`
    Negative,
}

struct Inequality<'a> {
    name: String,
    sense: Sense,
    func: ScalarFn<'a>,
}

impl Inequality<'_> {
    fn violation(&self, theta: &[f64]) -> f64 {
        let h = (self.func)(theta);
        let v = match self.sense {
            Sense::Positive => -h,
            Sense::Negative => h,
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v.max(0.0)
        }
    }
}

pub struct NlsProblem<'a> {
    dim: usize,
    residual: ResidualFn<'a>,
    jacobian: Option<JacobianFn<'a>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    inequalities: Vec<Inequality<'a>>,
    ridge: f64,
    ridge_center: Option<Vec<f64>>,
}

impl<'a> NlsProblem<'a> {
    pub fn new<F>(dim: usize, residual: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a,
    {
        Self {
            dim,
            residual: Box::new(residual),
            jacobian: None,
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            inequalities: Vec::new(),
            ridge: 0.0,
            ridge_center: None,
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: lower.len(),
            });
        }
        if upper.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: upper.len(),
            });
        }
        if let Some(i) = (0..self.dim).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::Validation(format!(
                "bound {i}: lower {} exceeds upper {}",
                lower[i], upper[i]
            )));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn with_ridge(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Validation(format!(
                "ridge weight must be finite and non-negative, got {lambda}"
            )));
        }
        self.ridge = lambda;
        Ok(self)
    }

    /// Shrinks towards `center` instead of the origin: `lambda |theta - center|^2`.
    pub fn with_ridge_center(mut self, center: Vec<f64>) -> Result<Self> {
        if center.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: center.len(),
            });
        }
        self.ridge_center = Some(center);
        Ok(self)
    }

    pub fn with_inequality<F>(mut self, name: impl Into<String>, sense: Sense, func: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + 'a,
    {
        self.inequalities.push(Inequality {
            name: name.into(),
            sense,
            func: Box::new(func),
        });
        self
    }

    /// Supplies an analytic Jacobian of the data residual, replacing finite
    /// differences.
    pub fn with_jacobian<F>(mut self, jacobian: F) -> Self
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>> + Sync + 'a,
    {
        self.jacobian = Some(Box::new(jacobian));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn residual(&self, theta: &[f64]) -> Result<Vec<f64>> {
        (self.residual)(theta)
    }

    fn project(&self, theta: &mut [f64]) -> bool {
        let mut clipped = false;
        for (i, t) in theta.iter_mut().enumerate() {
            let c = t.clamp(self.lower[i], self.upper[i]);
            if c != *t {
                clipped = true;
                *t = c;
            }
        }
        clipped
    }

    fn augmented(&self, theta: &[f64], weight: f64) -> Result<Vec<f64>> {
        let mut r = (self.residual)(theta)?;
        let s = (2.0 * self.ridge).sqrt();
        if self.ridge > 0.0 {
            match &self.ridge_center {
                Some(c) => r.extend(theta.iter().zip(c).map(|(t, c)| s * (t - c))),
                None => r.extend(theta.iter().map(|t| s * t)),
            }
        }
        let sw = weight.sqrt();
        r.extend(self.inequalities.iter().map(|c| sw * c.violation(theta)));
        Ok(r)
    }

    fn augmented_jacobian(&self, theta: &[f64], weight: f64, step: f64) -> Result<DMatrix<f64>> {
        let data = match &self.jacobian {
            Some(jac) => jac(theta)?,
            None => jacobian_fd(&*self.residual, theta, step)?,
        };
        let n = self.dim;
        let ridge_rows = if self.ridge > 0.0 { n } else { 0 };
        let rows = data.nrows() + ridge_rows + self.inequalities.len();
        let mut j = DMatrix::zeros(rows, n);
        j.rows_mut(0, data.nrows()).copy_from(&data);
        let s = (2.0 * self.ridge).sqrt();
        for i in 0..ridge_rows {
            j[(data.nrows() + i, i)] = s;
        }
        if !self.inequalities.is_empty() {
            let sw = weight.sqrt();
            let pen = |t: &[f64]| -> Result<Vec<f64>> {
                Ok(self
                    .inequalities
                    .iter()
                    .map(|c| sw * c.violation(t))
                    .collect())
            };
            let jp = jacobian_fd(&pen, theta, step)?;
            j.rows_mut(data.nrows() + ridge_rows, self.inequalities.len())
                .copy_from(&jp);
        }
        Ok(j)
    }

    /// Per-constraint status at `theta`.
    pub fn constraint_status(&self, theta: &[f64]) -> Vec<ConstraintStatus> {
        self.inequalities
            .iter()
            .map(|c| ConstraintStatus {
                name: c.name.clone(),
                sense: c.sense,
                value: (c.func)(theta),
                violation: c.violation(theta),
            })
            .collect()
    }
}

/// Central-difference Jacobian with per-parameter step `max(step, step·|θᵢ|)`.
/// Columns are evaluated in parallel and assembled in index order.
pub fn jacobian_fd<F>(residual: &F, theta: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + ?Sized,
{
    let columns: Vec<Vec<f64>> = (0..theta.len())
        .into_par_iter()
        .map(|i| {
            let h = step.max(step * theta[i].abs());
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let rp = residual(&plus).map_err(|_| Error::NonFiniteJacobian { index: i })?;
            let rm = residual(&minus).map_err(|_| Error::NonFiniteJacobian { index: i })?;
            if rp.len() != rm.len() {
                return Err(Error::LengthMismatch {
                    expected: rp.len(),
                    got: rm.len(),
                });
            }
            let width = plus[i] - minus[i];
            let col: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / width).collect();
            if col.iter().all(|v| v.is_finite()) {
                Ok(col)
            } else {
                Err(Error::NonFiniteJacobian { index: i })
            }
        })
        .collect::<Result<_>>()?;
    let m = columns.first().map_or(0, Vec::len);
    if let Some(bad) = columns.iter().find(|c| c.len() != m) {
        return Err(Error::LengthMismatch {
            expected: m,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(m, theta.len(), |r, c| columns[c][r]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    /// Relative cost decrease below which an accepted step ends the round.
    pub cost_tolerance: f64,
    pub initial_damping: f64,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    /// Violations at or below this are treated as satisfied.
    pub constraint_tolerance: f64,
    pub fd_step: f64,
    pub max_rejections: usize,
    /// Keep the per-iteration cost trace in reports written to disk.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-12,
            cost_tolerance: 1e-12,
            initial_damping: 1e-3,
            penalty_initial: 1e2,
            penalty_growth: 10.0,
            penalty_rounds: 4,
            constraint_tolerance: 1e-6,
            fd_step: 1e-6,
            max_rejections: 30,
            trace: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_tolerance", self.gradient_tolerance),
            ("step_tolerance", self.step_tolerance),
            ("cost_tolerance", self.cost_tolerance),
            ("initial_damping", self.initial_damping),
            ("penalty_initial", self.penalty_initial),
            ("penalty_growth", self.penalty_growth),
            ("constraint_tolerance", self.constraint_tolerance),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("solver option {name} must be positive")));
            }
        }
        if self.max_iterations == 0 || self.penalty_rounds == 0 || self.max_rejections == 0 {
            return Err(Error::Validation(
                "solver iteration counts must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceReason {
    GradientTolerance,
    StepTolerance,
    CostTolerance,
    IterationCap,
    Stalled,
}

impl ConvergenceReason {
    pub fn converged(self) -> bool {
        matches!(
            self,
            Self::GradientTolerance | Self::StepTolerance | Self::CostTolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintStatus {
    pub name: String,
    pub sense: Sense,
    pub value: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: usize,
    pub iteration: usize,
    pub cost: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub theta: Vec<f64>,
    /// Penalised cost at `theta` with the last penalty weight.
    pub cost: f64,
    /// `1/2 |r|^2` of the data residual alone.
    pub data_cost: f64,
    pub iterations: usize,
    pub rounds: usize,
    pub reason: ConvergenceReason,
    pub constraints: Vec<ConstraintStatus>,
    pub initial_point_clipped: bool,
    /// Penalised cost after each accepted step, tagged with its round.
    pub trace: Vec<TraceEntry>,
}

impl SolveReport {
    pub fn max_violation(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.violation)
            .fold(0.0, f64::max)
    }
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Gradient of the penalised scalar cost, `Jᵀr + 2λθ + penalty terms`.
pub fn cost_gradient(
    problem: &NlsProblem<'_>,
    theta: &[f64],
    penalty_weight: f64,
    fd_step: f64,
) -> Result<Vec<f64>> {
    let r = DVector::from_vec(problem.augmented(theta, penalty_weight)?);
    let j = problem.augmented_jacobian(theta, penalty_weight, fd_step)?;
    Ok((j.transpose() * r).iter().copied().collect())
}

/// Penalised scalar cost.
pub fn cost(problem: &NlsProblem<'_>, theta: &[f64], penalty_weight: f64) -> Result<f64> {
    Ok(half_sq(&problem.augmented(theta, penalty_weight)?))
}

fn finite_cost(r: &Result<Vec<f64>>) -> Option<f64> {
    match r {
        Ok(v) => {
            let c = half_sq(v);
            c.is_finite().then_some(c)
        }
        Err(_) => None,
    }
}

pub fn solve(problem: &NlsProblem<'_>, theta0: &[f64], options: &SolveOptions) -> Result<SolveReport> {
    options.validate()?;
    if theta0.len() != problem.dim {
        return Err(Error::LengthMismatch {
            expected: problem.dim,
            got: theta0.len(),
        });
    }
    let mut theta = theta0.to_vec();
    let clipped = problem.project(&mut theta);
    if clipped {
        warn!("initial point outside bounds; clipped");
    }
    match problem.residual(&theta) {
        Ok(r) if r.iter().all(|v| v.is_finite()) => {}
        _ => return Err(Error::NonFiniteResidual),
    }
    if problem.residual(&theta)?.len() < problem.dim {
        warn!(
            "fewer residuals than parameters ({} < {})",
            problem.residual(&theta)?.len(),
            problem.dim
        );
    }

    let n = problem.dim;
    let mut trace = Vec::new();
    let mut total_iterations = 0;
    let mut reason = ConvergenceReason::IterationCap;
    let mut weight = options.penalty_initial;
    let mut rounds = 0;

    for round in 0..options.penalty_rounds {
        rounds = round + 1;
        weight = options.penalty_initial * options.penalty_growth.powi(round as i32);
        let mut damping = options.initial_damping;
        let mut r = problem.augmented(&theta, weight)?;
        let mut current = half_sq(&r);
        if !current.is_finite() {
            return Err(Error::NonFiniteResidual);
        }
        let mut jac = problem.augmented_jacobian(&theta, weight, options.fd_step)?;
        let mut rejections = 0;
        reason = ConvergenceReason::IterationCap;

        let mut iteration = 0;
        while iteration < options.max_iterations {
            iteration += 1;
            total_iterations += 1;
            let rv = DVector::from_column_slice(&r);
            let jt = jac.transpose();
            let grad = &jt * &rv;
            if grad.amax() <= options.gradient_tolerance {
                reason = ConvergenceReason::GradientTolerance;
                break;
            }
            let jtj = &jt * &jac;
            let floor = 1e-12 * jtj.diagonal().amax().max(1e-300);
            let scale: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(floor)).collect();

            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += damping * scale[i];
            }
            let delta = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    damping *= 2.0;
                    rejections += 1;
                    if rejections >= options.max_rejections {
                        reason = ConvergenceReason::Stalled;
                        break;
                    }
                    continue;
                }
            };

            let mut trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
            problem.project(&mut trial);
            let step_norm = trial
                .iter()
                .zip(&theta)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let theta_norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();

            let trial_r = problem.augmented(&trial, weight);
            match finite_cost(&trial_r) {
                Some(c) if c < current => {
                    let decrease = current - c;
                    theta = trial;
                    r = trial_r?;
                    let prev = current;
                    current = c;
                    damping = (damping / 3.0).max(1e-15);
                    rejections = 0;
                    trace.push(TraceEntry {
                        round,
                        iteration,
                        cost: current,
                        damping,
                    });
                    if step_norm <= options.step_tolerance * (theta_norm + options.step_tolerance)
                    {
                        reason = ConvergenceReason::StepTolerance;
                        break;
                    }
                    if decrease <= options.cost_tolerance * prev {
                        reason = ConvergenceReason::CostTolerance;
                        break;
                    }
                    jac = problem.augmented_jacobian(&theta, weight, options.fd_step)?;
                }
                _ => {
                    // Linear model promises nothing measurable: the point is
                    // already optimal to working precision.
                    let jd = &jac * &delta;
                    let predicted = -(grad.dot(&delta) + 0.5 * jd.dot(&jd));
                    if predicted <= options.cost_tolerance * current {
                        reason = ConvergenceReason::CostTolerance;
                        break;
                    }
                    if step_norm <= options.step_tolerance * (theta_norm + options.step_tolerance)
                    {
                        reason = ConvergenceReason::StepTolerance;
                        break;
                    }
                    damping *= 2.0;
                    rejections += 1;
                    if rejections >= options.max_rejections {
                        reason = ConvergenceReason::Stalled;
                        break;
                    }
                }
            }
        }

        let satisfied = problem
            .constraint_status(&theta)
            .iter()
            .all(|c| c.violation <= options.constraint_tolerance);
        if satisfied || !reason.converged() {
            break;
        }
    }

    let data_cost = half_sq(&problem.residual(&theta)?);
    Ok(SolveReport {
        cost: cost(problem, &theta, weight)?,
        data_cost,
        constraints: problem.constraint_status(&theta),
        theta,
        iterations: total_iterations,
        rounds,
        reason,
        initial_point_clipped: clipped,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_quadratic() {
        let p = NlsProblem::new(1, |t: &[f64]| Ok(vec![t[0] - 3.0]));
        let rep = solve(&p, &[0.0], &SolveOptions::default()).unwrap();
        assert_abs_diff_eq!(rep.theta[0], 3.0, epsilon = 1e-10);
        assert!(rep.reason.converged());
    }

    #[test]
    fn penalised_boundary_solution() {
        let p = NlsProblem::new(1, |t: &[f64]| Ok(vec![t[0]]))
            .with_inequality("theta>1", Sense::Positive, |t| t[0] - 1.0);
        let rep = solve(&p, &[5.0], &SolveOptions::default()).unwrap();
        // exterior penalty optimum is w/(1+w) at the final weight
        assert!((rep.theta[0] - 1.0).abs() < 1e-4, "{}", rep.theta[0]);
        assert!(rep.rounds > 1);
    }

    #[test]
    fn negative_sense_constraint() {
        let p = NlsProblem::new(1, |t: &[f64]| Ok(vec![t[0] - 4.0]))
            .with_inequality("theta<2", Sense::Negative, |t| t[0] - 2.0);
        let rep = solve(&p, &[0.0], &SolveOptions::default()).unwrap();
        assert!((rep.theta[0] - 2.0).abs() < 1e-4, "{}", rep.theta[0]);
    }

    #[test]
    fn bounds_project_and_clip() {
        let p = NlsProblem::new(2, |t: &[f64]| Ok(vec![t[0] - 3.0, t[1] + 3.0]))
            .with_bounds(vec![-1.0, -1.0], vec![1.0, 1.0])
            .unwrap();
        let rep = solve(&p, &[5.0, 0.0], &SolveOptions::default()).unwrap();
        assert!(rep.initial_point_clipped);
        assert_eq!(rep.theta, vec![1.0, -1.0]);
        assert!(NlsProblem::new(1, |t: &[f64]| Ok(vec![t[0]]))
            .with_bounds(vec![1.0], vec![0.0])
            .is_err());
    }

    #[test]
    fn non_finite_start_fails() {
        let p = NlsProblem::new(1, |t: &[f64]| Ok(vec![1.0 / t[0]]));
        assert!(matches!(
            solve(&p, &[0.0], &SolveOptions::default()),
            Err(Error::NonFiniteResidual)
        ));
    }

    #[test]
    fn jacobian_failure_propagates() {
        // Residual that errors everywhere except the start.
        let p = NlsProblem::new(1, |t: &[f64]| {
            if t[0] == 0.0 {
                Ok(vec![1.0])
            } else {
                Err(Error::IntegrationBlowup { step: 0 })
            }
        });
        assert!(solve(&p, &[0.0], &SolveOptions::default()).is_err());
    }

    #[test]
    fn iteration_cap() {
        let p = NlsProblem::new(2, |t: &[f64]| {
            Ok(vec![10.0 * (t[1] - t[0] * t[0]), 1.0 - t[0]])
        });
        let opts = SolveOptions {
            max_iterations: 1,
            ..Default::default()
        };
        let rep = solve(&p, &[-1.2, 1.0], &opts).unwrap();
        assert_eq!(rep.reason, ConvergenceReason::IterationCap);
        let rep = solve(&p, &[-1.2, 1.0], &SolveOptions::default()).unwrap();
        assert!(rep.reason.converged());
        assert_abs_diff_eq!(rep.theta[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rep.theta[1], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn jacobian_fd_cases() {
        let j = jacobian_fd(&|t: &[f64]| Ok(vec![t[0] * t[0]]), &[3.0], 1e-6).unwrap();
        assert_abs_diff_eq!(j[(0, 0)], 6.0, epsilon = 1e-6);
        let j = jacobian_fd(&|_: &[f64]| Ok(vec![0.0, 0.0]), &[1.0, 2.0, 3.0], 1e-6).unwrap();
        assert_eq!(j, DMatrix::zeros(2, 3));
        let a = [[1.0, 2.0], [3.0, -4.0], [0.5, 0.25]];
        let j = jacobian_fd(
            &|t: &[f64]| Ok(a.iter().map(|row| row[0] * t[0] + row[1] * t[1]).collect()),
            &[0.3, -0.7],
            1e-6,
        )
        .unwrap();
        for (i, row) in a.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert_abs_diff_eq!(j[(i, k)], *v, epsilon = 1e-9);
            }
        }
        let err = jacobian_fd(
            &|t: &[f64]| Ok(vec![if t[1] > 1.0 { f64::NAN } else { 0.0 }]),
            &[0.0, 1.0],
            1e-6,
        );
        assert!(matches!(err, Err(Error::NonFiniteJacobian { index: 1 })));
    }

    #[test]
    fn analytic_jacobian_hook_is_used() {
        let p = NlsProblem::new(1, |t: &[f64]| Ok(vec![t[0] - 2.0]))
            .with_jacobian(|_| Ok(DMatrix::from_element(1, 1, 1.0)));
        let rep = solve(&p, &[0.0], &SolveOptions::default()).unwrap();
        assert_abs_diff_eq!(rep.theta[0], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn ridge_limit_shrinks_unconstrained_parameter() {
        // theta[1] barely touches the data; large ridge drives it to zero.
        let p = |lambda| {
            NlsProblem::new(2, |t: &[f64]| Ok(vec![t[0] - 1.0, 1e-3 * (t[1] - 5.0)]))
                .with_ridge(lambda)
                .unwrap()
        };
        let small = solve(&p(0.0), &[0.0, 0.0], &SolveOptions::default()).unwrap();
        let big = solve(&p(1e6), &[0.0, 0.0], &SolveOptions::default()).unwrap();
        assert_abs_diff_eq!(small.theta[1], 5.0, epsilon = 1e-6);
        assert!(big.theta[1].abs() < 1e-9);
        assert!(NlsProblem::new(1, |t: &[f64]| Ok(vec![t[0]]))
            .with_ridge(-1.0)
            .is_err());
    }

    #[test]
    fn options_validation() {
        let bad = SolveOptions {
            fd_step: 0.0,
            ..Default::default()
        };
        let p = NlsProblem::new(1, |t: &[f64]| Ok(vec![t[0]]));
        assert!(solve(&p, &[0.0], &bad).is_err());
    }
}
