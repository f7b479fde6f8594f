//! Multi-step prediction, RMSE reports and the 22- versus 6-parameter
//! relative-error comparison.
//!
//! Relative error is `100 * RMSE(pred - meas) / RMS(meas)`, in percent.
//! Accelerations are finite differences of the velocity series and
//! distances are cumulative trapezoidal integrals of the body velocities,
//! computed the same way for prediction and measurement.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::ThrusterModel;
use crate::dataio::{export_report_json, finite_difference, wrap_angle, Dataset, ManeuverLog};
use crate::model::{simulate, Dynamics, ShipParams22, ShipParams6, ShipState};
use crate::plot::{bar_plot, line_plot, Series};
use crate::{Error, Result};

pub const CHANNELS: [&str; 8] = ["x", "y", "psi", "u", "v", "r", "alpha1", "alpha2"];

/// `{1, 5, 10, ..., 50}`.
pub fn default_horizons() -> Vec<usize> {
    std::iter::once(1).chain((5..=50).step_by(5)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionReport {
    pub label: String,
    pub horizon: usize,
    /// Per channel, ordered as [`CHANNELS`].
    pub rmse: [f64; 8],
    #[serde(skip)]
    pub predicted: Vec<ShipState>,
    #[serde(skip)]
    pub measured: Vec<ShipState>,
}

impl PredictionReport {
    pub fn channel(&self, name: &str) -> Option<f64> {
        CHANNELS.iter().position(|c| *c == name).map(|i| self.rmse[i])
    }
}

/// State values in [`CHANNELS`] order.
pub fn channel_values(s: &ShipState) -> [f64; 8] {
    [s.pose.x, s.pose.y, s.pose.psi, s.vel.u, s.vel.v, s.vel.r, s.alpha1, s.alpha2]
}

/// Root-mean-square difference of two equal-length series.
pub fn rmse_series(predicted: &[f64], measured: &[f64]) -> Result<f64> {
    if predicted.len() != measured.len() {
        return Err(Error::LengthMismatch {
            expected: measured.len(),
            got: predicted.len(),
        });
    }
    if measured.is_empty() {
        return Err(Error::InsufficientData("RMSE of an empty series".into()));
    }
    let ss: f64 = predicted.iter().zip(measured).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / measured.len() as f64).sqrt())
}

/// Per-channel RMSE of two state series. Heading differences are wrapped to
/// `(-pi, pi]`, so either series may be wrapped.
pub fn rmse(predicted: &[ShipState], measured: &[ShipState]) -> Result<[f64; 8]> {
    if predicted.len() != measured.len() {
        return Err(Error::LengthMismatch {
            expected: measured.len(),
            got: predicted.len(),
        });
    }
    let mut out = [0.0; 8];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut a: Vec<f64> = predicted.iter().map(|s| channel_values(s)[i]).collect();
        let b: Vec<f64> = measured.iter().map(|s| channel_values(s)[i]).collect();
        if CHANNELS[i] == "psi" {
            for (x, y) in a.iter_mut().zip(&b) {
                *x = y + wrap_angle(*x - y);
            }
        }
        *slot = rmse_series(&a, &b)?;
    }
    Ok(out)
}

/// Rolls the whole ship forward in windows of `n` steps, re-anchoring at the
/// measured state at each window start, and compares every predicted sample
/// with the measurement.
pub fn predict_n_steps<D: Dynamics + ?Sized>(
    p: &D,
    thr: &ThrusterModel,
    log: &ManeuverLog,
    n: usize,
) -> Result<PredictionReport> {
    if n == 0 {
        return Err(Error::Validation("prediction horizon must be at least 1".into()));
    }
    if log.len() <= n {
        return Err(Error::InsufficientData(format!(
            "maneuver `{}` has {} samples, horizon {n} needs more",
            log.label,
            log.len()
        )));
    }
    let states = log.states()?;
    let mut predicted = Vec::with_capacity(log.len() - 1);
    let mut start = 0;
    while start + 1 < log.len() {
        let steps = n.min(log.len() - 1 - start);
        let traj = simulate(p, thr, &states[start], &log.cmds[start..start + steps], log.dt)?;
        predicted.extend_from_slice(&traj[1..]);
        start += steps;
    }
    let measured = states[1..].to_vec();
    Ok(PredictionReport {
        label: log.label.clone(),
        horizon: n,
        rmse: rmse(&predicted, &measured)?,
        predicted,
        measured,
    })
}

/// Full-rollout velocity RMSE `[u, v, r]`.
pub fn rollout_velocity_rmse<D: Dynamics + ?Sized>(p: &D, thr: &ThrusterModel, log: &ManeuverLog) -> Result<[f64; 3]> {
    let r = predict_n_steps(p, thr, log, log.len() - 1)?;
    Ok([r.rmse[3], r.rmse[4], r.rmse[5]])
}

pub const TABLE_VARIABLES: [&str; 9] = [
    "surge velocity",
    "sway velocity",
    "yaw velocity",
    "surge acceleration",
    "sway acceleration",
    "yaw acceleration",
    "surge distance",
    "sway distance",
    "yaw distance",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelativeErrorRow {
    pub variable: String,
    /// Percent; `None` where the measured signal is identically zero.
    pub errors: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub models: Vec<String>,
    pub definition: String,
    pub rows: Vec<RelativeErrorRow>,
}

impl ComparisonReport {
    pub fn get(&self, variable: &str, model: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.variable == variable)?.errors[model]
    }
}

pub const RELATIVE_ERROR_DEFINITION: &str = "100 * RMSE(pred - meas) / RMS(meas) over all samples of all maneuvers, full rollouts; accelerations by finite differences of velocities, distances by trapezoidal integration of body velocities";

fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// The nine signals for one velocity series: velocities, accelerations,
/// distances.
fn nine_signals(vel: &[[f64; 3]], dt: f64) -> Result<[Vec<f64>; 9]> {
    let mut out: [Vec<f64>; 9] = Default::default();
    for i in 0..3 {
        let v: Vec<f64> = vel.iter().map(|s| s[i]).collect();
        out[3 + i] = finite_difference(&v, dt)?;
        out[6 + i] = cumulative_trapezoid(&v, dt);
        out[i] = v;
    }
    Ok(out)
}

fn signals_for<D: Dynamics + ?Sized>(
    p: &D,
    thr: &ThrusterModel,
    dataset: &Dataset,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut pred = vec![Vec::new(); 9];
    let mut meas = vec![Vec::new(); 9];
    for log in &dataset.maneuvers {
        let states = log.states()?;
        let traj = simulate(p, thr, &states[0], &log.cmds[..log.len() - 1], log.dt)?;
        let pv: Vec<[f64; 3]> = traj.iter().map(|s| s.vel.to_array()).collect();
        let mv: Vec<[f64; 3]> = states.iter().map(|s| s.vel.to_array()).collect();
        for (i, (a, b)) in nine_signals(&pv, log.dt)?.into_iter().zip(nine_signals(&mv, log.dt)?).enumerate() {
            pred[i].extend(a);
            meas[i].extend(b);
        }
    }
    Ok((pred, meas))
}

fn relative_error(pred: &[f64], meas: &[f64]) -> Result<Option<f64>> {
    let rms = (meas.iter().map(|x| x * x).sum::<f64>() / meas.len() as f64).sqrt();
    if rms <= 1e-12 {
        return Ok(None);
    }
    Ok(Some(100.0 * rmse_series(pred, meas)? / rms))
}

/// Relative errors of any number of models on the same data.
pub fn relative_errors(
    models: &[(&str, &dyn Dynamics)],
    thr: &ThrusterModel,
    dataset: &Dataset,
) -> Result<ComparisonReport> {
    let per_model = models
        .iter()
        .map(|(_, m)| signals_for(*m, thr, dataset))
        .collect::<Result<Vec<_>>>()?;
    let rows = TABLE_VARIABLES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            Ok(RelativeErrorRow {
                variable: name.to_string(),
                errors: per_model
                    .iter()
                    .map(|(pred, meas)| relative_error(&pred[i], &meas[i]))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        models: models.iter().map(|(n, _)| n.to_string()).collect(),
        definition: RELATIVE_ERROR_DEFINITION.into(),
        rows,
    })
}

/// 22-parameter model in column 0, 6-parameter model in column 1.
pub fn relative_error_table(
    p22: &ShipParams22,
    p6: &ShipParams6,
    thr: &ThrusterModel,
    dataset: &Dataset,
) -> Result<ComparisonReport> {
    relative_errors(&[("22-parameter", p22), ("6-parameter", p6)], thr, dataset)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub horizon: usize,
    /// Mean over maneuvers, per channel.
    pub mean_rmse: [f64; 8],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub channels: Vec<String>,
    pub horizons: Vec<usize>,
    pub reports: Vec<PredictionReport>,
    pub by_horizon: Vec<HorizonSummary>,
    pub comparison: Option<ComparisonReport>,
}

/// Runs every (maneuver, horizon) pair. Horizons a maneuver is too short for
/// are skipped for that maneuver.
pub fn validation_suite<D: Dynamics + ?Sized>(
    p: &D,
    thr: &ThrusterModel,
    dataset: &Dataset,
    horizons: &[usize],
) -> Result<ValidationSummary> {
    if horizons.is_empty() {
        return Err(Error::Validation("no prediction horizons given".into()));
    }
    if horizons.contains(&0) {
        return Err(Error::Validation("prediction horizons must be at least 1".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..dataset.len())
        .flat_map(|m| horizons.iter().map(move |&h| (m, h)))
        .filter(|&(m, h)| dataset.maneuvers[m].len() > h)
        .collect();
    let reports = pairs
        .par_iter()
        .map(|&(m, h)| predict_n_steps(p, thr, &dataset.maneuvers[m], h))
        .collect::<Result<Vec<_>>>()?;
    let by_horizon = horizons
        .iter()
        .map(|&h| {
            let sel: Vec<&PredictionReport> = reports.iter().filter(|r| r.horizon == h).collect();
            let mut mean = [0.0; 8];
            for r in &sel {
                for i in 0..8 {
                    mean[i] += r.rmse[i] / sel.len() as f64;
                }
            }
            HorizonSummary { horizon: h, mean_rmse: mean }
        })
        .collect();
    Ok(ValidationSummary {
        channels: CHANNELS.iter().map(|s| s.to_string()).collect(),
        horizons: horizons.to_vec(),
        reports,
        by_horizon,
        comparison: None,
    })
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `rmse.csv`, `summary.json` and SVG plots into `dir`. Returns the
/// written paths.
pub fn write_validation_outputs(summary: &ValidationSummary, dataset: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let csv_path = dir.join("rmse.csv");
    let mut csv = String::from("maneuver,horizon,channel,rmse\n");
    for r in &summary.reports {
        for (c, v) in CHANNELS.iter().zip(r.rmse) {
            csv.push_str(&format!("{},{},{},{}\n", r.label, r.horizon, c, v));
        }
    }
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    written.push(csv_path);

    let json_path = dir.join("summary.json");
    export_report_json(summary, &json_path)?;
    written.push(json_path);

    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    let categories: Vec<String> = summary.by_horizon.iter().map(|h| h.horizon.to_string()).collect();
    let bars: Vec<(&str, Vec<f64>)> = [3, 4, 5]
        .iter()
        .map(|&i| (CHANNELS[i], summary.by_horizon.iter().map(|h| h.mean_rmse[i]).collect()))
        .collect();
    let path = plots.join("rmse_vs_horizon.svg");
    let svg = bar_plot("Mean velocity RMSE by prediction horizon", "RMSE", &categories, &bars);
    fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let longest = summary.horizons.iter().copied().max().unwrap_or(1);
    for log in &dataset.maneuvers {
        let Some(r) = summary
            .reports
            .iter()
            .filter(|r| r.label == log.label)
            .max_by_key(|r| (r.horizon == longest, r.horizon))
        else {
            continue;
        };
        let t: Vec<f64> = log.t[1..].to_vec();
        let path = plots.join(format!("{}_xy.svg", file_stem(&log.label)));
        let svg = line_plot(
            &format!("{} path, horizon {}", log.label, r.horizon),
            "y (m)",
            "x (m)",
            &[
                Series {
                    name: "measured",
                    points: r.measured.iter().map(|s| (s.pose.y, s.pose.x)).collect(),
                },
                Series {
                    name: "predicted",
                    points: r.predicted.iter().map(|s| (s.pose.y, s.pose.x)).collect(),
                },
            ],
        );
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);

        let path = plots.join(format!("{}_r.svg", file_stem(&log.label)));
        let svg = line_plot(
            &format!("{} yaw rate, horizon {}", log.label, r.horizon),
            "t (s)",
            "r (rad/s)",
            &[
                Series {
                    name: "measured",
                    points: t.iter().zip(&r.measured).map(|(t, s)| (*t, s.vel.r)).collect(),
                },
                Series {
                    name: "predicted",
                    points: t.iter().zip(&r.predicted).map(|(t, s)| (*t, s.vel.r)).collect(),
                },
            ],
        );
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::build_lo_residuals;
    use crate::synthgen::{generate_dataset, ManeuverPlan, NoiseSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn data() -> Dataset {
        let plans = vec![
            ManeuverPlan::straight_line(5.0).with_timing(20.0, 0.2),
            ManeuverPlan::zigzag(7.0, 20.0, 20.0).with_timing(40.0, 0.2),
        ];
        generate_dataset(&plans, &ShipParams22::qiuxin_no5(), &ThrusterModel::default(), &NoiseSpec::none()).unwrap()
    }

    fn perturbed() -> ShipParams22 {
        let mut a = ShipParams22::qiuxin_no5().to_array();
        for v in a.iter_mut() {
            *v *= 1.03;
        }
        ShipParams22::from_array(&a)
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse_series(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse_series(&[1.5, 2.5, 3.5], &[1.0, 2.0, 3.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rmse_series(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(rmse_series(&[0.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn channel_rmse_is_labelled_correctly() {
        let a = ShipState::from_array(&[1.0, 2.0, 3.0, 4.0, 0.5, 6.0, 7.0, 8.0]);
        let zero = ShipState::at_rest();
        let r = rmse(&[a], &[zero]).unwrap();
        let expect = [("x", 3.0), ("y", 4.0), ("psi", 0.5), ("u", 6.0), ("v", 7.0), ("r", 8.0), ("alpha1", 1.0), ("alpha2", 2.0)];
        for (name, v) in expect {
            let i = CHANNELS.iter().position(|c| *c == name).unwrap();
            assert_eq!(r[i], v, "{name}");
        }
    }

    #[test]
    fn heading_rmse_ignores_full_turns() {
        let mut a = ShipState::at_rest();
        a.pose.psi = 0.1 + 4.0 * std::f64::consts::PI;
        let mut b = ShipState::at_rest();
        b.pose.psi = -0.1;
        let r = rmse(&[a], &[b]).unwrap();
        assert_abs_diff_eq!(r[2], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn one_step_prediction_at_truth_is_exact() {
        let ds = data();
        let thr = ThrusterModel::default();
        for log in &ds.maneuvers {
            let r = predict_n_steps(&ShipParams22::qiuxin_no5(), &thr, log, 1).unwrap();
            assert!(r.rmse.iter().all(|v| *v < 1e-9), "{:?}", r.rmse);
            let full = predict_n_steps(&ShipParams22::qiuxin_no5(), &thr, log, 50).unwrap();
            assert!(full.rmse.iter().all(|v| *v < 1e-9));
        }
    }

    #[test]
    fn one_step_velocity_matches_lo_residual() {
        let ds = data();
        let thr = ThrusterModel::default();
        let p = perturbed();
        let lo = build_lo_residuals(&p, &thr, &ds).unwrap();
        let mut k = 0;
        for log in &ds.maneuvers {
            let r = predict_n_steps(&p, &thr, log, 1).unwrap();
            for (pr, me) in r.predicted.iter().zip(&r.measured) {
                let (a, b) = (pr.vel.to_array(), me.vel.to_array());
                for i in 0..3 {
                    assert_eq!(a[i] - b[i], lo[k]);
                    k += 1;
                }
            }
        }
        assert_eq!(k, lo.len());
    }

    #[test]
    fn longer_horizon_accumulates_error() {
        let ds = data();
        let thr = ThrusterModel::default();
        let p = perturbed();
        let log = &ds.maneuvers[1];
        let r1 = predict_n_steps(&p, &thr, log, 1).unwrap();
        let r50 = predict_n_steps(&p, &thr, log, 50).unwrap();
        for i in 3..6 {
            assert!(r50.rmse[i] >= r1.rmse[i], "{}", CHANNELS[i]);
        }
    }

    #[test]
    fn horizon_checks() {
        let ds = data();
        let thr = ThrusterModel::default();
        let log = &ds.maneuvers[0];
        assert!(matches!(
            predict_n_steps(&ShipParams22::qiuxin_no5(), &thr, log, log.len()),
            Err(Error::InsufficientData(_))
        ));
        assert!(validation_suite(&ShipParams22::qiuxin_no5(), &thr, &ds, &[]).is_err());
        assert_eq!(default_horizons(), vec![1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50]);
    }

    #[test]
    fn relative_errors_zero_for_generator_and_na_for_pure_surge() {
        let ds = data();
        let thr = ThrusterModel::default();
        let truth = ShipParams22::qiuxin_no5();
        let six = ShipParams6::from_array(&[200.0, 200.0, 100.0, 40.0, 150.0, 50.0]);
        let table = relative_error_table(&truth, &six, &thr, &ds).unwrap();
        for row in &table.rows {
            assert!(row.errors[0].unwrap() < 1e-6, "{}", row.variable);
        }
        let surge_only = ds.prefix(1);
        let t = relative_error_table(&truth, &six, &thr, &surge_only).unwrap();
        assert!(t.get("sway velocity", 0).is_none());
        assert!(t.get("surge velocity", 0).is_some());
    }

    #[test]
    fn suite_outputs_are_deterministic() {
        let ds = data();
        let thr = ThrusterModel::default();
        let s = validation_suite(&perturbed(), &thr, &ds, &[1, 10]).unwrap();
        assert_eq!(s.reports.len(), 4);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = write_validation_outputs(&s, &ds, a.path()).unwrap();
        let fb = write_validation_outputs(&s, &ds, b.path()).unwrap();
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let csv = fs::read_to_string(a.path().join("rmse.csv")).unwrap();
        assert!(csv.starts_with("maneuver,horizon,channel,rmse\n"));
        assert_eq!(csv.lines().count(), 1 + 4 * 8);
    }

    proptest! {
        #[test]
        fn rmse_is_permutation_invariant(pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..40), seed in 0u64..1000) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut idx: Vec<usize> = (0..a.len()).collect();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let pa: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
            let pb: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
            let x = rmse_series(&a, &b).unwrap();
            let y = rmse_series(&pa, &pb).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn constant_offset_rmse(c in -100.0f64..100.0, n in 1usize..30) {
            let a = vec![c; n];
            let b = vec![0.0; n];
            prop_assert!((rmse_series(&a, &b).unwrap() - c.abs()).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }
}
