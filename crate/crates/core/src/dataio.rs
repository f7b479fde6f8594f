//! Maneuver logs, CSV/JSON file formats, and body-velocity reconstruction
//! from earth-fixed positions.
//!
//! Maneuver CSV columns (header required, radians, metres, seconds):
//!
//! ```text
//! t,n1,n2,alpha1_cmd,alpha2_cmd,alpha1,alpha2,x,y,psi[,u,v,r]
//! ```
//!
//! Row `k` holds the measured state at `t[k]` and the command applied from
//! `t[k]` to `t[k+1]`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::actuation::{AzimuthSeries, InputCommand};
use crate::model::{rotation_matrix, BodyVelocity, Pose, ShipState};
use crate::{Error, Result};

/// Default sample period (s).
pub const DEFAULT_DT: f64 = 0.2;

const TIME_TOLERANCE: f64 = 1e-6;

const REQUIRED_COLUMNS: [&str; 10] = [
    "t",
    "n1",
    "n2",
    "alpha1_cmd",
    "alpha2_cmd",
    "alpha1",
    "alpha2",
    "x",
    "y",
    "psi",
];
const VELOCITY_COLUMNS: [&str; 3] = ["u", "v", "r"];

#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverLog {
    pub label: String,
    pub dt: f64,
    pub t: Vec<f64>,
    pub cmds: Vec<InputCommand>,
    /// Measured pod angles `[alpha1, alpha2]`.
    pub alphas: Vec<[f64; 2]>,
    pub poses: Vec<Pose>,
    pub velocities: Option<Vec<BodyVelocity>>,
    /// Diagonal of the per-maneuver weight matrix for `[u, v, r]`.
    pub weight: [f64; 3],
}

impl ManeuverLog {
    /// Builds a log from measured states and the commands applied after each.
    pub fn from_states(
        label: impl Into<String>,
        dt: f64,
        t0: f64,
        cmds: Vec<InputCommand>,
        states: &[ShipState],
    ) -> Result<Self> {
        let log = Self {
            label: label.into(),
            dt,
            t: (0..states.len()).map(|k| t0 + k as f64 * dt).collect(),
            cmds,
            alphas: states.iter().map(|s| [s.alpha1, s.alpha2]).collect(),
            poses: states.iter().map(|s| s.pose).collect(),
            velocities: Some(states.iter().map(|s| s.vel).collect()),
            weight: [1.0; 3],
        };
        log.validate()?;
        Ok(log)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "maneuver `{}` needs at least 2 samples",
                self.label
            )));
        }
        for len in [self.cmds.len(), self.alphas.len(), self.poses.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        if let Some(v) = &self.velocities {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if !(self.dt > 0.0) {
            return Err(Error::Validation(format!(
                "maneuver `{}`: dt must be positive",
                self.label
            )));
        }
        if let Some(k) = (0..n - 1).find(|&k| ((self.t[k + 1] - self.t[k]) - self.dt).abs() > TIME_TOLERANCE) {
            return Err(Error::Validation(format!(
                "maneuver `{}`: non-uniform time step at sample {}",
                self.label,
                k + 1
            )));
        }
        if self.weight.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Validation(format!(
                "maneuver `{}`: weights must be positive",
                self.label
            )));
        }
        Ok(())
    }

    /// Measured whole-ship state at sample `k`. Needs velocity channels.
    pub fn state(&self, k: usize) -> Result<ShipState> {
        let vel = self
            .velocities
            .as_ref()
            .ok_or_else(|| missing_velocities(&self.label))?[k];
        Ok(ShipState {
            alpha1: self.alphas[k][0],
            alpha2: self.alphas[k][1],
            pose: self.poses[k],
            vel,
        })
    }

    pub fn states(&self) -> Result<Vec<ShipState>> {
        (0..self.len()).map(|k| self.state(k)).collect()
    }

    pub fn velocities(&self) -> Result<&[BodyVelocity]> {
        self.velocities
            .as_deref()
            .ok_or_else(|| missing_velocities(&self.label))
    }

    /// Fills missing velocity channels from the pose series.
    pub fn ensure_velocities(&mut self) -> Result<()> {
        if self.velocities.is_none() {
            self.velocities = Some(derive_body_velocities(&self.poses, self.dt)?);
        }
        Ok(())
    }

    /// The first `samples` samples as a new log.
    pub fn truncated(&self, samples: usize) -> Self {
        let n = samples.min(self.len());
        Self {
            label: self.label.clone(),
            dt: self.dt,
            t: self.t[..n].to_vec(),
            cmds: self.cmds[..n].to_vec(),
            alphas: self.alphas[..n].to_vec(),
            poses: self.poses[..n].to_vec(),
            velocities: self.velocities.as_ref().map(|v| v[..n].to_vec()),
            weight: self.weight,
        }
    }
}

fn missing_velocities(label: &str) -> Error {
    Error::Validation(format!("maneuver `{label}` has no velocity channels"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub maneuvers: Vec<ManeuverLog>,
}

impl Dataset {
    pub fn new(maneuvers: Vec<ManeuverLog>) -> Result<Self> {
        let ds = Self { maneuvers };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .maneuvers
            .first()
            .ok_or_else(|| Error::InsufficientData("dataset has no maneuvers".into()))?;
        for m in &self.maneuvers {
            m.validate()?;
            if (m.dt - first.dt).abs() > TIME_TOLERANCE {
                return Err(Error::Validation(format!(
                    "maneuver `{}` has dt {} but dataset uses {}",
                    m.label, m.dt, first.dt
                )));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.maneuvers[0].dt
    }

    pub fn len(&self) -> usize {
        self.maneuvers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maneuvers.is_empty()
    }

    pub fn total_samples(&self) -> usize {
        self.maneuvers.iter().map(ManeuverLog::len).sum()
    }

    /// The first `n` maneuvers.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            maneuvers: self.maneuvers[..n.min(self.len())].to_vec(),
        }
    }

    pub fn get(&self, label: &str) -> Option<&ManeuverLog> {
        self.maneuvers.iter().find(|m| m.label == label)
    }
}

/// Unwraps an angle series in place by removing 2π jumps.
pub fn unwrap_angles(angles: &mut [f64]) {
    use std::f64::consts::{PI, TAU};
    let mut offset = 0.0;
    for k in 1..angles.len() {
        let raw_prev = angles[k - 1] - offset;
        let d = angles[k] - raw_prev;
        if d > PI {
            offset -= TAU * ((d + PI) / TAU).floor();
        } else if d < -PI {
            offset += TAU * ((-d + PI) / TAU).floor();
        }
        angles[k] += offset;
    }
}

/// Wraps an angle into `(-π, π]` for display.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Second-order finite differences: central in the interior, one-sided at
/// both ends.
pub fn finite_difference(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "finite differencing needs at least 3 samples, got {n}"
        )));
    }
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    Ok(out)
}

/// Earth-frame velocity `eta_dot` from a pose series.
pub fn finite_difference_pose(poses: &[Pose], dt: f64) -> Result<Vec<[f64; 3]>> {
    let x = finite_difference(&poses.iter().map(|p| p.x).collect::<Vec<_>>(), dt)?;
    let y = finite_difference(&poses.iter().map(|p| p.y).collect::<Vec<_>>(), dt)?;
    let psi = finite_difference(&poses.iter().map(|p| p.psi).collect::<Vec<_>>(), dt)?;
    Ok((0..poses.len()).map(|k| [x[k], y[k], psi[k]]).collect())
}

/// Body-frame velocity `nu = J(psi)^T eta_dot`.
///
/// Note the transpose: `eta_dot = J(psi) nu` in the kinematics, so the
/// inverse map is the transpose of the rotation.
pub fn derive_body_velocities(poses: &[Pose], dt: f64) -> Result<Vec<BodyVelocity>> {
    let mut psi: Vec<f64> = poses.iter().map(|p| p.psi).collect();
    unwrap_angles(&mut psi);
    let unwrapped: Vec<Pose> = poses
        .iter()
        .zip(&psi)
        .map(|(p, &h)| Pose::new(p.x, p.y, h))
        .collect();
    let eta_dot = finite_difference_pose(&unwrapped, dt)?;
    Ok(eta_dot
        .iter()
        .zip(&psi)
        .map(|(d, &h)| {
            let nu = rotation_matrix(h).transpose() * nalgebra::Vector3::new(d[0], d[1], d[2]);
            BodyVelocity::from_vector(&nu)
        })
        .collect())
}

fn fmt(v: f64) -> String {
    // Rust's Display prints the shortest string that parses back to the same
    // f64, so the files round-trip bit-exactly.
    format!("{v}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a headered numeric CSV. Returns the rows keyed by column name.
struct NumericTable {
    path: PathBuf,
    columns: HashMap<String, usize>,
    rows: Vec<Vec<f64>>,
}

impl NumericTable {
    fn read(path: &Path, required: &[&str]) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = reader.headers().map_err(csv_err(path))?.clone();
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        for col in required {
            if !columns.contains_key(*col) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: 1,
                    message: format!("missing column `{col}`"),
                });
            }
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: line,
                message: e.to_string(),
            })?;
            let values = record
                .iter()
                .enumerate()
                .map(|(c, field)| {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        row: line,
                        message: format!("column `{}`: cannot parse `{field}`", &headers[c]),
                    })?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::Parse {
                            path: path.to_path_buf(),
                            row: line,
                            message: format!("column `{}` is not finite", &headers[c]),
                        })
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(values);
        }
        Ok(Self {
            path: path.to_path_buf(),
            columns,
            rows,
        })
    }

    fn has(&self, col: &str) -> bool {
        self.columns.contains_key(col)
    }

    fn column(&self, col: &str) -> Vec<f64> {
        let i = self.columns[col];
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// Uniform sampling check, returning the step.
    fn uniform_dt(&self, t: &[f64]) -> Result<f64> {
        if t.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{}: need at least 2 rows",
                self.path.display()
            )));
        }
        let dt = t[1] - t[0];
        if !(dt > 0.0) {
            return Err(Error::Parse {
                path: self.path.clone(),
                row: 3,
                message: "time must increase".into(),
            });
        }
        for k in 1..t.len() {
            if ((t[k] - t[k - 1]) - dt).abs() > TIME_TOLERANCE {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    row: k + 2,
                    message: format!("non-uniform time step (expected {dt} s)"),
                });
            }
        }
        Ok(dt)
    }
}

pub fn load_maneuver_csv(path: impl AsRef<Path>) -> Result<ManeuverLog> {
    let path = path.as_ref();
    let table = NumericTable::read(path, &REQUIRED_COLUMNS)?;
    let t = table.column("t");
    let dt = table.uniform_dt(&t)?;
    let (n1, n2) = (table.column("n1"), table.column("n2"));
    let (c1, c2) = (table.column("alpha1_cmd"), table.column("alpha2_cmd"));
    let (a1, a2) = (table.column("alpha1"), table.column("alpha2"));
    let (x, y) = (table.column("x"), table.column("y"));
    let psi = table.column("psi");
    let velocities = if VELOCITY_COLUMNS.iter().all(|c| table.has(c)) {
        let (u, v, r) = (table.column("u"), table.column("v"), table.column("r"));
        Some((0..t.len()).map(|k| BodyVelocity::new(u[k], v[k], r[k])).collect())
    } else {
        None
    };
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let log = ManeuverLog {
        label,
        dt,
        cmds: (0..t.len())
            .map(|k| InputCommand::new(n1[k], n2[k], c1[k], c2[k]))
            .collect(),
        alphas: (0..t.len()).map(|k| [a1[k], a2[k]]).collect(),
        poses: (0..t.len()).map(|k| Pose::new(x[k], y[k], psi[k])).collect(),
        velocities,
        t,
        weight: [1.0; 3],
    };
    log.validate()?;
    Ok(log)
}

pub fn save_maneuver_csv(log: &ManeuverLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    log.validate()?;
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    if log.velocities.is_some() {
        header.extend(VELOCITY_COLUMNS);
    }
    w.write_record(&header).map_err(csv_err(path))?;
    for k in 0..log.len() {
        let c = &log.cmds[k];
        let p = &log.poses[k];
        let mut row = vec![
            log.t[k],
            c.n1,
            c.n2,
            c.alpha1_d,
            c.alpha2_d,
            log.alphas[k][0],
            log.alphas[k][1],
            p.x,
            p.y,
            p.psi,
        ];
        if let Some(v) = &log.velocities {
            row.extend(v[k].to_array());
        }
        w.write_record(row.into_iter().map(fmt)).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Command series for open-loop simulation: `t,n1,n2,alpha1_cmd,alpha2_cmd`.
pub fn load_commands_csv(path: impl AsRef<Path>) -> Result<(f64, Vec<InputCommand>)> {
    let path = path.as_ref();
    let table = NumericTable::read(path, &["t", "n1", "n2", "alpha1_cmd", "alpha2_cmd"])?;
    let t = table.column("t");
    let dt = table.uniform_dt(&t)?;
    let (n1, n2) = (table.column("n1"), table.column("n2"));
    let (c1, c2) = (table.column("alpha1_cmd"), table.column("alpha2_cmd"));
    Ok((
        dt,
        (0..t.len())
            .map(|k| InputCommand::new(n1[k], n2[k], c1[k], c2[k]))
            .collect(),
    ))
}

const TRAJECTORY_COLUMNS: [&str; 9] = ["t", "alpha1", "alpha2", "x", "y", "psi", "u", "v", "r"];

/// Writes a state trajectory as `t,alpha1,alpha2,x,y,psi,u,v,r`.
pub fn export_trajectory_csv(
    trajectory: &[ShipState],
    t0: f64,
    dt: f64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if trajectory.is_empty() {
        return Err(Error::InsufficientData("refusing to write an empty trajectory".into()));
    }
    let mut w = csv_writer(path)?;
    w.write_record(TRAJECTORY_COLUMNS).map_err(csv_err(path))?;
    for (k, s) in trajectory.iter().enumerate() {
        let mut row = vec![t0 + k as f64 * dt];
        row.extend(s.to_array());
        w.write_record(row.into_iter().map(fmt)).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_trajectory_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<ShipState>)> {
    let path = path.as_ref();
    let table = NumericTable::read(path, &TRAJECTORY_COLUMNS)?;
    let t = table.column("t");
    let cols: Vec<Vec<f64>> = TRAJECTORY_COLUMNS[1..].iter().map(|c| table.column(c)).collect();
    let states = (0..t.len())
        .map(|k| {
            let mut a = [0.0; 8];
            for (i, c) in cols.iter().enumerate() {
                a[i] = c[k];
            }
            ShipState::from_array(&a)
        })
        .collect();
    Ok((t, states))
}

/// Bollard-pull samples, header `rps,force_N`.
pub fn load_bollard_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let table = NumericTable::read(path.as_ref(), &["rps", "force_N"])?;
    Ok(table
        .column("rps")
        .into_iter()
        .zip(table.column("force_N"))
        .collect())
}

/// Azimuth log, header `t,alpha_cmd,alpha_meas` (radians). Returns the
/// sample period and the series.
pub fn load_azimuth_csv(path: impl AsRef<Path>) -> Result<(f64, AzimuthSeries)> {
    let table = NumericTable::read(path.as_ref(), &["t", "alpha_cmd", "alpha_meas"])?;
    let dt = table.uniform_dt(&table.column("t"))?;
    Ok((
        dt,
        AzimuthSeries {
            commanded: table.column("alpha_cmd"),
            measured: table.column("alpha_meas"),
        },
    ))
}

pub fn save_azimuth_csv(series: &AzimuthSeries, dt: f64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["t", "alpha_cmd", "alpha_meas"]).map_err(csv_err(path))?;
    for (k, (c, m)) in series.commanded.iter().zip(&series.measured).enumerate() {
        w.write_record([fmt(k as f64 * dt), fmt(*c), fmt(*m)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn export_report_json<T: Serialize + ?Sized>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub path: PathBuf,
    #[serde(default = "unit_weight")]
    pub weight: [f64; 3],
}

fn unit_weight() -> [f64; 3] {
    [1.0; 3]
}

/// Dataset manifest: maneuver files (relative to the manifest), labels,
/// weights and the common sample period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dt: f64,
    pub maneuvers: Vec<ManifestEntry>,
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let manifest: DatasetManifest = read_json(manifest_path)?;
    if manifest.maneuvers.is_empty() {
        return Err(Error::Validation(format!(
            "{}: manifest lists no maneuvers",
            manifest_path.display()
        )));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let maneuvers = manifest
        .maneuvers
        .iter()
        .map(|entry| {
            let mut log = load_maneuver_csv(base.join(&entry.path))?;
            log.label = entry.label.clone();
            log.weight = entry.weight;
            if (log.dt - manifest.dt).abs() > TIME_TOLERANCE {
                return Err(Error::Validation(format!(
                    "maneuver `{}` sampled at {} s, manifest says {} s",
                    entry.label, log.dt, manifest.dt
                )));
            }
            log.ensure_velocities()?;
            log.validate()?;
            Ok(log)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(maneuvers)
}

fn file_stem_for(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes one CSV per maneuver plus `manifest.json` into `dir`. Returns the
/// manifest path.
pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for (i, m) in dataset.maneuvers.iter().enumerate() {
        let name = format!("{:02}_{}.csv", i + 1, file_stem_for(&m.label));
        save_maneuver_csv(m, dir.join(&name))?;
        entries.push(ManifestEntry {
            label: m.label.clone(),
            path: PathBuf::from(name),
            weight: m.weight,
        });
    }
    let manifest = DatasetManifest {
        dt: dataset.dt(),
        maneuvers: entries,
    };
    let path = dir.join("manifest.json");
    export_report_json(&manifest, &path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    const HEADER: &str = "t,n1,n2,alpha1_cmd,alpha2_cmd,alpha1,alpha2,x,y,psi";

    #[test]
    fn minimal_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "m.csv",
            &format!("{HEADER}\n0,1,1,0,0,0,0,0,0,0\n0.2,1,1,0,0,0,0,0.1,0,0\n0.4,1,1,0,0,0,0,0.2,0,0\n"),
        );
        let log = load_maneuver_csv(&p).unwrap();
        assert_eq!(log.len(), 3);
        assert!(log.velocities.is_none());
        assert_abs_diff_eq!(log.dt, 0.2, epsilon = 1e-15);
        assert_eq!(log.label, "m");
    }

    #[test]
    fn non_uniform_time_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "m.csv",
            &format!("{HEADER}\n0,1,1,0,0,0,0,0,0,0\n0.2,1,1,0,0,0,0,0,0,0\n0.5,1,1,0,0,0,0,0,0,0\n"),
        );
        match load_maneuver_csv(&p) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_and_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "t,n1\n0,1\n");
        assert!(matches!(load_maneuver_csv(&p), Err(Error::Parse { .. })));
        let p = write(
            dir.path(),
            "b.csv",
            &format!("{HEADER}\n0,1,1,0,0,0,0,0,0,0\n0.2,1,1,0,0,0,0,NaN,0,0\n"),
        );
        match load_maneuver_csv(&p) {
            Err(Error::Parse { row, message, .. }) => {
                assert_eq!(row, 3);
                assert!(message.contains('x'));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_difference_cases() {
        let ramp: Vec<f64> = (0..10).map(|k| 2.0 * k as f64 * 0.1).collect();
        for d in finite_difference(&ramp, 0.1).unwrap() {
            assert_abs_diff_eq!(d, 2.0, epsilon = 1e-12);
        }
        let quad: Vec<f64> = (0..10).map(|k| (k as f64 * 0.1).powi(2)).collect();
        for (k, d) in finite_difference(&quad, 0.1).unwrap().iter().enumerate() {
            assert_abs_diff_eq!(*d, 2.0 * k as f64 * 0.1, epsilon = 1e-12);
        }
        assert!(finite_difference(&[1.0; 5], 0.1).unwrap().iter().all(|d| *d == 0.0));
        assert!(matches!(
            finite_difference(&[1.0, 2.0], 0.1),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn body_velocity_derivation() {
        // Heading zero: body equals earth velocity.
        let poses: Vec<Pose> = (0..6).map(|k| Pose::new(0.5 * k as f64, -0.2 * k as f64, 0.0)).collect();
        for v in derive_body_velocities(&poses, 1.0).unwrap() {
            assert_abs_diff_eq!(v.u, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(v.v, -0.2, epsilon = 1e-12);
            assert_abs_diff_eq!(v.r, 0.0, epsilon = 1e-12);
        }
        // Moving north at 1 m/s while pointing east.
        let poses: Vec<Pose> = (0..6).map(|k| Pose::new(k as f64 * 0.2, 0.0, FRAC_PI_2)).collect();
        for v in derive_body_velocities(&poses, 0.2).unwrap() {
            assert_abs_diff_eq!(v.u, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v.v, -1.0, epsilon = 1e-12);
        }
        let still = vec![Pose::new(3.0, 4.0, 1.0); 5];
        for v in derive_body_velocities(&still, 0.2).unwrap() {
            assert_eq!(v.to_array(), [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn heading_unwrap_and_wrap() {
        let mut a = vec![3.0, -3.0, -2.9, 3.1];
        unwrap_angles(&mut a);
        assert_abs_diff_eq!(a[1], -3.0 + std::f64::consts::TAU, epsilon = 1e-12);
        assert!(a.windows(2).all(|w| (w[1] - w[0]).abs() < 1.0));
        assert_abs_diff_eq!(wrap_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn empty_trajectory_is_rejected_and_no_file_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("traj.csv");
        assert!(export_trajectory_csv(&[], 0.0, 0.2, &p).is_err());
        assert!(!p.exists());
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("traj.csv");
        let traj: Vec<ShipState> = (0..5)
            .map(|k| ShipState::from_array(&[0.1 * k as f64, 1.0 / 3.0, 2.0, 3.0, 0.7, 1e-9, -0.3, 0.01]))
            .collect();
        export_trajectory_csv(&traj, 1.0, 0.2, &p).unwrap();
        let (t, back) = load_trajectory_csv(&p).unwrap();
        assert_eq!(back, traj);
        assert_eq!(t[0], 1.0);
    }

    #[test]
    fn report_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/report.json");
        let m = DatasetManifest {
            dt: 0.2,
            maneuvers: vec![ManifestEntry {
                label: "a".into(),
                path: "a.csv".into(),
                weight: [1.0, 2.0, 3.0],
            }],
        };
        export_report_json(&m, &p).unwrap();
        let back: DatasetManifest = read_json(&p).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = read_json(&p).unwrap();
        assert!(v["maneuvers"][0]["weight"].is_array());
    }

    #[test]
    fn empty_manifest_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "manifest.json", "{\"dt\":0.2,\"maneuvers\":[]}");
        let err = load_dataset(&p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    fn arb_log() -> impl Strategy<Value = ManeuverLog> {
        (
            3usize..8,
            proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 96),
            proptest::bool::ANY,
        )
            .prop_map(|(n, raw, with_vel)| {
                let val = |i: usize| {
                    let v = raw[i % raw.len()];
                    // keep magnitudes sane so headings stay unwrapped
                    if v.abs() > 1e6 { v.signum() * 1e6 } else { v }
                };
                let dt = 0.2;
                let mut idx = 0;
                let mut next = || {
                    idx += 1;
                    val(idx)
                };
                let cmds = (0..n).map(|_| InputCommand::new(next(), next(), next(), next())).collect();
                let alphas = (0..n).map(|_| [next(), next()]).collect();
                let poses = (0..n)
                    .map(|k| Pose::new(next(), next(), 0.1 * k as f64 + 1e-3 * (next() % 1.0)))
                    .collect();
                let velocities = with_vel.then(|| {
                    (0..n).map(|_| BodyVelocity::new(next(), next(), next())).collect()
                });
                ManeuverLog {
                    label: "p".into(),
                    dt,
                    t: (0..n).map(|k| k as f64 * dt).collect(),
                    cmds,
                    alphas,
                    poses,
                    velocities,
                    weight: [1.0; 3],
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn maneuver_csv_round_trip_is_lossless(log in arb_log()) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("p.csv");
            save_maneuver_csv(&log, &p).unwrap();
            let back = load_maneuver_csv(&p).unwrap();
            prop_assert_eq!(back.t, log.t);
            prop_assert_eq!(back.cmds, log.cmds);
            prop_assert_eq!(back.alphas, log.alphas);
            prop_assert_eq!(back.poses, log.poses);
            prop_assert_eq!(back.velocities, log.velocities);
        }
    }
}
