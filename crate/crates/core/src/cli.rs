//! Command-line front end: `generate`, `estimate`, `validate`, `simulate`.
//!
//! Angles are degrees on the command line and radians everywhere else.
//! Exit codes: 0 success (possibly with warnings), 1 runtime or I/O failure,
//! 2 usage or validation failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::actuation::ThrusterModel;
use crate::dataio::{
    export_report_json, export_trajectory_csv, load_commands_csv, load_dataset, read_json, save_dataset,
};
use crate::estimation::{
    estimate, ConstraintMode, EstimationConfig, EstimationMode, EstimationResult, HullSpecs, InitRecord,
};
use crate::model::{simulate, BodyVelocity, Dynamics, Pose, ShipParams22, ShipParams6, ShipState};
use crate::synthgen::{generate_dataset, standard_12_plans, validation_plans, NoiseSpec, Scenario};
use crate::validation::{default_horizons, relative_error_table, validation_suite, write_validation_outputs};
use crate::{Error, Result};

/// Settings shared by all subcommands, loaded with `--config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalConfig {
    pub manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Overrides the sample period of every generated maneuver.
    pub dt: Option<f64>,
    pub estimation: EstimationConfig,
    pub thruster: ThrusterModel,
    pub specs: Option<HullSpecs>,
}

#[derive(Debug, Parser)]
#[command(name = "shipid", version, about = "Ship model identification from maneuver logs")]
pub struct Cli {
    /// JSON file with global settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Lo,
    Go,
    Combined,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    /// Hull-spec formulas.
    Empirical,
    /// The file given with --params.
    File,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SetArg {
    /// The twelve estimation maneuvers.
    Standard,
    /// 24 zigzags and 4 turning circles.
    Validation,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate maneuvers and write CSVs plus a manifest.
    Generate {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scenario JSON (maneuver plans and noise); defaults to --set.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "standard")]
        set: SetArg,
        /// Ground-truth parameters; defaults to the built-in tug.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Pose noise `x,y,psi` in m, m, degrees.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        noise_pose: Option<Vec<f64>>,
        /// Velocity noise `u,v,r` in m/s, m/s, degrees/s.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        noise_vel: Option<Vec<f64>>,
    },
    /// Fit model parameters to a dataset.
    Estimate {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value = "empirical")]
        init: InitArg,
        /// Hull specs JSON for the empirical initial guess.
        #[arg(long)]
        specs: Option<PathBuf>,
        /// Initial parameters for `--init file`.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Keep per-iteration solver traces in the output.
        #[arg(long)]
        trace: bool,
        /// Apply the stability inequalities with the printed signs.
        #[arg(long)]
        paper_literal_constraints: bool,
        /// Also fit the 6-parameter model and write it next to the output.
        #[arg(long)]
        six: bool,
    },
    /// Multi-horizon prediction reports and plots.
    Validate {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// 22-parameter JSON or an estimation result.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
        /// `six:<params6.json>` adds the relative-error comparison.
        #[arg(long)]
        compare: Option<String>,
    },
    /// Open-loop rollout of a command series.
    Simulate {
        /// 22- or 6-parameter JSON, or an estimation result.
        #[arg(long)]
        params: PathBuf,
        /// CSV `t,n1,n2,alpha1_cmd,alpha2_cmd` (radians).
        #[arg(long)]
        commands: PathBuf,
        /// Initial state `alpha1,alpha2,x,y,psi,u,v,r` with angles in
        /// degrees and yaw rate in degrees/s.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<GlobalConfig> {
    match path {
        Some(p) => read_json(p),
        None => Ok(GlobalConfig::default()),
    }
}

fn required(arg: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    arg.or_else(|| fallback.clone())
        .ok_or_else(|| Error::Validation(format!("--{name} is required (or set `{name}` in the config)")))
}

/// Parameters from a bare parameter file or an estimation result.
fn load_params22(path: &Path) -> Result<ShipParams22> {
    let value: serde_json::Value = read_json(path)?;
    let as_json_err = |source| Error::Json {
        path: path.to_path_buf(),
        source,
    };
    if value.get("provenance").is_some() {
        let res: EstimationResult = serde_json::from_value(value).map_err(as_json_err)?;
        return Ok(*res.best());
    }
    serde_json::from_value(value).map_err(as_json_err)
}

enum AnyModel {
    Full(ShipParams22),
    Six(ShipParams6),
}

impl AnyModel {
    fn dynamics(&self) -> &dyn Dynamics {
        match self {
            AnyModel::Full(p) => p,
            AnyModel::Six(p) => p,
        }
    }
}

fn load_any_model(path: &Path) -> Result<AnyModel> {
    let value: serde_json::Value = read_json(path)?;
    let is_six = match &value {
        serde_json::Value::Array(a) => a.len() == 6,
        serde_json::Value::Object(o) => o.contains_key("d11"),
        _ => false,
    };
    if is_six {
        let p: ShipParams6 = serde_json::from_value(value).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        p.validate()?;
        Ok(AnyModel::Six(p))
    } else {
        let p = load_params22(path)?;
        p.validate()?;
        Ok(AnyModel::Full(p))
    }
}

fn expect_len(name: &str, v: &Option<Vec<f64>>, n: usize) -> Result<()> {
    match v {
        Some(v) if v.len() != n => Err(Error::Validation(format!(
            "--{name} takes {n} comma-separated values, got {}",
            v.len()
        ))),
        _ => Ok(()),
    }
}

fn noise_from_args(pose: Option<Vec<f64>>, vel: Option<Vec<f64>>, base: NoiseSpec) -> Result<NoiseSpec> {
    expect_len("noise-pose", &pose, 3)?;
    expect_len("noise-vel", &vel, 3)?;
    let mut n = base;
    if let Some(p) = pose {
        n.pose_sigma = [p[0], p[1], p[2].to_radians()];
    }
    if let Some(v) = vel {
        n.vel_sigma = [v[0], v[1], v[2].to_radians()];
    }
    n.validate()?;
    Ok(n)
}

pub fn cmd_generate(cfg: &GlobalConfig, seed: Option<u64>, cmd: Command) -> Result<PathBuf> {
    let Command::Generate {
        out,
        scenario,
        set,
        params,
        noise_pose,
        noise_vel,
    } = cmd
    else {
        unreachable!()
    };
    let out = required(out, &cfg.out_dir, "out")?;
    let truth = match params {
        Some(p) => load_params22(&p)?,
        None => ShipParams22::qiuxin_no5(),
    };
    truth.validate()?;
    let scenario = match scenario.or_else(|| cfg.scenario.clone()) {
        Some(path) => read_json::<Scenario>(&path)?,
        None => Scenario {
            maneuvers: match set {
                SetArg::Standard => standard_12_plans(),
                SetArg::Validation => validation_plans(),
            },
            noise: NoiseSpec::none(),
        },
    };
    let mut noise = noise_from_args(noise_pose, noise_vel, scenario.noise)?;
    if let Some(s) = seed.or(cfg.seed) {
        noise.seed = s;
    }
    let mut plans = scenario.maneuvers;
    if plans.is_empty() {
        return Err(Error::Validation("scenario lists no maneuvers".into()));
    }
    if let Some(dt) = cfg.dt {
        for p in &mut plans {
            p.dt = dt;
        }
    }
    let ds = generate_dataset(&plans, &truth, &cfg.thruster, &noise)?;
    let manifest = save_dataset(&ds, &out)?;
    log::info!("wrote {} maneuvers, {} samples", ds.len(), ds.total_samples());
    Ok(manifest)
}

pub fn cmd_estimate(cfg: &GlobalConfig, cmd: Command) -> Result<EstimationResult> {
    let Command::Estimate {
        manifest,
        out,
        mode,
        init,
        specs,
        params,
        trace,
        paper_literal_constraints,
        six,
    } = cmd
    else {
        unreachable!()
    };
    let manifest = required(manifest, &cfg.manifest, "manifest")?;
    let ds = load_dataset(&manifest)?;
    let mut ecfg = cfg.estimation.clone();
    if let Some(m) = mode {
        ecfg.mode = match m {
            ModeArg::Lo => EstimationMode::Lo,
            ModeArg::Go => EstimationMode::Go,
            ModeArg::Combined => EstimationMode::Combined,
        };
    }
    if trace {
        ecfg.solver.trace = true;
    }
    if paper_literal_constraints {
        ecfg.constraints = ConstraintMode::PaperLiteral;
    }
    let specs = match specs {
        Some(p) => read_json::<HullSpecs>(&p)?,
        None => cfg.specs.unwrap_or_else(HullSpecs::qiuxin_no5),
    };
    let (p0, record) = match init {
        InitArg::Empirical => {
            let rec = InitRecord::empirical(&specs)?;
            (rec.params, Some(rec))
        }
        InitArg::File => {
            let path = params.ok_or_else(|| Error::Validation("--init file needs --params".into()))?;
            (load_params22(&path)?, None)
        }
    };
    let result = estimate(&ds, &cfg.thruster, &p0, &ecfg, record)?;
    if result.degraded {
        log::warn!("estimate is degraded: GO did not converge at the final stage");
    }
    export_report_json(&result, &out)?;
    if six {
        let p6 = crate::estimation::init_params6_empirical(&specs)?;
        let fit = crate::estimation::estimate_6param(&ds, &cfg.thruster, &p6, &ecfg)?;
        let path = out.with_file_name("params6.json");
        export_report_json(&fit.params, &path)?;
    }
    Ok(result)
}

pub fn cmd_validate(cfg: &GlobalConfig, cmd: Command) -> Result<PathBuf> {
    let Command::Validate {
        manifest,
        params,
        out,
        horizons,
        compare,
    } = cmd
    else {
        unreachable!()
    };
    let manifest = required(manifest, &cfg.manifest, "manifest")?;
    let out = required(out, &cfg.out_dir, "out")?;
    let ds = load_dataset(&manifest)?;
    let p = load_params22(&params)?;
    p.validate()?;
    let horizons = horizons.unwrap_or_else(default_horizons);
    let mut summary = validation_suite(&p, &cfg.thruster, &ds, &horizons)?;
    if let Some(spec) = compare {
        let path = spec
            .strip_prefix("six:")
            .ok_or_else(|| Error::Validation(format!("--compare expects six:<path>, got `{spec}`")))?;
        let p6: ShipParams6 = read_json(path)?;
        p6.validate()?;
        summary.comparison = Some(relative_error_table(&p, &p6, &cfg.thruster, &ds)?);
    }
    write_validation_outputs(&summary, &ds, &out)?;
    Ok(out)
}

pub fn cmd_simulate(cfg: &GlobalConfig, cmd: Command) -> Result<Vec<ShipState>> {
    let Command::Simulate {
        params,
        commands,
        x0,
        out,
    } = cmd
    else {
        unreachable!()
    };
    expect_len("x0", &x0, 8)?;
    let model = load_any_model(&params)?;
    let (dt, cmds) = load_commands_csv(&commands)?;
    let x0 = match x0 {
        Some(v) => ShipState {
            alpha1: v[0].to_radians(),
            alpha2: v[1].to_radians(),
            pose: Pose::new(v[2], v[3], v[4].to_radians()),
            vel: BodyVelocity::new(v[5], v[6], v[7].to_radians()),
        },
        None => ShipState::at_rest(),
    };
    if !x0.is_finite() {
        return Err(Error::Validation("initial state is not finite".into()));
    }
    // Row k's command drives the step from t_k to t_k+1; the last row only
    // fixes the final time.
    let steps = &cmds[..cmds.len().saturating_sub(1).max(1)];
    let traj = simulate(model.dynamics(), &cfg.thruster, &x0, steps, dt)?;
    export_trajectory_csv(&traj, 0.0, dt, &out)?;
    Ok(traj)
}

fn configure_threads() {
    if let Some(n) = std::env::var("SHIPID_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    cfg.estimation.validate()?;
    cfg.thruster.validate()?;
    match cli.command {
        cmd @ Command::Generate { .. } => {
            let manifest = cmd_generate(&cfg, cli.seed, cmd)?;
            println!("{}", manifest.display());
        }
        cmd @ Command::Estimate { .. } => {
            let res = cmd_estimate(&cfg, cmd)?;
            if res.degraded {
                eprintln!("warning: degraded estimate (see `degraded` in the output)");
            }
        }
        cmd @ Command::Validate { .. } => {
            let out = cmd_validate(&cfg, cmd)?;
            println!("{}", out.display());
        }
        cmd @ Command::Simulate { .. } => {
            cmd_simulate(&cfg, cmd)?;
        }
    }
    Ok(())
}
