//! Multi-horizon prediction RMSE of the reference model on noisy validation
//! maneuvers; writes the CSV/JSON/SVG report.
//!
//! `cargo run --example validate_horizons [dir]`

use shipid::actuation::ThrusterModel;
use shipid::model::ShipParams22;
use shipid::synthgen::{generate_dataset, validation_plans, NoiseSpec};
use shipid::validation::{default_horizons, validation_suite, write_validation_outputs};

fn main() -> shipid::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("shipid-validation"));
    let p = ShipParams22::qiuxin_no5();
    let thr = ThrusterModel::default();
    let noise = NoiseSpec {
        pose_sigma: [0.02, 0.02, 0.01],
        vel_sigma: [0.01, 0.01, 0.005],
        seed: 7,
    };
    let ds = generate_dataset(&validation_plans(), &p, &thr, &noise)?;
    let summary = validation_suite(&p, &thr, &ds, &default_horizons())?;

    println!("{:>7} {:>10} {:>10} {:>10} {:>10}", "horizon", "x", "u", "v", "r");
    for h in &summary.by_horizon {
        let m = h.mean_rmse;
        println!("{:>7} {:>10.4} {:>10.5} {:>10.5} {:>10.5}", h.horizon, m[0], m[3], m[4], m[5]);
    }
    let files = write_validation_outputs(&summary, &ds, &dir)?;
    println!("{} files in {}", files.len(), dir.display());
    Ok(())
}
