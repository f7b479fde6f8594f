//! Fits the diagonal 6-parameter model to data from the 22-parameter tug and
//! prints the relative-error table for both.

use shipid::actuation::ThrusterModel;
use shipid::estimation::{estimate_6param, init_params6_empirical, EstimationConfig, HullSpecs};
use shipid::model::ShipParams22;
use shipid::synthgen::{standard_12_maneuvers, NoiseSpec};
use shipid::validation::relative_error_table;

fn main() -> shipid::Result<()> {
    let truth = ShipParams22::qiuxin_no5();
    let thr = ThrusterModel::default();
    let noise = NoiseSpec {
        pose_sigma: [0.02, 0.02, 0.01],
        vel_sigma: [0.01, 0.01, 0.005],
        seed: 42,
    };
    let ds = standard_12_maneuvers(&truth, &thr, &noise)?;
    let p6 = init_params6_empirical(&HullSpecs::qiuxin_no5())?;
    let fit = estimate_6param(&ds, &thr, &p6, &EstimationConfig::default())?;
    println!("6-parameter fit ({:?}): {:?}", fit.report.reason, fit.params.to_array());

    let table = relative_error_table(&truth, &fit.params, &thr, &ds)?;
    println!("{:<20} {:>10} {:>10}", "variable (%)", table.models[0], table.models[1]);
    for row in &table.rows {
        let cell = |e: Option<f64>| e.map_or("n/a".to_string(), |v| format!("{v:.2}"));
        println!("{:<20} {:>10} {:>10}", row.variable, cell(row.errors[0]), cell(row.errors[1]));
    }
    Ok(())
}
