//! Recovers the 22 parameters from noiseless synthetic data with the
//! combined LO/GO procedure and prints the stage log.

use shipid::actuation::ThrusterModel;
use shipid::estimation::{estimate_combined, EstimationConfig, HullSpecs};
use shipid::model::{ParameterVector, ShipParams22};
use shipid::synthgen::{standard_12_maneuvers, NoiseSpec};

fn main() -> shipid::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let truth = ShipParams22::qiuxin_no5();
    let thr = ThrusterModel::default();
    let ds = standard_12_maneuvers(&truth, &thr, &NoiseSpec::none())?;

    let res = estimate_combined(&ds, &thr, &HullSpecs::qiuxin_no5(), &EstimationConfig::default())?;
    for a in &res.provenance.attempts {
        println!(
            "stage {:>2} {:?} from {:<12} {:?} after {} iterations",
            a.stage, a.method, a.warm_start, a.reason, a.iterations
        );
    }
    println!("degraded: {}", res.degraded);
    println!("{:<10} {:>12} {:>12}", "param", "truth", "estimate");
    for ((name, t), e) in ShipParams22::NAMES.iter().zip(truth.to_vec()).zip(res.best().to_vec()) {
        println!("{name:<10} {t:>12.4} {e:>12.4}");
    }
    Ok(())
}
