//! Closed-loop +20/+20 zigzag at 5 RPS with the reference tug.
//!
//! `cargo run --example simulate_zigzag [out.csv]`

use shipid::actuation::ThrusterModel;
use shipid::dataio::export_trajectory_csv;
use shipid::model::{ShipParams22, ShipState};
use shipid::synthgen::{simulate_plan, ManeuverPlan};

fn main() -> shipid::Result<()> {
    let plan = ManeuverPlan::zigzag(5.0, 20.0, 20.0);
    let (states, cmds) = simulate_plan(&plan, &ShipParams22::qiuxin_no5(), &ThrusterModel::default(), &ShipState::at_rest())?;

    let mut flips = 0;
    for w in cmds.windows(2) {
        if w[0].alpha1_d != w[1].alpha1_d {
            flips += 1;
        }
    }
    let (lo, hi) = states
        .iter()
        .map(|s| s.pose.psi.to_degrees())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p), b.max(p)));
    let last = states.last().unwrap();
    println!("{} samples, {flips} rudder flips", states.len());
    println!("heading range [{lo:.1}, {hi:.1}] deg");
    println!("final position ({:.1}, {:.1}) m, surge {:.3} m/s", last.pose.x, last.pose.y, last.vel.u);

    if let Some(path) = std::env::args().nth(1) {
        export_trajectory_csv(&states, 0.0, plan.dt, &path)?;
        println!("wrote {path}");
    }
    Ok(())
}
