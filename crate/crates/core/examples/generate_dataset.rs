//! The twelve estimation maneuvers with measurement noise, written as CSV
//! files plus a manifest.
//!
//! `cargo run --example generate_dataset [dir]`

use shipid::actuation::ThrusterModel;
use shipid::dataio::save_dataset;
use shipid::model::ShipParams22;
use shipid::synthgen::{standard_12_maneuvers, NoiseSpec};

fn main() -> shipid::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("shipid-dataset"));
    let noise = NoiseSpec {
        pose_sigma: [0.02, 0.02, 0.01],
        vel_sigma: [0.01, 0.01, 0.005],
        seed: 42,
    };
    let ds = standard_12_maneuvers(&ShipParams22::qiuxin_no5(), &ThrusterModel::default(), &noise)?;
    for m in &ds.maneuvers {
        let end = m.poses.last().unwrap();
        println!("{:<22} {:>4} samples, ends at ({:7.1}, {:7.1})", m.label, m.len(), end.x, end.y);
    }
    let manifest = save_dataset(&ds, &dir)?;
    println!("{} samples total -> {}", ds.total_samples(), manifest.display());
    Ok(())
}
