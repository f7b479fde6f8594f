//! Bollard-pull polynomial fit and azimuth slew-rate identification.

use shipid::actuation::{
    estimate_azimuth_params, fit_thrust_polynomial, simulate_azimuth, AzimuthModel, AzimuthSeries, ThrustPolynomial,
};
use shipid::nlp::SolveOptions;

fn main() -> shipid::Result<()> {
    // Total bollard force of both thrusters at integer shaft speeds.
    let reference = ThrustPolynomial::default();
    let samples: Vec<(f64, f64)> = (0..=10)
        .map(|n| (n as f64, 2.0 * reference.thrust(n as f64)))
        .collect();
    let fit = fit_thrust_polynomial(&samples, 5, 2.0)?;
    println!("thrust coefficients {:?}", fit.polynomial.coefficients);
    println!("residual norm {:.2e}", fit.residual_norm);

    let dt = 0.2;
    let commanded: Vec<f64> = (0..400).map(|k| if (k / 50) % 2 == 0 { 0.5 } else { -0.3 }).collect();
    let measured = simulate_azimuth(&AzimuthModel::new(0.1151, 0.0), 0.0, &commanded, dt);
    let az = estimate_azimuth_params(&AzimuthSeries { commanded, measured }, dt, &SolveOptions::default())?;
    println!(
        "azimuth K = {:.5} rad/s, epsilon = {:.2e}, rmse {:.1e}, correlation {:.4}",
        az.model.k_alpha, az.model.epsilon, az.rmse, az.correlation
    );
    Ok(())
}
