//! Fixed-frequency power sweep and the log-log slopes of temperature,
//! phonon number and internal loss in each regime.

use tlsheat::constants::dbm_to_watts;
use tlsheat::phase_diagram::{scaling_exponents, RegimeBounds};
use tlsheat::presets::Preset;
use tlsheat::steady_solver::SolverOptions;

fn main() -> tlsheat::Result<()> {
    let m = Preset::Fig3.model(0.025);
    let opts = SolverOptions::default();
    let powers: Vec<f64> = (0..=480).map(|i| dbm_to_watts(-200.0 + 0.5 * i as f64)).collect();
    let trace = m.sweep_power(m.f_r_t0()?, &powers, &opts)?;
    for fit in scaling_exponents(&m, &trace, &RegimeBounds::default())? {
        let predicted = fit.predicted.map_or("-".to_string(), |p| format!("{p:.4}"));
        println!(
            "{:<10} {:<18} slope {:.4} (predicted {predicted}) over {} points",
            format!("{:?}", fit.regime),
            format!("{:?}", fit.quantity),
            fit.slope,
            fit.points
        );
    }
    Ok(())
}
