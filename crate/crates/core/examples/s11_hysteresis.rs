//! Up and down frequency sweeps of the reflection at increasing probe
//! power. Above a threshold power the two sweeps jump at different places.

use tlsheat::constants::dbm_to_watts;
use tlsheat::presets::Preset;
use tlsheat::phase_diagram::sweep_shows_hysteresis;
use tlsheat::steady_solver::{Direction, SolverOptions};

fn main() -> tlsheat::Result<()> {
    let m = Preset::Fig2.model(0.025);
    let opts = SolverOptions::default();
    let fr = m.f_r_t0()?;
    let lw = m.linewidth_t0()?;
    let grid: Vec<f64> = (0..=300).map(|i| fr - 25.0 * lw + 50.0 * lw * i as f64 / 300.0).collect();
    let back: Vec<f64> = grid.iter().rev().copied().collect();
    println!("f_r(T0) = {fr:.1} Hz, linewidth {lw:.1} Hz");
    for dbm in [-150.0, -140.0, -135.0, -130.0, -120.0, -110.0] {
        let p = dbm_to_watts(dbm);
        let up = m.sweep_frequency(&grid, p, Direction::Up, false, &opts)?;
        let down = m.sweep_frequency(&back, p, Direction::Down, false, &opts)?;
        let hottest = up.points.iter().map(|p| p.temperature).fold(0.0, f64::max);
        println!(
            "{dbm:>6.1} dBm: max T {:.2} mK, up jumps {:?}, down jumps {:?}, hysteretic {}",
            hottest * 1e3,
            up.jumps,
            down.jumps,
            // Resolves windows narrower than the coarse grid above
            sweep_shows_hysteresis(&m, p, 401, &opts)?
        );
    }
    Ok(())
}
