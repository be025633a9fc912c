//! Frequency-stepped sweep integrated in time, with and without an IF
//! filter, next to the quasi-static result.

use tlsheat::constants::dbm_to_watts;
use tlsheat::dynamics::{swept_response_dynamic, IfFilter};
use tlsheat::numerics::StepControl;
use tlsheat::presets::Preset;
use tlsheat::steady_solver::{Direction, SolverOptions};

fn main() -> tlsheat::Result<()> {
    let m = Preset::Fig2.model(0.025);
    let p = dbm_to_watts(-115.0);
    let fr = m.f_r_t0()?;
    let lw = m.linewidth_t0()?;
    let grid: Vec<f64> = (0..=100).map(|i| fr - 25.0 * lw + 0.5 * lw * i as f64).collect();
    let ctl = StepControl::default();
    let steady = m.sweep_frequency(&grid, p, Direction::Up, false, &SolverOptions::default())?;
    let slow = swept_response_dynamic(&m, &grid, p, Direction::Up, 20e-3, None, &ctl)?;
    let filtered = swept_response_dynamic(&m, &grid, p, Direction::Up, 2e-3, Some(IfFilter::new(1e3)), &ctl)?;
    println!("jumps: steady {:?}, 20 ms dwell {:?}, 2 ms dwell with 1 kHz IF {:?}", steady.jumps, slow.jumps, filtered.jumps);
    for i in (0..grid.len()).step_by(10) {
        println!(
            "{:>+7.2} lw  |S11| steady {:.5}  dwell {:.5}  filtered {:.5}",
            (grid[i] - fr) / lw,
            steady.points[i].s11.norm(),
            slow.points[i].s11.norm(),
            filtered.points[i].s11.norm()
        );
    }
    Ok(())
}
