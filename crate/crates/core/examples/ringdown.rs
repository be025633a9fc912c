//! Ring-up and ring-down of the coupled temperature and phonon number,
//! compared with the steady state reached under constant drive.

use tlsheat::constants::dbm_to_watts;
use tlsheat::dynamics::ring_up_down;
use tlsheat::numerics::StepControl;
use tlsheat::presets::Preset;
use tlsheat::steady_solver::SolverOptions;

fn main() -> tlsheat::Result<()> {
    let m = Preset::Fig3.model(0.025);
    let f = m.f_r_t0()?;
    let p = dbm_to_watts(-120.0);
    let tr = ring_up_down(&m, f, p, 5e-3, 5e-3, 11, &StepControl::default())?;
    println!("{:>8} {:>10} {:>12} {:>10}", "t_ms", "T_mK", "n", "|S11|");
    for s in &tr {
        println!("{:>8.2} {:>10.4} {:>12.4e} {:>10.5}", s.time * 1e3, s.temperature * 1e3, s.n_phonons, s.s11.norm());
    }
    let steady = m.solve_point(f, p, None, &SolverOptions::default())?;
    println!("steady state: T {:.4} mK, n {:.4e}", steady.temperature * 1e3, steady.nbar);
    Ok(())
}
