//! Bistability map over probe power and loss tangent, with a few boundary
//! cells checked by direct up and down sweeps.

use tlsheat::constants::{dbm_to_watts, watts_to_dbm};
use tlsheat::numerics::logspace;
use tlsheat::phase_diagram::{bistability_contour, bistability_flags, phase_scan, ScanAxis};
use tlsheat::presets::Preset;
use tlsheat::steady_solver::SolverOptions;

fn main() -> tlsheat::Result<()> {
    let base = Preset::PhaseStudy.model(0.025);
    let opts = SolverOptions::default();
    let ps: Vec<f64> = (0..30).map(|i| dbm_to_watts(-160.0 + 2.0 * i as f64)).collect();
    let fd = logspace(1e-7, 1e-4, 16);
    let grid = phase_scan(&base, ScanAxis::LossTangent, &ps, &fd, &opts)?;
    let flags = bistability_flags(&grid);
    for (row, v) in flags.iter().zip(&fd).rev() {
        let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
        println!("{v:>9.2e} {line}");
    }
    println!("{:>9} -160 dBm {:>46}", "", "-102 dBm");
    for (v, p) in bistability_contour(&grid) {
        println!("onset at loss tangent {v:.2e}: {:.2} dBm", watts_to_dbm(p));
    }
    Ok(())
}
