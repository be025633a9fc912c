//! Self-consistent frequency pull from resonant spectral hole burning,
//! which stays far below a linewidth at experimental powers.

use tlsheat::constants::{dbm_to_watts, watts_to_dbm};
use tlsheat::holeburning::{holeburn_selfconsistent, HoleburnParams};

fn main() -> tlsheat::Result<()> {
    let hp = HoleburnParams::reference();
    println!(
        "dephasing {:.3} MHz, largest possible pull {:.3} Hz, critical power {:.2} dBm",
        hp.gamma2() / (2.0 * std::f64::consts::PI) / 1e6,
        hp.max_pull() / (2.0 * std::f64::consts::PI),
        watts_to_dbm(hp.critical_power())
    );
    let detuning: Vec<f64> = (-5..=5).map(|k| 1e3 * k as f64).collect();
    for dbm in [-140.0, -120.0, -100.0] {
        let pts = holeburn_selfconsistent(&detuning, dbm_to_watts(dbm), &hp)?;
        let worst = pts.iter().map(|p| p.pull.abs()).fold(0.0, f64::max) / (2.0 * std::f64::consts::PI);
        println!("{dbm:>6.1} dBm: largest pull {worst:.4e} Hz");
    }
    Ok(())
}
