//! Temperature scales of the linearized mixed reactive and dissipative
//! nonlinearity across bath temperatures, and the switching threshold.

use tlsheat::perturbative::{duffing_scales, switching_loss_tangent};
use tlsheat::presets::Preset;

fn main() -> tlsheat::Result<()> {
    let m = Preset::Fig3.model(0.025);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>9} {:>12}", "T0_mK", "T_d0", "T_d1", "T_r", "T_*", "phi", "n_*");
    for t_mk in [15.0, 25.0, 50.0, 100.0, 200.0] {
        let s = duffing_scales(t_mk * 1e-3, &m.resonator, &m.tls, &m.thermal)?;
        println!(
            "{t_mk:>6.0} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>9.4} {:>12.4e}",
            s.t_d0, s.t_d1, s.t_r, s.t_star, s.phi_nl, s.n_star
        );
    }
    let (bound, n_th) = switching_loss_tangent(0.025, m.resonator.f_r0, m.thermal.n_ch, m.tls.n_s);
    println!("switching needs a loss tangent above {bound:.3e} (n_th = {n_th:.3})");
    Ok(())
}
