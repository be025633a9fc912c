//! Temperature dependence of the resonance: TLS frequency pull, internal
//! quality factor, and the sign change of the frequency coefficient.

use tlsheat::presets::Preset;
use tlsheat::tls_response::{crossover_temperature, delta_fr, q_i_inv, tcf};

fn main() -> tlsheat::Result<()> {
    let m = Preset::Fig2.model(0.025);
    let (res, tls) = (&m.resonator, &m.tls);
    let tc = crossover_temperature(res);
    println!("frequency coefficient vanishes at T_c = {:.3} mK", tc * 1e3);
    println!("{:>8} {:>14} {:>12} {:>12}", "T_mK", "df_r_Hz", "Q_i(n=0)", "tcf_1/K");
    for t_mk in [5.0, 8.0, 11.0, 15.0, 25.0, 50.0, 100.0, 200.0, 500.0] {
        let t = t_mk * 1e-3;
        let shift = delta_fr(t, res, tls)?;
        let qi = 1.0 / q_i_inv(t, 0.0, res, tls)?;
        println!("{t_mk:>8.1} {shift:>14.2} {qi:>12.4e} {:>12.4e}", tcf(t, res, tls)?);
    }
    Ok(())
}
