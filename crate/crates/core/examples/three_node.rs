//! Two-stage relaxation of a TLS bath coupled through a phonon node to the
//! cryostat after the drive is switched off.

use tlsheat::thermal::{three_node_evolve, ThreeNodeParams};

fn main() -> tlsheat::Result<()> {
    let tn = ThreeNodeParams { c_t: 1e-17, c_p: 1e-16, r_tp: 1e8, r_pb: 1e8, t0: 0.025 };
    println!(
        "tau_tp {:.2e} s, tau_pt {:.2e} s, tau_pb {:.2e} s, joint {:.2e} s",
        tn.tau_tp(),
        tn.tau_pt(),
        tn.tau_pb(),
        tn.tau_h()
    );
    let hot = tn.steady_state(1e-10);
    let trace = three_node_evolve(&tn, 0.0, hot, 5.0 * tn.tau_h(), tn.tau_tp() / 20.0)?;
    for s in trace.iter().step_by(trace.len() / 10) {
        println!("t {:>9.3e} s  T_tls {:.4} mK  T_phonon {:.4} mK", s.time, s.t_tls * 1e3, s.t_phonon * 1e3);
    }
    Ok(())
}
