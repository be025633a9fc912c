//! Ballistic phonon conductance of a tether with a phononic bandgap, its
//! local power-law exponent, and the temperature reached under heating.

use tlsheat::numerics::{logspace, power_law_fit};
use tlsheat::presets::Preset;
use tlsheat::thermal::{gamma_exponent, landauer_auto, t_1d, t_of_pd, BeamGeometry, GapWindow};

fn main() -> tlsheat::Result<()> {
    let beam = BeamGeometry {
        width_w: 3.9e-6,
        thickness_t: 1e-6,
        speed_c: 4000.0,
        bandgap_center_fb: Some(530e6),
        bandgap_width_dfb: Some(85e6),
        n_beams: 1.0,
        gap_window: GapWindow::HalfWidth,
    };
    println!("one-dimensional below {:.1} mK", t_1d(beam.speed_c, beam.width_w) * 1e3);
    let temps = logspace(0.025, 0.2, 8);
    let mut g = Vec::new();
    for &t in &temps {
        let gt = landauer_auto(&beam, t, 40.0)?;
        println!("T {:>6.1} mK  G {gt:.4e} W/K  local exponent {:.3}", t * 1e3, gamma_exponent(&beam, t, 40.0)?);
        g.push(gt);
    }
    let (exponent, prefactor) = power_law_fit(&temps, &g);
    println!("fit G = {prefactor:.3e} T^{exponent:.3}");

    let th = Preset::Fig3.thermal(0.025);
    for p in [1e-18, 1e-15, 1e-12] {
        println!("{p:.0e} W dissipated -> {:.3} mK", t_of_pd(p, &th)? * 1e3);
    }
    Ok(())
}
