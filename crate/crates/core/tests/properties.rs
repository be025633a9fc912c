use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

use tlsheat::constants::{dbm_to_watts, HBAR};
use tlsheat::dynamics::ring_up_down;
use tlsheat::holeburning::{holeburn_response, HoleburnParams};
use tlsheat::numerics::StepControl;
use tlsheat::perturbative::{critical_nonlinearity, swenson_branch, swenson_real_roots, swenson_residual, swenson_roots};
use tlsheat::presets::Preset;
use tlsheat::specfun::{digamma_half_line, digamma_right_half};
use tlsheat::steady_solver::{Direction, SolverOptions};
use tlsheat::thermal::{landauer_auto, pd_of_t, t_of_pd, BeamGeometry, GapWindow};
use tlsheat::tls_response::{crossover_temperature, q_res_inv, tcf};

fn cheap() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn cubic_roots_have_tiny_residuals(y0 in -20.0f64..20.0, a in -20.0f64..20.0) {
        let roots = swenson_roots(y0, a);
        for r in roots {
            prop_assert!(swenson_residual(y0, a, r) <= 1e-12, "{r} at y0={y0} a={a}");
        }
        let n = swenson_real_roots(y0, a).len();
        prop_assert!(n == 1 || n == 3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, ..ProptestConfig::default() })]

    #[test]
    fn digamma_recurrence_and_conjugation(v in 0.0f64..100.0) {
        let z = Complex64::new(0.5, v);
        let step = digamma_right_half(z + 1.0) - digamma_right_half(z);
        prop_assert!((step - z.inv()).norm() <= 1e-12);
        let (p, m) = (digamma_half_line(v), digamma_half_line(-v));
        prop_assert_eq!(p.re_psi.to_bits(), m.re_psi.to_bits());
        prop_assert_eq!(p.im_psi, -m.im_psi);
    }

    #[test]
    fn branch_traces_satisfy_the_cubic(a in -6.0f64..6.0, up in any::<bool>()) {
        let mut grid: Vec<f64> = (0..121).map(|i| -6.0 + 0.1 * i as f64).collect();
        let dir = if up { Direction::Up } else { grid.reverse(); Direction::Down };
        let trace = swenson_branch(&grid, a, dir).unwrap();
        for (&y0, &y) in grid.iter().zip(&trace.y) {
            prop_assert!((y - y0 - a / (1.0 + 4.0 * y * y)).abs() <= 1e-10);
        }
        if a.abs() <= critical_nonlinearity() {
            prop_assert!(trace.jumps.is_empty());
        }
    }

    #[test]
    fn hole_pull_is_odd_and_loss_never_drops(delta in 0.0f64..1e8, nbar in 0.0f64..1e9) {
        let hp = HoleburnParams::reference();
        let (pp, kp) = holeburn_response(delta, nbar, &hp).unwrap();
        let (pm, km) = holeburn_response(-delta, nbar, &hp).unwrap();
        prop_assert_eq!(pp, -pm);
        prop_assert_eq!(kp, km);
        prop_assert!(kp >= hp.kappa_i0);
    }

    #[test]
    fn heating_map_is_increasing_concave_and_inverted(lp in -20.0f64..-10.0, t0 in 0.01f64..0.3) {
        let th = Preset::Fig3.thermal(t0);
        let p = 10f64.powf(lp);
        let (a, b, c) = (t_of_pd(0.5 * p, &th).unwrap(), t_of_pd(p, &th).unwrap(), t_of_pd(1.5 * p, &th).unwrap());
        prop_assert!(a < b && b < c);
        // Second difference is at roundoff level while the rise is still linear
        prop_assert!(b - a >= c - b - 8.0 * f64::EPSILON * c);
        prop_assert!(((pd_of_t(b, &th) - p) / p).abs() < 1e-9);
    }

    #[test]
    fn resonant_loss_saturates_with_drive(t in 0.005f64..0.5, n in 0.0f64..1e8) {
        let m = Preset::Fig3.model(0.025);
        let lo = q_res_inv(t, n, &m.resonator, &m.tls).unwrap();
        let hi = q_res_inv(t, 2.0 * n + 1.0, &m.resonator, &m.tls).unwrap();
        prop_assert!(hi < lo);
    }

    #[test]
    fn frequency_coefficient_changes_sign_at_crossover(lr in -2.0f64..2.0) {
        let m = Preset::Fig3.model(0.025);
        let tc = crossover_temperature(&m.resonator);
        let t = tc * 10f64.powf(lr);
        prop_assume!((t / tc - 1.0).abs() > 1e-6);
        let k = tcf(t, &m.resonator, &m.tls).unwrap();
        prop_assert_eq!(k > 0.0, t > tc);
    }
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn fixed_points_conserve_energy(
        preset in prop_oneof![Just(Preset::Fig2), Just(Preset::Fig3)],
        t0 in 0.015f64..0.2,
        offset in -30.0f64..30.0,
        dbm in -160.0f64..-80.0,
    ) {
        let m = preset.model(t0);
        let o = SolverOptions::default();
        let f = m.f_r_t0().unwrap() + offset * m.linewidth_t0().unwrap();
        let p = dbm_to_watts(dbm);
        let op = m.solve_point(f, p, None, &o).unwrap();
        prop_assert!((0.0..=1.0).contains(&op.alpha_sat));
        prop_assert!(op.s11.norm() <= 1.0 + 1e-9);
        prop_assert!(op.temperature >= t0);
        let pd = (1.0 - op.s11.norm_sqr()) * p;
        prop_assert!(((pd - op.p_d) / op.p_d).abs() < 1e-9);
        let w = 2.0 * PI * op.f_r;
        let n = op.q_i * op.p_d / (HBAR * w * w);
        prop_assert!(((n - op.nbar) / op.nbar).abs() < 1e-9);
        let (ra, rx, _) = m.residuals(&op, &o).unwrap();
        prop_assert!(ra <= o.eps_alpha && rx <= 10.0 * o.eps_x, "{ra} {rx}");
    }

    #[test]
    fn on_resonance_heating_grows_with_power(t0 in 0.015f64..0.2, dbm in -160.0f64..-90.0) {
        let m = Preset::Fig3.model(t0);
        let o = SolverOptions::default();
        let lo = m.solve_resonant(dbm_to_watts(dbm), None, &o).unwrap();
        let hi = m.solve_resonant(dbm_to_watts(dbm + 3.0), Some(&lo), &o).unwrap();
        prop_assert!(hi.temperature >= lo.temperature);
        prop_assert!(hi.nbar >= lo.nbar);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn trajectories_stay_physical(offset in -5.0f64..5.0, dbm in -140.0f64..-100.0) {
        let m = Preset::Fig3.model(0.025);
        let f = m.f_r_t0().unwrap() + offset * m.linewidth_t0().unwrap();
        let tr = ring_up_down(&m, f, dbm_to_watts(dbm), 2e-3, 2e-3, 41, &StepControl::default()).unwrap();
        for s in &tr {
            prop_assert!(s.n_phonons >= 0.0);
            prop_assert!(s.temperature >= m.thermal.t0 - 1e-12);
        }
    }

    #[test]
    fn ballistic_conductance_rises_with_temperature(t in 0.02f64..0.2, wider in 1.0f64..2.0) {
        let g = BeamGeometry {
            width_w: 3.9e-6,
            thickness_t: 1e-6,
            speed_c: 4000.0,
            bandgap_center_fb: Some(530e6),
            bandgap_width_dfb: Some(85e6),
            n_beams: 1.0,
            gap_window: GapWindow::HalfWidth,
        };
        let lo = landauer_auto(&g, t, 10.0).unwrap();
        prop_assert!(landauer_auto(&g, 1.05 * t, 10.0).unwrap() >= lo);
        let gapped = BeamGeometry { bandgap_width_dfb: Some(85e6 * wider), ..g };
        prop_assert!(landauer_auto(&gapped, t, 10.0).unwrap() <= lo * (1.0 + 1e-12));
    }
}
