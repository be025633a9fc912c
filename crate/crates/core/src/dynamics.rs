//! Time-domain response in the fast-cavity limit.
//!
//! The phonon number `n` relaxes towards the instantaneous steady value at
//! the cavity rate while the temperature integrates the heat balance
//! through the device heat capacity.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::constants::{HBAR, PLANCK};
use crate::error::{domain, invalid, Result};
use crate::numerics::{dopri5, StepControl};
use crate::steady_solver::{detect_jumps, Direction, Dissipation, Model, OperatingPoint, SweepResult};
use crate::thermal::pd_of_t;
use crate::tls_response::q_i_inv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicState {
    pub time: f64,
    pub temperature: f64,
    pub n_phonons: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub temperature: f64,
    pub n_phonons: f64,
    pub s11: Complex64,
}

/// Receiver low-pass with time constant `k / bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfFilter {
    pub bandwidth_hz: f64,
    pub k: f64,
}

impl IfFilter {
    pub const DEFAULT_K: f64 = 2.0;

    pub fn new(bandwidth_hz: f64) -> Self {
        Self { bandwidth_hz, k: Self::DEFAULT_K }
    }

    pub fn tau(&self) -> f64 {
        self.k / self.bandwidth_hz
    }

    /// Largest loaded Q whose ring-up fits in the filter time.
    pub fn q_threshold(&self, f_r: f64) -> f64 {
        self.k * PI * f_r / self.bandwidth_hz
    }
}

/// Instantaneous rates at `(T, n)`.
struct Rates {
    f_r: f64,
    kappa_i: f64,
    kappa: f64,
    delta: f64,
    nbar: f64,
}

fn rates(m: &Model, f: f64, p_s: f64, t: f64, n: f64) -> Result<Rates> {
    let n = n.max(0.0);
    let f_r = m.resonance_frequency(t, n)?;
    let omega_r = 2.0 * PI * f_r;
    let kappa_e = m.resonator.kappa_e();
    let kappa_i = match m.dissipation {
        Dissipation::Tls => omega_r * q_i_inv(t, n, &m.resonator, &m.tls)?,
        Dissipation::FixedDepth(a) => kappa_e * (1.0 / a - 1.0),
    };
    let kappa = kappa_i + kappa_e;
    let delta = 2.0 * PI * (f - f_r);
    let nbar = kappa_e / (delta * delta + 0.25 * kappa * kappa) * p_s / (HBAR * omega_r);
    Ok(Rates { f_r, kappa_i, kappa, delta, nbar })
}

fn reflection(m: &Model, r: &Rates) -> Complex64 {
    let tan_phi = m.dcm.map_or(0.0, |d| d.phi_rot.tan());
    let num = Complex64::new(1.0, tan_phi) * m.resonator.kappa_e();
    Complex64::new(1.0, 0.0) - num / Complex64::new(0.5 * r.kappa, r.delta)
}

/// Right-hand side `(dT/dt, dn/dt)`.
pub fn tn_derivatives(m: &Model, f: f64, p_s: f64, t: f64, n: f64) -> Result<(f64, f64)> {
    let r = rates(m, f, p_s, t, n)?;
    let c_th = m.thermal.heat_capacity();
    let heat_in = PLANCK * r.f_r * r.kappa_i * n.max(0.0);
    let heat_out = pd_of_t(t, &m.thermal);
    Ok(((heat_in - heat_out) / c_th, -r.kappa * (n - r.nbar)))
}

/// Integrates the coupled `(T, n)` equations at fixed drive and returns the
/// state at each of `sample_times` (absolute, nondecreasing, ≥ start).
pub fn integrate_tn(
    m: &Model,
    f_probe: f64,
    p_s: f64,
    initial: DynamicState,
    sample_times: &[f64],
    ctl: &StepControl,
) -> Result<Vec<TrajectorySample>> {
    m.validate()?;
    if let Some(c) = m.thermal.c_th {
        if !(c > 0.0) {
            return Err(invalid("heat capacity must be positive"));
        }
    }
    if !(initial.temperature > 0.0 && initial.n_phonons >= 0.0) {
        return Err(domain("initial state needs T > 0 and n >= 0"));
    }
    let n_scale = rates(m, f_probe, p_s, initial.temperature, initial.n_phonons)?.nbar.max(initial.n_phonons).max(1.0);
    let mut failure = None;
    let states = dopri5(
        |_, y: &[f64; 2]| match tn_derivatives(m, f_probe, p_s, y[0], y[1]) {
            Ok((dt, dn)) => [dt, dn],
            Err(e) => {
                failure.get_or_insert(e);
                [f64::NAN, f64::NAN]
            }
        },
        initial.time,
        [initial.temperature, initial.n_phonons],
        sample_times,
        ctl,
        [m.thermal.t0, n_scale],
    );
    if let Some(e) = failure {
        return Err(e);
    }
    states?
        .iter()
        .zip(sample_times)
        .map(|(y, &time)| {
            let r = rates(m, f_probe, p_s, y[0], y[1])?;
            Ok(TrajectorySample { time, temperature: y[0], n_phonons: y[1].max(0.0), s11: reflection(m, &r) })
        })
        .collect()
}

/// Drive on for `t_on`, then off for `t_off`, from the bath state.
pub fn ring_up_down(
    m: &Model,
    f_probe: f64,
    p_s: f64,
    t_on: f64,
    t_off: f64,
    samples: usize,
    ctl: &StepControl,
) -> Result<Vec<TrajectorySample>> {
    if !(t_on > 0.0 && t_off >= 0.0) || samples < 2 {
        return Err(invalid("need t_on > 0, t_off >= 0 and at least two samples"));
    }
    let start = DynamicState { time: 0.0, temperature: m.thermal.t0, n_phonons: 0.0 };
    let on: Vec<f64> = (0..samples).map(|i| t_on * i as f64 / (samples - 1) as f64).collect();
    let mut out = integrate_tn(m, f_probe, p_s, start, &on, ctl)?;
    if t_off > 0.0 {
        let last = *out.last().unwrap();
        let off: Vec<f64> = (1..samples).map(|i| t_on + t_off * i as f64 / (samples - 1) as f64).collect();
        let resume = DynamicState { time: t_on, temperature: last.temperature, n_phonons: last.n_phonons };
        out.extend(integrate_tn(m, f_probe, 0.0, resume, &off, ctl)?);
    }
    Ok(out)
}

/// Frequency-stepped response. Each point is driven for `t_meas` starting
/// from the previous end state; with a filter the reported reflection is
/// the normalized exponential average over the dwell.
pub fn swept_response_dynamic(
    m: &Model,
    grid: &[f64],
    p_s: f64,
    direction: Direction,
    t_meas: f64,
    filter: Option<IfFilter>,
    ctl: &StepControl,
) -> Result<SweepResult> {
    m.validate()?;
    if grid.is_empty() || !(t_meas > 0.0) {
        return Err(invalid("need a non-empty grid and t_meas > 0"));
    }
    let lw = m.linewidth_t0()?;
    if (grid[0] - m.f_r_t0()?).abs() < 20.0 * lw {
        return Err(invalid("first sweep point must be at least 20 linewidths from resonance"));
    }
    if let Some(flt) = filter {
        if !(flt.bandwidth_hz > 0.0 && flt.k > 0.0) {
            return Err(invalid("filter bandwidth and k must be positive"));
        }
    }
    let mut t = m.thermal.t0;
    let mut n = 0.0;
    let mut points = Vec::with_capacity(grid.len());
    for &f in grid {
        let (t_end, n_end, s11) = match filter {
            None => {
                let s = integrate_tn(m, f, p_s, DynamicState { time: 0.0, temperature: t, n_phonons: n }, &[t_meas], ctl)?;
                (s[0].temperature, s[0].n_phonons, s[0].s11)
            }
            Some(flt) => {
                let tau = flt.tau();
                let n_scale = rates(m, f, p_s, t, n)?.nbar.max(n).max(1.0);
                let mut failure = None;
                let y = dopri5(
                    |_, y: &[f64; 4]| {
                        let eval = tn_derivatives(m, f, p_s, y[0], y[1])
                            .and_then(|d| rates(m, f, p_s, y[0], y[1]).map(|r| (d, reflection(m, &r))));
                        match eval {
                            Ok(((dt, dn), s)) => [dt, dn, s.re - y[2] / tau, s.im - y[3] / tau],
                            Err(e) => {
                                failure.get_or_insert(e);
                                [f64::NAN; 4]
                            }
                        }
                    },
                    0.0,
                    [t, n, 0.0, 0.0],
                    &[t_meas],
                    ctl,
                    [m.thermal.t0, n_scale, tau, tau],
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                let y = y?[0];
                let norm = tau * (-(t_meas / tau)).exp_m1().abs();
                (y[0], y[1].max(0.0), Complex64::new(y[2], y[3]) / norm)
            }
        };
        t = t_end;
        n = n_end;
        let r = rates(m, f, p_s, t, n)?;
        let q = 2.0 * PI * r.f_r / r.kappa;
        let x = (f - r.f_r) / r.f_r;
        points.push(OperatingPoint {
            f_probe: f,
            p_s,
            temperature: t,
            nbar: n,
            q_i: 2.0 * PI * r.f_r / r.kappa_i,
            q_total: q,
            q_e: m.resonator.q_e_at(r.f_r),
            f_r: r.f_r,
            x_detuning: x,
            y_fractional: q * x,
            s11,
            p_d: PLANCK * r.f_r * r.kappa_i * n,
            alpha_sat: f64::NAN,
            iterations: 0,
            converged: true,
        });
    }
    let jumps = detect_jumps(&points);
    Ok(SweepResult { direction, points, jumps })
}

/// Linearized slow-cavity reduction `ȧ = −i(Δ̃ + K|a|²)a − (κ_e/2)a + √κ_e a_in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrReduction {
    /// `Δ₀ − iκ_i(T₀)/2`, rad/s.
    pub delta_tilde: Complex64,
    /// Complex Kerr constant, rad/s per phonon.
    pub kerr_k: Complex64,
    /// `dΔ/dT`, rad/s/K.
    pub detuning_slope: f64,
    /// `−dκ_i/dT`, 1/(s·K).
    pub loss_slope: f64,
    pub kappa_e: f64,
    pub omega_r: f64,
}

pub fn kerr_reduction(m: &Model, f_probe: f64) -> Result<KerrReduction> {
    m.validate()?;
    let t0 = m.thermal.t0;
    let h = 1e-4 * t0;
    let r0 = rates(m, f_probe, 0.0, t0, 0.0)?;
    let rp = rates(m, f_probe, 0.0, t0 + h, 0.0)?;
    let rm = rates(m, f_probe, 0.0, t0 - h, 0.0)?;
    let detuning_slope = (rp.delta - rm.delta) / (2.0 * h);
    let loss_slope = -(rp.kappa_i - rm.kappa_i) / (2.0 * h);
    let heat_per_phonon = PLANCK * r0.f_r * r0.kappa_i / m.thermal.g_th0();
    Ok(KerrReduction {
        delta_tilde: Complex64::new(r0.delta, -0.5 * r0.kappa_i),
        kerr_k: Complex64::new(detuning_slope, 0.5 * loss_slope) * heat_per_phonon,
        detuning_slope,
        loss_slope,
        kappa_e: m.resonator.kappa_e(),
        omega_r: 2.0 * PI * r0.f_r,
    })
}

impl KerrReduction {
    /// Phonon number beyond which the linearized loss turns negative.
    pub fn max_valid_phonons(&self) -> f64 {
        if self.kerr_k.im > 0.0 {
            -self.delta_tilde.im / self.kerr_k.im
        } else {
            f64::INFINITY
        }
    }

    /// Warning text when `n` breaks the linearization.
    pub fn validity_warning(&self, n: f64) -> Option<String> {
        (n >= self.max_valid_phonons())
            .then(|| format!("n = {n:.3e} drives the linearized internal loss negative"))
    }

    /// Steady phonon numbers: real positive roots of `n|D(n)|² = κ_e P_s/ħω_r`.
    pub fn steady_phonons(&self, p_s: f64) -> Vec<f64> {
        let d = self.delta_tilde - Complex64::new(0.0, 0.5 * self.kappa_e);
        let k = self.kerr_k;
        let c = self.kappa_e * p_s / (HBAR * self.omega_r);
        let a3 = k.norm_sqr();
        if a3 == 0.0 {
            return vec![c / d.norm_sqr()];
        }
        let a2 = 2.0 * (d * k.conj()).re;
        let a1 = d.norm_sqr();
        let mut roots: Vec<f64> = crate::perturbative::cubic_roots(a2 / a3, a1 / a3, -c / a3)
            .iter()
            .filter(|r| r.im.abs() <= 1e-9 * r.re.abs().max(1.0) && r.re > 0.0)
            .map(|r| r.re)
            .collect();
        roots.sort_by(f64::total_cmp);
        roots
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::dbm_to_watts;
    use crate::presets::Preset;
    use crate::steady_solver::SolverOptions;

    #[test]
    fn undriven_bath_state_is_stationary() {
        let m = Preset::Fig3.model(0.025);
        let f = m.f_r_t0().unwrap();
        let s0 = DynamicState { time: 0.0, temperature: 0.025, n_phonons: 0.0 };
        let out = integrate_tn(&m, f, 0.0, s0, &[1e-3, 1e-2], &StepControl::default()).unwrap();
        for s in out {
            assert!((s.temperature - 0.025).abs() < 1e-15 && s.n_phonons == 0.0);
        }
    }

    #[test]
    fn long_time_limit_matches_steady_state() {
        let m = Preset::Fig3.model(0.025);
        let lw = m.linewidth_t0().unwrap();
        let f = m.f_r_t0().unwrap() + 0.5 * lw;
        let p = dbm_to_watts(-125.0);
        let s0 = DynamicState { time: 0.0, temperature: 0.025, n_phonons: 0.0 };
        let end = integrate_tn(&m, f, p, s0, &[0.2], &StepControl::default()).unwrap()[0];
        let ss = m.solve_point(f, p, None, &SolverOptions::default()).unwrap();
        assert!((end.temperature / ss.temperature - 1.0).abs() < 1e-6);
        assert!((end.n_phonons / ss.nbar - 1.0).abs() < 1e-6, "{} {}", end.n_phonons, ss.nbar);
    }

    #[test]
    fn tolerance_halving_is_stable() {
        let m = Preset::Fig3.model(0.025);
        let f = m.f_r_t0().unwrap();
        let p = dbm_to_watts(-130.0);
        let s0 = DynamicState { time: 0.0, temperature: 0.025, n_phonons: 0.0 };
        let a = integrate_tn(&m, f, p, s0, &[2e-3], &StepControl::default()).unwrap()[0];
        let tight = StepControl { rtol: 5e-9, atol: 5e-15, ..StepControl::default() };
        let b = integrate_tn(&m, f, p, s0, &[2e-3], &tight).unwrap()[0];
        assert!((a.n_phonons / b.n_phonons - 1.0).abs() < 1e-7);
        assert!((a.temperature / b.temperature - 1.0).abs() < 1e-7);
    }

    #[test]
    fn filter_threshold() {
        let flt = IfFilter { bandwidth_hz: 200.0, k: 1.0 };
        assert!((flt.q_threshold(520.81e6) / 8.2e6 - 1.0).abs() < 0.01);
        assert_eq!(IfFilter::new(200.0).k, 2.0);
    }

    #[test]
    fn kerr_loss_channel_sign() {
        let m = Preset::Fig3.model(0.025);
        let k = kerr_reduction(&m, m.f_r_t0().unwrap()).unwrap();
        assert!(k.kerr_k.im > 0.0);
        assert!(k.delta_tilde.im < 0.0);
        assert!(k.validity_warning(10.0 * k.max_valid_phonons()).is_some());
    }
}
