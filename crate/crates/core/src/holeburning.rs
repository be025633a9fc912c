//! Probe-induced pull and loss from resonant saturation of a flat,
//! non-interacting TLS band, without heating.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::HBAR;
use crate::error::{domain, invalid, Error, Result};
use crate::tls_response::polarization;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleburnParams {
    pub g_over_2pi: f64,
    pub n_s: f64,
    /// Unsaturated TLS damping, rad/s.
    pub gamma0: f64,
    /// Non-TLS internal loss rate, rad/s.
    pub kappa_i0: f64,
    /// External coupling rate, rad/s.
    pub kappa_e: f64,
    /// Bare resonance, rad/s.
    pub omega_r: f64,
}

impl HoleburnParams {
    /// Builds the set from a loss tangent at temperature `t`.
    pub fn from_loss_tangent(
        f_r: f64,
        fd0: f64,
        t: f64,
        g_over_2pi: f64,
        n_s: f64,
        q_background: f64,
        kappa_e_over_2pi: f64,
    ) -> Self {
        let omega_r = 2.0 * PI * f_r;
        Self {
            g_over_2pi,
            n_s,
            gamma0: omega_r * fd0 * polarization(f_r, t),
            kappa_i0: omega_r / q_background,
            kappa_e: 2.0 * PI * kappa_e_over_2pi,
            omega_r,
        }
    }

    /// Parameters used to judge whether resonant saturation matters.
    pub fn reference() -> Self {
        Self::from_loss_tangent(500e6, 1.42e-5, 0.025, 230e3, 100.0, 60e6, 70.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.g_over_2pi, self.n_s, self.gamma0, self.kappa_e, self.omega_r];
        if all.iter().any(|v| !(*v > 0.0)) || !(self.kappa_i0 >= 0.0) {
            return Err(invalid("hole-burning parameters must be positive"));
        }
        Ok(())
    }

    fn g(&self) -> f64 {
        2.0 * PI * self.g_over_2pi
    }

    /// Intrinsic TLS linewidth `√(2g²n_s)`, rad/s.
    pub fn gamma2(&self) -> f64 {
        (2.0 * self.n_s).sqrt() * self.g()
    }

    /// Width of the burnt hole at `nbar` phonons.
    pub fn hole_width(&self, nbar: f64) -> f64 {
        self.gamma2() * (1.0 + nbar / self.n_s).sqrt()
    }

    pub fn rabi(&self, nbar: f64) -> f64 {
        2.0 * self.g() * nbar.sqrt()
    }

    /// Largest attainable pull, `Γ₀/4`.
    pub fn max_pull(&self) -> f64 {
        self.gamma0 / 4.0
    }

    /// Probe power at which the hole reaches the large-pull condition, W.
    pub fn critical_power(&self) -> f64 {
        let g = self.g();
        HBAR * self.omega_r / self.kappa_e * 2.0 * g * g * self.n_s * self.n_s
    }
}

/// Pull and internal loss at probe detuning `delta` (rad/s) with `nbar`
/// phonons. Returns `(δω_r, κ_i)` in rad/s.
pub fn holeburn_response(delta: f64, nbar: f64, hp: &HoleburnParams) -> Result<(f64, f64)> {
    if !(nbar >= 0.0) {
        return Err(domain(format!("nbar must be non-negative, got {nbar}")));
    }
    let s = nbar / hp.n_s;
    let root = (1.0 + s).sqrt();
    let d = delta / hp.gamma2();
    let denom = d * d + (1.0 + root).powi(2);
    let pull = -0.5 * hp.gamma0 * d * s / (root * denom);
    let kappa_i = hp.kappa_i0 + hp.gamma0 * (1.0 - s / root * (1.0 + root) / denom);
    Ok((pull, kappa_i))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleburnPoint {
    /// Probe detuning from the bare resonance, rad/s.
    pub applied_detuning: f64,
    /// Detuning from the pulled resonance, rad/s.
    pub detuning: f64,
    pub pull: f64,
    pub kappa_i: f64,
    pub nbar: f64,
    pub iterations: usize,
}

pub const HOLEBURN_TOL: f64 = 1e-3;
pub const HOLEBURN_MAX_ITER: usize = 500;

/// Self-consistent pull by successive substitution. The shift is always
/// applied to the bare resonance.
pub fn holeburn_point(applied_detuning: f64, p_s: f64, hp: &HoleburnParams) -> Result<HoleburnPoint> {
    hp.validate()?;
    let mut pull = 0.0;
    let mut kappa_i = hp.kappa_i0 + hp.gamma0;
    for it in 1..=HOLEBURN_MAX_ITER {
        let omega_r = hp.omega_r + pull;
        let delta = applied_detuning - pull;
        let kappa = kappa_i + hp.kappa_e;
        let nbar = hp.kappa_e / (delta * delta + 0.25 * kappa * kappa) * p_s / (HBAR * omega_r);
        let (next, k_i) = holeburn_response(delta, nbar, hp)?;
        let change = (next - pull).abs();
        pull = next;
        kappa_i = k_i;
        if change <= HOLEBURN_TOL {
            return Ok(HoleburnPoint {
                applied_detuning,
                detuning: applied_detuning - pull,
                pull,
                kappa_i,
                nbar,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence { stage: "holeburn", iterations: HOLEBURN_MAX_ITER, residual: f64::NAN, history: vec![] })
}

/// Applies [`holeburn_point`] over a grid of probe detunings in Hz.
pub fn holeburn_selfconsistent(detuning_hz: &[f64], p_s: f64, hp: &HoleburnParams) -> Result<Vec<HoleburnPoint>> {
    detuning_hz.iter().map(|&d| holeburn_point(2.0 * PI * d, p_s, hp)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{dbm_to_watts, watts_to_dbm};

    #[test]
    fn closed_form_limits() {
        let hp = HoleburnParams::reference();
        for n in [0.0, 1.0, 1e3, 1e6] {
            let (p, k) = holeburn_response(0.0, n, &hp).unwrap();
            assert_eq!(p, 0.0);
            let expect = hp.kappa_i0 + hp.gamma0 / (1.0 + n / hp.n_s).sqrt();
            assert!((k - expect).abs() < 1e-12 * expect);
        }
        let (p, k) = holeburn_response(1e5, 0.0, &hp).unwrap();
        assert_eq!(p, 0.0);
        assert!((k - hp.kappa_i0 - hp.gamma0).abs() < 1e-9);
    }

    #[test]
    fn pull_is_odd_in_detuning() {
        let hp = HoleburnParams::reference();
        let (a, _) = holeburn_response(3e6, 500.0, &hp).unwrap();
        let (b, _) = holeburn_response(-3e6, 500.0, &hp).unwrap();
        assert!((a + b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn reference_scales() {
        let hp = HoleburnParams::reference();
        assert!((hp.gamma2() / (2.0 * PI) / 3.25e6 - 1.0).abs() < 0.01);
        assert!((watts_to_dbm(hp.critical_power()) + 75.0).abs() < 1.0);
        assert!((hp.max_pull() / (2.0 * PI * 780.0) - 1.0).abs() < 0.05);
        let n = 1e4 * hp.n_s;
        assert!((hp.hole_width(n) / (hp.rabi(n) / 2f64.sqrt()) - 1.0).abs() < 0.05);
    }

    #[test]
    fn negligible_in_measurement_window() {
        let hp = HoleburnParams::reference();
        let grid: Vec<f64> = (0..=100).map(|i| -5e3 + 100.0 * i as f64).collect();
        let pts = holeburn_selfconsistent(&grid, dbm_to_watts(-100.0), &hp).unwrap();
        let worst = pts.iter().map(|p| p.pull.abs() / (2.0 * PI)).fold(0.0, f64::max);
        assert!(worst < 10.0, "{worst}");
    }
}
