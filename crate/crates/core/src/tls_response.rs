//! Equilibrium response of a flat-density TLS bath: frequency pull, resonant
//! and relaxation loss, temperature coefficient of frequency and its sign
//! change.
//!
//! Inside `tanh` and the TCF the bare frequency `f_r0` stands in for the
//! shifted one; the difference is of order the loss tangent.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{domain, invalid, Result};
use crate::numerics::brent;
use crate::specfun::{digamma_half_line, trigamma_half_line};

/// Temperature at which the relaxation quality factor is quoted.
pub const Q_REL_REFERENCE_T: f64 = 0.5;

/// Mechanical mode seen by the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorParams {
    /// Resonance frequency at zero temperature, Hz.
    pub f_r0: f64,
    /// External coupling rate over 2π, Hz.
    pub kappa_e_over_2pi: f64,
    /// Background quality factor; `f64::INFINITY` disables the term.
    pub q_bkg: f64,
}

impl ResonatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_r0 > 0.0 && self.f_r0.is_finite()) {
            return Err(invalid(format!("f_r0 must be positive, got {}", self.f_r0)));
        }
        if !(self.kappa_e_over_2pi > 0.0 && self.kappa_e_over_2pi.is_finite()) {
            return Err(invalid(format!(
                "kappa_e_over_2pi must be positive, got {}",
                self.kappa_e_over_2pi
            )));
        }
        if !(self.q_bkg > 0.0) {
            return Err(invalid(format!("q_bkg must be positive or inf, got {}", self.q_bkg)));
        }
        Ok(())
    }

    pub fn kappa_e(&self) -> f64 {
        2.0 * PI * self.kappa_e_over_2pi
    }

    /// External quality factor at resonance frequency `f_r`.
    pub fn q_e_at(&self, f_r: f64) -> f64 {
        f_r / self.kappa_e_over_2pi
    }
}

/// Effective TLS bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsEnsembleParams {
    /// Loss tangent governing the frequency pull.
    pub fd0_reac: f64,
    /// Loss tangent governing resonant absorption.
    pub fd0_diss: f64,
    /// Saturation phonon number.
    pub n_s: f64,
    /// Nonuniform-saturation exponent.
    pub beta: f64,
    /// Relaxation quality factor at 0.5 K.
    pub q_rel_ref: f64,
    /// Temperature exponent of relaxation damping.
    pub d_exp: f64,
}

impl TlsEnsembleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fd0_reac >= 0.0 && self.fd0_diss >= 0.0) {
            return Err(invalid("loss tangents must be non-negative"));
        }
        if !(self.n_s > 0.0) {
            return Err(invalid(format!("n_s must be positive, got {}", self.n_s)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if !(self.q_rel_ref > 0.0) {
            return Err(invalid(format!("q_rel_ref must be positive, got {}", self.q_rel_ref)));
        }
        if !(self.d_exp > 0.0) {
            return Err(invalid(format!("d_exp must be positive, got {}", self.d_exp)));
        }
        Ok(())
    }

    pub fn with_loss_tangent(mut self, fd0: f64) -> Self {
        self.fd0_reac = fd0;
        self.fd0_diss = fd0;
        self
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("temperature must be positive, got {t}")))
    }
}

/// `h f / (2π k_B T)`, the imaginary part of the digamma argument.
pub fn reduced_frequency(f: f64, t: f64) -> f64 {
    PLANCK * f / (2.0 * PI * BOLTZMANN * t)
}

/// `tanh(h f / 2 k_B T)`, the thermal polarization of TLSs at `f`.
pub fn polarization(f: f64, t: f64) -> f64 {
    (PLANCK * f / (2.0 * BOLTZMANN * t)).tanh()
}

/// Frequency pull `f_r(T) − f_r0` in Hz.
pub fn delta_fr(t: f64, p: &ResonatorParams, tls: &TlsEnsembleParams) -> Result<f64> {
    check_temperature(t)?;
    if tls.fd0_reac == 0.0 {
        return Ok(0.0);
    }
    let v = reduced_frequency(p.f_r0, t);
    let psi = digamma_half_line(-v);
    Ok(p.f_r0 * tls.fd0_reac / PI * (psi.re_psi - v.ln()))
}

/// Resonant-TLS loss `1/Q_res` with saturation by `nbar` phonons.
pub fn q_res_inv(t: f64, nbar: f64, p: &ResonatorParams, tls: &TlsEnsembleParams) -> Result<f64> {
    check_temperature(t)?;
    if !(nbar >= 0.0) {
        return Err(domain(format!("nbar must be non-negative, got {nbar}")));
    }
    let th = polarization(p.f_r0, t);
    let sat = (nbar / tls.n_s).powf(tls.beta) * th;
    Ok(tls.fd0_diss * th / (1.0 + sat).sqrt())
}

/// Relaxation loss `1/Q_rel`.
pub fn q_rel_inv(t: f64, tls: &TlsEnsembleParams) -> Result<f64> {
    check_temperature(t)?;
    Ok((t / Q_REL_REFERENCE_T).powf(tls.d_exp) / tls.q_rel_ref)
}

/// Background loss `1/Q_bkg`, zero for an infinite background Q.
pub fn q_bkg_inv(p: &ResonatorParams) -> f64 {
    if p.q_bkg.is_infinite() {
        0.0
    } else {
        1.0 / p.q_bkg
    }
}

/// Total internal loss `1/Q_i`.
pub fn q_i_inv(t: f64, nbar: f64, p: &ResonatorParams, tls: &TlsEnsembleParams) -> Result<f64> {
    Ok(q_res_inv(t, nbar, p, tls)? + q_rel_inv(t, tls)? + q_bkg_inv(p))
}

/// Temperature coefficient of frequency, `f_r^{-1} dΔf_r/dT`, in 1/K.
pub fn tcf(t0: f64, p: &ResonatorParams, tls: &TlsEnsembleParams) -> Result<f64> {
    check_temperature(t0)?;
    let v = reduced_frequency(p.f_r0, t0);
    // Psi'(1/2 - i v) is the conjugate of Psi'(1/2 + i v)
    let im = -trigamma_half_line(v).im;
    Ok(tls.fd0_reac / PI * (1.0 / t0 - v / t0 * im))
}

/// `k_B T_c / (h f)` at which the TCF vanishes; independent of all parameters.
pub fn crossover_ratio() -> f64 {
    // TCF(T) ∝ 1 − v Im Ψ'(1/2 − i v) with v = 1 / (2π θ)
    let g = |theta: f64| {
        let v = 1.0 / (2.0 * PI * theta);
        1.0 + v * trigamma_half_line(v).im
    };
    brent(g, 0.1, 1.0, 1e-15).expect("TCF changes sign inside [0.1, 1] h f / k_B")
}

/// Crossover temperature where the TCF changes sign.
pub fn crossover_temperature(p: &ResonatorParams) -> f64 {
    crossover_ratio() * PLANCK * p.f_r0 / BOLTZMANN
}

/// Elevated temperature `sqrt(T0² + T_sat²)` seen by resonant TLSs that only
/// thermalize to a saturation floor.
pub fn elevated_temperature(t0: f64, t_sat: f64) -> f64 {
    t0.hypot(t_sat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    fn fig2() -> (ResonatorParams, TlsEnsembleParams) {
        (
            ResonatorParams { f_r0: 520.808275e6, kappa_e_over_2pi: 69.9, q_bkg: 60e6 },
            TlsEnsembleParams {
                fd0_reac: 1.42e-5,
                fd0_diss: 1.61e-5,
                n_s: 94.2,
                beta: 1.0,
                q_rel_ref: 0.33e6,
                d_exp: 1.69,
            },
        )
    }

    // Flat-density dispersive kernel in units of h f:
    // (Fδ/π) PV ∫_0^∞ (1 − tanh(ε/2θ)) ε / (ε² − 1) dε, Hz after scaling by f.
    fn kernel_oracle(theta: f64) -> f64 {
        let g = |e: f64| 1.0 - (e / (2.0 * theta)).tanh();
        let g1 = g(1.0);
        let near = integrate(
            |e| {
                if (e - 1.0).abs() < 1e-12 {
                    let h = 1e-6;
                    let f = |x: f64| (g(x) * x / (x + 1.0) - g1 / 2.0) / (x - 1.0);
                    return 0.5 * (f(1.0 - h) + f(1.0 + h));
                }
                (g(e) * e / (e + 1.0) - g1 / 2.0) / (e - 1.0)
            },
            0.0,
            2.0,
            1e-13,
            1e-16,
        );
        // PV of g1/2 ∫_0^2 de/(e−1) vanishes
        let far_end = 2.0 + 80.0 * theta;
        let far = integrate(|e| g(e) * e / (e * e - 1.0), 2.0, far_end, 1e-13, 1e-18);
        near + far
    }

    #[test]
    fn delta_fr_matches_quadrature_kernel() {
        let (p, t) = fig2();
        for tk in [0.025, 0.050, 0.075, 0.100] {
            let theta = BOLTZMANN * tk / (PLANCK * p.f_r0);
            let oracle = p.f_r0 * t.fd0_reac / PI * kernel_oracle(theta);
            let got = delta_fr(tk, &p, &t).unwrap();
            assert!((got - oracle).abs() < 0.1, "T={tk}: {got} vs {oracle}");
        }
    }

    #[test]
    fn bracket_reference_values() {
        // (Re Ψ(1/2 + i v) − ln v) at θ = k T / h f
        let cases = [(0.3, -0.16407), (1.0, 0.068771), (5.0, 1.49230)];
        for (theta, want) in cases {
            let v = 1.0 / (2.0 * PI * theta);
            let got = digamma_half_line(v).re_psi - v.ln();
            assert!((got - want).abs() < 2e-5, "{theta}: {got}");
            assert!((kernel_oracle(theta) - got).abs() < 1e-9);
        }
    }

    #[test]
    fn pull_vanishes_at_zero_temperature() {
        let (p, t) = fig2();
        assert!(delta_fr(1e-5, &p, &t).unwrap().abs() < 1e-3);
        let none = t.with_loss_tangent(0.0);
        assert_eq!(delta_fr(0.05, &p, &none).unwrap(), 0.0);
        assert!(delta_fr(0.0, &p, &t).is_err());
    }

    #[test]
    fn resonant_loss_limits() {
        let (p, t) = fig2();
        let cold = q_res_inv(1e-4, 0.0, &p, &t).unwrap();
        assert!((cold - t.fd0_diss).abs() < 1e-15);
        let half = q_res_inv(1e-4, 3.0 * t.n_s, &p, &t).unwrap();
        assert!((half - t.fd0_diss / 2.0).abs() < 1e-15);
        assert!(q_res_inv(0.05, -1.0, &p, &t).is_err());
    }

    #[test]
    fn internal_loss_at_half_kelvin_saturated() {
        let p = ResonatorParams { f_r0: 502.0655e6, kappa_e_over_2pi: 42.1, q_bkg: f64::INFINITY };
        let t = TlsEnsembleParams {
            fd0_reac: 1.14e-5,
            fd0_diss: 1.23e-5,
            n_s: 128.0,
            beta: 1.0,
            q_rel_ref: 0.36e6,
            d_exp: 1.84,
        };
        let qi = 1.0 / q_i_inv(0.5, 1e30, &p, &t).unwrap();
        assert!((qi - 0.36e6).abs() / 0.36e6 < 1e-6);
    }

    #[test]
    fn tcf_matches_derivative_of_pull() {
        let (p, t) = fig2();
        for tk in [1e-3, 5e-3, 0.011, 0.05, 0.3, 1.0] {
            let h = tk * 1e-4;
            let d = (delta_fr(tk + h, &p, &t).unwrap() - delta_fr(tk - h, &p, &t).unwrap()) / (2.0 * h);
            let want = p.f_r0 * tcf(tk, &p, &t).unwrap();
            assert!((d - want).abs() <= 1e-4 * want.abs().max(1e-3), "T={tk}: {d} vs {want}");
        }
    }

    #[test]
    fn crossover_ratio_and_temperature() {
        let r = crossover_ratio();
        assert!((r - 0.4408).abs() < 5e-4, "{r}");
        let p = ResonatorParams { f_r0: 520.81e6, kappa_e_over_2pi: 70.0, q_bkg: 60e6 };
        let tc = crossover_temperature(&p);
        assert!((tc - 0.011).abs() < 0.2e-3, "{tc}");
        let approx = 2f64.sqrt() / PI;
        assert!(((approx - r) / r).abs() < 0.025);
    }
}
