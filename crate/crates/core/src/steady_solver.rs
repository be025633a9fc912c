//! Self-consistent steady state of the heated resonator.
//!
//! Two nested fixed points are solved. The inner one finds the TLS
//! saturation level `α` (and so the total `Q`) at a given detuning and
//! temperature. The outer one closes the loop detuning → dissipated power →
//! temperature → resonance frequency → detuning. The outer state is
//! `(x·Q_ref, ln T)` and is driven by Anderson mixing. A converged point is
//! kept only if the heat balance is linearly stable there and the
//! temperature could have relaxed to it from the warm start without crossing
//! another root. Otherwise a directed root search on the heat balance, with
//! the frequency slaved, walks from the warm start to the nearest root.
//! Warm starts therefore select the hysteresis branch in a sweep.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::anderson::Anderson;
use crate::constants::HBAR;
use crate::error::{domain, invalid, Error, Result};
use crate::thermal::{t_of_pd, ThermalParams};
use crate::tls_response::{
    delta_fr, polarization, q_bkg_inv, q_rel_inv, ResonatorParams, TlsEnsembleParams,
};

/// Sweep direction of the probe frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Fixed,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Fixed => "fixed",
        }
    }
}

/// Probe tone applied to the resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCondition {
    pub f_probe: f64,
    pub p_s: f64,
    pub direction: Direction,
}

/// A single strongly coupled TLS detuned from the mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteTlsParams {
    pub omega_tls_over_2pi: f64,
    pub g_over_2pi: f64,
}

impl DiscreteTlsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_tls_over_2pi > 0.0 && self.g_over_2pi > 0.0) {
            return Err(invalid("discrete TLS frequency and coupling must be positive"));
        }
        Ok(())
    }

    /// `ω_tls − ω_r`, rad/s.
    pub fn detuning(&self, f_r: f64) -> f64 {
        2.0 * PI * (self.omega_tls_over_2pi - f_r)
    }

    /// Phonon number above which the TLS stops pulling the mode.
    pub fn n_c(&self, f_r: f64) -> f64 {
        let r = self.detuning(f_r) / (2.0 * 2.0 * PI * self.g_over_2pi);
        r * r
    }

    /// Low-power dispersive pull, rad/s.
    pub fn chi0(&self, t: f64, f_r: f64) -> f64 {
        let g = 2.0 * PI * self.g_over_2pi;
        -(g * g / self.detuning(f_r)) * polarization(self.omega_tls_over_2pi, t)
    }

    /// Message when the coupling is not small against the detuning.
    pub fn dispersive_warning(&self, f_r: f64) -> Option<String> {
        let ratio = self.g_over_2pi / (self.omega_tls_over_2pi - f_r).abs();
        (ratio > 0.1).then(|| format!("discrete TLS outside dispersive regime: g/|δ| = {ratio:.3}"))
    }
}

/// Pull of the mode by the discrete TLS, rad/s.
pub fn discrete_tls_shift(nbar: f64, t: f64, f_r: f64, d: &DiscreteTlsParams) -> Result<f64> {
    if !(nbar >= 0.0) || !(t > 0.0) {
        return Err(domain(format!("need nbar >= 0 and T > 0, got {nbar}, {t}")));
    }
    Ok(d.chi0(t, f_r) / (1.0 + nbar / d.n_c(f_r)).sqrt())
}

/// Impedance-mismatch rotation of the reflection circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcmParams {
    pub phi_rot: f64,
}

impl DcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.phi_rot.abs() < PI / 2.0 {
            Ok(())
        } else {
            Err(invalid(format!("|phi_rot| must be below pi/2, got {}", self.phi_rot)))
        }
    }
}

/// Both `Q` branches compatible with a resonance depth `s = |S11|_min`.
///
/// The first entry is the under-coupled branch.
pub fn dcm_q_from_depth(s: f64, phi: f64, q_e: f64) -> Result<(f64, f64)> {
    let s_min = phi.sin().abs();
    if !(s >= s_min) {
        return Err(domain(format!("depth {s} is below the minimum observable {s_min}")));
    }
    let c2 = phi.cos().powi(2);
    let root = (1.0 + (s * s - 1.0) / c2).max(0.0).sqrt();
    Ok((0.5 * q_e * c2 * (1.0 - root), 0.5 * q_e * c2 * (1.0 + root)))
}

/// Relative uncertainty of `Q` from the depth: `σ_s / (1 − s)`.
pub fn dcm_relative_uncertainty(s: f64, sigma_s: f64) -> f64 {
    sigma_s / (1.0 - s)
}

/// How the total quality factor responds to the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dissipation {
    /// Saturable resonant TLSs plus relaxation and background loss.
    Tls,
    /// Constant depth `Q/Q_e`, leaving only the reactive nonlinearity.
    FixedDepth(f64),
}

/// Convergence controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub eps_alpha: f64,
    pub eps_x: f64,
    /// Relative tolerance on the temperature update.
    pub eps_t: f64,
    pub max_alpha_iter: usize,
    pub max_outer_iter: usize,
    pub max_mixing_iter: usize,
    pub anderson_depth: usize,
    pub anderson_cond_max: f64,
    pub mixing_beta: f64,
    /// Reject fixed points where the heat balance is unstable.
    pub check_stability: bool,
    /// Skip Anderson and use damped mixing only.
    pub mixing_only: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps_alpha: 1e-13,
            eps_x: 1e-16,
            eps_t: 1e-13,
            max_alpha_iter: 10_000,
            max_outer_iter: 300,
            max_mixing_iter: 20_000,
            anderson_depth: 5,
            anderson_cond_max: 1e12,
            mixing_beta: 0.3,
            check_stability: true,
            mixing_only: false,
        }
    }
}

impl SolverOptions {
    /// The loose tolerances quoted for the original fits.
    pub fn loose() -> Self {
        Self { eps_alpha: 1e-5, eps_x: 1e-8, eps_t: 1e-8, ..Self::default() }
    }
}

/// Converged self-consistent state at one probe condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub f_probe: f64,
    pub p_s: f64,
    pub temperature: f64,
    pub nbar: f64,
    pub q_i: f64,
    pub q_total: f64,
    pub q_e: f64,
    pub f_r: f64,
    pub x_detuning: f64,
    pub y_fractional: f64,
    pub s11: Complex64,
    pub p_d: f64,
    pub alpha_sat: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Ordered sequence of operating points.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub direction: Direction,
    pub points: Vec<OperatingPoint>,
    /// Indices `i` where the response jumps between `i − 1` and `i`.
    pub jumps: Vec<usize>,
}

/// Result of the inner saturation solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSolution {
    pub alpha: f64,
    pub q: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Full parameter set of the resonator, bath and heat link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub resonator: ResonatorParams,
    pub tls: TlsEnsembleParams,
    pub thermal: ThermalParams,
    pub discrete: Option<DiscreteTlsParams>,
    pub dcm: Option<DcmParams>,
    pub dissipation: Dissipation,
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    x: f64,
    t: f64,
    f_r: f64,
    q: f64,
    q_e: f64,
    alpha: AlphaSolution,
    p_d: f64,
    nbar: f64,
    t_next: f64,
    /// `f_r − f_r0` at the updated temperature.
    off_next: f64,
    /// `f_r − f_r0` at the input temperature.
    off_here: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// Probe at a fixed frequency.
    Probe(f64),
    /// Probe riding on the shifted resonance (`x = 0`).
    Resonant,
}

impl Model {
    pub fn new(
        resonator: ResonatorParams,
        tls: TlsEnsembleParams,
        thermal: ThermalParams,
    ) -> Self {
        Self { resonator, tls, thermal, discrete: None, dcm: None, dissipation: Dissipation::Tls }
    }

    pub fn validate(&self) -> Result<()> {
        self.resonator.validate()?;
        self.tls.validate()?;
        self.thermal.validate()?;
        if let Some(d) = &self.discrete {
            d.validate()?;
        }
        if let Some(d) = &self.dcm {
            d.validate()?;
        }
        if let Dissipation::FixedDepth(a) = self.dissipation {
            if !(a > 0.0 && a < 1.0) {
                return Err(invalid(format!("fixed depth must lie in (0, 1), got {a}")));
            }
        }
        Ok(())
    }

    fn continuum_fr(&self, t: f64) -> Result<f64> {
        Ok(self.resonator.f_r0 + delta_fr(t, &self.resonator, &self.tls)?)
    }

    /// Resonance frequency at temperature `t` with `nbar` phonons, Hz.
    pub fn resonance_frequency(&self, t: f64, nbar: f64) -> Result<f64> {
        Ok(self.resonance_offset(t, nbar)? + self.resonator.f_r0)
    }

    /// `f_r(T, n̄) − f_r0`, kept separate to preserve precision in `x`.
    fn resonance_offset(&self, t: f64, nbar: f64) -> Result<f64> {
        let mut off = delta_fr(t, &self.resonator, &self.tls)?;
        if let Some(d) = &self.discrete {
            let f = self.continuum_fr(t)?;
            off += discrete_tls_shift(nbar, t, f, d)? / (2.0 * PI);
        }
        Ok(off)
    }

    /// Low-power resonance at the bath temperature.
    pub fn f_r_t0(&self) -> Result<f64> {
        self.resonance_frequency(self.thermal.t0, 0.0)
    }

    /// Probe frequency realizing applied detuning `x0`.
    pub fn probe_from_x0(&self, x0: f64) -> Result<f64> {
        Ok(self.f_r_t0()? * (1.0 + x0))
    }

    /// `(Q_min, Q_max, r)` at temperature `t` and resonance `f_r`.
    pub fn q_bounds(&self, t: f64, f_r: f64) -> Result<(f64, f64, f64)> {
        let q_e_inv = 1.0 / self.resonator.q_e_at(f_r);
        let base = q_e_inv + q_bkg_inv(&self.resonator) + q_rel_inv(t, &self.tls)?;
        let res_min = self.tls.fd0_diss * polarization(self.resonator.f_r0, t);
        let q_min_inv = base + res_min;
        Ok((1.0 / q_min_inv, 1.0 / base, 1.0 - base / q_min_inv))
    }

    /// Low-power linewidth at the bath temperature, Hz.
    pub fn linewidth_t0(&self) -> Result<f64> {
        let f = self.f_r_t0()?;
        let q = match self.dissipation {
            Dissipation::Tls => self.q_bounds(self.thermal.t0, f)?.0,
            Dissipation::FixedDepth(a) => a * self.resonator.q_e_at(f),
        };
        Ok(f / q)
    }

    /// Every steady-state temperature at a fixed probe, found by scanning the
    /// heat balance on `samples` log-spaced temperatures from `T₀` to `t_max`
    /// and refining each sign change. More than one root means bistability.
    pub fn steady_state_temperatures(
        &self,
        f_probe: f64,
        p_s: f64,
        t_max: f64,
        samples: usize,
        opts: &SolverOptions,
    ) -> Result<Vec<f64>> {
        self.validate()?;
        let t0 = self.thermal.t0;
        if !(t_max > t0) || samples < 2 {
            return Err(invalid("need t_max above the bath and at least two samples"));
        }
        let q_ref = self.q_ref()?;
        let mode = Mode::Probe(f_probe);
        let s0 = (f_probe / self.f_r_t0()? - 1.0) * q_ref;
        let h = |u: f64| self.heat_residual(mode, s0, u, p_s, q_ref, opts);
        let (u0, u1) = (t0.ln(), t_max.ln());
        let grid: Vec<f64> = (0..samples).map(|k| u0 + (u1 - u0) * k as f64 / (samples - 1) as f64).collect();
        let vals = grid.iter().map(|&u| h(u)).collect::<Result<Vec<f64>>>()?;
        let mut roots = Vec::new();
        for k in 1..samples {
            if vals[k - 1] == 0.0 {
                roots.push(grid[k - 1].exp());
            } else if vals[k - 1].signum() != vals[k].signum() && vals[k] != 0.0 {
                let u = crate::numerics::brent(|u| h(u).unwrap_or(f64::NAN), grid[k - 1], grid[k], opts.eps_t)?;
                roots.push(u.exp());
            }
        }
        Ok(roots)
    }

    /// Inner fixed point `α = f(α)` at detuning `x`, temperature `t`.
    pub fn alpha_fixed_point(
        &self,
        x: f64,
        t: f64,
        f_r: f64,
        p_s: f64,
        opts: &SolverOptions,
    ) -> Result<AlphaSolution> {
        if !(t > 0.0) {
            return Err(domain(format!("temperature must be positive, got {t}")));
        }
        let (q_min, _q_max, r) = self.q_bounds(t, f_r)?;
        let q_e = self.resonator.q_e_at(f_r);
        let omega = 2.0 * PI * f_r;
        let xi = 4.0 * q_min * q_min * p_s / (q_e * HBAR * omega * omega * self.tls.n_s);
        let th = polarization(self.resonator.f_r0, t);
        let beta = self.tls.beta;
        let qx2 = (2.0 * q_min * x).powi(2);
        let f = |a: f64| {
            let one = 1.0 - r * a;
            let chi_d = one * one / (one * one + qx2);
            // 1 − A/sqrt(A² + B) written without cancellation
            let w = (chi_d * xi).powf(beta) * th / one.powf(2.0 * beta);
            let s = (1.0 + w).sqrt();
            w / ((s + 1.0) * s)
        };
        let finish = |a: f64, it: usize| AlphaSolution {
            alpha: a,
            q: q_min / (1.0 - r * a),
            residual: (a - f(a)).abs(),
            iterations: it,
        };
        if p_s == 0.0 || r == 0.0 {
            let a = if p_s == 0.0 { 0.0 } else { f(0.0) };
            return Ok(finish(a, 0));
        }
        let mut a = 1e-9;
        let slow_after = (opts.max_alpha_iter / 10).max(1);
        for it in 1..=opts.max_alpha_iter {
            let next = f(a);
            let step = (next - a).abs();
            a = next;
            if step <= opts.eps_alpha {
                return Ok(finish(a, it));
            }
            if it == slow_after {
                // Contraction close to one: finish with a bracketed solve
                let root = crate::numerics::brent(|v| v - f(v), 0.0, 1.0, opts.eps_alpha * 1e-3)?;
                return Ok(finish(root, it));
            }
        }
        Err(Error::NonConvergence {
            stage: "alpha",
            iterations: opts.max_alpha_iter,
            residual: (a - f(a)).abs(),
            history: Vec::new(),
        })
    }

    fn evaluate(&self, x: f64, t: f64, f_r: f64, p_s: f64, opts: &SolverOptions) -> Result<Eval> {
        let q_e = self.resonator.q_e_at(f_r);
        let alpha = match self.dissipation {
            Dissipation::Tls => self.alpha_fixed_point(x, t, f_r, p_s, opts)?,
            Dissipation::FixedDepth(a) => AlphaSolution { alpha: 0.0, q: a * q_e, residual: 0.0, iterations: 0 },
        };
        let q = alpha.q;
        let q_i_inv = 1.0 / q - 1.0 / q_e;
        let chi_c = 4.0 * q * q * q_i_inv / q_e;
        let chi_d = 1.0 / (1.0 + 4.0 * q * q * x * x);
        let p_d = chi_c * chi_d * p_s;
        let omega = 2.0 * PI * f_r;
        let nbar = p_d / (q_i_inv * HBAR * omega * omega);
        let t_next = t_of_pd(p_d, &self.thermal)?;
        let off_next = self.resonance_offset(t_next, nbar)?;
        let off_here = self.resonance_offset(t, nbar)?;
        Ok(Eval {
            x,
            t,
            f_r,
            q,
            q_e,
            alpha,
            p_d,
            nbar,
            t_next,
            off_next,
            off_here,
        })
    }

    fn point_from(&self, e: &Eval, f_probe: f64, p_s: f64, iterations: usize, converged: bool) -> OperatingPoint {
        let q_i = 1.0 / (1.0 / e.q - 1.0 / e.q_e);
        let tan_phi = self.dcm.map_or(0.0, |d| d.phi_rot.tan());
        let num = Complex64::new(1.0, tan_phi) * (2.0 * e.q / e.q_e);
        let s11 = Complex64::new(1.0, 0.0) - num / Complex64::new(1.0, 2.0 * e.q * e.x);
        OperatingPoint {
            f_probe,
            p_s,
            temperature: e.t,
            nbar: e.nbar,
            q_i,
            q_total: e.q,
            q_e: e.q_e,
            f_r: e.f_r,
            x_detuning: e.x,
            y_fractional: e.q * e.x,
            s11,
            p_d: e.p_d,
            alpha_sat: e.alpha.alpha,
            iterations,
            converged,
        }
    }

    fn q_ref(&self) -> Result<f64> {
        Ok(self.f_r_t0()? / self.linewidth_t0()?)
    }

    fn coords(&self, mode: Mode, s: f64, q_ref: f64) -> (f64, f64) {
        match mode {
            Mode::Probe(f) => {
                let x = s / q_ref;
                (x, f / (1.0 + x))
            }
            Mode::Resonant => (0.0, self.resonator.f_r0 * (1.0 + s / q_ref)),
        }
    }

    fn scaled_target(&self, mode: Mode, off: f64, q_ref: f64) -> f64 {
        let f_r0 = self.resonator.f_r0;
        match mode {
            Mode::Probe(f) => ((f - f_r0) - off) / (f_r0 + off) * q_ref,
            Mode::Resonant => off / f_r0 * q_ref,
        }
    }

    /// Outer map in scaled coordinates. The first coordinate is `x·Q_ref`
    /// for a fixed probe and `(f_r − f_r0)/f_r0·Q_ref` when riding the
    /// resonance.
    fn outer_map(&self, mode: Mode, z: [f64; 2], p_s: f64, q_ref: f64, opts: &SolverOptions) -> Result<([f64; 2], Eval)> {
        let (x, f_r) = self.coords(mode, z[0], q_ref);
        let e = self.evaluate(x, z[1].exp(), f_r, p_s, opts)?;
        let g = [self.scaled_target(mode, e.off_next, q_ref), e.t_next.ln()];
        if g.iter().all(|v| v.is_finite()) {
            Ok((g, e))
        } else {
            Err(domain("outer map produced a non-finite value"))
        }
    }

    fn is_stable(&self, mode: Mode, z: [f64; 2], p_s: f64, q_ref: f64, opts: &SolverOptions) -> bool {
        let h = [1e-6 * z[0].abs().max(1e-2), 1e-7];
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += h[j];
            zm[j] -= h[j];
            let (Ok((gp, _)), Ok((gm, _))) =
                (self.outer_map(mode, zp, p_s, q_ref, opts), self.outer_map(mode, zm, p_s, q_ref, opts))
            else {
                return false;
            };
            for i in 0..2 {
                jac[i][j] = (gp[i] - gm[i]) / (2.0 * h[j]);
            }
        }
        let tr = jac[0][0] + jac[1][1];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let disc = 0.25 * tr * tr - det;
        let max_re = if disc >= 0.0 { 0.5 * tr + disc.sqrt() } else { 0.5 * tr };
        max_re < 1.0
    }

    /// Frequency coordinate consistent with temperature `t`, continued from
    /// `s0`. Only the discrete TLS couples it back to the field.
    fn slaved_frequency(&self, mode: Mode, s0: f64, t: f64, p_s: f64, q_ref: f64, opts: &SolverOptions) -> Result<(f64, Eval)> {
        let eval_at = |s: f64| -> Result<(f64, Eval)> {
            let (x, f_r) = self.coords(mode, s, q_ref);
            let e = self.evaluate(x, t, f_r, p_s, opts)?;
            Ok((self.scaled_target(mode, e.off_here, q_ref) - s, e))
        };
        let (k0, e0) = eval_at(s0)?;
        let s = if self.discrete.is_none() {
            s0 + k0
        } else {
            directed_root(|s| eval_at(s).map(|v| v.0), s0, Some(k0), 1e-3, 1.0, 0.1 * opts.eps_x * q_ref)?
        };
        if s == s0 {
            return Ok((s, e0));
        }
        Ok((s, eval_at(s)?.1))
    }

    /// Heat-balance residual `ln T' − ln T` with the frequency slaved.
    fn heat_residual(&self, mode: Mode, s0: f64, u: f64, p_s: f64, q_ref: f64, opts: &SolverOptions) -> Result<f64> {
        let (_, e) = self.slaved_frequency(mode, s0, u.exp(), p_s, q_ref, opts)?;
        Ok(e.t_next.ln() - u)
    }

    /// True when no other heat-balance root lies between the start and `u`
    /// along the direction the temperature would relax in.
    fn reached_by_relaxation(&self, mode: Mode, z0: [f64; 2], u: f64, p_s: f64, q_ref: f64, opts: &SolverOptions) -> bool {
        let du = u - z0[1];
        if du.abs() <= 1e3 * opts.eps_t {
            return true;
        }
        let Ok(h0) = self.heat_residual(mode, z0[0], z0[1], p_s, q_ref, opts) else {
            return false;
        };
        if h0.signum() != du.signum() {
            return false;
        }
        (1..8).all(|k| {
            let v = z0[1] + du * k as f64 / 8.0;
            matches!(self.heat_residual(mode, z0[0], v, p_s, q_ref, opts), Ok(h) if h.signum() == du.signum())
        })
    }

    fn solve_scaled(&self, mode: Mode, z0: [f64; 2], p_s: f64, opts: &SolverOptions) -> Result<(Eval, usize)> {
        let q_ref = self.q_ref()?;
        let tol = [opts.eps_x * q_ref, opts.eps_t];
        let done = |r: &[f64; 2]| r[0].abs() <= tol[0] && r[1].abs() <= tol[1];
        let norm = |r: &[f64; 2]| (r[0] / tol[0]).abs().max((r[1] / tol[1]).abs());
        let mut history = Vec::new();
        let mut total = 0usize;

        if opts.mixing_only {
            return self.damped_mixing(mode, z0, p_s, q_ref, opts, &done, &norm);
        }

        let mut acc = Anderson::<2>::new(opts.anderson_depth, opts.anderson_cond_max);
        let mut z = z0;
        for _ in 0..opts.max_outer_iter {
            total += 1;
            let Ok((g, e)) = self.outer_map(mode, z, p_s, q_ref, opts) else {
                break;
            };
            let r = [g[0] - z[0], g[1] - z[1]];
            history.push(norm(&r));
            if done(&r) {
                let accept = !opts.check_stability
                    || (self.is_stable(mode, z, p_s, q_ref, opts)
                        && self.reached_by_relaxation(mode, z0, z[1], p_s, q_ref, opts));
                if accept {
                    return Ok((e, total));
                }
                break;
            }
            z = acc.step(g, r);
        }

        // Follow the thermal relaxation from the start to the first root
        let mut evals = 0usize;
        let u = directed_root(
            |u| {
                evals += 1;
                self.heat_residual(mode, z0[0], u, p_s, q_ref, opts)
            },
            z0[1],
            None,
            1e-5,
            0.05,
            0.1 * opts.eps_t,
        )
        .map_err(|err| match err {
            Error::Domain(_) => Error::NonConvergence {
                stage: "outer",
                iterations: total,
                residual: history.last().copied().unwrap_or(f64::NAN),
                history: history.iter().rev().take(50).rev().copied().collect(),
            },
            other => other,
        })?;
        total += evals;
        let (s, _) = self.slaved_frequency(mode, z0[0], u.exp(), p_s, q_ref, opts)?;
        // Polish so the reported state is an exact input of the map
        let (g, e) = self.outer_map(mode, [s, u], p_s, q_ref, opts)?;
        let r = [g[0] - s, g[1] - u];
        if !done(&r) {
            history.push(norm(&r));
            let keep = history.len().saturating_sub(50);
            return Err(Error::NonConvergence { stage: "outer", iterations: total, residual: norm(&r), history: history[keep..].to_vec() });
        }
        Ok((e, total))
    }

    #[allow(clippy::too_many_arguments)]
    fn damped_mixing(
        &self,
        mode: Mode,
        z0: [f64; 2],
        p_s: f64,
        q_ref: f64,
        opts: &SolverOptions,
        done: &dyn Fn(&[f64; 2]) -> bool,
        norm: &dyn Fn(&[f64; 2]) -> f64,
    ) -> Result<(Eval, usize)> {
        let mut history = Vec::new();
        let mut z = z0;
        let mut beta = opts.mixing_beta;
        let mut last = f64::INFINITY;
        for it in 0..opts.max_mixing_iter {
            let (g, e) = match self.outer_map(mode, z, p_s, q_ref, opts) {
                Ok(v) => v,
                Err(_) => {
                    beta *= 0.5;
                    continue;
                }
            };
            let r = [g[0] - z[0], g[1] - z[1]];
            let n = norm(&r);
            history.push(n);
            if done(&r) {
                return Ok((e, it + 1));
            }
            if n > last {
                beta = (beta * 0.5).max(1e-6);
            }
            last = n;
            z = [z[0] + beta * r[0], z[1] + beta * r[1]];
        }
        let keep = history.len().saturating_sub(50);
        Err(Error::NonConvergence {
            stage: "mixing",
            iterations: opts.max_mixing_iter,
            residual: last,
            history: history[keep..].to_vec(),
        })
    }

    /// Steady state for a probe at `f_probe` with power `p_s` (W).
    ///
    /// A warm start continues from a neighbouring solution's temperature
    /// and resonance frequency; otherwise the solve starts at the bath.
    pub fn solve_point(
        &self,
        f_probe: f64,
        p_s: f64,
        warm_start: Option<&OperatingPoint>,
        opts: &SolverOptions,
    ) -> Result<OperatingPoint> {
        if !(p_s >= 0.0) {
            return Err(domain(format!("probe power must be non-negative, got {p_s}")));
        }
        let q_ref = self.q_ref()?;
        let (f_r, t) = match warm_start {
            Some(w) => (w.f_r, w.temperature),
            None => (self.f_r_t0()?, self.thermal.t0),
        };
        let x = (f_probe - f_r) / f_r;
        let (e, it) = self.solve_scaled(Mode::Probe(f_probe), [x * q_ref, t.ln()], p_s, opts)?;
        Ok(self.point_from(&e, f_probe, p_s, it, true))
    }

    /// Steady state with the probe held on the shifted resonance.
    pub fn solve_resonant(&self, p_s: f64, warm_start: Option<&OperatingPoint>, opts: &SolverOptions) -> Result<OperatingPoint> {
        let q_ref = self.q_ref()?;
        let f_r0 = self.resonator.f_r0;
        let (f_r, t) = match warm_start {
            Some(w) => (w.f_r, w.temperature),
            None => (self.f_r_t0()?, self.thermal.t0),
        };
        let (e, it) = self.solve_scaled(Mode::Resonant, [(f_r - f_r0) / f_r0 * q_ref, t.ln()], p_s, opts)?;
        Ok(self.point_from(&e, e.f_r, p_s, it, true))
    }

    /// Residuals `(|α − f(α)|, |x − g(x)|, |T − T'|/T)` re-evaluated at `op`.
    pub fn residuals(&self, op: &OperatingPoint, opts: &SolverOptions) -> Result<(f64, f64, f64)> {
        let e = self.evaluate(op.x_detuning, op.temperature, op.f_r, op.p_s, opts)?;
        let off = e.off_next;
        let f_r0 = self.resonator.f_r0;
        let x_next = ((op.f_probe - f_r0) - off) / (f_r0 + off);
        Ok((e.alpha.residual, (x_next - op.x_detuning).abs(), (e.t_next - op.temperature).abs() / op.temperature))
    }

    /// Frequency sweep with warm-started continuation.
    ///
    /// The first grid point must sit at least 20 low-power linewidths from
    /// resonance. With `lead_in`, a ramp from that distance is solved first
    /// and discarded, so any grid is accepted.
    pub fn sweep_frequency(
        &self,
        grid: &[f64],
        p_s: f64,
        direction: Direction,
        lead_in: bool,
        opts: &SolverOptions,
    ) -> Result<SweepResult> {
        self.validate()?;
        if grid.is_empty() {
            return Err(invalid("empty frequency grid"));
        }
        let increasing = grid.windows(2).all(|w| w[1] > w[0]);
        let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
        match direction {
            Direction::Up if !increasing => return Err(invalid("up sweep needs an increasing grid")),
            Direction::Down if !decreasing => return Err(invalid("down sweep needs a decreasing grid")),
            _ => {}
        }
        let f_r = self.f_r_t0()?;
        let lw = self.linewidth_t0()?;
        let far = 20.0 * lw;
        let mut ramp = Vec::new();
        if (grid[0] - f_r).abs() < far {
            if !lead_in {
                return Err(invalid(format!(
                    "first sweep point is {:.3} linewidths from resonance; at least 20 required",
                    (grid[0] - f_r).abs() / lw
                )));
            }
            let start = match direction {
                Direction::Down => f_r + 25.0 * lw,
                _ => f_r - 25.0 * lw,
            };
            let n = 80;
            for i in 0..n {
                // Denser near the grid start
                let u = i as f64 / n as f64;
                ramp.push(start + (grid[0] - start) * (1.0 - (1.0 - u) * (1.0 - u)));
            }
        }
        let mut prev: Option<OperatingPoint> = None;
        for &f in &ramp {
            prev = Some(self.solve_point(f, p_s, prev.as_ref(), opts)?);
        }
        let mut points = Vec::with_capacity(grid.len());
        for &f in grid {
            let op = self.solve_point(f, p_s, prev.as_ref(), opts)?;
            points.push(op);
            prev = Some(op);
        }
        let jumps = detect_jumps(&points);
        Ok(SweepResult { direction, points, jumps })
    }

    /// Fixed-frequency power sweep, each point warm-started from the last.
    pub fn sweep_power(&self, f_probe: f64, powers: &[f64], opts: &SolverOptions) -> Result<Vec<OperatingPoint>> {
        self.validate()?;
        let mut prev: Option<OperatingPoint> = None;
        let mut out = Vec::with_capacity(powers.len());
        for &p in powers {
            let op = self.solve_point(f_probe, p, prev.as_ref(), opts)?;
            out.push(op);
            prev = Some(op);
        }
        Ok(out)
    }

    /// Power sweep with the probe riding on the shifted resonance.
    pub fn sweep_resonant(&self, powers: &[f64], opts: &SolverOptions) -> Result<Vec<OperatingPoint>> {
        self.validate()?;
        let mut prev: Option<OperatingPoint> = None;
        let mut out = Vec::with_capacity(powers.len());
        for &p in powers {
            let op = self.solve_resonant(p, prev.as_ref(), opts)?;
            out.push(op);
            prev = Some(op);
        }
        Ok(out)
    }
}

/// Root of `h` reached by walking from `z0` in the direction of `sign h(z0)`
/// with geometrically growing steps capped at `max_step`, then bracketing.
fn directed_root(
    mut h: impl FnMut(f64) -> Result<f64>,
    z0: f64,
    h0: Option<f64>,
    step0: f64,
    max_step: f64,
    xtol: f64,
) -> Result<f64> {
    let h0 = match h0 {
        Some(v) => v,
        None => h(z0)?,
    };
    if h0 == 0.0 {
        return Ok(z0);
    }
    let dir = h0.signum();
    let (mut a, mut step) = (z0, step0);
    for _ in 0..2000 {
        let b = a + dir * step;
        let hb = h(b)?;
        if !hb.is_finite() {
            return Err(domain("non-finite residual while bracketing"));
        }
        if hb == 0.0 {
            return Ok(b);
        }
        if hb.signum() != dir {
            let mut failure = None;
            let root = crate::numerics::brent(
                |z| match h(z) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                a,
                b,
                xtol,
            )?;
            return match failure {
                Some(e) => Err(e),
                None => Ok(root),
            };
        }
        a = b;
        step = (step * 1.6).min(max_step);
    }
    Err(domain("no sign change found along the relaxation direction"))
}

/// Indices where `y` changes by much more than its typical step.
pub fn detect_jumps(points: &[OperatingPoint]) -> Vec<usize> {
    if points.len() < 3 {
        return Vec::new();
    }
    let steps: Vec<f64> = points.windows(2).map(|w| (w[1].y_fractional - w[0].y_fractional).abs()).collect();
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    steps
        .iter()
        .enumerate()
        .filter(|&(i, &s)| {
            // Steep but continuous flanks have steps comparable to their neighbours
            let left = if i > 0 { steps[i - 1] } else { f64::INFINITY };
            let right = steps.get(i + 1).copied().unwrap_or(f64::INFINITY);
            s > 0.3 && s > 10.0 * median && s > 3.0 * left.min(right)
        })
        .map(|(i, _)| i + 1)
        .collect()
}

/// Largest pointwise `|y_up − y_down|` over a shared grid (the down sweep is
/// given in its own decreasing order).
pub fn hysteresis_gap(up: &SweepResult, down: &SweepResult) -> f64 {
    up.points
        .iter()
        .zip(down.points.iter().rev())
        .map(|(a, b)| (a.y_fractional - b.y_fractional).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::dbm_to_watts;
    use crate::presets::Preset;

    fn fig3() -> Model {
        Preset::Fig3.model(0.025)
    }

    #[test]
    fn alpha_limits() {
        let m = fig3();
        let o = SolverOptions::default();
        let f = m.f_r_t0().unwrap();
        let (q_min, q_max, _) = m.q_bounds(0.025, f).unwrap();
        let zero = m.alpha_fixed_point(0.0, 0.025, f, 0.0, &o).unwrap();
        assert_eq!(zero.alpha, 0.0);
        assert!((zero.q - q_min).abs() < 1e-9 * q_min);
        let big = m.alpha_fixed_point(0.0, 0.025, f, 1.0, &o).unwrap();
        assert!(big.alpha > 0.999 && (big.q - q_max).abs() < 1e-3 * q_max);
    }

    #[test]
    fn alpha_matches_bisection_scan() {
        let m = fig3();
        let o = SolverOptions::default();
        let f = m.f_r_t0().unwrap();
        let p = dbm_to_watts(-135.0);
        let sol = m.alpha_fixed_point(1e-7, 0.025, f, p, &o).unwrap();
        // independent residual h(α) = α − f(α) rebuilt from the definitions
        let (q_min, _, r) = m.q_bounds(0.025, f).unwrap();
        let q_e = m.resonator.q_e_at(f);
        let w = 2.0 * PI * f;
        let xi = 4.0 * q_min * q_min * p / (q_e * HBAR * w * w * m.tls.n_s);
        let th = polarization(m.resonator.f_r0, 0.025);
        let h = |a: f64| {
            let one: f64 = 1.0 - r * a;
            let chi = one * one / (one * one + (2.0 * q_min * 1e-7).powi(2));
            a - (1.0 - one / (one * one + chi * xi * th).sqrt())
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let n = 1000;
        for i in 0..n {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            if h(a) <= 0.0 && h(b) > 0.0 {
                lo = a;
                hi = b;
                break;
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if h(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((sol.alpha - lo).abs() < 1e-8, "{} vs {}", sol.alpha, lo);
    }

    #[test]
    fn discrete_tls_limits() {
        let d = DiscreteTlsParams { omega_tls_over_2pi: 546e6, g_over_2pi: 230e3 };
        let nc = d.n_c(520.81e6);
        assert!((nc / 3100.0 - 1.0).abs() < 0.05, "{nc}");
        let chi = d.chi0(0.025, 520.81e6);
        let far = discrete_tls_shift(1e6 * nc, 0.025, 520.81e6, &d).unwrap();
        assert!(far.abs() < 0.06 * chi.abs());
        let hot = discrete_tls_shift(0.0, 100.0, 520.81e6, &d).unwrap();
        assert!(hot.abs() < 1e-3 * chi.abs());
    }

    #[test]
    fn dcm_depth_round_trip() {
        let q_e = 1e7;
        let q = 2e5;
        let s = 1.0 - 2.0 * q / q_e;
        let (lo, hi) = dcm_q_from_depth(s, 0.0, q_e).unwrap();
        assert!((lo - q).abs() < 1e-6 * q);
        assert!(hi > q_e / 2.0);
        let phi: f64 = -0.18;
        let s_min = phi.sin().abs();
        assert!((20.0 * s_min.log10() + 15.0).abs() < 0.2);
        assert!(dcm_q_from_depth(0.5 * s_min, phi, q_e).is_err());
    }

    #[test]
    fn far_detuned_probe_is_linear() {
        let m = fig3();
        let o = SolverOptions::default();
        let f = m.f_r_t0().unwrap() + 50.0 * m.linewidth_t0().unwrap();
        let p = dbm_to_watts(-120.0);
        let op = m.solve_point(f, p, None, &o).unwrap();
        assert!(op.p_d < 1e-3 * p);
        assert!((op.s11.norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn energy_bookkeeping_at_fixed_point() {
        let m = fig3();
        let o = SolverOptions::default();
        let f = m.f_r_t0().unwrap();
        for dbm in [-150.0, -130.0, -110.0, -90.0] {
            let p = dbm_to_watts(dbm);
            let op = m.solve_point(f, p, None, &o).unwrap();
            let pd = (1.0 - op.s11.norm_sqr()) * p;
            assert!(((pd - op.p_d) / op.p_d).abs() < 1e-9, "{dbm}");
            let w = 2.0 * PI * op.f_r;
            let n = op.q_i * op.p_d / (HBAR * w * w);
            assert!(((n - op.nbar) / op.nbar).abs() < 1e-9);
            let (ra, rx, rt) = m.residuals(&op, &o).unwrap();
            assert!(ra <= o.eps_alpha && rx <= 10.0 * o.eps_x && rt <= 10.0 * o.eps_t, "{ra} {rx} {rt}");
        }
    }

    fn fig2_grid(m: &Model, span: f64, n: usize) -> Vec<f64> {
        let fr = m.f_r_t0().unwrap();
        let lw = m.linewidth_t0().unwrap();
        (0..=n).map(|i| fr - span * lw + 2.0 * span * lw * i as f64 / n as f64).collect()
    }

    #[test]
    fn low_power_sweeps_coincide() {
        let m = Preset::Fig2.model(0.05);
        let o = SolverOptions::default();
        let grid = fig2_grid(&m, 25.0, 200);
        let rev: Vec<f64> = grid.iter().rev().copied().collect();
        let p = dbm_to_watts(-150.0);
        let up = m.sweep_frequency(&grid, p, Direction::Up, false, &o).unwrap();
        let dn = m.sweep_frequency(&rev, p, Direction::Down, false, &o).unwrap();
        assert!(hysteresis_gap(&up, &dn) < 1e-8);
        assert!(up.jumps.is_empty() && dn.jumps.is_empty());
    }

    #[test]
    fn strong_drive_is_hysteretic() {
        let m = Preset::Fig2.model(0.05);
        let o = SolverOptions::default();
        let grid = fig2_grid(&m, 25.0, 200);
        let rev: Vec<f64> = grid.iter().rev().copied().collect();
        let p = dbm_to_watts(-109.0);
        let up = m.sweep_frequency(&grid, p, Direction::Up, false, &o).unwrap();
        let dn = m.sweep_frequency(&rev, p, Direction::Down, false, &o).unwrap();
        assert!(!up.jumps.is_empty() && !dn.jumps.is_empty());
        assert!(hysteresis_gap(&up, &dn) > 1.0);
    }

    #[test]
    fn sweep_rejects_start_near_resonance() {
        let m = Preset::Fig2.model(0.05);
        let o = SolverOptions::default();
        let grid = fig2_grid(&m, 5.0, 20);
        assert!(m.sweep_frequency(&grid, 1e-15, Direction::Up, false, &o).is_err());
        assert!(m.sweep_frequency(&grid, 1e-15, Direction::Up, true, &o).is_ok());
    }

    #[test]
    fn anderson_agrees_with_damped_mixing() {
        let m = fig3();
        let fast = SolverOptions::default();
        let slow = SolverOptions { mixing_only: true, mixing_beta: 0.5, ..SolverOptions::default() };
        let f = m.f_r_t0().unwrap() + 2.0 * m.linewidth_t0().unwrap();
        for dbm in [-140.0, -130.0, -120.0] {
            let p = dbm_to_watts(dbm);
            let a = m.solve_point(f, p, None, &fast).unwrap();
            let b = m.solve_point(f, p, None, &slow).unwrap();
            assert!((a.temperature / b.temperature - 1.0).abs() < 1e-7);
            assert!((a.y_fractional - b.y_fractional).abs() < 1e-7 * a.y_fractional.abs().max(1.0));
        }
    }

    #[test]
    fn heating_grows_with_power() {
        let m = fig3();
        let o = SolverOptions::default();
        let powers: Vec<f64> = (0..40).map(|i| dbm_to_watts(-150.0 + 3.0 * i as f64)).collect();
        let pts = m.sweep_resonant(&powers, &o).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].temperature >= w[0].temperature);
            assert!(w[1].nbar > w[0].nbar);
        }
    }
}
