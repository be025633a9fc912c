//! Heat flow out of the resonator: power-law conductance, lumped three-node
//! model and the ballistic Landauer conductance of rectangular tethers.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{BOLTZMANN, HBAR, PLANCK};
use crate::error::{domain, invalid, Result};
use crate::numerics::integrate;

/// Default thermal time constant used when no heat capacity is given, s.
pub const DEFAULT_TAU_TH: f64 = 100e-6;

/// Power-law link to the bath: `G_th(T) = N_ch g0(T0) (T/T0)^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalParams {
    /// Bath temperature, K.
    pub t0: f64,
    /// Conductance in units of the thermal conductance quantum at `t0`.
    pub n_ch: f64,
    /// Temperature exponent of the conductance.
    pub gamma: f64,
    /// Heat capacity, J/K. Only the dynamics use it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_th: Option<f64>,
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(invalid(format!("t0 must be positive, got {}", self.t0)));
        }
        if !(self.n_ch > 0.0) {
            return Err(invalid(format!("n_ch must be positive, got {}", self.n_ch)));
        }
        if !(self.gamma > -1.0) {
            return Err(invalid(format!("gamma must exceed -1, got {}", self.gamma)));
        }
        if let Some(c) = self.c_th {
            if !(c > 0.0) {
                return Err(invalid(format!("c_th must be positive, got {c}")));
            }
        }
        Ok(())
    }

    /// Conductance at the bath temperature, W/K.
    pub fn g_th0(&self) -> f64 {
        self.n_ch * g_quantum(self.t0)
    }

    /// Conductance at temperature `t`, W/K.
    pub fn g_th(&self, t: f64) -> f64 {
        self.g_th0() * (t / self.t0).powf(self.gamma)
    }

    /// Small-signal thermal resistance at the bath temperature, K/W.
    pub fn r_th(&self) -> f64 {
        1.0 / self.g_th0()
    }

    /// Heat capacity, falling back to a 100 µs thermal time constant.
    pub fn heat_capacity(&self) -> f64 {
        self.c_th.unwrap_or(DEFAULT_TAU_TH * self.g_th0())
    }
}

/// Thermal conductance quantum `π² k_B² T / 3h`, W/K.
pub fn g_quantum(t: f64) -> f64 {
    PI * PI * BOLTZMANN * BOLTZMANN * t / (3.0 * PLANCK)
}

/// Steady temperature reached when `p_d` watts flow through the link.
pub fn t_of_pd(p_d: f64, th: &ThermalParams) -> Result<f64> {
    if !(p_d >= 0.0) {
        return Err(domain(format!("dissipated power must be non-negative, got {p_d}")));
    }
    let g1 = th.gamma + 1.0;
    let u = g1 * p_d / (th.t0 * th.g_th0());
    // ln1p keeps T - T0 accurate at tiny power
    Ok(th.t0 * (u.ln_1p() / g1).exp())
}

/// Heat current `∫_{T0}^{T} G_th dT` carried at temperature `t`.
pub fn pd_of_t(t: f64, th: &ThermalParams) -> f64 {
    let g1 = th.gamma + 1.0;
    let r = t / th.t0;
    th.t0 * th.g_th0() / g1 * (g1 * r.ln()).exp_m1()
}

/// Phonon number at which readout heating sets in.
pub fn n_h(t0: f64, q_i: f64, f_r: f64, th: &ThermalParams) -> f64 {
    let n_th = BOLTZMANN * t0 / (PLANCK * f_r);
    PI * th.n_ch * q_i * n_th * n_th / (6.0 * (th.gamma + 1.0))
}

/// TLS node coupled to a phonon node coupled to the bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeNodeParams {
    pub c_t: f64,
    pub c_p: f64,
    pub r_tp: f64,
    pub r_pb: f64,
    pub t0: f64,
}

impl ThreeNodeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_t", self.c_t),
            ("c_p", self.c_p),
            ("r_tp", self.r_tp),
            ("r_pb", self.r_pb),
            ("t0", self.t0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn tau_tp(&self) -> f64 {
        self.r_tp * self.c_t
    }

    pub fn tau_pt(&self) -> f64 {
        self.r_tp * self.c_p
    }

    pub fn tau_pb(&self) -> f64 {
        self.r_pb * self.c_p
    }

    /// Joint relaxation time once the two nodes have equilibrated.
    pub fn tau_h(&self) -> f64 {
        (self.c_t + self.c_p) * self.r_pb
    }

    fn rates(&self, p_d: f64, tt: f64, tp: f64) -> (f64, f64) {
        let q_tp = (tt - tp) / self.r_tp;
        let q_pb = (tp - self.t0) / self.r_pb;
        ((p_d - q_tp) / self.c_t, (q_tp - q_pb) / self.c_p)
    }

    /// Fixed point `(T_t, T_p)` under constant dissipation.
    pub fn steady_state(&self, p_d: f64) -> (f64, f64) {
        ((self.r_tp + self.r_pb) * p_d + self.t0, self.r_pb * p_d + self.t0)
    }
}

/// One sample of a three-node trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeNodeSample {
    pub time: f64,
    pub t_tls: f64,
    pub t_phonon: f64,
}

/// Classical RK4 integration of the three-node heat balance.
///
/// `initial` is `(T_t, T_p)` at `t = 0`; one sample is returned per step
/// including the initial state.
pub fn three_node_evolve(
    tn: &ThreeNodeParams,
    p_d: f64,
    initial: (f64, f64),
    t_span: f64,
    dt: f64,
) -> Result<Vec<ThreeNodeSample>> {
    tn.validate()?;
    let tau_min = tn.tau_tp().min(tn.tau_pt()).min(tn.tau_pb());
    if !(dt > 0.0 && dt < tau_min / 10.0) {
        return Err(domain(format!("dt = {dt} must be below min(tau)/10 = {}", tau_min / 10.0)));
    }
    let steps = (t_span / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut a, mut b) = initial;
    out.push(ThreeNodeSample { time: 0.0, t_tls: a, t_phonon: b });
    for i in 0..steps {
        let (k1a, k1b) = tn.rates(p_d, a, b);
        let (k2a, k2b) = tn.rates(p_d, a + 0.5 * dt * k1a, b + 0.5 * dt * k1b);
        let (k3a, k3b) = tn.rates(p_d, a + 0.5 * dt * k2a, b + 0.5 * dt * k2b);
        let (k4a, k4b) = tn.rates(p_d, a + dt * k3a, b + dt * k3b);
        a += dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        b += dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        out.push(ThreeNodeSample { time: (i + 1) as f64 * dt, t_tls: a, t_phonon: b });
    }
    Ok(out)
}

/// How the bandgap width enters the transmissivity window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapWindow {
    /// Blocked where `|f − f_b| < Δf_b`.
    #[default]
    HalfWidth,
    /// Blocked where `|f − f_b| < Δf_b / 2`, i.e. `Δf_b` is the full width.
    FullWidth,
}

/// Rectangular tether with an optional hard phononic bandgap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamGeometry {
    pub width_w: f64,
    pub thickness_t: f64,
    pub speed_c: f64,
    #[serde(default)]
    pub bandgap_center_fb: Option<f64>,
    #[serde(default)]
    pub bandgap_width_dfb: Option<f64>,
    #[serde(default = "one")]
    pub n_beams: f64,
    #[serde(default)]
    pub gap_window: GapWindow,
}

fn one() -> f64 {
    1.0
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.thickness_t > 0.0 && self.width_w >= self.thickness_t) {
            return Err(invalid("beam needs w >= t > 0"));
        }
        if !(self.speed_c > 0.0) {
            return Err(invalid("sound speed must be positive"));
        }
        if !(self.n_beams > 0.0) {
            return Err(invalid("n_beams must be positive"));
        }
        if let (Some(fb), Some(dfb)) = (self.bandgap_center_fb, self.bandgap_width_dfb) {
            if !(fb > 0.0 && dfb > 0.0 && dfb < 2.0 * fb) {
                return Err(invalid("bandgap needs 0 < width < 2 * center"));
            }
        }
        Ok(())
    }

    /// Blocked frequency interval, Hz.
    pub fn gap(&self) -> Option<(f64, f64)> {
        let (fb, dfb) = (self.bandgap_center_fb?, self.bandgap_width_dfb?);
        let half = match self.gap_window {
            GapWindow::HalfWidth => dfb,
            GapWindow::FullWidth => 0.5 * dfb,
        };
        Some(((fb - half).max(0.0), fb + half))
    }

    /// Band cutoff frequency `(c/2) sqrt((l/w)² + (m/t)²)`, Hz.
    pub fn cutoff(&self, l: usize, m: usize) -> f64 {
        0.5 * self.speed_c * ((l as f64 / self.width_w).powi(2) + (m as f64 / self.thickness_t).powi(2)).sqrt()
    }

    /// Smallest index bound whose edge bands lie above `x_max k_B T / h`.
    pub fn required_lm_max(&self, t: f64, x_max: f64) -> usize {
        let f_top = x_max * BOLTZMANN * t / PLANCK;
        let l = (2.0 * f_top * self.width_w / self.speed_c).floor() as usize + 1;
        let m = (2.0 * f_top * self.thickness_t / self.speed_c).floor() as usize + 1;
        l.max(m)
    }
}

/// Landauer conductance and the share carried by the outermost bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauerResult {
    pub g_th: f64,
    pub edge_fraction: f64,
    pub truncated: bool,
}

fn phonon_kernel(x: f64) -> f64 {
    if x < 1e-6 {
        return 1.0 - x * x / 12.0;
    }
    let em = (-x).exp();
    x * x * em / ((1.0 - em) * (1.0 - em))
}

/// Ballistic conductance of the tethers at temperature `t`, W/K.
///
/// The band sum is regrouped as `∫ N(x) 𝒯(x) K(x) dx` where `N` counts open
/// bands; the integral is split at every band edge and bandgap edge so each
/// piece has a smooth integrand.
pub fn landauer_conductance(g: &BeamGeometry, t: f64, x_max: f64, lm_max: usize) -> Result<LandauerResult> {
    g.validate()?;
    if !(t > 0.0) {
        return Err(domain(format!("temperature must be positive, got {t}")));
    }
    if !(x_max >= 10.0) {
        return Err(domain(format!("x_max must be at least 10, got {x_max}")));
    }
    let to_x = PLANCK / (BOLTZMANN * t);
    let mut edges: Vec<(f64, bool)> = Vec::new();
    for l in 0..=lm_max {
        for m in 0..=lm_max {
            let x = g.cutoff(l, m) * to_x;
            if x < x_max {
                edges.push((x, l == lm_max || m == lm_max));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let gap = g.gap().map(|(lo, hi)| (lo * to_x, hi * to_x));

    let mut breaks: Vec<f64> = edges.iter().map(|e| e.0).collect();
    if let Some((lo, hi)) = gap {
        breaks.extend([lo, hi].into_iter().filter(|&v| v < x_max));
    }
    breaks.push(x_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut total = 0.0;
    let mut edge_part = 0.0;
    let mut open = 0usize;
    let mut open_edge = 0usize;
    let mut next = 0usize;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        while next < edges.len() && edges[next].0 <= a {
            open += 1;
            if edges[next].1 {
                open_edge += 1;
            }
            next += 1;
        }
        if b <= a || open == 0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        if let Some((lo, hi)) = gap {
            if mid > lo && mid < hi {
                continue;
            }
        }
        let piece = integrate(phonon_kernel, a, b, 1e-10, 0.0);
        total += open as f64 * piece;
        edge_part += open_edge as f64 * piece;
    }
    let scale = BOLTZMANN * BOLTZMANN * t / PLANCK * g.n_beams;
    let edge_fraction = if total > 0.0 { edge_part / total } else { 0.0 };
    Ok(LandauerResult { g_th: scale * total, edge_fraction, truncated: edge_fraction > 1e-6 })
}

/// Conductance with the index bound chosen automatically.
pub fn landauer_auto(g: &BeamGeometry, t: f64, x_max: f64) -> Result<f64> {
    let lm = g.required_lm_max(t, x_max);
    Ok(landauer_conductance(g, t, x_max, lm)?.g_th)
}

/// Logarithmic slope `d ln G_th / d ln T` by central differences.
pub fn gamma_exponent(g: &BeamGeometry, t: f64, x_max: f64) -> Result<f64> {
    let h = 1e-3;
    let up = landauer_auto(g, t * (1.0 + h), x_max)?;
    let dn = landauer_auto(g, t * (1.0 - h), x_max)?;
    Ok((up / dn).ln() / ((1.0 + h) / (1.0 - h)).ln())
}

/// Temperature above which the tether stops acting as a 1D waveguide.
pub fn t_1d(speed_c: f64, width_w: f64) -> f64 {
    PI * HBAR * speed_c / (BOLTZMANN * width_w)
}
