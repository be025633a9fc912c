//! Grid studies over probe power and a second parameter, bistability
//! classification and power-law exponents of a power sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::numerics::power_law_fit;
use crate::perturbative::{critical_nonlinearity, swenson_real_roots};
use crate::steady_solver::{hysteresis_gap, Direction, Model, OperatingPoint, SolverOptions};
use crate::thermal::n_h;
use crate::tls_response::q_i_inv;

/// Realized detuning at zero applied detuning when the nonlinearity is
/// exactly critical, i.e. the real root of `4y³ + y + a_c = 0`.
pub fn critical_realized_detuning() -> f64 {
    swenson_real_roots(0.0, -critical_nonlinearity())[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanAxis {
    /// Loss tangent, applied to both reactive and dissipative responses.
    LossTangent,
    /// External coupling `κ_e/2π` in Hz.
    KappaE,
}

impl ScanAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanAxis::LossTangent => "loss_tangent",
            ScanAxis::KappaE => "kappa_e_over_2pi",
        }
    }

    pub fn apply(self, base: &Model, value: f64) -> Model {
        let mut m = *base;
        match self {
            ScanAxis::LossTangent => m.tls = m.tls.with_loss_tangent(value),
            ScanAxis::KappaE => m.resonator.kappa_e_over_2pi = value,
        }
        m
    }
}

/// Steady states on a `param × P_s` grid with the probe at `f_r(T₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub axis: ScanAxis,
    pub ps_axis: Vec<f64>,
    pub param_axis: Vec<f64>,
    /// `cells[i][j]` for parameter `i` and power `j`; `None` if unsolved.
    pub cells: Vec<Vec<Option<OperatingPoint>>>,
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0])
}

/// Solves every cell independently from the bath state.
pub fn phase_scan(
    base: &Model,
    axis: ScanAxis,
    ps_axis: &[f64],
    param_axis: &[f64],
    opts: &SolverOptions,
) -> Result<PhaseGrid> {
    if !strictly_monotone(ps_axis) || !strictly_monotone(param_axis) {
        return Err(invalid("grid axes must be strictly monotone"));
    }
    for &v in param_axis {
        axis.apply(base, v).validate()?;
    }
    let ncol = ps_axis.len();
    let flat: Vec<Option<OperatingPoint>> = (0..param_axis.len() * ncol)
        .into_par_iter()
        .map(|k| {
            let m = axis.apply(base, param_axis[k / ncol]);
            let f = m.f_r_t0().ok()?;
            m.solve_point(f, ps_axis[k % ncol], None, opts).ok()
        })
        .collect();
    let cells = flat.chunks(ncol).map(|c| c.to_vec()).collect();
    Ok(PhaseGrid { axis, ps_axis: ps_axis.to_vec(), param_axis: param_axis.to_vec(), cells })
}

/// Fast-coupling study: same scan with `κ_e` as the second axis.
pub fn kappa_e_study(base: &Model, ps_axis: &[f64], kappa_e_axis: &[f64], opts: &SolverOptions) -> Result<PhaseGrid> {
    phase_scan(base, ScanAxis::KappaE, ps_axis, kappa_e_axis, opts)
}

/// Cells whose realized detuning reaches the critical value.
pub fn bistability_flags(grid: &PhaseGrid) -> Vec<Vec<bool>> {
    let yc = critical_realized_detuning().abs();
    grid.cells
        .iter()
        .map(|row| row.iter().map(|c| c.is_some_and(|p| p.y_fractional.abs() >= yc)).collect())
        .collect()
}

/// Lowest power per parameter row at which `|y|` reaches the threshold,
/// interpolated in `(log P_s, |y|)`. Rows that never cross are omitted.
pub fn bistability_contour(grid: &PhaseGrid) -> Vec<(f64, f64)> {
    let yc = critical_realized_detuning().abs();
    let mut out = Vec::new();
    for (i, row) in grid.cells.iter().enumerate() {
        for j in 1..row.len() {
            let (Some(a), Some(b)) = (row[j - 1], row[j]) else {
                continue;
            };
            let (ya, yb) = (a.y_fractional.abs(), b.y_fractional.abs());
            if ya < yc && yb >= yc {
                let w = (yc - ya) / (yb - ya);
                let (la, lb) = (grid.ps_axis[j - 1].ln(), grid.ps_axis[j].ln());
                out.push((grid.param_axis[i], (la + w * (lb - la)).exp()));
                break;
            }
        }
    }
    out
}

/// Direct test for hysteresis: up and down frequency sweeps around the
/// resonance, compared pointwise. `points` are spread over ±5 linewidths
/// of `f_r(T₀)`, where the folds sit near onset. Coarse lead-in and tail
/// segments carry the state in from 25 linewidths out and past wherever the
/// up sweep drags the resonance.
pub fn sweep_shows_hysteresis(m: &Model, p_s: f64, points: usize, opts: &SolverOptions) -> Result<bool> {
    if points < 2 {
        return Err(invalid("need at least two points in the dense window"));
    }
    let fr = m.f_r_t0()?;
    let lw = m.linewidth_t0()?;
    let at = |k: f64| fr + k * lw;
    let mut grid: Vec<f64> = (0..20).map(|i| at(-25.0 + i as f64)).collect();
    grid.extend((0..points).map(|i| at(-5.0 + 10.0 * i as f64 / (points - 1) as f64)));
    let mut reach: f64 = 5.0;
    loop {
        let mut up = grid.clone();
        let mut k: f64 = 6.0;
        while k <= reach.max(25.0) {
            up.push(at(k));
            k *= 1.05;
        }
        let su = m.sweep_frequency(&up, p_s, Direction::Up, false, opts)?;
        // The up sweep must end far above the resonance it dragged along
        let settled = su.points.last().is_some_and(|p| p.y_fractional > 20.0);
        if settled || reach > 1e6 {
            let down: Vec<f64> = up.iter().rev().copied().collect();
            let sd = m.sweep_frequency(&down, p_s, Direction::Down, false, opts)?;
            return Ok(hysteresis_gap(&su, &sd) > 1e-3);
        }
        reach = reach.max(25.0) * 2.0;
    }
}

/// Lowest power in `[p_lo, p_hi]` with hysteretic sweeps, by bisection in
/// `log P_s` down to a ratio of `ratio_tol`. `None` if `p_hi` is not
/// hysteretic; `Some(p_lo)` if `p_lo` already is.
pub fn hysteresis_onset(
    m: &Model,
    p_lo: f64,
    p_hi: f64,
    ratio_tol: f64,
    points: usize,
    opts: &SolverOptions,
) -> Result<Option<f64>> {
    if !(p_lo > 0.0 && p_hi > p_lo && ratio_tol > 1.0) {
        return Err(invalid("need 0 < p_lo < p_hi and ratio_tol > 1"));
    }
    if !sweep_shows_hysteresis(m, p_hi, points, opts)? {
        return Ok(None);
    }
    if sweep_shows_hysteresis(m, p_lo, points, opts)? {
        return Ok(Some(p_lo));
    }
    let (mut lo, mut hi) = (p_lo, p_hi);
    while hi / lo > ratio_tol {
        let mid = (lo * hi).sqrt();
        if sweep_shows_hysteresis(m, mid, points, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Cells adjacent to a flag change along the power axis, with the flag and
/// the direct-sweep verdict.
pub fn verify_boundary(
    base: &Model,
    grid: &PhaseGrid,
    points: usize,
    opts: &SolverOptions,
) -> Vec<(usize, usize, bool, Option<bool>)> {
    let flags = bistability_flags(grid);
    let mut cells = Vec::new();
    for (i, row) in flags.iter().enumerate() {
        for j in 0..row.len() {
            let edge = (j > 0 && row[j - 1] != row[j]) || (j + 1 < row.len() && row[j + 1] != row[j]);
            if edge {
                cells.push((i, j));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(i, j)| {
            let m = grid.axis.apply(base, grid.param_axis[i]);
            let verdict = sweep_shows_hysteresis(&m, grid.ps_axis[j], points, opts).ok();
            (i, j, flags[i][j], verdict)
        })
        .collect()
}

/// Occupation regimes of a power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Below both saturation and heating onsets.
    Linear,
    /// Resonant TLSs saturated, probe pushed off resonance by heating,
    /// temperature still close to the bath.
    Saturated,
    /// Saturated and heated well above the bath.
    HighPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    FrequencyShift,
    InternalLoss,
    PhononNumber,
    Temperature,
    ShiftOverLinewidth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub regime: Regime,
    pub quantity: Quantity,
    pub slope: f64,
    pub predicted: Option<f64>,
    pub points: usize,
}

/// Regime boundaries as multiples of the onset phonon numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeBounds {
    pub linear_margin: f64,
    pub saturated_margin: f64,
    /// Minimum `|y|` for the saturated regime: the occupation must be set by
    /// the detuning rather than the linewidth.
    pub detuned_min: f64,
    /// Maximum `(T − T₀)/T₀` for the saturated regime.
    pub saturated_heating_max: f64,
    /// Minimum `T/T₀` for the high-power asymptote.
    pub high_temperature_ratio: f64,
}

impl Default for RegimeBounds {
    fn default() -> Self {
        Self {
            linear_margin: 100.0,
            saturated_margin: 3.0,
            detuned_min: 2.0,
            saturated_heating_max: 0.25,
            high_temperature_ratio: 100.0,
        }
    }
}

/// Classifies each point of a fixed-frequency power sweep and fits
/// log-log slopes per regime. Increments from the bath state are fitted in
/// the linear and saturated regimes.
pub fn scaling_exponents(m: &Model, trace: &[OperatingPoint], bounds: &RegimeBounds) -> Result<Vec<ExponentFit>> {
    if trace.len() < 3 {
        return Err(invalid("need at least three sweep points"));
    }
    let t0 = m.thermal.t0;
    let f_r0 = m.f_r_t0()?;
    let q_i0 = trace[0].q_i;
    let n_s = m.tls.n_s;
    let nh = n_h(t0, q_i0, f_r0, &m.thermal);
    // Zero-power loss rate; the linear regime fits the increment from it
    let kappa_i0 = 2.0 * PI * f_r0 * q_i_inv(t0, 0.0, &m.resonator, &m.tls)?;
    let low = n_s.min(nh);
    let d = m.tls.d_exp;
    let g = m.thermal.gamma;
    let classify = |p: &OperatingPoint| {
        if p.nbar < low / bounds.linear_margin {
            Some(Regime::Linear)
        } else if p.nbar > bounds.saturated_margin * n_s
            && p.y_fractional.abs() > bounds.detuned_min
            && p.temperature - t0 < bounds.saturated_heating_max * t0
        {
            Some(Regime::Saturated)
        } else if p.temperature > bounds.high_temperature_ratio * t0 && p.nbar > 100.0 * n_s.max(nh) {
            Some(Regime::HighPower)
        } else {
            None
        }
    };
    let value = |p: &OperatingPoint, q: Quantity, regime: Regime| -> f64 {
        let increments = regime != Regime::HighPower;
        match q {
            Quantity::FrequencyShift => (p.f_r - f_r0).abs(),
            Quantity::InternalLoss if regime == Regime::Linear => (2.0 * PI * p.f_r / p.q_i - kappa_i0).abs(),
            Quantity::InternalLoss => 2.0 * PI * p.f_r / p.q_i,
            Quantity::PhononNumber => p.nbar,
            Quantity::Temperature => {
                if increments {
                    p.temperature - t0
                } else {
                    p.temperature
                }
            }
            Quantity::ShiftOverLinewidth => p.y_fractional.abs(),
        }
    };
    let quantities = [
        Quantity::FrequencyShift,
        Quantity::InternalLoss,
        Quantity::PhononNumber,
        Quantity::Temperature,
        Quantity::ShiftOverLinewidth,
    ];
    let mut out = Vec::new();
    for regime in [Regime::Linear, Regime::Saturated, Regime::HighPower] {
        let sel: Vec<&OperatingPoint> = trace.iter().filter(|p| classify(p) == Some(regime)).collect();
        if sel.len() < 3 {
            continue;
        }
        let x: Vec<f64> = sel.iter().map(|p| p.p_s).collect();
        let mut eta = None;
        for q in quantities {
            let y: Vec<f64> = sel.iter().map(|p| value(p, q, regime)).collect();
            if y.iter().any(|v| !(*v > 0.0)) {
                continue;
            }
            let slope = power_law_fit(&x, &y).0;
            if q == Quantity::FrequencyShift {
                eta = Some(slope);
            }
            let s = 1.0 + d + g;
            let predicted = match (regime, q) {
                (Regime::Linear, _) => Some(1.0),
                (Regime::Saturated, Quantity::InternalLoss) => eta.map(|e| -m.tls.beta * (0.5 - e)),
                (Regime::Saturated, Quantity::PhononNumber) => eta.map(|e| 1.0 - 2.0 * e),
                (Regime::HighPower, Quantity::Temperature) => Some(1.0 / s),
                (Regime::HighPower, Quantity::PhononNumber) => Some((1.0 - d + g) / s),
                (Regime::HighPower, Quantity::InternalLoss) => Some(d / s),
                (Regime::HighPower, Quantity::FrequencyShift) => Some(0.0),
                _ => None,
            };
            out.push(ExponentFit { regime, quantity: q, slope, predicted, points: sel.len() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{dbm_to_watts, watts_to_dbm};
    use crate::numerics::logspace;
    use crate::presets::Preset;

    #[test]
    fn critical_detuning_value() {
        let yc = critical_realized_detuning();
        assert!((yc + 0.436692).abs() < 1e-6);
        let ac = critical_nonlinearity();
        assert!((4.0 * yc.powi(3) + yc + ac).abs() < 1e-14);
    }

    #[test]
    fn no_tls_column_is_flat() {
        let base = Preset::PhaseStudy.model(0.025);
        let ps = logspace(1e-20, 1e-16, 5);
        let grid = phase_scan(&base, ScanAxis::LossTangent, &ps, &[0.0, 1e-7], &SolverOptions::default()).unwrap();
        for c in grid.cells[0].iter().flatten() {
            // A loss-free resonator still heats, so compare at the solved temperature.
            let q_ref = 1.0 / crate::tls_response::q_rel_inv(c.temperature, &base.tls).unwrap();
            assert!((c.q_i / q_ref - 1.0).abs() < 1e-9, "{} {}", c.q_i, q_ref);
            assert!(c.y_fractional.abs() < 1e-3);
        }
        assert!(bistability_contour(&grid).is_empty());
    }

    #[test]
    fn scan_is_path_independent() {
        let base = Preset::PhaseStudy.model(0.025);
        let ps: Vec<f64> = (0..12).map(|i| dbm_to_watts(-150.0 + 3.0 * i as f64)).collect();
        let o = SolverOptions::default();
        let grid = phase_scan(&base, ScanAxis::LossTangent, &ps, &[1e-5], &o).unwrap();
        let m = ScanAxis::LossTangent.apply(&base, 1e-5);
        let f = m.f_r_t0().unwrap();
        let rev: Vec<f64> = ps.iter().rev().copied().collect();
        let down = m.sweep_power(f, &rev, &o).unwrap();
        for (c, d) in grid.cells[0].iter().zip(down.iter().rev()) {
            let c = c.unwrap();
            assert!((c.temperature / d.temperature - 1.0).abs() < 1e-6);
            assert!((c.nbar / d.nbar - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn saturated_regime_identity() {
        let m = ScanAxis::LossTangent.apply(&Preset::PhaseStudy.model(0.025), 1e-5);
        let f = m.f_r_t0().unwrap();
        let ps: Vec<f64> = (0..=100).map(|i| dbm_to_watts(-190.0 + i as f64)).collect();
        let trace = m.sweep_power(f, &ps, &SolverOptions::default()).unwrap();
        let fits = scaling_exponents(&m, &trace, &RegimeBounds::default()).unwrap();
        for q in [Quantity::InternalLoss, Quantity::PhononNumber] {
            let fit = fits
                .iter()
                .find(|f| f.regime == Regime::Saturated && f.quantity == q)
                .expect("saturated regime present");
            assert!(fit.points >= 5);
            assert!((fit.slope - fit.predicted.unwrap()).abs() < 0.05, "{fit:?}");
        }
    }

    #[test]
    fn direct_verdict_matches_root_count() {
        let m = ScanAxis::LossTangent.apply(&Preset::PhaseStudy.model(0.025), 1e-5);
        let o = SolverOptions::default();
        let fr = m.f_r_t0().unwrap();
        let lw = m.linewidth_t0().unwrap();
        for (dbm, expect) in [(-133.0, false), (-125.0, true)] {
            let p = dbm_to_watts(dbm);
            let multiple = (0..200).any(|k| {
                let f = fr + lw * (-5.0 + 10.0 * k as f64 / 199.0);
                m.steady_state_temperatures(f, p, 0.04, 1500, &o).unwrap().len() > 1
            });
            assert_eq!(multiple, expect, "{dbm}");
            assert_eq!(sweep_shows_hysteresis(&m, p, 401, &o).unwrap(), expect, "{dbm}");
        }
    }

    #[test]
    fn proxy_boundary_near_direct_onset() {
        let m = ScanAxis::LossTangent.apply(&Preset::PhaseStudy.model(0.025), 1e-5);
        let o = SolverOptions::default();
        let ps: Vec<f64> = (0..=60).map(|i| dbm_to_watts(-150.0 + 0.5 * i as f64)).collect();
        let grid = phase_scan(&m, ScanAxis::LossTangent, &ps, &[1e-5], &o).unwrap();
        let proxy = watts_to_dbm(bistability_contour(&grid)[0].1);
        let direct = hysteresis_onset(&m, ps[0], dbm_to_watts(-110.0), 10f64.powf(0.01), 401, &o).unwrap();
        let direct = watts_to_dbm(direct.unwrap());
        // The threshold proxy is first-order: it fires a few dB early here.
        assert!((2.0..5.0).contains(&(direct - proxy)), "{proxy} {direct}");
    }
}
