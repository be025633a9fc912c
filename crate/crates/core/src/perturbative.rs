//! First-order closed forms: the reactive cubic for the realized detuning
//! and the mixed reactive/dissipative Duffing generalization.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::constants::{BOLTZMANN, HBAR, PLANCK};
use crate::error::{domain, invalid, Result};
use crate::steady_solver::Direction;
use crate::thermal::ThermalParams;
use crate::tls_response::{delta_fr, q_i_inv, tcf, ResonatorParams, TlsEnsembleParams};

/// Critical nonlinearity `4/(3√3)` at which bistability appears.
pub fn critical_nonlinearity() -> f64 {
    4.0 / (3.0 * 3f64.sqrt())
}

/// Roots of `4y³ − 4y₀y² + y − (y₀ + a) = 0`, i.e. `y = y₀ + a/(1 + 4y²)`.
///
/// Real roots come first, sorted ascending.
pub fn swenson_roots(y0: f64, a: f64) -> [Complex64; 3] {
    let coef = [4.0, -4.0 * y0, 1.0, -(y0 + a)];
    let mut roots = cubic_roots(coef[1] / coef[0], coef[2] / coef[0], coef[3] / coef[0]);
    for r in roots.iter_mut() {
        *r = polish(&coef, *r);
    }
    roots.sort_by(|p, q| {
        let (rp, rq) = (is_real(*p), is_real(*q));
        rq.cmp(&rp).then(p.re.total_cmp(&q.re))
    });
    roots
}

/// Scaled residual used to judge a root of the cubic.
pub fn swenson_residual(y0: f64, a: f64, y: Complex64) -> f64 {
    let p = ((Complex64::new(4.0, 0.0) * y - 4.0 * y0) * y + 1.0) * y - (y0 + a);
    p.norm() / 1f64.max(y0.abs().powi(3)).max(a.abs())
}

pub fn is_real(y: Complex64) -> bool {
    y.im.abs() <= 1e-10 * 1f64.max(y.re.abs())
}

/// Real roots of the cubic, ascending.
pub fn swenson_real_roots(y0: f64, a: f64) -> Vec<f64> {
    swenson_roots(y0, a).iter().filter(|r| is_real(**r)).map(|r| r.re).collect()
}

/// Monic cubic `y³ + b y² + c y + d`, trigonometric form when all roots
/// are real and Cardano otherwise.
pub(crate) fn cubic_roots(b: f64, c: f64, d: f64) -> [Complex64; 3] {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let r = |k: f64| Complex64::new(m * (theta - 2.0 * PI * k / 3.0).cos() - shift, 0.0);
        [r(0.0), r(1.0), r(2.0)]
    } else {
        let s = disc.sqrt();
        // Pick the larger-magnitude branch to avoid cancellation
        let sgn = if q >= 0.0 { 1.0 } else { -1.0 };
        let u = -(q / 2.0 + sgn * s);
        let big = u.cbrt();
        let small = if big == 0.0 { 0.0 } else { -p / (3.0 * big) };
        let real = big + small - shift;
        let re = -(big + small) / 2.0 - shift;
        let im = 3f64.sqrt() / 2.0 * (big - small);
        [Complex64::new(real, 0.0), Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn polish(coef: &[f64; 4], mut y: Complex64) -> Complex64 {
    for _ in 0..3 {
        let p = ((y * coef[0] + coef[1]) * y + coef[2]) * y + coef[3];
        let dp = (y * (3.0 * coef[0]) + 2.0 * coef[1]) * y + coef[2];
        if dp.norm() == 0.0 {
            break;
        }
        let next = y - p / dp;
        let pn = ((next * coef[0] + coef[1]) * next + coef[2]) * next + coef[3];
        if pn.norm() < p.norm() {
            y = next;
        } else {
            break;
        }
    }
    if y.im.abs() <= 1e-12 * 1f64.max(y.re.abs()) {
        y.im = 0.0;
    }
    y
}

/// Realized detuning along a sweep, followed by continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTrace {
    pub y: Vec<f64>,
    /// Indices `i` at which the trace jumped coming from `i − 1`.
    pub jumps: Vec<usize>,
}

/// Follows the stable real branch along a monotone grid of applied
/// detunings. An up sweep enters on the lowest root, a down sweep on the
/// highest.
pub fn swenson_branch(y0_grid: &[f64], a: f64, direction: Direction) -> Result<BranchTrace> {
    let ok = match direction {
        Direction::Up => y0_grid.windows(2).all(|w| w[1] > w[0]),
        Direction::Down => y0_grid.windows(2).all(|w| w[1] < w[0]),
        Direction::Fixed => y0_grid.len() <= 1,
    };
    if !ok {
        return Err(invalid("detuning grid does not match the sweep direction"));
    }
    if !a.is_finite() || y0_grid.iter().any(|v| !v.is_finite()) {
        return Err(domain("non-finite detuning or nonlinearity"));
    }
    let mut y: Vec<f64> = Vec::with_capacity(y0_grid.len());
    let mut jumps = Vec::new();
    let mut prev_roots: Vec<f64> = Vec::new();
    for (i, &y0) in y0_grid.iter().enumerate() {
        let roots = swenson_real_roots(y0, a);
        let pick = match y.last() {
            None => match direction {
                Direction::Down => *roots.last().unwrap(),
                _ => roots[0],
            },
            Some(&last) => {
                let nearest = *roots
                    .iter()
                    .min_by(|p, q| (*p - last).abs().total_cmp(&(*q - last).abs()))
                    .unwrap();
                if prev_roots.len() == 3 && roots.len() == 1 {
                    // The tracked branch vanished if the survivor belongs
                    // to the opposite outer branch
                    let other = if (last - prev_roots[0]).abs() < (last - prev_roots[2]).abs() {
                        prev_roots[2]
                    } else {
                        prev_roots[0]
                    };
                    if (nearest - other).abs() < (nearest - last).abs() {
                        jumps.push(i);
                    }
                }
                nearest
            }
        };
        y.push(pick);
        prev_roots = roots;
    }
    Ok(BranchTrace { y, jumps })
}

/// Exact applied detunings of the two folds, `(lower, upper)`, or `None`
/// below the critical nonlinearity. For `a < 0` the up sweep jumps at the
/// upper fold and the down sweep at the lower one; `a > 0` mirrors this.
pub fn swenson_folds(a: f64) -> Option<(f64, f64)> {
    if a.abs() <= critical_nonlinearity() {
        return None;
    }
    // Work with a < 0 and mirror at the end: folds solve (1+4y²)² + 8ay = 0
    let m = -a.abs();
    let g = |y: f64| (1.0 + 4.0 * y * y).powi(2) + 8.0 * m * y;
    let dg = |y: f64| 16.0 * y * (1.0 + 4.0 * y * y) + 8.0 * m;
    let hi = 1.0 + m.abs();
    let y_min = crate::numerics::brent(dg, 0.0, hi, 1e-15).ok()?;
    if g(y_min) >= 0.0 {
        return None;
    }
    let y1 = crate::numerics::brent(g, 0.0, y_min, 1e-15).ok()?;
    let y2 = crate::numerics::brent(g, y_min, hi, 1e-15).ok()?;
    let y0_of = |y: f64| y - m / (1.0 + 4.0 * y * y);
    let (lo, up) = (y0_of(y2), y0_of(y1));
    if a < 0.0 {
        Some((lo, up))
    } else {
        Some((-up, -lo))
    }
}

/// Large-`|a|` expansions of the jump positions for `a < 0`, each with the
/// first omitted term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpAsymptotics {
    pub up: f64,
    pub up_next_term: f64,
    pub down: f64,
    pub down_next_term: f64,
}

pub fn jump_asymptotics(a: f64) -> Result<JumpAsymptotics> {
    if !(a < 0.0) {
        return Err(domain(format!("expansion holds for a < 0, got {a}")));
    }
    let up = -a - 1.0 / (16.0 * a) - 1.0 / (256.0 * a.powi(3));
    let up_next_term = -3.0 / (4096.0 * a.powi(5));
    let c = (-a).cbrt();
    let down = 3.0 * c / 2f64.powf(4.0 / 3.0) - 1.0 / (2f64.powf(8.0 / 3.0) * c) + 1.0 / (48.0 * a);
    let u = 1.0 / c;
    let down_next_term = -7.0 * 2f64.powf(2.0 / 3.0) * u.powi(5) / 1728.0;
    Ok(JumpAsymptotics { up, up_next_term, down, down_next_term })
}

/// Nonlinearity `a(T₀) = −R_th·TCF·(4Q³/(Q_eQ_i))·P_s`.
pub fn swenson_a(q: f64, q_e: f64, q_i: f64, p_s: f64, r_th: f64, tcf: f64) -> Result<f64> {
    if !(q > 0.0 && q_e > 0.0 && q_i > 0.0) {
        return Err(domain("quality factors must be positive"));
    }
    Ok(-r_th * tcf * 4.0 * q.powi(3) / (q_e * q_i) * p_s)
}

/// Same nonlinearity parametrized by the depth `Q/Q_e`.
pub fn swenson_a_depth(depth: f64, q_e: f64, p_s: f64, r_th: f64, tcf: f64) -> Result<f64> {
    if !(depth > 0.0 && depth < 1.0) {
        return Err(domain(format!("depth must lie in (0, 1), got {depth}")));
    }
    Ok(-r_th * tcf * 4.0 * q_e * depth * depth * (1.0 - depth) * p_s)
}

/// Temperature rise `4α(1−α)/(1+4y²)·R_th·P_s` at depth `α`.
pub fn delta_t_from_y(y: f64, depth: f64, p_s: f64, r_th: f64) -> Result<f64> {
    check_depth(depth)?;
    Ok(4.0 * depth * (1.0 - depth) / (1.0 + 4.0 * y * y) * r_th * p_s)
}

pub fn s11_from_y(y: f64, depth: f64) -> Result<Complex64> {
    check_depth(depth)?;
    Ok(Complex64::new(1.0, 0.0) - 2.0 * depth / Complex64::new(1.0, 2.0 * y))
}

fn check_depth(depth: f64) -> Result<()> {
    if (0.0..=1.0).contains(&depth) {
        Ok(())
    } else {
        Err(domain(format!("depth must lie in [0, 1], got {depth}")))
    }
}

/// Temperature and phonon scales of the linearized mixed nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuffingScales {
    /// `1/TCF`, signed.
    pub t_r: f64,
    pub t_d0: f64,
    pub t_d1: f64,
    pub t_d: f64,
    pub t_star: f64,
    pub n_star: f64,
    /// Phase between reactive and dissipative response.
    pub phi_nl: f64,
    pub q_i0: f64,
    pub f_r: f64,
}

/// `ε³ sech²ε / tanh ε`.
pub fn td_shape(eps: f64) -> f64 {
    eps.powi(3) / (eps.cosh().powi(2) * eps.tanh())
}

pub fn duffing_scales(
    t0: f64,
    res: &ResonatorParams,
    tls: &TlsEnsembleParams,
    th: &ThermalParams,
) -> Result<DuffingScales> {
    if !(t0 > 0.0) {
        return Err(domain(format!("T0 must be positive, got {t0}")));
    }
    let th = ThermalParams { t0, ..*th };
    let f_r = res.f_r0 + delta_fr(t0, res, tls)?;
    let omega = 2.0 * PI * f_r;
    let eps = HBAR * omega / (2.0 * BOLTZMANN * t0);
    let r_th = th.r_th();
    let t_d0 = 16.0 * tls.n_s * r_th * (BOLTZMANN * t0).powi(2) / HBAR * eps * eps / eps.tanh();
    let t_d1 = 2.0 * t0 / (tls.fd0_diss * eps) * eps.cosh().powi(2);
    let t_d = 1.0 / (1.0 / t_d0 + 1.0 / t_d1);
    let t_r = 1.0 / tcf(t0, res, tls)?;
    let ratio = t_d / t_r;
    let t_star = t_d / (1.0 + ratio * ratio).sqrt();
    let phi_nl = ratio.atan() - PI / 2.0;
    let q_i0 = 1.0 / q_i_inv(t0, 0.0, res, tls)?;
    let n_star = q_i0 * t_star / (HBAR * omega * omega * r_th);
    Ok(DuffingScales { t_r, t_d0, t_d1, t_d, t_star, n_star, phi_nl, q_i0, f_r })
}

/// Factor by which mixed dissipation raises the bifurcation threshold.
pub fn bifurcation_factor(phi: f64) -> f64 {
    1.0 / (8.0 * (PI / 3.0 - phi).cos().powi(3))
}

/// Smallest reactive loss tangent allowing switching in the
/// high-temperature limit. Returns `(threshold, n_th)`.
pub fn switching_loss_tangent(t0: f64, f_r: f64, n_ch: f64, n_s: f64) -> (f64, f64) {
    let n_th = BOLTZMANN * t0 / (PLANCK * f_r);
    let bound = PI * PI / (8.0 * 3f64.sqrt()) * n_ch * n_th * n_th / n_s * (1.0 / (2.0 * n_th)).tanh();
    (bound, n_th)
}

/// Drive strength `a_* = 4Q³P_s/(ħω_r²Q_e n_*)`.
pub fn duffing_drive(q: f64, q_e: f64, p_s: f64, scales: &DuffingScales) -> f64 {
    let omega = 2.0 * PI * scales.f_r;
    4.0 * q.powi(3) * p_s / (HBAR * omega * omega * q_e * scales.n_star)
}

/// Solution of the generalized cubic at one applied detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct DuffingSolution {
    pub k0: f64,
    /// Real roots `k`, ascending.
    pub k: Vec<f64>,
    /// Reflection for each root.
    pub s11: Vec<Complex64>,
}

/// Solves `k = k₀ − a/(1+4k²)` with `a = a_*/Re(z)³`, `z = (1+2iy₀)e^{−iφ}`.
pub fn duffing_solve(y0: f64, a_star: f64, q: f64, q_e: f64, phi: f64) -> Result<DuffingSolution> {
    if !(phi.abs() <= PI / 2.0) {
        return Err(invalid(format!("phase {phi} outside [-pi/2, pi/2]")));
    }
    let rot = Complex64::from_polar(1.0, phi);
    let z = Complex64::new(1.0, 2.0 * y0) / rot;
    if !(z.re > 0.0) {
        return Err(domain("degenerate phase: Re z vanishes"));
    }
    let k0 = z.im / (2.0 * z.re);
    let a = a_star / z.re.powi(3);
    let k = swenson_real_roots(k0, -a);
    let s11 = k
        .iter()
        .map(|&kk| {
            let p = Complex64::new(1.0, 2.0 * kk) * z.re * rot;
            Complex64::new(1.0, 0.0) - 2.0 * q / (p * q_e)
        })
        .collect();
    Ok(DuffingSolution { k0, k, s11 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    #[test]
    fn linear_root() {
        let r = swenson_real_roots(0.7, 0.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn roots_match_sign_change_scan() {
        let (y0, a) = (0.0, -2.0);
        let f = |y: f64| y - y0 - a / (1.0 + 4.0 * y * y);
        let mut oracle = Vec::new();
        let n = 200_000;
        for i in 0..n {
            let (mut lo, mut hi) = (-5.0 + 10.0 * i as f64 / n as f64, -5.0 + 10.0 * (i + 1) as f64 / n as f64);
            if f(lo).signum() != f(hi).signum() {
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid).signum() == f(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                oracle.push(0.5 * (lo + hi));
            }
        }
        let roots = swenson_real_roots(y0, a);
        assert_eq!(roots.len(), oracle.len());
        for (r, o) in roots.iter().zip(&oracle) {
            assert!((r - o).abs() < 1e-10);
        }
    }

    #[test]
    fn branches_single_valued_below_threshold() {
        let grid: Vec<f64> = (0..601).map(|i| -3.0 + 0.01 * i as f64).collect();
        let rev: Vec<f64> = grid.iter().rev().copied().collect();
        let a = -0.5;
        let up = swenson_branch(&grid, a, Direction::Up).unwrap();
        let mut dn = swenson_branch(&rev, a, Direction::Down).unwrap();
        dn.y.reverse();
        assert!(up.jumps.is_empty() && dn.jumps.is_empty());
        for (u, d) in up.y.iter().zip(&dn.y) {
            assert!((u - d).abs() < 1e-12);
        }
    }

    #[test]
    fn up_sweep_crosses_zero_at_minus_a() {
        for a in [-0.5, -2.0, 0.6] {
            let roots = swenson_real_roots(-a, a);
            assert!(roots.iter().any(|r| r.abs() < 1e-12), "{a}");
        }
    }

    #[test]
    fn folds_bracket_branch_jumps() {
        let a = -2.0;
        let (lo, hi) = swenson_folds(a).unwrap();
        let grid: Vec<f64> = (0..=4000).map(|i| 0.0 + 4.0 * i as f64 / 4000.0).collect();
        let up = swenson_branch(&grid, a, Direction::Up).unwrap();
        assert_eq!(up.jumps.len(), 1);
        let j = up.jumps[0];
        assert!(grid[j - 1] <= hi && hi <= grid[j]);
        let rev: Vec<f64> = grid.iter().rev().copied().collect();
        let dn = swenson_branch(&rev, a, Direction::Down).unwrap();
        assert_eq!(dn.jumps.len(), 1);
        let j = dn.jumps[0];
        assert!(rev[j] <= lo && lo <= rev[j - 1]);
    }

    #[test]
    fn depth_form_matches_quality_form() {
        let (q_e, depth) = (1.2e7, 0.1);
        let q = depth * q_e;
        let q_i = 1.0 / (1.0 / q - 1.0 / q_e);
        let a1 = swenson_a(q, q_e, q_i, 1e-16, 1e9, 2e-4).unwrap();
        let a2 = swenson_a_depth(depth, q_e, 1e-16, 1e9, 2e-4).unwrap();
        assert!((a1 / a2 - 1.0).abs() < 1e-12);
        assert!(a1 < 0.0);
        assert_eq!(swenson_a(q, q_e, q_i, 0.0, 1e9, 2e-4).unwrap(), 0.0);
    }

    #[test]
    fn duffing_reduces_to_reactive_cubic() {
        assert!((bifurcation_factor(0.0) - 1.0).abs() < 1e-12);
        assert!(bifurcation_factor(-PI / 6.0 + 1e-6) > 1e10);
        let sol = duffing_solve(0.3, 0.5, 1e5, 1e6, 0.0).unwrap();
        assert!((sol.k0 - 0.3).abs() < 1e-14);
        let sw = swenson_real_roots(0.3, -0.5);
        assert_eq!(sol.k, sw);
        assert!(duffing_solve(0.3, 0.5, 1e5, 1e6, -2.0).is_err());
    }

    #[test]
    fn base_temperature_scales() {
        let m = Preset::Fig2.model(0.025);
        let s = duffing_scales(0.025, &m.resonator, &m.tls, &m.thermal).unwrap();
        let ratio = s.t_d / s.t_r;
        assert!(ratio > 1e-3 && ratio < 1e-1, "{ratio}");
        assert!(s.n_star > 0.9e8 && s.n_star < 3.6e8, "{}", s.n_star);
        assert!((s.t_star - s.t_d).abs() < 1e-2 * s.t_d);
    }

    #[test]
    fn shape_function_bound() {
        let max = (1..2000).map(|i| td_shape(i as f64 * 1e-3)).fold(0.0, f64::max);
        assert!(max <= 1.0 / 2f64.sqrt());
    }

    #[test]
    fn switching_threshold() {
        let (bound, n_th) = switching_loss_tangent(0.05, 520e6, 0.4, 100.0);
        assert!((n_th - 2.0).abs() < 0.01);
        assert!((bound / 2.8e-3 - 1.0).abs() < 0.02, "{bound}");
    }

    #[test]
    fn linearized_heating_limits() {
        assert!(delta_t_from_y(1e6, 0.5, 1e-15, 1e9).unwrap() < 1e-15);
        assert!((s11_from_y(1e9, 0.3).unwrap() - 1.0).norm() < 1e-9);
        let p = |d: f64| delta_t_from_y(0.0, d, 1.0, 1.0).unwrap();
        assert!(p(0.5) > p(0.49) && p(0.5) > p(0.51));
    }
}
