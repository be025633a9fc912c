//! Subcommand arguments and their execution.
//!
//! Every argument is optional so that a config-file section and the
//! command line can be overlaid; defaults are filled in at run time.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use super::output::{Cell, Metadata, Table};
use super::units::{Duration, Frequency, Length, Plain, Power, Range, Temperature};
use super::CliError;
use crate::constants::{dbm_to_watts, watts_to_dbm};
use crate::dynamics::{ring_up_down, swept_response_dynamic, IfFilter};
use crate::holeburning::{holeburn_selfconsistent, HoleburnParams};
use crate::numerics::{power_law_fit, StepControl};
use crate::perturbative::{
    critical_nonlinearity, duffing_drive, duffing_scales, duffing_solve, swenson_branch, swenson_folds,
    switching_loss_tangent,
};
use crate::phase_diagram::{
    bistability_contour, bistability_flags, phase_scan, scaling_exponents, verify_boundary, RegimeBounds, ScanAxis,
};
use crate::steady_solver::{Direction, Model, OperatingPoint, SolverOptions, SweepResult};
use crate::thermal::{gamma_exponent, landauer_conductance, t_1d, BeamGeometry, GapWindow};

/// Result of a subcommand, ready for rendering.
pub struct Outcome {
    pub tables: Vec<Table>,
    pub meta: Metadata,
    pub summary: String,
}

/// Resolved model and solver settings shared by the model commands.
pub struct Ctx {
    pub model: Model,
    pub opts: SolverOptions,
}

macro_rules! overlay {
    ($ty:ident { $($f:ident),* $(,)? }) => {
        impl $ty {
            /// Replaces fields with those set in `over`.
            pub fn overlay(&mut self, over: &Self) {
                $( if over.$f.is_some() { self.$f = over.$f.clone(); } )*
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    Up,
    Down,
    Both,
}

impl SweepDirection {
    fn directions(self) -> Vec<Direction> {
        match self {
            SweepDirection::Up => vec![Direction::Up],
            SweepDirection::Down => vec![Direction::Down],
            SweepDirection::Both => vec![Direction::Up, Direction::Down],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AxisArg {
    LossTangent,
    KappaE,
}

fn run_err(e: crate::Error) -> CliError {
    CliError::from(e)
}

fn ask<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required value `{name}`")))
}

fn power_axis(r: &Range<Power>) -> Vec<f64> {
    r.points_by(|p| watts_to_dbm(p.0), dbm_to_watts)
}

fn log_axis(r: &Range<Plain>) -> Result<Vec<f64>, CliError> {
    if !(r.start.0 > 0.0 && r.stop.0 > 0.0) {
        return Err(CliError::Config("log-spaced ranges need positive endpoints".into()));
    }
    Ok(r.points_by(|q| q.0.ln(), f64::exp))
}

/// Probe grid: an explicit `[f_start, f_stop]` or `f_r(T₀) ± span` linewidths.
fn frequency_grid(
    m: &Model,
    f_start: Option<Frequency>,
    f_stop: Option<Frequency>,
    span: f64,
    points: usize,
) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Config("need at least two frequency points".into()));
    }
    let (a, b) = match (f_start, f_stop) {
        (Some(a), Some(b)) => (a.0, b.0),
        (None, None) => {
            let fr = m.f_r_t0().map_err(run_err)?;
            let lw = m.linewidth_t0().map_err(run_err)?;
            (fr - span * lw, fr + span * lw)
        }
        _ => return Err(CliError::Config("give both f_start and f_stop, or neither".into())),
    };
    if !(b > a) {
        return Err(CliError::Config("f_stop must exceed f_start".into()));
    }
    Ok((0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect())
}

const SWEEP_COLUMNS: [&str; 10] = ["f_Hz", "direction", "re_s11", "im_s11", "T_K", "nbar", "Qi", "fr_Hz", "y", "converged"];

fn sweep_row(p: &OperatingPoint, dir: Direction) -> Vec<Cell> {
    vec![
        p.f_probe.into(),
        dir.as_str().into(),
        p.s11.re.into(),
        p.s11.im.into(),
        p.temperature.into(),
        p.nbar.into(),
        p.q_i.into(),
        p.f_r.into(),
        p.y_fractional.into(),
        p.converged.into(),
    ]
}

fn describe_jumps(runs: &[SweepResult]) -> String {
    runs.iter()
        .map(|r| {
            let at: Vec<String> =
                r.jumps.iter().map(|&i| format!("{:.3}", r.points[i].f_probe)).collect();
            format!("{} jumps [{}]", r.direction.as_str(), at.join(" "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn sweep_table(runs: &[SweepResult]) -> Table {
    let mut t = Table::new("sweep", &SWEEP_COLUMNS);
    for r in runs {
        for p in &r.points {
            t.push(sweep_row(p, r.direction));
        }
    }
    t
}

fn jump_meta(runs: &[SweepResult]) -> Metadata {
    runs.iter()
        .map(|r| {
            let idx: Vec<String> = r.jumps.iter().map(|i| i.to_string()).collect();
            (format!("jumps.{}", r.direction.as_str()), format!("[{}]", idx.join(",")))
        })
        .collect()
}

// ---------------------------------------------------------------- sweep-s11

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SweepS11Args {
    /// Probe power (dBm unless a unit is given).
    #[arg(long, allow_hyphen_values = true)]
    pub ps: Option<Power>,
    #[arg(long, value_enum)]
    pub direction: Option<SweepDirection>,
    #[arg(long)]
    pub f_start: Option<Frequency>,
    #[arg(long)]
    pub f_stop: Option<Frequency>,
    /// Half-span in low-power linewidths around f_r(T0), used without an explicit range.
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Allow the first point within 20 linewidths of resonance.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lead_in: Option<bool>,
}
overlay!(SweepS11Args { ps, direction, f_start, f_stop, span, points, lead_in });

impl SweepS11Args {
    pub fn fill(&mut self) {
        self.ps.get_or_insert(Power(dbm_to_watts(-130.0)));
        self.direction.get_or_insert(SweepDirection::Both);
        self.span.get_or_insert(25.0);
        self.points.get_or_insert(401);
        self.lead_in.get_or_insert(false);
    }

    pub fn run(&self, ctx: &Ctx) -> Result<Outcome, CliError> {
        let m = &ctx.model;
        let grid = frequency_grid(m, self.f_start, self.f_stop, ask(self.span, "span")?, ask(self.points, "points")?)?;
        let p_s = ask(self.ps, "ps")?.0;
        let mut runs = Vec::new();
        for dir in ask(self.direction, "direction")?.directions() {
            let g: Vec<f64> = if dir == Direction::Down { grid.iter().rev().copied().collect() } else { grid.clone() };
            runs.push(m.sweep_frequency(&g, p_s, dir, self.lead_in.unwrap_or(false), &ctx.opts).map_err(run_err)?);
        }
        let summary = format!("sweep-s11: {} points at {:.2} dBm; {}", grid.len(), watts_to_dbm(p_s), describe_jumps(&runs));
        let mut meta = jump_meta(&runs);
        meta.push(("f_r_t0_Hz".into(), format!("{:?}", m.f_r_t0().map_err(run_err)?)));
        Ok(Outcome { tables: vec![sweep_table(&runs)], meta, summary })
    }
}

// -------------------------------------------------------------- power-sweep

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct PowerSweepArgs {
    /// Fixed probe frequency; defaults to f_r(T0).
    #[arg(long)]
    pub f: Option<Frequency>,
    /// Powers as start:stop:count, evenly spaced in dBm.
    #[arg(long, allow_hyphen_values = true)]
    pub ps_range: Option<Range<Power>>,
    /// Keep the probe on the shifted resonance instead of a fixed frequency.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub resonant: Option<bool>,
    /// Also emit per-regime power-law exponents.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exponents: Option<bool>,
}
overlay!(PowerSweepArgs { f, ps_range, resonant, exponents });

impl PowerSweepArgs {
    pub fn fill(&mut self) {
        self.ps_range.get_or_insert_with(|| "-200:40:241".parse().expect("valid default"));
        self.resonant.get_or_insert(false);
        self.exponents.get_or_insert(false);
    }

    pub fn run(&self, ctx: &Ctx) -> Result<Outcome, CliError> {
        let m = &ctx.model;
        let powers = power_axis(&ask(self.ps_range, "ps_range")?);
        let resonant = self.resonant.unwrap_or(false);
        let trace = if resonant {
            m.sweep_resonant(&powers, &ctx.opts)
        } else {
            let f = match self.f {
                Some(f) => f.0,
                None => m.f_r_t0().map_err(run_err)?,
            };
            m.sweep_power(f, &powers, &ctx.opts)
        }
        .map_err(run_err)?;
        let mut t = Table::new(
            "sweep",
            &["ps_dBm", "ps_W", "f_Hz", "T_K", "nbar", "Qi", "fr_Hz", "y", "re_s11", "im_s11", "kappa_i_over_2pi_Hz", "converged"],
        );
        for p in &trace {
            t.push(vec![
                watts_to_dbm(p.p_s).into(),
                p.p_s.into(),
                p.f_probe.into(),
                p.temperature.into(),
                p.nbar.into(),
                p.q_i.into(),
                p.f_r.into(),
                p.y_fractional.into(),
                p.s11.re.into(),
                p.s11.im.into(),
                (p.f_r / p.q_i).into(),
                p.converged.into(),
            ]);
        }
        let mut tables = vec![t];
        let mut summary = format!("power-sweep: {} points, mode {}", trace.len(), if resonant { "resonant" } else { "fixed" });
        if self.exponents.unwrap_or(false) {
            let fits = scaling_exponents(m, &trace, &RegimeBounds::default()).map_err(run_err)?;
            let mut e = Table::new("exponents", &["regime", "quantity", "slope", "predicted", "points"]);
            for f in &fits {
                e.push(vec![
                    format!("{:?}", f.regime).to_lowercase().into(),
                    format!("{:?}", f.quantity).to_lowercase().into(),
                    f.slope.into(),
                    f.predicted.into(),
                    f.points.into(),
                ]);
            }
            summary.push_str(&format!(", {} exponent fits", fits.len()));
            tables.push(e);
        }
        Ok(Outcome { tables, meta: vec![], summary })
    }
}

// ---------------------------------------------------------------- ringdown

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RingdownArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub ps: Option<Power>,
    /// Probe frequency; defaults to f_r(T0).
    #[arg(long)]
    pub f: Option<Frequency>,
    #[arg(long)]
    pub t_on: Option<Duration>,
    #[arg(long)]
    pub t_off: Option<Duration>,
    /// Samples per phase.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
}
overlay!(RingdownArgs { ps, f, t_on, t_off, samples, rtol });

impl RingdownArgs {
    pub fn fill(&mut self) {
        self.ps.get_or_insert(Power(dbm_to_watts(-120.0)));
        self.t_on.get_or_insert(Duration(10e-3));
        self.t_off.get_or_insert(Duration(10e-3));
        self.samples.get_or_insert(201);
        self.rtol.get_or_insert(StepControl::default().rtol);
    }

    pub fn run(&self, ctx: &Ctx) -> Result<Outcome, CliError> {
        let m = &ctx.model;
        let f = match self.f {
            Some(f) => f.0,
            None => m.f_r_t0().map_err(run_err)?,
        };
        let ctl = StepControl { rtol: ask(self.rtol, "rtol")?, ..StepControl::default() };
        let t_on = ask(self.t_on, "t_on")?.0;
        let traj = ring_up_down(m, f, ask(self.ps, "ps")?.0, t_on, ask(self.t_off, "t_off")?.0, ask(self.samples, "samples")?, &ctl)
            .map_err(run_err)?;
        let n_on = ask(self.samples, "samples")?;
        let mut t = Table::new("trajectory", &["t_s", "drive", "T_K", "nbar", "re_s11", "im_s11"]);
        for (i, s) in traj.iter().enumerate() {
            let drive = if i < n_on { "on" } else { "off" };
            t.push(vec![s.time.into(), drive.into(), s.temperature.into(), s.n_phonons.into(), s.s11.re.into(), s.s11.im.into()]);
        }
        let peak = traj.iter().map(|s| s.n_phonons).fold(0.0, f64::max);
        let summary = format!("ringdown: {} samples, peak nbar {peak:.4e}", traj.len());
        Ok(Outcome { tables: vec![t], meta: vec![], summary })
    }
}

// ----------------------------------------------------------- sweep-dynamic

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SweepDynamicArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub ps: Option<Power>,
    #[arg(long, value_enum)]
    pub direction: Option<SweepDirection>,
    #[arg(long)]
    pub f_start: Option<Frequency>,
    #[arg(long)]
    pub f_stop: Option<Frequency>,
    /// Half-span in low-power linewidths around f_r(T0).
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Dwell time per frequency point.
    #[arg(long)]
    pub t_meas: Option<Duration>,
    /// Receiver bandwidth; without it the end-of-dwell reflection is reported.
    #[arg(long)]
    pub if_bandwidth: Option<Frequency>,
    /// Filter time constant in units of 1/bandwidth.
    #[arg(long)]
    pub filter_k: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
}
overlay!(SweepDynamicArgs { ps, direction, f_start, f_stop, span, points, t_meas, if_bandwidth, filter_k, rtol });

impl SweepDynamicArgs {
    pub fn fill(&mut self) {
        self.ps.get_or_insert(Power(dbm_to_watts(-130.0)));
        self.direction.get_or_insert(SweepDirection::Both);
        self.span.get_or_insert(25.0);
        self.points.get_or_insert(201);
        self.t_meas.get_or_insert(Duration(10e-3));
        self.filter_k.get_or_insert(IfFilter::DEFAULT_K);
        self.rtol.get_or_insert(StepControl::default().rtol);
    }

    pub fn run(&self, ctx: &Ctx) -> Result<Outcome, CliError> {
        let m = &ctx.model;
        let grid = frequency_grid(m, self.f_start, self.f_stop, ask(self.span, "span")?, ask(self.points, "points")?)?;
        let p_s = ask(self.ps, "ps")?.0;
        let filter = self.if_bandwidth.map(|b| IfFilter { bandwidth_hz: b.0, k: self.filter_k.unwrap_or(IfFilter::DEFAULT_K) });
        let ctl = StepControl { rtol: ask(self.rtol, "rtol")?, ..StepControl::default() };
        let t_meas = ask(self.t_meas, "t_meas")?.0;
        let mut runs = Vec::new();
        for dir in ask(self.direction, "direction")?.directions() {
            let g: Vec<f64> = if dir == Direction::Down { grid.iter().rev().copied().collect() } else { grid.clone() };
            runs.push(swept_response_dynamic(m, &g, p_s, dir, t_meas, filter, &ctl).map_err(run_err)?);
        }
        let summary = format!("sweep-dynamic: {} points, dwell {t_meas:e} s; {}", grid.len(), describe_jumps(&runs));
        Ok(Outcome { tables: vec![sweep_table(&runs)], meta: jump_meta(&runs), summary })
    }
}

// ----------------------------------------------------------- phase-diagram

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramArgs {
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    /// Powers as start:stop:count, evenly spaced in dBm.
    #[arg(long, allow_hyphen_values = true)]
    pub ps_range: Option<Range<Power>>,
    /// Second axis as start:stop:count, log-spaced, SI units.
    #[arg(long)]
    pub param_range: Option<Range<Plain>>,
    /// Check cells next to the flag boundary with up/down frequency sweeps.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub verify: Option<bool>,
    /// Points in the dense window of each verification sweep.
    #[arg(long)]
    pub verify_points: Option<usize>,
    /// Where to write the contour table when `--output` is a file.
    #[arg(long)]
    pub contour_output: Option<PathBuf>,
}
overlay!(PhaseDiagramArgs { axis, ps_range, param_range, verify, verify_points, contour_output });

impl PhaseDiagramArgs {
    pub fn fill(&mut self) {
        let axis = *self.axis.get_or_insert(AxisArg::LossTangent);
        self.ps_range.get_or_insert_with(|| "-160:-100:60".parse().expect("valid default"));
        self.param_range.get_or_insert_with(|| {
            match axis {
                AxisArg::LossTangent => "1e-7:1e-4:40",
                AxisArg::KappaE => "10:1000:40",
            }
            .parse()
            .expect("valid default")
        });
        self.verify.get_or_insert(false);
        self.verify_points.get_or_insert(401);
    }

    pub fn run(&self, ctx: &Ctx) -> Result<Outcome, CliError> {
        let axis = match ask(self.axis, "axis")? {
            AxisArg::LossTangent => ScanAxis::LossTangent,
            AxisArg::KappaE => ScanAxis::KappaE,
        };
        let ps = power_axis(&ask(self.ps_range, "ps_range")?);
        let params = log_axis(&ask(self.param_range, "param_range")?)?;
        let grid = phase_scan(&ctx.model, axis, &ps, &params, &ctx.opts).map_err(run_err)?;
        let flags = bistability_flags(&grid);
        let mut verdicts = vec![vec![None; ps.len()]; params.len()];
        if self.verify.unwrap_or(false) {
            for (i, j, _, v) in verify_boundary(&ctx.model, &grid, ask(self.verify_points, "verify_points")?, &ctx.opts) {
                verdicts[i][j] = v;
            }
        }
        let mut cells = Table::new(
            "cells",
            &[axis.as_str(), "ps_dBm", "ps_W", "solved", "T_K", "nbar", "Qi", "fr_Hz", "y", "bistable", "verified"],
        );
        for (i, row) in grid.cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let mut r: Vec<Cell> = vec![params[i].into(), watts_to_dbm(ps[j]).into(), ps[j].into(), c.is_some().into()];
                match c {
                    Some(p) => r.extend([
                        p.temperature.into(),
                        p.nbar.into(),
                        p.q_i.into(),
                        p.f_r.into(),
                        p.y_fractional.into(),
                    ]),
                    None => r.extend(std::iter::repeat_n(Cell::Empty, 5)),
                }
                r.push(flags[i][j].into());
                r.push(verdicts[i][j].into());
                cells.push(r);
            }
        }
        let contour = bistability_contour(&grid);
        let mut ct = Table::new("contour", &[axis.as_str(), "ps_dBm", "ps_W"]);
        for (p, w) in &contour {
            ct.push(vec![(*p).into(), watts_to_dbm(*w).into(), (*w).into()]);
        }
        let flagged = flags.iter().flatten().filter(|f| **f).count();
        let unsolved = grid.cells.iter().flatten().filter(|c| c.is_none()).count();
        let checked: Vec<(bool, bool)> = verdicts
            .iter()
            .flatten()
            .zip(flags.iter().flatten())
            .filter_map(|(v, f)| v.map(|v| (v, *f)))
            .collect();
        let mut summary = format!(
            "phase-diagram: {} cells, {flagged} flagged, {unsolved} unsolved, contour {} points",
            params.len() * ps.len(),
            contour.len()
        );
        if !checked.is_empty() {
            let agree = checked.iter().filter(|(v, f)| v == f).count();
            summary.push_str(&format!(", boundary check {agree}/{} agree", checked.len()));
        }
        Ok(Outcome { tables: vec![cells, ct], meta: vec![], summary })
    }
}

// ----------------------------------------------------------------- swenson

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SwensonArgs {
    /// Nonlinearity parameter; negative values shift the resonance down.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Applied detunings y0 as start:stop:count.
    #[arg(long, allow_hyphen_values = true)]
    pub y0_range: Option<Range<Plain>>,
    #[arg(long, value_enum)]
    pub direction: Option<SweepDirection>,
}
overlay!(SwensonArgs { a, y0_range, direction });

impl SwensonArgs {
    pub fn fill(&mut self) {
        self.a.get_or_insert(-1.0);
        self.y0_range.get_or_insert_with(|| "-3:3:601".parse().expect("valid default"));
        self.direction.get_or_insert(SweepDirection::Both);
    }

    pub fn run(&self) -> Result<Outcome, CliError> {
        let a = ask(self.a, "a")?;
        let grid = ask(self.y0_range, "y0_range")?.points_by(|q| q.0, |x| x);
        let mut t = Table::new("branch", &["y0", "direction", "y", "jump"]);
        let mut notes = Vec::new();
        for dir in ask(self.direction, "direction")?.directions() {
            let g: Vec<f64> = if dir == Direction::Down { grid.iter().rev().copied().collect() } else { grid.clone() };
            let tr = swenson_branch(&g, a, dir).map_err(run_err)?;
            for (i, (y0, y)) in g.iter().zip(&tr.y).enumerate() {
                t.push(vec![(*y0).into(), dir.as_str().into(), (*y).into(), tr.jumps.contains(&i).into()]);
            }
            notes.push(format!("{} jumps {:?}", dir.as_str(), tr.jumps));
        }
        let mut meta = vec![("critical_a".to_string(), format!("{:?}", -critical_nonlinearity()))];
        if let Some((lo, hi)) = swenson_folds(a) {
            meta.push(("folds_y0".into(), format!("[{lo:?},{hi:?}]")));
        }
        let summary = format!("swenson: a = {a}, {} points; {}", grid.len(), notes.join("; "));
        Ok(Outcome { tables: vec![t], meta, summary })
    }
}

// ----------------------------------------------------------------- duffing

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct DuffingArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub ps: Option<Power>,
    /// Applied detunings y0 as start:stop:count.
    #[arg(long, allow_hyphen_values = true)]
    pub y0_range: Option<Range<Plain>>,
}
overlay!(DuffingArgs { ps, y0_range });

impl DuffingArgs {
    pub fn fill(&mut self) {
        self.ps.get_or_insert(Power(dbm_to_watts(-130.0)));
        self.y0_range.get_or_insert_with(|| "-5:5:401".parse().expect("valid default"));
    }

    pub fn run(&self, ctx: &Ctx) -> Result<Outcome, CliError> {
        let m = &ctx.model;
        let t0 = m.thermal.t0;
        let sc = duffing_scales(t0, &m.resonator, &m.tls, &m.thermal).map_err(run_err)?;
        let q = m.q_bounds(t0, sc.f_r).map_err(run_err)?.0;
        let q_e = m.resonator.q_e_at(sc.f_r);
        let p_s = ask(self.ps, "ps")?.0;
        let a_star = duffing_drive(q, q_e, p_s, &sc);
        let grid = ask(self.y0_range, "y0_range")?.points_by(|v| v.0, |x| x);
        let mut t = Table::new("roots", &["y0", "root", "n_roots", "k", "re_s11", "im_s11"]);
        let mut multi = 0;
        let mut outside = 0;
        for &y0 in &grid {
            // Detunings where the rotated frame degenerates have no mapping
            let sol = match duffing_solve(y0, a_star, q, q_e, sc.phi_nl) {
                Err(crate::Error::Domain(_)) => {
                    outside += 1;
                    t.push(vec![y0.into(), Cell::Empty, 0usize.into(), Cell::Empty, Cell::Empty, Cell::Empty]);
                    continue;
                }
                r => r.map_err(run_err)?,
            };
            if sol.k.len() > 1 {
                multi += 1;
            }
            for (i, (k, s)) in sol.k.iter().zip(&sol.s11).enumerate() {
                t.push(vec![y0.into(), i.into(), sol.k.len().into(), (*k).into(), s.re.into(), s.im.into()]);
            }
        }
        let (bound, n_th) = switching_loss_tangent(t0, sc.f_r, m.thermal.n_ch, m.tls.n_s);
        let meta = vec![
            ("a_star".to_string(), format!("{a_star:?}")),
            ("phi_nl".into(), format!("{:?}", sc.phi_nl)),
            ("t_star_K".into(), format!("{:?}", sc.t_star)),
            ("n_star".into(), format!("{:?}", sc.n_star)),
            ("t_d_K".into(), format!("{:?}", sc.t_d)),
            ("t_r_K".into(), format!("{:?}", sc.t_r)),
            ("switching_loss_tangent".into(), format!("{bound:?}")),
            ("thermal_occupation".into(), format!("{n_th:?}")),
        ];
        let summary = format!(
            "duffing: a* = {a_star:.4e}, phi = {:.4}, {multi} of {} detunings multivalued, {outside} outside the mapping",
            sc.phi_nl,
            grid.len()
        );
        Ok(Outcome { tables: vec![t], meta, summary })
    }
}

// ---------------------------------------------------------------- holeburn

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct HoleburnArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub ps: Option<Power>,
    /// Probe detunings from the bare resonance as start:stop:count.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_range: Option<Range<Frequency>>,
    #[arg(long)]
    pub f_r: Option<Frequency>,
    #[arg(long)]
    pub loss_tangent: Option<f64>,
    #[arg(long)]
    pub temperature: Option<Temperature>,
    #[arg(long)]
    pub coupling: Option<Frequency>,
    #[arg(long)]
    pub n_s: Option<f64>,
    #[arg(long)]
    pub q_background: Option<f64>,
    #[arg(long)]
    pub kappa_e: Option<Frequency>,
}
overlay!(HoleburnArgs { ps, detuning_range, f_r, loss_tangent, temperature, coupling, n_s, q_background, kappa_e });

impl HoleburnArgs {
    pub fn fill(&mut self) {
        self.ps.get_or_insert(Power(dbm_to_watts(-100.0)));
        self.detuning_range.get_or_insert_with(|| "-5kHz:5kHz:101".parse().expect("valid default"));
        self.f_r.get_or_insert(Frequency(500e6));
        self.loss_tangent.get_or_insert(1.42e-5);
        self.temperature.get_or_insert(Temperature(0.025));
        self.coupling.get_or_insert(Frequency(230e3));
        self.n_s.get_or_insert(100.0);
        self.q_background.get_or_insert(60e6);
        self.kappa_e.get_or_insert(Frequency(70.0));
    }

    pub fn run(&self) -> Result<Outcome, CliError> {
        let hp = HoleburnParams::from_loss_tangent(
            ask(self.f_r, "f_r")?.0,
            ask(self.loss_tangent, "loss_tangent")?,
            ask(self.temperature, "temperature")?.0,
            ask(self.coupling, "coupling")?.0,
            ask(self.n_s, "n_s")?,
            ask(self.q_background, "q_background")?,
            ask(self.kappa_e, "kappa_e")?.0,
        );
        let grid = ask(self.detuning_range, "detuning_range")?.points_by(|f| f.0, |x| x);
        let p_s = ask(self.ps, "ps")?.0;
        let pts = holeburn_selfconsistent(&grid, p_s, &hp).map_err(run_err)?;
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut t = Table::new(
            "holeburn",
            &["detuning_Hz", "pulled_detuning_Hz", "pull_Hz", "kappa_i_over_2pi_Hz", "nbar", "iterations"],
        );
        for p in &pts {
            t.push(vec![
                (p.applied_detuning / two_pi).into(),
                (p.detuning / two_pi).into(),
                (p.pull / two_pi).into(),
                (p.kappa_i / two_pi).into(),
                p.nbar.into(),
                p.iterations.into(),
            ]);
        }
        let worst = pts.iter().map(|p| (p.pull / two_pi).abs()).fold(0.0, f64::max);
        let meta = vec![
            ("critical_power_dBm".to_string(), format!("{:?}", watts_to_dbm(hp.critical_power()))),
            ("max_pull_Hz".into(), format!("{:?}", hp.max_pull() / two_pi)),
            ("hole_linewidth_Hz".into(), format!("{:?}", hp.gamma2() / two_pi)),
        ];
        let summary = format!(
            "holeburn: largest pull {worst:.4e} Hz at {:.2} dBm (critical power {:.2} dBm)",
            watts_to_dbm(p_s),
            watts_to_dbm(hp.critical_power())
        );
        Ok(Outcome { tables: vec![t], meta, summary })
    }
}

// ----------------------------------------------------- thermal-conductance

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ThermalConductanceArgs {
    /// Temperatures as start:stop:count, log-spaced.
    #[arg(long)]
    pub t_range: Option<Range<Temperature>>,
    #[arg(long)]
    pub width: Option<Length>,
    #[arg(long)]
    pub thickness: Option<Length>,
    /// Sound speed, m/s.
    #[arg(long)]
    pub speed: Option<f64>,
    #[arg(long)]
    pub bandgap_center: Option<Frequency>,
    #[arg(long)]
    pub bandgap_width: Option<Frequency>,
    /// Drop the phononic bandgap.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_bandgap: Option<bool>,
    /// Treat the bandgap width as the full blocked width.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub full_width_gap: Option<bool>,
    #[arg(long)]
    pub n_beams: Option<f64>,
    /// Upper cutoff of the phonon energy integral in units of k_B T.
    #[arg(long)]
    pub x_max: Option<f64>,
}
overlay!(ThermalConductanceArgs {
    t_range,
    width,
    thickness,
    speed,
    bandgap_center,
    bandgap_width,
    no_bandgap,
    full_width_gap,
    n_beams,
    x_max
});

impl ThermalConductanceArgs {
    pub fn fill(&mut self) {
        self.t_range.get_or_insert_with(|| "25mK:200mK:30".parse().expect("valid default"));
        self.width.get_or_insert(Length(3.9e-6));
        self.thickness.get_or_insert(Length(1e-6));
        self.speed.get_or_insert(4000.0);
        self.bandgap_center.get_or_insert(Frequency(530e6));
        self.bandgap_width.get_or_insert(Frequency(85e6));
        self.no_bandgap.get_or_insert(false);
        self.full_width_gap.get_or_insert(false);
        self.n_beams.get_or_insert(1.0);
        self.x_max.get_or_insert(40.0);
    }

    pub fn run(&self) -> Result<Outcome, CliError> {
        let gap = !self.no_bandgap.unwrap_or(false);
        let g = BeamGeometry {
            width_w: ask(self.width, "width")?.0,
            thickness_t: ask(self.thickness, "thickness")?.0,
            speed_c: ask(self.speed, "speed")?,
            bandgap_center_fb: gap.then(|| self.bandgap_center.map(|f| f.0)).flatten(),
            bandgap_width_dfb: gap.then(|| self.bandgap_width.map(|f| f.0)).flatten(),
            n_beams: ask(self.n_beams, "n_beams")?,
            gap_window: if self.full_width_gap.unwrap_or(false) { GapWindow::FullWidth } else { GapWindow::HalfWidth },
        };
        let r = ask(self.t_range, "t_range")?;
        if !(r.start.0 > 0.0 && r.stop.0 > 0.0) {
            return Err(CliError::Config("temperatures must be positive".into()));
        }
        let temps = r.points_by(|t| t.0.ln(), f64::exp);
        let x_max = ask(self.x_max, "x_max")?;
        let mut t = Table::new("conductance", &["T_K", "G_W_per_K", "gamma_local", "edge_fraction", "truncated"]);
        let mut gs = Vec::new();
        for &temp in &temps {
            let res = landauer_conductance(&g, temp, x_max, g.required_lm_max(temp, x_max)).map_err(run_err)?;
            let gamma = gamma_exponent(&g, temp, x_max).map_err(run_err)?;
            gs.push(res.g_th);
            t.push(vec![temp.into(), res.g_th.into(), gamma.into(), res.edge_fraction.into(), res.truncated.into()]);
        }
        let mut meta = vec![("t_1d_K".to_string(), format!("{:?}", t_1d(g.speed_c, g.width_w)))];
        let mut summary = format!("thermal-conductance: {} temperatures", temps.len());
        if temps.len() >= 2 {
            let (exp, pref) = power_law_fit(&temps, &gs);
            meta.push(("fit_exponent".into(), format!("{exp:?}")));
            meta.push(("fit_prefactor_W_per_K".into(), format!("{pref:?}")));
            summary.push_str(&format!(", G = {pref:.4e} T^{exp:.4}"));
        }
        Ok(Outcome { tables: vec![t], meta, summary })
    }
}
