//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 configuration or usage
//! error, 3 solver non-convergence.

mod commands;
mod config;
pub mod output;
pub mod units;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use toml::{Table, Value};

pub use commands::{
    DuffingArgs, HoleburnArgs, PhaseDiagramArgs, PowerSweepArgs, RingdownArgs, SweepDynamicArgs, SweepS11Args,
    SwensonArgs, ThermalConductanceArgs,
};
use commands::{Ctx, Outcome};
use config::{apply_set, read_file, resolve, ModelConfig};
use output::{render, Cell, Format, Metadata, Table as OutTable};
use units::Temperature;

use crate::presets::Preset;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::NonConvergence { .. } | crate::Error::StepUnderflow { .. } => CliError::Solver(e.to_string()),
            crate::Error::Domain(_) | crate::Error::InvalidParams(_) => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tlsheat", version, about = "Steady-state and dynamic response of a TLS-heated mechanical resonator")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `tls.n_s=100` or `sweep_s11.ps=-100dBm`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Parameter preset (see the `presets` command).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Worker threads for grid studies.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Bath temperature, e.g. `50mK`.
    #[arg(long, global = true)]
    pub t0: Option<Temperature>,
    /// Drop the preset's discrete TLS.
    #[arg(long, global = true)]
    pub no_discrete: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state reflection over a frequency sweep.
    SweepS11(SweepS11Args),
    /// Steady state against probe power.
    PowerSweep(PowerSweepArgs),
    /// Ring-up and ring-down transient at fixed drive.
    Ringdown(RingdownArgs),
    /// Time-resolved frequency sweep with finite dwell.
    SweepDynamic(SweepDynamicArgs),
    /// Bistability map over probe power and loss tangent or coupling.
    PhaseDiagram(PhaseDiagramArgs),
    /// Branches of the reduced cubic nonlinearity.
    Swenson(SwensonArgs),
    /// Linearized mixed reactive/dissipative nonlinearity.
    Duffing(DuffingArgs),
    /// Resonant saturation of a flat TLS band without heating.
    Holeburn(HoleburnArgs),
    /// Ballistic phonon conductance of the support tethers.
    ThermalConductance(ThermalConductanceArgs),
    /// List the parameter presets.
    Presets,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SweepS11(_) => "sweep-s11",
            Command::PowerSweep(_) => "power-sweep",
            Command::Ringdown(_) => "ringdown",
            Command::SweepDynamic(_) => "sweep-dynamic",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::Swenson(_) => "swenson",
            Command::Duffing(_) => "duffing",
            Command::Holeburn(_) => "holeburn",
            Command::ThermalConductance(_) => "thermal-conductance",
            Command::Presets => "presets",
        }
    }

    /// Preset used when none is named; `None` for commands without a model.
    fn default_preset(&self) -> Option<Preset> {
        match self {
            Command::SweepS11(_) => Some(Preset::Fig2),
            Command::PowerSweep(_) | Command::Ringdown(_) | Command::SweepDynamic(_) | Command::Duffing(_) => {
                Some(Preset::Fig3)
            }
            Command::PhaseDiagram(_) => Some(Preset::PhaseStudy),
            _ => None,
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Dotted `key = value` lines for every leaf of `v`.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Table(t) => {
            for (k, x) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn show(v: &Value) -> String {
    match v {
        Value::Float(f) => format!("{f:?}"),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Serialize)]
struct Echo<'a, A: Serialize> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a ModelConfig>,
    args: &'a A,
}

fn metadata<A: Serialize>(
    command: &str,
    preset: Option<Preset>,
    model: Option<&ModelConfig>,
    args: &A,
) -> Result<Metadata, CliError> {
    let echo = Echo { command, preset: preset.map(Preset::name), model, args };
    let canonical = toml::to_string(&echo).map_err(|e| CliError::Config(format!("cannot echo config: {e}")))?;
    let hash = Sha256::digest(canonical.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let mut meta: Metadata = vec![
        ("version".into(), format!("tlsheat {}", env!("CARGO_PKG_VERSION"))),
        ("command".into(), command.into()),
        ("config_sha256".into(), hex),
    ];
    if let Some(m) = model {
        let s = &m.solver;
        meta.push(("tolerances".into(), format!("eps_alpha={:?} eps_x={:?} eps_t={:?}", s.eps_alpha, s.eps_x, s.eps_t)));
    }
    let tree = Value::try_from(&echo).map_err(|e| CliError::Config(format!("cannot echo config: {e}")))?;
    let mut leaves = Vec::new();
    flatten("", &tree, &mut leaves);
    for (k, v) in leaves {
        if k != "command" {
            meta.push((format!("param.{k}"), show(&v)));
        }
    }
    Ok(meta)
}

fn presets_table() -> Result<OutTable, CliError> {
    let mut t = OutTable::new("presets", &["preset", "key", "value"]);
    for p in Preset::ALL {
        let mut mc = ModelConfig::from_preset(p);
        mc.thermal.t0 = p.default_t0();
        let v = Value::try_from(&mc).map_err(|e| CliError::Config(e.to_string()))?;
        let mut leaves = Vec::new();
        flatten("", &v, &mut leaves);
        for (k, x) in leaves.into_iter().filter(|(k, _)| !k.starts_with("solver.")) {
            let cell = match x {
                Value::Float(f) => Cell::F(f),
                Value::Integer(i) => Cell::I(i),
                other => Cell::S(show(&other)),
            };
            t.push(vec![p.name().into(), k.into(), cell]);
        }
    }
    Ok(t)
}

/// `a/b.csv` → `a/b.contour.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let mut user = Table::new();
    let mut text = None;
    if let Some(p) = &cli.config {
        let (t, s) = read_file(p)?;
        user = t;
        text = Some(s);
    }
    for entry in &cli.set {
        apply_set(&mut user, entry)?;
    }
    let default_preset = cli.command.default_preset();
    let has_model = default_preset.is_some();
    let (doc, preset) = resolve(user, text.as_deref(), cli.preset.as_deref(), default_preset.unwrap_or(Preset::Fig3))?;

    if let Some(n) = cli.threads.or(doc.threads) {
        if n == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        // Fails only if a pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let mut mc = doc.model_config();
    if let Some(t0) = cli.t0.or(doc.t0) {
        mc.thermal.t0 = t0.0;
    }
    if cli.no_discrete || doc.discrete_tls == Some(false) {
        mc.discrete = None;
    }
    let model = mc.model();
    if has_model {
        model.validate().map_err(CliError::from)?;
    }
    let ctx = Ctx { model, opts: mc.solver };
    let name = cli.command.name();
    let model_echo = has_model.then_some(&mc);
    let preset_echo = has_model.then_some(preset);

    macro_rules! with_args {
        ($section:ident, $cli_args:expr, |$a:ident| $body:expr) => {{
            let mut $a = doc.$section.clone();
            $a.overlay($cli_args);
            $a.fill();
            let meta = metadata(name, preset_echo, model_echo, &$a)?;
            let out: Outcome = $body?;
            (meta, out)
        }};
    }

    let (mut meta, out) = match &cli.command {
        Command::SweepS11(c) => with_args!(sweep_s11, c, |a| a.run(&ctx)),
        Command::PowerSweep(c) => with_args!(power_sweep, c, |a| a.run(&ctx)),
        Command::Ringdown(c) => with_args!(ringdown, c, |a| a.run(&ctx)),
        Command::SweepDynamic(c) => with_args!(sweep_dynamic, c, |a| a.run(&ctx)),
        Command::PhaseDiagram(c) => with_args!(phase_diagram, c, |a| a.run(&ctx)),
        Command::Swenson(c) => with_args!(swenson, c, |a| a.run()),
        Command::Duffing(c) => with_args!(duffing, c, |a| a.run(&ctx)),
        Command::Holeburn(c) => with_args!(holeburn, c, |a| a.run()),
        Command::ThermalConductance(c) => with_args!(thermal_conductance, c, |a| a.run()),
        Command::Presets => {
            let meta = metadata(name, None, None, &Table::new())?;
            let n = Preset::ALL.len();
            (meta, Outcome { tables: vec![presets_table()?], meta: vec![], summary: format!("presets: {n} sets") })
        }
    };
    meta.extend(out.meta);
    let format = cli.format.or(doc.format).unwrap_or_default();
    let output = cli.output.clone().or(doc.output.clone());
    match output {
        Some(path) if out.tables.len() > 1 => {
            write(&path, &render(&meta, &out.tables[..1], format))?;
            let contour_path = match &cli.command {
                Command::PhaseDiagram(c) => c.contour_output.clone().or(doc.phase_diagram.contour_output.clone()),
                _ => None,
            };
            for t in &out.tables[1..] {
                let p = match &contour_path {
                    Some(p) if t.name == "contour" => p.clone(),
                    _ => sibling(&path, &t.name),
                };
                write(&p, &render(&meta, std::slice::from_ref(t), format))?;
            }
        }
        Some(path) => write(&path, &render(&meta, &out.tables, format))?,
        None => {
            use std::io::Write;
            let text = render(&meta, &out.tables, format);
            match std::io::stdout().write_all(text.as_bytes()) {
                // A reader that stops early (`| head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r.map_err(|e| CliError::Io(e.to_string()))?,
            }
        }
    }
    Ok(out.summary)
}
