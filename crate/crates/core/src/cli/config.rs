//! Run configuration: preset values, overlaid by a TOML file, then by
//! `--set key=value` entries, then by explicit command-line flags.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use toml::{Table, Value};

use super::commands::{
    DuffingArgs, HoleburnArgs, PhaseDiagramArgs, PowerSweepArgs, RingdownArgs, SweepDynamicArgs, SweepS11Args,
    SwensonArgs, ThermalConductanceArgs,
};
use super::output::Format;
use super::units::Temperature;
use super::CliError;
use crate::presets::Preset;
use crate::steady_solver::{DcmParams, DiscreteTlsParams, Dissipation, Model, SolverOptions};
use crate::thermal::ThermalParams;
use crate::tls_response::{ResonatorParams, TlsEnsembleParams};

/// Model block as it appears in a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub resonator: ResonatorParams,
    pub tls: TlsEnsembleParams,
    pub thermal: ThermalParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteTlsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dcm: Option<DcmParams>,
    pub dissipation: Dissipation,
    pub solver: SolverOptions,
}

impl ModelConfig {
    pub fn from_preset(p: Preset) -> Self {
        let m = p.model(p.default_t0());
        Self {
            resonator: m.resonator,
            tls: m.tls,
            thermal: m.thermal,
            discrete: m.discrete,
            dcm: m.dcm,
            dissipation: m.dissipation,
            solver: SolverOptions::default(),
        }
    }

    pub fn model(&self) -> Model {
        Model {
            resonator: self.resonator,
            tls: self.tls,
            thermal: self.thermal,
            discrete: self.discrete,
            dcm: self.dcm,
            dissipation: self.dissipation,
        }
    }
}

/// Whole configuration document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    /// Consumed before deserialization; kept so the key is accepted.
    #[serde(default)]
    #[allow(dead_code)]
    pub preset: Option<String>,
    /// Bath temperature; overrides `thermal.t0`.
    #[serde(default)]
    pub t0: Option<Temperature>,
    /// Set to false to drop the preset's discrete TLS.
    #[serde(default)]
    pub discrete_tls: Option<bool>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub threads: Option<usize>,
    pub resonator: ResonatorParams,
    pub tls: TlsEnsembleParams,
    pub thermal: ThermalParams,
    #[serde(default)]
    pub discrete: Option<DiscreteTlsParams>,
    #[serde(default)]
    pub dcm: Option<DcmParams>,
    pub dissipation: Dissipation,
    pub solver: SolverOptions,
    #[serde(default)]
    pub sweep_s11: SweepS11Args,
    #[serde(default)]
    pub power_sweep: PowerSweepArgs,
    #[serde(default)]
    pub ringdown: RingdownArgs,
    #[serde(default)]
    pub sweep_dynamic: SweepDynamicArgs,
    #[serde(default)]
    pub phase_diagram: PhaseDiagramArgs,
    #[serde(default)]
    pub swenson: SwensonArgs,
    #[serde(default)]
    pub duffing: DuffingArgs,
    #[serde(default)]
    pub holeburn: HoleburnArgs,
    #[serde(default)]
    pub thermal_conductance: ThermalConductanceArgs,
}

impl RunDoc {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            resonator: self.resonator,
            tls: self.tls,
            thermal: self.thermal,
            discrete: self.discrete,
            dcm: self.dcm,
            dissipation: self.dissipation,
            solver: self.solver,
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses the config file, keeping the text for diagnostics.
pub fn read_file(path: &Path) -> Result<(Table, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| config_error(format!("{}: {}", path.display(), e.to_string().trim_end())))?;
    Ok((table, text))
}

/// Parses a `--set` value as TOML, falling back to a plain string.
fn parse_value(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Applies one `a.b.c=value` entry.
pub fn apply_set(doc: &mut Table, entry: &str) -> Result<(), CliError> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| config_error(format!("--set expects KEY=VALUE, got `{entry}`")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_error(format!("bad key `{key}` in --set")));
    }
    let mut node = doc;
    for part in &path[..path.len() - 1] {
        let next = node.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        node = next
            .as_table_mut()
            .ok_or_else(|| config_error(format!("`{part}` in `{key}` is not a section")))?;
    }
    node.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Recursively overlays `over` onto `base`.
pub fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Names a line of `text` mentioning the key in a serde error, if any.
fn locate(err: &str, text: Option<&str>) -> String {
    let Some(text) = text else {
        return String::new();
    };
    let Some(key) = err.split('`').nth(1) else {
        return String::new();
    };
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| format!(" (config line {})", i + 1))
        .unwrap_or_default()
}

/// Builds the resolved document. `preset_flag` wins over the file's
/// `preset` key, which wins over `default_preset`.
pub fn resolve(
    user: Table,
    file_text: Option<&str>,
    preset_flag: Option<&str>,
    default_preset: Preset,
) -> Result<(RunDoc, Preset), CliError> {
    let name = preset_flag
        .map(str::to_string)
        .or_else(|| user.get("preset").and_then(Value::as_str).map(str::to_string));
    let preset = match name {
        Some(n) => Preset::from_name(&n).ok_or_else(|| {
            let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            config_error(format!("unknown preset `{n}` (known: {})", known.join(", ")))
        })?,
        None => default_preset,
    };
    let mut doc = Table::try_from(ModelConfig::from_preset(preset))
        .map_err(|e| config_error(format!("internal: preset does not serialize: {e}")))?;
    merge(&mut doc, user);
    doc.insert("preset".into(), Value::String(preset.name().into()));
    let run: RunDoc = Value::Table(doc).try_into().map_err(|e: toml::de::Error| {
        let msg = e.to_string().trim_end().to_string();
        let line = locate(&msg, file_text);
        config_error(format!("{msg}{line}"))
    })?;
    Ok((run, preset))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_str(text: &str) -> Result<RunDoc, CliError> {
        let t: Table = text.parse().unwrap();
        resolve(t, Some(text), None, Preset::Fig3).map(|r| r.0)
    }

    #[test]
    fn preset_values_survive_round_trip() {
        let doc = resolve_str("").unwrap();
        let m = doc.model_config().model();
        assert_eq!(m, Preset::Fig3.model(0.025));
    }

    #[test]
    fn infinite_background_round_trips() {
        let t = Table::new();
        let (doc, _) = resolve(t, None, Some("phase-study"), Preset::Fig3).unwrap();
        assert!(doc.resonator.q_bkg.is_infinite());
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err = resolve_str("[tls]\nn_s = 100\nbogus = 1\n").unwrap_err();
        let CliError::Config(msg) = err else { panic!() };
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
        assert!(resolve_str("mystery = 2\n").is_err());
        assert!(resolve_str("[sweep_s11]\nwidth = 2\n").is_err());
    }

    #[test]
    fn set_overrides() {
        let mut t = Table::new();
        apply_set(&mut t, "tls.n_s=77").unwrap();
        apply_set(&mut t, "sweep_s11.ps=-100dBm").unwrap();
        apply_set(&mut t, "dissipation={fixed-depth = 0.1}").unwrap();
        let (doc, _) = resolve(t, None, None, Preset::Fig2).unwrap();
        assert_eq!(doc.tls.n_s, 77.0);
        assert_eq!(doc.dissipation, Dissipation::FixedDepth(0.1));
        assert!(doc.sweep_s11.ps.is_some());
        assert!(apply_set(&mut Table::new(), "novalue").is_err());
    }
}
