//! Fitted device parameter sets.

use serde::{Deserialize, Serialize};

use crate::steady_solver::{DiscreteTlsParams, Dissipation, Model};
use crate::thermal::ThermalParams;
use crate::tls_response::{ResonatorParams, TlsEnsembleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Device with the discrete-TLS step, swept in frequency.
    Fig2,
    /// Device used for the fixed-probe power sweep.
    Fig3,
    /// Idealized set for the phase-diagram and scaling studies.
    PhaseStudy,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig2, Preset::Fig3, Preset::PhaseStudy];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::PhaseStudy => "phase-study",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Bath temperature the set was fitted at.
    pub fn default_t0(self) -> f64 {
        0.025
    }

    pub fn resonator(self) -> ResonatorParams {
        match self {
            Preset::Fig2 => ResonatorParams { f_r0: 520.808275e6, kappa_e_over_2pi: 69.9, q_bkg: 60e6 },
            Preset::Fig3 => ResonatorParams { f_r0: 502.0655e6, kappa_e_over_2pi: 42.1, q_bkg: 60e6 },
            Preset::PhaseStudy => {
                ResonatorParams { f_r0: 502.0655e6, kappa_e_over_2pi: 42.15, q_bkg: f64::INFINITY }
            }
        }
    }

    pub fn tls(self) -> TlsEnsembleParams {
        match self {
            Preset::Fig2 => TlsEnsembleParams {
                fd0_reac: 1.42e-5,
                fd0_diss: 1.61e-5,
                n_s: 94.2,
                beta: 1.0,
                q_rel_ref: 0.33e6,
                d_exp: 1.69,
            },
            Preset::Fig3 => TlsEnsembleParams {
                fd0_reac: 1.14e-5,
                fd0_diss: 1.23e-5,
                n_s: 128.0,
                beta: 1.0,
                q_rel_ref: 0.36e6,
                d_exp: 1.84,
            },
            Preset::PhaseStudy => TlsEnsembleParams {
                fd0_reac: 1.1395e-5,
                fd0_diss: 1.1395e-5,
                n_s: 128.0,
                beta: 1.0,
                q_rel_ref: 0.36e6,
                d_exp: 1.84,
            },
        }
    }

    pub fn thermal(self, t0: f64) -> ThermalParams {
        let n_ch = match self {
            Preset::Fig2 => 0.37,
            Preset::Fig3 | Preset::PhaseStudy => 0.58,
        };
        ThermalParams { t0, n_ch, gamma: 2.83, c_th: None }
    }

    pub fn discrete(self) -> Option<DiscreteTlsParams> {
        match self {
            Preset::Fig2 => Some(DiscreteTlsParams { omega_tls_over_2pi: 546e6, g_over_2pi: 230e3 }),
            _ => None,
        }
    }

    pub fn model(self, t0: f64) -> Model {
        Model {
            resonator: self.resonator(),
            tls: self.tls(),
            thermal: self.thermal(t0),
            discrete: self.discrete(),
            dcm: None,
            dissipation: Dissipation::Tls,
        }
    }
}
