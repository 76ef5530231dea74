//! Named experiments, one per published result figure, at desk scale.

use std::str::FromStr;

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Scheme, SweepVar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// BER and sync time against bit energy, every scheme.
    Fig8,
    /// Delay MSE against the CRLB.
    Fig9,
    /// BER against the largest user delay.
    Fig10,
    /// BER against the activation probability.
    Fig11,
    /// BER per outer iteration.
    Fig12,
    /// Correctly detected bits per frame.
    Fig15,
    /// BER against background radiation.
    Fig16,
    /// BER under turbulence.
    Fig17,
    /// BER under imperfect channel knowledge.
    Fig18,
    /// EXIT chart and trajectory.
    Exit,
    /// The bit-energy sweep at full Monte-Carlo scale; hours on one core.
    Full,
}

impl Preset {
    pub const ALL: [Preset; 11] = [
        Preset::Fig8,
        Preset::Fig9,
        Preset::Fig10,
        Preset::Fig11,
        Preset::Fig12,
        Preset::Fig15,
        Preset::Fig16,
        Preset::Fig17,
        Preset::Fig18,
        Preset::Exit,
        Preset::Full,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
            Preset::Fig10 => "fig10",
            Preset::Fig11 => "fig11",
            Preset::Fig12 => "fig12",
            Preset::Fig15 => "fig15",
            Preset::Fig16 => "fig16",
            Preset::Fig17 => "fig17",
            Preset::Fig18 => "fig18",
            Preset::Exit => "exit",
            Preset::Full => "full",
        }
    }

    /// `base` with the preset's sweep, schemes and scale applied.
    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        use Scheme::*;
        let all = Scheme::ALL.to_vec();
        let proposed = vec![ProposedGrouped, ProposedUngrouped];
        let eb_sweep = |lo: i32, hi: i32, step: usize| (lo..=hi).step_by(step).map(f64::from).collect::<Vec<_>>();
        let c = ExperimentConfig {
            sweep: None,
            sweep_values: Vec::new(),
            ..base.clone()
        };
        match self {
            Preset::Fig8 | Preset::Fig15 => ExperimentConfig {
                eb_dbj: eb_sweep(-172, -164, 2),
                schemes: all,
                ..c
            },
            Preset::Fig9 => ExperimentConfig {
                eb_dbj: eb_sweep(-170, -164, 1),
                schemes: proposed,
                t_out: 0,
                ..c
            },
            Preset::Fig10 => ExperimentConfig {
                eb_dbj: vec![-166.0],
                sweep: Some(SweepVar::DelayMax),
                sweep_values: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
                schemes: all,
                ..c
            },
            Preset::Fig11 => ExperimentConfig {
                eb_dbj: vec![-166.0],
                sweep: Some(SweepVar::Alpha),
                sweep_values: vec![0.2, 0.4, 0.6, 0.8, 1.0],
                schemes: all,
                ..c
            },
            Preset::Fig12 => ExperimentConfig {
                eb_dbj: vec![-170.0, -168.0, -166.0],
                schemes: proposed,
                t_out: 12,
                ..c
            },
            Preset::Fig16 => ExperimentConfig {
                eb_dbj: vec![-166.0],
                sweep: Some(SweepVar::EnbDbj),
                sweep_values: vec![-170.0, -168.0, -166.0, -165.0, -164.0, -162.0],
                n_b: None,
                schemes: all,
                ..c
            },
            Preset::Fig17 => ExperimentConfig {
                eb_dbj: eb_sweep(-170, -164, 1),
                sweep: Some(SweepVar::SigmaX),
                sweep_values: vec![0.0, 0.1, 0.3, 0.5],
                schemes: proposed,
                ..c
            },
            Preset::Fig18 => ExperimentConfig {
                eb_dbj: eb_sweep(-170, -164, 1),
                csi_a: 1.25,
                sweep: Some(SweepVar::CsiB),
                sweep_values: vec![0.0, 0.25, 0.5],
                schemes: proposed,
                ..c
            },
            Preset::Exit => ExperimentConfig {
                eb_dbj: vec![-168.0, -166.0, -164.0],
                schemes: vec![ProposedGrouped],
                trials: 1,
                ..c
            },
            Preset::Full => ExperimentConfig {
                eb_dbj: eb_sweep(-174, -164, 1),
                schemes: all,
                trials: 10_000,
                ..c
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.tag() == s).ok_or_else(|| Error::ConfigField {
            field: "preset".into(),
            reason: format!("unknown preset `{s}`"),
        })
    }
}
