//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::FrameLayout;
use crate::model::{GainReference, PhysicalParams};
use crate::sync::SyncParams;

/// Detection schemes a run can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    ProposedGrouped,
    ProposedUngrouped,
    PerfectSync,
    WithoutSync,
    Mmse,
    GaussianApprox,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::ProposedGrouped,
        Scheme::ProposedUngrouped,
        Scheme::PerfectSync,
        Scheme::WithoutSync,
        Scheme::Mmse,
        Scheme::GaussianApprox,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::ProposedGrouped => "proposed_grouped",
            Scheme::ProposedUngrouped => "proposed_ungrouped",
            Scheme::PerfectSync => "perfect_sync",
            Scheme::WithoutSync => "without_sync",
            Scheme::Mmse => "mmse",
            Scheme::GaussianApprox => "gaussian_approx",
        }
    }

    pub fn is_proposed(&self) -> bool {
        matches!(self, Scheme::ProposedGrouped | Scheme::ProposedUngrouped)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.tag() == s)
            .ok_or_else(|| field_err("schemes", format!("unknown scheme `{s}`")))
    }
}

/// Parameter swept in addition to the bit energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Users,
    Alpha,
    DelayMax,
    EnbDbj,
    SigmaX,
    CsiB,
}

impl SweepVar {
    pub const ALL: [SweepVar; 6] = [
        SweepVar::Users,
        SweepVar::Alpha,
        SweepVar::DelayMax,
        SweepVar::EnbDbj,
        SweepVar::SigmaX,
        SweepVar::CsiB,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            SweepVar::Users => "users",
            SweepVar::Alpha => "alpha",
            SweepVar::DelayMax => "delay_max",
            SweepVar::EnbDbj => "enb_dbj",
            SweepVar::SigmaX => "sigma_x",
            SweepVar::CsiB => "csi_b",
        }
    }

    /// Copy of `config` with this parameter set to `value`.
    pub fn apply(&self, config: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut c = config.clone();
        match self {
            SweepVar::Users => c.users = value as usize,
            SweepVar::Alpha => c.alpha = value,
            SweepVar::DelayMax => c.delay_max = value,
            SweepVar::EnbDbj => {
                c.enb_dbj = value;
                c.n_b = None;
            }
            SweepVar::SigmaX => c.sigma_x = value,
            SweepVar::CsiB => c.csi_b = value,
        }
        c.sweep = None;
        c.sweep_values.clear();
        c
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepVar::ALL
            .into_iter()
            .find(|x| x.tag() == s)
            .ok_or_else(|| field_err("sweep", format!("cannot sweep `{s}`")))
    }
}

/// Everything that defines one Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub users: usize,
    pub groups: usize,
    pub layout: FrameLayout,
    /// Bit energy sweep (dBJ).
    pub eb_dbj: Vec<f64>,
    /// Background energy per slot (dBJ); ignored when `n_b` is set.
    pub enb_dbj: f64,
    /// Background photons per slot, overriding `enb_dbj`.
    pub n_b: Option<f64>,
    pub sigma_x: f64,
    pub alpha: f64,
    pub eps_p: f64,
    pub eps_q: f64,
    pub t_in: usize,
    pub t_out: usize,
    /// Relaxation of the iterative detector's channel LLRs.
    pub damping: f64,
    pub dedup_radius: usize,
    /// Largest mean user delay as a fraction of the frame length.
    pub delay_max: f64,
    /// Per-trial delay jitter standard deviation (slots).
    pub delay_std: f64,
    pub csi_a: f64,
    pub csi_b: f64,
    pub trials: usize,
    /// Frames per user and trial.
    pub frames: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub eta: f64,
    pub tau: f64,
    pub freq: f64,
    pub attenuation: f64,
    pub distance_min: f64,
    pub distance_max: f64,
    pub gain_reference: GainReference,
    /// Secondary parameter; every value in `sweep_values` runs the whole
    /// `eb_dbj` list.
    pub sweep: Option<SweepVar>,
    pub sweep_values: Vec<f64>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let phys = PhysicalParams::default();
        Self {
            users: 10,
            groups: 2,
            layout: FrameLayout::default(),
            eb_dbj: vec![-170.0, -168.0, -166.0, -164.0],
            enb_dbj: -165.0,
            n_b: None,
            sigma_x: 0.0,
            alpha: 0.5,
            eps_p: 0.75,
            eps_q: 0.3,
            t_in: 4,
            t_out: 12,
            damping: crate::mud::DEFAULT_DAMPING,
            dedup_radius: 2,
            delay_max: 0.5,
            delay_std: 0.0,
            csi_a: 1.0,
            csi_b: 0.0,
            trials: 250,
            frames: 4,
            seed: 1,
            schemes: vec![Scheme::ProposedGrouped, Scheme::PerfectSync],
            eta: phys.eta,
            tau: phys.tau,
            freq: phys.freq,
            attenuation: phys.attenuation,
            distance_min: 5.0,
            distance_max: 45.0,
            gain_reference: GainReference::Received,
            sweep: None,
            sweep_values: Vec::new(),
            output: None,
        }
    }
}

fn field_err(field: &str, reason: impl Into<String>) -> Error {
    Error::ConfigField {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| field_err(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

fn fmt_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_over(Self::default(), text)
    }

    /// Like [`parse`](Self::parse) with keys applied over `base`.
    pub fn parse_over(base: Self, text: &str) -> Result<Self> {
        let mut cfg = base;
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::ConfigSyntax {
                    line: i + 1,
                    reason: format!("duplicate key `{key}`"),
                });
            }
            seen.push(key.to_string());
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Assigns one field from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "users" => self.users = parse_num(key, v)?,
            "groups" => self.groups = parse_num(key, v)?,
            "data_bits" => self.layout.l_b = parse_num(key, v)?,
            "chips_per_bit" => self.layout.n_c = parse_num(key, v)?,
            "vp_chips" => self.layout.l_q = parse_num(key, v)?,
            "sp_length" => self.layout.l_p = parse_num(key, v)?,
            "guard" => self.layout.l_g = parse_num(key, v)?,
            "eb_dbj" => self.eb_dbj = parse_list(key, v)?,
            "enb_dbj" => self.enb_dbj = parse_num(key, v)?,
            "n_b" => self.n_b = Some(parse_num(key, v)?),
            "sigma_x" => self.sigma_x = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "eps_p" => self.eps_p = parse_num(key, v)?,
            "eps_q" => self.eps_q = parse_num(key, v)?,
            "t_in" => self.t_in = parse_num(key, v)?,
            "t_out" => self.t_out = parse_num(key, v)?,
            "damping" => self.damping = parse_num(key, v)?,
            "dedup_radius" => self.dedup_radius = parse_num(key, v)?,
            "delay_max" => self.delay_max = parse_num(key, v)?,
            "delay_std" => self.delay_std = parse_num(key, v)?,
            "csi_a" => self.csi_a = parse_num(key, v)?,
            "csi_b" => self.csi_b = parse_num(key, v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "frames" => self.frames = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "schemes" => self.schemes = parse_list(key, v)?,
            "eta" => self.eta = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "freq" => self.freq = parse_num(key, v)?,
            "attenuation" => self.attenuation = parse_num(key, v)?,
            "distance_min" => self.distance_min = parse_num(key, v)?,
            "distance_max" => self.distance_max = parse_num(key, v)?,
            "gain_reference" => {
                self.gain_reference = match v {
                    "received" => GainReference::Received,
                    "transmit" => GainReference::Transmit,
                    _ => return Err(field_err(key, format!("expected `received` or `transmit`, got `{v}`"))),
                }
            }
            "sweep" => self.sweep = Some(v.parse()?),
            "sweep_values" => self.sweep_values = parse_list(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            _ => return Err(field_err(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| if ok { Ok(()) } else { Err(field_err(field, reason)) };
        check(self.users >= 1, "users", "must be at least 1")?;
        check(self.groups >= 1 && self.groups <= self.users, "groups", "must be in [1, users]")?;
        self.layout.validate()?;
        check(!self.eb_dbj.is_empty(), "eb_dbj", "must list at least one value")?;
        check(self.eb_dbj.iter().all(|x| x.is_finite()), "eb_dbj", "must be finite")?;
        check(self.n_b.is_none_or(|n| n >= 0.0), "n_b", "must be non-negative")?;
        check(self.sigma_x >= 0.0, "sigma_x", "must be non-negative")?;
        check((0.0..=1.0).contains(&self.alpha), "alpha", "must be in [0, 1]")?;
        check(self.eps_p > 0.0 && self.eps_p < 1.0, "eps_p", "must be in (0, 1)")?;
        check(self.eps_q > 0.0 && self.eps_q < 1.0, "eps_q", "must be in (0, 1)")?;
        check(self.t_in >= 1, "t_in", "must be at least 1")?;
        check((0.0..1.0).contains(&self.damping), "damping", "must be in [0, 1)")?;
        check((0.0..=1.0).contains(&self.delay_max), "delay_max", "must be in [0, 1]")?;
        check(self.delay_std >= 0.0, "delay_std", "must be non-negative")?;
        check(self.csi_b >= 0.0, "csi_b", "must be non-negative")?;
        check(self.trials >= 1, "trials", "must be at least 1")?;
        check(self.frames >= 1, "frames", "must be at least 1")?;
        check(!self.schemes.is_empty(), "schemes", "must list at least one scheme")?;
        check(self.distance_min >= 0.0 && self.distance_max >= self.distance_min, "distance_max", "must be ≥ distance_min ≥ 0")?;
        check(
            self.sweep.is_some() == !self.sweep_values.is_empty(),
            "sweep_values",
            "must be given exactly when `sweep` is set",
        )?;
        if let Some(var) = self.sweep {
            for &v in &self.sweep_values {
                let c = var.apply(self, v);
                c.validate()?;
            }
        }
        self.physical().validate()
    }

    /// Physical parameters with the background level resolved.
    pub fn physical(&self) -> PhysicalParams {
        let mut p = PhysicalParams {
            eta: self.eta,
            tau: self.tau,
            freq: self.freq,
            attenuation: self.attenuation,
            sigma_x: self.sigma_x,
            ..PhysicalParams::default()
        };
        p.n_b = self.n_b.unwrap_or_else(|| p.photons_from_dbj(self.enb_dbj));
        p
    }

    pub fn n_s(&self, eb_dbj: f64) -> f64 {
        self.physical().photons_from_dbj(eb_dbj)
    }

    pub fn n_b(&self) -> f64 {
        self.physical().n_b
    }

    pub fn sync_params(&self) -> SyncParams {
        SyncParams {
            eps_p: self.eps_p,
            eps_q: self.eps_q,
            t_in: self.t_in,
            dedup_radius: self.dedup_radius,
        }
    }

    /// Largest mean delay in slots.
    pub fn delay_max_slots(&self) -> f64 {
        self.delay_max * (self.layout.l_s() - 1) as f64
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let l = &self.layout;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("users", self.users.to_string());
        kv("groups", self.groups.to_string());
        kv("data_bits", l.l_b.to_string());
        kv("chips_per_bit", l.n_c.to_string());
        kv("vp_chips", l.l_q.to_string());
        kv("sp_length", l.l_p.to_string());
        kv("guard", l.l_g.to_string());
        kv("eb_dbj", fmt_list(&self.eb_dbj));
        kv("enb_dbj", self.enb_dbj.to_string());
        if let Some(n) = self.n_b {
            kv("n_b", n.to_string());
        }
        kv("sigma_x", self.sigma_x.to_string());
        kv("alpha", self.alpha.to_string());
        kv("eps_p", self.eps_p.to_string());
        kv("eps_q", self.eps_q.to_string());
        kv("t_in", self.t_in.to_string());
        kv("t_out", self.t_out.to_string());
        kv("damping", self.damping.to_string());
        kv("dedup_radius", self.dedup_radius.to_string());
        kv("delay_max", self.delay_max.to_string());
        kv("delay_std", self.delay_std.to_string());
        kv("csi_a", self.csi_a.to_string());
        kv("csi_b", self.csi_b.to_string());
        kv("trials", self.trials.to_string());
        kv("frames", self.frames.to_string());
        kv("seed", self.seed.to_string());
        kv("schemes", self.schemes.iter().map(|s| s.tag()).collect::<Vec<_>>().join(","));
        kv("eta", self.eta.to_string());
        kv("tau", self.tau.to_string());
        kv("freq", self.freq.to_string());
        kv("attenuation", self.attenuation.to_string());
        kv("distance_min", self.distance_min.to_string());
        kv("distance_max", self.distance_max.to_string());
        kv(
            "gain_reference",
            match self.gain_reference {
                GainReference::Received => "received".into(),
                GainReference::Transmit => "transmit".into(),
            },
        );
        if let Some(v) = self.sweep {
            kv("sweep", v.tag().into());
            kv("sweep_values", fmt_list(&self.sweep_values));
        }
        if let Some(o) = &self.output {
            kv("output", o.display().to_string());
        }
        s
    }
}

/// Same experiment with every user sharing a single pilot.
pub fn ungrouped_mode(config: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        groups: 1,
        ..config.clone()
    }
}
