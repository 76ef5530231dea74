//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::analysis::ExitChart;
use crate::error::Result;

use super::config::ExperimentConfig;
use super::run::{PointResult, SchemeTally};

pub const SCHEMA: &str = "# schema=1";
pub const RESULT_HEADER: &str = "scheme,seed,eb_dbj,sweep_var,sweep_value,trials,metric,index,value";
pub const BELIEF_HEADER: &str = "scheme,seed,eb_dbj,sweep_var,sweep_value,user,window,u,delta2,upsilon,phi2,nu,zeta2";

/// One metric value with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub scheme: String,
    pub seed: u64,
    pub eb_dbj: f64,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub trials: usize,
    pub metric: String,
    pub index: usize,
    pub value: f64,
}

impl MetricRow {
    fn write(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.seed,
            self.eb_dbj,
            self.sweep_var,
            self.sweep_value,
            self.trials,
            self.metric,
            self.index,
            self.value
        );
    }
}

fn tally_metrics(t: &SchemeTally) -> Vec<(&'static str, usize, f64)> {
    let mut m = vec![
        ("ber", 0, t.ber.rate()),
        ("bit_errors", 0, t.ber.errors as f64),
        ("bits", 0, t.ber.bits as f64),
        ("frames_sent", 0, t.frames_sent as f64),
        ("miss_rate", 0, t.miss_rate()),
        ("false_alarm_rate", 0, t.false_alarm_rate()),
        ("detected_bits_per_frame", 0, t.detected_bits_per_frame()),
    ];
    for (i, e) in t.ber_iter.iter().enumerate() {
        m.push(("ber_iter", i + 1, e.rate()));
    }
    if t.llr_trials > 0 {
        for (i, s) in t.abs_llr_iter.iter().enumerate() {
            m.push(("mean_abs_llr", i + 1, s / t.llr_trials as f64));
        }
    }
    m
}

/// Flattens point results into rows, scheme-major within each point.
pub fn result_rows(config: &ExperimentConfig, points: &[PointResult]) -> Vec<MetricRow> {
    let sweep_var = config.sweep.map_or("eb_dbj", |v| v.tag());
    let mut rows = Vec::new();
    for p in points {
        let sweep_value = p.sweep_value.unwrap_or(p.eb_dbj);
        for (scheme, t) in &p.schemes {
            let mut push = |metric: &str, index: usize, value: f64| {
                rows.push(MetricRow {
                    scheme: scheme.tag().into(),
                    seed: config.seed,
                    eb_dbj: p.eb_dbj,
                    sweep_var: sweep_var.into(),
                    sweep_value,
                    trials: p.trials,
                    metric: metric.into(),
                    index,
                    value,
                });
            };
            for (m, i, v) in tally_metrics(t) {
                push(m, i, v);
            }
            if scheme.is_proposed() {
                push("mse", 0, t.mse());
                push("crlb", 0, p.crlb);
                push("sync_time_mean", 0, t.mean_sync_time());
                push("sync_time_min", 0, t.sync_time_min.map_or(f64::NAN, |v| v as f64));
                push("sync_censored", 0, t.sync_censored as f64);
                push("collisions", 0, t.collisions as f64);
            }
        }
    }
    rows
}

/// Rows describing an EXIT chart.
pub fn exit_rows(config: &ExperimentConfig, eb_dbj: f64, chart: &ExitChart) -> Vec<MetricRow> {
    let row = |metric: &str, index: usize, value: f64| MetricRow {
        scheme: "proposed_grouped".into(),
        seed: config.seed,
        eb_dbj,
        sweep_var: "eb_dbj".into(),
        sweep_value: eb_dbj,
        trials: 1,
        metric: metric.into(),
        index,
        value,
    };
    let mut rows = Vec::new();
    for (i, ((&g, &d), &c)) in chart.grid.iter().zip(&chart.detector).zip(&chart.decoder).enumerate() {
        rows.push(row("exit_ia", i, g));
        rows.push(row("exit_detector_ie", i, d));
        rows.push(row("exit_decoder_ie", i, c));
    }
    for (i, &(x, y)) in chart.trajectory.iter().enumerate() {
        rows.push(row("trajectory_x", i, x));
        rows.push(row("trajectory_y", i, y));
    }
    rows.push(row("converged_after", 0, chart.converged_after.map_or(f64::NAN, |v| v as f64)));
    rows
}

pub fn results_csv(rows: &[MetricRow]) -> String {
    let mut s = format!("{SCHEMA}\n{RESULT_HEADER}\n");
    for r in rows {
        r.write(&mut s);
    }
    s
}

pub fn beliefs_csv(config: &ExperimentConfig, points: &[PointResult]) -> String {
    let mut s = format!("{SCHEMA}\n{BELIEF_HEADER}\n");
    let sweep_var = config.sweep.map_or("eb_dbj", |v| v.tag());
    let scheme = config.schemes.iter().find(|s| s.is_proposed()).map_or("", |s| s.tag());
    for p in points {
        for b in &p.beliefs {
            let _ = writeln!(
                s,
                "{scheme},{},{},{sweep_var},{},{},{},{},{},{},{},{},{}",
                config.seed,
                p.eb_dbj,
                p.sweep_value.unwrap_or(p.eb_dbj),
                b.user,
                b.window,
                b.u,
                b.delta2,
                b.upsilon,
                b.phi2,
                b.nu,
                b.zeta2
            );
        }
    }
    s
}

/// Hex SHA-256 of the canonical config text.
pub fn config_hash(config: &ExperimentConfig) -> String {
    Sha256::digest(config.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest(config: &ExperimentConfig, preset: &str, files: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "preset = {preset}");
    let _ = writeln!(s, "seed = {}", config.seed);
    let _ = writeln!(s, "config_sha256 = {}", config_hash(config));
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "files = {}", files.join(","));
    s.push_str("\n# config\n");
    s.push_str(&config.to_text());
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}
