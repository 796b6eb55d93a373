//! Report records.
//!
//! The machine-readable form is JSON lines: one `{"record": "session", ...}`
//! object per session followed by one `{"record": "network", ...}` summary.
//! Field names are part of the file format and must not change.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::{QberEstimate, Receiver};
use crate::protocol::SessionStatus;
use crate::simulator::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCounts {
    pub pulses: u64,
    pub clicks: u64,
    pub sifted: u64,
    /// Mismatches over the whole sifted key (simulation ground truth).
    pub sifted_errors: u64,
    pub disclosed: u64,
    pub disclosed_errors: u64,
    pub key_bits: u64,
    pub signal_clicks: u64,
    pub dark_clicks: u64,
    pub crosstalk_clicks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub src: String,
    pub dst: String,
    pub wavelength_nm: f64,
    pub status: SessionStatus,
    pub counts: SessionCounts,
    /// Error fraction over the full sifted key; absent when nothing was sifted.
    pub qber_measured: Option<f64>,
    /// Estimate from the disclosed sample, which drives the abort rule.
    pub qber_estimate: Option<f64>,
    pub qber_analytic: QberEstimate,
    pub click_rate_measured: f64,
    pub click_rate_analytic: f64,
    pub sifted_key_rate_bps: f64,
    pub path_loss_db: f64,
    pub transmittance: f64,
    pub crosstalk_ratio: f64,
    pub crosstalk_click_prob: f64,
    pub excess_error: f64,
    pub repetition_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub scenario: String,
    pub mode: Mode,
    pub master_seed: u64,
    pub pulse_count: u64,
    pub receiver: Receiver,
    pub rate_basis: String,
    pub sessions: Vec<SessionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDelta {
    pub session_id: String,
    pub qber_single: f64,
    pub qber_concentration: f64,
    pub delta_qber: f64,
    pub sigma_qber: f64,
    pub delta_rate_bps: f64,
    pub sigma_rate_bps: f64,
    pub anomaly: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub rows: Vec<ModeDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkSummary {
    scenario: String,
    mode: Mode,
    master_seed: u64,
    pulse_count: u64,
    receiver: Receiver,
    rate_basis: String,
    session_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Session(SessionReport),
    Network(NetworkSummary),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("report has no network summary record")]
    MissingSummary,
    #[error("summary announces {expected} sessions, found {found}")]
    SessionCount { expected: usize, found: usize },
}

pub fn to_json_lines(report: &NetworkReport) -> String {
    let mut out = String::new();
    for s in &report.sessions {
        out.push_str(&serde_json::to_string(&Record::Session(s.clone())).expect("report records serialise"));
        out.push('\n');
    }
    let summary = NetworkSummary {
        scenario: report.scenario.clone(),
        mode: report.mode,
        master_seed: report.master_seed,
        pulse_count: report.pulse_count,
        receiver: report.receiver,
        rate_basis: report.rate_basis.clone(),
        session_count: report.sessions.len(),
    };
    out.push_str(&serde_json::to_string(&Record::Network(summary)).expect("report records serialise"));
    out.push('\n');
    out
}

pub fn from_json_lines(text: &str) -> Result<NetworkReport, ReportError> {
    let mut sessions = Vec::new();
    let mut summary = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line).map_err(|source| ReportError::Json { line: i + 1, source })?;
        match record {
            Record::Session(s) => sessions.push(s),
            Record::Network(n) => summary = Some(n),
        }
    }
    let n = summary.ok_or(ReportError::MissingSummary)?;
    if n.session_count != sessions.len() {
        return Err(ReportError::SessionCount {
            expected: n.session_count,
            found: sessions.len(),
        });
    }
    Ok(NetworkReport {
        scenario: n.scenario,
        mode: n.mode,
        master_seed: n.master_seed,
        pulse_count: n.pulse_count,
        receiver: n.receiver,
        rate_basis: n.rate_basis,
        sessions,
    })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |q| format!("{:.2}%", 100.0 * q))
}

/// Human-readable table.
pub fn render_table(report: &NetworkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {}  mode {}  seed {}  pulses {}",
        report.scenario, report.mode, report.master_seed, report.pulse_count
    );
    let _ = writeln!(
        out,
        "{:<8} {:>7} {:>8} {:>9} {:>9} {:>9} {:>9} {:>10} {:>10} {:>10}",
        "session", "nm", "loss dB", "clicks", "sifted", "QBER sim", "QBER est", "QBER model", "xtalk", "sift bps"
    );
    for s in &report.sessions {
        let _ = writeln!(
            out,
            "{:<8} {:>7.0} {:>8.2} {:>9} {:>9} {:>9} {:>9} {:>10} {:>10.2e} {:>10.2}  {:?}",
            s.session_id,
            s.wavelength_nm,
            s.path_loss_db,
            s.counts.clicks,
            s.counts.sifted,
            pct(s.qber_measured),
            pct(s.qber_estimate),
            pct(Some(s.qber_analytic.total)),
            s.crosstalk_ratio,
            s.sifted_key_rate_bps,
            s.status,
        );
    }
    let _ = writeln!(out, "note: {}", report.rate_basis);
    out
}

pub fn render_comparison(cmp: &ModeComparison) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>9} {:>9} {:>9} {:>8} {:>10} {:>8}",
        "session", "single", "concent.", "dQBER", "sigma", "d bps", "flag"
    );
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{:<8} {:>9} {:>9} {:>8.3}pp {:>6.3}pp {:>10.3} {:>8}",
            r.session_id,
            pct(Some(r.qber_single)),
            pct(Some(r.qber_concentration)),
            100.0 * r.delta_qber,
            100.0 * r.sigma_qber,
            r.delta_rate_bps,
            if r.anomaly { "ANOMALY" } else { "ok" },
        );
    }
    out
}
