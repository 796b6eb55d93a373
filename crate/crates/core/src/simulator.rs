//! Multi-session Monte-Carlo runs over a planned network.
//!
//! In single mode each session runs alone. In concentration mode the listed
//! sessions run simultaneously and every session picks up leaked light from
//! the others through the router's finite isolation. Crosstalk enters as a
//! static click-probability addend computed once per scenario.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoy::{self, DecoyChannel, DecoyError, IntensityPair, KeyRateReport};
use crate::optics::{
    self, Aggressor, ChannelModel, DetectorModel, FiberLink, FiberPath, LinkBudget, OpticsError, Receiver,
    SessionDescriptor, SourceModel,
};
use crate::protocol::{self, LinkPhysics, PhaseSymbol, ProtocolError, SessionConfig, SessionState};
use crate::report::{ModeComparison, ModeDelta, NetworkReport, SessionCounts, SessionReport};
use crate::topology::{NodeId, NodePair, RouterSpec};

/// Anomaly threshold for mode deltas, in standard errors.
pub const ANOMALY_SIGMAS: f64 = 5.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Configuration(Vec<String>),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("reports are not comparable: {0}")]
    Comparison(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Single,
    Concentration,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Concentration => "concentration",
        })
    }
}

/// Physics of one node pair's quantum link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub visibility: f64,
    pub detector: DetectorModel,
    pub source: SourceModel,
    /// Measured end-to-end path loss, router included.
    pub measured_loss_db: Option<f64>,
    pub excess_loss_db: f64,
    pub excess_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub nodes: Vec<NodeId>,
    pub fibers: Vec<FiberLink>,
    pub router: RouterSpec,
    pub receiver: Receiver,
    pub links: BTreeMap<NodePair, LinkParams>,
    /// Directed (src, dst) sessions for single mode.
    pub sessions: Vec<(usize, usize)>,
    /// Sessions active together in concentration mode.
    pub concentration_sessions: Vec<(usize, usize)>,
    pub mode: Mode,
    pub pulse_count: u64,
    pub master_seed: u64,
    pub disclose_fraction: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let mut v = Vec::new();
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.index != i {
                v.push(format!("node '{}' has index {} at position {i}", node.label, node.index));
            }
        }
        if self.fibers.len() != n {
            v.push(format!("{} access fibres for {n} nodes", self.fibers.len()));
        }
        if self.router.n_ports() != n {
            v.push(format!("router has {} ports for {n} nodes", self.router.n_ports()));
        }
        if self.pulse_count == 0 {
            v.push("pulse_count must be > 0".into());
        }
        if !(self.disclose_fraction > 0.0 && self.disclose_fraction <= 1.0) {
            v.push(format!("disclose_fraction {} outside (0, 1]", self.disclose_fraction));
        }
        for &(s, d) in self.sessions.iter().chain(&self.concentration_sessions) {
            if s >= n || d >= n {
                v.push(format!("session {s}->{d} names an unknown node"));
                continue;
            }
            let Some(pair) = NodePair::new(s, d) else {
                v.push(format!("session {s}->{s} routes a node to itself"));
                continue;
            };
            let label = format!("{}-{}", self.nodes[s].label, self.nodes[d].label);
            if self.router.plan().color(s, d).is_none() {
                v.push(format!("session {label} has no channel in the plan"));
            }
            if !self.links.contains_key(&pair) {
                v.push(format!("session {label} has no link physics"));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(SimError::Configuration(v))
        }
    }

    pub fn session_id(&self, src: usize, dst: usize) -> String {
        format!("{}-{}", self.nodes[src].label, self.nodes[dst].label)
    }

    pub fn active_sessions(&self) -> &[(usize, usize)] {
        match self.mode {
            Mode::Single => &self.sessions,
            Mode::Concentration => &self.concentration_sessions,
        }
    }

    pub fn link(&self, src: usize, dst: usize) -> Result<&LinkParams, SimError> {
        NodePair::new(src, dst)
            .and_then(|p| self.links.get(&p))
            .ok_or_else(|| SimError::Configuration(vec![format!("no link physics for {}", self.session_id(src, dst))]))
    }

    fn color(&self, src: usize, dst: usize) -> Result<usize, SimError> {
        self.router
            .plan()
            .color(src, dst)
            .ok_or_else(|| SimError::Configuration(vec![format!("no channel for {}", self.session_id(src, dst))]))
    }

    pub fn link_budget(&self, src: usize, dst: usize) -> Result<LinkBudget, SimError> {
        let link = self.link(src, dst)?;
        let path = match link.measured_loss_db {
            Some(measured_loss_db) => FiberPath::Composite { measured_loss_db },
            None => FiberPath::Legs(self.fibers[src], self.fibers[dst]),
        };
        let color = self.color(src, dst)?;
        Ok(optics::link_budget(&path, &self.router, src, dst, color, link.excess_loss_db)?)
    }

    pub fn channel_model(&self, src: usize, dst: usize) -> Result<ChannelModel, SimError> {
        let link = self.link(src, dst)?;
        Ok(ChannelModel {
            transmittance: self.link_budget(src, dst)?.transmittance,
            visibility: link.visibility,
            detector: link.detector,
            source: link.source,
            receiver: self.receiver,
        })
    }

    /// Crosstalk ratio at the victim session's detector from the other
    /// sessions active in the current mode.
    pub fn crosstalk_ratio(&self, victim: (usize, usize)) -> Result<f64, SimError> {
        if self.mode == Mode::Single {
            return Ok(0.0);
        }
        let (vs, vd) = victim;
        let victim_budget = self.link_budget(vs, vd)?;
        let victim_desc = SessionDescriptor {
            channel: self.color(vs, vd)?,
            mean_photon_number: self.link(vs, vd)?.source.mean_photon_number,
        };
        let mut aggressors = Vec::new();
        for &(s, d) in self.active_sessions() {
            if (s, d) == victim {
                continue;
            }
            // Leaked light follows the aggressor's source fibre and the
            // victim's destination fibre; the router term is the isolation.
            let leak_fiber = (victim_budget.fiber_loss_db - self.fibers[vs].loss_db() + self.fibers[s].loss_db()).max(0.0);
            aggressors.push(Aggressor {
                session: SessionDescriptor {
                    channel: self.color(s, d)?,
                    mean_photon_number: self.link(s, d)?.source.mean_photon_number,
                },
                leak_path: LinkBudget::from_parts(leak_fiber, 0.0, victim_budget.excess_loss_db)?,
            });
        }
        Ok(optics::crosstalk_ratio(&self.router, &victim_desc, &victim_budget, &aggressors)?)
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }
}

/// Mean per-pulse click probability with uniform sender and receiver phases.
pub fn analytic_click_rate(physics: &LinkPhysics) -> f64 {
    let mut sum = 0.0;
    for s in PhaseSymbol::ALL {
        for r in PhaseSymbol::ALL {
            sum += protocol::click_probability(s, r, physics);
        }
    }
    sum / 16.0
}

struct Prepared {
    config: SessionConfig,
    model: ChannelModel,
    budget: LinkBudget,
    xtalk_ratio: f64,
}

fn prepare(scenario: &Scenario, (src, dst): (usize, usize)) -> Result<Prepared, SimError> {
    let link = scenario.link(src, dst)?;
    let model = scenario.channel_model(src, dst)?;
    let budget = scenario.link_budget(src, dst)?;
    let xtalk_ratio = scenario.crosstalk_ratio((src, dst))?;
    let color = scenario.color(src, dst)?;
    let physics = LinkPhysics {
        mean_photon_number: link.source.mean_photon_number,
        transmittance: budget.transmittance,
        efficiency: link.detector.efficiency,
        visibility: link.visibility,
        dark_count_prob: link.detector.dark_count_prob_per_gate,
        crosstalk_click_prob: model.crosstalk_click_prob(xtalk_ratio),
        excess_error: link.excess_error,
    };
    Ok(Prepared {
        config: SessionConfig {
            session_id: scenario.session_id(src, dst),
            src: scenario.nodes[src].clone(),
            dst: scenario.nodes[dst].clone(),
            channel: scenario.router.channel(color).expect("plan colours lie on the grid"),
            physics,
            pulse_count: scenario.pulse_count,
            master_seed: scenario.master_seed,
            disclose_fraction: scenario.disclose_fraction,
        },
        model,
        budget,
        xtalk_ratio,
    })
}

fn session_report(p: &Prepared, state: &SessionState) -> Result<SessionReport, SimError> {
    let physics = &p.config.physics;
    let analytic = optics::qber_model(&p.model, p.xtalk_ratio, physics.excess_error)?;
    let pulses = state.pulses_sent;
    let sifted = state.sifted.len() as u64;
    let rep = p.model.source.repetition_rate_hz;
    Ok(SessionReport {
        session_id: state.session_id.clone(),
        src: state.src.label.clone(),
        dst: state.dst.label.clone(),
        wavelength_nm: state.channel.wavelength_nm,
        status: state.status,
        counts: SessionCounts {
            pulses,
            clicks: state.clicks,
            sifted,
            sifted_errors: state.sifted.mismatches() as u64,
            disclosed: state.qber_sample.map_or(0, |q| q.disclosed_count),
            disclosed_errors: state.qber_sample.map_or(0, |q| q.error_count),
            key_bits: state.key.len() as u64,
            signal_clicks: state.click_causes.signal,
            dark_clicks: state.click_causes.dark,
            crosstalk_clicks: state.click_causes.crosstalk,
        },
        qber_measured: state.sifted_qber(),
        qber_estimate: state.qber_sample.map(|q| q.estimate),
        qber_analytic: analytic,
        click_rate_measured: state.clicks as f64 / pulses as f64,
        click_rate_analytic: analytic_click_rate(physics),
        sifted_key_rate_bps: sifted as f64 / pulses as f64 * rep,
        path_loss_db: p.budget.total_db,
        transmittance: p.budget.transmittance,
        crosstalk_ratio: p.xtalk_ratio,
        crosstalk_click_prob: physics.crosstalk_click_prob,
        excess_error: physics.excess_error,
        repetition_rate_hz: rep,
    })
}

pub fn rate_basis_label(repetition_rate_hz: f64) -> String {
    format!("sifted-key rates assume a {repetition_rate_hz} Hz pulse repetition rate with one gate per pulse")
}

/// Runs every session active in the scenario's mode.
///
/// Sessions execute in parallel; each owns its random stream, and reports
/// are ordered by session id, so the result does not depend on scheduling.
pub fn run_scenario(scenario: &Scenario) -> Result<NetworkReport, SimError> {
    scenario.validate()?;
    let prepared = scenario
        .active_sessions()
        .iter()
        .map(|&s| prepare(scenario, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sessions = prepared
        .par_iter()
        .map(|p| {
            let state = protocol::run_session(&p.config)?;
            session_report(p, &state)
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));

    let rep = prepared
        .first()
        .map_or(1e6, |p| p.model.source.repetition_rate_hz);
    Ok(NetworkReport {
        scenario: scenario.name.clone(),
        mode: scenario.mode,
        master_seed: scenario.master_seed,
        pulse_count: scenario.pulse_count,
        receiver: scenario.receiver,
        rate_basis: rate_basis_label(rep),
        sessions,
    })
}

/// Same session run in the same scenario under two modes, compared link by link.
pub fn compare_modes(single: &NetworkReport, concentration: &NetworkReport) -> Result<ModeComparison, SimError> {
    if single.scenario != concentration.scenario
        || single.master_seed != concentration.master_seed
        || single.pulse_count != concentration.pulse_count
    {
        return Err(SimError::Comparison(format!(
            "scenario/seed/pulse count differ: ({}, {}, {}) vs ({}, {}, {})",
            single.scenario,
            single.master_seed,
            single.pulse_count,
            concentration.scenario,
            concentration.master_seed,
            concentration.pulse_count
        )));
    }
    let mut rows = Vec::new();
    for a in &single.sessions {
        let Some(b) = concentration.sessions.iter().find(|b| b.session_id == a.session_id) else {
            continue;
        };
        let (Some(qa), Some(qb)) = (a.qber_measured, b.qber_measured) else {
            continue;
        };
        let var = |q: f64, n: u64| q * (1.0 - q) / n as f64;
        let sigma_qber = (var(qa, a.counts.sifted) + var(qb, b.counts.sifted)).sqrt();
        let pulses = a.counts.pulses as f64;
        let sigma_rate = a.repetition_rate_hz * ((a.counts.sifted + b.counts.sifted) as f64).sqrt() / pulses;
        let delta_qber = qb - qa;
        let delta_rate_bps = b.sifted_key_rate_bps - a.sifted_key_rate_bps;
        let anomaly = |d: f64, s: f64| if s > 0.0 { d.abs() > ANOMALY_SIGMAS * s } else { d != 0.0 };
        rows.push(ModeDelta {
            session_id: a.session_id.clone(),
            qber_single: qa,
            qber_concentration: qb,
            delta_qber,
            sigma_qber,
            delta_rate_bps,
            sigma_rate_bps: sigma_rate,
            anomaly: anomaly(delta_qber, sigma_qber) || anomaly(delta_rate_bps, sigma_rate),
        });
    }
    Ok(ModeComparison { rows })
}

/// Outcome of a decoy-state analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoyOutcome {
    Key(KeyRateReport),
    /// No secure key; the report is present when the bounds were computable.
    NoKey { reason: String, report: Option<KeyRateReport> },
}

/// Channel seen by decoy pulses on a link, from the calibrated model.
pub fn decoy_channel(scenario: &Scenario, src: usize, dst: usize) -> Result<DecoyChannel, SimError> {
    let link = scenario.link(src, dst)?;
    let model = scenario.channel_model(src, dst)?;
    Ok(DecoyChannel {
        transmittance: model.transmittance,
        efficiency: link.detector.efficiency * scenario.receiver.port_fraction(),
        dark_count_prob: link.detector.dark_count_prob_per_gate,
        visibility_error: optics::visibility_error(link.visibility)?,
        excess_error: link.excess_error,
    })
}

/// Generates signal and decoy observables from the link model, bounds the
/// single-photon contribution and computes the secure key rate.
pub fn analyze_decoy(
    scenario: &Scenario,
    src: usize,
    dst: usize,
    intensities: &IntensityPair,
    sifting_factor: f64,
    f_ec: f64,
) -> Result<DecoyOutcome, SimError> {
    let channel = decoy_channel(scenario, src, dst)?;
    let rep = scenario.link(src, dst)?.source.repetition_rate_hz;
    let invalid = |e: DecoyError| SimError::Configuration(vec![e.to_string()]);
    let obs = match decoy::observables_for(&channel, intensities) {
        Ok(o) => o,
        Err(e) => {
            return Ok(DecoyOutcome::NoKey {
                reason: format!("observables unusable: {e}"),
                report: None,
            })
        }
    };
    let bounds = match decoy::bound_y1_e1(&obs, intensities) {
        Ok(b) => b,
        Err(e @ DecoyError::Degenerate { .. }) => {
            return Ok(DecoyOutcome::NoKey {
                reason: e.to_string(),
                report: None,
            })
        }
        Err(e) => return Err(invalid(e)),
    };
    let report = decoy::secure_key_rate(&bounds, &obs, intensities, sifting_factor, f_ec, rep).map_err(invalid)?;
    if report.has_secure_key() {
        Ok(DecoyOutcome::Key(report))
    } else {
        Ok(DecoyOutcome::NoKey {
            reason: "error-correction cost exceeds the single-photon privacy credit".into(),
            report: Some(report),
        })
    }
}
