//! Scenario files.
//!
//! A scenario is a TOML document describing nodes, the router, per-link
//! physics and the run. Unknown keys are rejected. A link's `excess_error`
//! may be the string `"calibrate"`, in which case it is solved from the
//! link's `measured_qber` against the single-mode model.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::{self, DetectorModel, FiberLink, Receiver, SourceModel};
use crate::simulator::{LinkParams, Mode, Scenario};
use crate::topology::{build_router_spec, color_complete_graph, NodeId, NodePair, RouterParams, WavelengthPlan};

/// The four-user Beijing field network.
pub const BEIJING_TOML: &str = include_str!("../scenarios/beijing.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub network: NetworkSection,
    pub router: RouterSection,
    pub physics: PhysicsSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoy: Option<DecoySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default = "default_attenuation")]
    pub attenuation_db_per_km: f64,
    pub node: Vec<NodeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub label: String,
    /// Access fibre from the node to the router.
    pub fiber_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_loss_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterSection {
    pub grid_nm: Vec<f64>,
    pub insertion_loss_db: Vec<f64>,
    #[serde(default = "default_adjacent")]
    pub adjacent_isolation_db: f64,
    #[serde(default = "default_nonadjacent")]
    pub nonadjacent_isolation_db: f64,
    /// Measured `[input][output]` matrix in grid order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolation_db: Option<Vec<Vec<f64>>>,
    /// Explicit wavelength assignment; a generated plan is used when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channel: Vec<ChannelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub pair: String,
    pub wavelength_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default)]
    pub receiver: Receiver,
    #[serde(default = "default_efficiency")]
    pub detector_efficiency: f64,
    #[serde(default = "default_rate")]
    pub gate_rate_hz: f64,
    #[serde(default = "default_mu")]
    pub mean_photon_number: f64,
    #[serde(default = "default_rate")]
    pub repetition_rate_hz: f64,
    #[serde(default)]
    pub link: Vec<LinkEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibrate {
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExcessSetting {
    Value(f64),
    Keyword(Calibrate),
}

impl Default for ExcessSetting {
    fn default() -> Self {
        ExcessSetting::Value(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub pair: String,
    pub visibility: f64,
    pub dark_count_per_gate: f64,
    /// End-to-end path loss including the router.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_qber: Option<f64>,
    #[serde(default)]
    pub excess_error: ExcessSetting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_photon_number: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub mode: Mode,
    pub pulse_count: u64,
    pub seed: u64,
    #[serde(default = "default_disclose")]
    pub disclose_fraction: f64,
    /// Directed "SRC-DST" sessions for single mode.
    pub sessions: Vec<String>,
    /// Sessions active together in concentration mode; defaults to `sessions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration_sessions: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoySection {
    pub link: String,
    pub signal_mu: f64,
    pub decoy_mu: f64,
    #[serde(default = "default_f_ec")]
    pub f_ec: f64,
    #[serde(default = "default_sifting")]
    pub sifting_factor: f64,
}

fn default_attenuation() -> f64 {
    optics::DEFAULT_ATTENUATION_DB_PER_KM
}
fn default_adjacent() -> f64 {
    30.0
}
fn default_nonadjacent() -> f64 {
    45.0
}
fn default_efficiency() -> f64 {
    optics::DEFAULT_DETECTOR_EFFICIENCY
}
fn default_rate() -> f64 {
    1e6
}
fn default_mu() -> f64 {
    0.1
}
fn default_disclose() -> f64 {
    crate::protocol::DEFAULT_DISCLOSE_FRACTION
}
fn default_f_ec() -> f64 {
    1.22
}
fn default_sifting() -> f64 {
    0.5
}

/// One resolved calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub pair: String,
    pub measured_qber: f64,
    pub floor_qber: f64,
    pub excess_error: f64,
}

fn parse_pair(text: &str, index: &HashMap<&str, usize>) -> Result<(usize, usize), String> {
    let (a, b) = text
        .split_once('-')
        .ok_or_else(|| format!("pair '{text}' is not of the form SRC-DST"))?;
    let look = |l: &str| {
        index
            .get(l.trim())
            .copied()
            .ok_or_else(|| format!("pair '{text}' names unknown node '{l}'"))
    };
    let (a, b) = (look(a)?, look(b)?);
    if a == b {
        return Err(format!("pair '{text}' joins a node to itself"));
    }
    Ok((a, b))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario files serialise")
    }

    pub fn beijing() -> Self {
        Self::parse(BEIJING_TOML).expect("bundled scenario parses")
    }

    fn node_index(&self) -> HashMap<&str, usize> {
        self.network
            .node
            .iter()
            .enumerate()
            .map(|(i, n)| (n.label.as_str(), i))
            .collect()
    }

    /// Index of the `[[physics.link]]` entry for an unordered pair.
    pub fn link_entry_index(&self, pair: &str) -> Result<usize, ScenarioError> {
        let index = self.node_index();
        let (a, b) = parse_pair(pair, &index).map_err(|e| ScenarioError::Invalid(vec![e]))?;
        let want = NodePair::new(a, b);
        self.physics
            .link
            .iter()
            .position(|l| parse_pair(&l.pair, &index).ok().and_then(|(x, y)| NodePair::new(x, y)) == want)
            .ok_or_else(|| ScenarioError::Invalid(vec![format!("no [[physics.link]] entry for {pair}")]))
    }

    /// Builds the validated in-memory scenario, resolving calibrated links.
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        Ok(self.build()?.0)
    }

    /// Copy of this file with every `"calibrate"` replaced by its solved
    /// value, plus the calibration rows.
    pub fn resolve_calibration(&self) -> Result<(ScenarioFile, Vec<CalibrationRow>), ScenarioError> {
        let (_, rows) = self.build()?;
        let mut out = self.clone();
        for row in &rows {
            let i = self.link_entry_index(&row.pair)?;
            out.physics.link[i].excess_error = ExcessSetting::Value(row.excess_error);
        }
        Ok((out, rows))
    }

    fn build(&self) -> Result<(Scenario, Vec<CalibrationRow>), ScenarioError> {
        let mut errs = Vec::new();
        let nodes: Vec<NodeId> = self
            .network
            .node
            .iter()
            .enumerate()
            .map(|(i, n)| NodeId::new(i, n.label.clone()))
            .collect();
        let n = nodes.len();
        if n < 2 {
            errs.push(format!("a network needs at least 2 nodes, got {n}"));
        }
        let index = self.node_index();
        if index.len() != n {
            errs.push("node labels must be unique".into());
        }
        for node in &nodes {
            if node.label.is_empty() || node.label.contains('-') {
                errs.push(format!("node label '{}' must be non-empty and contain no '-'", node.label));
            }
        }

        let mut fibers = Vec::new();
        for e in &self.network.node {
            let fiber = FiberLink::with_attenuation(e.fiber_km, self.network.attenuation_db_per_km)
                .and_then(|f| match e.fiber_loss_db {
                    Some(l) => f.with_measured_loss(l),
                    None => Ok(f),
                });
            match fiber {
                Ok(f) => fibers.push(f),
                Err(err) => errs.push(format!("node {}: {err}", e.label)),
            }
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Invalid(errs));
        }

        let plan = if self.router.channel.is_empty() {
            color_complete_graph(n).map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?
        } else {
            let mut assignment = Vec::new();
            for ch in &self.router.channel {
                let pair = parse_pair(&ch.pair, &index).map(|(a, b)| NodePair::new(a, b).expect("distinct nodes"));
                let color = self
                    .router
                    .grid_nm
                    .iter()
                    .position(|g| (g - ch.wavelength_nm).abs() < 1e-6)
                    .ok_or_else(|| format!("channel {}: {} nm is not on the grid", ch.pair, ch.wavelength_nm));
                match (pair, color) {
                    (Ok(p), Ok(c)) => assignment.push((p, c)),
                    (p, c) => errs.extend(p.err().into_iter().chain(c.err())),
                }
            }
            WavelengthPlan::from_assignment(n, assignment)
        };
        let params = RouterParams {
            grid_nm: self.router.grid_nm.clone(),
            adjacent_isolation_db: self.router.adjacent_isolation_db,
            nonadjacent_isolation_db: self.router.nonadjacent_isolation_db,
            insertion_loss_db: self.router.insertion_loss_db.clone(),
            measured_isolation_db: self.router.isolation_db.clone(),
        };
        let router = match build_router_spec(&plan, &params) {
            Ok(r) => Some(r),
            Err(e) => {
                errs.push(format!("router: {e}"));
                None
            }
        };

        let ph = &self.physics;
        let mut links = BTreeMap::new();
        let mut to_calibrate = Vec::new();
        for l in &ph.link {
            let pair = match parse_pair(&l.pair, &index) {
                Ok((a, b)) => NodePair::new(a, b).expect("distinct nodes"),
                Err(e) => {
                    errs.push(e);
                    continue;
                }
            };
            let detector = DetectorModel::new(
                l.detector_efficiency.unwrap_or(ph.detector_efficiency),
                l.dark_count_per_gate,
                ph.gate_rate_hz,
            );
            let source = SourceModel::new(l.mean_photon_number.unwrap_or(ph.mean_photon_number), ph.repetition_rate_hz);
            let excess_error = match l.excess_error {
                ExcessSetting::Value(v) if (0.0..=0.5).contains(&v) => v,
                ExcessSetting::Value(v) => {
                    errs.push(format!("link {}: excess_error {v} outside [0, 0.5]", l.pair));
                    0.0
                }
                ExcessSetting::Keyword(Calibrate::Calibrate) => match l.measured_qber {
                    Some(q) => {
                        to_calibrate.push((l.pair.clone(), pair, q));
                        0.0
                    }
                    None => {
                        errs.push(format!("link {}: excess_error = \"calibrate\" needs measured_qber", l.pair));
                        0.0
                    }
                },
            };
            if !(0.0..=1.0).contains(&l.visibility) {
                errs.push(format!("link {}: visibility {} outside [0, 1]", l.pair, l.visibility));
            }
            match (detector, source) {
                (Ok(detector), Ok(source)) => {
                    let params = LinkParams {
                        visibility: l.visibility,
                        detector,
                        source,
                        measured_loss_db: l.measured_loss_db,
                        excess_loss_db: l.excess_loss_db.unwrap_or(0.0),
                        excess_error,
                    };
                    if links.insert(pair, params).is_some() {
                        errs.push(format!("link {} is listed twice", l.pair));
                    }
                }
                (d, s) => errs.extend(
                    d.err()
                        .into_iter()
                        .chain(s.err())
                        .map(|e| format!("link {}: {e}", l.pair)),
                ),
            }
        }

        let mut directed = |list: &[String]| -> Vec<(usize, usize)> {
            list.iter()
                .filter_map(|s| parse_pair(s, &index).map_err(|e| errs.push(e)).ok())
                .collect()
        };
        let sessions = directed(&self.run.sessions);
        let concentration_sessions = match &self.run.concentration_sessions {
            Some(c) => directed(c),
            None => sessions.clone(),
        };
        let (Some(router), true) = (router, errs.is_empty()) else {
            return Err(ScenarioError::Invalid(errs));
        };

        let mut scenario = Scenario {
            name: self.name.clone(),
            nodes,
            fibers,
            router,
            receiver: ph.receiver,
            links,
            sessions,
            concentration_sessions,
            mode: self.run.mode,
            pulse_count: self.run.pulse_count,
            master_seed: self.run.seed,
            disclose_fraction: self.run.disclose_fraction,
        };

        let mut rows = Vec::new();
        for (label, pair, measured) in to_calibrate {
            let model = scenario
                .channel_model(pair.lo(), pair.hi())
                .map_err(|e| ScenarioError::Invalid(vec![format!("link {label}: {e}")]))?;
            let floor = optics::qber_model(&model, 0.0, 0.0)
                .map_err(|e| ScenarioError::Invalid(vec![format!("link {label}: {e}")]))?
                .total;
            match optics::calibrate_excess_error(measured, &model, 0.0) {
                Ok(x) => {
                    scenario.links.get_mut(&pair).expect("link inserted above").excess_error = x;
                    rows.push(CalibrationRow {
                        pair: label,
                        measured_qber: measured,
                        floor_qber: floor,
                        excess_error: x,
                    });
                }
                Err(e) => errs.push(format!("link {label}: {e}")),
            }
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Invalid(errs));
        }
        scenario
            .validate()
            .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
        Ok((scenario, rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beijing_parses_and_builds() {
        let file = ScenarioFile::beijing();
        let s = file.to_scenario().unwrap();
        assert_eq!(s.nodes.len(), 4);
        assert_eq!(s.sessions.len(), 4);
        assert_eq!(s.concentration_sessions.len(), 3);
        assert_eq!(s.pulse_count, 10_000_000);
        assert_eq!(s.master_seed, 42);
        // every calibrated link lands strictly inside (0, 0.5)
        for l in s.links.values() {
            assert!(l.excess_error > 0.0 && l.excess_error < 0.5);
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let file = ScenarioFile::beijing();
        let text = file.to_toml_string();
        assert_eq!(ScenarioFile::parse(&text).unwrap(), file);
    }

    #[test]
    fn calibration_resolves_to_numbers() {
        let (file, rows) = ScenarioFile::beijing().resolve_calibration().unwrap();
        assert_eq!(rows.len(), 4);
        for l in &file.physics.link {
            assert!(matches!(l.excess_error, ExcessSetting::Value(_)));
        }
        let again = ScenarioFile::parse(&file.to_toml_string()).unwrap();
        assert_eq!(again.to_scenario().unwrap(), ScenarioFile::beijing().to_scenario().unwrap());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = BEIJING_TOML.replace("[run]", "[run]\nbogus = 1");
        assert!(matches!(ScenarioFile::parse(&text), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn session_without_channel_rejected() {
        let mut file = ScenarioFile::beijing();
        file.run.sessions.push("A-Z".into());
        let Err(ScenarioError::Invalid(v)) = file.to_scenario() else {
            panic!("expected invalid")
        };
        assert!(v.iter().any(|m| m.contains("unknown node 'Z'")));
    }

    #[test]
    fn calibrate_without_measurement_rejected() {
        let mut file = ScenarioFile::beijing();
        file.physics.link[0].measured_qber = None;
        assert!(matches!(file.to_scenario(), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn infeasible_calibration_reported() {
        let mut file = ScenarioFile::beijing();
        file.physics.link[0].measured_qber = Some(0.001);
        let Err(ScenarioError::Invalid(v)) = file.to_scenario() else {
            panic!("expected invalid")
        };
        assert!(v[0].contains("A-B"), "{v:?}");
    }

    #[test]
    fn generated_plan_when_no_channels_listed() {
        let mut file = ScenarioFile::beijing();
        file.router.channel.clear();
        let s = file.to_scenario().unwrap();
        assert!(crate::topology::validate_plan(s.router.plan()).is_ok());
    }
}
