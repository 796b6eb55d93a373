//! Physical-layer arithmetic: decibel conversion, link budgets, detector gain,
//! the analytic QBER decomposition, inter-channel crosstalk, and calibration of
//! the phenomenological excess error term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::RouterSpec;

/// Default fibre attenuation at 1550 nm, dB/km.
pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

/// Default single-photon detector efficiency.
pub const DEFAULT_DETECTOR_EFFICIENCY: f64 = 0.10;

/// Dark-count probabilities at or above this are treated as misconfiguration.
pub const MAX_DARK_COUNT_PROB: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("routing error: {0}")]
    Routing(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("calibration infeasible: measured QBER {measured} is outside the model range [{floor}, {ceiling}]")]
    CalibrationInfeasible {
        measured: f64,
        floor: f64,
        ceiling: f64,
    },
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), OpticsError> {
    if cond {
        Ok(())
    } else {
        Err(OpticsError::InvalidArgument(msg()))
    }
}

/// Power transmittance of a loss given in dB.
pub fn transmittance(loss_db: f64) -> Result<f64, OpticsError> {
    check(loss_db >= 0.0 && loss_db.is_finite(), || {
        format!("loss must be a non-negative finite dB value, got {loss_db}")
    })?;
    Ok(10f64.powf(-loss_db / 10.0))
}

/// An access fibre between a node and the router.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberLink {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    /// Field-measured loss; replaces `length_km * attenuation_db_per_km`.
    pub measured_loss_db: Option<f64>,
}

impl FiberLink {
    pub fn new(length_km: f64) -> Result<Self, OpticsError> {
        Self::with_attenuation(length_km, DEFAULT_ATTENUATION_DB_PER_KM)
    }

    pub fn with_attenuation(length_km: f64, attenuation_db_per_km: f64) -> Result<Self, OpticsError> {
        check(length_km > 0.0 && length_km.is_finite(), || {
            format!("fibre length must be positive, got {length_km} km")
        })?;
        check(attenuation_db_per_km > 0.0, || {
            format!("attenuation must be positive, got {attenuation_db_per_km} dB/km")
        })?;
        Ok(Self {
            length_km,
            attenuation_db_per_km,
            measured_loss_db: None,
        })
    }

    pub fn with_measured_loss(mut self, loss_db: f64) -> Result<Self, OpticsError> {
        check(loss_db > 0.0 && loss_db.is_finite(), || {
            format!("measured loss must be positive, got {loss_db} dB")
        })?;
        self.measured_loss_db = Some(loss_db);
        Ok(self)
    }

    pub fn loss_db(&self) -> f64 {
        self.measured_loss_db
            .unwrap_or(self.length_km * self.attenuation_db_per_km)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_count_prob_per_gate: f64,
    pub gate_rate_hz: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_count_prob_per_gate: f64, gate_rate_hz: f64) -> Result<Self, OpticsError> {
        check(efficiency > 0.0 && efficiency <= 1.0, || {
            format!("detector efficiency must be in (0, 1], got {efficiency}")
        })?;
        check(
            (0.0..MAX_DARK_COUNT_PROB).contains(&dark_count_prob_per_gate),
            || format!("dark-count probability must be in [0, {MAX_DARK_COUNT_PROB}), got {dark_count_prob_per_gate}"),
        )?;
        check(gate_rate_hz > 0.0, || {
            format!("gate rate must be positive, got {gate_rate_hz} Hz")
        })?;
        Ok(Self {
            efficiency,
            dark_count_prob_per_gate,
            gate_rate_hz,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub mean_photon_number: f64,
    pub repetition_rate_hz: f64,
}

impl SourceModel {
    pub fn new(mean_photon_number: f64, repetition_rate_hz: f64) -> Result<Self, OpticsError> {
        check(mean_photon_number > 0.0 && mean_photon_number <= 1.0, || {
            format!("mean photon number must be in (0, 1], got {mean_photon_number}")
        })?;
        check(repetition_rate_hz > 0.0, || {
            format!("repetition rate must be positive, got {repetition_rate_hz} Hz")
        })?;
        Ok(Self {
            mean_photon_number,
            repetition_rate_hz,
        })
    }
}

/// End-to-end loss of one session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub fiber_loss_db: f64,
    pub router_insertion_db: f64,
    pub excess_loss_db: f64,
    pub total_db: f64,
    pub transmittance: f64,
}

impl LinkBudget {
    pub fn from_parts(fiber_loss_db: f64, router_insertion_db: f64, excess_loss_db: f64) -> Result<Self, OpticsError> {
        for (name, v) in [
            ("fibre loss", fiber_loss_db),
            ("router insertion", router_insertion_db),
            ("excess loss", excess_loss_db),
        ] {
            check(v >= 0.0 && v.is_finite(), || format!("{name} must be >= 0 dB, got {v}"))?;
        }
        let total_db = fiber_loss_db + router_insertion_db + excess_loss_db;
        Ok(Self {
            fiber_loss_db,
            router_insertion_db,
            excess_loss_db,
            total_db,
            transmittance: transmittance(total_db)?,
        })
    }
}

/// The fibre portion of a session path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberPath {
    /// Source and destination access fibres.
    Legs(FiberLink, FiberLink),
    /// A single field measurement of the whole source-router-destination path,
    /// router insertion included.
    Composite { measured_loss_db: f64 },
}

/// Loss budget for the session `src -> dst` on `color`.
pub fn link_budget(
    path: &FiberPath,
    spec: &RouterSpec,
    src: usize,
    dst: usize,
    color: usize,
    excess_db: f64,
) -> Result<LinkBudget, OpticsError> {
    for node in [src, dst] {
        if !spec.port_has(node, color) {
            return Err(OpticsError::Routing(format!(
                "channel {color} is not multiplexed at port {node}"
            )));
        }
    }
    let insertion = spec
        .insertion_loss_db(color)
        .ok_or_else(|| OpticsError::Configuration(format!("no insertion loss for channel {color}")))?;
    match path {
        FiberPath::Legs(a, b) => LinkBudget::from_parts(a.loss_db() + b.loss_db(), insertion, excess_db),
        FiberPath::Composite { measured_loss_db } => {
            let fiber = measured_loss_db - insertion;
            if fiber < 0.0 {
                return Err(OpticsError::Configuration(format!(
                    "measured path loss {measured_loss_db} dB is below the router insertion loss {insertion} dB"
                )));
            }
            LinkBudget::from_parts(fiber, insertion, excess_db)
        }
    }
}

/// Probability that a pulse produces a detector click.
pub fn gain(mu: f64, t: f64, eta: f64, p_dark: f64) -> f64 {
    1.0 - (1.0 - p_dark) * (-mu * t * eta).exp()
}

/// Intrinsic error probability of an interferometer with fringe visibility `v`.
pub fn visibility_error(v: f64) -> Result<f64, OpticsError> {
    check(v > 0.0 && v <= 1.0, || format!("visibility must be in (0, 1], got {v}"))?;
    Ok((1.0 - v) / 2.0)
}

/// Receiver detection layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Receiver {
    /// One detector on one interferometer port with four-phase random
    /// selection. Only the port the detector watches is observed, so on
    /// average half of the arriving signal can click.
    #[default]
    SingleDetector,
    /// Both interferometer ports monitored; every arriving photon can click.
    Balanced,
}

impl Receiver {
    /// Fraction of the arriving mean photon number the detector can register.
    pub fn port_fraction(self) -> f64 {
        match self {
            Receiver::SingleDetector => 0.5,
            Receiver::Balanced => 1.0,
        }
    }
}

/// Everything the analytic channel model needs for one session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub transmittance: f64,
    pub visibility: f64,
    pub detector: DetectorModel,
    pub source: SourceModel,
    pub receiver: Receiver,
}

impl ChannelModel {
    /// Mean number of photons reaching the detector per pulse.
    pub fn detected_mean(&self) -> f64 {
        self.source.mean_photon_number * self.transmittance * self.detector.efficiency
    }

    /// Signal click probability on a basis-matched pulse.
    pub fn signal_click_prob(&self) -> f64 {
        1.0 - (-self.detected_mean() * self.receiver.port_fraction()).exp()
    }

    /// Click probability added by leaked light at `ratio` of the signal flux.
    pub fn crosstalk_click_prob(&self, ratio: f64) -> f64 {
        1.0 - (-ratio * self.detected_mean() * self.receiver.port_fraction()).exp()
    }
}

/// Analytic QBER with its additive components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub total: f64,
    pub dark: f64,
    pub visibility: f64,
    pub crosstalk: f64,
    pub excess: f64,
}

/// QBER decomposition over basis-matched clicks.
///
/// With signal click probability S and dark probability D, half the dark
/// clicks and half the crosstalk clicks are errors:
/// `total = (D/2 + e_vis S + xtalk S / 2 + excess S) / (S + D)`.
pub fn qber_model(model: &ChannelModel, xtalk: f64, excess_error: f64) -> Result<QberEstimate, OpticsError> {
    let e_vis = visibility_error(model.visibility)?;
    check(xtalk >= 0.0, || format!("crosstalk ratio must be >= 0, got {xtalk}"))?;
    check((0.0..=0.5).contains(&excess_error), || {
        format!("excess error must be in [0, 0.5], got {excess_error}")
    })?;
    let s = model.signal_click_prob();
    let d = model.detector.dark_count_prob_per_gate;
    let denom = s + d;
    if denom <= 0.0 {
        return Err(OpticsError::InvalidArgument(
            "channel produces no clicks; QBER undefined".into(),
        ));
    }
    let dark = 0.5 * d / denom;
    let visibility = e_vis * s / denom;
    let crosstalk = 0.5 * xtalk * s / denom;
    let excess = excess_error * s / denom;
    Ok(QberEstimate {
        total: dark + visibility + crosstalk + excess,
        dark,
        visibility,
        crosstalk,
        excess,
    })
}

/// Excess error that makes [`qber_model`] reproduce `measured_qber`.
pub fn calibrate_excess_error(measured_qber: f64, model: &ChannelModel, xtalk: f64) -> Result<f64, OpticsError> {
    let at = |e: f64| qber_model(model, xtalk, e).map(|q| q.total);
    let floor = at(0.0)?;
    let ceiling = at(0.5)?;
    if !(floor..=ceiling).contains(&measured_qber) {
        return Err(OpticsError::CalibrationInfeasible {
            measured: measured_qber,
            floor,
            ceiling,
        });
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if at(mid)? < measured_qber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// An active session as seen by the crosstalk model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionDescriptor {
    pub channel: usize,
    pub mean_photon_number: f64,
}

/// An aggressor session and the budget of its light's path to the victim's
/// detector, excluding the router traversal (the isolation entry covers that).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggressor {
    pub session: SessionDescriptor,
    pub leak_path: LinkBudget,
}

/// Leaked aggressor flux at the victim's detector divided by the victim's
/// signal flux.
pub fn crosstalk_ratio(
    spec: &RouterSpec,
    victim: &SessionDescriptor,
    victim_budget: &LinkBudget,
    aggressors: &[Aggressor],
) -> Result<f64, OpticsError> {
    let signal = victim.mean_photon_number * victim_budget.transmittance;
    if signal <= 0.0 {
        return Err(OpticsError::Configuration("victim carries no signal".into()));
    }
    let mut leaked = 0.0;
    for a in aggressors {
        if a.session.channel == victim.channel {
            return Err(OpticsError::Configuration(format!(
                "aggressor shares victim channel {}",
                victim.channel
            )));
        }
        let suppression = spec
            .router_suppression_db(a.session.channel, victim.channel)
            .ok_or_else(|| {
                OpticsError::Configuration(format!(
                    "no isolation entry from channel {} to {}",
                    a.session.channel, victim.channel
                ))
            })?;
        leaked += a.session.mean_photon_number * a.leak_path.transmittance * 10f64.powf(-suppression / 10.0);
    }
    Ok(leaked / signal)
}

/// Worst-case crosstalk ratio over victim channels when every other channel
/// is active with equal launch power and the victim's path is longer than the
/// leaked light's by the full network diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseCrosstalk {
    pub ratio: f64,
    pub victim_channel: usize,
    pub path_disadvantage_db: f64,
    pub assumption: String,
}

pub fn worst_case_crosstalk(
    spec: &RouterSpec,
    diameter_km: f64,
    attenuation_db_per_km: f64,
) -> Result<WorstCaseCrosstalk, OpticsError> {
    check(diameter_km >= 0.0 && attenuation_db_per_km > 0.0, || {
        "diameter must be >= 0 and attenuation > 0".into()
    })?;
    let disadvantage = diameter_km * attenuation_db_per_km;
    let victim_budget = LinkBudget::from_parts(disadvantage, 0.0, 0.0)?;
    let leak_path = LinkBudget::from_parts(0.0, 0.0, 0.0)?;
    let n = spec.channels().len();
    let mut worst = WorstCaseCrosstalk {
        ratio: 0.0,
        victim_channel: 0,
        path_disadvantage_db: disadvantage,
        assumption: format!(
            "all {n} channels active at equal launch power from co-located transmitters; \
             victim path {disadvantage:.2} dB longer than the leaked light's \
             ({diameter_km} km at {attenuation_db_per_km} dB/km)"
        ),
    };
    for v in 0..n {
        let victim = SessionDescriptor {
            channel: v,
            mean_photon_number: 1.0,
        };
        let aggressors: Vec<Aggressor> = (0..n)
            .filter(|&a| a != v)
            .map(|a| Aggressor {
                session: SessionDescriptor {
                    channel: a,
                    mean_photon_number: 1.0,
                },
                leak_path,
            })
            .collect();
        let ratio = crosstalk_ratio(spec, &victim, &victim_budget, &aggressors)?;
        if ratio > worst.ratio {
            worst.ratio = ratio;
            worst.victim_channel = v;
        }
    }
    Ok(worst)
}
