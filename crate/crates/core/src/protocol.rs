//! Four-phase, single-detector BB84 at pulse level.
//!
//! The sender encodes each bit as one of four interferometer phases; the
//! receiver applies its own random phase from the same four and watches a
//! single detector. A click on a basis-matched pulse means the two phases
//! agreed, so the receiver's sifted bit is the bit of its own phase.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::seq::index;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_stream, SessionRng};
use crate::topology::{ChannelIndex, NodeId};

/// Sessions whose estimated QBER exceeds this abort.
pub const ABORT_THRESHOLD: f64 = 0.115;

pub const DEFAULT_DISCLOSE_FRACTION: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("protocol desync at record {position}: sender index {sender:?}, receiver index {receiver:?}")]
    Desync {
        position: usize,
        sender: Option<u64>,
        receiver: Option<u64>,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Phases {0, π}.
    Z,
    /// Phases {π/2, 3π/2}.
    X,
}

/// One of the four encoding phases, stored as a multiple of π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseSymbol {
    Zero,
    HalfPi,
    Pi,
    ThreeHalfPi,
}

impl PhaseSymbol {
    pub const ALL: [PhaseSymbol; 4] = [
        PhaseSymbol::Zero,
        PhaseSymbol::HalfPi,
        PhaseSymbol::Pi,
        PhaseSymbol::ThreeHalfPi,
    ];

    pub fn quarter_turns(self) -> u8 {
        match self {
            PhaseSymbol::Zero => 0,
            PhaseSymbol::HalfPi => 1,
            PhaseSymbol::Pi => 2,
            PhaseSymbol::ThreeHalfPi => 3,
        }
    }

    pub fn from_quarter_turns(q: u8) -> Self {
        Self::ALL[(q % 4) as usize]
    }

    pub fn radians(self) -> f64 {
        match self {
            PhaseSymbol::Zero => 0.0,
            PhaseSymbol::HalfPi => FRAC_PI_2,
            PhaseSymbol::Pi => PI,
            PhaseSymbol::ThreeHalfPi => 3.0 * FRAC_PI_2,
        }
    }

    /// cos(self - other), exact for the four phases.
    pub fn cos_difference(self, other: PhaseSymbol) -> f64 {
        match (4 + self.quarter_turns() - other.quarter_turns()) % 4 {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for PhaseSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseSymbol::Zero => "0",
            PhaseSymbol::HalfPi => "pi/2",
            PhaseSymbol::Pi => "pi",
            PhaseSymbol::ThreeHalfPi => "3pi/2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisBit {
    pub basis: Basis,
    pub bit: u8,
}

/// 0 and π/2 carry bit 0; π and 3π/2 carry bit 1.
pub fn encode(bit: u8, basis: Basis) -> PhaseSymbol {
    match (bit & 1, basis) {
        (0, Basis::Z) => PhaseSymbol::Zero,
        (0, Basis::X) => PhaseSymbol::HalfPi,
        (_, Basis::Z) => PhaseSymbol::Pi,
        (_, Basis::X) => PhaseSymbol::ThreeHalfPi,
    }
}

pub fn decode(phase: PhaseSymbol) -> BasisBit {
    let (bit, basis) = match phase {
        PhaseSymbol::Zero => (0, Basis::Z),
        PhaseSymbol::HalfPi => (0, Basis::X),
        PhaseSymbol::Pi => (1, Basis::Z),
        PhaseSymbol::ThreeHalfPi => (1, Basis::X),
    };
    BasisBit { basis, bit }
}

/// Per-pulse physics of one session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPhysics {
    pub mean_photon_number: f64,
    pub transmittance: f64,
    pub efficiency: f64,
    pub visibility: f64,
    pub dark_count_prob: f64,
    pub crosstalk_click_prob: f64,
    /// Probability that a signal-caused click registers the opposite bit.
    pub excess_error: f64,
}

impl LinkPhysics {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ProtocolError::InvalidArgument(format!(
                    "{name} must be in [0, 1], got {v}"
                )))
            }
        };
        if !(self.mean_photon_number >= 0.0 && self.mean_photon_number.is_finite()) {
            return Err(ProtocolError::InvalidArgument(format!(
                "mean photon number must be >= 0, got {}",
                self.mean_photon_number
            )));
        }
        prob("transmittance", self.transmittance)?;
        prob("efficiency", self.efficiency)?;
        prob("visibility", self.visibility)?;
        prob("dark-count probability", self.dark_count_prob)?;
        prob("crosstalk click probability", self.crosstalk_click_prob)?;
        prob("excess error", self.excess_error)
    }

    fn detected_mean(&self) -> f64 {
        self.mean_photon_number * self.transmittance * self.efficiency
    }

    /// Probability that signal light alone fires the detector.
    pub fn signal_click_prob(&self, sender: PhaseSymbol, receiver: PhaseSymbol) -> f64 {
        let fringe = 0.5 * (1.0 + self.visibility * sender.cos_difference(receiver));
        1.0 - (-self.detected_mean() * fringe).exp()
    }
}

/// Closed-form click probability for one pulse.
pub fn click_probability(sender: PhaseSymbol, receiver: PhaseSymbol, physics: &LinkPhysics) -> f64 {
    let sig = physics.signal_click_prob(sender, receiver);
    1.0 - (1.0 - physics.dark_count_prob) * (1.0 - physics.crosstalk_click_prob) * (1.0 - sig)
}

/// What fired the detector, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClickCause {
    /// Signal light fired; `flipped` marks an excess-error bit flip.
    Signal { flipped: bool },
    Dark,
    Crosstalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseOutcome {
    pub clicked: bool,
    pub cause: Option<ClickCause>,
}

/// Resolves one pulse from a single uniform draw `u` in [0, 1).
///
/// [0, p_click) is split into signal, dark-only and crosstalk-only intervals
/// in that order. Adding crosstalk only extends the last interval, so the same
/// draw never loses a click when crosstalk is switched on.
pub fn resolve_pulse(sender: PhaseSymbol, receiver: PhaseSymbol, physics: &LinkPhysics, u: f64) -> PulseOutcome {
    let sig = physics.signal_click_prob(sender, receiver);
    if u < sig {
        // u / sig is uniform on [0, 1) given u < sig
        let flipped = u < sig * physics.excess_error;
        return PulseOutcome {
            clicked: true,
            cause: Some(ClickCause::Signal { flipped }),
        };
    }
    let dark_end = sig + (1.0 - sig) * physics.dark_count_prob;
    if u < dark_end {
        return PulseOutcome {
            clicked: true,
            cause: Some(ClickCause::Dark),
        };
    }
    let click_end = dark_end + (1.0 - sig) * (1.0 - physics.dark_count_prob) * physics.crosstalk_click_prob;
    if u < click_end {
        return PulseOutcome {
            clicked: true,
            cause: Some(ClickCause::Crosstalk),
        };
    }
    PulseOutcome {
        clicked: false,
        cause: None,
    }
}

pub fn simulate_pulse<R: Rng + ?Sized>(
    sender: PhaseSymbol,
    receiver: PhaseSymbol,
    physics: &LinkPhysics,
    rng: &mut R,
) -> PulseOutcome {
    resolve_pulse(sender, receiver, physics, rng.random::<f64>())
}

/// Transcript entry for one time bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub index: u64,
    pub sender_phase: PhaseSymbol,
    pub receiver_phase: PhaseSymbol,
    pub clicked: bool,
    pub cause: Option<ClickCause>,
}

impl PulseRecord {
    /// `index sender_phase receiver_phase clicked cause`, space separated.
    pub fn log_line(&self) -> String {
        let cause = match self.cause {
            None => "-",
            Some(ClickCause::Signal { flipped: false }) => "signal",
            Some(ClickCause::Signal { flipped: true }) => "signal-flipped",
            Some(ClickCause::Dark) => "dark",
            Some(ClickCause::Crosstalk) => "crosstalk",
        };
        format!(
            "{} {} {} {} {}",
            self.index,
            self.sender_phase,
            self.receiver_phase,
            u8::from(self.clicked),
            cause
        )
    }
}

/// What the sender keeps for a time bin the receiver announced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SenderRecord {
    pub index: u64,
    pub phase: PhaseSymbol,
}

/// What the receiver registered in a time bin. `flipped` is the simulated
/// misalignment tag that inverts the registered bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiverRecord {
    pub index: u64,
    pub phase: PhaseSymbol,
    pub clicked: bool,
    pub flipped: bool,
}

impl From<&PulseRecord> for SenderRecord {
    fn from(r: &PulseRecord) -> Self {
        Self {
            index: r.index,
            phase: r.sender_phase,
        }
    }
}

impl From<&PulseRecord> for ReceiverRecord {
    fn from(r: &PulseRecord) -> Self {
        Self {
            index: r.index,
            phase: r.receiver_phase,
            clicked: r.clicked,
            flipped: matches!(r.cause, Some(ClickCause::Signal { flipped: true })),
        }
    }
}

/// Both sides' sifted bits with the pulse index of each position.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedKey {
    pub indices: Vec<u64>,
    pub sender: Vec<u8>,
    pub receiver: Vec<u8>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.sender.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sender.is_empty()
    }

    pub fn mismatches(&self) -> usize {
        self.sender
            .iter()
            .zip(&self.receiver)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Keeps clicked, basis-matched time bins.
pub fn sift(sender: &[SenderRecord], receiver: &[ReceiverRecord]) -> Result<SiftedKey, ProtocolError> {
    let mut key = SiftedKey::default();
    for position in 0..sender.len().max(receiver.len()) {
        let (s, r) = match (sender.get(position), receiver.get(position)) {
            (Some(s), Some(r)) if s.index == r.index => (s, r),
            (s, r) => {
                return Err(ProtocolError::Desync {
                    position,
                    sender: s.map(|s| s.index),
                    receiver: r.map(|r| r.index),
                })
            }
        };
        if !r.clicked {
            continue;
        }
        let sent = decode(s.phase);
        let seen = decode(r.phase);
        if sent.basis != seen.basis {
            continue;
        }
        key.indices.push(s.index);
        key.sender.push(sent.bit);
        key.receiver.push(seen.bit ^ u8::from(r.flipped));
    }
    Ok(key)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberSample {
    pub disclosed_count: u64,
    pub error_count: u64,
    pub estimate: f64,
}

/// Publicly compares a uniform sample of sifted positions and removes them
/// from the key. Returns the sample and the remaining key.
pub fn estimate_qber<R: Rng + ?Sized>(
    sifted: &SiftedKey,
    disclose_fraction: f64,
    rng: &mut R,
) -> Result<(QberSample, SiftedKey), ProtocolError> {
    if sifted.sender.len() != sifted.receiver.len() {
        return Err(ProtocolError::InvalidArgument(
            "sifted strings differ in length".into(),
        ));
    }
    if !(disclose_fraction > 0.0 && disclose_fraction <= 1.0) {
        return Err(ProtocolError::InvalidArgument(format!(
            "disclose fraction must be in (0, 1], got {disclose_fraction}"
        )));
    }
    let n = sifted.len();
    if n == 0 {
        return Err(ProtocolError::InsufficientData("sifted key is empty".into()));
    }
    let k = ((disclose_fraction * n as f64).round() as usize).clamp(1, n);
    let mut disclosed = vec![false; n];
    for i in index::sample(rng, n, k) {
        disclosed[i] = true;
    }
    let mut errors = 0u64;
    let mut rest = SiftedKey::default();
    for i in 0..n {
        if disclosed[i] {
            errors += u64::from(sifted.sender[i] != sifted.receiver[i]);
        } else {
            rest.indices.push(sifted.indices[i]);
            rest.sender.push(sifted.sender[i]);
            rest.receiver.push(sifted.receiver[i]);
        }
    }
    Ok((
        QberSample {
            disclosed_count: k as u64,
            error_count: errors,
            estimate: errors as f64 / k as f64,
        },
        rest,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Continue,
    Abort,
}

/// Aborts strictly above [`ABORT_THRESHOLD`].
pub fn abort_check(qber: f64) -> Verdict {
    if qber > ABORT_THRESHOLD {
        Verdict::Abort
    } else {
        Verdict::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Running,
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub session_id: String,
    pub src: NodeId,
    pub dst: NodeId,
    pub channel: ChannelIndex,
    pub physics: LinkPhysics,
    pub pulse_count: u64,
    pub master_seed: u64,
    pub disclose_fraction: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickCounts {
    pub signal: u64,
    pub flipped: u64,
    pub dark: u64,
    pub crosstalk: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub session_id: String,
    pub src: NodeId,
    pub dst: NodeId,
    pub channel: ChannelIndex,
    pub pulses_sent: u64,
    pub clicks: u64,
    pub click_causes: ClickCounts,
    /// Records of every clicked time bin, in pulse order.
    pub transcript: Vec<PulseRecord>,
    /// Sifted key before disclosure.
    pub sifted: SiftedKey,
    /// Key left after the disclosed sample is removed.
    pub key: SiftedKey,
    pub qber_sample: Option<QberSample>,
    pub status: SessionStatus,
}

impl SessionState {
    /// Mismatch fraction over the whole sifted key, known only to the simulation.
    pub fn sifted_qber(&self) -> Option<f64> {
        (!self.sifted.is_empty()).then(|| self.sifted.mismatches() as f64 / self.sifted.len() as f64)
    }
}

/// Runs one BB84 session: pulses, sifting, QBER estimation and the abort rule.
pub fn run_session(config: &SessionConfig) -> Result<SessionState, ProtocolError> {
    if config.pulse_count == 0 {
        return Err(ProtocolError::InvalidArgument("pulse_count must be > 0".into()));
    }
    config.physics.validate()?;
    let mut rng: SessionRng = derive_stream(config.master_seed, &config.session_id);
    let physics = &config.physics;

    let mut transcript = Vec::new();
    let mut causes = ClickCounts::default();
    for index in 0..config.pulse_count {
        // Two draws per pulse whatever the outcome, so the stream position
        // depends only on the pulse index.
        let bits = rng.next_u64();
        let u: f64 = rng.random();
        let sender_bit = (bits & 1) as u8;
        let sender_basis = if bits & 2 == 0 { Basis::Z } else { Basis::X };
        let receiver_basis = if bits & 4 == 0 { Basis::Z } else { Basis::X };
        let receiver_bit = ((bits >> 3) & 1) as u8;
        let sender_phase = encode(sender_bit, sender_basis);
        let receiver_phase = encode(receiver_bit, receiver_basis);

        let outcome = resolve_pulse(sender_phase, receiver_phase, physics, u);
        if let Some(cause) = outcome.cause {
            match cause {
                ClickCause::Signal { flipped } => {
                    causes.signal += 1;
                    causes.flipped += u64::from(flipped);
                }
                ClickCause::Dark => causes.dark += 1,
                ClickCause::Crosstalk => causes.crosstalk += 1,
            }
            transcript.push(PulseRecord {
                index,
                sender_phase,
                receiver_phase,
                clicked: true,
                cause: Some(cause),
            });
        }
    }

    // The receiver announces the basis of every clicked bin; the sender answers
    // for the same bins.
    let sender: Vec<SenderRecord> = transcript.iter().map(SenderRecord::from).collect();
    let receiver: Vec<ReceiverRecord> = transcript.iter().map(ReceiverRecord::from).collect();
    let sifted = sift(&sender, &receiver)?;

    let (qber_sample, key, status) = if sifted.is_empty() {
        (None, SiftedKey::default(), SessionStatus::Completed)
    } else {
        let (sample, key) = estimate_qber(&sifted, config.disclose_fraction, &mut rng)?;
        let status = match abort_check(sample.estimate) {
            Verdict::Continue => SessionStatus::Completed,
            Verdict::Abort => SessionStatus::Aborted,
        };
        let key = if status == SessionStatus::Aborted {
            SiftedKey::default()
        } else {
            key
        };
        (Some(sample), key, status)
    };

    Ok(SessionState {
        session_id: config.session_id.clone(),
        src: config.src.clone(),
        dst: config.dst.clone(),
        channel: config.channel,
        pulses_sent: config.pulse_count,
        clicks: transcript.len() as u64,
        click_causes: causes,
        transcript,
        sifted,
        key,
        qber_sample,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn physics() -> LinkPhysics {
        LinkPhysics {
            mean_photon_number: 0.1,
            transmittance: 10f64.powf(-1.163),
            efficiency: 0.10,
            visibility: 0.9744,
            dark_count_prob: 5.2e-6,
            crosstalk_click_prob: 0.0,
            excess_error: 0.0,
        }
    }

    fn config(physics: LinkPhysics, pulses: u64) -> SessionConfig {
        SessionConfig {
            session_id: "A-C".into(),
            src: NodeId::new(0, "A"),
            dst: NodeId::new(2, "C"),
            channel: ChannelIndex {
                color: 0,
                wavelength_nm: 1510.0,
            },
            physics,
            pulse_count: pulses,
            master_seed: 42,
            disclose_fraction: DEFAULT_DISCLOSE_FRACTION,
        }
    }

    #[test]
    fn encoding_table() {
        assert_eq!(encode(0, Basis::Z), PhaseSymbol::Zero);
        assert_eq!(encode(0, Basis::X), PhaseSymbol::HalfPi);
        assert_eq!(encode(1, Basis::Z), PhaseSymbol::Pi);
        assert_eq!(encode(1, Basis::X), PhaseSymbol::ThreeHalfPi);
        assert_eq!(decode(PhaseSymbol::Pi), BasisBit { basis: Basis::Z, bit: 1 });
        assert_eq!(decode(PhaseSymbol::HalfPi), BasisBit { basis: Basis::X, bit: 0 });
        assert!((PhaseSymbol::ThreeHalfPi.radians() - 3.0 * PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn encode_decode_bijection() {
        for bit in 0..2u8 {
            for basis in [Basis::Z, Basis::X] {
                assert_eq!(decode(encode(bit, basis)), BasisBit { basis, bit });
            }
        }
        for phase in PhaseSymbol::ALL {
            let bb = decode(phase);
            assert_eq!(encode(bb.bit, bb.basis), phase);
        }
    }

    #[test]
    fn click_probability_limits() {
        let mut p = physics();
        p.visibility = 1.0;
        p.dark_count_prob = 0.0;
        assert_eq!(click_probability(PhaseSymbol::Zero, PhaseSymbol::Pi, &p), 0.0);
        let a = p.mean_photon_number * p.transmittance * p.efficiency;
        let full = click_probability(PhaseSymbol::HalfPi, PhaseSymbol::HalfPi, &p);
        assert!((full - (1.0 - (-a).exp())).abs() < 1e-15);
    }

    #[test]
    fn resolve_partitions_click_probability() {
        let mut p = physics();
        p.crosstalk_click_prob = 1e-4;
        p.dark_count_prob = 2e-4;
        let (s, r) = (PhaseSymbol::Zero, PhaseSymbol::Zero);
        let pc = click_probability(s, r, &p);
        assert!(resolve_pulse(s, r, &p, pc * 0.999_999).clicked);
        assert!(!resolve_pulse(s, r, &p, pc * 1.000_001).clicked);
        // switching crosstalk on never removes a click for the same draw
        let mut quiet = p;
        quiet.crosstalk_click_prob = 0.0;
        for k in 0..10_000 {
            let u = k as f64 / 10_000.0 * 2.0 * pc;
            if resolve_pulse(s, r, &quiet, u).clicked {
                assert!(resolve_pulse(s, r, &p, u).clicked);
            }
        }
    }

    #[test]
    fn monte_carlo_click_rate_matches_closed_form() {
        let p = physics();
        let (s, r) = (PhaseSymbol::Zero, PhaseSymbol::Zero);
        let expected = click_probability(s, r, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000_000u64;
        let clicks = (0..n).filter(|_| simulate_pulse(s, r, &p, &mut rng).clicked).count() as f64;
        let sigma = (n as f64 * expected * (1.0 - expected)).sqrt();
        assert!((clicks - n as f64 * expected).abs() < 3.0 * sigma, "{clicks} vs {}", n as f64 * expected);
    }

    fn rec(index: u64, s: PhaseSymbol, r: PhaseSymbol, clicked: bool) -> (SenderRecord, ReceiverRecord) {
        (
            SenderRecord { index, phase: s },
            ReceiverRecord {
                index,
                phase: r,
                clicked,
                flipped: false,
            },
        )
    }

    #[test]
    fn sift_keeps_matched_clicked_bins() {
        use PhaseSymbol::*;
        let (s, r): (Vec<_>, Vec<_>) = [
            rec(0, Zero, Zero, true),
            rec(1, Zero, HalfPi, true),
            rec(2, Pi, Pi, false),
            rec(3, ThreeHalfPi, ThreeHalfPi, true),
        ]
        .into_iter()
        .unzip();
        let key = sift(&s, &r).unwrap();
        assert_eq!(key.indices, vec![0, 3]);
        assert_eq!(key.sender, key.receiver);
        assert_eq!(key.sender, vec![0, 1]);

        assert!(sift(&[], &[]).unwrap().is_empty());
    }

    #[test]
    fn sift_detects_desync() {
        let (s, mut r) = rec(4, PhaseSymbol::Zero, PhaseSymbol::Zero, true);
        r.index = 5;
        assert!(matches!(sift(&[s], &[r]), Err(ProtocolError::Desync { position: 0, .. })));
        assert!(matches!(sift(&[s], &[]), Err(ProtocolError::Desync { .. })));
    }

    #[test]
    fn sift_fraction_is_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mut s = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for i in 0..n as u64 {
            let a = PhaseSymbol::from_quarter_turns(rng.random_range(0..4));
            let b = PhaseSymbol::from_quarter_turns(rng.random_range(0..4));
            let (x, y) = rec(i, a, b, true);
            s.push(x);
            r.push(y);
        }
        let kept = sift(&s, &r).unwrap().len() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((kept - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn qber_estimation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let same = SiftedKey {
            indices: (0..100).collect(),
            sender: vec![1; 100],
            receiver: vec![1; 100],
        };
        let (q, rest) = estimate_qber(&same, 0.1, &mut rng).unwrap();
        assert_eq!(q.estimate, 0.0);
        assert_eq!(q.disclosed_count, 10);
        assert_eq!(rest.len(), 90);

        let opposite = SiftedKey {
            indices: (0..100).collect(),
            sender: vec![0; 100],
            receiver: vec![1; 100],
        };
        assert_eq!(estimate_qber(&opposite, 0.1, &mut rng).unwrap().0.estimate, 1.0);
        assert!(matches!(
            estimate_qber(&SiftedKey::default(), 0.1, &mut rng),
            Err(ProtocolError::InsufficientData(_))
        ));
        assert!(estimate_qber(&same, 0.0, &mut rng).is_err());
    }

    #[test]
    fn qber_estimate_of_iid_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let sender: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let receiver: Vec<u8> = sender.iter().map(|&b| b ^ u8::from(rng.random_bool(0.05))).collect();
        let key = SiftedKey {
            indices: (0..n as u64).collect(),
            sender,
            receiver,
        };
        let (q, _) = estimate_qber(&key, 0.1, &mut rng).unwrap();
        let sigma = (0.05 * 0.95 / q.disclosed_count as f64).sqrt();
        assert!((q.estimate - 0.05).abs() < 3.0 * sigma, "{}", q.estimate);
    }

    #[test]
    fn abort_rule() {
        assert_eq!(abort_check(0.077), Verdict::Continue);
        assert_eq!(abort_check(0.115), Verdict::Continue);
        assert_eq!(abort_check(0.20), Verdict::Abort);
    }

    #[test]
    fn noiseless_session() {
        let p = LinkPhysics {
            mean_photon_number: 1.0,
            transmittance: 1.0,
            efficiency: 1.0,
            visibility: 1.0,
            dark_count_prob: 0.0,
            crosstalk_click_prob: 0.0,
            excess_error: 0.0,
        };
        let s = run_session(&config(p, 20_000)).unwrap();
        assert_eq!(s.sifted.mismatches(), 0);
        assert_eq!(s.qber_sample.unwrap().estimate, 0.0);
        assert_eq!(s.status, SessionStatus::Completed);
        assert_eq!(s.key.sender, s.key.receiver);
        // basis-matched share of clicks: matched bins click with p(0) = 1 - e^-1
        // half the time and never at Δφ = π; mismatched bins click with 1 - e^-1/2.
        let p0 = 1.0 - (-1.0f64).exp();
        let ph = 1.0 - (-0.5f64).exp();
        let share = 0.25 * p0 / (0.25 * p0 + 0.5 * ph);
        let observed = s.sifted.len() as f64 / s.clicks as f64;
        let sigma = (share * (1.0 - share) / s.clicks as f64).sqrt();
        assert!((observed - share).abs() < 3.0 * sigma, "{observed} vs {share}");
        // mismatched clicks never reach the key
        for (i, idx) in s.sifted.indices.iter().enumerate() {
            let r = s.transcript.iter().find(|r| r.index == *idx).unwrap();
            assert_eq!(decode(r.sender_phase).basis, decode(r.receiver_phase).basis);
            assert_eq!(s.sifted.sender[i], decode(r.sender_phase).bit);
        }
    }

    #[test]
    fn session_is_deterministic() {
        let a = run_session(&config(physics(), 200_000)).unwrap();
        let b = run_session(&config(physics(), 200_000)).unwrap();
        assert_eq!(a, b);
        let mut other = config(physics(), 200_000);
        other.master_seed = 43;
        assert_ne!(run_session(&other).unwrap().transcript, a.transcript);
    }

    #[test]
    fn zero_pulses_rejected() {
        assert!(run_session(&config(physics(), 0)).is_err());
    }

    #[test]
    fn transcript_log_line() {
        let r = PulseRecord {
            index: 7,
            sender_phase: PhaseSymbol::HalfPi,
            receiver_phase: PhaseSymbol::ThreeHalfPi,
            clicked: true,
            cause: Some(ClickCause::Dark),
        };
        assert_eq!(r.log_line(), "7 pi/2 3pi/2 1 dark");
    }
}
