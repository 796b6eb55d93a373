//! Two-intensity decoy-state analysis.
//!
//! Signal pulses (mean photon number ν) are interleaved with weaker decoy
//! pulses (μ < ν). Their gains and error rates bound the yield Y1 and error
//! rate e1 of single-photon pulses, which alone are credited for privacy
//! amplification in the secure key rate.
//!
//! The vacuum yield Y0 enters the Y1 bound with a negative coefficient, so it
//! is replaced by an upper bound taken from the decoy observables:
//! `Y0 <= min(2 E_μ Q_μ e^μ, Q_μ e^μ)`, using e0 = 1/2. The e1 bound uses
//! the conservative Y0 >= 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoyError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate bounds: single-photon yield lower bound {y1_raw:e} is not positive; no secure key can be claimed")]
    Degenerate { y1_raw: f64 },
}

fn invalid(msg: impl Into<String>) -> DecoyError {
    DecoyError::InvalidArgument(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityPair {
    pub signal_mu: f64,
    pub decoy_mu: f64,
}

impl IntensityPair {
    pub fn new(signal_mu: f64, decoy_mu: f64) -> Result<Self, DecoyError> {
        if !(decoy_mu > 0.0 && decoy_mu < signal_mu && signal_mu.is_finite()) {
            return Err(invalid(format!(
                "intensities must satisfy 0 < decoy ({decoy_mu}) < signal ({signal_mu})"
            )));
        }
        Ok(Self { signal_mu, decoy_mu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyObservables {
    pub gain_signal: f64,
    pub gain_decoy: f64,
    pub qber_signal: f64,
    pub qber_decoy: f64,
}

impl DecoyObservables {
    pub fn new(gain_signal: f64, gain_decoy: f64, qber_signal: f64, qber_decoy: f64) -> Result<Self, DecoyError> {
        for (name, g) in [("signal gain", gain_signal), ("decoy gain", gain_decoy)] {
            if !(g > 0.0 && g < 1.0) {
                return Err(invalid(format!("{name} must be in (0, 1), got {g}")));
            }
        }
        for (name, e) in [("signal QBER", qber_signal), ("decoy QBER", qber_decoy)] {
            if !(0.0..=0.5).contains(&e) {
                return Err(invalid(format!("{name} must be in [0, 0.5], got {e}")));
            }
        }
        Ok(Self {
            gain_signal,
            gain_decoy,
            qber_signal,
            qber_decoy,
        })
    }

    /// Non-fatal inconsistencies, such as a decoy gain at or above the signal gain.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gain_decoy >= self.gain_signal {
            w.push(format!(
                "decoy gain {:e} is not below signal gain {:e}",
                self.gain_decoy, self.gain_signal
            ));
        }
        w
    }
}

/// Which bounds had to be clamped into their valid range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampFlags {
    pub y1_clamped: bool,
    pub e1_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    pub y1_lower: f64,
    pub e1_upper: f64,
    /// Single-photon gain under signal intensity, `y1_lower ν e^{-ν}`.
    pub q1_lower: f64,
    /// Vacuum-yield upper bound used in the Y1 bound.
    pub y0_upper: f64,
    pub clamped: ClampFlags,
}

pub fn poisson_pn(mu: f64, n: u32) -> f64 {
    // log form avoids overflow in mu^n and n!
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let ln_pow = if n == 0 { 0.0 } else { n as f64 * mu.ln() };
    (-mu + ln_pow - ln_fact).exp()
}

/// Channel parameters for generating decoy observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyChannel {
    pub transmittance: f64,
    /// Effective detection efficiency seen by the receiver.
    pub efficiency: f64,
    pub dark_count_prob: f64,
    pub visibility_error: f64,
    pub excess_error: f64,
}

/// Expected (gain, QBER) at intensity `mu`.
pub fn expected_observables(channel: &DecoyChannel, mu: f64) -> (f64, f64) {
    let signal = 1.0 - (-mu * channel.transmittance * channel.efficiency).exp();
    let gain = 1.0 - (1.0 - channel.dark_count_prob) * (1.0 - signal);
    let err = 0.5 * channel.dark_count_prob + (channel.visibility_error + channel.excess_error) * signal;
    (gain, err / gain)
}

pub fn observables_for(channel: &DecoyChannel, intensities: &IntensityPair) -> Result<DecoyObservables, DecoyError> {
    let (gs, es) = expected_observables(channel, intensities.signal_mu);
    let (gd, ed) = expected_observables(channel, intensities.decoy_mu);
    DecoyObservables::new(gs, gd, es, ed)
}

/// Lower bound on Y1 and upper bound on e1 from signal and decoy observables.
pub fn bound_y1_e1(obs: &DecoyObservables, intensities: &IntensityPair) -> Result<DecoyBounds, DecoyError> {
    let nu = intensities.signal_mu;
    let mu = intensities.decoy_mu;
    let decoy_weighted = obs.gain_decoy * mu.exp();
    let signal_weighted = obs.gain_signal * nu.exp();

    let y0_upper = (2.0 * obs.qber_decoy * decoy_weighted).min(decoy_weighted);
    let y1_raw = nu / (mu * nu - mu * mu)
        * (decoy_weighted - signal_weighted * (mu * mu) / (nu * nu) - (nu * nu - mu * mu) / (nu * nu) * y0_upper);
    if !(y1_raw > 0.0) {
        return Err(DecoyError::Degenerate { y1_raw });
    }
    let mut clamped = ClampFlags::default();
    let y1_lower = if y1_raw > 1.0 {
        clamped.y1_clamped = true;
        1.0
    } else {
        y1_raw
    };
    let e1_raw = obs.qber_decoy * decoy_weighted / (y1_lower * mu);
    let e1_upper = if e1_raw > 0.5 {
        clamped.e1_clamped = true;
        0.5
    } else {
        e1_raw.max(0.0)
    };
    Ok(DecoyBounds {
        y1_lower,
        e1_upper,
        q1_lower: y1_lower * nu * (-nu).exp(),
        y0_upper,
        clamped,
    })
}

/// Binary entropy in bits.
pub fn h2(x: f64) -> Result<f64, DecoyError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("entropy argument must be in [0, 1], got {x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    /// Secure bits per signal pulse; non-positive means no secure key.
    pub rate_per_pulse: f64,
    pub rate_bps: f64,
    pub repetition_rate_hz: f64,
    pub sifting_factor: f64,
    pub f_ec: f64,
    pub intensities: IntensityPair,
    pub observables: DecoyObservables,
    pub bounds: DecoyBounds,
    pub vacuum_treatment: String,
}

impl KeyRateReport {
    pub fn has_secure_key(&self) -> bool {
        self.rate_per_pulse > 0.0
    }
}

pub const VACUUM_TREATMENT: &str =
    "no vacuum decoy: Y0 upper-bounded by min(2 E_decoy Q_decoy e^mu, Q_decoy e^mu) in the Y1 bound, Y0 >= 0 in the e1 bound";

/// `q (-Q_ν f_ec h2(E_ν) + Q1 (1 - h2(e1)))`.
pub fn secure_key_rate(
    bounds: &DecoyBounds,
    obs: &DecoyObservables,
    intensities: &IntensityPair,
    sifting_factor: f64,
    f_ec: f64,
    repetition_rate_hz: f64,
) -> Result<KeyRateReport, DecoyError> {
    if !(sifting_factor > 0.0 && sifting_factor <= 1.0) {
        return Err(invalid(format!("sifting factor must be in (0, 1], got {sifting_factor}")));
    }
    if !(f_ec >= 1.0) {
        return Err(invalid(format!("error-correction inefficiency must be >= 1, got {f_ec}")));
    }
    if !(repetition_rate_hz > 0.0) {
        return Err(invalid(format!("repetition rate must be positive, got {repetition_rate_hz}")));
    }
    let rate_per_pulse = sifting_factor
        * (-obs.gain_signal * f_ec * h2(obs.qber_signal)? + bounds.q1_lower * (1.0 - h2(bounds.e1_upper)?));
    Ok(KeyRateReport {
        rate_per_pulse,
        rate_bps: rate_per_pulse * repetition_rate_hz,
        repetition_rate_hz,
        sifting_factor,
        f_ec,
        intensities: *intensities,
        observables: *obs,
        bounds: *bounds,
        vacuum_treatment: VACUUM_TREATMENT.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn poisson_values() {
        assert!(close(poisson_pn(1e-12, 0), 1.0, 1e-11));
        // 0.6 e^-0.6
        assert!(close(poisson_pn(0.6, 1), 0.329286981656416, 1e-14));
        for mu in [0.05, 0.2, 0.6, 1.0] {
            let total: f64 = (0..=50).map(|n| poisson_pn(mu, n)).sum();
            assert!(close(total, 1.0, 1e-12));
        }
    }

    #[test]
    fn binary_entropy() {
        assert_eq!(h2(0.0).unwrap(), 0.0);
        assert_eq!(h2(1.0).unwrap(), 0.0);
        assert!(close(h2(0.5).unwrap(), 1.0, 1e-15));
        assert!(close(h2(0.11).unwrap(), 0.499915958164528, 1e-12));
        assert!(h2(-0.1).is_err());
        assert!(h2(1.1).is_err());
        for x in [0.01, 0.1, 0.3, 0.45] {
            assert!(close(h2(x).unwrap(), h2(1.0 - x).unwrap(), 1e-12));
            // midpoint concavity
            let (a, b) = (x, x + 0.05);
            assert!(h2(0.5 * (a + b)).unwrap() >= 0.5 * (h2(a).unwrap() + h2(b).unwrap()));
        }
    }

    #[test]
    fn intensities_ordered() {
        assert!(IntensityPair::new(0.6, 0.2).is_ok());
        assert!(IntensityPair::new(0.2, 0.6).is_err());
        assert!(IntensityPair::new(0.6, 0.6).is_err());
        assert!(IntensityPair::new(0.6, 0.0).is_err());
    }

    #[test]
    fn observables_at_zero_intensity() {
        let ch = DecoyChannel {
            transmittance: 0.05,
            efficiency: 0.1,
            dark_count_prob: 4e-6,
            visibility_error: 0.01,
            excess_error: 0.0,
        };
        let (g, e) = expected_observables(&ch, 0.0);
        assert!(close(g, 4e-6, 1e-15));
        assert!(close(e, 0.5, 1e-12));
    }

    #[test]
    fn qber_falls_with_intensity() {
        let ch = DecoyChannel {
            transmittance: 0.0687,
            efficiency: 0.1,
            dark_count_prob: 5.2e-6,
            visibility_error: 0.0128,
            excess_error: 0.02,
        };
        let mut last = f64::INFINITY;
        for k in 1..100 {
            let (_, e) = expected_observables(&ch, k as f64 * 0.01);
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn ideal_channel_bounds_are_valid() {
        // Y_n = 1 for every n, no errors: gains 1 - 1e-12 keep the observables in (0, 1).
        let obs = DecoyObservables::new(1.0 - 1e-12, 1.0 - 1e-12, 0.0, 0.0).unwrap();
        let b = bound_y1_e1(&obs, &IntensityPair::new(0.6, 0.2).unwrap()).unwrap();
        assert!(b.y1_lower <= 1.0);
        assert!(b.e1_upper >= 0.0);
    }

    #[test]
    fn opaque_channel_is_degenerate() {
        let pd = 1e-5;
        let obs = DecoyObservables::new(pd, pd, 0.5, 0.5).unwrap();
        assert!(matches!(
            bound_y1_e1(&obs, &IntensityPair::new(0.6, 0.2).unwrap()),
            Err(DecoyError::Degenerate { .. })
        ));
        assert_eq!(obs.warnings().len(), 1);
    }

    fn fake_bounds(q1: f64, e1: f64) -> DecoyBounds {
        DecoyBounds {
            y1_lower: q1,
            e1_upper: e1,
            q1_lower: q1,
            y0_upper: 0.0,
            clamped: ClampFlags::default(),
        }
    }

    #[test]
    fn key_rate_limits() {
        let pair = IntensityPair::new(0.6, 0.2).unwrap();
        let obs = DecoyObservables::new(1e-3, 4e-4, 0.0, 0.0).unwrap();
        let r = secure_key_rate(&fake_bounds(2e-4, 0.0), &obs, &pair, 1.0, 1.0, 1e6).unwrap();
        assert!(close(r.rate_per_pulse, 2e-4, 1e-18));
        assert!(close(r.rate_bps, r.rate_per_pulse * 1e6, 1e-12 * r.rate_bps.abs()));

        let obs = DecoyObservables::new(1e-3, 4e-4, 0.02, 0.03).unwrap();
        let r = secure_key_rate(&fake_bounds(2e-4, 0.5), &obs, &pair, 0.5, 1.22, 1e6).unwrap();
        assert!(r.rate_per_pulse <= 0.0);
        assert!(!r.has_secure_key());

        assert!(secure_key_rate(&fake_bounds(2e-4, 0.0), &obs, &pair, 0.5, 0.9, 1e6).is_err());
    }

    #[test]
    fn key_rate_monotone_in_error_rates() {
        let pair = IntensityPair::new(0.6, 0.2).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let e = k as f64 * 0.01;
            let obs = DecoyObservables::new(4e-3, 1.4e-3, e, 0.03).unwrap();
            let r = secure_key_rate(&fake_bounds(2e-3, 0.05), &obs, &pair, 0.5, 1.22, 1e6).unwrap();
            assert!(r.rate_per_pulse <= last);
            last = r.rate_per_pulse;
        }
        let obs = DecoyObservables::new(4e-3, 1.4e-3, 0.03, 0.03).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..=50 {
            let r = secure_key_rate(&fake_bounds(2e-3, k as f64 * 0.01), &obs, &pair, 0.5, 1.22, 1e6).unwrap();
            assert!(r.rate_per_pulse <= last);
            last = r.rate_per_pulse;
        }
    }
}
