//! Per-session random streams.
//!
//! Each session draws from its own ChaCha8 stream keyed by SHA-256 over the
//! master seed and the session identifier, so results never depend on how
//! sessions are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SessionRng = ChaCha8Rng;

const DOMAIN: &[u8] = b"qkd-star/session-stream/v1";

/// Derives the stream for `session_id` under `master_seed`.
pub fn derive_stream(master_seed: u64, session_id: &str) -> SessionRng {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(master_seed.to_le_bytes());
    h.update((session_id.len() as u64).to_le_bytes());
    h.update(session_id.as_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, RngCore};

    #[test]
    fn same_inputs_same_stream() {
        let mut a = derive_stream(42, "A-B");
        let mut b = derive_stream(42, "A-B");
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_inputs_diverge() {
        let first = |seed, id| derive_stream(seed, id).next_u64();
        assert_ne!(first(42, "A-B"), first(42, "A-C"));
        assert_ne!(first(42, "A-B"), first(43, "A-B"));
    }

    #[test]
    fn golden_first_draw() {
        assert_eq!(derive_stream(42, "A-B").next_u64(), GOLDEN_42_AB);
    }

    // Frozen when the derivation was first implemented; a change here breaks
    // reproducibility of every stored report.
    const GOLDEN_42_AB: u64 = 4_990_358_199_233_241_655;

    #[test]
    fn sibling_streams_uncorrelated() {
        let mut a = derive_stream(7, "A-B");
        let mut b = derive_stream(7, "A-C");
        let n = 1_000_000;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x: f64 = a.random();
            let y: f64 = b.random();
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let n = n as f64;
        let cov = sab / n - (sa / n) * (sb / n);
        let corr = cov / ((saa / n - (sa / n).powi(2)) * (sbb / n - (sb / n).powi(2))).sqrt();
        // sample correlation of independent streams has sd 1/sqrt(n) = 1e-3
        assert!(corr.abs() < 5e-3, "corr = {corr}");
    }
}
