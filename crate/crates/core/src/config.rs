//! Named constants standing in for the hidden constants of the asymptotic
//! bounds, plus seed derivation for Monte Carlo harnesses.

use serde::{Deserialize, Serialize};

/// Every tunable constant in one record. Defaults are the calibrated values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// Visit-count budget multiplier (`required_visits`).
    pub c_vis: f64,
    /// Histogram-cap sample-size multiplier.
    pub c_hist: f64,
    /// Trajectory-length budget multiplier (`trajectory_budget`).
    pub c_len: f64,
    /// iid tester sample-size multiplier.
    pub c_iid: f64,
    /// Target factor of the cut rounding against the optimum, per `log d`.
    pub c_round: f64,
    /// Internal-conductance certificate: `Φ ≥ c2 β / log² d`.
    pub c2: f64,
    /// Tail escape certificate: `escape ≥ c3 β / log d`.
    pub c3: f64,
    /// A found cut with bottleneck ratio below `split_factor β / log d`
    /// splits the candidate set.
    pub split_factor: f64,
    /// Repetitions per scale of the random subset embedding, per `log n`.
    pub embed_reps: f64,
    /// Number of blocks per `log(1/δ)` in the tail-escape budget.
    pub c_tail: f64,
    /// Bootstrap replicates are `ceil(bootstrap_factor / δ)`.
    pub bootstrap_factor: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c_vis: 40.0,
            c_hist: 8.0,
            c_len: 4.0,
            c_iid: 1.0,
            c_round: 4.0,
            c2: 1.0 / 64.0,
            c3: 1.0 / 64.0,
            split_factor: 0.25,
            embed_reps: 8.0,
            c_tail: 8.0,
            bootstrap_factor: 20.0,
        }
    }
}

/// `max(ln d, 1)`: the `log d` of the bounds, floored so tiny `d` does not
/// tighten thresholds.
pub fn log_factor(d: usize) -> f64 {
    (d.max(1) as f64).ln().max(1.0)
}

/// Derives an independent stream seed from `(seed, index)` (SplitMix64).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
