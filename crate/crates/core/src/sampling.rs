//! Trajectory simulation and conversion of one trajectory into iid draws
//! from an induced distribution.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Geometric;
use serde::{Deserialize, Serialize};

use crate::chain::{ProbVector, TransitionMatrix};
use crate::config::Constants;
use crate::error::{ChainError, Result};
use crate::metrics::Symbol;
use crate::subset;

/// A finite path `X_1, …, X_m` over `[d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub d: usize,
    pub states: Vec<usize>,
    pub seed: Option<u64>,
    pub initial: Option<ProbVector>,
}

impl Trajectory {
    /// An observed path with no provenance.
    pub fn observed(d: usize, states: Vec<usize>) -> Result<Self> {
        if states.is_empty() {
            return Err(ChainError::BadArgs("a trajectory needs at least one state".into()));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= d) {
            return Err(ChainError::TrajectoryAlphabetMismatch { state: s, d });
        }
        Ok(Self { d, states, seed: None, initial: None })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Empirical transition counts `N(i,j)`.
    pub fn transition_counts(&self) -> Vec<Vec<u64>> {
        let mut n = vec![vec![0u64; self.d]; self.d];
        for w in self.states.windows(2) {
            n[w[0]][w[1]] += 1;
        }
        n
    }
}

/// Visit times per state, in increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HittingSchedule {
    pub visits: Vec<Vec<usize>>,
}

impl HittingSchedule {
    pub fn new(traj: &Trajectory) -> Self {
        let mut visits = vec![Vec::new(); traj.d];
        for (t, &s) in traj.states.iter().enumerate() {
            visits[s].push(t);
        }
        Self { visits }
    }

    /// Visits to `i` that have an observed successor.
    pub fn usable(&self, i: usize, len: usize) -> usize {
        let v = &self.visits[i];
        v.len() - usize::from(v.last() == Some(&(len - 1)))
    }
}

pub fn simulate(p: &TransitionMatrix, mu: &ProbVector, m: usize, seed: u64) -> Result<Trajectory> {
    let d = p.d();
    if mu.d() != d {
        return Err(ChainError::ShapeMismatch { expected: d, got: mu.d() });
    }
    if m == 0 {
        return Err(ChainError::BadArgs("trajectory length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = WeightedIndex::new(mu.as_slice()).map_err(|e| ChainError::BadNu(e.to_string()))?;
    let rows = (0..d)
        .map(|i| WeightedIndex::new(p.row(i)).map_err(|e| ChainError::MalformedMatrix(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut states = Vec::with_capacity(m);
    let mut x = start.sample(&mut rng);
    states.push(x);
    for _ in 1..m {
        x = rows[x].sample(&mut rng);
        states.push(x);
    }
    Ok(Trajectory { d, states, seed: Some(seed), initial: Some(mu.clone()) })
}

/// Emulates the `α`-lazy chain from a path of the original chain by
/// repeating each state a Geometric number of extra times, `P(G = k) =
/// α^k (1 − α)`.
pub fn lazify_trajectory(traj: &Trajectory, alpha: f64, seed: u64) -> Result<Trajectory> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(ChainError::AlphaOutOfRange(alpha));
    }
    let hold = Geometric::new(1.0 - alpha).map_err(|e| ChainError::BadArgs(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(traj.len() + traj.len() / 4);
    for &s in &traj.states {
        let extra = hold.sample(&mut rng) as usize;
        states.extend(std::iter::repeat_n(s, extra + 1));
    }
    Ok(Trajectory { d: traj.d, states, seed: traj.seed, initial: traj.initial.clone() })
}

/// Result of the trajectory-to-iid conversion. Failure to collect enough
/// visits is an ordinary outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IidOutcome {
    Samples(Vec<Symbol>),
    Fail { state: usize, needed: usize, available: usize },
}

impl IidOutcome {
    pub fn is_fail(&self) -> bool {
        matches!(self, Self::Fail { .. })
    }

    pub fn samples(&self) -> Option<&[Symbol]> {
        match self {
            Self::Samples(s) => Some(s),
            Self::Fail { .. } => None,
        }
    }
}

/// Draws `Z_1..Z_l` from `ν` on the stream `seed`, then pairs each `Z_k` with
/// the successor of the next unused visit to `Z_k`. Successors outside `S`
/// become `∞`.
pub fn iid_generate(traj: &Trajectory, set: &[usize], nu: &ProbVector, l: usize, seed: u64) -> Result<IidOutcome> {
    let schedule = HittingSchedule::new(traj);
    iid_generate_with(traj, &schedule, set, nu, l, seed)
}

pub fn iid_generate_with(
    traj: &Trajectory,
    schedule: &HittingSchedule,
    set: &[usize],
    nu: &ProbVector,
    l: usize,
    seed: u64,
) -> Result<IidOutcome> {
    let d = traj.d;
    let set = subset::normalize(set, d)?;
    check_nu(nu, &set, d)?;
    if l == 0 {
        return Ok(IidOutcome::Samples(Vec::new()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = WeightedIndex::new(nu.as_slice()).map_err(|e| ChainError::BadNu(e.to_string()))?;
    let z: Vec<usize> = (0..l).map(|_| draw.sample(&mut rng)).collect();
    let mut hist = vec![0usize; d];
    for &i in &z {
        hist[i] += 1;
    }
    for &i in &set {
        let available = schedule.usable(i, traj.len());
        if hist[i] > available {
            return Ok(IidOutcome::Fail { state: i, needed: hist[i], available });
        }
    }
    let mut used = vec![0usize; d];
    let samples = z
        .into_iter()
        .map(|i| {
            let t = schedule.visits[i][used[i]];
            used[i] += 1;
            let j = traj.states[t + 1];
            if set.binary_search(&j).is_ok() {
                Symbol::Pair(i, j)
            } else {
                Symbol::Infinity
            }
        })
        .collect();
    Ok(IidOutcome::Samples(samples))
}

fn check_nu(nu: &ProbVector, set: &[usize], d: usize) -> Result<()> {
    if nu.d() != d {
        return Err(ChainError::BadNu(format!("ν has {} entries, expected {d}", nu.d())));
    }
    if set.is_empty() {
        return Err(ChainError::EmptySubset);
    }
    for i in 0..d {
        let inside = set.binary_search(&i).is_ok();
        if inside && nu.get(i) <= 0.0 {
            return Err(ChainError::BadNu(format!("ν vanishes at state {i} of S")));
        }
        if !inside && nu.get(i) > 0.0 {
            return Err(ChainError::BadNu(format!("ν charges state {i} outside S")));
        }
    }
    Ok(())
}

/// `⌈C_vis · ln(1/(δ π⋆)) / (π⋆ γ)⌉` visits for every state of a component
/// to be seen often enough.
pub fn required_visits(pi_s_star: f64, gamma: f64, delta: f64, constants: &Constants) -> Result<u64> {
    if !(pi_s_star > 0.0 && pi_s_star <= 1.0 && gamma > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(ChainError::BadArgs("need π⋆ in (0,1], γ > 0, δ in (0,1)".into()));
    }
    Ok((constants.c_vis * (1.0 / (delta * pi_s_star)).ln() / (pi_s_star * gamma)).ceil() as u64)
}

/// `⌈C_hist · ln(d/δ) / p⋆⌉` draws, past which every histogram cell stays
/// below twice its mean with probability `1 − δ`.
pub fn histogram_cap_size(p_star: f64, d: usize, delta: f64, constants: &Constants) -> Result<u64> {
    if !(p_star > 0.0 && p_star <= 1.0 && d >= 1 && delta > 0.0 && delta < 1.0) {
        return Err(ChainError::BadArgs("need p⋆ in (0,1], d ≥ 1, δ in (0,1)".into()));
    }
    Ok((constants.c_hist * (d as f64 / delta).ln() / p_star).ceil() as u64)
}

/// Whether every histogram cell of `sample` (indices into `p`) is at most
/// `2 m p(i)`.
pub fn histogram_cap_check(sample: &[usize], p: &[f64]) -> Result<bool> {
    let mut hist = vec![0usize; p.len()];
    for &s in sample {
        if s >= p.len() {
            return Err(ChainError::AlphabetMismatch(format!("symbol {s} outside alphabet of size {}", p.len())));
        }
        hist[s] += 1;
    }
    let m = sample.len() as f64;
    Ok(hist.iter().zip(p).all(|(&v, &pi)| v as f64 <= 2.0 * m * pi))
}
