//! State-space partitioning into well-connected components plus a
//! leftover set `T` that the chain escapes quickly.

mod embed;
mod mincut;
mod simplex;
mod spccc;

pub use embed::{bourgain_embed, find_comp, round_to_cut, Embedding};
pub use mincut::min_escape;
pub use simplex::{LinearProgram, LpSolution, Relation};
pub use spccc::{solve_spccc_lp, MetricLP};

use serde::{Deserialize, Serialize};

use crate::chain::{self, ProbVector, TransitionMatrix};
use crate::config::{derive_seed, log_factor, Constants};
use crate::error::{ChainError, Result};
use crate::metrics::CutContext;
use crate::sampling;
use crate::subset;

/// Brute-force certification runs up to this many states.
pub const CERTIFY_LIMIT: usize = 12;

/// `δ_S(i,j)`: 1 when the cut separates `i` and `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutMetric {
    pub set: Vec<usize>,
}

impl CutMetric {
    pub fn new(set: &[usize]) -> Self {
        let mut set = set.to_vec();
        set.sort_unstable();
        set.dedup();
        Self { set }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.set.binary_search(&i).is_ok();
        let b = self.set.binary_search(&j).is_ok();
        if a == b {
            0.0
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCertificate {
    pub states: Vec<usize>,
    /// `Σ_{i,j∈S} Q(i,j) / π(S)`.
    pub internal_mass: f64,
    /// Exhaustive `min_{R⊊S} Φ(P,R,S)`; absent for singletons or when not
    /// enumerated.
    pub min_conductance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub components: Vec<ComponentCertificate>,
    /// `min_{∅≠R⊆T}` escape ratio; absent when `T = ∅`.
    pub tail_min_escape: Option<f64>,
    pub internal_threshold: f64,
    pub conductance_threshold: f64,
    pub escape_threshold: f64,
    /// Whether conductance minima were enumerated exhaustively.
    pub enumerated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatePartition {
    pub components: Vec<Vec<usize>>,
    pub tail: Vec<usize>,
    pub beta: f64,
    pub certificates: Certificates,
}

impl StatePartition {
    /// Whether components and tail are disjoint and cover `[d]`.
    pub fn is_exact_partition(&self, d: usize) -> bool {
        let mut seen = vec![false; d];
        for &s in self.components.iter().flatten().chain(&self.tail) {
            if s >= d || seen[s] {
                return false;
            }
            seen[s] = true;
        }
        seen.into_iter().all(|b| b) && self.components.iter().all(|c| !c.is_empty())
    }
}

#[derive(Clone, Debug, Default)]
pub struct PartitionOptions {
    pub constants: Constants,
    /// Enumerate conductance and escape minima when `d ≤ CERTIFY_LIMIT`.
    pub certify: bool,
}

pub fn partition_states(p: &TransitionMatrix, beta: f64, seed: u64) -> Result<StatePartition> {
    partition_with(p, beta, seed, &PartitionOptions { certify: true, ..Default::default() })
}

pub fn partition_with(p: &TransitionMatrix, beta: f64, seed: u64, opts: &PartitionOptions) -> Result<StatePartition> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ChainError::BadArgs(format!("beta must lie in (0,1), got {beta}")));
    }
    let class = chain::validate(p)?;
    if !class.irreducible {
        return Err(ChainError::NotIrreducible);
    }
    if !class.reversible {
        return Err(ChainError::NotReversible);
    }
    let d = p.d();
    let ctx = CutContext::new(p)?;
    let c = &opts.constants;
    let l = log_factor(d);
    let mut run = Run {
        ctx: &ctx,
        beta,
        split_below: c.split_factor * beta / l,
        reps: c.embed_reps,
        seed,
        calls: 0,
        tail: Vec::new(),
        components: Vec::new(),
    };
    run.refine(subset::full(d))?;
    run.repair_traps(c.c3 * beta / l)?;
    let mut components = run.components;
    for comp in &mut components {
        comp.sort_unstable();
    }
    components.sort_by_key(|comp| comp[0]);
    let mut tail = run.tail;
    tail.sort_unstable();
    let certificates = certify(&ctx, &components, &tail, beta, c, opts.certify && d <= CERTIFY_LIMIT)?;
    Ok(StatePartition { components, tail, beta, certificates })
}

struct Run<'a> {
    ctx: &'a CutContext,
    beta: f64,
    split_below: f64,
    reps: f64,
    seed: u64,
    calls: u64,
    tail: Vec<usize>,
    components: Vec<Vec<usize>>,
}

impl Run<'_> {
    /// Pulls subsets of the tail with escape ratio below `threshold` back
    /// out and refines them; a trap that yields no component becomes one.
    fn repair_traps(&mut self, threshold: f64) -> Result<()> {
        for _ in 0..=self.ctx.pi.d() {
            self.tail.sort_unstable();
            let Some((trap, esc)) = min_escape(self.ctx, &self.tail) else { break };
            if esc >= threshold {
                break;
            }
            self.tail.retain(|s| trap.binary_search(s).is_err());
            if self.refine(trap.clone())? == 0 {
                self.tail.retain(|s| trap.binary_search(s).is_err());
                self.components.push(trap);
            }
        }
        Ok(())
    }

    /// Work-list refinement of `start`; returns the number of components
    /// created. Every state ends in a component or in the tail.
    fn refine(&mut self, start: Vec<usize>) -> Result<usize> {
        let mut created = 0;
        let mut work = vec![start];
        while let Some(set) = work.pop() {
            if set.is_empty() {
                continue;
            }
            if set.len() == 1 {
                if self.ctx.internal_mass(&set) >= 1.0 - self.beta {
                    self.components.push(set);
                    created += 1;
                } else {
                    self.tail.push(set[0]);
                }
                continue;
            }
            let mut tail = self.tail.clone();
            tail.sort_unstable();
            let constrained = subset::intersect(&tail, &set);
            let cut = embed::find_comp_with(self.ctx, &set, &constrained, self.reps, derive_seed(self.seed, self.calls))?;
            self.calls += 1;
            if self.ctx.bottleneck(&cut, &set) < self.split_below {
                work.push(subset::complement(&cut, &set));
                work.push(cut);
                continue;
            }
            if self.ctx.internal_mass(&set) >= 1.0 - self.beta {
                self.components.push(set);
                created += 1;
                continue;
            }
            let (low, keep): (Vec<usize>, Vec<usize>) =
                set.iter().partition(|&&i| self.ctx.q.flow(&[i], &set) / self.ctx.pi.get(i) < 1.0 - self.beta);
            self.tail.extend(low);
            work.push(keep);
        }
        Ok(created)
    }
}

fn certify(
    ctx: &CutContext,
    components: &[Vec<usize>],
    tail: &[usize],
    beta: f64,
    c: &Constants,
    enumerate: bool,
) -> Result<Certificates> {
    let l = log_factor(ctx.pi.d());
    let internal_threshold = 1.0 - beta;
    let conductance_threshold = c.c2 * beta / (l * l);
    let escape_threshold = c.c3 * beta / l;
    let mut certs = Vec::with_capacity(components.len());
    let mut failures = Vec::new();
    for comp in components {
        let internal_mass = ctx.internal_mass(comp);
        // Exact up to rounding of the edge measure.
        if internal_mass < internal_threshold - 1e-12 {
            failures.push(format!("component {comp:?} keeps mass {internal_mass}"));
        }
        let min_conductance = if enumerate { ctx.min_bottleneck_bruteforce(comp)?.map(|(_, v)| v) } else { None };
        if let Some(v) = min_conductance {
            if v < conductance_threshold {
                failures.push(format!("component {comp:?} has conductance {v}"));
            }
        }
        certs.push(ComponentCertificate { states: comp.clone(), internal_mass, min_conductance });
    }
    let tail_min_escape = if enumerate {
        ctx.min_escape_bruteforce(tail)?.map(|(_, v)| v)
    } else {
        min_escape(ctx, tail).map(|(_, v)| v)
    };
    if let Some(v) = tail_min_escape {
        if v < escape_threshold {
            failures.push(format!("tail {tail:?} has escape ratio {v}"));
        }
    }
    if enumerate && !failures.is_empty() {
        return Err(ChainError::CertificationFailed(failures.join("; ")));
    }
    Ok(Certificates {
        components: certs,
        tail_min_escape,
        internal_threshold,
        conductance_threshold,
        escape_threshold,
        enumerated: enumerate,
    })
}

/// Block length `k = ⌈8 ln(1/(π_T)⋆)/α²⌉` after which a trajectory has left
/// `T` with probability at least 1/2 from any start.
pub fn tail_block_length(pi_t_star: f64, alpha: f64) -> Result<u64> {
    if !(pi_t_star > 0.0 && pi_t_star <= 1.0 && alpha > 0.0) {
        return Err(ChainError::BadArgs("need (π_T)⋆ in (0,1] and α > 0".into()));
    }
    Ok(((8.0 * (1.0 / pi_t_star).ln() / (alpha * alpha)).ceil() as u64).max(1))
}

/// Length `c_tail · k · ln(1/δ)` at which the escape-count event holds with
/// probability `1 − δ`.
pub fn tail_escape_budget(pi_t_star: f64, alpha: f64, delta: f64, constants: &Constants) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ChainError::BadArgs("δ must lie in (0,1)".into()));
    }
    let k = tail_block_length(pi_t_star, alpha)? as f64;
    Ok((constants.c_tail * k * (1.0 / delta).ln()).ceil() as u64)
}

/// Fraction of `trials` trajectories of length `m`, started from `π`
/// restricted to `T`, that spend at least `m/(4k)` steps outside `T`.
pub fn tail_occupancy_check(p: &TransitionMatrix, tail: &[usize], alpha: f64, m: usize, trials: usize, seed: u64) -> Result<f64> {
    let d = p.d();
    let tail = subset::normalize(tail, d)?;
    if tail.is_empty() || trials == 0 {
        return Ok(1.0);
    }
    if tail.len() == d {
        return Err(ChainError::BadSubset("T must be a proper subset".into()));
    }
    let pi = chain::stationary_distribution(p)?;
    let pi_t_star = tail.iter().map(|&i| pi.get(i)).fold(f64::INFINITY, f64::min);
    let k = tail_block_length(pi_t_star, alpha)?;
    let need = m as f64 / (4.0 * k as f64);
    let start: ProbVector = pi.conditioned_on(&tail)?;
    let mut hits = 0usize;
    for trial in 0..trials {
        let traj = sampling::simulate(p, &start, m, derive_seed(seed, trial as u64))?;
        let outside = traj.states.iter().filter(|s| tail.binary_search(s).is_err()).count();
        if outside as f64 >= need {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(sizes: &[usize], cross: f64) -> TransitionMatrix {
        let d: usize = sizes.iter().sum();
        let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &n)| std::iter::repeat_n(b, n)).collect();
        let rows = (0..d)
            .map(|i| {
                let inside = sizes[block[i]] as f64;
                let outside = (d - sizes[block[i]]) as f64;
                (0..d)
                    .map(|j| if block[i] == block[j] { (1.0 - cross) / inside } else { cross / outside })
                    .collect()
            })
            .collect();
        TransitionMatrix::new(rows).unwrap()
    }

    #[test]
    fn planted_blocks_are_recovered() {
        let p = blocks(&[3, 3], 0.002);
        let part = partition_states(&p, 0.1, 4).unwrap();
        assert_eq!(part.components, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(part.tail.is_empty());
        assert!(part.is_exact_partition(6));
    }

    #[test]
    fn complete_uniform_chain_is_one_component() {
        let d = 5;
        let p = TransitionMatrix::new(vec![vec![1.0 / d as f64; d]; d]).unwrap();
        for beta in [0.05, 0.3, 0.9] {
            let part = partition_states(&p, beta, 0).unwrap();
            assert_eq!(part.components, vec![subset::full(d)]);
            assert!(part.tail.is_empty());
        }
    }

    fn run<'a>(ctx: &'a CutContext, beta: f64) -> Run<'a> {
        Run { ctx, beta, split_below: beta / 4.0, reps: 8.0, seed: 0, calls: 0, tail: vec![], components: vec![] }
    }

    #[test]
    fn low_retention_states_move_to_tail() {
        // {0,1} of the uniform 4-state chain is well connected but keeps
        // only half of its mass.
        let p = TransitionMatrix::new(vec![vec![0.25; 4]; 4]).unwrap();
        let ctx = CutContext::new(&p).unwrap();
        let mut r = run(&ctx, 0.3);
        assert_eq!(r.refine(vec![0, 1]).unwrap(), 0);
        assert_eq!(r.tail, vec![0, 1]);
        let mut r = run(&ctx, 0.6);
        assert_eq!(r.refine(vec![0, 1]).unwrap(), 1);
        assert_eq!(r.components, vec![vec![0, 1]]);
    }

    #[test]
    fn traps_leave_the_tail() {
        let p = blocks(&[2, 2], 0.01);
        let ctx = CutContext::new(&p).unwrap();
        let mut r = run(&ctx, 0.1);
        r.tail = vec![0, 1];
        r.components = vec![vec![2, 3]];
        r.repair_traps(0.1).unwrap();
        assert!(r.tail.is_empty());
        assert_eq!(r.components, vec![vec![2, 3], vec![0, 1]]);
    }

    #[test]
    fn sticky_singletons_are_components() {
        let p = TransitionMatrix::new(vec![vec![0.99, 0.01], vec![0.01, 0.99]]).unwrap();
        let part = partition_states(&p, 0.05, 0).unwrap();
        assert_eq!(part.components, vec![vec![0], vec![1]]);
    }

    #[test]
    fn rejects_bad_beta() {
        let p = blocks(&[2, 2], 0.1);
        assert!(partition_states(&p, 0.0, 0).is_err());
        assert!(partition_states(&p, 1.0, 0).is_err());
    }

    #[test]
    fn same_seed_same_partition() {
        let p = blocks(&[2, 3, 2], 0.05);
        assert_eq!(partition_states(&p, 0.2, 9).unwrap(), partition_states(&p, 0.2, 9).unwrap());
    }

    #[test]
    fn cut_metric_is_side_indicator() {
        let m = CutMetric::new(&[2, 0]);
        assert_eq!(m.distance(0, 2), 0.0);
        assert_eq!(m.distance(1, 3), 0.0);
        assert_eq!(m.distance(0, 1), 1.0);
        assert_eq!(m.distance(3, 2), 1.0);
    }

    #[test]
    fn empty_tail_is_vacuous() {
        let p = blocks(&[2, 2], 0.1);
        assert_eq!(tail_occupancy_check(&p, &[], 0.1, 100, 10, 0).unwrap(), 1.0);
    }
}
