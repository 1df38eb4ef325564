//! Distances between distributions and between chains, cut ratios, and the
//! distribution a chain induces on a component.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{self, EdgeMeasure, ProbVector, TransitionMatrix};
use crate::error::{ChainError, Result};
use crate::subset;

/// Exhaustive enumeration guard (`2^20` subsets).
pub const ENUMERATION_LIMIT: usize = 20;

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(ChainError::ShapeMismatch { expected: p.len(), got: q.len() });
    }
    Ok(())
}

/// Squared Hellinger distance via `1 − Σ √(p q)`.
pub fn hellinger_sq(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let affinity: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((1.0 - affinity).clamp(0.0, 1.0))
}

pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(hellinger_sq(p, q)?.sqrt())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let l1: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

/// Entrywise geometric mean `√(P ∘ P̄)`.
pub fn geometric_mean_matrix(p: &TransitionMatrix, pbar: &TransitionMatrix) -> Result<DMatrix<f64>> {
    if p.d() != pbar.d() {
        return Err(ChainError::ShapeMismatch { expected: p.d(), got: pbar.d() });
    }
    let d = p.d();
    Ok(DMatrix::from_fn(d, d, |i, j| (p.get(i, j) * pbar.get(i, j)).sqrt()))
}

/// `1 − ρ(√(P ∘ P̄))`.
pub fn chain_distance(p: &TransitionMatrix, pbar: &TransitionMatrix) -> Result<f64> {
    let m = geometric_mean_matrix(p, pbar)?;
    let rho = chain::spectral_radius_nonneg(&m)?;
    Ok((1.0 - rho).clamp(0.0, 1.0))
}

/// `max_i |π(i)/π̄(i) − 1|`.
pub fn ratio_distance(pi: &ProbVector, pibar: &ProbVector) -> Result<f64> {
    same_len(pi.as_slice(), pibar.as_slice())?;
    let mut worst = 0.0f64;
    for i in 0..pi.d() {
        let den = pibar.get(i);
        if den <= 0.0 {
            return Err(ChainError::ZeroDenominator(i));
        }
        worst = worst.max((pi.get(i) / den - 1.0).abs());
    }
    Ok(worst)
}

/// A cell of the alphabet `S × S ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Pair(usize, usize),
    Infinity,
}

/// Distribution on `S × S ∪ {∞}` with `(i,j) ↦ ν(i)P(i,j)/ν(S)` and the
/// remaining mass on `∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedDistribution {
    states: Vec<usize>,
    mass: BTreeMap<(usize, usize), f64>,
    infinity_mass: f64,
}

impl InducedDistribution {
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.mass.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn infinity_mass(&self) -> f64 {
        self.infinity_mass
    }

    /// Total mass on pairs inside the component.
    pub fn internal_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    /// `|S|² + 1`.
    pub fn alphabet_size(&self) -> usize {
        self.states.len() * self.states.len() + 1
    }

    /// Position of a symbol in the canonical order: pairs row-major by their
    /// rank inside `S`, then `∞`.
    pub fn index_of(&self, symbol: Symbol) -> Option<usize> {
        let n = self.states.len();
        match symbol {
            Symbol::Infinity => Some(n * n),
            Symbol::Pair(i, j) => {
                let a = self.states.binary_search(&i).ok()?;
                let b = self.states.binary_search(&j).ok()?;
                Some(a * n + b)
            }
        }
    }

    pub fn symbol_at(&self, index: usize) -> Option<Symbol> {
        let n = self.states.len();
        match index.cmp(&(n * n)) {
            std::cmp::Ordering::Less => Some(Symbol::Pair(self.states[index / n], self.states[index % n])),
            std::cmp::Ordering::Equal => Some(Symbol::Infinity),
            std::cmp::Ordering::Greater => None,
        }
    }

    /// Probabilities in canonical order.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.states.len();
        let mut out = vec![0.0; n * n + 1];
        for (&(i, j), &m) in &self.mass {
            out[self.index_of(Symbol::Pair(i, j)).expect("member pair")] = m;
        }
        out[n * n] = self.infinity_mass;
        out
    }
}

pub fn induced_distribution(
    p: &TransitionMatrix,
    nu: &ProbVector,
    set: &[usize],
) -> Result<InducedDistribution> {
    if nu.d() != p.d() {
        return Err(ChainError::ShapeMismatch { expected: p.d(), got: nu.d() });
    }
    let states = subset::normalize(set, p.d())?;
    if states.is_empty() {
        return Err(ChainError::EmptySubset);
    }
    let nu_s = nu.mass(&states);
    if nu_s <= 0.0 {
        return Err(ChainError::ZeroMassSubset);
    }
    let mut mass = BTreeMap::new();
    let mut total = 0.0;
    for &i in &states {
        for &j in &states {
            let m = nu.get(i) * p.get(i, j) / nu_s;
            if m > 0.0 {
                mass.insert((i, j), m);
                total += m;
            }
        }
    }
    Ok(InducedDistribution { states, mass, infinity_mass: (1.0 - total).max(0.0) })
}

/// Bottleneck ratio of `set` inside `ambient`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutRatio {
    pub set: Vec<usize>,
    pub ambient: Vec<usize>,
    pub value: f64,
}

/// Edge measure and stationary distribution of an irreducible chain, the
/// inputs shared by every cut computation.
#[derive(Clone, Debug)]
pub struct CutContext {
    pub pi: ProbVector,
    pub q: EdgeMeasure,
}

impl CutContext {
    pub fn new(p: &TransitionMatrix) -> Result<Self> {
        let pi = chain::stationary_distribution(p)?;
        let q = chain::edge_measure(p, &pi)?;
        Ok(Self { pi, q })
    }

    /// `Φ(P,S,I) = Q(S, I∖S) / min{π(S), π(I∖S)}` for `∅ ≠ S ⊊ I` (sorted).
    pub fn bottleneck(&self, set: &[usize], ambient: &[usize]) -> f64 {
        let rest = subset::complement(set, ambient);
        let cut = self.q.flow(set, &rest);
        cut / self.pi.mass(set).min(self.pi.mass(&rest))
    }

    /// `Q(R, [d]∖R) / π(R)`: probability of leaving `R` in one step from
    /// stationarity conditioned on `R`.
    pub fn escape(&self, set: &[usize]) -> f64 {
        let rest = subset::complement(set, &subset::full(self.pi.d()));
        self.q.flow(set, &rest) / self.pi.mass(set)
    }

    /// `Σ_{i,j∈S} Q(i,j) / π(S)`.
    pub fn internal_mass(&self, set: &[usize]) -> f64 {
        self.q.flow(set, set) / self.pi.mass(set)
    }

    /// Sparsest-cut objective `Q(S,I∖S) + Q(I∖S,S)` over `2π(S)π(I∖S)`.
    pub fn cut_metric_ratio(&self, set: &[usize], ambient: &[usize]) -> f64 {
        let rest = subset::complement(set, ambient);
        let num = self.q.flow(set, &rest) + self.q.flow(&rest, set);
        num / (2.0 * self.pi.mass(set) * self.pi.mass(&rest))
    }

    /// Exhaustive `min_{∅≠R⊊S} Φ(P,R,S)`; `None` for singletons.
    pub fn min_bottleneck_bruteforce(&self, set: &[usize]) -> Result<Option<(Vec<usize>, f64)>> {
        subset::check_enumerable(set.len(), ENUMERATION_LIMIT)?;
        let n = set.len();
        let mut best: Option<(Vec<usize>, f64)> = None;
        // Φ is symmetric under complement, so masks containing the first
        // element cover every cut once.
        for mask in 1u64..(1u64 << n) - 1 {
            if mask & 1 == 0 {
                continue;
            }
            let r = subset::from_mask(set, mask);
            let v = self.bottleneck(&r, set);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((r, v));
            }
        }
        Ok(best)
    }

    /// Exhaustive `min_{∅≠R⊆T} Q(R,[d]∖R)/π(R)`; `None` for empty `T`.
    pub fn min_escape_bruteforce(&self, tail: &[usize]) -> Result<Option<(Vec<usize>, f64)>> {
        subset::check_enumerable(tail.len(), ENUMERATION_LIMIT)?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        for mask in 1u64..(1u64 << tail.len()) {
            let r = subset::from_mask(tail, mask);
            let v = self.escape(&r);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((r, v));
            }
        }
        Ok(best)
    }

    /// Exhaustive minimum of the sparsest-cut objective over `T ⊆ S ⊊ I`.
    pub fn min_cut_metric_ratio_bruteforce(
        &self,
        ambient: &[usize],
        constrained: &[usize],
    ) -> Result<(Vec<usize>, f64)> {
        subset::check_enumerable(ambient.len(), ENUMERATION_LIMIT)?;
        let n = ambient.len();
        let mut best: Option<(Vec<usize>, f64)> = None;
        for mask in 1u64..(1u64 << n) - 1 {
            let s = subset::from_mask(ambient, mask);
            if !subset::is_subset(constrained, &s) {
                continue;
            }
            let v = self.cut_metric_ratio(&s, ambient);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((s, v));
            }
        }
        best.ok_or_else(|| ChainError::BadSubset("no admissible cut".into()))
    }
}

pub fn bottleneck_ratio(p: &TransitionMatrix, set: &[usize], ambient: &[usize]) -> Result<CutRatio> {
    let d = p.d();
    let s = subset::normalize(set, d)?;
    let i = subset::normalize(ambient, d)?;
    if s.is_empty() || !subset::is_subset(&s, &i) || s.len() == i.len() {
        return Err(ChainError::BadSubset("need ∅ ≠ S ⊊ I".into()));
    }
    let ctx = CutContext::new(p)?;
    let value = ctx.bottleneck(&s, &i);
    Ok(CutRatio { set: s, ambient: i, value })
}

/// `Φ⋆(P)` by enumeration of all nonempty proper subsets.
pub fn cheeger_constant_bruteforce(p: &TransitionMatrix) -> Result<f64> {
    subset::check_enumerable(p.d(), ENUMERATION_LIMIT)?;
    if p.d() < 2 {
        return Err(ChainError::BadSubset("a one-state chain has no proper cut".into()));
    }
    let ctx = CutContext::new(p)?;
    let all = subset::full(p.d());
    Ok(ctx.min_bottleneck_bruteforce(&all)?.expect("d >= 2").1)
}

/// Outcome of checking `λ_max(P_T) ≤ 1 − α²/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub lambda: f64,
    pub alpha: f64,
    pub holds: bool,
}

/// Largest eigenvalue of the substochastic block `P_T` against the minimal
/// escape ratio `α` of subsets of `T`.
pub fn tail_eigenvalue_bound_check(p: &TransitionMatrix, tail: &[usize]) -> Result<TailBound> {
    let d = p.d();
    let t = subset::normalize(tail, d)?;
    if t.is_empty() || t.len() == d {
        return Err(ChainError::BadSubset("need ∅ ≠ T ⊊ [d]".into()));
    }
    subset::check_enumerable(t.len(), ENUMERATION_LIMIT)?;
    if !chain::validate(p)?.reversible {
        return Err(ChainError::NotReversible);
    }
    let ctx = CutContext::new(p)?;
    let n = t.len();
    // P_T is similar to a symmetric matrix under the same D^{1/2} scaling as P.
    let sym = DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (t[a], t[b]);
        let x = (ctx.pi.get(i) / ctx.pi.get(j)).sqrt() * p.get(i, j);
        let y = (ctx.pi.get(j) / ctx.pi.get(i)).sqrt() * p.get(j, i);
        0.5 * (x + y)
    });
    let lambda = SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let alpha = ctx.min_escape_bruteforce(&t)?.expect("T nonempty").1;
    let holds = lambda <= 1.0 - alpha * alpha / 2.0 + 1e-9;
    Ok(TailBound { lambda, alpha, holds })
}
