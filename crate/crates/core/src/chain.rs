//! Transition matrices, distributions over states and the structural and
//! spectral operations on chains.
//!
//! Storage is dense. All operations are pure functions of their inputs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ChainError, Result};
use crate::subset;

/// Row sums of a [`TransitionMatrix`] must be within this of 1.
pub const ROW_SUM_TOL: f64 = 1e-10;
/// Tolerance of the detailed-balance check used for classification.
pub const DETAILED_BALANCE_TOL: f64 = 1e-8;
/// Computed entries above this negative value are treated as rounding noise.
const NEG_NOISE: f64 = -1e-12;

/// Dense row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    m: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(ChainError::MalformedMatrix("matrix has no rows".into()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != d) {
            return Err(ChainError::MalformedMatrix(format!(
                "row {r} has {} entries, expected {d}",
                rows[r].len()
            )));
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Self::from_matrix(m)
    }

    /// Validates a square matrix as row-stochastic within [`ROW_SUM_TOL`].
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(ChainError::MalformedMatrix(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = m.nrows();
        for i in 0..d {
            let mut sum = 0.0;
            for j in 0..d {
                let x = m[(i, j)];
                if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                    return Err(ChainError::MalformedMatrix(format!(
                        "entry ({i}, {j}) = {x} is not in [0, 1]"
                    )));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ChainError::MalformedMatrix(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { m })
    }

    /// Wraps the result of an internal computation: clamps rounding noise and
    /// renormalizes rows.
    pub(crate) fn from_computed(mut m: DMatrix<f64>) -> Self {
        let d = m.nrows();
        for i in 0..d {
            let mut sum = 0.0;
            for j in 0..d {
                let x = m[(i, j)];
                debug_assert!(x >= NEG_NOISE, "computed entry ({i},{j}) = {x}");
                let x = x.max(0.0);
                m[(i, j)] = x;
                sum += x;
            }
            for j in 0..d {
                m[(i, j)] /= sum;
            }
        }
        Self { m }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: DMatrix::identity(d, d) }
    }

    pub fn d(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.m.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.d()).map(|i| self.row(i)).collect()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.m - &other.m).amax()
    }

    /// Support graph adjacency: `i -> j` when `P(i,j) > 0`.
    fn successors(&self) -> Vec<Vec<usize>> {
        let d = self.d();
        (0..d).map(|i| (0..d).filter(|&j| self.m[(i, j)] > 0.0).collect()).collect()
    }
}

/// Probability distribution over `d` states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    p: Vec<f64>,
}

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(ChainError::MalformedVector("empty vector".into()));
        }
        if let Some(i) = p.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(ChainError::MalformedVector(format!("entry {i} = {}", p[i])));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ChainError::MalformedVector(format!("entries sum to {sum}")));
        }
        Ok(Self { p })
    }

    pub(crate) fn from_computed(mut p: Vec<f64>) -> Self {
        for x in p.iter_mut() {
            *x = x.max(0.0);
        }
        let sum: f64 = p.iter().sum();
        for x in p.iter_mut() {
            *x /= sum;
        }
        Self { p }
    }

    pub fn uniform(d: usize) -> Self {
        Self { p: vec![1.0 / d as f64; d] }
    }

    pub fn point_mass(d: usize, i: usize) -> Self {
        let mut p = vec![0.0; d];
        p[i] = 1.0;
        Self { p }
    }

    pub fn d(&self) -> usize {
        self.p.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, i: usize) -> f64 {
        self.p[i]
    }

    /// Smallest entry (the π⋆ of a stationary distribution).
    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.p[i]).sum()
    }

    /// The distribution restricted to `set` and renormalized; zero elsewhere.
    pub fn conditioned_on(&self, set: &[usize]) -> Result<Self> {
        let mass = self.mass(set);
        if mass <= 0.0 {
            return Err(ChainError::ZeroMassSubset);
        }
        let mut p = vec![0.0; self.d()];
        for &i in set {
            p[i] = self.p[i] / mass;
        }
        Ok(Self { p })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Joint distribution `diag(ν) P` over ordered state pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMeasure {
    m: DMatrix<f64>,
}

impl EdgeMeasure {
    pub fn d(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn total_mass(&self) -> f64 {
        self.m.sum()
    }

    /// `Σ_{i∈from, j∈to} Q(i,j)`.
    pub fn flow(&self, from: &[usize], to: &[usize]) -> f64 {
        from.iter().map(|&i| to.iter().map(|&j| self.m[(i, j)]).sum::<f64>()).sum()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.m - self.m.transpose()).amax()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainClass {
    pub irreducible: bool,
    pub reversible: bool,
    pub ergodic: bool,
}

/// Classifies a chain: irreducibility by reachability on the support graph,
/// reversibility by detailed balance, ergodicity by aperiodicity.
pub fn validate(p: &TransitionMatrix) -> Result<ChainClass> {
    TransitionMatrix::from_matrix(p.m.clone())?;
    let irreducible = is_irreducible(p);
    if !irreducible {
        return Ok(ChainClass { irreducible, reversible: false, ergodic: false });
    }
    let pi = stationary_distribution(p)?;
    let reversible = detailed_balance_residual(p, &pi) <= DETAILED_BALANCE_TOL;
    let ergodic = period(p) == 1;
    Ok(ChainClass { irreducible, reversible, ergodic })
}

fn reachable_from(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

pub fn is_irreducible(p: &TransitionMatrix) -> bool {
    let adj = p.successors();
    if !reachable_from(&adj, 0).iter().all(|&b| b) {
        return false;
    }
    let d = p.d();
    let mut rev = vec![Vec::new(); d];
    for (u, succ) in adj.iter().enumerate() {
        for &v in succ {
            rev[v].push(u);
        }
    }
    reachable_from(&rev, 0).iter().all(|&b| b)
}

/// Period of an irreducible chain: gcd over support edges `u -> v` of
/// `level(u) + 1 - level(v)` for BFS levels from state 0.
pub fn period(p: &TransitionMatrix) -> usize {
    let adj = p.successors();
    let d = p.d();
    let mut level = vec![usize::MAX; d];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for u in 0..d {
        for &v in &adj[u] {
            if level[u] == usize::MAX || level[v] == usize::MAX {
                continue;
            }
            let diff = (level[u] + 1).abs_diff(level[v]);
            g = gcd(g, diff);
        }
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `max_{i,j} |π(i)P(i,j) − π(j)P(j,i)|`.
pub fn detailed_balance_residual(p: &TransitionMatrix, pi: &ProbVector) -> f64 {
    let d = p.d();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in (i + 1)..d {
            let r = (pi.get(i) * p.get(i, j) - pi.get(j) * p.get(j, i)).abs();
            worst = worst.max(r);
        }
    }
    worst
}

/// Solves `πP = π`, `Σπ = 1` directly (one equation of the singular system is
/// replaced by the normalization), which is exact for periodic chains too.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<ProbVector> {
    if !is_irreducible(p) {
        return Err(ChainError::NotIrreducible);
    }
    let d = p.d();
    let mut a = p.m.transpose() - DMatrix::<f64>::identity(d, d);
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(d);
    b[d - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(ChainError::NotIrreducible)?;
    let pi = ProbVector::from_computed(x.iter().copied().collect());
    // One refinement step against rounding in ill-conditioned systems.
    let residual = stationarity_residual(p, &pi);
    if residual > 1e-10 {
        let mut v = DVector::from_column_slice(pi.as_slice());
        for _ in 0..50 {
            v = p.m.transpose() * &v;
            let s = v.sum();
            v /= s;
        }
        return Ok(ProbVector::from_computed(v.iter().copied().collect()));
    }
    Ok(pi)
}

/// `‖πP − π‖∞`.
pub fn stationarity_residual(p: &TransitionMatrix, pi: &ProbVector) -> f64 {
    let v = DVector::from_column_slice(pi.as_slice());
    let moved = p.m.transpose() * &v;
    (moved - v).amax()
}

pub fn edge_measure(p: &TransitionMatrix, nu: &ProbVector) -> Result<EdgeMeasure> {
    if nu.d() != p.d() {
        return Err(ChainError::ShapeMismatch { expected: p.d(), got: nu.d() });
    }
    let d = p.d();
    let m = DMatrix::from_fn(d, d, |i, j| nu.get(i) * p.get(i, j));
    Ok(EdgeMeasure { m })
}

/// `P* = diag(π)^{-1} Pᵀ diag(π)`.
pub fn time_reversal(p: &TransitionMatrix) -> Result<TransitionMatrix> {
    let pi = stationary_distribution(p)?;
    let d = p.d();
    let m = DMatrix::from_fn(d, d, |i, j| pi.get(j) * p.get(j, i) / pi.get(i));
    Ok(TransitionMatrix::from_computed(m))
}

/// `P† = P* P`.
pub fn multiplicative_reversibilization(p: &TransitionMatrix) -> Result<TransitionMatrix> {
    let star = time_reversal(p)?;
    Ok(TransitionMatrix::from_computed(&star.m * &p.m))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(ChainError::AlphaOutOfRange(alpha))
    }
}

/// `αI + (1−α)P`.
pub fn lazy_version(p: &TransitionMatrix, alpha: f64) -> Result<TransitionMatrix> {
    check_alpha(alpha)?;
    let d = p.d();
    let m = DMatrix::<f64>::identity(d, d) * alpha + &p.m * (1.0 - alpha);
    Ok(TransitionMatrix::from_computed(m))
}

/// `αP + (1−α)P̄`.
pub fn convex_combination(
    p: &TransitionMatrix,
    pbar: &TransitionMatrix,
    alpha: f64,
) -> Result<TransitionMatrix> {
    if p.d() != pbar.d() {
        return Err(ChainError::ShapeMismatch { expected: p.d(), got: pbar.d() });
    }
    check_alpha(alpha)?;
    Ok(TransitionMatrix::from_computed(&p.m * alpha + &pbar.m * (1.0 - alpha)))
}

/// `P^k` by repeated squaring.
pub fn matrix_power(p: &TransitionMatrix, k: u64) -> Result<TransitionMatrix> {
    if k == 0 {
        return Err(ChainError::BadArgs("power must be at least 1".into()));
    }
    let mut base = p.m.clone();
    let mut acc: Option<DMatrix<f64>> = None;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a * &base,
            });
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    Ok(TransitionMatrix::from_computed(acc.expect("k >= 1")))
}

/// Watched chain on `set`: `P_S + P_{S,C} (I − P_C)^{-1} P_{C,S}` with `C` the
/// complement, i.e. the excursion series summed in closed form.
pub fn censor(p: &TransitionMatrix, set: &[usize]) -> Result<TransitionMatrix> {
    let d = p.d();
    let s = subset::normalize(set, d)?;
    if s.is_empty() {
        return Err(ChainError::EmptySubset);
    }
    if !is_irreducible(p) {
        return Err(ChainError::NotIrreducible);
    }
    let c = subset::complement(&s, &subset::full(d));
    let (ns, nc) = (s.len(), c.len());
    let p_s = DMatrix::from_fn(ns, ns, |a, b| p.get(s[a], s[b]));
    if nc == 0 {
        return Ok(TransitionMatrix::from_computed(p_s));
    }
    let p_sc = DMatrix::from_fn(ns, nc, |a, b| p.get(s[a], c[b]));
    let p_cs = DMatrix::from_fn(nc, ns, |a, b| p.get(c[a], s[b]));
    let i_minus_pc = DMatrix::from_fn(nc, nc, |a, b| {
        let delta = if a == b { 1.0 } else { 0.0 };
        delta - p.get(c[a], c[b])
    });
    let excursions = i_minus_pc.lu().solve(&p_cs).ok_or(ChainError::NotIrreducible)?;
    Ok(TransitionMatrix::from_computed(p_s + p_sc * excursions))
}

/// Symmetrization `D^{1/2} P D^{-1/2}` of a reversible chain.
fn symmetrized(p: &TransitionMatrix, pi: &ProbVector) -> DMatrix<f64> {
    let d = p.d();
    let a = DMatrix::from_fn(d, d, |i, j| {
        (pi.get(i).sqrt() / pi.get(j).sqrt()) * p.get(i, j)
    });
    (&a + a.transpose()) * 0.5
}

/// Eigenvalues of a reversible chain, sorted decreasingly.
pub fn reversible_spectrum(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let class = validate(p)?;
    if !class.reversible {
        return Err(ChainError::NotReversible);
    }
    let pi = stationary_distribution(p)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrized(p, &pi)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// `γ = 1 − λ₂` with `λ₂` the second-largest *signed* eigenvalue, so a
/// periodic chain such as `[[0,1],[1,0]]` has `γ = 2`. A one-state chain has
/// `γ = 1` by convention.
pub fn spectral_gap(p: &TransitionMatrix) -> Result<f64> {
    let ev = reversible_spectrum(p)?;
    Ok(match ev.get(1) {
        Some(l2) => 1.0 - l2,
        None => 1.0,
    })
}

const POWER_MAX_ITER: usize = 100_000;

/// Perron root of a nonnegative square matrix.
///
/// Power iteration on `M + I` (same Perron vector, no rival eigenvalues of
/// equal modulus) certified by Collatz–Wielandt bounds. If the bounds do not
/// close, e.g. for reducible matrices, falls back to the full complex
/// spectrum.
pub fn spectral_radius_nonneg(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(ChainError::ShapeMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let d = m.nrows();
    for i in 0..d {
        for j in 0..d {
            if m[(i, j)] < 0.0 {
                return Err(ChainError::NegativeEntry(i, j));
            }
        }
    }
    if d == 0 {
        return Ok(0.0);
    }
    if m.amax() == 0.0 {
        return Ok(0.0);
    }
    if let Some(r) = collatz_wielandt(m) {
        return Ok(r);
    }
    Ok(m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

fn collatz_wielandt(m: &DMatrix<f64>) -> Option<f64> {
    let d = m.nrows();
    let shifted = m + DMatrix::<f64>::identity(d, d);
    let mut x = DVector::<f64>::from_element(d, 1.0 / d as f64);
    let mut prev_upper = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..POWER_MAX_ITER {
        let y = &shifted * &x;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..d {
            if x[i] <= 1e-300 {
                return None;
            }
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= 1e-13 * hi {
            return Some(0.5 * (hi + lo) - 1.0);
        }
        // Bounds that stop improving signal a reducible or degenerate case.
        if (prev_upper - hi).abs() <= 1e-15 * hi {
            stalled += 1;
            if stalled > 50 {
                return None;
            }
        } else {
            stalled = 0;
        }
        prev_upper = hi;
        let s = y.sum();
        x = y / s;
    }
    None
}
