//! Random-subset embedding of an LP metric into ℓ1 and threshold rounding
//! of the embedding into a cut.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spccc::{self, MetricLP};
use crate::chain::TransitionMatrix;
use crate::config::derive_seed;
use crate::error::{ChainError, Result};
use crate::metrics::CutContext;
use crate::subset;

/// Re-seeding attempts when an embedding collapses to a point.
const RESEED_ATTEMPTS: u64 = 16;

/// Points of `ambient` in `R^K`; `coords[a]` belongs to `ambient[a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub ambient: Vec<usize>,
    pub constrained: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn l1(&self, a: usize, b: usize) -> f64 {
        self.coords[a].iter().zip(&self.coords[b]).map(|(x, y)| (x - y).abs()).sum()
    }

    /// `max δ_ij / ‖x_i − x_j‖₁` over pairs with `δ_ij > 0`; infinite when
    /// such a pair is collapsed.
    pub fn distortion(&self, lp: &MetricLP) -> f64 {
        let n = self.ambient.len();
        let mut worst = 1.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                let delta = lp.delta[(a, b)];
                if delta <= 1e-12 {
                    continue;
                }
                let x = self.l1(a, b);
                worst = worst.max(if x > 0.0 { delta / x } else { f64::INFINITY });
            }
        }
        worst
    }
}

/// Fréchet embedding over random anchor sets: `⌈log₂ n⌉` scales, each with
/// `⌈reps·ln n⌉` sets sampled at rate `2^{-s}`. Every coordinate is divided
/// by the total coordinate count, so the map is 1-Lipschitz into ℓ1.
pub fn bourgain_embed(lp: &MetricLP, reps: f64, seed: u64) -> Embedding {
    let n = lp.ambient.len();
    let scales = (n.max(2) as f64).log2().ceil() as usize;
    let per_scale = ((reps * (n.max(2) as f64).ln()).ceil() as usize).max(1);
    let total = scales * per_scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![Vec::with_capacity(total); n];
    for s in 1..=scales {
        let rate = 0.5f64.powi(s as i32);
        for _ in 0..per_scale {
            let anchors: Vec<usize> = (0..n).filter(|_| rng.random_bool(rate)).collect();
            for (a, point) in coords.iter_mut().enumerate() {
                let x = anchors.iter().map(|&b| lp.delta[(a, b)]).fold(f64::INFINITY, f64::min);
                point.push(if x.is_finite() { x / total as f64 } else { 0.0 });
            }
        }
    }
    Embedding { ambient: lp.ambient.clone(), constrained: lp.constrained.clone(), coords }
}

/// Best threshold cut over all coordinates, by the sparsest-cut objective.
/// The returned side avoids the constrained set.
pub fn round_to_cut(embedding: &Embedding, p: &TransitionMatrix) -> Result<Vec<usize>> {
    let ctx = CutContext::new(p)?;
    round_with(&ctx, embedding)
}

pub(crate) fn round_with(ctx: &CutContext, embedding: &Embedding) -> Result<Vec<usize>> {
    let ambient = &embedding.ambient;
    let n = ambient.len();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..embedding.dim() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| embedding.coords[a][r].total_cmp(&embedding.coords[b][r]).then(a.cmp(&b)));
        for cut in 1..n {
            let (lo, hi) = (embedding.coords[order[cut - 1]][r], embedding.coords[order[cut]][r]);
            if lo == hi {
                continue;
            }
            let mut side: Vec<usize> = order[..cut].iter().map(|&a| ambient[a]).collect();
            side.sort_unstable();
            let v = ctx.cut_metric_ratio(&side, ambient);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((side, v));
            }
        }
    }
    let (side, _) = best.ok_or(ChainError::DegenerateEmbedding)?;
    // Constrained points coincide, so they sit on one side of any threshold.
    if side.iter().any(|s| embedding.constrained.binary_search(s).is_ok()) {
        Ok(subset::complement(&side, ambient))
    } else {
        Ok(side)
    }
}

/// LP relaxation, embedding and rounding: a cut `∅ ≠ S' ⊊ I` with
/// `S' ∩ T = ∅`.
pub fn find_comp(p: &TransitionMatrix, ambient: &[usize], constrained: &[usize], reps: f64, seed: u64) -> Result<Vec<usize>> {
    let ctx = CutContext::new(p)?;
    find_comp_with(&ctx, ambient, constrained, reps, seed)
}

pub(crate) fn find_comp_with(
    ctx: &CutContext,
    ambient: &[usize],
    constrained: &[usize],
    reps: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    let lp = spccc::solve_with(ctx, ambient, constrained)?;
    for attempt in 0..RESEED_ATTEMPTS {
        let emb = bourgain_embed(&lp, reps, derive_seed(seed, attempt));
        match round_with(ctx, &emb) {
            Err(ChainError::DegenerateEmbedding) => continue,
            other => return other,
        }
    }
    Err(ChainError::DegenerateEmbedding)
}
