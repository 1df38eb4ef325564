//! Metric linear-programming relaxation of sparsest cut with a component
//! constraint: every state of `T` must stay on one side of the cut.
//!
//! The constraints `δ_ij = 0` and `δ_ik = δ_jk` for `i, j ∈ T` make `T` a
//! single point of the metric, so the LP is solved on the instance with `T`
//! contracted to one node and the metric expanded afterwards.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::simplex::{LinearProgram, Relation};
use crate::chain::TransitionMatrix;
use crate::error::{ChainError, Result};
use crate::metrics::CutContext;
use crate::subset;

/// Contracted instances up to this many nodes get every triangle inequality
/// up front; larger ones use constraint generation.
const MATERIALIZE_NODES: usize = 8;
/// Triangle violations below this are accepted during constraint
/// generation; the closure afterwards removes them.
const TRIANGLE_SLACK: f64 = 1e-8;
/// Scale of the right-hand-side shifts on triangle rows. Every triangle row
/// is homogeneous, so without them almost every pivot is degenerate.
const TRIANGLE_SHIFT: f64 = 1e-9;
const MAX_ROUNDS: usize = 500;

/// Optimal metric of the relaxation over the ambient set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricLP {
    pub ambient: Vec<usize>,
    pub constrained: Vec<usize>,
    /// `|I| × |I|`, indexed by rank within `ambient`.
    #[serde(with = "dense")]
    pub delta: DMatrix<f64>,
    pub objective: f64,
}

impl MetricLP {
    pub fn rank(&self, state: usize) -> Option<usize> {
        self.ambient.binary_search(&state).ok()
    }

    pub fn between(&self, i: usize, j: usize) -> f64 {
        self.delta[(self.rank(i).expect("ambient state"), self.rank(j).expect("ambient state"))]
    }

    /// Largest violation of the triangle inequality.
    pub fn triangle_violation(&self) -> f64 {
        let n = self.ambient.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max(self.delta[(i, j)] - self.delta[(i, k)] - self.delta[(k, j)]);
                }
            }
        }
        worst
    }

    /// `Σ_{i,j∈I} π(i)π(j) δ_ij`.
    pub fn normalization(&self, ctx: &CutContext) -> f64 {
        let mut s = 0.0;
        for (a, &i) in self.ambient.iter().enumerate() {
            for (b, &j) in self.ambient.iter().enumerate() {
                s += ctx.pi.get(i) * ctx.pi.get(j) * self.delta[(a, b)];
            }
        }
        s
    }
}

mod dense {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

pub fn solve_spccc_lp(p: &TransitionMatrix, ambient: &[usize], constrained: &[usize]) -> Result<MetricLP> {
    let ctx = CutContext::new(p)?;
    solve_with(&ctx, ambient, constrained)
}

/// Contracted instance: node 0 is `T` when `T` is nonempty.
struct Contracted {
    members: Vec<Vec<usize>>,
    weight: Vec<f64>,
    /// Symmetrized flow `q(u,v) + q(v,u)` between distinct nodes.
    flow: DMatrix<f64>,
}

fn contract(ctx: &CutContext, ambient: &[usize], constrained: &[usize]) -> Contracted {
    let mut members: Vec<Vec<usize>> = Vec::new();
    if !constrained.is_empty() {
        members.push(constrained.to_vec());
    }
    for &i in ambient {
        if constrained.binary_search(&i).is_err() {
            members.push(vec![i]);
        }
    }
    let n = members.len();
    let weight: Vec<f64> = members.iter().map(|m| ctx.pi.mass(m)).collect();
    let flow = DMatrix::from_fn(n, n, |u, v| {
        if u == v {
            0.0
        } else {
            ctx.q.flow(&members[u], &members[v]) + ctx.q.flow(&members[v], &members[u])
        }
    });
    Contracted { members, weight, flow }
}

fn pair_index(n: usize, u: usize, v: usize) -> usize {
    let (u, v) = if u < v { (u, v) } else { (v, u) };
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

fn triangle_row(n: usize, u: usize, v: usize, k: usize) -> Vec<(usize, f64)> {
    vec![(pair_index(n, u, v), 1.0), (pair_index(n, u, k), -1.0), (pair_index(n, k, v), -1.0)]
}

/// Distinct small shift for the `r`-th row.
fn shift(r: usize) -> f64 {
    TRIANGLE_SHIFT * (1.0 + (r as f64 * 0.618_033_988_749_895).fract())
}

/// Shortest-path closure of a near-metric on the contracted nodes, rescaled
/// to unit normalization.
fn close_metric(x: &[f64], n: usize, weight: &[f64]) -> Vec<f64> {
    let mut dist = DMatrix::from_fn(n, n, |u, v| if u == v { 0.0 } else { x[pair_index(n, u, v)].max(0.0) });
    for k in 0..n {
        for u in 0..n {
            for v in 0..n {
                let via = dist[(u, k)] + dist[(k, v)];
                if via < dist[(u, v)] {
                    dist[(u, v)] = via;
                }
            }
        }
    }
    let mut out = vec![0.0; x.len()];
    let mut norm = 0.0;
    for u in 0..n {
        for v in (u + 1)..n {
            out[pair_index(n, u, v)] = dist[(u, v)];
            norm += 2.0 * weight[u] * weight[v] * dist[(u, v)];
        }
    }
    out.iter().map(|d| d / norm).collect()
}

pub(crate) fn solve_with(ctx: &CutContext, ambient: &[usize], constrained: &[usize]) -> Result<MetricLP> {
    let d = ctx.pi.d();
    let ambient = subset::normalize(ambient, d)?;
    let constrained = subset::normalize(constrained, d)?;
    if !subset::is_subset(&constrained, &ambient) {
        return Err(ChainError::BadSubset("T must be contained in I".into()));
    }
    let c = contract(ctx, &ambient, &constrained);
    let n = c.members.len();
    if n < 2 {
        return Err(ChainError::BadSubset("need at least two nodes after contracting T".into()));
    }
    let n_pairs = n * (n - 1) / 2;
    let mut objective = vec![0.0; n_pairs];
    let mut norm = Vec::with_capacity(n_pairs);
    for u in 0..n {
        for v in (u + 1)..n {
            let k = pair_index(n, u, v);
            objective[k] = c.flow[(u, v)];
            norm.push((k, 2.0 * c.weight[u] * c.weight[v]));
        }
    }
    let mut lp = LinearProgram::new(objective);
    lp.add_row(norm, Relation::Eq, 1.0);
    if n <= MATERIALIZE_NODES {
        for u in 0..n {
            for v in (u + 1)..n {
                for k in (0..n).filter(|&k| k != u && k != v) {
                    let r = lp.n_rows();
                    lp.add_row(triangle_row(n, u, v, k), Relation::Le, shift(r));
                }
            }
        }
    }
    let mut rounds = 0;
    let x = loop {
        let sol = lp.solve()?;
        if n <= MATERIALIZE_NODES {
            break sol.x;
        }
        let mut added = 0;
        for u in 0..n {
            for v in (u + 1)..n {
                let duv = sol.x[pair_index(n, u, v)];
                let worst = (0..n)
                    .filter(|&k| k != u && k != v)
                    .map(|k| (k, duv - sol.x[pair_index(n, u, k)] - sol.x[pair_index(n, k, v)]))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((k, viol)) = worst {
                    if viol > TRIANGLE_SLACK {
                        let r = lp.n_rows();
                        lp.add_row(triangle_row(n, u, v, k), Relation::Le, shift(r));
                        added += 1;
                    }
                }
            }
        }
        if added == 0 {
            break sol.x;
        }
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(ChainError::SolverStall(rounds));
        }
    };
    let x = close_metric(&x, n, &c.weight);
    // Expand the contracted metric back onto I.
    let node_of = |state: usize| c.members.iter().position(|m| m.binary_search(&state).is_ok()).expect("member");
    let nodes: Vec<usize> = ambient.iter().map(|&s| node_of(s)).collect();
    let m = ambient.len();
    let delta = DMatrix::from_fn(m, m, |a, b| {
        let (u, v) = (nodes[a], nodes[b]);
        if u == v {
            0.0
        } else {
            x[pair_index(n, u, v)]
        }
    });
    let mut obj = 0.0;
    for (a, &i) in ambient.iter().enumerate() {
        for (b, &j) in ambient.iter().enumerate() {
            obj += ctx.q.get(i, j) * delta[(a, b)];
        }
    }
    Ok(MetricLP { ambient, constrained, delta, objective: obj })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(rows: &[&[f64]]) -> TransitionMatrix {
        TransitionMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn generated_constraints_solve_degenerate_sixteen_state_instance() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(16);
        let p = crate::generate::random_reversible(16, 0.4, 0.1, &mut rng);
        let all = subset::full(16);
        let lp = solve_spccc_lp(&p, &all, &[]).unwrap();
        let ctx = CutContext::new(&p).unwrap();
        let (_, best) = ctx.min_cut_metric_ratio_bruteforce(&all, &[]).unwrap();
        assert!(lp.triangle_violation() < 1e-12);
        assert!((lp.normalization(&ctx) - 1.0).abs() < 1e-9);
        assert!(lp.objective <= best * (1.0 + 1e-7));
    }

    #[test]
    fn pair_index_is_a_bijection() {
        let n = 6;
        let mut seen = vec![false; n * (n - 1) / 2];
        for u in 0..n {
            for v in (u + 1)..n {
                let k = pair_index(n, u, v);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(k, pair_index(n, v, u));
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn two_states_closed_form() {
        let p = tm(&[&[0.7, 0.3], &[0.1, 0.9]]);
        let ctx = CutContext::new(&p).unwrap();
        let lp = solve_with(&ctx, &[0, 1], &[]).unwrap();
        let (p0, p1) = (ctx.pi.get(0), ctx.pi.get(1));
        assert!((lp.between(0, 1) - 1.0 / (2.0 * p0 * p1)).abs() < 1e-9);
        assert!((lp.objective - ctx.q.get(0, 1) / (p0 * p1)).abs() < 1e-9);
    }

    #[test]
    fn constrained_states_collapse() {
        let p = tm(&[&[0.4, 0.3, 0.3], &[0.3, 0.4, 0.3], &[0.3, 0.3, 0.4]]);
        let ctx = CutContext::new(&p).unwrap();
        let lp = solve_with(&ctx, &[0, 1, 2], &[0, 1]).unwrap();
        assert_eq!(lp.between(0, 1), 0.0);
        assert!((lp.between(0, 2) - lp.between(1, 2)).abs() < 1e-12);
        // Only the cut {2} | {0,1} is admissible.
        let cut = ctx.cut_metric_ratio(&[2], &[0, 1, 2]);
        assert!((lp.objective - cut).abs() < 1e-9);
        assert!((lp.normalization(&ctx) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_subsets() {
        let p = tm(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(solve_spccc_lp(&p, &[0, 1], &[0, 1]).is_err());
        assert!(solve_spccc_lp(&p, &[0], &[]).is_err());
        assert!(solve_spccc_lp(&p, &[0], &[1]).is_err());
    }
}
