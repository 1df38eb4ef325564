//! Exact minimum escape ratio `min_{∅≠R⊆T} Q(R,[d]∖R)/π(R)` by Dinkelbach
//! iteration over parametric s–t minimum cuts.

use std::collections::VecDeque;

use crate::metrics::CutContext;

const FLOW_EPS: f64 = 1e-15;
const MAX_ITER: usize = 200;

/// Dense Edmonds–Karp max-flow. Returns the source side of a minimum cut.
fn min_cut_source_side(cap: &mut [Vec<f64>], s: usize, t: usize) -> Vec<bool> {
    let n = cap.len();
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for v in 0..n {
                if parent[v] == usize::MAX && cap[u][v] > FLOW_EPS {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            return parent.iter().map(|&p| p != usize::MAX).collect();
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = parent[v];
            push = push.min(cap[u][v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            cap[u][v] -= push;
            cap[v][u] += push;
            v = u;
        }
    }
}

/// Minimizer of `Q(R,R^c) − λπ(R)` over `R ⊆ tail`, possibly empty.
fn parametric_cut(ctx: &CutContext, tail: &[usize], lambda: f64) -> Vec<usize> {
    let d = ctx.pi.d();
    let (s, t) = (d, d + 1);
    let mut cap = vec![vec![0.0; d + 2]; d + 2];
    for i in 0..d {
        for j in 0..d {
            if i != j {
                cap[i][j] = 0.5 * (ctx.q.get(i, j) + ctx.q.get(j, i));
            }
        }
    }
    let big = 1.0 + ctx.q.total_mass();
    for i in 0..d {
        if tail.binary_search(&i).is_ok() {
            cap[s][i] = lambda * ctx.pi.get(i);
        } else {
            cap[i][t] = big;
        }
    }
    let side = min_cut_source_side(&mut cap, s, t);
    tail.iter().copied().filter(|&i| side[i]).collect()
}

/// Exact minimizer of the escape ratio over nonempty subsets of `tail`.
pub fn min_escape(ctx: &CutContext, tail: &[usize]) -> Option<(Vec<usize>, f64)> {
    if tail.is_empty() {
        return None;
    }
    let mut best = tail.to_vec();
    let mut ratio = ctx.escape(&best);
    for _ in 0..MAX_ITER {
        let r = parametric_cut(ctx, tail, ratio);
        if r.is_empty() {
            break;
        }
        let v = ctx.escape(&r);
        if v >= ratio - 1e-14 {
            break;
        }
        best = r;
        ratio = v;
    }
    Some((best, ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TransitionMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_reversible(d: usize, rng: &mut ChaCha8Rng) -> TransitionMatrix {
        let mut w = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in i..d {
                let x = if rng.random_bool(0.6) { rng.random::<f64>().powi(3) } else { 0.0 };
                w[i][j] = x;
                w[j][i] = x;
            }
            w[i][(i + 1) % d] += 1e-3;
            w[(i + 1) % d][i] += 1e-3;
        }
        let rows = w
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|x| x / s).collect()
            })
            .collect();
        TransitionMatrix::new(rows).unwrap()
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = rng.random_range(3..9);
            let p = random_reversible(d, &mut rng);
            let ctx = CutContext::new(&p).unwrap();
            let mut tail: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.6)).collect();
            if tail.len() == d {
                tail.pop();
            }
            if tail.is_empty() {
                tail.push(0);
            }
            let (_, exact) = ctx.min_escape_bruteforce(&tail).unwrap().unwrap();
            let (r, v) = min_escape(&ctx, &tail).unwrap();
            assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
            assert!((ctx.escape(&r) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_tail_is_none() {
        let p = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let ctx = CutContext::new(&p).unwrap();
        assert!(min_escape(&ctx, &[]).is_none());
    }
}
