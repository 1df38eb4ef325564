//! Random and structured chains for property checks, calibration and
//! benchmarks.

use rand::Rng;

use crate::chain::TransitionMatrix;

/// Row-normalizes a nonnegative matrix with positive row sums.
pub fn normalize_rows(w: &[Vec<f64>]) -> TransitionMatrix {
    let rows = w
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        })
        .collect();
    TransitionMatrix::new(rows).expect("positive row sums")
}

/// Random walk on a random symmetric weighted graph containing a cycle
/// through all states, so the chain is irreducible and reversible.
/// `hold` is added to every diagonal weight.
pub fn random_reversible(d: usize, density: f64, hold: f64, rng: &mut impl Rng) -> TransitionMatrix {
    let mut w = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            if rng.random_bool(density) {
                let x = rng.random::<f64>();
                w[i][j] += x;
                if i != j {
                    w[j][i] += x;
                }
            }
        }
        if d > 1 {
            let j = (i + 1) % d;
            let x = 0.05 + rng.random::<f64>();
            w[i][j] += x;
            w[j][i] += x;
        }
        w[i][i] += hold;
    }
    if d == 1 {
        w[0][0] = 1.0;
    }
    normalize_rows(&w)
}

/// Random chain whose support contains the cycle `0 → 1 → … → 0`, so it is
/// irreducible but generally not reversible.
pub fn random_irreducible(d: usize, density: f64, hold: f64, rng: &mut impl Rng) -> TransitionMatrix {
    let mut w = vec![vec![0.0; d]; d];
    for (i, row) in w.iter_mut().enumerate() {
        for x in row.iter_mut() {
            if rng.random_bool(density) {
                *x = rng.random::<f64>();
            }
        }
        row[(i + 1) % d] += 0.05 + rng.random::<f64>();
        row[i] += hold;
    }
    normalize_rows(&w)
}

/// Blocks of the given sizes: uniform moves inside a block with probability
/// `1 − cross`, uniform moves to other blocks otherwise.
pub fn block_chain(sizes: &[usize], cross: f64) -> TransitionMatrix {
    let d: usize = sizes.iter().sum();
    let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &n)| std::iter::repeat_n(b, n)).collect();
    let w: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let inside = sizes[block[i]] as f64;
            let outside = (d - sizes[block[i]]) as f64;
            (0..d)
                .map(|j| {
                    if block[i] == block[j] {
                        (1.0 - cross) / inside
                    } else if outside > 0.0 {
                        cross / outside
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    normalize_rows(&w)
}

/// Hub state 0 joined to `leaves` states; leaf `k` carries edge weight
/// `leaf_weight` to the hub and holds with weight `leaf_hold`.
pub fn star_chain(leaves: usize, hub_hold: f64, leaf_weight: f64, leaf_hold: f64) -> TransitionMatrix {
    let d = leaves + 1;
    let mut w = vec![vec![0.0; d]; d];
    w[0][0] = hub_hold;
    for k in 1..d {
        w[0][k] = leaf_weight;
        w[k][0] = leaf_weight;
        w[k][k] = leaf_hold;
    }
    normalize_rows(&w)
}

/// The two-state pair `P = [[1−a, a], [1/2, 1/2]]`, `P̄ = [[1−a, a], [a, 1−a]]`.
pub fn two_state_family(a: f64) -> (TransitionMatrix, TransitionMatrix) {
    let p = TransitionMatrix::new(vec![vec![1.0 - a, a], vec![0.5, 0.5]]).expect("stochastic");
    let pbar = TransitionMatrix::new(vec![vec![1.0 - a, a], vec![a, 1.0 - a]]).expect("stochastic");
    (p, pbar)
}
