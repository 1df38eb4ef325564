//! Dense two-phase tableau simplex for small linear programs.
//!
//! Minimizes `c·x` subject to row constraints and `x ≥ 0`. Pricing is
//! Dantzig's rule, switching to Bland's rule during runs of degenerate
//! pivots so the method cannot cycle.

use crate::error::{ChainError, Result};

const PIVOT_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-8;
const MAX_PIVOTS: usize = 200_000;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Sparse coefficients, relation and right-hand side.
type Row = (Vec<(usize, f64)>, Relation, f64);

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { n_vars: objective.len(), objective, rows: Vec::new() }
    }

    /// Adds `Σ coef·x_var (rel) rhs` from sparse coefficients.
    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        debug_assert!(coefs.iter().all(|&(v, _)| v < self.n_vars));
        self.rows.push((coefs, rel, rhs));
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    m: usize,
    /// Columns excluding the right-hand side.
    cols: usize,
    /// Row-major `m × (cols + 1)`; last entry of each row is the rhs.
    a: Vec<f64>,
    basis: Vec<usize>,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars;
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = lp.rows.iter().filter(|(_, rel, rhs)| needs_artificial(*rel, *rhs)).count();
        let first_artificial = n + n_slack;
        let cols = first_artificial + n_art;
        let width = cols + 1;
        let mut a = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (n, first_artificial);
        for (r, (coefs, rel, rhs)) in lp.rows.iter().enumerate() {
            // Keep the rhs nonnegative.
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut a[r * width..(r + 1) * width];
            for &(v, c) in coefs {
                row[v] += sign * c;
            }
            row[cols] = sign * rhs;
            let rel = match (*rel, sign < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            };
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[r] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
            }
        }
        Self { m, cols, a, basis, first_artificial, pivots: 0 }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.a[pr * w + pc];
        for c in 0..w {
            self.a[pr * w + c] *= inv;
        }
        let pivot_row: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f != 0.0 {
                let row = &mut self.a[r * w..(r + 1) * w];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Reduced costs of `cost` (indexed by column) for the current basis, over
    /// columns `< limit`.
    fn reduced_costs(&self, cost: &[f64], limit: usize) -> Vec<f64> {
        let mut red: Vec<f64> = cost[..limit].to_vec();
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (c, red_c) in red.iter_mut().enumerate() {
                    *red_c -= cb * self.at(r, c);
                }
            }
        }
        red
    }

    /// Runs simplex iterations minimizing `cost` over columns `< limit`.
    fn optimize(&mut self, cost: &[f64], limit: usize) -> Result<()> {
        let mut red = self.reduced_costs(cost, limit);
        let mut degenerate_run = 0;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(ChainError::SolverStall(self.pivots));
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let entering = if bland {
                (0..limit).find(|&c| red[c] < -PIVOT_EPS)
            } else {
                let mut best = None;
                let mut best_val = -PIVOT_EPS;
                for (c, &v) in red.iter().enumerate() {
                    if v < best_val {
                        best_val = v;
                        best = Some(c);
                    }
                }
                best
            };
            let Some(pc) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let coef = self.at(r, pc);
                if coef > PIVOT_EPS {
                    let ratio = self.rhs(r) / coef;
                    let better = match leave {
                        None => true,
                        Some((lr, lv)) => {
                            ratio < lv - 1e-12
                                || (ratio <= lv + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(ChainError::BadArgs("linear program is unbounded".into()));
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            // Update reduced costs alongside the tableau; row `pr` is
            // normalized by the pivot.
            let factor = red[pc];
            self.pivot(pr, pc);
            for (c, red_c) in red.iter_mut().enumerate() {
                *red_c -= factor * self.at(pr, c);
            }
            red[pc] = 0.0;
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        if self.first_artificial < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            self.optimize(&phase1, self.cols)?;
            let infeas: f64 = (0..self.m)
                .filter(|&r| self.basis[r] >= self.first_artificial)
                .map(|r| self.rhs(r))
                .sum();
            if infeas > FEAS_EPS {
                return Err(ChainError::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut cost = vec![0.0; self.cols];
        cost[..lp.n_vars].copy_from_slice(&lp.objective);
        self.optimize(&cost, self.first_artificial)?;
        let mut x = vec![0.0; lp.n_vars];
        for r in 0..self.m {
            if self.basis[r] < lp.n_vars {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective, pivots: self.pivots })
    }

    /// Pivots zero-valued artificials out of the basis; rows where that is
    /// impossible are redundant and are zeroed.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            if let Some(c) = (0..self.first_artificial).find(|&c| self.at(r, c).abs() > 1e-9) {
                self.pivot(r, c);
            } else {
                let w = self.width();
                for c in 0..w {
                    self.a[r * w + c] = 0.0;
                }
            }
        }
    }
}

fn needs_artificial(rel: Relation, rhs: f64) -> bool {
    match rel {
        Relation::Eq => true,
        Relation::Ge => rhs >= 0.0,
        Relation::Le => rhs < 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_minimum() {
        // min −x − y s.t. x + 2y ≤ 4, 3x + y ≤ 6 → (1.6, 1.2), objective −2.8.
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]);
        lp.add_row(vec![(0, 1.0), (1, 2.0)], Relation::Le, 4.0);
        lp.add_row(vec![(0, 3.0), (1, 1.0)], Relation::Le, 6.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.8).abs() < 1e-9);
        assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min 2x + 3y s.t. x + y = 1, x ≥ 0.25, y ≥ 0.25 → x = 0.75.
        let mut lp = LinearProgram::new(vec![2.0, 3.0]);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 0.25);
        lp.add_row(vec![(1, 1.0)], Relation::Ge, 0.25);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 0.75).abs() < 1e-9);
        assert!((s.objective - 2.25).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // −x ≤ −2 means x ≥ 2.
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![(0, -1.0)], Relation::Le, -2.0);
        assert!((lp.solve().unwrap().x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(ChainError::Infeasible)));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }
}
