//! A small exact-rational linear program solver.
//!
//! Two-phase primal simplex over `BigRational` with Bland's pivoting rule,
//! which guarantees termination. Problem sizes here are tiny (simplex-hull
//! feasibility: at most N+2 equality rows and a dozen variables), so
//! simplicity and exactness win over sparse cleverness.

use num_traits::{One, Signed, Zero};

use super::rational::Q;

/// `maximize objective . x  subject to  rows . x = rhs, x >= 0`.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub rows: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
    pub objective: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Q, solution: Vec<Q> },
}

struct Tableau {
    /// m rows of n+1 entries; last entry is the rhs.
    rows: Vec<Vec<Q>>,
    /// column index of the basic variable in each row.
    basis: Vec<usize>,
    /// number of structural columns (excluding rhs).
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].clone();
        for entry in self.rows[row].iter_mut() {
            *entry /= &inv;
        }
        for r in 0..self.rows.len() {
            if r == row || self.rows[r][col].is_zero() {
                continue;
            }
            let factor = self.rows[r][col].clone();
            for c in 0..=self.cols {
                let delta = &factor * &self.rows[row][c];
                self.rows[r][c] -= delta;
            }
        }
        self.basis[row] = col;
    }

    /// Reduced cost row for objective `c` given the current basis:
    /// `r_j = c_j - sum_i c_basis[i] * a_ij`, plus the current objective value.
    fn reduced_costs(&self, c: &[Q]) -> (Vec<Q>, Q) {
        let mut reduced: Vec<Q> = c.to_vec();
        let mut value = Q::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            value += cb * &self.rows[i][self.cols];
            for j in 0..self.cols {
                let delta = cb * &self.rows[i][j];
                reduced[j] -= delta;
            }
        }
        (reduced, value)
    }

    /// Run primal simplex (maximization) with Bland's rule. Returns false if
    /// the problem is unbounded in the improving direction.
    fn optimize(&mut self, c: &[Q]) -> bool {
        loop {
            let (reduced, _) = self.reduced_costs(c);
            // Bland: smallest column index with positive reduced cost
            let entering = match (0..self.cols).find(|&j| reduced[j].is_positive()) {
                Some(j) => j,
                None => return true,
            };
            // ratio test; ties broken by smallest basic column index (Bland)
            let mut leave: Option<(usize, Q)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][entering];
                if a.is_positive() {
                    let ratio = &self.rows[r][self.cols] / a;
                    match &leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, best)) => {
                            if ratio < *best
                                || (ratio == *best && self.basis[r] < self.basis[*lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, entering),
                None => return false,
            }
        }
    }

    fn solution(&self, n: usize) -> Vec<Q> {
        let mut x = vec![Q::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[i][self.cols].clone();
            }
        }
        x
    }
}

pub fn solve(lp: &StandardLp) -> LpOutcome {
    let m = lp.rows.len();
    let n = lp.objective.len();
    debug_assert!(lp.rows.iter().all(|r| r.len() == n));
    debug_assert_eq!(lp.rhs.len(), m);

    // phase 1: artificials with nonnegative rhs
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<Q> = Vec::with_capacity(cols + 1);
        let flip = lp.rhs[i].is_negative();
        for j in 0..n {
            row.push(if flip { -lp.rows[i][j].clone() } else { lp.rows[i][j].clone() });
        }
        for j in 0..m {
            row.push(if i == j { Q::one() } else { Q::zero() });
        }
        row.push(if flip { -lp.rhs[i].clone() } else { lp.rhs[i].clone() });
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis: (n..n + m).collect(), cols };
    let mut phase1 = vec![Q::zero(); cols];
    for c in phase1.iter_mut().skip(n) {
        *c = -Q::one();
    }
    let bounded = tab.optimize(&phase1);
    debug_assert!(bounded, "phase-1 objective is bounded by construction");
    let (_, value) = tab.reduced_costs(&phase1);
    if value.is_negative() {
        return LpOutcome::Infeasible;
    }

    // drive artificials out of the basis; drop redundant rows
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| !tab.rows[r][j].is_zero()) {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // phase 2 on structural columns only
    for row in tab.rows.iter_mut() {
        let rhs = row[tab.cols].clone();
        row.truncate(n);
        row.push(rhs);
    }
    tab.cols = n;
    if !tab.optimize(&lp.objective) {
        return LpOutcome::Unbounded;
    }
    let (_, value) = tab.reduced_costs(&lp.objective);
    LpOutcome::Optimal { value, solution: tab.solution(n) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rational::{q_int, q_ratio};

    fn lp(rows: Vec<Vec<i64>>, rhs: Vec<i64>, obj: Vec<i64>) -> StandardLp {
        StandardLp {
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().map(q_int).collect())
                .collect(),
            rhs: rhs.into_iter().map(q_int).collect(),
            objective: obj.into_iter().map(q_int).collect(),
        }
    }

    #[test]
    fn maximizes_on_a_segment() {
        // x + y = 1, maximize x -> 1
        let out = solve(&lp(vec![vec![1, 1]], vec![1], vec![1, 0]));
        assert_eq!(
            out,
            LpOutcome::Optimal { value: q_int(1), solution: vec![q_int(1), q_int(0)] }
        );
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1 and x + y = 2 cannot both hold
        let out = solve(&lp(vec![vec![1, 1], vec![1, 1]], vec![1, 2], vec![1, 0]));
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn handles_negative_rhs() {
        // -x = -3 with x >= 0 -> x = 3
        let out = solve(&lp(vec![vec![-1]], vec![-3], vec![1]));
        assert_eq!(out, LpOutcome::Optimal { value: q_int(3), solution: vec![q_int(3)] });
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // duplicated constraint row
        let out = solve(&lp(vec![vec![1, 1], vec![2, 2]], vec![1, 2], vec![0, 1]));
        assert_eq!(
            out,
            LpOutcome::Optimal { value: q_int(1), solution: vec![q_int(0), q_int(1)] }
        );
    }

    #[test]
    fn fractional_optimum() {
        // x + 2y = 1, maximize y -> 1/2
        let out = solve(&lp(vec![vec![1, 2]], vec![1], vec![0, 1]));
        match out {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q_ratio(1, 2)),
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
