//! Dense two-phase primal simplex on the standard-form tableau.
//!
//! Maximizes `c'x` subject to unit-bound-free rows `Ax <= b` / `Ax = b` with
//! `x >= 0` and `b >= 0`. Inequalities get slack variables, equalities get
//! phase-1 artificials. Entering variable is chosen by Dantzig's rule with
//! index tie-breaks; after a streak of degenerate pivots Bland's rule takes
//! over until a non-degenerate pivot is made, which prevents cycling.

use super::{FEASIBILITY_TOL, PIVOT_TOL};

/// Consecutive degenerate pivots tolerated before Bland's rule engages.
const DEGENERATE_STREAK: usize = 12;

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    /// `(column, coefficient)` pairs, column indices strictly increasing.
    pub cols: Vec<(usize, f64)>,
    pub rhs: f64,
    pub equality: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SimplexStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexSolution {
    pub status: SimplexStatus,
    /// Values of the structural variables; empty when infeasible.
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SimplexError {
    PivotLimit(usize),
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // each row: coefficients 0..total, rhs at index total
    basis: Vec<usize>,
    n_struct: usize,
    n_slack: usize,
    n_art: usize,
    /// Reduced-cost row for the real objective, same layout as `rows`.
    cost: Vec<f64>,
    pivots: usize,
    pivot_limit: usize,
    degenerate_streak: usize,
}

impl Tableau {
    fn total(&self) -> usize {
        self.n_struct + self.n_slack + self.n_art
    }

    fn pivot(&mut self, prow: usize, pcol: usize, extra_cost: Option<&mut Vec<f64>>) {
        let piv = self.rows[prow][pcol];
        debug_assert!(piv.abs() > PIVOT_TOL, "pivot element too small: {piv}");
        let inv = 1.0 / piv;
        for v in self.rows[prow].iter_mut() {
            *v *= inv;
        }
        self.rows[prow][pcol] = 1.0;
        let pivot_row = self.rows[prow].clone();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == prow {
                continue;
            }
            let factor = row[pcol];
            if factor != 0.0 {
                for (dst, src) in row.iter_mut().zip(&pivot_row) {
                    *dst -= factor * src;
                }
                row[pcol] = 0.0;
            }
        }
        for cost in [Some(&mut self.cost), extra_cost].into_iter().flatten() {
            let factor = cost[pcol];
            if factor != 0.0 {
                for (dst, src) in cost.iter_mut().zip(&pivot_row) {
                    *dst -= factor * src;
                }
                cost[pcol] = 0.0;
            }
        }
        self.basis[prow] = pcol;
        self.pivots += 1;
    }

    /// Ratio-test leaving row for `pcol`; ties go to the smallest basic
    /// variable index, as Bland's rule requires.
    fn leaving_row(&self, pcol: usize) -> Option<usize> {
        let rhs_col = self.total();
        let mut best: Option<(usize, f64)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            let a = row[pcol];
            if a > PIVOT_TOL {
                let ratio = row[rhs_col] / a;
                match best {
                    None => best = Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - PIVOT_TOL
                            || (ratio < bratio + PIVOT_TOL && self.basis[r] < self.basis[br])
                        {
                            best = Some((r, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(r, _)| r)
    }

    /// Runs pivots until the cost row in `reduced` has no improving column.
    /// `eligible` bounds the entering-column search.
    fn optimize(
        &mut self,
        eligible: usize,
        use_phase1_cost: bool,
        mut phase1_cost: Option<&mut Vec<f64>>,
    ) -> Result<(), SimplexError> {
        loop {
            if self.pivots >= self.pivot_limit {
                return Err(SimplexError::PivotLimit(self.pivots));
            }
            let bland = self.degenerate_streak >= DEGENERATE_STREAK;
            let reduced: &Vec<f64> = if use_phase1_cost {
                phase1_cost.as_deref().expect("phase-1 cost row")
            } else {
                &self.cost
            };
            let mut entering = None;
            if bland {
                entering = reduced.iter().take(eligible).position(|&r| r > PIVOT_TOL);
            } else {
                let mut best = PIVOT_TOL;
                for (j, &r) in reduced.iter().take(eligible).enumerate() {
                    if r > best {
                        best = r;
                        entering = Some(j);
                    }
                }
            }
            let Some(pcol) = entering else {
                return Ok(());
            };
            let Some(prow) = self.leaving_row(pcol) else {
                return Err(SimplexError::Unbounded);
            };
            let theta = self.rows[prow][self.total()] / self.rows[prow][pcol];
            if theta.abs() <= PIVOT_TOL {
                self.degenerate_streak += 1;
            } else {
                self.degenerate_streak = 0;
            }
            if use_phase1_cost {
                self.pivot(prow, pcol, phase1_cost.as_deref_mut());
            } else {
                self.pivot(prow, pcol, None);
            }
        }
    }
}

pub(crate) fn maximize(
    objective: &[f64],
    constraints: &[Constraint],
) -> Result<SimplexSolution, SimplexError> {
    let n_struct = objective.len();
    let n_slack = constraints.iter().filter(|c| !c.equality).count();
    let n_art = constraints.len() - n_slack;
    let total = n_struct + n_slack + n_art;
    let width = total + 1;

    let mut rows = Vec::with_capacity(constraints.len());
    let mut basis = Vec::with_capacity(constraints.len());
    let mut slack_at = n_struct;
    let mut art_at = n_struct + n_slack;
    for con in constraints {
        debug_assert!(con.rhs >= 0.0, "standard form requires rhs >= 0");
        let mut row = vec![0.0; width];
        for &(col, coef) in &con.cols {
            debug_assert!(col < n_struct);
            row[col] = coef;
        }
        row[total] = con.rhs;
        if con.equality {
            row[art_at] = 1.0;
            basis.push(art_at);
            art_at += 1;
        } else {
            row[slack_at] = 1.0;
            basis.push(slack_at);
            slack_at += 1;
        }
        rows.push(row);
    }

    let mut cost = vec![0.0; width];
    cost[..n_struct].copy_from_slice(objective);

    let pivot_limit = 10_000 + 50 * constraints.len() + total;
    let mut tableau = Tableau {
        rows,
        basis,
        n_struct,
        n_slack,
        n_art,
        cost,
        pivots: 0,
        pivot_limit,
        degenerate_streak: 0,
    };

    if n_art > 0 {
        // Phase 1: maximize minus the sum of artificials. Pricing out the
        // basic artificials turns the cost row into the sum of their rows.
        let mut phase1 = vec![0.0; width];
        phase1[n_struct + n_slack..total].fill(-1.0);
        for (row, &basic) in tableau.rows.iter().zip(&tableau.basis) {
            if basic >= n_struct + n_slack {
                for (dst, src) in phase1.iter_mut().zip(row) {
                    *dst += *src;
                }
            }
        }
        tableau.optimize(total, true, Some(&mut phase1))?;
        // phase1[total] tracks minus the phase-1 objective, i.e. the total
        // artificial mass still in the basis.
        if phase1[total] > FEASIBILITY_TOL {
            return Ok(SimplexSolution {
                status: SimplexStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NEG_INFINITY,
            });
        }
        // Drive leftover artificials out of the basis; rows that offer no
        // pivot are redundant and get dropped.
        let mut r = 0;
        while r < tableau.rows.len() {
            if tableau.basis[r] >= n_struct + n_slack {
                let pcol = (0..n_struct + n_slack)
                    .find(|&j| tableau.rows[r][j].abs() > PIVOT_TOL);
                match pcol {
                    Some(pcol) => tableau.pivot(r, pcol, Some(&mut phase1)),
                    None => {
                        tableau.rows.remove(r);
                        tableau.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        tableau.degenerate_streak = 0;
    }

    // Phase 2 over structural and slack columns only.
    tableau.optimize(n_struct + n_slack, false, None)?;

    let mut x = vec![0.0; n_struct];
    let rhs_col = tableau.total();
    for (r, &b) in tableau.basis.iter().enumerate() {
        if b < n_struct {
            x[b] = tableau.rows[r][rhs_col].max(0.0);
        }
    }
    let objective = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(SimplexSolution { status: SimplexStatus::Optimal, x, objective })
}
