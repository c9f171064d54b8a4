//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves `maximize cᵀx subject to A x = b, x ≥ 0` for the small systems that
//! arise from quote sets. Rows are scaled to unit max-norm up front.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs; the last entry is minus the objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Columns at or beyond this index are artificial.
    artificial: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][j] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, &q) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * q;
                }
                row[j] = 0.0;
            }
        }
        let f = self.cost[j];
        if f != 0.0 {
            for (v, &q) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * q;
            }
            self.cost[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Runs to optimality over the first `allowed` columns. Returns false when unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        let rhs = self.rhs();
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index improving column.
            let Some(j) = (0..allowed).find(|&j| self.cost[j] > PIVOT_EPS) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j] > PIVOT_EPS {
                    let ratio = row[rhs] / row[j];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((k, r)) => {
                            if ratio < r - 1e-15
                                || (ratio <= r + 1e-15 && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, r))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return Ok(false);
            };
            self.pivot(r, j);
        }
        Err(Error::Simplex(format!(
            "no convergence after {MAX_PIVOTS} pivots"
        )))
    }
}

/// `maximize cᵀx` subject to `A x = b`, `x ≥ 0`.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Simplex("inconsistent dimensions".into()));
    }
    if a.iter().flatten().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::Simplex("non-finite coefficient".into()));
    }

    // Tableau [A | I | b] with b ≥ 0 and rows scaled.
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let scale = row
            .iter()
            .chain(std::iter::once(&bi))
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        let scale = if scale > 0.0 { sign / scale } else { 1.0 };
        let mut t = vec![0.0; n + m + 1];
        for (j, &v) in row.iter().enumerate() {
            t[j] = v * scale;
        }
        t[n + i] = 1.0;
        t[n + m] = bi * scale;
        rows.push(t);
    }

    // Phase 1: maximize -Σ artificials.
    let mut cost = vec![0.0; n + m + 1];
    for row in &rows {
        for j in 0..n {
            cost[j] += row[j];
        }
        cost[n + m] += row[n + m];
    }
    let mut tab = Tableau {
        rows,
        cost,
        basis: (n..n + m).collect(),
        artificial: n,
    };
    if m > 0 {
        tab.optimize(n + m)?;
        if tab.cost[n + m] > FEAS_EPS {
            return Ok(LpOutcome::Infeasible);
        }
        drive_out_artificials(&mut tab);
    }

    // Phase 2.
    let rhs = n + m;
    let mut cost = vec![0.0; n + m + 1];
    cost[..n].copy_from_slice(c);
    for (i, row) in tab.rows.iter().enumerate() {
        let cb = tab.basis[i];
        let cb = if cb < n { c[cb] } else { 0.0 };
        if cb != 0.0 {
            for (v, &q) in cost.iter_mut().zip(row) {
                *v -= cb * q;
            }
        }
    }
    for &j in &tab.basis {
        cost[j] = 0.0;
    }
    tab.cost = cost;
    if !tab.optimize(n)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for (i, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = tab.rows[i][rhs].max(0.0);
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, objective })
}

/// Pivots zero-level artificials out of the basis; rows where that is
/// impossible are redundant and dropped.
fn drive_out_artificials(tab: &mut Tableau) {
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] < tab.artificial {
            r += 1;
            continue;
        }
        let col = (0..tab.artificial)
            .filter(|&j| tab.rows[r][j].abs() > 1e-9)
            .max_by(|&x, &y| tab.rows[r][x].abs().total_cmp(&tab.rows[r][y].abs()));
        match col {
            Some(j) => {
                tab.pivot(r, j);
                r += 1;
            }
            None => {
                tab.rows.remove(r);
                tab.basis.remove(r);
            }
        }
    }
}
