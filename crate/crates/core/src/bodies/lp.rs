//! Dense tableau simplex for `max ⟨c, x⟩  s.t.  G x ≤ h`, `x` free, `h ≥ 0`.
//!
//! With `h ≥ 0` the origin is feasible, so the all-slack basis is a feasible
//! start and no phase one is needed. Free variables are split as
//! `x = x⁺ − x⁻`. Bland's rule picks both entering and leaving variables, which
//! rules out cycling on the (frequent) degenerate pivots of symmetric polytopes.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Unbounded,
}

/// Solves the LP. `rows` are the constraint normals `g_i`, `rhs` the `h_i ≥ 0`.
pub fn maximize(objective: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Result<LpOutcome> {
    let n = objective.len();
    let m = rows.len();
    debug_assert_eq!(m, rhs.len());
    debug_assert!(rhs.iter().all(|&h| h >= 0.0));

    // Columns: x⁺ (n), x⁻ (n), slacks (m), rhs (1).
    let width = 2 * n + m + 1;
    let rhs_col = width - 1;
    let mut tab = vec![0.0; m * width];
    for (i, row) in rows.iter().enumerate() {
        let r = &mut tab[i * width..(i + 1) * width];
        for j in 0..n {
            r[j] = row[j];
            r[n + j] = -row[j];
        }
        r[2 * n + i] = 1.0;
        r[rhs_col] = rhs[i];
    }
    // Reduced costs of the maximization, as c_j − z_j.
    let mut cost = vec![0.0; width];
    for j in 0..n {
        cost[j] = objective[j];
        cost[n + j] = -objective[j];
    }
    let mut basis: Vec<usize> = (2 * n..2 * n + m).collect();

    let scale = objective.iter().fold(0.0f64, |s, c| s.max(c.abs())).max(1.0);
    let cap = 50 * (m + n);
    for _ in 0..cap {
        let Some(enter) = (0..rhs_col).find(|&j| cost[j] > PIVOT_TOL * scale) else {
            let mut point = vec![0.0; n];
            for (i, &b) in basis.iter().enumerate() {
                let v = tab[i * width + rhs_col];
                if b < n {
                    point[b] += v;
                } else if b < 2 * n {
                    point[b - n] -= v;
                }
            }
            return Ok(LpOutcome::Optimal {
                value: -cost[rhs_col],
                point,
            });
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tab[i * width + enter];
            if a > PIVOT_TOL {
                let ratio = tab[i * width + rhs_col] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio - 1e-15 * best_ratio.abs().max(1.0)
                            || (ratio <= best_ratio + 1e-15 * best_ratio.abs().max(1.0)
                                && basis[i] < basis[best])
                        {
                            Some((i, ratio.min(best_ratio)))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
        }
        let Some((pivot_row, _)) = leave else {
            return Ok(LpOutcome::Unbounded);
        };

        let pr = pivot_row * width;
        let pivot = tab[pr + enter];
        for j in 0..width {
            tab[pr + j] /= pivot;
        }
        for i in 0..m {
            if i == pivot_row {
                continue;
            }
            let f = tab[i * width + enter];
            if f != 0.0 {
                for j in 0..width {
                    tab[i * width + j] -= f * tab[pr + j];
                }
            }
        }
        let f = cost[enter];
        for j in 0..width {
            cost[j] -= f * tab[pr + j];
        }
        basis[pivot_row] = enter;
    }
    Err(Error::Numeric(format!(
        "simplex hit its iteration cap ({cap}) with {m} constraints in dimension {n}"
    )))
}
