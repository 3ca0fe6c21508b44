//! Minimum-cost assignment on rectangular matrices.
//!
//! Classic Hungarian algorithm in the shortest-augmenting-path form.
//! Entries of `f64::INFINITY` mark forbidden pairs: the solver never
//! routes an augmenting path through them, so a forbidden pair can only
//! appear in the answer by there being no complete matching without one,
//! which is reported as [`AssignError::Infeasible`] instead.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AssignError {
    #[error("every complete matching uses a forbidden pair")]
    Infeasible,
    #[error("cost matrix rows have unequal lengths")]
    RaggedMatrix,
    #[error("cost matrix contains NaN")]
    NanCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Matched `(row, column)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    pub total_cost: f64,
}

/// Finds a minimum-cost matching of size `min(rows, cols)`.
pub fn assign(costs: &[Vec<f64>]) -> Result<Assignment, AssignError> {
    let n = costs.len();
    let m = costs.first().map_or(0, Vec::len);
    if costs.iter().any(|row| row.len() != m) {
        return Err(AssignError::RaggedMatrix);
    }
    if costs.iter().flatten().any(|c| c.is_nan()) {
        return Err(AssignError::NanCost);
    }
    if n == 0 || m == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..n).collect(),
            unmatched_cols: (0..m).collect(),
            total_cost: 0.0,
        });
    }

    // The core solver wants rows <= cols; transpose when necessary and
    // swap the roles back afterwards.
    let transposed = n > m;
    let fetch = |r: usize, c: usize| {
        if transposed {
            costs[c][r]
        } else {
            costs[r][c]
        }
    };
    let (rows, cols) = if transposed { (m, n) } else { (n, m) };

    let row_for_col = solve(rows, cols, fetch)?;

    let mut pairs = Vec::with_capacity(rows);
    for (col, row) in row_for_col.iter().enumerate() {
        if let Some(row) = row {
            let (r, c) = if transposed { (col, *row) } else { (*row, col) };
            pairs.push((r, c));
        }
    }
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(r, c)| costs[r][c]).sum();
    let matched_rows: Vec<usize> = pairs.iter().map(|&(r, _)| r).collect();
    let matched_cols: Vec<usize> = pairs.iter().map(|&(_, c)| c).collect();
    Ok(Assignment {
        unmatched_rows: (0..n).filter(|r| !matched_rows.contains(r)).collect(),
        unmatched_cols: (0..m).filter(|c| !matched_cols.contains(c)).collect(),
        pairs,
        total_cost,
    })
}

/// Shortest-augmenting-path Hungarian over an implicit matrix, 1-indexed
/// potentials as in the textbook formulation. Returns, per column, the
/// matched row.
fn solve(
    rows: usize,
    cols: usize,
    cost: impl Fn(usize, usize) -> f64,
) -> Result<Vec<Option<usize>>, AssignError> {
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    // p[j] = row matched to column j (1-based, 0 = free).
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta.is_infinite() {
                return Err(AssignError::Infeasible);
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else if minv[j].is_finite() {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    Ok((0..=cols)
        .skip(1)
        .map(|j| if p[j] == 0 { None } else { Some(p[j] - 1) })
        .collect())
}
