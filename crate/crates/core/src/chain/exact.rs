//! Exact solver: fraction-preserving Gaussian elimination over the sparse
//! hitting-time system.
//!
//! Pivots are taken on the diagonal (always nonzero for a substochastic
//! system) in the order of a greedy fill estimate, `(row_nnz - 1) *
//! (col_nnz - 1)` with deterministic tie-breaking. On the pot games this
//! ordering eliminates the shin chains first at near-zero fill and leaves a
//! small dense block on the pot-2 line.

use super::{ChainError, SparseSystem};
use crate::arith::{rat, Rational};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

/// Solve `(I - P) x = 1` exactly. Every returned entry satisfies its row
/// identically; a vanishing diagonal signals a rule set from which
/// absorption is not certain.
pub fn solve_exact(system: &SparseSystem) -> Result<Vec<Rational>, ChainError> {
    let n = system.len();
    let mut rows: Vec<BTreeMap<usize, Rational>> = (0..n)
        .map(|i| system.row(i).iter().cloned().collect())
        .collect();
    let mut rhs: Vec<Rational> = vec![rat(1); n];
    // rows (pivot row included) currently holding a nonzero in each column
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for col in row.keys() {
            col_rows[*col].insert(i);
        }
    }

    let mut active: Vec<bool> = vec![true; n];
    // normalized pivot rows in elimination order: x_i = rhs - sum coeff * x_j
    let mut eliminated: Vec<(usize, Rational, Vec<(usize, Rational)>)> = Vec::with_capacity(n);

    for _ in 0..n {
        // greedy fill-estimate pivot selection
        let mut best: Option<(usize, usize, usize)> = None; // (score, row_nnz, index)
        for j in 0..n {
            if !active[j] {
                continue;
            }
            let r = rows[j].len();
            let c = col_rows[j].len();
            let score = (r - 1) * (c - 1);
            let cand = (score, r, j);
            if best.map_or(true, |b| cand < b) {
                best = Some(cand);
                if score == 0 && r == 1 {
                    break;
                }
            }
        }
        let j = best.expect("active pivot must exist").2;

        let mut row = std::mem::take(&mut rows[j]);
        let diag = row.remove(&j).filter(|d| !d.is_zero()).ok_or(ChainError::Singular)?;
        active[j] = false;
        for col in row.keys() {
            col_rows[*col].remove(&j);
        }
        col_rows[j].remove(&j);

        // normalize: x_j = rhs_j/diag - sum (c/diag) x_k
        let rhs_j = std::mem::replace(&mut rhs[j], rat(0)) / &diag;
        let terms: Vec<(usize, Rational)> =
            row.into_iter().map(|(k, c)| (k, c / &diag)).collect();

        // substitute into every row still referencing x_j
        let users: Vec<usize> = col_rows[j].iter().copied().collect();
        for i in users {
            let Some(f) = rows[i].remove(&j) else { continue };
            rhs[i] -= &f * &rhs_j;
            for (k, c) in &terms {
                let delta = &f * c;
                match rows[i].entry(*k) {
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() -= delta;
                        if e.get().is_zero() {
                            e.remove();
                            col_rows[*k].remove(&i);
                        }
                    }
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(-delta);
                        col_rows[*k].insert(i);
                    }
                }
            }
        }
        col_rows[j].clear();
        eliminated.push((j, rhs_j, terms));
    }

    // back substitution in reverse elimination order
    let mut x: Vec<Rational> = vec![rat(0); n];
    for (j, rhs_j, terms) in eliminated.into_iter().rev() {
        let mut v = rhs_j;
        for (k, c) in terms {
            v -= c * &x[k];
        }
        x[j] = v;
    }
    Ok(x)
}
