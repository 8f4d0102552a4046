//! Fraction-free exact solving of dense rational systems.
//!
//! Rows are scaled to integers, eliminated Bareiss-style (every division is
//! exact, no gcd reduction in the inner loop), and back-substituted over
//! rationals. This is what keeps the big per-line systems affordable: the
//! intermediate entries are minors of the scaled matrix, so their size is
//! bounded by the determinant instead of exploding freely.

use super::Rational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

/// Exact solution of `A x = b`, or `None` when the matrix is singular.
pub fn solve_dense_exact(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    // clear denominators row by row: augmented integer matrix [A | b]
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for (row, rhs) in a.iter().zip(b) {
        assert_eq!(row.len(), n);
        let mut scale = BigInt::one();
        for c in row.iter().chain(std::iter::once(rhs)) {
            let d = c.denom();
            let g = scale.gcd(d);
            scale = &scale / g * d;
        }
        let mut int_row: Vec<BigInt> = Vec::with_capacity(n + 1);
        for c in row.iter().chain(std::iter::once(rhs)) {
            int_row.push(c.numer() * (&scale / c.denom()));
        }
        m.push(int_row);
    }

    // fraction-free forward elimination with row pivoting
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return None;
            };
            m.swap(k, swap);
        }
        if k + 1 == n {
            break;
        }
        let (pivot_row, rest) = {
            let (head, tail) = m.split_at_mut(k + 1);
            (&head[k], tail)
        };
        let pkk = pivot_row[k].clone();
        rest.par_iter_mut().for_each(|row| {
            if row[k].is_zero() {
                // still need the Bareiss rescale to keep the division exact
                for j in (k + 1)..=n {
                    if !row[j].is_zero() {
                        let t = &row[j] * &pkk;
                        row[j] = t / &prev;
                    }
                }
            } else {
                let f = std::mem::replace(&mut row[k], BigInt::zero());
                for j in (k + 1)..=n {
                    let t = &row[j] * &pkk - &f * &pivot_row[j];
                    row[j] = t / &prev;
                }
            }
        });
        prev = pkk;
    }
    if m[n - 1][n - 1].is_zero() {
        return None;
    }

    // back substitution over rationals
    let mut x: Vec<Rational> = vec![Rational::zero(); n];
    for k in (0..n).rev() {
        let mut acc = Rational::from_integer(m[k][n].clone());
        for j in (k + 1)..n {
            if !m[k][j].is_zero() {
                acc -= Rational::from_integer(m[k][j].clone()) * &x[j];
            }
        }
        x[k] = acc / Rational::from_integer(m[k][k].clone());
    }
    Some(x)
}
