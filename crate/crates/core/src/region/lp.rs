//! Dense tableau simplex over exact rationals for `max c·x` subject to
//! `A x <= b`, `x >= 0`, `b >= 0`.
//!
//! With a nonnegative right-hand side the slack basis is feasible, so no
//! phase one is needed. Bland's rule guarantees termination.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::numerics::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("objective is unbounded")]
    Unbounded,
    #[error("right-hand side must be nonnegative")]
    NegativeBound,
    #[error("constraint row {row} has {got} coefficients, expected {expected}")]
    Shape { row: usize, got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
}

pub fn maximize(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = a.len();
    if let Some((row, r)) = a.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(LpError::Shape { row, got: r.len(), expected: n });
    }
    if b.iter().any(Signed::is_negative) {
        return Err(LpError::NegativeBound);
    }

    // Row i: [A_i | e_i | b_i]; objective row: [-c | 0 | 0].
    let width = n + m + 1;
    let mut tab: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (row, bi))| {
            let mut r = row.clone();
            r.extend((0..m).map(|k| if k == i { Rational::from_integer(1.into()) } else { Rational::zero() }));
            r.push(bi.clone());
            r
        })
        .collect();
    let mut obj: Vec<Rational> = c.iter().map(|x| -x).collect();
    obj.extend(std::iter::repeat_n(Rational::zero(), m + 1));
    let mut basis: Vec<usize> = (n..n + m).collect();

    while let Some(enter) = (0..n + m).find(|&j| obj[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !tab[i][enter].is_positive() {
                continue;
            }
            let ratio = &tab[i][width - 1] / &tab[i][enter];
            let better = match &leave {
                None => true,
                Some((li, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((row, _)) = leave else {
            return Err(LpError::Unbounded);
        };
        pivot(&mut tab, &mut obj, row, enter);
        basis[row] = enter;
    }

    let mut x = vec![Rational::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = tab[i][width - 1].clone();
        }
    }
    Ok(LpSolution { value: obj[width - 1].clone(), x })
}

fn pivot(tab: &mut [Vec<Rational>], obj: &mut [Rational], row: usize, col: usize) {
    let p = tab[row][col].clone();
    for v in tab[row].iter_mut() {
        *v /= &p;
    }
    let pivot_row = tab[row].clone();
    let eliminate = |target: &mut [Rational]| {
        let f = target[col].clone();
        if f.is_zero() {
            return;
        }
        for (t, pr) in target.iter_mut().zip(&pivot_row) {
            if !pr.is_zero() {
                *t -= &f * pr;
            }
        }
    };
    for (i, r) in tab.iter_mut().enumerate() {
        if i != row {
            eliminate(r);
        }
    }
    eliminate(obj);
}
