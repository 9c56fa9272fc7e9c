//! Exact tableau simplex for packing programs
//! `max cᵀy  s.t.  A y ≤ b, y ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible, so no phase one is needed. Bland's rule picks
//! both the entering and the leaving variable, which rules out cycling.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("constraint matrix has {found} columns, expected {expected}")]
    Shape { expected: usize, found: usize },
    #[error("right-hand side must be nonnegative")]
    NegativeRhs,
    #[error("objective is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    /// Optimal `y`.
    pub primal: Vec<Rational>,
    /// Optimal multipliers of the constraints, i.e. a solution of the dual
    /// `min bᵀx  s.t.  Aᵀx ≥ c, x ≥ 0`.
    pub dual: Vec<Rational>,
}

pub fn maximize(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> Result<LpSolution, LpError> {
    let m = a.len();
    let n = c.len();
    if b.len() != m {
        return Err(LpError::Shape { expected: m, found: b.len() });
    }
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(LpError::Shape { expected: n, found: row.len() });
    }
    if b.iter().any(|x| x.is_negative()) {
        return Err(LpError::NegativeRhs);
    }
    let width = n + m + 1;
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m + 1);
    for (i, row) in a.iter().enumerate() {
        let mut t = vec![Rational::zero(); width];
        t[..n].clone_from_slice(row);
        t[n + i] = Rational::from_integer(1.into());
        t[width - 1] = b[i].clone();
        tab.push(t);
    }
    let mut obj = vec![Rational::zero(); width];
    for (o, x) in obj.iter_mut().zip(c) {
        *o = -x.clone();
    }
    tab.push(obj);
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        let Some(enter) = (0..n + m).find(|&j| tab[m][j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !tab[i][enter].is_positive() {
                continue;
            }
            let r = &tab[i][width - 1] / &tab[i][enter];
            let better = match &leave {
                None => true,
                Some((li, lr)) => r < *lr || (r == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, r));
            }
        }
        let Some((row, _)) = leave else {
            return Err(LpError::Unbounded);
        };
        pivot(&mut tab, row, enter);
        basis[row] = enter;
    }

    let mut primal = vec![Rational::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            primal[bv] = tab[i][width - 1].clone();
        }
    }
    let dual = (0..m).map(|i| tab[m][n + i].clone()).collect();
    Ok(LpSolution {
        value: tab[m][width - 1].clone(),
        primal,
        dual,
    })
}

fn pivot(tab: &mut [Vec<Rational>], row: usize, col: usize) {
    let inv = tab[row][col].recip();
    for x in tab[row].iter_mut() {
        *x = &*x * &inv;
    }
    let prow = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i == row || r[col].is_zero() {
            continue;
        }
        let f = r[col].clone();
        for (x, p) in r.iter_mut().zip(&prow) {
            if !p.is_zero() {
                *x -= &f * p;
            }
        }
    }
}
