use super::{Rational, RationalMatrix, RationalVector};
use crate::error::{Error, Result};

/// Outcome of an exact square solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinearSolution {
    Unique(RationalVector),
    /// Rank-deficient but consistent. `x` has every non-pivot column of the
    /// reduced row echelon form (listed in `free`) set to zero.
    Degenerate { x: RationalVector, free: Vec<usize> },
    Inconsistent,
}

impl LinearSolution {
    pub fn solution(&self) -> Option<&RationalVector> {
        match self {
            LinearSolution::Unique(x) | LinearSolution::Degenerate { x, .. } => Some(x),
            LinearSolution::Inconsistent => None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, LinearSolution::Degenerate { .. })
    }
}

/// Solves `a * x = b` by Gauss-Jordan elimination to reduced row echelon form.
///
/// Pivot columns are the leftmost linearly independent columns, so the
/// zero-free-variable particular solution of a degenerate system is canonical.
pub fn solve_linear_system(a: &RationalMatrix, b: &[Rational]) -> Result<LinearSolution> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "solve_linear_system needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::dim(format!(
            "right-hand side has {} entries, matrix has {n} rows",
            b.len()
        )));
    }

    let mut rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();

    let mut pivots = Vec::with_capacity(n);
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..n).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = rows[rank][col].recip().expect("pivot is nonzero");
        for v in rows[rank][col..].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                if !pv.is_zero() {
                    *v -= &(&factor * pv);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }

    if rows[rank..].iter().any(|r| !r[n].is_zero()) {
        return Ok(LinearSolution::Inconsistent);
    }

    let mut x = vec![Rational::zero(); n];
    for (r, &col) in pivots.iter().enumerate() {
        x[col] = rows[r][n].clone();
    }
    if rank == n {
        Ok(LinearSolution::Unique(x))
    } else {
        let free = (0..n).filter(|c| !pivots.contains(c)).collect();
        Ok(LinearSolution::Degenerate { x, free })
    }
}
