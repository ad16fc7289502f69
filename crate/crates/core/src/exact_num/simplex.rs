//! Exact phase-1 simplex with Bland's rule.
//!
//! Only feasibility is ever needed here: a point of `{x >= 0 : A x = b}`, or
//! the `w >= 0, A w >= 1` form used by the S-matrix test together with a
//! Farkas vector when it is infeasible.

use super::{Rational, RationalMatrix, RationalVector};
use crate::error::{Error, Result};

/// Result of [`lp_nonneg_feasible`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// `w >= 0` with `A w >= 1` componentwise.
    Feasible(RationalVector),
    /// Farkas certificate `y >= 0` with `A^T y <= 0` and `sum(y) = 1`.
    Infeasible(RationalVector),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    cost: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip().expect("pivot element is nonzero");
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..pivot_row.len())
            .filter(|&k| !pivot_row[k].is_zero())
            .collect();
        let eliminate = |row: &mut Vec<Rational>| {
            if row[c].is_zero() {
                return;
            }
            let factor = row[c].clone();
            for &k in &nz {
                row[k] -= &(&factor * &pivot_row[k]);
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.cost);
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Runs Bland's rule to optimality. The phase-1 objective is bounded
    /// below by zero, so there is always a leaving row.
    fn optimize(&mut self) {
        let rhs = self.rhs();
        while let Some(c) = (0..self.width).find(|&j| self.cost[j].is_negative()) {
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let (r, _) = best.expect("phase-1 objective is bounded");
            self.pivot(r, c);
        }
    }
}

/// Finds some `x >= 0` with `a * x = b`, or `None` when the system has no
/// nonnegative solution.
pub fn nonneg_solution(a: &RationalMatrix, b: &[Rational]) -> Result<Option<RationalVector>> {
    if b.len() != a.rows() {
        return Err(Error::dim(format!(
            "right-hand side has {} entries, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    let (m, n) = (a.rows(), a.cols());
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, bi) in b.iter().enumerate() {
        let flip = bi.is_negative();
        let mut row = Vec::with_capacity(width + 1);
        for v in a.row(i) {
            row.push(if flip { -v } else { v.clone() });
        }
        for k in 0..m {
            row.push(if k == i { Rational::one() } else { Rational::zero() });
        }
        row.push(if flip { -bi } else { bi.clone() });
        rows.push(row);
    }
    let mut cost = vec![Rational::zero(); width + 1];
    for row in &rows {
        for j in 0..n {
            cost[j] -= &row[j];
        }
        cost[width] -= &row[width];
    }
    let mut t = Tableau {
        rows,
        cost,
        basis: (n..n + m).collect(),
        width,
    };
    t.optimize();
    if !t.cost[width].is_zero() {
        return Ok(None);
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[i][width].clone();
        }
    }
    Ok(Some(x))
}

/// Decides whether some `w >= 0` has `a * w >= 1` componentwise, which by
/// scaling is the same as `a * w > 0`.
pub fn lp_nonneg_feasible(a: &RationalMatrix) -> Result<Feasibility> {
    let (k, n) = (a.rows(), a.cols());
    if k == 0 || n == 0 {
        return Err(Error::usage("lp_nonneg_feasible needs a nonempty matrix"));
    }

    // a w - s = 1 with w, s >= 0.
    let mut primal = RationalMatrix::zeros(k, n + k);
    for i in 0..k {
        for j in 0..n {
            primal[(i, j)] = a[(i, j)].clone();
        }
        primal[(i, n + i)] = Rational::from_integer(-1);
    }
    if let Some(x) = nonneg_solution(&primal, &vec![Rational::one(); k])? {
        let w = x[..n].to_vec();
        debug_assert!(a.mul_vec(&w)?.iter().all(|v| *v >= Rational::one()));
        return Ok(Feasibility::Feasible(w));
    }

    // Theorem of alternatives: a^T y + t = 0, sum(y) = 1 with y, t >= 0.
    let mut dual = RationalMatrix::zeros(n + 1, k + n);
    for j in 0..n {
        for i in 0..k {
            dual[(j, i)] = a[(i, j)].clone();
        }
        dual[(j, k + j)] = Rational::one();
    }
    for i in 0..k {
        dual[(n, i)] = Rational::one();
    }
    let mut rhs = vec![Rational::zero(); n + 1];
    rhs[n] = Rational::one();
    let x = nonneg_solution(&dual, &rhs)?
        .expect("exactly one system of the alternative is feasible");
    Ok(Feasibility::Infeasible(x[..k].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_num::int;
    use proptest::prelude::*;

    fn verify(a: &RationalMatrix, f: &Feasibility) -> bool {
        match f {
            Feasibility::Feasible(w) => {
                w.iter().all(|x| !x.is_negative())
                    && a.mul_vec(w).unwrap().iter().all(|v| *v >= Rational::one())
            }
            Feasibility::Infeasible(y) => {
                y.iter().all(|x| !x.is_negative())
                    && y.iter().sum::<Rational>() == Rational::one()
                    && a.transpose().mul_vec(y).unwrap().iter().all(|v| !v.is_positive())
            }
        }
    }

    #[test]
    fn small_cases() {
        let one = RationalMatrix::from_i64_rows(&[&[1]]).unwrap();
        assert_eq!(lp_nonneg_feasible(&one).unwrap(), Feasibility::Feasible(vec![int(1)]));

        let neg = RationalMatrix::from_i64_rows(&[&[-1]]).unwrap();
        let f = lp_nonneg_feasible(&neg).unwrap();
        assert!(!f.is_feasible());
        assert!(verify(&neg, &f));

        let swap = RationalMatrix::from_i64_rows(&[&[0, 1], &[1, 0]]).unwrap();
        assert_eq!(
            lp_nonneg_feasible(&swap).unwrap(),
            Feasibility::Feasible(vec![int(1), int(1)])
        );
    }

    #[test]
    fn empty_matrix_is_usage_error() {
        assert!(lp_nonneg_feasible(&RationalMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn equality_form() {
        let a = RationalMatrix::from_i64_rows(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
        let x = nonneg_solution(&a, &[int(2), int(-1)]).unwrap();
        assert!(x.is_none());
        let x = nonneg_solution(&a, &[int(2), int(3)]).unwrap().unwrap();
        assert_eq!(a.mul_vec(&x).unwrap(), vec![int(2), int(3)]);
        assert!(x.iter().all(|v| !v.is_negative()));
    }

    proptest! {
        #[test]
        fn witnesses_reverify(
            (r, c) in (1usize..5, 1usize..5),
            entries in proptest::collection::vec(-4i64..5, 25),
        ) {
            let rows: Vec<Vec<Rational>> = (0..r)
                .map(|i| (0..c).map(|j| int(entries[i * 5 + j])).collect())
                .collect();
            let a = RationalMatrix::from_rows(rows).unwrap();
            let f = lp_nonneg_feasible(&a).unwrap();
            prop_assert!(verify(&a, &f));
        }
    }
}
