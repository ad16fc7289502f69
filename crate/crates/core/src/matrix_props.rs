//! S-matrix and completely-S tests.
//!
//! `M` is an S-matrix when some `w >= 0` has `M w > 0`, and completely-S when
//! every principal submatrix is. The brute-force decider is exponential in
//! the dimension; the certificate check is quadratic and only sufficient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_num::{int, lp_nonneg_feasible, Feasibility, Rational, RationalMatrix, RationalVector};
use crate::reduction::{Group, GroupLayout};

pub const DEFAULT_DIM_CAP: usize = 20;

/// Decides whether `m` is an S-matrix, with a witness `w` or a Farkas vector.
pub fn is_s_matrix(m: &RationalMatrix) -> Result<Feasibility> {
    if !m.is_square() {
        return Err(Error::dim(format!("S-matrix test needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    lp_nonneg_feasible(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CompletelySVerdict {
    Yes,
    /// `indices` is the lexicographically first principal index set that is
    /// not an S-matrix; `farkas` certifies it.
    No {
        indices: Vec<usize>,
        farkas: RationalVector,
    },
}

impl CompletelySVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, CompletelySVerdict::Yes)
    }
}

/// Checks all `2^d - 1` principal submatrices.
pub fn is_completely_s(m: &RationalMatrix, dim_cap: usize) -> Result<CompletelySVerdict> {
    if !m.is_square() {
        return Err(Error::dim(format!("completely-S test needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let d = m.rows();
    if d > dim_cap {
        return Err(Error::Capacity {
            what: "completely-S brute force dimension",
            size: d,
            cap: dim_cap,
            at: None,
        });
    }
    if d == 0 {
        return Ok(CompletelySVerdict::Yes);
    }

    let subset = |mask: u32| -> Vec<usize> { (0..d).filter(|&i| mask >> i & 1 == 1).collect() };
    let failure = |mask: u32| -> Option<(Vec<usize>, RationalVector)> {
        let idx = subset(mask);
        let sub = m.principal(&idx);
        if quick_witness(&sub).is_some() {
            return None;
        }
        match lp_nonneg_feasible(&sub).expect("nonempty square submatrix") {
            Feasibility::Feasible(_) => None,
            Feasibility::Infeasible(y) => Some((idx, y)),
        }
    };
    let worst = (1..1u32 << d)
        .into_par_iter()
        .filter_map(failure)
        .min_by(|a, b| a.0.cmp(&b.0));
    Ok(match worst {
        None => CompletelySVerdict::Yes,
        Some((indices, farkas)) => CompletelySVerdict::No { indices, farkas },
    })
}

/// Starts from all ones and raises `w_i` on any row with `(M w)_i <= 0` and
/// `M_ii > 0` until that row reaches one. Returns `w` only if `M w > 0`
/// holds exactly; `None` says nothing about feasibility.
fn quick_witness(m: &RationalMatrix) -> Option<RationalVector> {
    let k = m.rows();
    let mut w = vec![Rational::one(); k];
    let mut mw = m.mul_vec(&w).ok()?;
    for _ in 0..4 * k {
        let Some(i) = (0..k).find(|&i| !mw[i].is_positive()) else {
            return Some(w);
        };
        if !m[(i, i)].is_positive() {
            return None;
        }
        let bump = &(&Rational::one() - &mw[i]) / &m[(i, i)];
        w[i] += &bump;
        for (r, v) in mw.iter_mut().enumerate() {
            if !m[(r, i)].is_zero() {
                *v += &(&m[(r, i)] * &bump);
            }
        }
    }
    mw.iter().all(Rational::is_positive).then_some(w)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub row: usize,
    /// `M_ii v_i + sum of M_ij v_j over j != i with M_ij < 0`.
    pub worst_case: Rational,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub rows: Vec<CertificateRow>,
}

impl CertificateReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Smallest worst-case value over rows in `range`.
    pub fn min_over(&self, range: std::ops::Range<usize>) -> Option<&Rational> {
        self.rows[range].iter().map(|r| &r.worst_case).min()
    }
}

/// Row test that makes a single positive `v` serve every principal
/// submatrix: for each `i`, a positive diagonal and a positive value after
/// subtracting every negative off-diagonal contribution. Dropping indices
/// only removes terms, and the positive ones can only help.
pub fn check_certificate(m: &RationalMatrix, v: &[Rational]) -> Result<CertificateReport> {
    if !m.is_square() || v.len() != m.rows() {
        return Err(Error::dim(format!(
            "certificate of length {} for a {}x{} matrix",
            v.len(),
            m.rows(),
            m.cols()
        )));
    }
    if let Some(j) = v.iter().position(|x| !x.is_positive()) {
        return Err(Error::usage(format!("certificate entry {j} is {} but must be positive", v[j])));
    }
    let rows = (0..m.rows())
        .map(|i| {
            let mut worst = &m[(i, i)] * &v[i];
            for (j, vj) in v.iter().enumerate() {
                if j != i && m[(i, j)].is_negative() {
                    worst += &(&m[(i, j)] * vj);
                }
            }
            CertificateRow {
                row: i,
                pass: m[(i, i)].is_positive() && worst.is_positive(),
                worst_case: worst,
            }
        })
        .collect();
    Ok(CertificateReport { rows })
}

/// Group-constant vector for modified reduction matrices: `A = (1,1,3,3,3)`,
/// `B = 2`, `C = 5`, `D = 2`, `E = 25`, `F = 38`.
pub fn default_certificate(m: usize) -> Result<RationalVector> {
    let layout = GroupLayout::new(m)?;
    let mut v = vec![Rational::zero(); layout.dim()];
    for (k, a) in [1, 1, 3, 3, 3].into_iter().enumerate() {
        v[layout.index(Group::A, k + 1)] = int(a);
    }
    for (g, value) in [(Group::B, 2), (Group::C, 5), (Group::D, 2), (Group::E, 25), (Group::F, 38)] {
        for idx in layout.range(g) {
            v[idx] = int(value);
        }
    }
    Ok(v)
}
