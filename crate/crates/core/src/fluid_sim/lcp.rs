//! Instantaneous rates on a face of the orthant.
//!
//! On the zero set `Z` the push rates solve the complementarity problem
//! `u_Z >= 0`, `w_Z = theta_Z + R_ZZ u_Z >= 0`, `u_Z . w_Z = 0`. The zero set
//! is split into strongly connected components of the dependency graph of
//! `R_ZZ` (edge `i -> j` when `R_ij != 0`), and supports are enumerated block
//! by block in dependency order. Every combination of block solutions is a
//! solution of the whole problem and vice versa, so the split loses nothing.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_num::{solve_linear_system, Rational, RationalMatrix, RationalVector};

/// Largest strongly connected block of the zero set that is enumerated.
pub const DEFAULT_ZSET_CAP: usize = 22;

/// Blocks at least this large enumerate their supports in parallel.
const PARALLEL_BLOCK: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateSolution {
    /// Coordinates with a positive push rate, ascending.
    pub support: Vec<usize>,
    /// Push rates `dy/dt`; zero off the zero set.
    pub u: RationalVector,
    /// Resulting `dz/dt = theta + R u`.
    pub w: RationalVector,
    /// Some block solve hit a singular `R_SS`; `u` is the particular solution
    /// with free variables set to zero.
    pub degenerate: bool,
}

/// All rate solutions at state `z`, deduplicated by `w` and sorted by support
/// then by `u`.
///
/// An empty list means no piecewise-linear continuation was found.
pub fn resolve_rates(
    r: &RationalMatrix,
    theta: &[Rational],
    z: &[Rational],
    cap: usize,
) -> Result<Vec<RateSolution>> {
    let d = z.len();
    if theta.len() != d || r.rows() != d || r.cols() != d {
        return Err(Error::dim(format!(
            "state has {d} entries, theta {}, R is {}x{}",
            theta.len(),
            r.rows(),
            r.cols()
        )));
    }
    if let Some(j) = z.iter().position(Rational::is_negative) {
        return Err(Error::usage(format!("z[{j}] = {} is negative", z[j])));
    }
    let zero_set: Vec<usize> = (0..d).filter(|&j| z[j].is_zero()).collect();
    let blocks = dependency_blocks(r, &zero_set);
    if let Some(big) = blocks.iter().map(Vec::len).max().filter(|&n| n > cap) {
        return Err(Error::Capacity {
            what: "zero-set block",
            size: big,
            cap,
            at: None,
        });
    }

    // Partial solutions: push rates on the blocks handled so far.
    let mut partial: Vec<(RationalVector, bool)> = vec![(vec![Rational::zero(); d], false)];
    for block in &blocks {
        let mut next: Vec<(RationalVector, bool)> = Vec::new();
        let mut seen: BTreeSet<RationalVector> = BTreeSet::new();
        for (u, degenerate) in &partial {
            // Offset seen by the block from the blocks it depends on.
            let shifted: RationalVector = block
                .iter()
                .map(|&i| {
                    let mut acc = theta[i].clone();
                    for (j, uj) in u.iter().enumerate() {
                        if !uj.is_zero() && !r[(i, j)].is_zero() {
                            acc += &(&r[(i, j)] * uj);
                        }
                    }
                    acc
                })
                .collect();
            for (local, deg) in solve_block(r, block, &shifted) {
                let mut full = u.clone();
                for (k, &i) in block.iter().enumerate() {
                    full[i] = local[k].clone();
                }
                if seen.insert(full.clone()) {
                    next.push((full, *degenerate || deg));
                }
            }
        }
        partial = next;
        if partial.is_empty() {
            return Ok(Vec::new());
        }
    }

    let mut out: Vec<RateSolution> = partial
        .into_iter()
        .map(|(u, degenerate)| {
            let ru = r.mul_vec(&u).expect("shapes checked above");
            let w = theta.iter().zip(ru).map(|(t, x)| t + &x).collect();
            let support = (0..d).filter(|&j| u[j].is_positive()).collect();
            RateSolution {
                support,
                u,
                w,
                degenerate,
            }
        })
        .collect();
    out.sort_by(|a, b| a.support.cmp(&b.support).then_with(|| a.u.cmp(&b.u)));
    let mut seen_w = BTreeSet::new();
    out.retain(|s| seen_w.insert(s.w.clone()));
    Ok(out)
}

/// Local solutions `(u_K, degenerate)` of one block with offset `shifted`.
fn solve_block(
    r: &RationalMatrix,
    block: &[usize],
    shifted: &[Rational],
) -> Vec<(RationalVector, bool)> {
    let k = block.len();
    let try_mask = |mask: u32| -> Option<(RationalVector, bool)> {
        let support: Vec<usize> = (0..k).filter(|&b| mask >> b & 1 == 1).collect();
        let mut local = vec![Rational::zero(); k];
        let mut degenerate = false;
        if !support.is_empty() {
            let idx: Vec<usize> = support.iter().map(|&b| block[b]).collect();
            let rhs: Vec<Rational> = support.iter().map(|&b| -&shifted[b]).collect();
            let sol = solve_linear_system(&r.principal(&idx), &rhs).expect("square system");
            degenerate = sol.is_degenerate();
            let x = sol.solution()?;
            if x.iter().any(Rational::is_negative) {
                return None;
            }
            for (&b, v) in support.iter().zip(x) {
                local[b] = v.clone();
            }
        }
        for b in (0..k).filter(|&b| mask >> b & 1 == 0) {
            let mut w = shifted[b].clone();
            for (c, uc) in local.iter().enumerate() {
                if !uc.is_zero() {
                    w += &(&r[(block[b], block[c])] * uc);
                }
            }
            if w.is_negative() {
                return None;
            }
        }
        Some((local, degenerate))
    };
    let masks = 0..1u32 << k;
    let mut found: Vec<(RationalVector, bool)> = if k >= PARALLEL_BLOCK {
        masks.into_par_iter().filter_map(try_mask).collect()
    } else {
        masks.filter_map(try_mask).collect()
    };
    found.sort();
    found.dedup_by(|a, b| a.0 == b.0);
    found
}

/// Strongly connected components of the zero set, dependencies first.
fn dependency_blocks(r: &RationalMatrix, zero_set: &[usize]) -> Vec<Vec<usize>> {
    let n = zero_set.len();
    let adj: Vec<Vec<usize>> = zero_set
        .iter()
        .map(|&i| {
            (0..n)
                .filter(|&b| zero_set[b] != i && !r[(i, zero_set[b])].is_zero())
                .collect()
        })
        .collect();

    // Iterative Tarjan. A component is emitted only after every component it
    // reaches, which is exactly dependency order.
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut out = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let x = stack.pop().expect("component root is on the stack");
                    on_stack[x] = false;
                    comp.push(zero_set[x]);
                    if x == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}
