//! Exhaustive enumeration: exact solution counts and per-value usage.
//!
//! Deliberately plain: static ascending variable order, each value checked
//! only against already-assigned neighbors. Everything else in the crate is
//! validated against this.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::csp::{ArcView, CspInstance, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionCensus {
    pub total: BigUint,
    /// `usage[x][i]`: number of solutions with `x = i`.
    pub usage: Vec<Vec<BigUint>>,
    /// The cap was exceeded; counts are partial.
    pub truncated: bool,
}

impl SolutionCensus {
    pub fn is_satisfiable(&self) -> bool {
        !self.total.is_zero()
    }

    pub fn total_u64(&self) -> Option<u64> {
        self.total.to_u64()
    }
}

/// Counts every solution, stopping once more than `cap` have been seen.
pub fn enumerate(inst: &CspInstance, cap: Option<u64>) -> SolutionCensus {
    let n = inst.num_vars();
    // constraints towards lower-indexed (already assigned) variables
    let back: Vec<Vec<(Var, ArcView<'_>)>> = (0..n)
        .map(|x| {
            inst.adjacent(x)
                .iter()
                .filter(|&&(y, _)| y < x)
                .map(|&(y, e)| (y, inst.arc(x, e)))
                .collect()
        })
        .collect();

    // One counter per visited solution cannot overflow u128.
    let mut usage: Vec<Vec<u128>> = (0..n).map(|x| vec![0; inst.domain_size(x)]).collect();
    let mut total: u128 = 0;
    let cap = cap.map(u128::from);
    let mut assignment = vec![0usize; n];
    let mut truncated = false;

    if n > 0 {
        // next value to try at each depth
        let mut next = vec![0usize; n];
        let mut depth = 0usize;
        'search: loop {
            let x = depth;
            let mut placed = false;
            while next[x] < inst.domain_size(x) {
                let v = next[x];
                next[x] += 1;
                if inst.unary(x)[v] && back[x].iter().all(|(y, arc)| arc.allows(v, assignment[*y])) {
                    assignment[x] = v;
                    placed = true;
                    break;
                }
            }
            if placed {
                if depth + 1 == n {
                    total += 1;
                    for (y, &v) in assignment.iter().enumerate() {
                        usage[y][v] += 1;
                    }
                    if cap.is_some_and(|c| total > c) {
                        truncated = true;
                        break 'search;
                    }
                } else {
                    depth += 1;
                    next[depth] = 0;
                }
            } else {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
        }
    } else {
        total = 1;
    }

    SolutionCensus {
        total: BigUint::from(total),
        usage: usage
            .into_iter()
            .map(|u| u.into_iter().map(BigUint::from).collect())
            .collect(),
        truncated,
    }
}

/// `a / b` as a float, accurate for arbitrarily large integers.
pub fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    if b.is_zero() {
        return 0.0;
    }
    let shift = b.bits().saturating_sub(64);
    let (a, b) = (a >> shift, b >> shift);
    a.to_f64().unwrap_or(f64::INFINITY) / b.to_f64().unwrap_or(f64::INFINITY)
}

/// Exact solution probabilities; all-zero vectors when unsatisfiable.
pub fn frequencies(census: &SolutionCensus) -> Result<Vec<Vec<f64>>> {
    if census.truncated {
        return Err(Error::TruncatedCensus);
    }
    Ok(census
        .usage
        .iter()
        .map(|u| u.iter().map(|c| ratio(c, &census.total)).collect())
        .collect())
}

/// All solutions, in lexicographic order. Intended for small instances.
pub fn solutions(inst: &CspInstance, limit: usize) -> Vec<Vec<usize>> {
    let n = inst.num_vars();
    let mut out = Vec::new();
    let mut partial = vec![None; n];
    fn rec(inst: &CspInstance, x: Var, partial: &mut Vec<Option<usize>>, out: &mut Vec<Vec<usize>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if x == inst.num_vars() {
            out.push(partial.iter().map(|v| v.expect("complete")).collect());
            return;
        }
        for v in 0..inst.domain_size(x) {
            if inst.consistent_with(x, v, partial) {
                partial[x] = Some(v);
                rec(inst, x + 1, partial, out, limit);
                partial[x] = None;
            }
        }
    }
    rec(inst, 0, &mut partial, &mut out, limit);
    out
}
