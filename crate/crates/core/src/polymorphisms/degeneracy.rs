//! Degeneracy and hard-set probes on the two-element profile `f^p`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{fp_of_mask, FpMatrix, OperationTable};
use crate::error::{Error, Result};

/// Largest arity for which all `2^n` subsets are scanned.
pub const MAX_PROBE_ARITY: usize = 16;

/// Values `x_1, …, x_k` of `f^p` that no pairwise disjoint `S_1, …, S_k`
/// realize simultaneously.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegeneracyWitness {
    pub k: usize,
    pub witness: Option<Vec<FpMatrix>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegeneracyReport {
    pub arity: usize,
    pub range_size: usize,
    /// One entry per `k` in `1..=max_k`; the witness is the least such
    /// sequence, taken as a nondecreasing sequence of range indices.
    pub k_degenerate_witnesses: Vec<DegeneracyWitness>,
    /// Sets of size at most `max_set_size` with no superset `T` such that
    /// `f^p(T) = f^p(∅)`, as sorted coordinate lists in increasing bitmask order.
    pub hard_sets: Vec<Vec<usize>>,
}

/// Brute-force degeneracy and hard-set analysis of one operation.
pub fn degeneracy_probe(f: &OperationTable, max_k: usize, max_set_size: usize) -> Result<DegeneracyReport> {
    let n = f.arity();
    if n > MAX_PROBE_ARITY {
        return Err(Error::ResourceLimit(format!("subset scans are limited to arity {MAX_PROBE_ARITY}")));
    }
    let masks = 1usize << n;
    let fps: Vec<FpMatrix> =
        (0..masks).map(|m| fp_of_mask(f, &(0..n).map(|k| m >> k & 1 == 1).collect::<Vec<_>>())).collect();
    let mut range: BTreeMap<FpMatrix, Vec<usize>> = BTreeMap::new();
    for (m, p) in fps.iter().enumerate() {
        range.entry(p.clone()).or_default().push(m);
    }
    let values: Vec<&FpMatrix> = range.keys().collect();
    let realizers: Vec<&Vec<usize>> = range.values().collect();

    let mut k_degenerate_witnesses = Vec::new();
    for k in 1..=max_k {
        let mut memo: HashMap<(Vec<usize>, usize), bool> = HashMap::new();
        let mut witness = None;
        let mut seq = vec![0usize; k];
        loop {
            if !realizable(&seq, 0, &realizers, &mut memo) {
                witness = Some(seq.iter().map(|&i| values[i].clone()).collect());
                break;
            }
            if !next_multiset(&mut seq, values.len()) {
                break;
            }
        }
        k_degenerate_witnesses.push(DegeneracyWitness { k, witness });
    }

    // reach[m]: some superset of m has the profile of the empty set
    let mut reach: Vec<bool> = fps.iter().map(|p| *p == fps[0]).collect();
    for bit in 0..n {
        for m in (0..masks).rev() {
            if m >> bit & 1 == 0 && reach[m | 1 << bit] {
                reach[m] = true;
            }
        }
    }
    let hard_sets = (0..masks)
        .filter(|&m| (m.count_ones() as usize) <= max_set_size && !reach[m])
        .map(|m| (0..n).filter(|&k| m >> k & 1 == 1).collect())
        .collect();
    Ok(DegeneracyReport { arity: n, range_size: values.len(), k_degenerate_witnesses, hard_sets })
}

/// Can the values `seq` (as range indices) be realized by pairwise disjoint
/// sets avoiding `used`?
fn realizable(
    seq: &[usize],
    used: usize,
    realizers: &[&Vec<usize>],
    memo: &mut HashMap<(Vec<usize>, usize), bool>,
) -> bool {
    let Some((&first, rest)) = seq.split_first() else {
        return true;
    };
    let key = (seq.to_vec(), used);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let ok = realizers[first].iter().any(|&s| s & used == 0 && realizable(rest, used | s, realizers, memo));
    memo.insert(key, ok);
    ok
}

/// Advances a nondecreasing sequence over `0..base`.
fn next_multiset(seq: &mut [usize], base: usize) -> bool {
    let Some(i) = seq.iter().rposition(|&v| v + 1 < base) else {
        return false;
    };
    let v = seq[i] + 1;
    for s in &mut seq[i..] {
        *s = v;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_mod2(n: usize) -> OperationTable {
        OperationTable::from_fn(2, 2, n, |x| x.iter().sum::<usize>() % 2).unwrap()
    }

    #[test]
    fn nothing_is_one_degenerate() {
        for f in [sum_mod2(3), OperationTable::from_fn(2, 2, 3, |x| x[0] & x[1]).unwrap()] {
            let rep = degeneracy_probe(&f, 1, 0).unwrap();
            assert_eq!(rep.k_degenerate_witnesses[0].witness, None);
        }
    }

    #[test]
    fn empty_set_is_never_hard() {
        let rep = degeneracy_probe(&sum_mod2(3), 2, 3).unwrap();
        assert!(!rep.hard_sets.contains(&vec![]));
    }

    #[test]
    fn projection_has_hard_sets() {
        // f = x_0: any set containing coordinate 0 flips the profile for good
        let f = OperationTable::from_fn(2, 2, 3, |x| x[0]).unwrap();
        let rep = degeneracy_probe(&f, 2, 3).unwrap();
        assert_eq!(rep.hard_sets, vec![vec![0], vec![0, 1], vec![0, 2], vec![0, 1, 2]]);
        // two copies of f^p({0}) need two disjoint sets containing 0
        assert!(rep.k_degenerate_witnesses[1].witness.is_some());
    }
}
