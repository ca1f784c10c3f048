//! Frequency vectors and Minkowski sums of embedded relations.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::analysis::BalanceWitness;
use crate::error::{invalid, Error, Result};
use crate::structure::Relation;

/// A tuple of frequency vectors, flattened: entry `i·a + v` is the count of
/// value `v` at position `i`.
pub type FreqTuple = Vec<i64>;

pub const DEFAULT_MINKOWSKI_CAP: usize = 5_000_000;

/// A vector in `ℤ^a`, or in `Z_m^a` when `modulus` is set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FreqVector {
    pub coordinates: Vec<i64>,
    pub modulus: Option<u64>,
}

impl FreqVector {
    pub fn unit(i: usize, a: usize) -> Self {
        let mut coordinates = vec![0; a];
        coordinates[i] = 1;
        FreqVector { coordinates, modulus: None }
    }

    pub fn sum(&self) -> i64 {
        self.coordinates.iter().sum()
    }

    /// Membership in `S_k`: nonnegative with sum `k`.
    pub fn in_simplex(&self, k: i64) -> bool {
        self.modulus.is_none() && self.sum() == k && self.coordinates.iter().all(|&c| c >= 0)
    }

    /// Reduction into `Z_m^a`.
    pub fn reduced(&self, m: u64) -> Self {
        let m = m as i64;
        FreqVector { coordinates: self.coordinates.iter().map(|c| c.rem_euclid(m)).collect(), modulus: Some(m as u64) }
    }
}

/// `t̄ = (ē_{t_1}, …, ē_{t_r})`.
pub fn bar(t: &[usize], a: usize) -> FreqTuple {
    let mut v = vec![0; t.len() * a];
    for (i, &x) in t.iter().enumerate() {
        v[i * a + x] += 1;
    }
    v
}

pub fn rbar(r: &Relation, a: usize) -> BTreeSet<FreqTuple> {
    r.tuples().iter().map(|t| bar(t, a)).collect()
}

fn add(x: &[i64], y: &[i64], sign: i64) -> FreqTuple {
    x.iter().zip(y).map(|(p, q)| p + sign * q).collect()
}

/// Sorts the `r` position blocks; used to pick one representative per
/// orbit when the relation is closed under coordinate permutations.
pub(crate) fn canonical_rows(x: &[i64], a: usize) -> FreqTuple {
    if a == 0 {
        return x.to_vec();
    }
    let mut rows: Vec<&[i64]> = x.chunks(a).collect();
    rows.sort_unstable();
    rows.concat()
}

/// `base ± rbar`, optionally keeping one representative per orbit.
pub(crate) fn step(
    base: &BTreeSet<FreqTuple>,
    rbar: &BTreeSet<FreqTuple>,
    sign: i64,
    canon: Option<usize>,
    cap: usize,
) -> Result<BTreeSet<FreqTuple>> {
    let mut out = BTreeSet::new();
    for x in base {
        for y in rbar {
            let s = add(x, y, sign);
            out.insert(match canon {
                Some(a) => canonical_rows(&s, a),
                None => s,
            });
            if out.len() > cap {
                return Err(Error::ResourceLimit(format!("Minkowski sum exceeds {cap} elements")));
            }
        }
    }
    Ok(out)
}

fn zero_of(rbar: &BTreeSet<FreqTuple>) -> Result<FreqTuple> {
    rbar.iter().next().map(|t| vec![0; t.len()]).ok_or_else(|| invalid("Minkowski sums of an empty set"))
}

/// `kR̄`, the set of sums of `k` elements of `R̄`.
pub fn minkowski_power(rbar: &BTreeSet<FreqTuple>, k: usize, cap: usize) -> Result<BTreeSet<FreqTuple>> {
    let mut acc = BTreeSet::from([zero_of(rbar)?]);
    for _ in 0..k {
        acc = step(&acc, rbar, 1, None, cap)?;
    }
    Ok(acc)
}

/// `pR̄ − qR̄`.
pub fn minkowski_difference(rbar: &BTreeSet<FreqTuple>, p: usize, q: usize, cap: usize) -> Result<BTreeSet<FreqTuple>> {
    let mut acc = minkowski_power(rbar, p, cap)?;
    for _ in 0..q {
        acc = step(&acc, rbar, -1, None, cap)?;
    }
    Ok(acc)
}

/// Whether `x` is a sum of exactly `n` elements of `rbar`, by depth-first
/// search over multiplicities (every element of `rbar` is nonnegative).
pub fn in_minkowski_power(rbar: &[FreqTuple], x: &[i64], n: usize) -> bool {
    if x.iter().any(|&v| v < 0) {
        return false;
    }
    let mut failed: HashSet<(usize, FreqTuple)> = HashSet::new();
    let mut rest = x.to_vec();
    membership(rbar, 0, &mut rest, n, &mut failed)
}

fn membership(
    rbar: &[FreqTuple],
    from: usize,
    rest: &mut FreqTuple,
    n: usize,
    failed: &mut HashSet<(usize, FreqTuple)>,
) -> bool {
    if n == 0 {
        return rest.iter().all(|&v| v == 0);
    }
    if from == rbar.len() || failed.contains(&(from, rest.clone())) {
        return false;
    }
    let t = &rbar[from];
    let max = t
        .iter()
        .zip(rest.iter())
        .filter(|(c, _)| **c > 0)
        .map(|(c, r)| (r / c) as usize)
        .min()
        .unwrap_or(n)
        .min(n);
    for _ in 0..max {
        for (r, c) in rest.iter_mut().zip(t) {
            *r -= c;
        }
    }
    let mut count = max;
    loop {
        if membership(rbar, from + 1, rest, n - count, failed) {
            return true;
        }
        if count == 0 {
            break;
        }
        for (r, c) in rest.iter_mut().zip(t) {
            *r += c;
        }
        count -= 1;
    }
    failed.insert((from, rest.clone()));
    false
}

/// `S_k`, nonnegative vectors in `ℤ^a` summing to `k`, in lexicographic order.
pub fn simplex_points(a: usize, k: usize) -> Vec<Vec<i64>> {
    fn rec(a: usize, left: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() + 1 == a {
            cur.push(left as i64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v as i64);
            rec(a, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if a > 0 {
        rec(a, k, &mut Vec::new(), &mut out);
    }
    out
}

/// `S_{k+1} − S_k`, sorted.
pub fn alternating_points(a: usize, k: usize) -> Vec<Vec<i64>> {
    let lower = simplex_points(a, k);
    let mut pts: BTreeSet<Vec<i64>> = BTreeSet::new();
    for y in simplex_points(a, k + 1) {
        for x in &lower {
            pts.insert(add(&y, x, -1));
        }
    }
    pts.into_iter().collect()
}

/// Outcome of checking `(k+1)R̄ − kR̄ + kΣt̄_i ⊆ (kN+1)R̄`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContainmentReport {
    pub k: usize,
    pub n_columns: u64,
    /// Set when every complement `Σt̄_i − z̄` lies in `(N−1)R̄`, which proves
    /// the containment for all `k`; `checked` then counts complements.
    pub by_complements: bool,
    pub checked: usize,
    pub failures: usize,
}

/// Checks the shifted-difference containment for one balanced relation.
/// The complement test is tried first; otherwise every element of the
/// shifted difference is tested for membership.
pub fn sum_containment(r: &Relation, a: usize, witness: &BalanceWitness, k: usize, cap: usize) -> Result<ContainmentReport> {
    if !witness.verify(r) {
        return Err(invalid("balance witness does not match the relation"));
    }
    let elems: Vec<FreqTuple> = rbar(r, a).into_iter().collect();
    if complements_are_sums(&elems, witness, a) {
        return Ok(ContainmentReport {
            k,
            n_columns: witness.columns,
            by_complements: true,
            checked: elems.len(),
            failures: 0,
        });
    }
    direct_containment(r, a, witness, k, cap)
}

/// Tests every element of the shifted difference. When the relation is
/// symmetric the check runs over one representative per orbit of
/// coordinate permutations, which both sides respect.
pub(crate) fn direct_containment(
    r: &Relation,
    a: usize,
    witness: &BalanceWitness,
    k: usize,
    cap: usize,
) -> Result<ContainmentReport> {
    let rb = rbar(r, a);
    let canon = crate::analysis::relation_is_symmetric(r).then_some(a);
    let mut diff = BTreeSet::from([zero_of(&rb)?]);
    for _ in 0..=k {
        diff = step(&diff, &rb, 1, canon, cap)?;
    }
    for _ in 0..k {
        diff = step(&diff, &rb, -1, canon, cap)?;
    }
    let mut shift = vec![0i64; r.arity() * a];
    for t in witness.column_tuples() {
        for (s, v) in shift.iter_mut().zip(bar(&t, a)) {
            *s += v * k as i64;
        }
    }
    let target = (k as u64 * witness.columns + 1) as usize;
    let elems: Vec<FreqTuple> = rb.into_iter().collect();
    let failures = diff.iter().filter(|d| !in_minkowski_power(&elems, &add(d, &shift, 1), target)).count();
    Ok(ContainmentReport { k, n_columns: witness.columns, by_complements: false, checked: diff.len(), failures })
}

/// Whether `Σt̄_i − z̄ ∈ (N−1)R̄` for every `z ∈ R`. If so, every element
/// `Σȳ_i − Σz̄_j + kΣt̄_i` of the shifted difference splits as
/// `Σȳ_i + Σ_j (Σt̄_i − z̄_j)`, a sum of `(k+1) + k(N−1)` elements of `R̄`,
/// so the containment holds for every `k` without testing each element.
///
/// When `z` is itself a witness column the complement is the sum of the
/// other `N−1` columns; other tuples fall back to a membership search.
fn complements_are_sums(elems: &[FreqTuple], witness: &BalanceWitness, a: usize) -> bool {
    let Some(len) = elems.first().map(Vec::len) else {
        return false;
    };
    let Some(n) = (witness.columns as usize).checked_sub(1) else {
        return false;
    };
    let columns: BTreeSet<FreqTuple> =
        witness.counts.iter().filter(|(_, c)| *c > 0).map(|(t, _)| bar(t, a)).collect();
    let mut total = vec![0i64; len];
    for (t, c) in &witness.counts {
        for (s, v) in total.iter_mut().zip(bar(t, a)) {
            *s += v * *c as i64;
        }
    }
    elems.iter().all(|z| columns.contains(z) || in_minkowski_power(elems, &add(&total, z, -1), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_balanced;
    use crate::catalog;

    #[test]
    fn minkowski_powers_of_one_in_three() {
        let s = catalog::one_in_three();
        let rb = rbar(&s.relations()[0], 2);
        assert_eq!(minkowski_power(&rb, 1, 100).unwrap(), rb);
        assert_eq!(minkowski_power(&rb, 0, 100).unwrap().len(), 1);
        assert_eq!(minkowski_power(&rb, 2, 100).unwrap().len(), 6);
        assert!(minkowski_power(&rb, 3, 5).unwrap_err().is_resource_limit());
    }

    #[test]
    fn membership_matches_enumeration() {
        let s = catalog::eqn(3, 1).unwrap();
        let rb = rbar(&s.relations()[0], 3);
        let elems: Vec<FreqTuple> = rb.iter().cloned().collect();
        let three = minkowski_power(&rb, 3, 100_000).unwrap();
        for x in &three {
            assert!(in_minkowski_power(&elems, x, 3));
            assert!(!in_minkowski_power(&elems, x, 2));
        }
        let mut off = three.iter().next().unwrap().clone();
        off[0] += 1;
        off[1] -= 1;
        assert_eq!(in_minkowski_power(&elems, &off, 3), three.contains(&off));
    }

    #[test]
    fn simplex_sizes() {
        assert_eq!(simplex_points(3, 2).len(), 6);
        assert_eq!(simplex_points(2, 0), vec![vec![0, 0]]);
        let alt = alternating_points(2, 1);
        assert_eq!(alt, vec![vec![-1, 2], vec![0, 1], vec![1, 0], vec![2, -1]]);
        assert!(alternating_points(3, 2).iter().all(|z| z.iter().sum::<i64>() == 1 && z.iter().all(|&c| c >= -2)));
    }

    #[test]
    fn containment_on_one_in_three() {
        let s = catalog::one_in_three();
        let r = &s.relations()[0];
        let w = is_balanced(r).unwrap().unwrap();
        for k in 1..=2 {
            let rep = sum_containment(r, 2, &w, k, 1_000_000).unwrap();
            assert_eq!(rep.failures, 0);
            assert!(rep.checked > 0);
        }
    }

    #[test]
    fn complement_test_agrees_with_direct_check() {
        for key in ["one_in_three", "nae", "q_in_r(2,4)", "eqn(2,1)", "eqn(3,1)", "remark_4_4_a1"] {
            let s = catalog::lookup(key).unwrap();
            let r = &s.relations()[0];
            let Some(w) = is_balanced(r).unwrap() else { continue };
            for k in 1..=2 {
                let fast = sum_containment(r, s.domain_size(), &w, k, 1_000_000).unwrap();
                let slow = direct_containment(r, s.domain_size(), &w, k, 1_000_000).unwrap();
                assert!(!slow.by_complements);
                assert_eq!(fast.failures == 0, slow.failures == 0, "{key} k={k}");
            }
        }
    }

    #[test]
    fn freq_vector_helpers() {
        let u = FreqVector::unit(1, 3);
        assert!(u.in_simplex(1));
        let v = FreqVector { coordinates: vec![-1, 2, 0], modulus: None };
        assert_eq!(v.reduced(2).coordinates, vec![1, 0, 0]);
    }
}
