//! Existence of 2-block-symmetric and alternating polymorphisms, searched
//! over frequency vectors instead of raw input tuples.
//!
//! A 2-block-symmetric operation of arity `2k+1` only depends on the value
//! frequencies of its `k+1` odd positions and `k` even positions, so it is a
//! function `g(x, y)` on `S_k × S_{k+1}`. An alternating one only depends on
//! the difference `y − x ∈ S_{k+1} − S_k`.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::freq::{alternating_points, rbar, simplex_points, step, FreqTuple};
use super::{OperationTable, TupleIndex};
use crate::analysis::relation_is_symmetric;
use crate::error::{invalid, Error, Result};
use crate::search::{Network, SearchConfig};
use crate::structure::{next_permutation, Structure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactoredKind {
    BlockSymmetric,
    Alternating,
}

/// Limits for the factored search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredConfig {
    pub search: SearchConfig,
    /// Bound on the size of each Minkowski sum and on the number of constraints.
    pub set_cap: usize,
}

impl Default for FactoredConfig {
    fn default() -> Self {
        FactoredConfig { search: SearchConfig::default(), set_cap: super::DEFAULT_MINKOWSKI_CAP }
    }
}

/// A function on `S_k × S_{k+1}` (block-symmetric; the input is `x`
/// followed by `y`) or on `S_{k+1} − S_k` (alternating).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoredTable {
    pub kind: FactoredKind,
    pub k: usize,
    pub source_domain: usize,
    pub target_domain: usize,
    /// Sorted inputs.
    pub inputs: Vec<Vec<i64>>,
    pub values: Vec<usize>,
}

impl FactoredTable {
    /// The inputs of the given kind, sorted.
    pub fn domain(kind: FactoredKind, k: usize, a: usize) -> Vec<Vec<i64>> {
        match kind {
            FactoredKind::Alternating => alternating_points(a, k),
            FactoredKind::BlockSymmetric => {
                let ys = simplex_points(a, k + 1);
                simplex_points(a, k).into_iter().flat_map(|x| ys.iter().map(move |y| [x.clone(), y.clone()].concat())).collect()
            }
        }
    }

    pub fn from_fn(kind: FactoredKind, k: usize, a: usize, b: usize, f: impl Fn(&[i64]) -> usize) -> Result<Self> {
        let inputs = FactoredTable::domain(kind, k, a);
        let values: Vec<usize> = inputs.iter().map(|x| f(x)).collect();
        if let Some(v) = values.iter().find(|&&v| v >= b) {
            return Err(invalid(format!("value {v} outside the target domain of size {b}")));
        }
        Ok(FactoredTable { kind, k, source_domain: a, target_domain: b, inputs, values })
    }

    pub fn arity(&self) -> usize {
        2 * self.k + 1
    }

    pub fn value_at(&self, input: &[i64]) -> Option<usize> {
        self.inputs.binary_search_by(|p| p.as_slice().cmp(input)).ok().map(|i| self.values[i])
    }

    /// The key read off a raw input: frequencies of the even positions then
    /// the odd positions (1-based) for block-symmetric tables, their
    /// difference for alternating ones.
    pub fn key_of(&self, x: &[usize]) -> Vec<i64> {
        let a = self.source_domain;
        let mut odd = vec![0i64; a];
        let mut even = vec![0i64; a];
        for (p, &v) in x.iter().enumerate() {
            if p % 2 == 0 {
                odd[v] += 1;
            } else {
                even[v] += 1;
            }
        }
        match self.kind {
            FactoredKind::BlockSymmetric => [even, odd].concat(),
            FactoredKind::Alternating => odd.iter().zip(&even).map(|(o, e)| o - e).collect(),
        }
    }

    /// The operation of arity `2k+1` this table describes.
    pub fn expand(&self) -> Result<OperationTable> {
        OperationTable::from_fn(self.source_domain, self.target_domain, self.arity(), |x| {
            self.value_at(&self.key_of(x)).expect("every key lies in the factored domain")
        })
    }

    /// Re-checks the factored constraints against `(A, B)` directly.
    pub fn verify(&self, a: &Structure, b: &Structure, cap: usize) -> Result<bool> {
        if self.inputs != FactoredTable::domain(self.kind, self.k, self.source_domain) {
            return Ok(false);
        }
        let mut ok = true;
        for_each_constraint(self.kind, self.k, a, b, cap, &mut |rb, rows| {
            let image: Vec<usize> = rows.iter().map(|row| self.value_at(row).expect("row in domain")).collect();
            ok &= rb.contains(&image);
            ok
        })?;
        Ok(ok)
    }
}

/// Calls `visit` with every constraint row-tuple (one input per position)
/// for each relation, stopping early when `visit` returns false. With
/// `R^A` symmetric the rows are canonical representatives; their
/// permutations are replayed only when `R^B` is not symmetric.
fn for_each_constraint(
    kind: FactoredKind,
    k: usize,
    a: &Structure,
    b: &Structure,
    cap: usize,
    visit: &mut dyn FnMut(&TupleIndex, Vec<Vec<i64>>) -> bool,
) -> Result<()> {
    a.check_similar(b)?;
    let asz = a.domain_size();
    for (ra, rbr) in a.relations().iter().zip(b.relations()) {
        if ra.is_empty() {
            continue;
        }
        let index = TupleIndex::new(rbr, b.domain_size());
        let r = ra.arity();
        let replay = relation_is_symmetric(ra) && !relation_is_symmetric(rbr);
        for rows in constraint_rows(kind, k, asz, ra, cap)? {
            if !replay {
                if !visit(&index, rows) {
                    return Ok(());
                }
                continue;
            }
            let mut perm: Vec<usize> = (0..r).collect();
            loop {
                if !visit(&index, perm.iter().map(|&p| rows[p].clone()).collect()) {
                    return Ok(());
                }
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }
    Ok(())
}

/// Constraint row-tuples for one relation, canonicalized when `R^A` is symmetric.
fn constraint_rows(
    kind: FactoredKind,
    k: usize,
    a: usize,
    ra: &crate::structure::Relation,
    cap: usize,
) -> Result<Vec<Vec<Vec<i64>>>> {
    let rb = rbar(ra, a);
    let canon = relation_is_symmetric(ra).then_some(a);
    let zero = BTreeSet::from([vec![0i64; ra.arity() * a]]);
    let split = |t: &FreqTuple| -> Vec<Vec<i64>> { t.chunks(a).map(<[i64]>::to_vec).collect() };
    match kind {
        FactoredKind::Alternating => {
            let mut acc = zero;
            for _ in 0..=k {
                acc = step(&acc, &rb, 1, canon, cap)?;
            }
            for _ in 0..k {
                acc = step(&acc, &rb, -1, canon, cap)?;
            }
            Ok(acc.iter().map(split).collect())
        }
        FactoredKind::BlockSymmetric => {
            let mut xs = zero.clone();
            for _ in 0..k {
                xs = step(&xs, &rb, 1, canon, cap)?;
            }
            let mut ys = zero;
            for _ in 0..=k {
                ys = step(&ys, &rb, 1, None, cap)?;
            }
            let mut out: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
            for x in &xs {
                for y in &ys {
                    let mut rows: Vec<Vec<i64>> =
                        x.chunks(a).zip(y.chunks(a)).map(|(p, q)| [p, q].concat()).collect();
                    if canon.is_some() {
                        rows.sort_unstable();
                    }
                    out.insert(rows);
                    if out.len() > cap {
                        return Err(Error::ResourceLimit(format!("more than {cap} constraints")));
                    }
                }
            }
            Ok(out.into_iter().collect())
        }
    }
}

/// Searches for the lexicographically least factored table whose expansion
/// is a polymorphism of the given kind and arity `2k+1`.
pub fn exists_factored_polymorphism(
    a: &Structure,
    b: &Structure,
    kind: FactoredKind,
    k: usize,
    config: &FactoredConfig,
) -> Result<Option<FactoredTable>> {
    a.check_similar(b)?;
    let inputs = FactoredTable::domain(kind, k, a.domain_size());
    let var_of = |row: &[i64]| inputs.binary_search_by(|p| p.as_slice().cmp(row)).expect("row in domain");
    let mut net = Network::new(inputs.len(), b.domain_size(), b.relations().iter().map(|r| r.tuples().to_vec()).collect());
    net.set_lexicographic();
    for (ri, (ra, rbr)) in a.relations().iter().zip(b.relations()).enumerate() {
        if ra.is_empty() {
            continue;
        }
        let expand_perms = relation_is_symmetric(ra) && !relation_is_symmetric(rbr);
        let mut scopes: HashSet<Vec<usize>> = HashSet::new();
        for rows in constraint_rows(kind, k, a.domain_size(), ra, config.set_cap)? {
            let scope: Vec<usize> = rows.iter().map(|row| var_of(row)).collect();
            if expand_perms {
                let mut perm: Vec<usize> = (0..scope.len()).collect();
                loop {
                    scopes.insert(perm.iter().map(|&p| scope[p]).collect());
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
            } else {
                scopes.insert(scope);
            }
            if scopes.len() > config.set_cap {
                return Err(Error::ResourceLimit(format!("more than {} constraints", config.set_cap)));
            }
        }
        let mut scopes: Vec<Vec<usize>> = scopes.into_iter().collect();
        scopes.sort_unstable();
        for s in scopes {
            net.add_constraint(s, ri);
        }
    }
    let Some(values) = net.solve(&config.search)? else {
        return Ok(None);
    };
    let table = FactoredTable { kind, k, source_domain: a.domain_size(), target_domain: b.domain_size(), inputs, values };
    debug_assert!(table.verify(a, b, config.set_cap).unwrap_or(true));
    Ok(Some(table))
}

/// The analytic table `Σ odd − Σ even (mod m)` on the frequency domain, for
/// a domain whose element `v` stands for the residue `v mod m`, mapped into
/// the target through `embed`.
pub fn modular_alternating_table(
    k: usize,
    a: usize,
    m: usize,
    b: usize,
    embed: impl Fn(usize) -> usize,
) -> Result<FactoredTable> {
    FactoredTable::from_fn(FactoredKind::Alternating, k, a, b, |z| {
        let s: i64 = z.iter().enumerate().map(|(v, &c)| v as i64 * c).sum();
        embed(s.rem_euclid(m as i64) as usize)
    })
}
