//! Polymorphisms: explicit tables, minors, two-element profiles, and
//! symmetry-factored existence searches.

mod collapse;
mod degeneracy;
mod factored;
mod freq;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::all_tuples;
use crate::error::{invalid, Error, Result};
use crate::search::{Network, SearchConfig};
use crate::structure::{power, Relation, Structure, Tuple};

pub use collapse::{block_collapse_certificate, collapse_transform};
pub use degeneracy::{degeneracy_probe, DegeneracyReport, DegeneracyWitness};
pub use factored::{
    exists_factored_polymorphism, modular_alternating_table, FactoredConfig, FactoredKind, FactoredTable,
};
pub use freq::{
    alternating_points, bar, in_minkowski_power, minkowski_difference, minkowski_power, rbar, simplex_points,
    sum_containment, ContainmentReport, FreqTuple, FreqVector, DEFAULT_MINKOWSKI_CAP,
};

/// Largest number of table entries materialized.
pub const MAX_TABLE_SIZE: usize = 50_000_000;

/// Default bound on the number of column choices scanned by [`is_polymorphism`].
pub const DEFAULT_CHECK_CAP: u128 = 200_000_000;

/// An operation `A^n → B` stored row-major: the input `(x_1, …, x_n)` sits
/// at index `Σ x_i a^{n-i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperationTable {
    source_domain: usize,
    target_domain: usize,
    arity: usize,
    values: Vec<usize>,
}

pub(crate) fn table_size(a: usize, n: usize) -> Result<usize> {
    a.checked_pow(n as u32)
        .filter(|&s| s <= MAX_TABLE_SIZE)
        .ok_or_else(|| Error::ResourceLimit(format!("table with {a}^{n} entries exceeds {MAX_TABLE_SIZE}")))
}

impl OperationTable {
    pub fn new(source_domain: usize, target_domain: usize, arity: usize, values: Vec<usize>) -> Result<Self> {
        let size = table_size(source_domain, arity)?;
        if values.len() != size {
            return Err(invalid(format!("table needs {size} values, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|&&v| v >= target_domain) {
            return Err(invalid(format!("value {v} outside the target domain of size {target_domain}")));
        }
        Ok(OperationTable { source_domain, target_domain, arity, values })
    }

    pub fn from_fn(a: usize, b: usize, n: usize, f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        table_size(a, n)?;
        let values = all_tuples(a, n).iter().map(|x| f(x)).collect();
        OperationTable::new(a, b, n, values)
    }

    pub fn source_domain(&self) -> usize {
        self.source_domain
    }

    pub fn target_domain(&self) -> usize {
        self.target_domain
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn index_of(&self, x: &[usize]) -> usize {
        debug_assert_eq!(x.len(), self.arity);
        x.iter().fold(0, |acc, &v| acc * self.source_domain + v)
    }

    pub fn eval(&self, x: &[usize]) -> usize {
        self.values[self.index_of(x)]
    }
}

impl fmt::Display for OperationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-ary table {:?}", self.arity, self.values)
    }
}

/// Fast membership for the tuples of one relation.
pub(crate) struct TupleIndex {
    base: usize,
    dense: Option<Vec<bool>>,
    sparse: HashSet<Tuple>,
}

impl TupleIndex {
    pub(crate) fn new(r: &Relation, base: usize) -> Self {
        let dense = base.checked_pow(r.arity() as u32).filter(|&s| s <= 1 << 24).map(|size| {
            let mut bits = vec![false; size];
            for t in r.tuples() {
                bits[t.iter().fold(0, |acc, &v| acc * base + v)] = true;
            }
            bits
        });
        let sparse = if dense.is_some() { HashSet::new() } else { r.tuples().iter().cloned().collect() };
        TupleIndex { base, dense, sparse }
    }

    pub(crate) fn contains(&self, t: &[usize]) -> bool {
        match &self.dense {
            Some(bits) => bits[t.iter().fold(0, |acc, &v| acc * self.base + v)],
            None => self.sparse.contains(t),
        }
    }
}

/// A matrix whose columns lie in `R^A` but whose row images miss `R^B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolymorphismViolation {
    pub relation: String,
    pub columns: Vec<Tuple>,
    pub image: Tuple,
}

fn check_shapes(f: &OperationTable, a: &Structure, b: &Structure) -> Result<()> {
    a.check_similar(b)?;
    if f.source_domain != a.domain_size() || f.target_domain != b.domain_size() {
        return Err(invalid(format!(
            "table maps {} elements to {}, template has {} and {}",
            f.source_domain,
            f.target_domain,
            a.domain_size(),
            b.domain_size()
        )));
    }
    Ok(())
}

/// The first violating matrix, scanning relations in order and column
/// choices lexicographically.
pub fn polymorphism_violation(
    f: &OperationTable,
    a: &Structure,
    b: &Structure,
    cap: u128,
) -> Result<Option<PolymorphismViolation>> {
    check_shapes(f, a, b)?;
    let n = f.arity;
    let mut work: u128 = 0;
    for ra in a.relations() {
        let space = (ra.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        work = work.saturating_add(space);
        if work > cap {
            return Err(Error::ResourceLimit(format!("polymorphism check needs {work} column choices, cap is {cap}")));
        }
    }
    for (ra, rb) in a.relations().iter().zip(b.relations()) {
        if ra.is_empty() {
            continue;
        }
        let index = TupleIndex::new(rb, b.domain_size());
        let r = ra.arity();
        let cols = ra.tuples();
        let asz = f.source_domain;
        if n == 0 {
            let image = vec![f.values[0]; r];
            if !index.contains(&image) {
                return Ok(Some(PolymorphismViolation { relation: ra.name().to_string(), columns: vec![], image }));
            }
            continue;
        }
        // odometer over column choices with incremental row indices
        let mut choice = vec![0usize; n];
        let mut rows = vec![vec![0usize; r]; n + 1];
        let mut image = vec![0usize; r];
        for j in 0..n {
            for i in 0..r {
                rows[j + 1][i] = rows[j][i] * asz + cols[0][i];
            }
        }
        loop {
            for i in 0..r {
                image[i] = f.values[rows[n][i]];
            }
            if !index.contains(&image) {
                return Ok(Some(PolymorphismViolation {
                    relation: ra.name().to_string(),
                    columns: choice.iter().map(|&c| cols[c].clone()).collect(),
                    image: image.clone(),
                }));
            }
            let mut j = n;
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                choice[j] += 1;
                if choice[j] < cols.len() {
                    break;
                }
                choice[j] = 0;
            }
            if j == 0 && choice[0] == 0 {
                break;
            }
            for jj in j..n {
                let c = &cols[choice[jj]];
                for i in 0..r {
                    rows[jj + 1][i] = rows[jj][i] * asz + c[i];
                }
            }
        }
    }
    Ok(None)
}

/// Full check of the polymorphism condition with the default cap.
pub fn is_polymorphism(f: &OperationTable, a: &Structure, b: &Structure) -> Result<bool> {
    Ok(polymorphism_violation(f, a, b, DEFAULT_CHECK_CAP)?.is_none())
}

/// All `n`-ary polymorphisms, as homomorphisms `A^n → B`, in
/// lexicographic order of their tables.
pub fn enumerate_polymorphisms(
    a: &Structure,
    b: &Structure,
    n: usize,
    config: &SearchConfig,
    max_solutions: usize,
) -> Result<Vec<OperationTable>> {
    a.check_similar(b)?;
    table_size(a.domain_size(), n)?;
    let tuples: u128 =
        a.relations().iter().map(|r| (r.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX)).sum();
    if tuples > 10_000_000 {
        return Err(Error::ResourceLimit(format!("the power A^{n} has {tuples} tuples")));
    }
    let pa = power(a, n)?;
    let net = Network::homomorphisms(&pa, b)?;
    net.solve_all(config, max_solutions)?
        .into_iter()
        .map(|values| OperationTable::new(a.domain_size(), b.domain_size(), n, values))
        .collect()
}

/// The minor `g(x_1, …, x_m) = f(x_{π(1)}, …, x_{π(n)})`.
pub fn minor(f: &OperationTable, pi: &[usize], m: usize) -> Result<OperationTable> {
    if pi.len() != f.arity {
        return Err(invalid(format!("map has {} entries, operation has arity {}", pi.len(), f.arity)));
    }
    if let Some(&p) = pi.iter().find(|&&p| p >= m) {
        return Err(invalid(format!("map sends a coordinate to {p}, outside 0..{m}")));
    }
    OperationTable::from_fn(f.source_domain, f.target_domain, m, |x| {
        f.eval(&pi.iter().map(|&p| x[p]).collect::<Vec<_>>())
    })
}

/// `M[i][j] = f(x)` where `x_k = j` for `k ∈ S` and `x_k = i` otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FpMatrix(pub Vec<Vec<usize>>);

impl FpMatrix {
    pub fn transpose(&self) -> FpMatrix {
        let a = self.0.len();
        FpMatrix((0..a).map(|i| (0..a).map(|j| self.0[j][i]).collect()).collect())
    }
}

fn subset_mask(n: usize, s: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &k in s {
        if k >= n {
            return Err(invalid(format!("coordinate {k} outside 0..{n}")));
        }
        mask[k] = true;
    }
    Ok(mask)
}

pub(crate) fn fp_of_mask(f: &OperationTable, mask: &[bool]) -> FpMatrix {
    let a = f.source_domain;
    let mut x = vec![0; f.arity];
    FpMatrix(
        (0..a)
            .map(|i| {
                (0..a)
                    .map(|j| {
                        for (k, &inside) in mask.iter().enumerate() {
                            x[k] = if inside { j } else { i };
                        }
                        f.eval(&x)
                    })
                    .collect()
            })
            .collect(),
    )
}

pub fn evaluate_fp(f: &OperationTable, s: &[usize]) -> Result<FpMatrix> {
    Ok(fp_of_mask(f, &subset_mask(f.arity, s)?))
}

/// `(f^p(S_1), …, f^p(S_a))` for a partition of the coordinates into
/// exactly `a` (possibly empty) parts.
pub fn evaluate_fstar(f: &OperationTable, parts: &[Vec<usize>]) -> Result<Vec<FpMatrix>> {
    if parts.len() != f.source_domain {
        return Err(invalid(format!("expected {} parts, got {}", f.source_domain, parts.len())));
    }
    let mut seen = vec![false; f.arity];
    for &k in parts.iter().flatten() {
        if k >= f.arity || seen[k] {
            return Err(invalid(format!("parts are not a partition of 0..{}", f.arity)));
        }
        seen[k] = true;
    }
    if seen.contains(&false) {
        return Err(invalid(format!("parts do not cover 0..{}", f.arity)));
    }
    parts.iter().map(|s| evaluate_fp(f, s)).collect()
}

/// `f★` at an input tuple, read as the partition by value.
pub fn fstar_at(f: &OperationTable, x: &[usize]) -> Vec<FpMatrix> {
    (0..f.source_domain).map(|v| fp_of_mask(f, &x.iter().map(|&xi| xi == v).collect::<Vec<_>>())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    None,
    TwoBlockSymmetric,
    Alternating,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymmetryReport {
    pub kind: SymmetryKind,
    pub reason: Option<String>,
}

/// Invariance under parity-preserving coordinate permutations, and for
/// alternating operations also under replacing a trailing equal pair.
pub fn symmetry_kind(f: &OperationTable) -> SymmetryReport {
    let n = f.arity;
    if n.is_multiple_of(2) {
        return SymmetryReport { kind: SymmetryKind::None, reason: Some(format!("arity {n} is even")) };
    }
    let inputs = all_tuples(f.source_domain, n);
    for p in 0..n.saturating_sub(2) {
        for x in &inputs {
            let mut y = x.clone();
            y.swap(p, p + 2);
            if f.eval(x) != f.eval(&y) {
                return SymmetryReport {
                    kind: SymmetryKind::None,
                    reason: Some(format!("f{x:?} != f{y:?}")),
                };
            }
        }
    }
    if n >= 3 {
        for x in inputs.iter().filter(|x| x[n - 2] == x[n - 1]) {
            for v in 0..f.source_domain {
                let mut y = x.clone();
                y[n - 2] = v;
                y[n - 1] = v;
                if f.eval(x) != f.eval(&y) {
                    return SymmetryReport {
                        kind: SymmetryKind::TwoBlockSymmetric,
                        reason: Some(format!("f{x:?} != f{y:?}")),
                    };
                }
            }
        }
    }
    SymmetryReport { kind: SymmetryKind::Alternating, reason: None }
}

/// Outcome of a scan for inputs that agree on a key but not on a value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollisionScan {
    pub operations: usize,
    pub checked: usize,
    pub distinct_keys: usize,
    pub collisions: usize,
    /// A key with two different values, when one exists.
    pub example: Option<String>,
}

fn scan<K: std::hash::Hash + Eq + fmt::Debug, V: PartialEq + fmt::Debug>(
    operations: usize,
    items: impl Iterator<Item = (K, V)>,
) -> CollisionScan {
    let mut seen: HashMap<K, V> = HashMap::new();
    let (mut checked, mut collisions, mut example) = (0, 0, None);
    for (k, v) in items {
        checked += 1;
        match seen.get(&k) {
            Some(prev) if *prev != v => {
                collisions += 1;
                if example.is_none() {
                    example = Some(format!("{k:?} -> {prev:?} and {v:?}"));
                }
            }
            Some(_) => {}
            None => {
                seen.insert(k, v);
            }
        }
    }
    CollisionScan { operations, checked, distinct_keys: seen.len(), collisions, example }
}

fn require_same_shape(fs: &[OperationTable]) -> Result<()> {
    if fs.windows(2).any(|w| (w[0].source_domain, w[0].arity) != (w[1].source_domain, w[1].arity)) {
        return Err(invalid("operations must share arity and source domain"));
    }
    if fs.first().is_some_and(|f| f.arity > 16) {
        return Err(Error::ResourceLimit("subset scans are limited to arity 16".into()));
    }
    Ok(())
}

/// Checks that `f^p(S ∪ T)` is a function of `(f^p(S), f^p(T))` over all
/// given operations and all disjoint `S, T`.
pub fn additivity_collisions(fs: &[OperationTable]) -> Result<CollisionScan> {
    require_same_shape(fs)?;
    let Some(n) = fs.first().map(|f| f.arity) else {
        return Ok(scan::<(), ()>(0, std::iter::empty()));
    };
    let masks = 1usize << n;
    let to_mask = |m: usize| (0..n).map(|k| m >> k & 1 == 1).collect::<Vec<_>>();
    let items = fs.iter().flat_map(move |f| {
        let fps: Vec<FpMatrix> = (0..masks).map(|m| fp_of_mask(f, &to_mask(m))).collect();
        let mut out = Vec::new();
        for s in 0..masks {
            // T ranges over subsets of the complement of S
            let comp = !s & (masks - 1);
            let mut t = comp;
            loop {
                out.push(((fps[s].clone(), fps[t].clone()), fps[s | t].clone()));
                if t == 0 {
                    break;
                }
                t = (t - 1) & comp;
            }
        }
        out
    });
    Ok(scan(fs.len(), items))
}

/// Checks that `f(x)` is a function of `f★(x)` over all given operations
/// and all inputs.
pub fn dependency_collisions(fs: &[OperationTable]) -> Result<CollisionScan> {
    require_same_shape(fs)?;
    let items = fs.iter().flat_map(|f| {
        all_tuples(f.source_domain, f.arity).into_iter().map(move |x| (fstar_at(f, &x), f.eval(&x)))
    });
    Ok(scan(fs.len(), items))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn max3() -> OperationTable {
        OperationTable::from_fn(2, 2, 3, |x| *x.iter().max().unwrap()).unwrap()
    }

    #[test]
    fn table_indexing_is_row_major() {
        let f = OperationTable::from_fn(3, 3, 2, |x| x[0]).unwrap();
        assert_eq!(f.index_of(&[2, 1]), 7);
        assert_eq!(f.values()[..4], [0, 0, 0, 1]);
        assert!(OperationTable::new(2, 2, 2, vec![0, 1, 2, 0]).is_err());
        assert!(OperationTable::new(2, 2, 2, vec![0, 1]).is_err());
    }

    #[test]
    fn polymorphism_fixtures() {
        assert!(is_polymorphism(&max3(), &catalog::remark_5_1(), &catalog::remark_5_1()).unwrap());
        let parity = OperationTable::from_fn(2, 2, 3, |x| x.iter().sum::<usize>() % 2).unwrap();
        assert!(is_polymorphism(&parity, &catalog::remark_5_3(), &catalog::remark_5_3()).unwrap());
        let zero = OperationTable::from_fn(2, 2, 3, |_| 0).unwrap();
        let a = catalog::one_in_three();
        let v = polymorphism_violation(&zero, &a, &a, DEFAULT_CHECK_CAP).unwrap().unwrap();
        assert_eq!(v.image, vec![0, 0, 0]);
        assert_eq!(v.columns, vec![vec![0, 0, 1]; 3]);
    }

    #[test]
    fn polymorphism_check_respects_the_cap() {
        let a = catalog::one_in_three();
        let parity = OperationTable::from_fn(2, 2, 3, |x| x.iter().sum::<usize>() % 2).unwrap();
        assert!(polymorphism_violation(&parity, &a, &a, 10).unwrap_err().is_resource_limit());
    }

    #[test]
    fn unary_polymorphisms() {
        let a = catalog::one_in_three();
        let cfg = SearchConfig::default();
        let id = enumerate_polymorphisms(&a, &a, 1, &cfg, 100).unwrap();
        assert_eq!(id.iter().map(|f| f.values().to_vec()).collect::<Vec<_>>(), vec![vec![0, 1]]);
        let nae = enumerate_polymorphisms(&a, &catalog::nae(), 1, &cfg, 100).unwrap();
        assert_eq!(nae.iter().map(|f| f.values().to_vec()).collect::<Vec<_>>(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn minors_compose() {
        let f = max3();
        assert_eq!(minor(&f, &[0, 1, 2], 3).unwrap(), f);
        let diag = minor(&f, &[0, 0, 0], 1).unwrap();
        assert_eq!(diag.values(), &[0, 1]);
        assert!(minor(&f, &[0, 3, 1], 3).is_err());
        let g = OperationTable::from_fn(3, 3, 3, |x| (x[0] + 2 * x[1] + x[2] * x[0]) % 3).unwrap();
        let (pi, sigma) = ([1, 0, 1], [2, 0]);
        let lhs = minor(&minor(&g, &pi, 2).unwrap(), &sigma, 3).unwrap();
        let composed: Vec<usize> = pi.iter().map(|&p| sigma[p]).collect();
        assert_eq!(lhs, minor(&g, &composed, 3).unwrap());
    }

    #[test]
    fn fp_laws() {
        let f = OperationTable::from_fn(3, 3, 4, |x| (x[0] + x[1] * x[2] + 2 * x[3]) % 3).unwrap();
        let empty = evaluate_fp(&f, &[]).unwrap();
        let full = evaluate_fp(&f, &[0, 1, 2, 3]).unwrap();
        for i in 0..3 {
            assert_eq!(empty.0[i][i], f.eval(&[i; 4]));
            assert_eq!(empty.0[i][i], full.0[i][i]);
        }
        assert_eq!(evaluate_fp(&f, &[1, 3]).unwrap().transpose(), evaluate_fp(&f, &[0, 2]).unwrap());
        let star = evaluate_fstar(&f, &[vec![1], vec![], vec![0, 2, 3]]).unwrap();
        assert_eq!(star, fstar_at(&f, &[2, 0, 2, 2]));
        assert!(evaluate_fstar(&f, &[vec![0, 1], vec![1], vec![2, 3]]).is_err());
        assert!(evaluate_fstar(&f, &[vec![0], vec![1], vec![2]]).is_err());
    }

    #[test]
    fn symmetry_kinds() {
        let m = 3;
        let alt = OperationTable::from_fn(m, m, 3, |x| (x[0] + m - x[1] + x[2]) % m).unwrap();
        assert_eq!(symmetry_kind(&alt).kind, SymmetryKind::Alternating);
        assert_eq!(symmetry_kind(&max3()).kind, SymmetryKind::TwoBlockSymmetric);
        let id = OperationTable::from_fn(2, 2, 1, |x| x[0]).unwrap();
        assert_eq!(symmetry_kind(&id).kind, SymmetryKind::Alternating);
        let first = OperationTable::from_fn(2, 2, 3, |x| x[0]).unwrap();
        assert_eq!(symmetry_kind(&first).kind, SymmetryKind::None);
        let even = OperationTable::from_fn(2, 2, 2, |x| x[0]).unwrap();
        assert!(symmetry_kind(&even).reason.unwrap().contains("even"));
    }

    #[test]
    fn collision_scans_find_planted_collisions() {
        // a projection is additive and dependent; the majority-like table is not dependent on f★ alone
        let proj = OperationTable::from_fn(2, 2, 3, |x| x[0]).unwrap();
        assert_eq!(additivity_collisions(std::slice::from_ref(&proj)).unwrap().collisions, 0);
        assert_eq!(dependency_collisions(std::slice::from_ref(&proj)).unwrap().collisions, 0);
        let weird = OperationTable::from_fn(3, 2, 3, |x| usize::from(x == [0, 1, 2])).unwrap();
        let other = OperationTable::from_fn(3, 2, 3, |_| 0).unwrap();
        let scan = dependency_collisions(&[weird, other]).unwrap();
        assert!(scan.collisions > 0 && scan.example.is_some());
    }
}
