//! Structural predicates on templates.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::relaxations::{minimize, Lp, LpResult};
use crate::structure::{Relation, Structure, Tuple, UnionFind};

/// A tuple whose image under a coordinate transposition is missing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymmetryViolation {
    pub relation: String,
    pub tuple: Tuple,
    pub missing: Tuple,
}

/// The first tuple (in relation and tuple order) that is not closed under
/// swapping two adjacent coordinates. Adjacent transpositions generate all
/// permutations, so `None` means every relation is symmetric.
pub fn symmetry_violation(s: &Structure) -> Option<SymmetryViolation> {
    for r in s.relations() {
        for t in r.tuples() {
            for i in 0..r.arity().saturating_sub(1) {
                let mut p = t.clone();
                p.swap(i, i + 1);
                if !r.contains(&p) {
                    return Some(SymmetryViolation { relation: r.name().to_string(), tuple: t.clone(), missing: p });
                }
            }
        }
    }
    None
}

pub fn is_symmetric(s: &Structure) -> bool {
    symmetry_violation(s).is_none()
}

pub fn relation_is_symmetric(r: &Relation) -> bool {
    r.tuples().iter().all(|t| {
        (0..r.arity().saturating_sub(1)).all(|i| {
            let mut p = t.clone();
            p.swap(i, i + 1);
            r.contains(&p)
        })
    })
}

/// Two tuples that agree everywhere except at `position`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionalityViolation {
    pub relation: String,
    pub position: usize,
    pub first: Tuple,
    pub second: Tuple,
}

/// Positions are checked from last to first, tuples in order.
pub fn functionality_violation(s: &Structure) -> Option<FunctionalityViolation> {
    for r in s.relations() {
        for pos in (0..r.arity()).rev() {
            let mut seen: HashMap<Tuple, &Tuple> = HashMap::new();
            for t in r.tuples() {
                let mut key = t.clone();
                key.remove(pos);
                if let Some(prev) = seen.insert(key, t) {
                    return Some(FunctionalityViolation {
                        relation: r.name().to_string(),
                        position: pos,
                        first: prev.clone(),
                        second: t.clone(),
                    });
                }
            }
        }
    }
    None
}

pub fn is_functional(s: &Structure) -> bool {
    functionality_violation(s).is_none()
}

/// Distances in the hypergraph of one relation; `None` stands for infinity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypergraphMetrics {
    pub distances: Vec<Vec<Option<usize>>>,
    pub diameter: Option<usize>,
    pub connected: bool,
}

/// BFS distances where two elements are adjacent iff they share a tuple.
pub fn hypergraph_metrics(s: &Structure, relation: &str) -> Result<HypergraphMetrics> {
    let r = s.relation(relation).ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
    let a = s.domain_size();
    let mut adj = vec![vec![false; a]; a];
    for t in r.tuples() {
        for &x in t {
            for &y in t {
                adj[x][y] = true;
            }
        }
    }
    let mut distances = vec![vec![None; a]; a];
    for (src, row) in distances.iter_mut().enumerate() {
        row[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(x) = queue.pop_front() {
            let dx = row[x].expect("queued vertices have distances");
            for y in 0..a {
                if adj[x][y] && row[y].is_none() {
                    row[y] = Some(dx + 1);
                    queue.push_back(y);
                }
            }
        }
    }
    let mut diameter = Some(0);
    for d in distances.iter().flatten() {
        diameter = match (diameter, d) {
            (Some(m), Some(v)) => Some(m.max(*v)),
            _ => None,
        };
    }
    Ok(HypergraphMetrics { distances, diameter, connected: diameter.is_some() })
}

/// Column multiplicities making the rows of the witness matrix permutations
/// of each other.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BalanceWitness {
    /// `(tuple, count)` in relation order; every count is at least 1.
    pub counts: Vec<(Tuple, u64)>,
    /// Number of columns `N`, the sum of the counts.
    pub columns: u64,
    /// The `r × N` matrix, present when `N` is within the expansion cap.
    pub matrix: Option<Vec<Vec<usize>>>,
}

impl BalanceWitness {
    /// The witness columns, each tuple repeated by its count.
    pub fn column_tuples(&self) -> Vec<Tuple> {
        let mut cols = Vec::new();
        for (t, c) in &self.counts {
            for _ in 0..*c {
                cols.push(t.clone());
            }
        }
        cols
    }

    /// Recomputes the defining property from the counts alone.
    pub fn verify(&self, r: &Relation) -> bool {
        let tuples_match = self.counts.len() == r.len()
            && self.counts.iter().zip(r.tuples()).all(|((t, c), u)| t == u && *c >= 1);
        if !tuples_match || self.counts.iter().map(|(_, c)| c).sum::<u64>() != self.columns {
            return false;
        }
        let row_freq = |i: usize| {
            let mut f: HashMap<usize, u64> = HashMap::new();
            for (t, c) in &self.counts {
                *f.entry(t[i]).or_default() += c;
            }
            f
        };
        let first = row_freq(0);
        (1..r.arity()).all(|i| row_freq(i) == first)
            && self.matrix.as_ref().is_none_or(|m| {
                let cols = self.column_tuples();
                m.len() == r.arity() && (0..r.arity()).all(|i| m[i] == cols.iter().map(|t| t[i]).collect::<Vec<_>>())
            })
    }
}

pub const DEFAULT_MATRIX_CAP: u64 = 4096;

/// Decides balancedness with the default matrix expansion cap.
pub fn is_balanced(r: &Relation) -> Result<Option<BalanceWitness>> {
    is_balanced_with_cap(r, DEFAULT_MATRIX_CAP)
}

/// Decides balancedness by exact LP over counts `c_t ≥ 1` with equal row
/// frequency vectors, minimizing `Σ c_t`, then clearing denominators.
pub fn is_balanced_with_cap(r: &Relation, matrix_cap: u64) -> Result<Option<BalanceWitness>> {
    if r.is_empty() {
        return Err(invalid(format!("balancedness is undefined for the empty relation `{}`", r.name())));
    }
    let values = r.support();
    let n = r.len();
    // variables d_t = c_t - 1 >= 0
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 1..r.arity() {
        for &v in &values {
            let coef: Vec<i64> =
                r.tuples().iter().map(|t| i64::from(t[i] == v) - i64::from(t[0] == v)).collect();
            if coef.iter().all(|&c| c == 0) {
                continue;
            }
            rhs.push(-coef.iter().sum::<i64>());
            rows.push(coef);
        }
    }
    let lp = Lp { rows, rhs, num_vars: n };
    let d = match minimize(&lp, &vec![1; n]) {
        LpResult::Optimal(d) => d,
        LpResult::Infeasible(_) => return Ok(None),
        LpResult::Unbounded => unreachable!("objective is bounded below by zero"),
    };
    let c: Vec<BigRational> = d.into_iter().map(|v| v + BigRational::one()).collect();
    let lcm = c.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled: Vec<BigInt> = c.iter().map(|v| (v * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let g = scaled.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    let counts: Vec<u64> = scaled
        .iter()
        .map(|v| (v / &g).to_u64().ok_or_else(|| Error::ResourceLimit("balance counts exceed u64".into())))
        .collect::<Result<_>>()?;
    let columns: u64 = counts.iter().sum();
    let mut w = BalanceWitness {
        counts: r.tuples().iter().cloned().zip(counts).collect(),
        columns,
        matrix: None,
    };
    if columns <= matrix_cap {
        let cols = w.column_tuples();
        w.matrix = Some((0..r.arity()).map(|i| cols.iter().map(|t| t[i]).collect()).collect());
    }
    assert!(w.verify(r), "balance witness failed re-verification");
    Ok(Some(w))
}

/// A binary relation is balanced iff each weakly connected component of the
/// digraph on its occurring vertices is strongly connected.
pub fn digraph_balanced_via_scc(r: &Relation) -> Result<bool> {
    if r.arity() != 2 {
        return Err(invalid(format!("relation `{}` has arity {}, expected 2", r.name(), r.arity())));
    }
    let verts = r.support();
    let idx: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = verts.len();
    let mut succ = vec![Vec::new(); n];
    let mut uf = UnionFind::new(n);
    for t in r.tuples() {
        let (u, v) = (idx[&t[0]], idx[&t[1]]);
        succ[u].push(v);
        uf.union(u, v);
    }
    let scc = strongly_connected_components(&succ);
    Ok((0..n).all(|v| {
        let root = uf.find(v);
        scc[v] == scc[root]
    }))
}

/// Tarjan's algorithm, iterative; returns a component id per vertex.
fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let (mut next_index, mut next_comp) = (0, 0);
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("component members are on the stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// The group generated by some coordinate permutations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PermutationGroupProbe {
    pub generators: Vec<Vec<usize>>,
    /// All group elements, sorted; contains the identity.
    pub closure: Vec<Vec<usize>>,
    pub transitive: bool,
}

pub const MAX_GROUP_ORDER: usize = 1_000_000;

/// Computes the generated group and whether it preserves `r`, meaning every
/// tuple permuted by every group element (`t ↦ (t_{g(0)}, …, t_{g(r-1)})`)
/// stays in `r`.
pub fn transitive_group_preserves(r: &Relation, generators: &[Vec<usize>]) -> Result<(PermutationGroupProbe, bool)> {
    let n = r.arity();
    for g in generators {
        let mut sorted = g.clone();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(invalid(format!("{g:?} is not a permutation of 0..{n}")));
        }
    }
    let id: Vec<usize> = (0..n).collect();
    let mut seen = std::collections::HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in generators {
            let q: Vec<usize> = (0..n).map(|i| p[g[i]]).collect();
            if seen.insert(q.clone()) {
                if seen.len() > MAX_GROUP_ORDER {
                    return Err(Error::ResourceLimit(format!("group order exceeds {MAX_GROUP_ORDER}")));
                }
                queue.push_back(q);
            }
        }
    }
    let mut closure: Vec<Vec<usize>> = seen.into_iter().collect();
    closure.sort();
    let transitive = (0..n).all(|j| closure.iter().any(|p| p[0] == j));
    let preserved =
        closure.iter().all(|p| r.tuples().iter().all(|t| r.contains(&p.iter().map(|&i| t[i]).collect::<Vec<_>>())));
    Ok((PermutationGroupProbe { generators: generators.to_vec(), closure, transitive }, preserved))
}

/// Adjacent transpositions, generating the full symmetric group.
pub fn symmetric_group_generators(n: usize) -> Vec<Vec<usize>> {
    (0..n.saturating_sub(1))
        .map(|i| {
            let mut p: Vec<usize> = (0..n).collect();
            p.swap(i, i + 1);
            p
        })
        .collect()
}

/// The cyclic shift `i ↦ i + 1 mod n`.
pub fn cyclic_shift_generator(n: usize) -> Vec<usize> {
    (0..n).map(|i| (i + 1) % n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn rel(arity: usize, tuples: Vec<Tuple>) -> Relation {
        Relation::new("R", arity, tuples).unwrap()
    }

    #[test]
    fn symmetry_fixtures() {
        assert!(is_symmetric(&catalog::one_in_three()));
        let v = symmetry_violation(&catalog::remark_5_3()).unwrap();
        assert_eq!(v.missing, vec![1, 0]);
        let empty = Structure::with_domain_size(2, vec![rel(2, vec![])]).unwrap();
        assert!(is_symmetric(&empty));
    }

    #[test]
    fn functionality_fixtures() {
        assert!(is_functional(&catalog::eqn(3, 1).unwrap()));
        assert!(is_functional(&catalog::one_in_three()));
        let v = functionality_violation(&catalog::nae()).unwrap();
        assert_eq!((v.first, v.second), (vec![0, 1, 0], vec![0, 1, 1]));
    }

    #[test]
    fn metrics_fixtures() {
        let m = hypergraph_metrics(&catalog::one_in_three(), "R").unwrap();
        assert_eq!((m.diameter, m.connected), (Some(1), true));
        let m = hypergraph_metrics(&catalog::eqn(3, 1).unwrap(), "R").unwrap();
        assert_eq!(m.diameter, Some(1));
        let m = hypergraph_metrics(&catalog::remark_4_4_b(), "R").unwrap();
        assert_eq!((m.diameter, m.connected), (None, false));
        assert!(hypergraph_metrics(&catalog::nae(), "Q").is_err());
    }

    #[test]
    fn balance_fixtures() {
        let w = is_balanced(&catalog::one_in_three().relations()[0]).unwrap().unwrap();
        assert!(w.counts.iter().all(|(_, c)| *c == 1));
        assert_eq!(w.matrix.unwrap(), vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
        assert_eq!(is_balanced(&catalog::remark_5_3().relations()[0]).unwrap(), None);
        assert_eq!(is_balanced(&catalog::remark_5_2().relations()[0]).unwrap(), None);
        assert!(is_balanced(&rel(2, vec![])).is_err());
    }

    #[test]
    fn balance_may_need_unequal_counts() {
        // 0 -> 1 is the only edge into 1 but 1 has two out-edges
        let r = rel(2, vec![vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 0]]);
        let w = is_balanced(&r).unwrap().unwrap();
        assert!(w.verify(&r));
        assert_eq!(w.counts.iter().map(|(_, c)| *c).collect::<Vec<_>>(), vec![2, 1, 1, 1]);
    }

    #[test]
    fn scc_fixtures() {
        assert!(digraph_balanced_via_scc(&rel(2, vec![vec![0, 1], vec![1, 0]])).unwrap());
        assert!(!digraph_balanced_via_scc(&rel(2, vec![vec![0, 1]])).unwrap());
        let two_cycles = rel(2, vec![vec![0, 1], vec![1, 2], vec![2, 0], vec![3, 4], vec![4, 5], vec![5, 3]]);
        assert!(digraph_balanced_via_scc(&two_cycles).unwrap());
        assert!(is_balanced(&two_cycles).unwrap().is_some());
        assert!(digraph_balanced_via_scc(&rel(3, vec![])).is_err());
    }

    #[test]
    fn group_probes() {
        let s = catalog::one_in_three();
        let r = &s.relations()[0];
        let (probe, preserved) = transitive_group_preserves(r, &symmetric_group_generators(3)).unwrap();
        assert_eq!(probe.closure.len(), 6);
        assert!(probe.transitive && preserved);
        let c = catalog::cyclic_plus(4).unwrap();
        let (probe, preserved) = transitive_group_preserves(&c.relations()[0], &[cyclic_shift_generator(3)]).unwrap();
        assert_eq!(probe.closure.len(), 3);
        assert!(probe.transitive && preserved);
        let cycle = rel(2, vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
        let (probe, preserved) = transitive_group_preserves(&cycle, &[vec![1, 0]]).unwrap();
        assert!(probe.transitive && !preserved);
        assert!(is_balanced(&cycle).unwrap().is_some());
        assert!(transitive_group_preserves(&cycle, &[vec![0, 0]]).is_err());
    }
}
