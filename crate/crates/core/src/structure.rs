//! Finite relational structures, homomorphisms, and structure algebra.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A tuple of domain indices.
pub type Tuple = Vec<usize>;

/// A named relation: a sorted, duplicate-free set of tuples of fixed arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    name: String,
    arity: usize,
    tuples: Vec<Tuple>,
}

impl Relation {
    /// Builds a relation, sorting and deduplicating the tuples.
    pub fn new(name: impl Into<String>, arity: usize, tuples: impl IntoIterator<Item = Tuple>) -> Result<Self> {
        let name = name.into();
        if arity == 0 {
            return Err(invalid(format!("relation `{name}` has arity 0")));
        }
        let mut tuples: Vec<Tuple> = tuples.into_iter().collect();
        if let Some(t) = tuples.iter().find(|t| t.len() != arity) {
            return Err(invalid(format!(
                "relation `{name}` has arity {arity} but contains tuple {t:?}"
            )));
        }
        tuples.sort_unstable();
        tuples.dedup();
        Ok(Relation { name, arity, tuples })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        self.tuples.binary_search_by(|u| u.as_slice().cmp(t)).is_ok()
    }

    /// Sorted list of the values occurring in some tuple.
    pub fn support(&self) -> Vec<usize> {
        let mut seen: Vec<usize> = self.tuples.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }
}

/// The ordered list of `(name, arity)` pairs of a structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Signature(pub Vec<(String, usize)>);

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(n, r)| format!("{n}/{r}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A finite relational structure over the domain `0..domain_size`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Structure {
    labels: Vec<String>,
    relations: Vec<Relation>,
}

impl Structure {
    /// Builds a structure and checks that tuple entries are in range and names are distinct.
    pub fn new(labels: Vec<String>, relations: Vec<Relation>) -> Result<Self> {
        let a = labels.len();
        let mut names = HashSet::new();
        for rel in &relations {
            if !names.insert(rel.name.as_str()) {
                return Err(invalid(format!("duplicate relation name `{}`", rel.name)));
            }
            for t in &rel.tuples {
                if let Some(&x) = t.iter().find(|&&x| x >= a) {
                    return Err(invalid(format!(
                        "relation `{}`: entry {x} out of range for domain of size {a}",
                        rel.name
                    )));
                }
            }
        }
        Ok(Structure { labels, relations })
    }

    /// Builds a structure whose labels are the decimal indices.
    pub fn with_domain_size(a: usize, relations: Vec<Relation>) -> Result<Self> {
        Structure::new(default_labels(a), relations)
    }

    pub fn domain_size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn signature(&self) -> Signature {
        Signature(self.relations.iter().map(|r| (r.name.clone(), r.arity)).collect())
    }

    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|r| r.arity).max().unwrap_or(0)
    }

    /// Fails with [`Error::SignatureMismatch`] unless both structures have the same signature.
    pub fn check_similar(&self, other: &Structure) -> Result<()> {
        let (s, t) = (self.signature(), other.signature());
        if s == t {
            Ok(())
        } else {
            Err(Error::SignatureMismatch(format!("{s} vs {t}")))
        }
    }

    /// Parses the JSON structure format.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawStructure = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        raw.validate()
    }

    /// Canonical JSON: sorted keys, sorted tuples, no whitespace.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("structure serializes")
    }

    pub(crate) fn to_raw(&self) -> RawStructure {
        RawStructure {
            domain: self.labels.clone(),
            relations: self
                .relations
                .iter()
                .map(|r| RawRelation { arity: r.arity, name: r.name.clone(), tuples: r.tuples.clone() })
                .collect(),
        }
    }

    /// The substructure induced on `elements`, renumbered in the given order.
    pub fn induced(&self, elements: &[usize]) -> Structure {
        let mut index = vec![usize::MAX; self.domain_size()];
        for (i, &x) in elements.iter().enumerate() {
            index[x] = i;
        }
        let relations = self
            .relations
            .iter()
            .map(|r| {
                let tuples = r
                    .tuples
                    .iter()
                    .filter(|t| t.iter().all(|&x| index[x] != usize::MAX))
                    .map(|t| t.iter().map(|&x| index[x]).collect());
                Relation::new(r.name.clone(), r.arity, tuples).expect("arity preserved")
            })
            .collect();
        let labels = elements.iter().map(|&x| self.labels[x].clone()).collect();
        Structure { labels, relations }
    }
}

pub(crate) fn default_labels(a: usize) -> Vec<String> {
    (0..a).map(|i| i.to_string()).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawStructure {
    domain: Vec<String>,
    relations: Vec<RawRelation>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelation {
    arity: usize,
    name: String,
    tuples: Vec<Vec<usize>>,
}

impl RawStructure {
    fn validate(self) -> Result<Structure> {
        let a = self.domain.len();
        let mut names = HashSet::new();
        let mut relations = Vec::with_capacity(self.relations.len());
        for (ri, r) in self.relations.into_iter().enumerate() {
            if r.arity == 0 {
                return Err(Error::Parse(format!("relations[{ri}].arity: must be at least 1")));
            }
            if !names.insert(r.name.clone()) {
                return Err(Error::Parse(format!("relations[{ri}].name: duplicate relation name `{}`", r.name)));
            }
            for (ti, t) in r.tuples.iter().enumerate() {
                if t.len() != r.arity {
                    return Err(Error::Parse(format!(
                        "relations[{ri}].tuples[{ti}]: length {} does not match arity {}",
                        t.len(),
                        r.arity
                    )));
                }
                if let Some(pos) = t.iter().position(|&x| x >= a) {
                    return Err(Error::Parse(format!(
                        "relations[{ri}].tuples[{ti}][{pos}]: entry {} out of range for domain of size {a}",
                        t[pos]
                    )));
                }
            }
            relations.push(Relation::new(r.name, r.arity, r.tuples)?);
        }
        Structure::new(self.domain, relations)
    }
}

/// A map from the domain of a source structure to the domain of a target.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Homomorphism(pub Vec<usize>);

impl Homomorphism {
    pub fn mapping(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, t: &[usize]) -> Tuple {
        t.iter().map(|&x| self.0[x]).collect()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Homomorphism) -> Homomorphism {
        Homomorphism(self.0.iter().map(|&x| other.0[x]).collect())
    }
}

/// True iff `h` maps every tuple of `x` into the corresponding relation of `b`.
pub fn is_homomorphism(h: &Homomorphism, x: &Structure, b: &Structure) -> Result<bool> {
    x.check_similar(b)?;
    if h.0.len() != x.domain_size() {
        return Err(invalid(format!(
            "map has length {} but the source domain has size {}",
            h.0.len(),
            x.domain_size()
        )));
    }
    if h.0.iter().any(|&y| y >= b.domain_size()) {
        return Ok(false);
    }
    Ok(x.relations
        .iter()
        .zip(&b.relations)
        .all(|(rx, rb)| rx.tuples.iter().all(|t| rb.contains(&h.apply(t)))))
}

/// Componentwise product; element `(i, j)` has index `i * |S2| + j`.
pub fn product(s1: &Structure, s2: &Structure) -> Result<Structure> {
    s1.check_similar(s2)?;
    let b = s2.domain_size();
    let mut labels = Vec::with_capacity(s1.domain_size() * b);
    for l1 in &s1.labels {
        for l2 in &s2.labels {
            labels.push(format!("({l1},{l2})"));
        }
    }
    let relations = s1
        .relations
        .iter()
        .zip(&s2.relations)
        .map(|(r1, r2)| {
            let mut tuples = Vec::with_capacity(r1.len() * r2.len());
            for t1 in &r1.tuples {
                for t2 in &r2.tuples {
                    tuples.push(t1.iter().zip(t2).map(|(&x, &y)| x * b + y).collect());
                }
            }
            Relation::new(r1.name.clone(), r1.arity, tuples)
        })
        .collect::<Result<Vec<_>>>()?;
    Structure::new(labels, relations)
}

/// The n-fold product `S^n`; element `(x_1, ..., x_n)` has row-major index.
pub fn power(s: &Structure, n: usize) -> Result<Structure> {
    let mut acc = Structure::new(
        vec![String::from("()")],
        s.relations
            .iter()
            .map(|r| Relation::new(r.name.clone(), r.arity, [vec![0; r.arity]]))
            .collect::<Result<Vec<_>>>()?,
    )?;
    for _ in 0..n {
        acc = product(&acc, s)?;
    }
    Ok(acc)
}

/// Disjoint union; the second structure's elements are offset by `|S1|`.
pub fn disjoint_union(s1: &Structure, s2: &Structure) -> Result<Structure> {
    s1.check_similar(s2)?;
    let off = s1.domain_size();
    let labels = s1.labels.iter().chain(&s2.labels).cloned().collect();
    let relations = s1
        .relations
        .iter()
        .zip(&s2.relations)
        .map(|(r1, r2)| {
            let shifted = r2.tuples.iter().map(|t| t.iter().map(|&x| x + off).collect());
            Relation::new(r1.name.clone(), r1.arity, r1.tuples.iter().cloned().chain(shifted))
        })
        .collect::<Result<Vec<_>>>()?;
    Structure::new(labels, relations)
}

/// A connected component together with the original index of each of its elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub structure: Structure,
    pub elements: Vec<usize>,
}

/// Components of the union of all relation hypergraphs, ordered by least element.
pub fn connected_components(s: &Structure) -> Vec<Component> {
    let a = s.domain_size();
    let mut uf = UnionFind::new(a);
    for r in &s.relations {
        for t in &r.tuples {
            for w in t.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; a];
    for x in 0..a {
        let root = uf.find(x);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(x);
    }
    groups
        .into_iter()
        .map(|elements| Component { structure: s.induced(&elements), elements })
        .collect()
}

/// Keeps exactly the tuples all of whose coordinate permutations are present.
pub fn largest_symmetric_substructure(s: &Structure) -> Structure {
    let relations = s
        .relations
        .iter()
        .map(|r| {
            let kept = r.tuples.iter().filter(|t| {
                let mut p = (*t).clone();
                p.sort_unstable();
                loop {
                    if !r.contains(&p) {
                        return false;
                    }
                    if !next_permutation(&mut p) {
                        return true;
                    }
                }
            });
            Relation::new(r.name.clone(), r.arity, kept.cloned()).expect("arity preserved")
        })
        .collect();
    Structure { labels: s.labels.clone(), relations }
}

/// Advances `v` to the next lexicographic permutation; false when `v` was the last one.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    pub(crate) fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        // keep the smaller index as root so roots are least elements
        if rx < ry {
            self.parent[ry] = rx;
        } else if ry < rx {
            self.parent[rx] = ry;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_in_three() -> Structure {
        Structure::with_domain_size(2, vec![Relation::new("R", 3, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap()])
            .unwrap()
    }

    #[test]
    fn relation_is_sorted_and_deduplicated() {
        let r = Relation::new("R", 2, vec![vec![1, 0], vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(r.tuples(), &[vec![0, 1], vec![1, 0]]);
        assert!(r.contains(&[1, 0]));
        assert!(!r.contains(&[1, 1]));
    }

    #[test]
    fn arity_zero_and_length_mismatch_are_rejected() {
        assert!(Relation::new("R", 0, vec![]).is_err());
        assert!(Relation::new("R", 2, vec![vec![0]]).is_err());
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let text = r#"{"relations":[{"tuples":[[0,0,1],[1,0,0],[0,1,0]],"name":"R","arity":3}],"domain":["0","1"]}"#;
        let s = Structure::from_json(text).unwrap();
        assert_eq!(s, one_in_three());
        let canon = s.to_json();
        assert_eq!(canon, r#"{"domain":["0","1"],"relations":[{"arity":3,"name":"R","tuples":[[0,0,1],[0,1,0],[1,0,0]]}]}"#);
        assert_eq!(Structure::from_json(&canon).unwrap().to_json(), canon);
    }

    #[test]
    fn parse_errors_carry_locations() {
        let e = Structure::from_json(r#"{"domain":["0","1"],"relations":[{"name":"R","arity":1,"tuples":[[2]]}]}"#)
            .unwrap_err();
        assert!(e.to_string().contains("relations[0].tuples[0][0]"), "{e}");
        let e = Structure::from_json(
            r#"{"domain":["0"],"relations":[{"name":"R","arity":1,"tuples":[]},{"name":"R","arity":1,"tuples":[]}]}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
        let e = Structure::from_json("{\n\"domain\": 3}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let s = Structure::from_json(r#"{"domain":["a"],"relations":[]}"#).unwrap();
        assert!(s.relations().is_empty());
    }

    #[test]
    fn product_of_one_in_three_with_itself() {
        let p = product(&one_in_three(), &one_in_three()).unwrap();
        assert_eq!(p.domain_size(), 4);
        // every pair of tuples gives a product tuple
        assert_eq!(p.relations()[0].len(), 9);
    }

    #[test]
    fn components_of_edgeless_structure_are_singletons() {
        let s = Structure::with_domain_size(3, vec![Relation::new("E", 2, vec![]).unwrap()]).unwrap();
        let comps = connected_components(&s);
        assert_eq!(comps.len(), 3);
        assert_eq!(comps[2].elements, vec![2]);
    }

    #[test]
    fn symmetric_substructure_drops_asymmetric_tuples() {
        let s = Structure::with_domain_size(2, vec![Relation::new("P", 2, vec![vec![0, 1]]).unwrap()]).unwrap();
        assert!(largest_symmetric_substructure(&s).relations()[0].is_empty());
        let q = Structure::with_domain_size(
            2,
            vec![Relation::new("Q", 2, vec![vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap()],
        )
        .unwrap();
        assert_eq!(largest_symmetric_substructure(&q), q);
    }

    #[test]
    fn identity_is_a_homomorphism_and_constant_is_not() {
        let a = one_in_three();
        assert!(is_homomorphism(&Homomorphism(vec![0, 1]), &a, &a).unwrap());
        assert!(!is_homomorphism(&Homomorphism(vec![0, 0]), &a, &a).unwrap());
    }
}
