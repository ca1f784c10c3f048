//! The derivation system `⊢`, computed as a least fixpoint.
//!
//! A tuple `t_1` is derived from `t_2, …, t_r` when the `r × n` matrix with
//! those rows has every column in the chosen relation. Reflexivity,
//! monotonicity and cut hold automatically for the fixpoint.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::catalog::all_tuples;
use crate::error::{invalid, Error, Result};
use crate::structure::{Relation, Structure, Tuple};

pub type TupleSet = BTreeSet<Tuple>;

/// Default bound on `|R|^n`, the size of the column space searched per round.
pub const DEFAULT_COLUMN_CAP: u128 = 1_000_000_000;

/// Triples `(r, s, s)` and `(s, r, s)`.
pub fn gamma(a: &Structure) -> TupleSet {
    all_tuples(a.domain_size(), 3).into_iter().filter(|t| t[1] == t[2] || t[0] == t[2]).collect()
}

/// All `n`-tuples with at most two distinct entries.
pub fn delta(a: &Structure, n: usize) -> TupleSet {
    all_tuples(a.domain_size(), n)
        .into_iter()
        .filter(|t| t.iter().collect::<HashSet<_>>().len() <= 2)
        .collect()
}

#[derive(Clone, Debug)]
pub struct DerivationContext<'a> {
    structure: &'a Structure,
    relation: &'a Relation,
    tuple_length: usize,
    column_cap: u128,
}

impl<'a> DerivationContext<'a> {
    pub fn new(structure: &'a Structure, relation: &str, tuple_length: usize) -> Result<Self> {
        let relation = structure.relation(relation).ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
        if tuple_length == 0 {
            return Err(invalid("tuple length must be at least 1"));
        }
        Ok(DerivationContext { structure, relation, tuple_length, column_cap: DEFAULT_COLUMN_CAP })
    }

    pub fn with_column_cap(mut self, cap: u128) -> Self {
        self.column_cap = cap;
        self
    }

    pub fn structure(&self) -> &Structure {
        self.structure
    }

    pub fn relation(&self) -> &Relation {
        self.relation
    }

    pub fn tuple_length(&self) -> usize {
        self.tuple_length
    }

    fn check_premises(&self, premises: &TupleSet) -> Result<()> {
        let a = self.structure.domain_size();
        for t in premises {
            if t.len() != self.tuple_length || t.iter().any(|&v| v >= a) {
                return Err(invalid(format!("premise {t:?} is not a {}-tuple over the domain", self.tuple_length)));
            }
        }
        Ok(())
    }

    fn check_cap(&self) -> Result<()> {
        let space = (self.relation.len() as u128).checked_pow(self.tuple_length as u32);
        match space {
            Some(s) if s <= self.column_cap => Ok(()),
            _ => Err(Error::ResourceLimit(format!(
                "column space |{}|^{} = {}^{} exceeds the cap {}",
                self.relation.name(),
                self.tuple_length,
                self.relation.len(),
                self.tuple_length,
                self.column_cap
            ))),
        }
    }
}

/// The first round in which each derived tuple appeared, with its columns.
struct Saturation {
    derived: TupleSet,
    reasons: HashMap<Tuple, Vec<Tuple>>,
}

fn saturate(ctx: &DerivationContext, premises: &TupleSet, stop_at: Option<&Tuple>) -> Result<Saturation> {
    ctx.check_premises(premises)?;
    let mut derived = premises.clone();
    let mut reasons = HashMap::new();
    if stop_at.is_some_and(|t| derived.contains(t)) {
        return Ok(Saturation { derived, reasons });
    }
    ctx.check_cap()?;
    let a = ctx.structure.domain_size() as u64;
    let n = ctx.tuple_length;
    let r = ctx.relation.arity();
    let tuples = ctx.relation.tuples();
    loop {
        // prefix codes of every known tuple, by length
        let mut prefixes: Vec<HashSet<u64>> = vec![HashSet::new(); n + 1];
        for t in &derived {
            let mut code = 0u64;
            for (len, &v) in t.iter().enumerate() {
                code = code * a + v as u64;
                prefixes[len + 1].insert(code);
            }
        }
        let mut fresh: Vec<(Tuple, Vec<Tuple>)> = Vec::new();
        let mut seen: HashSet<Tuple> = HashSet::new();
        let mut columns: Vec<&Tuple> = Vec::with_capacity(n);
        let mut codes = vec![vec![0u64; r]; n + 1];
        // depth-first over column choices, pruning rows 2..r by prefix
        let mut choice = vec![0usize; n];
        let mut depth = 0usize;
        loop {
            if depth == n {
                let first: Tuple = columns.iter().map(|c| c[0]).collect();
                if !derived.contains(&first) && seen.insert(first.clone()) {
                    fresh.push((first, columns.iter().map(|c| (*c).clone()).collect()));
                }
                depth -= 1;
                columns.pop();
                choice[depth] += 1;
                continue;
            }
            let mut advanced = false;
            while choice[depth] < tuples.len() {
                let c = &tuples[choice[depth]];
                let ok = (1..r).all(|i| prefixes[depth + 1].contains(&(codes[depth][i] * a + c[i] as u64)));
                if ok {
                    for i in 0..r {
                        codes[depth + 1][i] = codes[depth][i] * a + c[i] as u64;
                    }
                    columns.push(c);
                    depth += 1;
                    if depth < n {
                        choice[depth] = 0;
                    }
                    advanced = true;
                    break;
                }
                choice[depth] += 1;
            }
            if !advanced {
                if depth == 0 {
                    break;
                }
                depth -= 1;
                columns.pop();
                choice[depth] += 1;
            }
        }
        if fresh.is_empty() {
            return Ok(Saturation { derived, reasons });
        }
        let mut hit = false;
        for (t, cols) in fresh {
            hit |= stop_at == Some(&t);
            derived.insert(t.clone());
            reasons.insert(t, cols);
        }
        if hit {
            return Ok(Saturation { derived, reasons });
        }
    }
}

/// The closure of `premises` under the matrix rule.
pub fn derivable_set(ctx: &DerivationContext, premises: &TupleSet) -> Result<TupleSet> {
    Ok(saturate(ctx, premises, None)?.derived)
}

/// A derivation: leaves are premises, and each inner node lists the columns
/// of the matrix formed by its tuple and its children's tuples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTree {
    pub tuple: Tuple,
    pub columns: Vec<Tuple>,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    pub fn is_leaf(&self) -> bool {
        self.columns.is_empty()
    }

    /// Number of rule applications on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        if self.is_leaf() {
            0
        } else {
            1 + self.children.iter().map(ProofTree::depth).max().unwrap_or(0)
        }
    }

    pub fn leaves(&self) -> Vec<&Tuple> {
        if self.is_leaf() {
            vec![&self.tuple]
        } else {
            self.children.iter().flat_map(ProofTree::leaves).collect()
        }
    }

    /// Checks the tree against the matrix rule, without reference to how it
    /// was found.
    pub fn validate(&self, ctx: &DerivationContext, premises: &TupleSet) -> bool {
        let n = ctx.tuple_length;
        if self.tuple.len() != n {
            return false;
        }
        if self.is_leaf() {
            return self.children.is_empty() && premises.contains(&self.tuple);
        }
        let r = ctx.relation.arity();
        self.columns.len() == n
            && self.children.len() == r - 1
            && self.columns.iter().enumerate().all(|(j, c)| {
                c.len() == r
                    && ctx.relation.contains(c)
                    && c[0] == self.tuple[j]
                    && self.children.iter().enumerate().all(|(i, ch)| ch.tuple.get(j) == Some(&c[i + 1]))
            })
            && self.children.iter().all(|ch| ch.validate(ctx, premises))
    }

    /// The same derivation with every tuple read through `pi`, i.e.
    /// position `j` of the new tuple is position `pi[j]` of the old one.
    pub fn reindexed(&self, pi: &[usize]) -> ProofTree {
        ProofTree {
            tuple: pi.iter().map(|&p| self.tuple[p]).collect(),
            columns: if self.is_leaf() { Vec::new() } else { pi.iter().map(|&p| self.columns[p].clone()).collect() },
            children: self.children.iter().map(|c| c.reindexed(pi)).collect(),
        }
    }
}

/// A proof tree of minimal depth for `t`, if `t` is derivable.
pub fn derives(ctx: &DerivationContext, premises: &TupleSet, t: &Tuple) -> Result<Option<ProofTree>> {
    if t.len() != ctx.tuple_length {
        return Err(invalid(format!("target {t:?} does not have length {}", ctx.tuple_length)));
    }
    let sat = saturate(ctx, premises, Some(t))?;
    if !sat.derived.contains(t) {
        return Ok(None);
    }
    let tree = build_tree(&sat, t);
    debug_assert!(tree.validate(ctx, premises));
    Ok(Some(tree))
}

fn build_tree(sat: &Saturation, t: &Tuple) -> ProofTree {
    match sat.reasons.get(t) {
        None => ProofTree { tuple: t.clone(), columns: Vec::new(), children: Vec::new() },
        Some(cols) => {
            let r = cols[0].len();
            let children =
                (1..r).map(|i| build_tree(sat, &cols.iter().map(|c| c[i]).collect::<Tuple>())).collect();
            ProofTree { tuple: t.clone(), columns: cols.clone(), children }
        }
    }
}

/// Outcome of the super-connectedness test for one relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationOutcome {
    pub relation: String,
    pub super_connected: bool,
}

/// The first relation `R` in declaration order with `Γ_A ⊢ A^3`.
pub fn is_super_connected(a: &Structure) -> Result<Option<String>> {
    for r in a.relations() {
        if super_connected_via(a, r.name())? {
            return Ok(Some(r.name().to_string()));
        }
    }
    Ok(None)
}

/// Per-relation outcomes, without short-circuiting.
pub fn super_connected_outcomes(a: &Structure) -> Result<Vec<RelationOutcome>> {
    a.relations()
        .iter()
        .map(|r| Ok(RelationOutcome { relation: r.name().to_string(), super_connected: super_connected_via(a, r.name())? }))
        .collect()
}

fn super_connected_via(a: &Structure, relation: &str) -> Result<bool> {
    let ctx = DerivationContext::new(a, relation, 3)?;
    let total = a.domain_size().pow(3);
    Ok(derivable_set(&ctx, &gamma(a))?.len() == total)
}

/// Which syntactic sufficient conditions hold, and through which relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SufficientConditions {
    pub additive_sufficient: bool,
    pub additive_relation: Option<String>,
    pub dependent_sufficient: bool,
    pub dependent_relation: Option<String>,
}

/// `Γ_A ⊢ (p,p,q)` for all `p, q` and `Δ_A^a ⊢ (0, 1, …, a−1)`, each for
/// some relation. When the targets are already premises no relation is
/// needed.
pub fn check_sufficient_conditions(a: &Structure) -> Result<SufficientConditions> {
    let n = a.domain_size();
    let g = gamma(a);
    let additive_targets: Vec<Tuple> =
        (0..n).flat_map(|p| (0..n).map(move |q| vec![p, p, q])).filter(|t| !g.contains(t)).collect();
    let (additive_sufficient, additive_relation) = if additive_targets.is_empty() {
        (true, None)
    } else {
        let mut found = None;
        for r in a.relations() {
            let d = derivable_set(&DerivationContext::new(a, r.name(), 3)?, &g)?;
            if additive_targets.iter().all(|t| d.contains(t)) {
                found = Some(r.name().to_string());
                break;
            }
        }
        (found.is_some(), found)
    };
    let identity: Tuple = (0..n).collect();
    let (dependent_sufficient, dependent_relation) = if n <= 2 {
        (true, None)
    } else {
        let premises = delta(a, n);
        let mut found = None;
        for r in a.relations() {
            if derives(&DerivationContext::new(a, r.name(), n)?, &premises, &identity)?.is_some() {
                found = Some(r.name().to_string());
                break;
            }
        }
        (found.is_some(), found)
    };
    Ok(SufficientConditions { additive_sufficient, additive_relation, dependent_sufficient, dependent_relation })
}
