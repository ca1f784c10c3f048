//! The free affine structure `A_m` over `Z_m`, the sandwich classifier for
//! symmetric `A` and functional `B`, and the instance solver for the
//! tractable side.
//!
//! `PCSP(A, B)` is tractable exactly when `A → A_m → B` for some `m ≥ 1`.
//! The classifier tries `m = 1, 2, …` up to a bound and reports the least
//! modulus that works together with the homomorphism `A_m → B`.

use serde::Serialize;

use crate::analysis::{hypergraph_metrics, is_functional, is_symmetric};
use crate::derivation::{check_sufficient_conditions, is_super_connected};
use crate::error::{invalid, Error, Result};
use crate::polymorphisms::OperationTable;
use crate::search::{find_homomorphism, Network, SearchConfig};
use crate::structure::{
    connected_components, is_homomorphism, largest_symmetric_substructure, Homomorphism, Relation, Structure, Tuple,
};

/// Largest `m^a` for which `A_m` is built.
pub const MAX_AFFINE_DOMAIN: usize = 1 << 20;
/// Largest coset enumerated as explicit constraint tuples.
pub const DEFAULT_COSET_CAP: u128 = 2_000_000;

/// A subgroup of `Z_m^d` in canonical echelon form.
///
/// Rows are the Hermite normal form rows of the lattice spanned by the
/// generators and `m·ℤ^d` whose pivot is a proper divisor of `m`; the
/// remaining pivots are implicitly `m`. Entries right of a pivot are
/// reduced modulo the pivot of their column.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SubgroupBasis {
    pub modulus: u64,
    pub dimension: usize,
    pub rows: Vec<Vec<u64>>,
}

fn pivot_of(row: &[u64]) -> usize {
    row.iter().position(|&x| x != 0).expect("basis rows are nonzero")
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
        (g, t, s - a.div_euclid(b) * t)
    }
}

/// The canonical basis of the subgroup of `Z_m^d` generated by `generators`.
pub fn subgroup_basis(generators: &[Vec<i64>], m: u64, d: usize) -> Result<SubgroupBasis> {
    if m == 0 || m > 1 << 30 {
        return Err(invalid(format!("modulus {m} out of range")));
    }
    if let Some(g) = generators.iter().find(|g| g.len() != d) {
        return Err(invalid(format!("generator of length {} in dimension {d}", g.len())));
    }
    let mi = m as i64;
    // h[j] has pivot column j; starts as m·e_j
    let mut h: Vec<Vec<i64>> = (0..d).map(|j| (0..d).map(|k| if k == j { mi } else { 0 }).collect()).collect();
    for g in generators {
        let mut v: Vec<i64> = g.iter().map(|x| x.rem_euclid(mi)).collect();
        for j in 0..d {
            if v[j] == 0 {
                continue;
            }
            let p = h[j][j];
            let (gcd, s, t) = ext_gcd(p, v[j]);
            let (vp, pp) = (v[j] / gcd, p / gcd);
            let new_row: Vec<i64> = (0..d).map(|k| s * h[j][k] + t * v[k]).collect();
            let rest: Vec<i64> = (0..d).map(|k| vp * h[j][k] - pp * v[k]).collect();
            h[j] = new_row.iter().enumerate().map(|(k, &x)| if k == j { x } else { x.rem_euclid(mi) }).collect();
            v = rest.iter().map(|x| x.rem_euclid(mi)).collect();
        }
    }
    for i in (0..d).rev() {
        for j in i + 1..d {
            let q = h[i][j].div_euclid(h[j][j]);
            if q != 0 {
                for k in j..d {
                    h[i][k] -= q * h[j][k];
                }
            }
        }
    }
    let rows = h
        .into_iter()
        .enumerate()
        .filter(|(j, row)| row[*j] < mi)
        .map(|(_, row)| row.into_iter().map(|x| x as u64).collect())
        .collect();
    Ok(SubgroupBasis { modulus: m, dimension: d, rows })
}

impl SubgroupBasis {
    /// `|M|`, or `None` if it does not fit in a `u128`.
    pub fn order(&self) -> Option<u128> {
        self.rows.iter().try_fold(1u128, |acc, row| acc.checked_mul((self.modulus / row[pivot_of(row)]) as u128))
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        let m = self.modulus as i64;
        let mut v: Vec<i64> = v.iter().map(|x| x.rem_euclid(m)).collect();
        let mut rows = self.rows.iter().peekable();
        for j in 0..self.dimension {
            let row = rows.next_if(|r| pivot_of(r) == j);
            if v[j] == 0 {
                continue;
            }
            let Some(row) = row else {
                return false;
            };
            let p = row[j] as i64;
            if v[j] % p != 0 {
                return false;
            }
            let q = v[j] / p;
            for k in j..self.dimension {
                v[k] = (v[k] - q * row[k] as i64).rem_euclid(m);
            }
        }
        true
    }

    /// Every element, each exactly once.
    pub fn elements(&self, cap: u128) -> Result<Vec<Vec<u64>>> {
        let order = self.order().filter(|&o| o <= cap);
        let Some(order) = order else {
            return Err(Error::ResourceLimit(format!("subgroup has more than {cap} elements")));
        };
        let m = self.modulus;
        let radices: Vec<u64> = self.rows.iter().map(|r| m / r[pivot_of(r)]).collect();
        let mut out = Vec::with_capacity(order as usize);
        let mut counter = vec![0u64; self.rows.len()];
        loop {
            let mut v = vec![0u64; self.dimension];
            for (c, row) in counter.iter().zip(&self.rows) {
                for (x, r) in v.iter_mut().zip(row) {
                    *x = (*x + c * r) % m;
                }
            }
            out.push(v);
            let Some(i) = (0..counter.len()).rev().find(|&i| counter[i] + 1 < radices[i]) else {
                break;
            };
            counter[i] += 1;
            counter[i + 1..].iter_mut().for_each(|c| *c = 0);
        }
        Ok(out)
    }
}

/// The relation `t̄ + M(R^A)` of `A_m`, over flattened tuples of vectors
/// (entry `i·a + v` is coordinate `v` of position `i`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CosetDescriptor {
    pub relation: String,
    pub arity: usize,
    /// `None` for an empty source relation.
    pub base_point: Option<Vec<u64>>,
    pub generator_basis: SubgroupBasis,
}

impl CosetDescriptor {
    pub fn contains(&self, v: &[u64]) -> bool {
        let Some(base) = &self.base_point else {
            return false;
        };
        v.len() == base.len() && self.generator_basis.contains(&v.iter().zip(base).map(|(x, b)| *x as i64 - *b as i64).collect::<Vec<_>>())
    }

    pub fn size(&self) -> Option<u128> {
        if self.base_point.is_none() {
            return Some(0);
        }
        self.generator_basis.order()
    }

    /// All members, as flattened vectors.
    pub fn members(&self, cap: u128) -> Result<Vec<Vec<u64>>> {
        let Some(base) = &self.base_point else {
            return Ok(Vec::new());
        };
        let m = self.generator_basis.modulus;
        Ok(self
            .generator_basis
            .elements(cap)?
            .into_iter()
            .map(|g| g.iter().zip(base).map(|(x, b)| (x + b) % m).collect())
            .collect())
    }
}

/// `A_m`: domain `Z_m^a` (row-major, first coordinate most significant),
/// one coset per relation of `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AffineStructure {
    pub modulus: u64,
    #[serde(skip)]
    pub base: Structure,
    pub relations: Vec<CosetDescriptor>,
}

impl AffineStructure {
    pub fn source_size(&self) -> usize {
        self.base.domain_size()
    }

    pub fn domain_size(&self) -> usize {
        (self.modulus as usize).pow(self.source_size() as u32)
    }

    pub fn vector_of(&self, mut index: usize) -> Vec<u64> {
        let m = self.modulus as usize;
        let mut v = vec![0u64; self.source_size()];
        for x in v.iter_mut().rev() {
            *x = (index % m) as u64;
            index /= m;
        }
        v
    }

    pub fn index_of(&self, v: &[u64]) -> usize {
        let m = self.modulus;
        v.iter().fold(0usize, |acc, &x| acc * m as usize + (x % m) as usize)
    }

    /// Whether the tuple of element indices lies in relation `rel`.
    pub fn contains(&self, rel: usize, t: &[usize]) -> bool {
        let flat: Vec<u64> = t.iter().flat_map(|&x| self.vector_of(x)).collect();
        self.relations[rel].contains(&flat)
    }

    fn member_tuples(&self, rel: usize, cap: u128) -> Result<Vec<Tuple>> {
        let a = self.source_size();
        Ok(self.relations[rel]
            .members(cap)?
            .into_iter()
            .map(|v| if a == 0 { Vec::new() } else { v.chunks(a).map(|c| self.index_of(c)).collect() })
            .collect())
    }

    /// The explicit structure, with labels like `(1,0)`.
    pub fn materialize(&self, cap: u128) -> Result<Structure> {
        let labels = (0..self.domain_size())
            .map(|i| format!("({})", self.vector_of(i).iter().map(u64::to_string).collect::<Vec<_>>().join(",")))
            .collect();
        let relations = self
            .relations
            .iter()
            .enumerate()
            .map(|(ri, c)| Relation::new(c.relation.clone(), c.arity, self.member_tuples(ri, cap)?))
            .collect::<Result<Vec<_>>>()?;
        Structure::new(labels, relations)
    }
}

fn unit_vector(x: usize, a: usize, m: u64) -> Vec<u64> {
    let mut v = vec![0u64; a];
    v[x] = 1 % m;
    v
}

fn flat_bar(t: &[usize], a: usize, m: u64) -> Vec<u64> {
    t.iter().flat_map(|&x| unit_vector(x, a, m)).collect()
}

pub fn build_affine_structure(a: &Structure, m: u64) -> Result<AffineStructure> {
    if m == 0 {
        return Err(invalid("modulus must be positive"));
    }
    let size = (m as usize).checked_pow(a.domain_size() as u32).filter(|&s| s <= MAX_AFFINE_DOMAIN);
    if size.is_none() {
        return Err(Error::ResourceLimit(format!("{m}^{} exceeds {MAX_AFFINE_DOMAIN} elements", a.domain_size())));
    }
    let asz = a.domain_size();
    let relations = a
        .relations()
        .iter()
        .map(|r| {
            let d = r.arity() * asz;
            let base = r.tuples().first().map(|t| flat_bar(t, asz, m));
            let generators: Vec<Vec<i64>> = match &base {
                None => Vec::new(),
                Some(b) => r.tuples()[1..]
                    .iter()
                    .map(|t| flat_bar(t, asz, m).iter().zip(b).map(|(x, y)| *x as i64 - *y as i64).collect())
                    .collect(),
            };
            Ok(CosetDescriptor {
                relation: r.name().to_string(),
                arity: r.arity(),
                base_point: base,
                generator_basis: subgroup_basis(&generators, m, d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AffineStructure { modulus: m, base: a.clone(), relations })
}

/// `x ↦ x̄` from `A` into `A_m`, checked tuple by tuple against the cosets.
pub fn unit_embedding(a: &Structure, m: u64) -> Result<Homomorphism> {
    let affine = build_affine_structure(a, m)?;
    let asz = a.domain_size();
    let h = Homomorphism((0..asz).map(|x| affine.index_of(&unit_vector(x, asz, m))).collect());
    for (ri, r) in a.relations().iter().enumerate() {
        if let Some(t) = r.tuples().iter().find(|t| !affine.contains(ri, &h.apply(t))) {
            return Err(invalid(format!("unit embedding misses {t:?} in `{}`", r.name())));
        }
    }
    Ok(h)
}

/// Searches for a homomorphism `A_m → B`, generating each relation's
/// constraint tuples from its coset descriptor.
pub fn affine_homomorphism(
    affine: &AffineStructure,
    b: &Structure,
    config: &SearchConfig,
    coset_cap: u128,
) -> Result<Option<Homomorphism>> {
    affine.base.check_similar(b)?;
    let mut net = Network::new(affine.domain_size(), b.domain_size(), b.relations().iter().map(|r| r.tuples().to_vec()).collect());
    for ri in 0..affine.relations.len() {
        for t in affine.member_tuples(ri, coset_cap)? {
            net.add_constraint(t, ri);
        }
    }
    Ok(net.solve(config)?.map(Homomorphism))
}

/// `f(x_1, y_1, …, y_k, x_{k+1}) = Σ x_i − Σ y_i` on `Z_m^a`.
pub fn alternating_witness(affine: &AffineStructure, k: usize) -> Result<OperationTable> {
    let n = affine.domain_size();
    let m = affine.modulus;
    OperationTable::from_fn(n, n, 2 * k + 1, |x| {
        let mut s = vec![0u64; affine.source_size()];
        for (p, &e) in x.iter().enumerate() {
            for (acc, v) in s.iter_mut().zip(affine.vector_of(e)) {
                *acc = if p % 2 == 0 { (*acc + v) % m } else { (*acc + m - v) % m };
            }
        }
        affine.index_of(&s)
    })
}

/// Limits for [`classify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassifierBounds {
    pub m_max: u64,
    /// `max(1 + |B|^{a²}·a^{2·r_max}, 3)`, saturating.
    pub n_d: u128,
    /// `|B|^{a²}`, saturating.
    pub n_h: u128,
    #[serde(skip)]
    pub search: SearchConfig,
    pub coset_cap: u128,
}

impl ClassifierBounds {
    pub fn for_template(a: &Structure, b: &Structure) -> Self {
        let asz = a.domain_size() as u128;
        let n_h = (b.domain_size() as u128).saturating_pow((asz * asz).min(u32::MAX as u128) as u32);
        let spread = asz.saturating_pow(2 * a.max_arity() as u32);
        let n_d = n_h.saturating_mul(spread).saturating_add(1).max(3);
        ClassifierBounds {
            m_max: n_h.min(u64::MAX as u128) as u64,
            n_d,
            n_h,
            search: SearchConfig::default(),
            coset_cap: DEFAULT_COSET_CAP,
        }
    }

    pub fn with_m_max(mut self, m_max: u64) -> Self {
        self.m_max = m_max;
        self
    }
}

/// How additivity and dependency of `(A, B)` were established.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum AdditivityRoute {
    /// A relation of arity at least 3 whose hypergraph has diameter at most 1.
    Diameter { relation: String },
    /// A connected relation of arity 3 or 4.
    Connectivity { relation: String, arity: usize },
    /// Saturation derived every triple from `Γ_A`.
    SuperConnected { relation: String },
    /// `Γ_A ⊢ (p,p,q)` and `Δ_A^a ⊢ (1,…,a)` hold without super-connectedness.
    SufficientConditions,
    /// Each connected component was classified on its own.
    Components,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Preconditions {
    pub a_symmetric: bool,
    pub b_functional: bool,
    /// `B` was not symmetric and was replaced by its largest symmetric substructure.
    pub b_symmetrized: bool,
    pub a_connected: bool,
    pub route: Option<AdditivityRoute>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentVerdict {
    /// Elements of `A` in the component.
    pub elements: Vec<usize>,
    pub m: u64,
    /// `A_m → B` for the component's own `A_m`.
    pub sandwich_hom: Homomorphism,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Outcome {
    Tractable { m: u64, sandwich_hom: Homomorphism },
    /// `A` is disconnected and every component has its own sandwich.
    TractableByComponents { components: Vec<ComponentVerdict> },
    NpHard { m_bound_exhausted: u64 },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassifierVerdict {
    pub outcome: Outcome,
    pub preconditions: Preconditions,
}

impl ClassifierVerdict {
    pub fn is_tractable(&self) -> bool {
        matches!(self.outcome, Outcome::Tractable { .. } | Outcome::TractableByComponents { .. })
    }
}

fn find_route(a: &Structure) -> Result<Option<AdditivityRoute>> {
    for r in a.relations() {
        if r.arity() < 3 || r.is_empty() {
            continue;
        }
        let metrics = hypergraph_metrics(a, r.name())?;
        if metrics.diameter.is_some_and(|d| d <= 1) {
            return Ok(Some(AdditivityRoute::Diameter { relation: r.name().to_string() }));
        }
        if metrics.connected && (r.arity() == 3 || r.arity() == 4) {
            return Ok(Some(AdditivityRoute::Connectivity { relation: r.name().to_string(), arity: r.arity() }));
        }
    }
    match is_super_connected(a) {
        Ok(Some(relation)) => return Ok(Some(AdditivityRoute::SuperConnected { relation })),
        Ok(None) => {}
        Err(e) if e.is_resource_limit() => {}
        Err(e) => return Err(e),
    }
    match check_sufficient_conditions(a) {
        Ok(c) if c.additive_sufficient && c.dependent_sufficient => Ok(Some(AdditivityRoute::SufficientConditions)),
        Ok(_) => Ok(None),
        Err(e) if e.is_resource_limit() => Ok(None),
        Err(e) => Err(e),
    }
}

enum ModulusSearch {
    Found(u64, Homomorphism),
    Exhausted,
    GaveUp(String),
}

fn least_modulus(a: &Structure, b: &Structure, bounds: &ClassifierBounds) -> Result<ModulusSearch> {
    for m in 1..=bounds.m_max {
        let attempt = build_affine_structure(a, m)
            .and_then(|affine| affine_homomorphism(&affine, b, &bounds.search, bounds.coset_cap));
        match attempt {
            Ok(Some(h)) => return Ok(ModulusSearch::Found(m, h)),
            Ok(None) => {}
            Err(Error::ResourceLimit(why)) => return Ok(ModulusSearch::GaveUp(format!("at m = {m}: {why}"))),
            Err(e) => return Err(e),
        }
    }
    Ok(ModulusSearch::Exhausted)
}

/// Decides `PCSP(A, B)` for symmetric `A` and functional `B`.
///
/// Refuses with [`Outcome::Inconclusive`] when the hypotheses fail, when a
/// resource limit is hit, or when `m_max` is below the proof bound
/// `|B|^{a²}` and no modulus up to it works.
pub fn classify(a: &Structure, b: &Structure, bounds: &ClassifierBounds) -> Result<ClassifierVerdict> {
    a.check_similar(b)?;
    if find_homomorphism(a, b, &bounds.search)?.is_none() {
        return Err(Error::InvalidTemplate("A does not map to B".into()));
    }
    let b_symmetrized = !is_symmetric(b);
    let b = if b_symmetrized { largest_symmetric_substructure(b) } else { b.clone() };
    let components = connected_components(a);
    let mut pre = Preconditions {
        a_symmetric: is_symmetric(a),
        b_functional: is_functional(&b),
        b_symmetrized,
        a_connected: components.len() <= 1,
        route: None,
    };
    let inconclusive = |pre: Preconditions, reason: String| ClassifierVerdict { outcome: Outcome::Inconclusive { reason }, preconditions: pre };
    if !pre.a_symmetric {
        return Ok(inconclusive(pre, "A is not symmetric".into()));
    }
    if !pre.b_functional {
        return Ok(inconclusive(pre, "B is not functional".into()));
    }
    let proof_bound = ClassifierBounds::for_template(a, &b).m_max;
    let exhausted = |pre: Preconditions, bound: u64| {
        if bound >= proof_bound {
            ClassifierVerdict { outcome: Outcome::NpHard { m_bound_exhausted: bound }, preconditions: pre }
        } else {
            inconclusive(pre, format!("no modulus up to {bound} works, below the bound {proof_bound}"))
        }
    };

    if !pre.a_connected {
        pre.route = Some(AdditivityRoute::Components);
        let mut verdicts = Vec::new();
        let mut gave_up = None;
        for c in &components {
            let sub = classify(&c.structure, &b, bounds)?;
            match sub.outcome {
                Outcome::Tractable { m, sandwich_hom } => {
                    verdicts.push(ComponentVerdict { elements: c.elements.clone(), m, sandwich_hom })
                }
                Outcome::NpHard { m_bound_exhausted } => return Ok(exhausted(pre, m_bound_exhausted)),
                Outcome::Inconclusive { reason } => {
                    gave_up.get_or_insert(format!("component {:?}: {reason}", c.elements));
                }
                Outcome::TractableByComponents { .. } => unreachable!("components are connected"),
            }
        }
        return Ok(match gave_up {
            Some(reason) => inconclusive(pre, reason),
            None => ClassifierVerdict { outcome: Outcome::TractableByComponents { components: verdicts }, preconditions: pre },
        });
    }

    pre.route = find_route(a)?;
    if pre.route.is_none() {
        return Ok(inconclusive(pre, "additivity and dependency could not be established".into()));
    }
    Ok(match least_modulus(a, &b, bounds)? {
        ModulusSearch::Found(m, sandwich_hom) => {
            ClassifierVerdict { outcome: Outcome::Tractable { m, sandwich_hom }, preconditions: pre }
        }
        ModulusSearch::Exhausted => exhausted(pre, bounds.m_max),
        ModulusSearch::GaveUp(reason) => inconclusive(pre, reason),
    })
}

/// Maps `x` to `A_m` by solving the affine system over `ℤ`: every element
/// gets a vector in `ℤ^a`, every constraint asks that its scope vector lie
/// in `t̄ + M + m·ℤ^{ra}`.
fn solve_affine(x: &Structure, affine: &AffineStructure) -> Result<Option<Homomorphism>> {
    let a = affine.source_size();
    let m = affine.modulus as i64;
    let nx = x.domain_size();
    let mut columns = nx * a;
    let mut rows: Vec<(Vec<(usize, i64)>, i64)> = Vec::new();
    for (ri, r) in x.relations().iter().enumerate() {
        let coset = &affine.relations[ri];
        for t in r.tuples() {
            let Some(base) = &coset.base_point else {
                return Ok(None);
            };
            let basis = &coset.generator_basis.rows;
            let first_aux = columns;
            columns += basis.len() + base.len();
            for (i, &xi) in t.iter().enumerate() {
                for v in 0..a {
                    let coord = i * a + v;
                    let mut row = vec![(xi * a + v, 1)];
                    for (bi, g) in basis.iter().enumerate() {
                        if g[coord] != 0 {
                            row.push((first_aux + bi, -(g[coord] as i64)));
                        }
                    }
                    row.push((first_aux + basis.len() + coord, -m));
                    rows.push((row, base[coord] as i64));
                }
            }
        }
    }
    let dense: Vec<Vec<i64>> = rows
        .iter()
        .map(|(row, _)| {
            let mut d = vec![0i64; columns];
            for &(c, v) in row {
                d[c] += v;
            }
            d
        })
        .collect();
    let rhs: Vec<i64> = rows.iter().map(|(_, b)| *b).collect();
    let Some(sol) = crate::relaxations::integer_feasible_width(&dense, &rhs, columns)? else {
        return Ok(None);
    };
    let big_m = num_bigint::BigInt::from(m);
    Ok(Some(Homomorphism(
        (0..nx)
            .map(|e| {
                let v: Vec<u64> = (0..a)
                    .map(|c| {
                        let r = ((&sol[e * a + c] % &big_m) + &big_m) % &big_m;
                        u64::try_from(r).expect("residue fits")
                    })
                    .collect();
                affine.index_of(&v)
            })
            .collect(),
    )))
}

/// A homomorphism `X → B` for an instance promised to map to `A`, through
/// the sandwich `A_m → B` of a tractable verdict.
pub fn solve_instance(x: &Structure, a: &Structure, b: &Structure, verdict: &ClassifierVerdict) -> Result<Homomorphism> {
    x.check_similar(a)?;
    a.check_similar(b)?;
    let h = match &verdict.outcome {
        Outcome::Tractable { m, sandwich_hom } => solve_through(x, a, *m, sandwich_hom)?,
        Outcome::TractableByComponents { components } => {
            let mut map = vec![0usize; x.domain_size()];
            for part in connected_components(x) {
                let mut done = false;
                for cv in components {
                    let sub = a.induced(&cv.elements);
                    match solve_through(&part.structure, &sub, cv.m, &cv.sandwich_hom) {
                        Ok(h) => {
                            for (i, &e) in part.elements.iter().enumerate() {
                                map[e] = h.0[i];
                            }
                            done = true;
                            break;
                        }
                        Err(Error::PromiseViolation(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                if !done {
                    return Err(Error::PromiseViolation(format!(
                        "component {:?} of the instance maps to no component of A",
                        part.elements
                    )));
                }
            }
            Homomorphism(map)
        }
        _ => return Err(invalid("solve_instance needs a tractable verdict")),
    };
    if !is_homomorphism(&h, x, b)? {
        return Err(invalid("verdict does not belong to this template"));
    }
    Ok(h)
}

fn solve_through(x: &Structure, a: &Structure, m: u64, sandwich: &Homomorphism) -> Result<Homomorphism> {
    let affine = build_affine_structure(a, m)?;
    if sandwich.0.len() != affine.domain_size() {
        return Err(invalid("sandwich homomorphism does not match A_m"));
    }
    match solve_affine(x, &affine)? {
        Some(h) => Ok(h.then(sandwich)),
        None => Err(Error::PromiseViolation("the affine system of the instance has no integer solution".into())),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, VecDeque};

    use super::*;
    use crate::catalog;
    use crate::polymorphisms::{is_polymorphism, symmetry_kind, SymmetryKind};

    /// Subgroup generated by `gens` in `Z_m^d`, by breadth-first closure.
    fn closure(gens: &[Vec<i64>], m: u64, d: usize) -> BTreeSet<Vec<u64>> {
        let mut seen = BTreeSet::from([vec![0u64; d]]);
        let mut queue = VecDeque::from([vec![0u64; d]]);
        while let Some(v) = queue.pop_front() {
            for g in gens {
                let w: Vec<u64> = v.iter().zip(g).map(|(x, y)| (*x as i64 + y).rem_euclid(m as i64) as u64).collect();
                if seen.insert(w.clone()) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    #[test]
    fn basis_edge_cases() {
        let empty = subgroup_basis(&[], 5, 3).unwrap();
        assert!(empty.rows.is_empty());
        assert_eq!(empty.order(), Some(1));
        let units: Vec<Vec<i64>> = (0..3).map(|i| (0..3).map(|j| (i == j) as i64).collect()).collect();
        let full = subgroup_basis(&units, 2, 3).unwrap();
        assert_eq!(full.rows, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(full.order(), Some(8));
    }

    #[test]
    fn basis_agrees_with_closure() {
        let gens = vec![vec![2, 4, 0], vec![3, 0, 6], vec![0, 6, 3]];
        for m in 1..=12u64 {
            let basis = subgroup_basis(&gens, m, 3).unwrap();
            let explicit = closure(&gens, m, 3);
            assert_eq!(basis.order(), Some(explicit.len() as u128), "m = {m}");
            let listed: BTreeSet<Vec<u64>> = basis.elements(1 << 20).unwrap().into_iter().collect();
            assert_eq!(listed, explicit);
            for v in crate::catalog::all_tuples(m as usize, 3) {
                let v: Vec<i64> = v.iter().map(|&x| x as i64).collect();
                let u: Vec<u64> = v.iter().map(|&x| x as u64).collect();
                assert_eq!(basis.contains(&v), explicit.contains(&u));
            }
        }
    }

    #[test]
    fn one_in_three_affine_structures() {
        let a = catalog::one_in_three();
        let a1 = build_affine_structure(&a, 1).unwrap().materialize(1000).unwrap();
        assert_eq!(a1.domain_size(), 1);
        assert_eq!(a1.relations()[0].tuples(), &[vec![0, 0, 0]]);
        let aff2 = build_affine_structure(&a, 2).unwrap();
        assert_eq!(aff2.domain_size(), 4);
        let a2 = aff2.materialize(1000).unwrap();
        let m2 = aff2.relations[0].generator_basis.order().unwrap();
        assert_eq!(a2.relations()[0].len() as u128, m2);
        assert_eq!(m2, 4);
        assert_eq!(unit_embedding(&a, 2).unwrap().0, vec![2, 1]);
        assert_eq!(unit_embedding(&a, 1).unwrap().0, vec![0, 0]);
        let aff3 = build_affine_structure(&a, 3).unwrap();
        assert_eq!(aff3.domain_size(), 9);
        let a3 = aff3.materialize(1000).unwrap();
        let b = catalog::eqn(3, 1).unwrap();
        let h = find_homomorphism(&a3, &b, &SearchConfig::default()).unwrap().unwrap();
        assert!(is_homomorphism(&h, &a3, &b).unwrap());
        // the second coordinate is a homomorphism
        let second = Homomorphism((0..9).map(|i| aff3.vector_of(i)[1] as usize).collect());
        assert!(is_homomorphism(&second, &a3, &b).unwrap());
    }

    #[test]
    fn unit_embedding_on_catalog() {
        for key in ["one_in_three", "nae", "eqn(3,1)", "remark_5_1", "remark_5_2", "remark_5_3", "cyclic_plus(3)"] {
            let s = catalog::lookup(key).unwrap();
            for m in 1..=3 {
                let h = unit_embedding(&s, m).unwrap();
                let affine = build_affine_structure(&s, m).unwrap();
                if let Ok(explicit) = affine.materialize(200_000) {
                    assert!(is_homomorphism(&h, &s, &explicit).unwrap(), "{key} m = {m}");
                }
            }
        }
    }

    #[test]
    fn alternating_witness_tables() {
        let a = catalog::one_in_three();
        let aff = build_affine_structure(&a, 2).unwrap();
        let id = alternating_witness(&aff, 0).unwrap();
        assert!((0..4).all(|x| id.eval(&[x]) == x));
        let f = alternating_witness(&aff, 1).unwrap();
        let explicit = aff.materialize(1000).unwrap();
        assert!(is_polymorphism(&f, &explicit, &explicit).unwrap());
        assert_eq!(symmetry_kind(&f).kind, SymmetryKind::Alternating);
    }

    #[test]
    fn constant_tuple_gives_modulus_one() {
        let a = catalog::one_in_three();
        let b = catalog::eqn(2, 1).unwrap();
        let v = classify(&a, &b, &ClassifierBounds::for_template(&a, &b)).unwrap();
        assert!(matches!(v.outcome, Outcome::Tractable { m: 1, .. }));
    }

    #[test]
    fn refuses_outside_hypotheses() {
        let a = catalog::remark_5_2();
        let v = classify(&a, &a, &ClassifierBounds::for_template(&a, &a)).unwrap();
        assert!(matches!(v.outcome, Outcome::Inconclusive { .. }));
        assert!(!v.preconditions.a_symmetric);
        let a = catalog::nae();
        let b = catalog::one_in_three();
        assert!(matches!(classify(&a, &b, &ClassifierBounds::for_template(&a, &b)), Err(Error::InvalidTemplate(_))));
    }

    #[test]
    fn lowered_bound_is_never_hardness() {
        let a = catalog::one_in_three();
        let v = classify(&a, &a, &ClassifierBounds::for_template(&a, &a).with_m_max(3)).unwrap();
        assert!(matches!(v.outcome, Outcome::Inconclusive { .. }));
    }

    #[test]
    fn solves_the_template_itself() {
        let a = catalog::one_in_three();
        let b = catalog::eqn(3, 1).unwrap();
        let v = classify(&a, &b, &ClassifierBounds::for_template(&a, &b)).unwrap();
        let h = solve_instance(&a, &a, &b, &v).unwrap();
        assert!(is_homomorphism(&h, &a, &b).unwrap());
        let x = Structure::with_domain_size(1, vec![Relation::new("R", 3, vec![vec![0, 0, 0]]).unwrap()]).unwrap();
        assert!(matches!(solve_instance(&x, &a, &b, &v), Err(Error::PromiseViolation(_))));
    }
}
