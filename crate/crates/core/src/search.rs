//! Backtracking search with generalized arc consistency.
//!
//! A [`Network`] has variables ranging over `0..domain_size` and constraints
//! of the form "the values of `scope` form a tuple of relation `rel`".
//! Homomorphism search, polymorphism enumeration, and the factored
//! symmetric-polymorphism searches are all phrased this way.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::structure::{Homomorphism, Structure, Tuple};

/// Resource limits for a search. Exceeding a limit is reported as
/// [`Error::ResourceLimit`], never as "no solution".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub max_nodes: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { max_nodes: Some(DEFAULT_MAX_NODES), time_limit: None }
    }
}

pub const DEFAULT_MAX_NODES: u64 = 10_000_000;

impl SearchConfig {
    pub fn unlimited() -> Self {
        SearchConfig { max_nodes: None, time_limit: None }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    scope: Vec<usize>,
    rel: usize,
    /// Pairs of positions holding the same variable.
    repeats: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub(crate) struct Network {
    num_vars: usize,
    domain_size: usize,
    relations: Vec<Vec<Tuple>>,
    constraints: Vec<Constraint>,
    watchers: Vec<Vec<usize>>,
    /// Branch on variables in index order, so the first solution found is
    /// the lexicographically least.
    lexicographic: bool,
}

impl Network {
    pub(crate) fn new(num_vars: usize, domain_size: usize, relations: Vec<Vec<Tuple>>) -> Self {
        Network { num_vars, domain_size, relations, constraints: Vec::new(), watchers: vec![Vec::new(); num_vars], lexicographic: false }
    }

    pub(crate) fn set_lexicographic(&mut self) {
        self.lexicographic = true;
    }

    pub(crate) fn add_constraint(&mut self, scope: Vec<usize>, rel: usize) {
        let mut repeats = Vec::new();
        for i in 0..scope.len() {
            for j in i + 1..scope.len() {
                if scope[i] == scope[j] {
                    repeats.push((i, j));
                }
            }
        }
        let id = self.constraints.len();
        let mut vars = scope.clone();
        vars.sort_unstable();
        vars.dedup();
        for v in vars {
            self.watchers[v].push(id);
        }
        self.constraints.push(Constraint { scope, rel, repeats });
    }

    /// The network whose solutions are the homomorphisms from `x` to `b`.
    pub(crate) fn homomorphisms(x: &Structure, b: &Structure) -> Result<Network> {
        x.check_similar(b)?;
        let mut net = Network::new(
            x.domain_size(),
            b.domain_size(),
            b.relations().iter().map(|r| r.tuples().to_vec()).collect(),
        );
        for (ri, r) in x.relations().iter().enumerate() {
            for t in r.tuples() {
                net.add_constraint(t.clone(), ri);
            }
        }
        Ok(net)
    }

    /// First solution in the deterministic search order, if any.
    pub(crate) fn solve(&self, config: &SearchConfig) -> Result<Option<Vec<usize>>> {
        let mut found = None;
        self.run(config, &mut |sol| {
            found = Some(sol.to_vec());
            false
        })?;
        Ok(found)
    }

    /// All solutions, sorted lexicographically.
    pub(crate) fn solve_all(&self, config: &SearchConfig, max_solutions: usize) -> Result<Vec<Vec<usize>>> {
        let mut all = Vec::new();
        let mut overflow = false;
        self.run(config, &mut |sol| {
            if all.len() == max_solutions {
                overflow = true;
                return false;
            }
            all.push(sol.to_vec());
            true
        })?;
        if overflow {
            return Err(Error::ResourceLimit(format!("more than {max_solutions} solutions")));
        }
        all.sort();
        Ok(all)
    }

    /// Runs the search, calling `visit` on each solution until it returns false.
    fn run(&self, config: &SearchConfig, visit: &mut dyn FnMut(&[usize]) -> bool) -> Result<()> {
        let mut state = State {
            net: self,
            nodes: 0,
            config,
            start: Instant::now(),
        };
        let mut doms = Domains::full(self.num_vars, self.domain_size);
        let all: Vec<usize> = (0..self.constraints.len()).collect();
        if self.domain_size == 0 && self.num_vars > 0 {
            return Ok(());
        }
        if !state.propagate(&mut doms, all) {
            return Ok(());
        }
        state.dfs(&doms, visit)?;
        Ok(())
    }
}

#[derive(Clone)]
struct Domains {
    d: usize,
    bits: Vec<bool>,
    sizes: Vec<usize>,
}

impl Domains {
    fn full(n: usize, d: usize) -> Self {
        Domains { d, bits: vec![true; n * d], sizes: vec![d; n] }
    }

    #[inline]
    fn has(&self, v: usize, x: usize) -> bool {
        self.bits[v * self.d + x]
    }

    fn assign(&mut self, v: usize, x: usize) {
        for y in 0..self.d {
            self.bits[v * self.d + y] = y == x;
        }
        self.sizes[v] = 1;
    }

    fn value(&self, v: usize) -> usize {
        (0..self.d).find(|&x| self.has(v, x)).expect("nonempty domain")
    }
}

struct State<'a> {
    net: &'a Network,
    nodes: u64,
    config: &'a SearchConfig,
    start: Instant,
}

impl State<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if let Some(max) = self.config.max_nodes {
            if self.nodes > max {
                return Err(Error::ResourceLimit(format!("search exceeded {max} nodes")));
            }
        }
        if let Some(limit) = self.config.time_limit {
            if self.nodes.is_multiple_of(256) && self.start.elapsed() > limit {
                return Err(Error::ResourceLimit(format!("search exceeded {limit:?}")));
            }
        }
        Ok(())
    }

    /// Generalized arc consistency; false on a wipe-out.
    fn propagate(&self, doms: &mut Domains, mut queue: Vec<usize>) -> bool {
        let net = self.net;
        let mut queued = vec![false; net.constraints.len()];
        for &c in &queue {
            queued[c] = true;
        }
        let d = net.domain_size;
        let mut support: Vec<bool> = Vec::new();
        while let Some(c) = queue.pop() {
            queued[c] = false;
            let con = &net.constraints[c];
            let r = con.scope.len();
            support.clear();
            support.resize(r * d, false);
            for t in &net.relations[con.rel] {
                if con.scope.iter().zip(t).all(|(&v, &x)| doms.has(v, x))
                    && con.repeats.iter().all(|&(i, j)| t[i] == t[j])
                {
                    for (i, &x) in t.iter().enumerate() {
                        support[i * d + x] = true;
                    }
                }
            }
            for (i, &v) in con.scope.iter().enumerate() {
                let mut changed = false;
                for x in 0..d {
                    if doms.has(v, x) && !support[i * d + x] {
                        doms.bits[v * d + x] = false;
                        doms.sizes[v] -= 1;
                        changed = true;
                    }
                }
                if doms.sizes[v] == 0 {
                    return false;
                }
                if changed {
                    for &c2 in &net.watchers[v] {
                        if c2 != c && !queued[c2] {
                            queued[c2] = true;
                            queue.push(c2);
                        }
                    }
                }
            }
        }
        true
    }

    fn dfs(&mut self, doms: &Domains, visit: &mut dyn FnMut(&[usize]) -> bool) -> Result<bool> {
        self.tick()?;
        let mut open = (0..self.net.num_vars).filter(|&v| doms.sizes[v] > 1);
        let var = if self.net.lexicographic { open.next() } else { open.min_by_key(|&v| (doms.sizes[v], v)) };
        let Some(var) = var else {
            let sol: Vec<usize> = (0..self.net.num_vars).map(|v| doms.value(v)).collect();
            return Ok(visit(&sol));
        };
        for x in 0..self.net.domain_size {
            if !doms.has(var, x) {
                continue;
            }
            let mut next = doms.clone();
            next.assign(var, x);
            if self.propagate(&mut next, self.net.watchers[var].clone()) && !self.dfs(&next, visit)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Searches for a homomorphism from `x` to `b`.
///
/// The search is complete and deterministic: variables are chosen by
/// (candidate-set size, index) and values are tried in increasing order.
pub fn find_homomorphism(x: &Structure, b: &Structure, config: &SearchConfig) -> Result<Option<Homomorphism>> {
    Ok(Network::homomorphisms(x, b)?.solve(config)?.map(Homomorphism))
}

/// All homomorphisms from `x` to `b`, in lexicographic order of their mappings.
pub fn all_homomorphisms(
    x: &Structure,
    b: &Structure,
    config: &SearchConfig,
    max_solutions: usize,
) -> Result<Vec<Homomorphism>> {
    Ok(Network::homomorphisms(x, b)?
        .solve_all(config, max_solutions)?
        .into_iter()
        .map(Homomorphism)
        .collect())
}
