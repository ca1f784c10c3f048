//! BLP, AIP and BLP+AIP relaxations of template instances, solved exactly.
//!
//! The system for an instance `X` over a template side `A` has a variable
//! `mu(x,a)` for every element `x` of `X` and value `a` of `A`, and a
//! variable `lambda(c;t)` for every constraint occurrence `c` of `X` and
//! tuple `t` of the matching relation of `A`. Its equalities say that each
//! `mu(x,·)` and each `lambda(c;·)` sums to one and that the marginal of
//! `lambda(c;·)` at position `i` equals `mu(scope_i,·)`.

mod exact;
mod lattice;
mod simplex;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::structure::Structure;

pub use lattice::{integer_feasible, verify as verify_integer_solution};
pub(crate) use lattice::integer_feasible_width;
pub(crate) use simplex::{feasible_point, minimize, Lp, LpResult};

/// Whether variables are constrained to be nonnegative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationMode {
    Blp,
    Aip,
}

/// Integer equality system `Σ_j a_ij x_j = b_i` over named variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinearSystem {
    pub variables: Vec<String>,
    /// Sparse rows of `(variable, coefficient)` pairs.
    pub equalities: Vec<Vec<(usize, i64)>>,
    pub rhs: Vec<i64>,
    pub nonnegative: Vec<bool>,
    /// Set when a constraint uses a relation that is empty in the template.
    pub trivially_infeasible: Option<String>,
}

impl LinearSystem {
    pub fn new(variables: Vec<String>, nonnegative: bool) -> Self {
        let n = variables.len();
        LinearSystem {
            variables,
            equalities: Vec::new(),
            rhs: Vec::new(),
            nonnegative: vec![nonnegative; n],
            trivially_infeasible: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_equality(&mut self, row: Vec<(usize, i64)>, rhs: i64) -> Result<()> {
        if let Some(&(j, _)) = row.iter().find(|&&(j, _)| j >= self.num_vars()) {
            return Err(invalid(format!("equality references undeclared variable {j}")));
        }
        self.equalities.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn dense_rows(&self) -> Vec<Vec<i64>> {
        self.equalities
            .iter()
            .map(|row| {
                let mut d = vec![0; self.num_vars()];
                for &(j, a) in row {
                    d[j] += a;
                }
                d
            })
            .collect()
    }

    /// The system as a linear program over nonnegative variables; a free
    /// variable `x` is split as `x⁺ − x⁻` with `x⁻` appended at the end.
    fn to_lp(&self) -> (Lp, Vec<usize>) {
        let free: Vec<usize> = (0..self.num_vars()).filter(|&j| !self.nonnegative[j]).collect();
        let rows = self
            .dense_rows()
            .into_iter()
            .map(|mut row| {
                let extra: Vec<i64> = free.iter().map(|&j| -row[j]).collect();
                row.extend(extra);
                row
            })
            .collect();
        (Lp { rows, rhs: self.rhs.clone(), num_vars: self.num_vars() + free.len() }, free)
    }

    fn fold_split(&self, free: &[usize], x: Vec<BigRational>) -> Vec<BigRational> {
        let n = self.num_vars();
        let mut out = x[..n].to_vec();
        for (k, &j) in free.iter().enumerate() {
            out[j] -= &x[n + k];
        }
        out
    }

    /// Exact check of a rational point, including sign constraints.
    pub fn satisfied_by_rational(&self, x: &[BigRational]) -> bool {
        x.len() == self.num_vars()
            && self.trivially_infeasible.is_none()
            && x.iter().zip(&self.nonnegative).all(|(v, &nn)| !nn || *v >= BigRational::zero())
            && self.equalities.iter().zip(&self.rhs).all(|(row, &b)| {
                let mut s = BigRational::zero();
                for &(j, a) in row {
                    s += &x[j] * BigRational::from_integer(BigInt::from(a));
                }
                s == BigRational::from_integer(BigInt::from(b))
            })
    }

    /// Exact check of an integer point, ignoring sign constraints.
    pub fn satisfied_by_integer(&self, x: &[BigInt]) -> bool {
        x.len() == self.num_vars()
            && self.trivially_infeasible.is_none()
            && lattice::verify(&self.dense_rows(), &self.rhs, x)
    }
}

/// The standard marginal relaxation of instance `x` over template side `a`.
pub fn build_relaxation_system(x: &Structure, a: &Structure, mode: RelaxationMode) -> Result<LinearSystem> {
    x.check_similar(a)?;
    let (nx, na) = (x.domain_size(), a.domain_size());
    let mut names = Vec::new();
    for v in 0..nx {
        for val in 0..na {
            names.push(format!("mu({v},{val})"));
        }
    }
    let mut blocks = Vec::new();
    let mut empty_used = None;
    let mut c = 0;
    for (rx, ra) in x.relations().iter().zip(a.relations()) {
        for scope in rx.tuples() {
            if ra.is_empty() && empty_used.is_none() {
                empty_used = Some(format!("instance uses relation `{}`, which is empty in the template", ra.name()));
            }
            let start = names.len();
            for t in ra.tuples() {
                let t: Vec<String> = t.iter().map(usize::to_string).collect();
                names.push(format!("lambda({c};{})", t.join(",")));
            }
            blocks.push((scope.clone(), ra, start));
            c += 1;
        }
    }
    let mut sys = LinearSystem::new(names, mode == RelaxationMode::Blp);
    sys.trivially_infeasible = empty_used;
    for v in 0..nx {
        sys.add_equality((0..na).map(|val| (v * na + val, 1)).collect(), 1)?;
    }
    for (_, ra, start) in &blocks {
        sys.add_equality((0..ra.len()).map(|k| (start + k, 1)).collect(), 1)?;
    }
    for (scope, ra, start) in &blocks {
        for (i, &v) in scope.iter().enumerate() {
            for val in 0..na {
                let mut row: Vec<(usize, i64)> = ra
                    .tuples()
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t[i] == val)
                    .map(|(k, _)| (start + k, 1))
                    .collect();
                row.push((v * na + val, -1));
                sys.add_equality(row, 0)?;
            }
        }
    }
    Ok(sys)
}

/// A certificate point, printed as exact rationals or integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    Rational(Vec<BigRational>),
    Integer(Vec<BigInt>),
}

impl Serialize for Certificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = match self {
            Certificate::Rational(x) => x.iter().map(|v| v.to_string()).collect(),
            Certificate::Integer(x) => x.iter().map(|v| v.to_string()).collect(),
        };
        v.serialize(s)
    }
}

/// Outcome of a relaxation: accepted with a solution, or rejected with a reason.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelaxationVerdict {
    pub accepted: bool,
    pub certificate: Option<Certificate>,
    pub rejected_reason: Option<String>,
}

impl RelaxationVerdict {
    fn accept(c: Certificate) -> Self {
        RelaxationVerdict { accepted: true, certificate: Some(c), rejected_reason: None }
    }

    fn reject(reason: impl Into<String>) -> Self {
        RelaxationVerdict { accepted: false, certificate: None, rejected_reason: Some(reason.into()) }
    }
}

impl fmt::Display for RelaxationVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rejected_reason {
            None => write!(f, "accepted"),
            Some(r) => write!(f, "rejected: {r}"),
        }
    }
}

/// Rational feasibility of a system (free variables allowed).
pub fn rational_feasible(sys: &LinearSystem) -> RelaxationVerdict {
    if let Some(reason) = &sys.trivially_infeasible {
        return RelaxationVerdict::reject(reason.clone());
    }
    let (lp, free) = sys.to_lp();
    match feasible_point(&lp) {
        LpResult::Optimal(x) => {
            let x = sys.fold_split(&free, x);
            assert!(sys.satisfied_by_rational(&x), "LP point failed re-verification");
            RelaxationVerdict::accept(Certificate::Rational(x))
        }
        LpResult::Infeasible(v) => RelaxationVerdict::reject(format!("phase-1 optimum {v} is positive")),
        LpResult::Unbounded => unreachable!("feasibility objective is zero"),
    }
}

/// Integer feasibility of a system, ignoring sign constraints.
pub fn lattice_feasible(sys: &LinearSystem) -> RelaxationVerdict {
    if let Some(reason) = &sys.trivially_infeasible {
        return RelaxationVerdict::reject(reason.clone());
    }
    match integer_feasible_width(&sys.dense_rows(), &sys.rhs, sys.num_vars()).expect("rows have system width") {
        Some(x) => RelaxationVerdict::accept(Certificate::Integer(x)),
        None => RelaxationVerdict::reject("no integer solution (Hermite normal form divisibility check failed)"),
    }
}

/// BLP: rational feasibility with nonnegative variables.
pub fn solve_blp(x: &Structure, a: &Structure) -> Result<RelaxationVerdict> {
    Ok(rational_feasible(&build_relaxation_system(x, a, RelaxationMode::Blp)?))
}

/// AIP: integer feasibility with variables of any sign.
pub fn solve_aip(x: &Structure, a: &Structure) -> Result<RelaxationVerdict> {
    Ok(lattice_feasible(&build_relaxation_system(x, a, RelaxationMode::Aip)?))
}

/// A feasible point of a nonnegative system whose support is maximal:
/// a variable is zero in the output iff it is zero at every feasible point.
/// `None` when the system is infeasible.
pub fn relative_interior_solution(sys: &LinearSystem) -> Result<Option<Vec<BigRational>>> {
    if sys.nonnegative.iter().any(|&nn| !nn) {
        return Err(invalid("relative interior is computed for systems whose variables are all nonnegative"));
    }
    if sys.trivially_infeasible.is_some() {
        return Ok(None);
    }
    let (lp, _) = sys.to_lp();
    Ok(match simplex::max_support_point(&lp) {
        Ok(x) => {
            assert!(sys.satisfied_by_rational(&x), "relative interior point failed re-verification");
            Some(x)
        }
        Err(_) => None,
    })
}

/// BLP+AIP: BLP feasibility, then integer feasibility with every variable
/// outside the relative-interior support fixed to zero.
pub fn solve_blp_aip(x: &Structure, a: &Structure) -> Result<RelaxationVerdict> {
    let sys = build_relaxation_system(x, a, RelaxationMode::Blp)?;
    if let Some(reason) = &sys.trivially_infeasible {
        return Ok(RelaxationVerdict::reject(reason.clone()));
    }
    let Some(point) = relative_interior_solution(&sys)? else {
        return Ok(RelaxationVerdict::reject("BLP is infeasible"));
    };
    let mut restricted = sys.clone();
    restricted.nonnegative = vec![false; sys.num_vars()];
    for (j, v) in point.iter().enumerate() {
        if v.is_zero() {
            restricted.add_equality(vec![(j, 1)], 0)?;
        }
    }
    let verdict = lattice_feasible(&restricted);
    Ok(match verdict.certificate {
        Some(c) => RelaxationVerdict::accept(c),
        None => RelaxationVerdict::reject(
            "no integer solution supported on the relative interior of the BLP polytope",
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::structure::Relation;

    fn xxx_instance() -> Structure {
        Structure::with_domain_size(1, vec![Relation::new("R", 3, vec![vec![0, 0, 0]]).unwrap()]).unwrap()
    }

    #[test]
    fn system_shape_for_single_repeated_constraint() {
        let sys = build_relaxation_system(&xxx_instance(), &catalog::one_in_three(), RelaxationMode::Blp).unwrap();
        assert_eq!(sys.num_vars(), 2 + 3);
        assert_eq!(sys.equalities.len(), 1 + 1 + 6);
    }

    #[test]
    fn empty_instance_has_only_distribution_rows() {
        let x = Structure::with_domain_size(3, vec![Relation::new("R", 3, vec![]).unwrap()]).unwrap();
        let sys = build_relaxation_system(&x, &catalog::one_in_three(), RelaxationMode::Aip).unwrap();
        assert_eq!(sys.num_vars(), 6);
        assert_eq!(sys.equalities.len(), 3);
    }

    #[test]
    fn repeated_variable_separates_blp_from_aip() {
        let (x, a) = (xxx_instance(), catalog::one_in_three());
        let blp = solve_blp(&x, &a).unwrap();
        assert!(blp.accepted);
        assert!(!solve_aip(&x, &a).unwrap().accepted);
        assert!(!solve_blp_aip(&x, &a).unwrap().accepted);
    }

    #[test]
    fn relative_interior_of_repeated_constraint_is_fully_supported() {
        let sys = build_relaxation_system(&xxx_instance(), &catalog::one_in_three(), RelaxationMode::Blp).unwrap();
        let p = relative_interior_solution(&sys).unwrap().unwrap();
        assert!(p.iter().all(|v| *v > BigRational::zero()));
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(p[2..], [third.clone(), third.clone(), third]);
    }

    #[test]
    fn empty_template_relation_is_trivially_infeasible() {
        let a = Structure::with_domain_size(2, vec![Relation::new("R", 3, vec![]).unwrap()]).unwrap();
        let v = solve_blp(&xxx_instance(), &a).unwrap();
        assert!(!v.accepted);
        assert!(v.rejected_reason.unwrap().contains("empty"));
    }

    #[test]
    fn forced_zero_stays_zero() {
        // mu(0,0) is forced to zero by a unary constraint
        let a = Structure::with_domain_size(2, vec![Relation::new("U", 1, vec![vec![1]]).unwrap()]).unwrap();
        let x = Structure::with_domain_size(1, vec![Relation::new("U", 1, vec![vec![0]]).unwrap()]).unwrap();
        let sys = build_relaxation_system(&x, &a, RelaxationMode::Blp).unwrap();
        let p = relative_interior_solution(&sys).unwrap().unwrap();
        assert!(p[0].is_zero());
    }
}
