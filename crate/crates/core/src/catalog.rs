//! Named templates.
//!
//! Keys are plain names (`one_in_three`) or names with integer parameters
//! (`eqn(3,1)`); see [`ENTRIES`].

use crate::error::{invalid, Error, Result};
use crate::structure::{disjoint_union, Relation, Structure, Tuple};

/// A catalog key with its parameter names.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub key: &'static str,
    pub params: &'static [&'static str],
    pub description: &'static str,
}

pub const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry { key: "one_in_three", params: &[], description: "({0,1}; tuples with exactly one 1), arity 3" },
    CatalogEntry { key: "q_in_r", params: &["q", "r"], description: "r-tuples over {0,1} with exactly q ones" },
    CatalogEntry { key: "nae", params: &[], description: "not-all-equal triples over {0,1}" },
    CatalogEntry { key: "eqn", params: &["m", "c"], description: "x + y + z = c over Z_m" },
    CatalogEntry {
        key: "cyclic_plus",
        params: &["k"],
        description: "symmetric closure of (1,1,2), ..., (k,k,1) plus all triples of distinct elements",
    },
    CatalogEntry { key: "remark_4_4_a1", params: &[], description: "x1 + ... + x6 = 1 mod 2 over {0,1}" },
    CatalogEntry { key: "remark_4_4_a2", params: &[], description: "x1 + ... + x6 = 2 mod 3 over {0',1',2'}" },
    CatalogEntry { key: "remark_4_4_b", params: &[], description: "disjoint union of remark_4_4_a1 and remark_4_4_a2" },
    CatalogEntry { key: "remark_5_1", params: &[], description: "R = {(0)}, Q = {(0,1),(1,0),(1,1)} over {0,1}" },
    CatalogEntry { key: "remark_5_2", params: &[], description: "S = {(0,0,1),(0,1,0),(0,1,1)} over {0,1}" },
    CatalogEntry { key: "remark_5_3", params: &[], description: "P = {(0,1)} over {0,1}" },
];

fn single(a: usize, name: &str, arity: usize, tuples: Vec<Tuple>) -> Structure {
    Structure::with_domain_size(a, vec![Relation::new(name, arity, tuples).expect("valid arity")])
        .expect("catalog tuples are in range")
}

/// All tuples of length `r` over `0..a`, in lexicographic order.
pub(crate) fn all_tuples(a: usize, r: usize) -> Vec<Tuple> {
    let total = a.checked_pow(r as u32).expect("tuple space fits in memory");
    (0..total)
        .map(|mut idx| {
            let mut t = vec![0; r];
            for slot in t.iter_mut().rev() {
                *slot = idx % a;
                idx /= a;
            }
            t
        })
        .collect()
}

pub fn one_in_three() -> Structure {
    single(2, "R", 3, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]])
}

pub fn q_in_r(q: usize, r: usize) -> Result<Structure> {
    if r == 0 || q > r || r > 20 {
        return Err(invalid(format!("q_in_r needs 0 <= q <= r and 1 <= r <= 20, got ({q},{r})")));
    }
    let tuples = all_tuples(2, r).into_iter().filter(|t| t.iter().sum::<usize>() == q).collect();
    Ok(single(2, "R", r, tuples))
}

pub fn nae() -> Structure {
    let tuples = all_tuples(2, 3).into_iter().filter(|t| !(t[0] == t[1] && t[1] == t[2])).collect();
    single(2, "R", 3, tuples)
}

pub fn eqn(m: usize, c: usize) -> Result<Structure> {
    if m == 0 || c >= m || m > 1000 {
        return Err(invalid(format!("eqn needs 1 <= m <= 1000 and 0 <= c < m, got ({m},{c})")));
    }
    let tuples = all_tuples(m, 3).into_iter().filter(|t| t.iter().sum::<usize>() % m == c).collect();
    Ok(single(m, "R", 3, tuples))
}

pub fn cyclic_plus(k: usize) -> Result<Structure> {
    if !(2..=100).contains(&k) {
        return Err(invalid(format!("cyclic_plus needs 2 <= k <= 100, got {k}")));
    }
    let tuples: Vec<Tuple> = all_tuples(k, 3)
        .into_iter()
        .filter(|t| {
            let rainbow = t[0] != t[1] && t[1] != t[2] && t[0] != t[2];
            let mut s = t.clone();
            s.sort_unstable();
            // sorted form of a permutation of (i, i, i+1 mod k)
            let cyc = (s[0] == s[1] && s[2] == (s[0] + 1) % k) || (s[1] == s[2] && s[0] == (s[1] + 1) % k);
            rainbow || cyc
        })
        .collect();
    let labels = (1..=k).map(|i| i.to_string()).collect();
    Ok(Structure::new(labels, vec![Relation::new("R", 3, tuples).expect("arity 3")]).expect("in range"))
}

pub fn remark_4_4_a1() -> Structure {
    let tuples = all_tuples(2, 6).into_iter().filter(|t| t.iter().sum::<usize>() % 2 == 1).collect();
    single(2, "R", 6, tuples)
}

pub fn remark_4_4_a2() -> Structure {
    let tuples: Vec<Tuple> = all_tuples(3, 6).into_iter().filter(|t| t.iter().sum::<usize>() % 3 == 2).collect();
    let labels = vec!["0'".to_string(), "1'".to_string(), "2'".to_string()];
    Structure::new(labels, vec![Relation::new("R", 6, tuples).expect("arity 6")]).expect("in range")
}

pub fn remark_4_4_b() -> Structure {
    disjoint_union(&remark_4_4_a1(), &remark_4_4_a2()).expect("same signature")
}

pub fn remark_5_1() -> Structure {
    Structure::with_domain_size(
        2,
        vec![
            Relation::new("R", 1, vec![vec![0]]).expect("arity 1"),
            Relation::new("Q", 2, vec![vec![0, 1], vec![1, 0], vec![1, 1]]).expect("arity 2"),
        ],
    )
    .expect("in range")
}

pub fn remark_5_2() -> Structure {
    single(2, "S", 3, vec![vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1]])
}

pub fn remark_5_3() -> Structure {
    single(2, "P", 2, vec![vec![0, 1]])
}

/// Looks up a catalog entry by key and parameters.
pub fn catalog_get(key: &str, params: &[usize]) -> Result<Structure> {
    let entry = ENTRIES.iter().find(|e| e.key == key).ok_or_else(|| Error::UnknownKey(key.to_string()))?;
    if params.len() != entry.params.len() {
        return Err(invalid(format!(
            "`{key}` takes {} parameter(s) ({}), got {}",
            entry.params.len(),
            entry.params.join(", "),
            params.len()
        )));
    }
    match key {
        "one_in_three" => Ok(one_in_three()),
        "q_in_r" => q_in_r(params[0], params[1]),
        "nae" => Ok(nae()),
        "eqn" => eqn(params[0], params[1]),
        "cyclic_plus" => cyclic_plus(params[0]),
        "remark_4_4_a1" => Ok(remark_4_4_a1()),
        "remark_4_4_a2" => Ok(remark_4_4_a2()),
        "remark_4_4_b" => Ok(remark_4_4_b()),
        "remark_5_1" => Ok(remark_5_1()),
        "remark_5_2" => Ok(remark_5_2()),
        "remark_5_3" => Ok(remark_5_3()),
        _ => unreachable!("every entry is dispatched"),
    }
}

/// Parses `name` or `name(p1,p2,...)` and looks it up.
pub fn lookup(spec: &str) -> Result<Structure> {
    let spec = spec.trim();
    let (key, params) = match spec.find('(') {
        None => (spec, Vec::new()),
        Some(open) => {
            let inner = spec[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| invalid(format!("malformed catalog key `{spec}`")))?;
            let params = inner
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|_| invalid(format!("bad parameter `{p}` in `{spec}`"))))
                .collect::<Result<Vec<_>>>()?;
            (&spec[..open], params)
        }
    };
    catalog_get(key, &params)
}

/// True if `spec` names a catalog entry (parameters are not validated).
pub fn is_catalog_key(spec: &str) -> bool {
    let key = spec.split('(').next().unwrap_or("").trim();
    ENTRIES.iter().any(|e| e.key == key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_definitions() {
        assert_eq!(one_in_three().relations()[0].len(), 3);
        assert_eq!(eqn(3, 1).unwrap().relations()[0].len(), 9);
        assert_eq!(nae().relations()[0].len(), 6);
        let c4 = cyclic_plus(4).unwrap();
        assert_eq!(c4.domain_size(), 4);
        assert_eq!(c4.relations()[0].len(), 12 + 24);
        let b = remark_4_4_b();
        assert_eq!(b.domain_size(), 5);
        assert_eq!(b.relations()[0].len(), 32 + 243);
    }

    #[test]
    fn q_in_r_one_three_is_one_in_three() {
        assert_eq!(q_in_r(1, 3).unwrap(), one_in_three());
    }

    #[test]
    fn lookup_parses_parameters() {
        assert_eq!(lookup("eqn(3,1)").unwrap(), eqn(3, 1).unwrap());
        assert_eq!(lookup(" eqn( 2 , 1 ) ").unwrap(), eqn(2, 1).unwrap());
        assert!(matches!(lookup("nope"), Err(Error::UnknownKey(_))));
        assert!(lookup("eqn(3)").is_err());
        assert!(lookup("eqn(3,5)").is_err());
        assert!(lookup("eqn(3,1").is_err());
        assert!(is_catalog_key("cyclic_plus(4)"));
    }

    #[test]
    fn every_entry_round_trips_through_json() {
        for key in ["one_in_three", "q_in_r(2,4)", "nae", "eqn(4,3)", "cyclic_plus(5)", "remark_4_4_b", "remark_5_1", "remark_5_2", "remark_5_3"] {
            let s = lookup(key).unwrap();
            assert_eq!(Structure::from_json(&s.to_json()).unwrap(), s, "{key}");
        }
    }
}
