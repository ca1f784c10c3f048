//! Random instances with a planted solution.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::structure::{Homomorphism, Relation, Structure};

/// An instance `X` together with the hidden map `X → A` it was built around.
#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub instance: Structure,
    pub planted: Homomorphism,
}

/// Draws `constraints` constraints over `variables` elements.
///
/// A hidden assignment covering every element of `A` (as far as the
/// variable count allows) is fixed first; each constraint then picks a
/// nonempty relation and a tuple `t` of it, and fills position `i` with a
/// random variable assigned `t_i`, or with a fresh one if there is none.
pub fn planted_instance(a: &Structure, variables: usize, constraints: usize, rng: &mut impl Rng) -> Result<PlantedInstance> {
    let nonempty: Vec<usize> = (0..a.relations().len()).filter(|&i| !a.relations()[i].is_empty()).collect();
    if a.domain_size() == 0 || variables == 0 {
        return Err(invalid("planted instances need a nonempty domain and at least one variable"));
    }
    if constraints > 0 && nonempty.is_empty() {
        return Err(invalid("every relation of A is empty"));
    }
    let mut assignment: Vec<usize> = (0..variables).map(|i| if i < a.domain_size() { i } else { rng.gen_range(0..a.domain_size()) }).collect();
    assignment.shuffle(rng);
    let mut by_value: Vec<Vec<usize>> = vec![Vec::new(); a.domain_size()];
    for (x, &v) in assignment.iter().enumerate() {
        by_value[v].push(x);
    }
    let mut tuples: Vec<Vec<Vec<usize>>> = vec![Vec::new(); a.relations().len()];
    for _ in 0..constraints {
        let ri = *nonempty.choose(rng).expect("nonempty");
        let t = a.relations()[ri].tuples().choose(rng).expect("nonempty relation");
        let scope = t
            .iter()
            .map(|&v| match by_value[v].choose(rng) {
                Some(&x) => x,
                None => {
                    assignment.push(v);
                    by_value[v].push(assignment.len() - 1);
                    assignment.len() - 1
                }
            })
            .collect();
        tuples[ri].push(scope);
    }
    let relations = a
        .relations()
        .iter()
        .zip(tuples)
        .map(|(r, ts)| Relation::new(r.name(), r.arity(), ts))
        .collect::<Result<Vec<_>>>()?;
    Ok(PlantedInstance { instance: Structure::with_domain_size(assignment.len(), relations)?, planted: Homomorphism(assignment) })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::catalog;
    use crate::structure::is_homomorphism;

    #[test]
    fn planted_map_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for key in ["one_in_three", "nae", "eqn(3,1)", "remark_5_1", "remark_4_4_b"] {
            let a = catalog::lookup(key).unwrap();
            for _ in 0..20 {
                let p = planted_instance(&a, 12, 20, &mut rng).unwrap();
                assert!(is_homomorphism(&p.planted, &p.instance, &a).unwrap());
            }
        }
    }
}
