//! Obstructions to block-symmetric polymorphisms, and the transformation of
//! block-symmetric tables into alternating ones for a balanced relation.

use super::factored::{FactoredKind, FactoredTable};
use super::freq::bar;
use crate::analysis::BalanceWitness;
use crate::error::{invalid, Error, Result};
use crate::structure::{Structure, Tuple};

/// Certifies that no 2-block-symmetric polymorphism of arity `p + q` with
/// blocks of sizes `split = (p, q)` (first `p` inputs, then `q`) exists:
/// every column of `matrix` is in `R^source`, every row has the same
/// multiset of entries within each block (so every row has the same image),
/// and `R^target` has no constant tuple.
pub fn block_collapse_certificate(
    source: &Structure,
    target: &Structure,
    relation: &str,
    matrix: &[Vec<usize>],
    split: (usize, usize),
) -> Result<bool> {
    source.check_similar(target)?;
    let ra = source.relation(relation).ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
    let rb = target.relation(relation).expect("similar structures share relation names");
    let width = split.0 + split.1;
    if matrix.len() != ra.arity() || matrix.iter().any(|row| row.len() != width) {
        return Err(invalid(format!("matrix must be {} x {width}", ra.arity())));
    }
    if matrix.iter().flatten().any(|&v| v >= source.domain_size()) {
        return Err(invalid("matrix entry outside the source domain"));
    }
    let columns_ok = (0..width).all(|j| ra.contains(&matrix.iter().map(|row| row[j]).collect::<Tuple>()));
    let block = |row: &Vec<usize>, lo: usize, hi: usize| {
        let mut b = row[lo..hi].to_vec();
        b.sort_unstable();
        b
    };
    let rows_agree = matrix.windows(2).all(|w| {
        block(&w[0], 0, split.0) == block(&w[1], 0, split.0) && block(&w[0], split.0, width) == block(&w[1], split.0, width)
    });
    let no_constant = rb.tuples().iter().all(|t| t.windows(2).any(|p| p[0] != p[1]));
    Ok(columns_ok && rows_agree && no_constant)
}

/// Builds the alternating table `f(z) = g(kc, z + kc)` on `S_{k+1} − S_k`
/// from a block-symmetric table `g` on `S_{kN} × S_{kN+1}`, where the
/// witness columns `t_1, …, t_N` give `Σ t̄_i = (c, …, c)`.
pub fn collapse_transform(g: &FactoredTable, witness: &BalanceWitness, k: usize) -> Result<FactoredTable> {
    if g.kind != FactoredKind::BlockSymmetric {
        return Err(invalid("collapse needs a block-symmetric table"));
    }
    let a = g.source_domain;
    let cols = witness.column_tuples();
    let n = cols.len();
    if g.k != k * n {
        return Err(invalid(format!("table has k = {}, expected k·N = {}", g.k, k * n)));
    }
    let r = cols.first().map_or(0, Vec::len);
    let mut v = vec![0i64; r * a];
    for t in &cols {
        if t.iter().any(|&x| x >= a) {
            return Err(invalid("witness tuple outside the table's domain"));
        }
        for (s, x) in v.iter_mut().zip(bar(t, a)) {
            *s += x;
        }
    }
    let c = v[..a].to_vec();
    if v.chunks(a).any(|row| row != c.as_slice()) {
        return Err(invalid("witness columns are not balanced"));
    }
    if let Some(i) = c.iter().position(|&x| x < 1) {
        return Err(invalid(format!("element {i} does not occur in the relation")));
    }
    let kc: Vec<i64> = c.iter().map(|x| x * k as i64).collect();
    FactoredTable::from_fn(FactoredKind::Alternating, k, a, g.target_domain, |z| {
        let y: Vec<i64> = z.iter().zip(&kc).map(|(p, q)| p + q).collect();
        assert!(y.iter().all(|&x| x >= 0), "shifted input has a negative coordinate");
        g.value_at(&[kc.clone(), y].concat()).expect("shifted input lies in S_kN x S_kN+1")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_balanced;
    use crate::catalog;
    use crate::polymorphisms::{is_polymorphism, symmetry_kind, SymmetryKind};

    fn remark_matrix() -> Vec<Vec<usize>> {
        // 0' and 1' are elements 2 and 3 of the union
        let (z, o) = (2, 3);
        vec![
            vec![o, z, z, 1, 0],
            vec![z, o, z, 0, 1],
            vec![z, z, o, 1, 0],
            vec![o, z, z, 0, 1],
            vec![z, o, z, 1, 0],
            vec![z, z, o, 0, 1],
        ]
    }

    #[test]
    fn certificate_fixtures() {
        let b = catalog::remark_4_4_b();
        assert!(block_collapse_certificate(&b, &b, "R", &remark_matrix(), (3, 2)).unwrap());
        let mut broken = remark_matrix();
        broken[0][0] = 4;
        assert!(!block_collapse_certificate(&b, &b, "R", &broken, (3, 2)).unwrap());
        assert!(block_collapse_certificate(&b, &b, "R", &remark_matrix()[..5], (3, 2)).is_err());
        let with_constant = catalog::eqn(3, 0).unwrap();
        let diagonal = vec![vec![0, 1, 2]; 3];
        assert!(!block_collapse_certificate(&with_constant, &with_constant, "R", &diagonal, (2, 1)).unwrap());
    }

    fn parity_block_table(k: usize) -> FactoredTable {
        FactoredTable::from_fn(FactoredKind::BlockSymmetric, k, 2, 2, |xy| ((xy[3] - xy[1]).rem_euclid(2)) as usize).unwrap()
    }

    #[test]
    fn collapse_of_parity_table() {
        let a = catalog::eqn(2, 1).unwrap();
        let w = is_balanced(&a.relations()[0]).unwrap().unwrap();
        assert_eq!(w.columns, 4);
        for k in 0..=2 {
            let g = parity_block_table(k * 4);
            let f = collapse_transform(&g, &w, k).unwrap();
            let op = f.expand().unwrap();
            assert!(is_polymorphism(&op, &a, &a).unwrap());
            assert_eq!(symmetry_kind(&op).kind, SymmetryKind::Alternating);
            let sum = crate::polymorphisms::OperationTable::from_fn(2, 2, 2 * k + 1, |x| x.iter().sum::<usize>() % 2).unwrap();
            assert_eq!(op, sum);
        }
        assert!(collapse_transform(&parity_block_table(3), &w, 1).is_err());
    }
}
