//! Integer solutions of `M x = b` via column Hermite normal form.

use num_bigint::BigInt;
use num_traits::Zero;

use super::exact::{with_fallback, Checked, ExactInt};
use crate::error::{invalid, Result};

/// Solves `M x = b` over the integers.
///
/// Singleton rows are eliminated first; the rest is brought to lower
/// echelon form `M U = H` by unimodular column operations, after which
/// `H y = b` is solved by forward substitution with divisibility checks and
/// `x = U y`. The returned point is re-verified exactly.
pub fn integer_feasible(m: &[Vec<i64>], b: &[i64]) -> Result<Option<Vec<BigInt>>> {
    integer_feasible_width(m, b, m.first().map_or(0, Vec::len))
}

/// As [`integer_feasible`], with the number of unknowns given explicitly so
/// that systems without rows still have a width.
pub(crate) fn integer_feasible_width(m: &[Vec<i64>], b: &[i64], n: usize) -> Result<Option<Vec<BigInt>>> {
    if m.len() != b.len() {
        return Err(invalid(format!("matrix has {} rows but right-hand side has {}", m.len(), b.len())));
    }
    if m.iter().any(|row| row.len() != n) {
        return Err(invalid(format!("matrix rows must all have length {n}")));
    }
    let x = with_fallback(|| solve::<i128>(m, b, n), || solve::<BigInt>(m, b, n));
    if let Some(x) = &x {
        assert!(verify(m, b, x), "integer solution failed re-verification");
    }
    Ok(x)
}

/// Exact check of `M x = b`.
pub fn verify(m: &[Vec<i64>], b: &[i64], x: &[BigInt]) -> bool {
    m.iter().zip(b).all(|(row, &bi)| {
        let mut s = <BigInt as Zero>::zero();
        for (&a, v) in row.iter().zip(x) {
            if a != 0 {
                s += v * a;
            }
        }
        s == BigInt::from(bi)
    })
}

fn solve<T: ExactInt>(m: &[Vec<i64>], b: &[i64], n: usize) -> Checked<Option<Vec<BigInt>>> {
    let rows = m.len();
    let mut fixed: Vec<Option<T>> = vec![None; n];
    let mut rhs: Vec<T> = b.iter().map(|&v| T::from_i64(v)).collect();
    let mut row_alive = vec![true; rows];

    // eliminate rows with a single free variable
    loop {
        let mut progress = false;
        for i in 0..rows {
            if !row_alive[i] {
                continue;
            }
            let mut free = (0..n).filter(|&j| m[i][j] != 0 && fixed[j].is_none());
            match (free.next(), free.next()) {
                (None, _) => {
                    if !rhs[i].is_zero() {
                        return Ok(None);
                    }
                    row_alive[i] = false;
                }
                (Some(j), None) => {
                    let c = T::from_i64(m[i][j]);
                    let q = rhs[i].div_floor(&c);
                    if q.mul(&c)? != rhs[i] {
                        return Ok(None);
                    }
                    for k in 0..rows {
                        if row_alive[k] && m[k][j] != 0 {
                            rhs[k] = rhs[k].sub(&T::from_i64(m[k][j]).mul(&q)?)?;
                        }
                    }
                    fixed[j] = Some(q);
                    row_alive[i] = false;
                    progress = true;
                }
                _ => {}
            }
        }
        if !progress {
            break;
        }
    }

    let live_rows: Vec<usize> = (0..rows).filter(|&i| row_alive[i]).collect();
    let free_cols: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
    let (r, c) = (live_rows.len(), free_cols.len());
    // column-major copies of the reduced matrix and the transform
    let mut h: Vec<Vec<T>> = free_cols
        .iter()
        .map(|&j| live_rows.iter().map(|&i| T::from_i64(m[i][j])).collect())
        .collect();
    let mut u: Vec<Vec<T>> = (0..c).map(|j| (0..c).map(|k| if j == k { T::one() } else { T::zero() }).collect()).collect();

    let mut pivot_of_row: Vec<Option<usize>> = vec![None; r];
    let mut k = 0;
    for i in 0..r {
        if k == c {
            break;
        }
        for j in k + 1..c {
            if h[j][i].is_zero() {
                continue;
            }
            if h[k][i].is_zero() {
                h.swap(k, j);
                u.swap(k, j);
                continue;
            }
            let (a, bb) = (h[k][i].clone(), h[j][i].clone());
            let (g, s, t) = T::ext_gcd(&a, &bb)?;
            let (fa, fb) = (a.div_exact(&g), bb.div_exact(&g));
            combine(&mut h, k, j, &s, &t, &fb, &fa, i)?;
            combine(&mut u, k, j, &s, &t, &fb, &fa, 0)?;
        }
        if h[k][i].is_zero() {
            continue;
        }
        if h[k][i].signum() < 0 {
            negate(&mut h[k], i)?;
            negate(&mut u[k], 0)?;
        }
        // reduce the entries left of the pivot into [0, pivot)
        for l in 0..k {
            let q = h[l][i].div_floor(&h[k][i]);
            if !q.is_zero() {
                axpy(&mut h, l, k, &q, i)?;
                axpy(&mut u, l, k, &q, 0)?;
            }
        }
        pivot_of_row[i] = Some(k);
        k += 1;
    }

    // forward substitution on H y = rhs
    let mut y: Vec<T> = vec![T::zero(); c];
    for (ii, &i) in live_rows.iter().enumerate() {
        let mut v = rhs[i].clone();
        let limit = pivot_of_row[..ii].iter().flatten().count();
        for (l, yl) in y.iter().enumerate().take(limit) {
            if !yl.is_zero() && !h[l][ii].is_zero() {
                v = v.sub(&h[l][ii].mul(yl)?)?;
            }
        }
        match pivot_of_row[ii] {
            Some(p) => {
                let q = v.div_floor(&h[p][ii]);
                if q.mul(&h[p][ii])? != v {
                    return Ok(None);
                }
                y[p] = q;
            }
            None => {
                if !v.is_zero() {
                    return Ok(None);
                }
            }
        }
    }

    let mut x: Vec<BigInt> = vec![<BigInt as Zero>::zero(); n];
    for (j, f) in fixed.iter().enumerate() {
        if let Some(v) = f {
            x[j] = v.to_big();
        }
    }
    for (jj, &j) in free_cols.iter().enumerate() {
        let mut v = T::zero();
        for (l, yl) in y.iter().enumerate() {
            if !yl.is_zero() && !u[l][jj].is_zero() {
                v = v.add(&u[l][jj].mul(yl)?)?;
            }
        }
        x[j] = v.to_big();
    }
    Ok(Some(x))
}

/// `(col_k, col_j) ← (s·col_k + t·col_j, −fb·col_k + fa·col_j)` on entries `from..`.
#[allow(clippy::too_many_arguments)]
fn combine<T: ExactInt>(cols: &mut [Vec<T>], k: usize, j: usize, s: &T, t: &T, fb: &T, fa: &T, from: usize) -> Checked<()> {
    let (lo, hi) = cols.split_at_mut(j);
    let (ck, cj) = (&mut lo[k], &mut hi[0]);
    for idx in from..ck.len() {
        let (x, y) = (&ck[idx], &cj[idx]);
        if x.is_zero() && y.is_zero() {
            continue;
        }
        let nk = s.mul(x)?.add(&t.mul(y)?)?;
        let nj = fa.mul(y)?.sub(&fb.mul(x)?)?;
        ck[idx] = nk;
        cj[idx] = nj;
    }
    Ok(())
}

/// `col_l ← col_l − q·col_k` on entries `from..`.
fn axpy<T: ExactInt>(cols: &mut [Vec<T>], l: usize, k: usize, q: &T, from: usize) -> Checked<()> {
    let (lo, hi) = cols.split_at_mut(k);
    let (cl, ck) = (&mut lo[l], &hi[0]);
    for idx in from..cl.len() {
        if !ck[idx].is_zero() {
            cl[idx] = cl[idx].sub(&q.mul(&ck[idx])?)?;
        }
    }
    Ok(())
}

fn negate<T: ExactInt>(col: &mut [T], from: usize) -> Checked<()> {
    for v in col[from..].iter_mut() {
        *v = v.neg()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn divisibility_decides_a_single_equation() {
        assert_eq!(integer_feasible(&[vec![3]], &[1]).unwrap(), None);
        let x = integer_feasible(&[vec![2, 3]], &[1]).unwrap().unwrap();
        assert!(verify(&[vec![2, 3]], &[1], &x));
    }

    #[test]
    fn identity_returns_right_hand_side() {
        let m = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert_eq!(integer_feasible(&m, &[4, -2, 7]).unwrap(), Some(big(&[4, -2, 7])));
    }

    #[test]
    fn inconsistent_dependent_rows_are_rejected() {
        let m = vec![vec![2, 4, 6], vec![1, 2, 3]];
        assert_eq!(integer_feasible(&m, &[2, 2]).unwrap(), None);
        assert!(integer_feasible(&m, &[4, 2]).unwrap().is_some());
    }

    #[test]
    fn lattice_without_unimodular_rows() {
        // 2x + 4y = 6 and 3x + 9z = 3 over Z
        let m = vec![vec![2, 4, 0], vec![3, 0, 9]];
        let x = integer_feasible(&m, &[6, 3]).unwrap().unwrap();
        assert!(verify(&m, &[6, 3], &x));
        assert_eq!(integer_feasible(&m, &[6, 4]).unwrap(), None);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(integer_feasible(&[vec![1, 2]], &[1, 2]).is_err());
        assert!(integer_feasible(&[vec![1, 2], vec![1]], &[1, 2]).is_err());
    }

    #[test]
    fn empty_system_is_feasible() {
        assert_eq!(integer_feasible(&[], &[]).unwrap(), Some(vec![]));
    }
}
