//! Exact primal simplex on `A x = b, x ≥ 0` with Bland's rule.
//!
//! The tableau is kept fraction-free: each row is stored as a primitive
//! integer vector whose true value is the vector divided by its entry in the
//! basic column. A pivot only touches rows with a nonzero entry in the
//! entering column, which keeps sparse programs cheap.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::exact::{with_fallback, Checked, ExactInt};

/// A linear program in equality form with nonnegative variables.
#[derive(Clone, Debug)]
pub(crate) struct Lp {
    pub rows: Vec<Vec<i64>>,
    pub rhs: Vec<i64>,
    pub num_vars: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpResult {
    /// Minimum of the phase-1 objective (sum of artificials), which is positive.
    Infeasible(BigRational),
    Optimal(Vec<BigRational>),
    Unbounded,
}

struct Tableau<T> {
    ncols: usize,
    /// Row `i` is a primitive integer multiple of its true row; the entry in
    /// column `basis[i]` is positive and all other basic columns are zero.
    rows: Vec<Vec<T>>,
    /// Reduced costs are `obj[j] / obj_den`.
    obj: Vec<T>,
    obj_den: T,
    basis: Vec<usize>,
}

enum Step {
    Optimal,
    /// Entering column along which the objective decreases without bound.
    Unbounded(usize),
}

/// Divides `v` (and `extra`) by the gcd of all their entries.
fn make_primitive<T: ExactInt>(v: &mut [T], extra: Option<&mut T>) -> Checked<()> {
    let mut g = match &extra {
        Some(e) => (*e).clone(),
        None => T::zero(),
    };
    let one = T::one();
    for x in v.iter() {
        if !x.is_zero() {
            g = T::gcd(&g, x)?;
            if g == one {
                return Ok(());
            }
        }
    }
    if g.is_zero() || g == one {
        return Ok(());
    }
    for x in v.iter_mut() {
        if !x.is_zero() {
            *x = x.div_exact(&g);
        }
    }
    if let Some(e) = extra {
        *e = e.div_exact(&g);
    }
    Ok(())
}

/// `row = row * p - f * pr`.
fn eliminate<T: ExactInt>(row: &mut [T], p: &T, f: &T, pr: &[T]) -> Checked<()> {
    for (x, y) in row.iter_mut().zip(pr) {
        *x = if y.is_zero() {
            if x.is_zero() {
                continue;
            }
            x.mul(p)?
        } else {
            x.mul(p)?.sub(&f.mul(y)?)?
        };
    }
    Ok(())
}

impl<T: ExactInt> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) -> Checked<()> {
        let p = self.rows[r][c].clone();
        debug_assert!(p.signum() > 0);
        let pr = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            let f = row[c].clone();
            if i == r || f.is_zero() {
                continue;
            }
            eliminate(row, &p, &f, &pr)?;
            make_primitive(row, None)?;
        }
        let f = self.obj[c].clone();
        if !f.is_zero() {
            eliminate(&mut self.obj, &p, &f, &pr)?;
            self.obj_den = self.obj_den.mul(&p)?;
            make_primitive(&mut self.obj, Some(&mut self.obj_den))?;
        }
        self.basis[r] = c;
        Ok(())
    }

    /// Bland's rule until optimal or unbounded.
    fn optimize(&mut self, allowed: usize) -> Checked<Step> {
        let rhs = self.ncols;
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j].signum() < 0) else {
                return Ok(Step::Optimal);
            };
            let mut best: Option<usize> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][c].signum() <= 0 {
                    continue;
                }
                best = Some(match best {
                    None => i,
                    Some(k) => {
                        let lhs = self.rows[i][rhs].mul(&self.rows[k][c])?;
                        let rhs_ = self.rows[k][rhs].mul(&self.rows[i][c])?;
                        if lhs < rhs_ || (lhs == rhs_ && self.basis[i] < self.basis[k]) {
                            i
                        } else {
                            k
                        }
                    }
                });
            }
            match best {
                None => return Ok(Step::Unbounded(c)),
                Some(r) => self.pivot(r, c)?,
            }
        }
    }

    fn set_objective(&mut self, c: &[i64]) -> Checked<()> {
        let mut obj: Vec<T> = (0..=self.ncols)
            .map(|j| if j < self.ncols { T::from_i64(c[j]) } else { T::zero() })
            .collect();
        let mut den = T::one();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = c[self.basis[i]];
            if cb == 0 {
                continue;
            }
            // obj/den - cb * row/row[b]
            let f = T::from_i64(cb).mul(&den)?;
            let p = row[self.basis[i]].clone();
            eliminate(&mut obj, &p, &f, row)?;
            den = den.mul(&p)?;
            make_primitive(&mut obj, Some(&mut den))?;
        }
        self.obj = obj;
        self.obj_den = den;
        Ok(())
    }

    fn point(&self) -> Vec<BigRational> {
        let mut x = vec![BigRational::zero(); self.ncols];
        for (i, row) in self.rows.iter().enumerate() {
            let b = self.basis[i];
            x[b] = BigRational::new(row[self.ncols].to_big(), row[b].to_big());
        }
        x
    }

    /// The feasible point one unit along the ray of entering column `c`.
    fn ray_point(&self, c: usize) -> Vec<BigRational> {
        let mut x = self.point();
        x[c] += BigRational::from_integer(BigInt::from(1));
        for (i, row) in self.rows.iter().enumerate() {
            let b = self.basis[i];
            x[b] -= BigRational::new(row[c].to_big(), row[b].to_big());
        }
        x
    }

    /// Looks for unseen nonbasic columns that can enter the basis with a
    /// positive step. Each such column is marked seen, and the average of the
    /// steps taken from the current vertex is returned.
    fn sweep(&self, seen: &mut [bool]) -> Checked<Option<Vec<BigRational>>> {
        let rhs = self.ncols;
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        let mut steps: Vec<(usize, BigRational)> = Vec::new();
        for j in 0..self.ncols {
            if seen[j] || is_basic[j] {
                continue;
            }
            // ratio test without pivoting; a zero ratio means the step is degenerate
            let mut best: Option<usize> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j].signum() <= 0 {
                    continue;
                }
                best = Some(match best {
                    None => i,
                    Some(k) => {
                        let lhs = row[rhs].mul(&self.rows[k][j])?;
                        if lhs < self.rows[k][rhs].mul(&row[j])? {
                            i
                        } else {
                            k
                        }
                    }
                });
            }
            let theta = match best {
                None => BigRational::from_integer(BigInt::from(1)),
                Some(k) if self.rows[k][rhs].is_zero() => continue,
                Some(k) => BigRational::new(self.rows[k][rhs].to_big(), self.rows[k][j].to_big()),
            };
            seen[j] = true;
            steps.push((j, theta));
        }
        if steps.is_empty() {
            return Ok(None);
        }
        let mut x = self.point();
        let count = BigRational::from_integer(BigInt::from(steps.len()));
        for (j, theta) in steps {
            let t = theta / count.clone();
            for (i, row) in self.rows.iter().enumerate() {
                if !row[j].is_zero() {
                    let b = self.basis[i];
                    x[b] -= t.clone() * BigRational::new(row[j].to_big(), row[b].to_big());
                }
            }
            x[j] += t;
        }
        Ok(Some(x))
    }

    /// Phase 1. Returns the tableau over the structural columns only, or the
    /// positive phase-1 optimum.
    fn phase_one(lp: &Lp) -> Checked<std::result::Result<Tableau<T>, BigRational>> {
        let n = lp.num_vars;
        let m = lp.rows.len();
        let ncols = n + m;
        let mut rows = Vec::with_capacity(m);
        for (i, (row, &b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
            let sign = if b < 0 { -1 } else { 1 };
            let mut r: Vec<T> = Vec::with_capacity(ncols + 1);
            r.extend(row.iter().map(|&v| T::from_i64(sign * v)));
            r.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
            r.push(T::from_i64(sign * b));
            rows.push(r);
        }
        let mut obj = vec![T::zero(); ncols + 1];
        for row in &rows {
            for j in (0..n).chain([ncols]) {
                obj[j] = obj[j].sub(&row[j])?;
            }
        }
        let mut t = Tableau { ncols, rows, obj, obj_den: T::one(), basis: (n..n + m).collect() };
        t.optimize(n)?;
        if !t.obj[ncols].is_zero() {
            let value = BigRational::new(-t.obj[ncols].to_big(), t.obj_den.to_big());
            return Ok(Err(value));
        }
        // drive artificials out of the basis, dropping redundant rows
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] < n {
                r += 1;
                continue;
            }
            match (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                Some(c) => {
                    // the right-hand side is zero here, so flipping the row is harmless
                    if t.rows[r][c].signum() < 0 {
                        for x in t.rows[r].iter_mut() {
                            *x = x.neg()?;
                        }
                    }
                    t.pivot(r, c)?;
                    r += 1;
                }
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                }
            }
        }
        for row in t.rows.iter_mut() {
            let rhs = row[ncols].clone();
            row.truncate(n);
            row.push(rhs);
        }
        t.ncols = n;
        t.obj = vec![T::zero(); n + 1];
        t.obj_den = T::one();
        Ok(Ok(t))
    }
}

fn minimize_generic<T: ExactInt>(lp: &Lp, c: &[i64]) -> Checked<LpResult> {
    let mut t = match Tableau::<T>::phase_one(lp)? {
        Ok(t) => t,
        Err(v) => return Ok(LpResult::Infeasible(v)),
    };
    t.set_objective(c)?;
    Ok(match t.optimize(t.ncols)? {
        Step::Optimal => LpResult::Optimal(t.point()),
        Step::Unbounded(_) => LpResult::Unbounded,
    })
}

/// Minimizes `c·x` over the feasible region.
pub(crate) fn minimize(lp: &Lp, c: &[i64]) -> LpResult {
    with_fallback(
        || minimize_generic::<i64>(lp, c),
        || Ok(with_fallback(|| minimize_generic::<i128>(lp, c), || minimize_generic::<BigInt>(lp, c))),
    )
}

/// A basic feasible point, or the positive phase-1 optimum.
pub(crate) fn feasible_point(lp: &Lp) -> LpResult {
    minimize(lp, &vec![0; lp.num_vars])
}

fn max_support_generic<T: ExactInt>(lp: &Lp) -> Checked<std::result::Result<Vec<BigRational>, BigRational>> {
    let mut t = match Tableau::<T>::phase_one(lp)? {
        Ok(t) => t,
        Err(v) => return Ok(Err(v)),
    };
    let n = t.ncols;
    let mut points = vec![t.point()];
    let mut positive: Vec<bool> = points[0].iter().map(|v| !v.is_zero()).collect();
    loop {
        if let Some(q) = t.sweep(&mut positive)? {
            points.push(q);
        }
        // maximize the sum of the coordinates not yet seen positive; an
        // optimum of zero proves all of them vanish on the feasible set
        let c: Vec<i64> = positive.iter().map(|&p| if p { 0 } else { -1 }).collect();
        if c.iter().all(|&v| v == 0) {
            break;
        }
        t.set_objective(&c)?;
        let p = match t.optimize(n)? {
            Step::Optimal => t.point(),
            Step::Unbounded(e) => t.ray_point(e),
        };
        if !p.iter().zip(&positive).any(|(v, &seen)| !seen && !v.is_zero()) {
            break;
        }
        for (k, v) in p.iter().enumerate() {
            positive[k] |= !v.is_zero();
        }
        points.push(p);
    }
    let count = BigRational::from_integer(BigInt::from(points.len()));
    let mut avg = vec![BigRational::zero(); n];
    for p in &points {
        for (a, v) in avg.iter_mut().zip(p) {
            *a += v;
        }
    }
    for a in avg.iter_mut() {
        *a /= count.clone();
    }
    Ok(Ok(avg))
}

/// A feasible point whose support is maximal: a coordinate is zero iff it
/// is zero at every feasible point. Nondegenerate entering steps at the
/// current vertex reveal coordinates cheaply; the rest come from maximizing
/// the sum of the coordinates not yet seen positive until it is zero. The
/// result averages the points that revealed new positive coordinates.
pub(crate) fn max_support_point(lp: &Lp) -> std::result::Result<Vec<BigRational>, BigRational> {
    with_fallback(
        || max_support_generic::<i64>(lp),
        || Ok(with_fallback(|| max_support_generic::<i128>(lp), || max_support_generic::<BigInt>(lp))),
    )
}

/// Exact check of `A x = b, x ≥ 0`.
#[cfg(test)]
pub(crate) fn satisfies(lp: &Lp, x: &[BigRational]) -> bool {
    x.len() == lp.num_vars
        && x.iter().all(|v| *v >= BigRational::zero())
        && lp.rows.iter().zip(&lp.rhs).all(|(row, &b)| {
            let mut s = BigRational::zero();
            for (&a, v) in row.iter().zip(x) {
                if a != 0 {
                    s += v * BigRational::from_integer(BigInt::from(a));
                }
            }
            s == BigRational::from_integer(BigInt::from(b))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn solves_a_small_program() {
        // x + y = 4, x - y = 2
        let lp = Lp { rows: vec![vec![1, 1], vec![1, -1]], rhs: vec![4, 2], num_vars: 2 };
        assert_eq!(feasible_point(&lp), LpResult::Optimal(vec![r(3, 1), r(1, 1)]));
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1, x + y = 2
        let lp = Lp { rows: vec![vec![1, 1], vec![1, 1]], rhs: vec![1, 2], num_vars: 2 };
        assert!(matches!(feasible_point(&lp), LpResult::Infeasible(_)));
        // x - y = -1 with x, y >= 0 is feasible
        let lp = Lp { rows: vec![vec![1, -1]], rhs: vec![-1], num_vars: 2 };
        assert!(matches!(feasible_point(&lp), LpResult::Optimal(_)));
    }

    #[test]
    fn minimizes_and_reports_unbounded() {
        // x - y = 0, minimize -x
        let lp = Lp { rows: vec![vec![1, -1]], rhs: vec![0], num_vars: 2 };
        assert_eq!(minimize(&lp, &[-1, 0]), LpResult::Unbounded);
        // 2x + 3y = 6, minimize x
        let lp = Lp { rows: vec![vec![2, 3]], rhs: vec![6], num_vars: 2 };
        assert_eq!(minimize(&lp, &[1, 0]), LpResult::Optimal(vec![r(0, 1), r(2, 1)]));
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let lp = Lp { rows: vec![vec![1, 1, 0], vec![2, 2, 0], vec![0, 0, 1]], rhs: vec![1, 2, 0], num_vars: 3 };
        let LpResult::Optimal(x) = feasible_point(&lp) else { panic!() };
        assert!(satisfies(&lp, &x));
    }

    #[test]
    fn max_support_finds_every_free_coordinate() {
        // x + y + z = 1, z = 0: x and y can both be positive
        let lp = Lp { rows: vec![vec![1, 1, 1], vec![0, 0, 1]], rhs: vec![1, 0], num_vars: 3 };
        let x = max_support_point(&lp).unwrap();
        assert!(satisfies(&lp, &x));
        assert!(x[0] > BigRational::zero() && x[1] > BigRational::zero());
        assert!(x[2].is_zero());
        // unbounded direction: x - y = 0
        let lp = Lp { rows: vec![vec![1, -1]], rhs: vec![0], num_vars: 2 };
        let x = max_support_point(&lp).unwrap();
        assert!(satisfies(&lp, &x));
        assert!(x.iter().all(|v| *v > BigRational::zero()));
    }
}
