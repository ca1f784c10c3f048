//! Integer arithmetic with a checked fast path.
//!
//! Kernels are written once over [`ExactInt`] and run on a machine integer
//! first; any overflow aborts the run and it is repeated on a wider type.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Overflow;

pub(crate) type Checked<T> = std::result::Result<T, Overflow>;

pub(crate) trait ExactInt: Clone + Debug + PartialEq + Ord {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, o: &Self) -> Checked<Self>;
    fn sub(&self, o: &Self) -> Checked<Self>;
    fn mul(&self, o: &Self) -> Checked<Self>;
    /// Exact quotient; the caller guarantees divisibility.
    fn div_exact(&self, o: &Self) -> Self;
    /// Floor division.
    fn div_floor(&self, o: &Self) -> Self;
    fn neg(&self) -> Checked<Self>;
    fn signum(&self) -> i32;
    fn to_big(&self) -> BigInt;
    /// Nonnegative gcd.
    fn gcd(a: &Self, b: &Self) -> Checked<Self>;
    /// `(g, s, t)` with `g = gcd(a, b) ≥ 0` and `s*a + t*b = g`.
    fn ext_gcd(a: &Self, b: &Self) -> Checked<(Self, Self, Self)>;

    fn is_zero(&self) -> bool {
        self.signum() == 0
    }
}

macro_rules! machine_int {
    ($t:ty) => {
        impl ExactInt for $t {
            fn zero() -> Self {
                0
            }
            fn one() -> Self {
                1
            }
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            fn add(&self, o: &Self) -> Checked<Self> {
                self.checked_add(*o).ok_or(Overflow)
            }
            fn sub(&self, o: &Self) -> Checked<Self> {
                self.checked_sub(*o).ok_or(Overflow)
            }
            fn mul(&self, o: &Self) -> Checked<Self> {
                self.checked_mul(*o).ok_or(Overflow)
            }
            fn div_exact(&self, o: &Self) -> Self {
                debug_assert_eq!(self % o, 0);
                self / o
            }
            fn div_floor(&self, o: &Self) -> Self {
                Integer::div_floor(self, o)
            }
            fn neg(&self) -> Checked<Self> {
                self.checked_neg().ok_or(Overflow)
            }
            fn signum(&self) -> i32 {
                <$t>::signum(*self) as i32
            }
            fn to_big(&self) -> BigInt {
                BigInt::from(*self)
            }
            fn gcd(a: &Self, b: &Self) -> Checked<Self> {
                let (mut x, mut y) = (a.unsigned_abs(), b.unsigned_abs());
                while y != 0 {
                    (x, y) = (y, x % y);
                }
                <$t>::try_from(x).map_err(|_| Overflow)
            }
            fn ext_gcd(a: &Self, b: &Self) -> Checked<(Self, Self, Self)> {
                let (mut r0, mut r1) = (*a, *b);
                let (mut s0, mut s1) = (1 as $t, 0 as $t);
                let (mut t0, mut t1) = (0 as $t, 1 as $t);
                while r1 != 0 {
                    let q = r0 / r1;
                    let r2 = r0.sub(&q.mul(&r1)?)?;
                    let s2 = s0.sub(&q.mul(&s1)?)?;
                    let t2 = t0.sub(&q.mul(&t1)?)?;
                    (r0, r1, s0, s1, t0, t1) = (r1, r2, s1, s2, t1, t2);
                }
                if r0 < 0 {
                    Ok((r0.neg()?, s0.neg()?, t0.neg()?))
                } else {
                    Ok((r0, s0, t0))
                }
            }
        }
    };
}

machine_int!(i64);
machine_int!(i128);

impl ExactInt for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn add(&self, o: &Self) -> Checked<Self> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Checked<Self> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Checked<Self> {
        Ok(self * o)
    }
    fn div_exact(&self, o: &Self) -> Self {
        debug_assert!(Zero::is_zero(&(self % o)));
        self / o
    }
    fn div_floor(&self, o: &Self) -> Self {
        Integer::div_floor(self, o)
    }
    fn neg(&self) -> Checked<Self> {
        Ok(-self)
    }
    fn signum(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn gcd(a: &Self, b: &Self) -> Checked<Self> {
        Ok(Integer::gcd(a, b))
    }
    fn ext_gcd(a: &Self, b: &Self) -> Checked<(Self, Self, Self)> {
        let e = a.extended_gcd(b);
        if e.gcd.is_negative() {
            Ok((-e.gcd, -e.x, -e.y))
        } else {
            Ok((e.gcd, e.x, e.y))
        }
    }
}

/// Runs the fast kernel, retrying with the slow one if it overflows.
pub(crate) fn with_fallback<R>(
    fast: impl FnOnce() -> Checked<R>,
    slow: impl FnOnce() -> Checked<R>,
) -> R {
    match fast() {
        Ok(r) => r,
        Err(Overflow) => slow().expect("arbitrary precision cannot overflow"),
    }
}
