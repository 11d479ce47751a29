//! Integer type with an inline `i128` fast path.
//!
//! The inner loops of orbit-polynomial multiplication are dominated by small
//! products; heap-allocated big integers would cost an allocation per term.
//! Values spill to [`BigInt`] only when an `i128` operation overflows.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub enum Int {
    Small(i128),
    Big(BigInt),
}

impl Int {
    #[inline]
    pub fn zero() -> Self {
        Int::Small(0)
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        match self {
            Int::Small(v) => *v == 0,
            Int::Big(b) => b.is_zero(),
        }
    }

    pub fn to_bigint(&self) -> BigInt {
        match self {
            Int::Small(v) => BigInt::from(*v),
            Int::Big(b) => b.clone(),
        }
    }

    pub fn from_bigint(b: BigInt) -> Self {
        match b.to_i128() {
            Some(v) => Int::Small(v),
            None => Int::Big(b),
        }
    }

    pub fn abs_bits(&self) -> u64 {
        match self {
            Int::Small(v) => 128 - v.unsigned_abs().leading_zeros() as u64,
            Int::Big(b) => b.bits(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Int::Small(v) => *v < 0,
            Int::Big(b) => b.is_negative(),
        }
    }

    /// `self += a * b`
    #[inline]
    pub fn add_mul(&mut self, a: &Int, b: &Int) {
        if let (Int::Small(s), Int::Small(x), Int::Small(y)) = (&*self, a, b) {
            if let Some(p) = x.checked_mul(*y) {
                if let Some(r) = s.checked_add(p) {
                    *self = Int::Small(r);
                    return;
                }
            }
        }
        let r = self.to_bigint() + a.to_bigint() * b.to_bigint();
        *self = Int::from_bigint(r);
    }

    /// Remainder modulo a positive machine prime.
    pub fn rem_u64(&self, p: u64) -> u64 {
        match self {
            Int::Small(v) => v.rem_euclid(p as i128) as u64,
            Int::Big(b) => {
                let r = b % BigInt::from(p);
                let r = if r.is_negative() {
                    r + BigInt::from(p)
                } else {
                    r
                };
                r.to_u64().expect("remainder fits")
            }
        }
    }
}

impl Default for Int {
    fn default() -> Self {
        Int::zero()
    }
}

impl PartialEq for Int {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Int::Small(a), Int::Small(b)) => a == b,
            _ => self.to_bigint() == other.to_bigint(),
        }
    }
}

impl Eq for Int {}

impl From<i64> for Int {
    fn from(v: i64) -> Self {
        Int::Small(v as i128)
    }
}

impl From<i128> for Int {
    fn from(v: i128) -> Self {
        Int::Small(v)
    }
}

impl From<BigInt> for Int {
    fn from(b: BigInt) -> Self {
        Int::from_bigint(b)
    }
}

impl From<&BigInt> for Int {
    fn from(b: &BigInt) -> Self {
        Int::from_bigint(b.clone())
    }
}

impl fmt::Display for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Int::Small(v) => write!(f, "{v}"),
            Int::Big(b) => write!(f, "{b}"),
        }
    }
}

impl<'a> Add<&'a Int> for &'a Int {
    type Output = Int;
    fn add(self, rhs: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b)) = (self, rhs) {
            if let Some(r) = a.checked_add(*b) {
                return Int::Small(r);
            }
        }
        Int::from_bigint(self.to_bigint() + rhs.to_bigint())
    }
}

impl<'a> Sub<&'a Int> for &'a Int {
    type Output = Int;
    fn sub(self, rhs: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b)) = (self, rhs) {
            if let Some(r) = a.checked_sub(*b) {
                return Int::Small(r);
            }
        }
        Int::from_bigint(self.to_bigint() - rhs.to_bigint())
    }
}

impl<'a> Mul<&'a Int> for &'a Int {
    type Output = Int;
    fn mul(self, rhs: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b)) = (self, rhs) {
            if let Some(r) = a.checked_mul(*b) {
                return Int::Small(r);
            }
        }
        Int::from_bigint(self.to_bigint() * rhs.to_bigint())
    }
}

impl Neg for Int {
    type Output = Int;
    fn neg(self) -> Int {
        match self {
            Int::Small(v) => match v.checked_neg() {
                Some(r) => Int::Small(r),
                None => Int::Big(-BigInt::from(v)),
            },
            Int::Big(b) => Int::from_bigint(-b),
        }
    }
}

impl AddAssign<&Int> for Int {
    fn add_assign(&mut self, rhs: &Int) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Int> for Int {
    fn sub_assign(&mut self, rhs: &Int) {
        *self = &*self - rhs;
    }
}

impl Zero for Int {
    fn zero() -> Self {
        Int::Small(0)
    }
    fn is_zero(&self) -> bool {
        Int::is_zero(self)
    }
}

impl Add for Int {
    type Output = Int;
    fn add(self, rhs: Int) -> Int {
        &self + &rhs
    }
}

impl Mul for Int {
    type Output = Int;
    fn mul(self, rhs: Int) -> Int {
        &self * &rhs
    }
}

impl One for Int {
    fn one() -> Self {
        Int::Small(1)
    }
}
