//! Truncated power series in `q` with exact rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::e8::sigma;
use crate::error::{Error, Result};

/// `c_0 + c_1 q + ... + c_{N-1} q^{N-1} + O(q^N)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigRational>,
}

impl QSeries {
    /// Builds a series from coefficients; the truncation is their count.
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        QSeries { coeffs }
    }

    pub fn from_ints<I: IntoIterator<Item = i64>>(coeffs: I) -> Self {
        QSeries::new(coeffs.into_iter().map(rat).collect())
    }

    pub fn zero(truncation: usize) -> Self {
        QSeries::new(vec![BigRational::zero(); truncation])
    }

    pub fn one(truncation: usize) -> Self {
        let mut s = QSeries::zero(truncation);
        if truncation > 0 {
            s.coeffs[0] = BigRational::one();
        }
        s
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of `q^n`, zero beyond the truncation.
    pub fn coeff(&self, n: usize) -> BigRational {
        self.coeffs
            .get(n)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn truncate(&self, n: usize) -> Self {
        QSeries::new(self.coeffs.iter().take(n).cloned().collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Index of the first nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        QSeries::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = QSeries::one(self.truncation());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Exact division `self / g`.
    ///
    /// If `g` has valuation `v > 0`, the first `v` coefficients of `self` must
    /// vanish and the quotient loses `v` terms of precision.
    pub fn div(&self, g: &QSeries) -> Result<Self> {
        let v = g
            .valuation()
            .ok_or_else(|| Error::usage("division by the zero series"))?;
        if let Some((n, c)) = self
            .coeffs
            .iter()
            .enumerate()
            .take(v)
            .find(|(_, c)| !c.is_zero())
        {
            return Err(Error::usage(format!(
                "dividend has nonzero coefficient {c} at q^{n} below divisor valuation {v}"
            )));
        }
        let num = &self.coeffs[v.min(self.coeffs.len())..];
        let den = &g.coeffs[v..];
        let n = num.len().min(den.len());
        let lead_inv = den[0].recip();
        let mut out: Vec<BigRational> = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = num[i].clone();
            for j in 1..=i {
                if !den[j].is_zero() {
                    acc -= &den[j] * &out[i - j];
                }
            }
            out.push(acc * &lead_inv);
        }
        Ok(QSeries::new(out))
    }

    /// Drop the first `n` coefficients, which must be zero (division by `q^n`).
    pub fn shift_down(&self, n: usize) -> Result<Self> {
        if let Some((i, c)) = self
            .coeffs
            .iter()
            .enumerate()
            .take(n)
            .find(|(_, c)| !c.is_zero())
        {
            return Err(Error::usage(format!(
                "cannot divide by q^{n}: coefficient {c} at q^{i}"
            )));
        }
        Ok(QSeries::new(self.coeffs.iter().skip(n).cloned().collect()))
    }

    /// Coefficients as integers, if they all are.
    pub fn to_integers(&self) -> Option<Vec<BigInt>> {
        self.coeffs
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect()
    }
}

pub(crate) fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn binary(
    f: &QSeries,
    g: &QSeries,
    op: impl Fn(&BigRational, &BigRational) -> BigRational,
) -> QSeries {
    let n = f.truncation().min(g.truncation());
    QSeries::new((0..n).map(|i| op(&f.coeffs[i], &g.coeffs[i])).collect())
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        binary(self, rhs, |a, b| a + b)
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        binary(self, rhs, |a, b| a - b)
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        let n = self.truncation().min(rhs.truncation());
        let mut out = vec![BigRational::zero(); n];
        for (i, a) in self.coeffs.iter().take(n).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().take(n - i).enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        QSeries::new(out)
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        QSeries::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (sign, abs) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match n {
                0 => write!(f, "{abs}")?,
                _ => {
                    if !abs.is_one() {
                        write!(f, "{abs}*")?;
                    }
                    if n == 1 {
                        f.write_str("q")?;
                    } else {
                        write!(f, "q^{n}")?;
                    }
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(q^{})", self.truncation())
    }
}

/// Serialized as a list of `[numerator, denominator]` decimal strings.
impl Serialize for QSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self.coeffs.iter().map(rational_pair).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[String; 2]> = Vec::deserialize(d)?;
        let coeffs = pairs
            .iter()
            .map(|p| parse_rational_pair(p).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(QSeries::new(coeffs))
    }
}

pub fn rational_pair(c: &BigRational) -> [String; 2] {
    [c.numer().to_string(), c.denom().to_string()]
}

pub fn parse_rational_pair(p: &[String; 2]) -> std::result::Result<BigRational, String> {
    let n: BigInt = p[0]
        .parse()
        .map_err(|_| format!("bad numerator {:?}", p[0]))?;
    let d: BigInt = p[1]
        .parse()
        .map_err(|_| format!("bad denominator {:?}", p[1]))?;
    if d.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(n, d))
}

/// Normalized Eisenstein series `E_k` for `k` in {2, 4, 6}.
pub fn eisenstein(k: u32, n: usize) -> Result<QSeries> {
    let c: i64 = match k {
        2 => -24,
        4 => 240,
        6 => -504,
        _ => return Err(Error::usage(format!("unsupported Eisenstein weight {k}"))),
    };
    Ok(QSeries::from_ints((0..n).map(|i| {
        if i == 0 {
            1
        } else {
            c * sigma(k - 1, i as u64) as i64
        }
    })))
}

/// `Delta = (E4^3 - E6^2) / 1728`.
pub fn discriminant(n: usize) -> QSeries {
    let e4 = eisenstein(4, n).expect("weight 4");
    let e6 = eisenstein(6, n).expect("weight 6");
    let num = &e4.pow(3) - &e6.pow(2);
    num.scale(&BigRational::new(BigInt::one(), BigInt::from(1728)))
}
