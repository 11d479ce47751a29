//! Fourier expansions of W(E8)-invariant Jacobi forms.
//!
//! An expansion stores, for each power `q^n` below the truncation, the
//! coefficients of the Weyl orbit sums `orb(m)` keyed by dominant weight.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::e8::{self, DominantWeight, LatticeVector, WeylOrbit};
use crate::error::{Error, Result};
use crate::int::Int;
use crate::orbit_ring::{ring_with_grade, PolySeries, Sparse};
use crate::qseries::{self, eisenstein, parse_rational_pair, rat, rational_pair, QSeries};

pub type Level = BTreeMap<DominantWeight, BigRational>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiExpansion {
    pub weight: i32,
    pub index: u32,
    /// Set when the form is known to satisfy `(m, m) <= 2nt` on its support.
    pub holomorphic: bool,
    levels: Vec<Level>,
}

/// A coefficient position `(n, m)` together with its value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub n: usize,
    pub m: DominantWeight,
    pub value: BigRational,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "q^{} {} coefficient {}",
            self.n,
            WeylOrbit::new(self.m),
            self.value
        )
    }
}

impl JacobiExpansion {
    pub fn new(weight: i32, index: u32, holomorphic: bool, mut levels: Vec<Level>) -> Self {
        for l in &mut levels {
            l.retain(|_, c| !c.is_zero());
        }
        JacobiExpansion {
            weight,
            index,
            holomorphic,
            levels,
        }
    }

    /// The constant function `1`.
    pub fn constant(truncation: usize) -> Self {
        let mut levels = vec![Level::new(); truncation];
        if truncation > 0 {
            levels[0].insert(DominantWeight::ZERO, BigRational::one());
        }
        JacobiExpansion::new(0, 0, true, levels)
    }

    /// A modular form viewed as a Jacobi form of index 0.
    pub fn from_modular(weight: i32, f: &QSeries) -> Self {
        let levels = f
            .coeffs()
            .iter()
            .map(|c| {
                let mut l = Level::new();
                l.insert(DominantWeight::ZERO, c.clone());
                l
            })
            .collect();
        JacobiExpansion::new(weight, 0, true, levels)
    }

    pub fn truncation(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &Level {
        &self.levels[n]
    }

    pub fn coeff(&self, n: usize, m: &DominantWeight) -> BigRational {
        self.levels
            .get(n)
            .and_then(|l| l.get(m).cloned())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(BTreeMap::is_empty)
    }

    pub fn truncate(&self, n: usize) -> Self {
        JacobiExpansion::new(
            self.weight,
            self.index,
            self.holomorphic,
            self.levels.iter().take(n).cloned().collect(),
        )
    }

    pub fn with_holomorphic(mut self, flag: bool) -> Self {
        self.holomorphic = flag;
        self
    }

    /// Largest `T` grade over the support of each level.
    fn max_grade(&self) -> u32 {
        self.levels
            .iter()
            .flat_map(|l| l.keys().map(DominantWeight::t_grade))
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| l.iter().map(|(m, v)| (*m, v * c)).collect())
            .collect();
        JacobiExpansion::new(self.weight, self.index, self.holomorphic, levels)
    }

    fn zip(&self, other: &Self, sign: i64) -> Result<Self> {
        if self.weight != other.weight || self.index != other.index {
            return Err(Error::usage(format!(
                "cannot add forms of bidegree ({}, {}) and ({}, {})",
                self.weight, self.index, other.weight, other.index
            )));
        }
        let n = self.truncation().min(other.truncation());
        let s = rat(sign);
        let mut levels = Vec::with_capacity(n);
        for i in 0..n {
            let mut l = self.levels[i].clone();
            for (m, c) in &other.levels[i] {
                *l.entry(*m).or_insert_with(BigRational::zero) += c * &s;
            }
            levels.push(l);
        }
        Ok(JacobiExpansion::new(
            self.weight,
            self.index,
            self.holomorphic && other.holomorphic,
            levels,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, 1)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, -1)
    }

    /// Specialization `z = 0`: `sum_n q^n sum_m c(n, m) |W m|`.
    pub fn eval_zero(&self) -> QSeries {
        QSeries::new(
            self.levels
                .iter()
                .map(|l| {
                    l.iter().fold(BigRational::zero(), |acc, (m, c)| {
                        acc + c * BigRational::from_integer(BigInt::from(m.orbit_size()))
                    })
                })
                .collect(),
        )
    }

    /// `phi(tau, a z)`: index times `a^2`, support scaled by `a`.
    pub fn scale_z(&self, a: u32) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| l.iter().map(|(m, c)| (m.scale(a), c.clone())).collect())
            .collect();
        JacobiExpansion::new(self.weight, self.index * a * a, self.holomorphic, levels)
    }

    /// Index-raising operator `V_m`:
    /// `c'(n, l) = sum_{a | (n, m), l / a in E8} a^{k-1} c(nm / a^2, l / a)`,
    /// with `a` running over all divisors of `m` at `n = 0`.
    ///
    /// The input must be known to level `(N - 1) m` for `N` output levels.
    pub fn hecke_v(&self, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::usage("Hecke operator V_0 is undefined"));
        }
        let out_len = (self.truncation() - 1) / m as usize + 1;
        let mut levels = vec![Level::new(); out_len];
        for (n, level) in levels.iter_mut().enumerate() {
            let g = if n == 0 { m } else { (n as u32).gcd(&m) };
            for a in (1..=g).filter(|a| g % a == 0) {
                let src = n * m as usize / (a * a) as usize;
                if src >= self.truncation() {
                    continue;
                }
                let w = rat(a as i64).pow(self.weight - 1);
                for (l, c) in &self.levels[src] {
                    *level.entry(l.scale(a)).or_insert_with(BigRational::zero) += c * &w;
                }
            }
        }
        Ok(JacobiExpansion::new(
            self.weight,
            self.index * m,
            self.holomorphic,
            levels,
        ))
    }

    /// Multiplication by a modular form of the given weight.
    pub fn mul_series(&self, f: &QSeries, weight: i32) -> Self {
        let n = self.truncation().min(f.truncation());
        let mut levels = vec![Level::new(); n];
        for (i, out) in levels.iter_mut().enumerate() {
            for j in 0..=i {
                let s = &f.coeffs()[j];
                if s.is_zero() {
                    continue;
                }
                for (m, c) in &self.levels[i - j] {
                    *out.entry(*m).or_insert_with(BigRational::zero) += c * s;
                }
            }
        }
        JacobiExpansion::new(self.weight + weight, self.index, self.holomorphic, levels)
    }

    /// Division by `Delta^k`; the first `k` levels must vanish.
    pub fn div_delta(&self, k: usize) -> Result<Self> {
        for n in 0..k.min(self.truncation()) {
            if let Some((m, c)) = self.levels[n].iter().next() {
                return Err(Error::mismatch(format!(
                    "not divisible by Delta^{k}: {}",
                    Witness {
                        n,
                        m: *m,
                        value: c.clone()
                    }
                )));
            }
        }
        if self.truncation() <= k {
            return Err(Error::resource(format!(
                "division by Delta^{k} needs more than {} levels",
                self.truncation()
            )));
        }
        let shifted =
            JacobiExpansion::new(self.weight, self.index, false, self.levels[k..].to_vec());
        let n = shifted.truncation();
        let reduced = qseries::discriminant(n + 1).shift_down(1)?;
        let inv = QSeries::one(n).div(&reduced.pow(k as u32))?;
        Ok(shifted.mul_series(&inv, -12 * k as i32))
    }

    /// Division by `E4`, exact since `E4` has unit constant term.
    pub fn div_e4(&self) -> Self {
        let n = self.truncation();
        let e4 = eisenstein(4, n).expect("weight 4");
        let inv = QSeries::one(n).div(&e4).expect("unit constant term");
        let mut out = self.mul_series(&inv, -4);
        out.holomorphic = false;
        out
    }

    /// The first coefficient violating `(m, m) <= 2nt`, in order of `n` and
    /// then canonical order of `m`.
    pub fn check_support(&self) -> Option<Witness> {
        let t = self.index as i64;
        for (n, l) in self.levels.iter().enumerate() {
            for (m, c) in l {
                if m.norm2() > 2 * n as i64 * t {
                    return Some(Witness {
                        n,
                        m: *m,
                        value: c.clone(),
                    });
                }
            }
        }
        None
    }

    /// The first coefficient off the singular support `(m, m) = 2nt`.
    pub fn check_singular_support(&self) -> Option<Witness> {
        let t = self.index as i64;
        for (n, l) in self.levels.iter().enumerate() {
            for (m, c) in l {
                if m.norm2() != 2 * n as i64 * t {
                    return Some(Witness {
                        n,
                        m: *m,
                        value: c.clone(),
                    });
                }
            }
        }
        None
    }

    /// Spot check of quasi-periodicity `f(n, l) = f(n + (l, v) + t (v, v) / 2, l + t v)`
    /// for every stored coefficient and every lattice vector `v` of norm at
    /// most `max_norm`, wherever the shifted position is within truncation.
    pub fn quasi_periodicity_violation(&self, max_norm: u64) -> Result<Option<(Witness, Witness)>> {
        let t = self.index as i64;
        let mut shifts = Vec::new();
        for k in 1..=max_norm {
            shifts.extend(e8::shell(k, 1 << 22)?);
        }
        for (n, l) in self.levels.iter().enumerate() {
            for (m, c) in l {
                let x = m.to_lattice();
                for v in &shifts {
                    let n2 = n as i64 + x.inner(v) + t * v.norm2() / 2;
                    if n2 < 0 || n2 as usize >= self.truncation() {
                        continue;
                    }
                    let y = x.add(&LatticeVector(v.0.map(|c| c * t)));
                    let m2 = y.to_dominant();
                    let c2 = self.coeff(n2 as usize, &m2);
                    if &c2 != c {
                        return Ok(Some((
                            Witness {
                                n,
                                m: *m,
                                value: c.clone(),
                            },
                            Witness {
                                n: n2 as usize,
                                m: m2,
                                value: c2,
                            },
                        )));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Conversion into the monomial basis of the orbit ring.
    pub fn to_poly(&self) -> Result<PolySeries> {
        let ring = ring_with_grade(self.max_grade())?;
        let mut den = BigInt::one();
        for l in &self.levels {
            for c in l.values() {
                den = den.lcm(c.denom());
            }
        }
        let mut levels = Vec::with_capacity(self.truncation());
        for l in &self.levels {
            let mut v: Sparse = l
                .iter()
                .map(|(m, c)| {
                    let idx = ring.index_of(m).expect("grade covered");
                    (idx, Int::from_bigint(c.numer() * (&den / c.denom())))
                })
                .collect();
            v.sort_by_key(|(k, _)| *k);
            levels.push(ring.to_monomials(&v));
        }
        Ok(PolySeries::new(den, levels))
    }

    /// Conversion back from the monomial basis.
    pub fn from_poly(weight: i32, index: u32, holomorphic: bool, p: &PolySeries) -> Result<Self> {
        let ring = ring_with_grade(0)?;
        let den = p.denominator();
        let levels = p
            .levels()
            .iter()
            .map(|l| {
                ring.to_orbits(l)
                    .into_iter()
                    .map(|(k, c)| (ring.weight(k), BigRational::new(c.to_bigint(), den.clone())))
                    .collect()
            })
            .collect();
        Ok(JacobiExpansion::new(weight, index, holomorphic, levels))
    }

    /// Product of Jacobi forms; weights and indices add.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let p = self.to_poly()?.mul(&other.to_poly()?)?;
        JacobiExpansion::from_poly(
            self.weight + other.weight,
            self.index + other.index,
            self.holomorphic && other.holomorphic,
            &p,
        )
    }

    /// Product computed directly on orbits: the factor with the smaller
    /// support is expanded into lattice vectors and every dominant target
    /// `m` collects `c(n1, l) c'(n2, dom(m - l))`. Slow; kept as a reference
    /// for [`JacobiExpansion::multiply`].
    pub fn multiply_by_folding(&self, other: &Self, max_orbit: usize) -> Result<Self> {
        let size = |f: &Self| -> u64 {
            f.levels
                .iter()
                .flat_map(|l| l.keys().map(DominantWeight::orbit_size))
                .sum()
        };
        let (small, large) = if size(self) <= size(other) {
            (self, other)
        } else {
            (other, self)
        };
        let n = self.truncation().min(other.truncation());
        let mut expanded: Vec<Vec<(LatticeVector, BigRational)>> = Vec::with_capacity(n);
        for l in small.levels.iter().take(n) {
            let mut v = Vec::new();
            for (m, c) in l {
                for y in e8::orbit_vectors(m, max_orbit)? {
                    v.push((
                        LatticeVector::from_weight_coords(y.map(i64::from)),
                        c.clone(),
                    ));
                }
            }
            expanded.push(v);
        }
        let grade = |l: &Level| l.keys().map(DominantWeight::t_grade).max();
        let mut levels = Vec::with_capacity(n);
        for lvl in 0..n {
            let mut bound = 0;
            for a in 0..=lvl {
                if let (Some(x), Some(y)) = (grade(&small.levels[a]), grade(&large.levels[lvl - a]))
                {
                    bound = bound.max(x + y);
                }
            }
            let mut out = Level::new();
            for target in e8::dominant_by_t(bound) {
                let tv = target.to_lattice();
                let mut acc = BigRational::zero();
                for a in 0..=lvl {
                    let other_level = &large.levels[lvl - a];
                    if other_level.is_empty() {
                        continue;
                    }
                    for (v, c) in &expanded[a] {
                        if let Some(c2) = other_level.get(&tv.sub(v).to_dominant()) {
                            acc += c * c2;
                        }
                    }
                }
                if !acc.is_zero() {
                    out.insert(target, acc);
                }
            }
            levels.push(out);
        }
        Ok(JacobiExpansion::new(
            self.weight + other.weight,
            self.index + other.index,
            self.holomorphic && other.holomorphic,
            levels,
        ))
    }
}

/// The E8 theta function `sum_{l in E8} q^{(l,l)/2} zeta^l`.
pub fn theta_e8(n: usize) -> JacobiExpansion {
    let levels = (0..n)
        .map(|k| {
            e8::dominant_by_norm(k as u64)
                .into_iter()
                .map(|m| (m, BigRational::one()))
                .collect()
        })
        .collect();
    JacobiExpansion::new(4, 1, true, levels)
}

/// `X_t = V_t(theta) / sigma_3(t)`, normalized to `1 + O(q)`.
///
/// Every coefficient sits on an orbit of norm `nt`, with value
/// `sum_{a | (n, t), a | m} a^3 / sigma_3(t)`.
pub fn hecke_theta(t: u32, n: usize) -> Result<JacobiExpansion> {
    let theta = theta_e8((n - 1) * t as usize + 1);
    let v = theta.hecke_v(t)?;
    let s = BigRational::new(BigInt::one(), BigInt::from(e8::sigma(3, t as u64)));
    Ok(v.scale(&s))
}

/// Number of triples `(A, B, D)` with `AD = t`, `0 <= B < D` and
/// `gcd(A, B, D) = 1`, i.e. the index of `Gamma_0(t)` in `SL_2(Z)`.
pub fn trace_triple_count(t: u32) -> usize {
    let mut count = 0;
    for d in (1..=t).filter(|d| t % d == 0) {
        let a = t / d;
        count += (0..d).filter(|b| a.gcd(b).gcd(&d) == 1).count();
    }
    count
}

fn mobius(n: u32) -> i64 {
    let mut n = n;
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// `sum_{0 <= B < D, gcd(B, g) = 1} exp(2 pi i s B / D)` for `g | D`.
fn coset_character_sum(s: u64, d: u32, g: u32) -> i64 {
    (1..=g)
        .filter(|e| g % e == 0)
        .map(|e| {
            let de = (d / e) as u64;
            if s % de == 0 {
                mobius(e) * de as i64
            } else {
                0
            }
        })
        .sum()
}

/// Weight 6, index `t` holomorphic form obtained by averaging
/// `g_t(tau) theta(t tau, t z)` over the cosets of `Gamma_0(t)`, where
/// `g_t = (t E2(t tau) - E2(tau)) / (t - 1)`. Normalized so that the
/// specialization at `z = 0` is `E6`.
///
/// Each coset `(A tau + B) / D` contributes
/// `D^{-4} [(t / D^2) E2((A tau + B)/D) - E2(tau)] theta((A tau + B)/D, A z) / (t - 1)`.
/// The sum over `B` is carried out on exponents as an integer character
/// sum, so only integral powers of `q` survive.
pub fn level_trace(t: u32, n: usize) -> Result<JacobiExpansion> {
    if !(2..=6).contains(&t) {
        return Err(Error::usage(format!(
            "level trace is implemented for t in 2..=6, got {t}"
        )));
    }
    // Largest fractional exponent numerator needed: A s / D < n with A >= 1, D <= t.
    let s_max = n * t as usize;
    let e2 = eisenstein(2, s_max + 1)?;
    let thetas: Vec<Vec<DominantWeight>> = (0..=s_max)
        .map(|nu| e8::dominant_by_norm(nu as u64))
        .collect();
    let mut levels = vec![Level::new(); n];
    let tr = rat(t as i64);
    let inv_tm1 = BigRational::new(BigInt::one(), BigInt::from(t - 1));
    for d in (1..=t).filter(|d| t % d == 0) {
        let a = t / d;
        let g = a.gcd(&d);
        let pref = BigRational::new(BigInt::one(), BigInt::from(d).pow(4)) * &inv_tm1;
        let first = &pref * &tr * BigRational::new(BigInt::one(), BigInt::from(d * d));
        let exponent = |s: usize| -> Result<Option<usize>> {
            let chi = coset_character_sum(s as u64, d, g);
            if chi == 0 {
                return Ok(None);
            }
            let num = a as usize * s;
            if num % d as usize != 0 {
                return Err(Error::mismatch(format!(
                    "fractional power q^({num}/{d}) survives the coset sum for t = {t}"
                )));
            }
            Ok(Some(num / d as usize))
        };
        // E2((A tau + B)/D) theta((A tau + B)/D, A z): exponent s = j + nu.
        for s in 0..=s_max {
            let Some(out) = exponent(s)? else { continue };
            if out >= n {
                continue;
            }
            let chi = rat(coset_character_sum(s as u64, d, g));
            for nu in 0..=s {
                let c = &e2.coeffs()[s - nu] * &chi * &first;
                if c.is_zero() {
                    continue;
                }
                for m in &thetas[nu] {
                    *levels[out]
                        .entry(m.scale(a))
                        .or_insert_with(BigRational::zero) += &c;
                }
            }
        }
        // -E2(tau) theta((A tau + B)/D, A z): exponent s = nu, then shift by E2(tau).
        for nu in 0..=s_max {
            let Some(out) = exponent(nu)? else { continue };
            if out >= n {
                continue;
            }
            let chi = rat(coset_character_sum(nu as u64, d, g));
            for j in 0..n - out {
                let c = -(&e2.coeffs()[j] * &chi * &pref);
                if c.is_zero() {
                    continue;
                }
                for m in &thetas[nu] {
                    *levels[out + j]
                        .entry(m.scale(a))
                        .or_insert_with(BigRational::zero) += &c;
                }
            }
        }
    }
    let raw = JacobiExpansion::new(6, t, true, levels);
    let c0 = raw.eval_zero().coeff(0);
    if c0.is_zero() {
        return Err(Error::mismatch(format!(
            "level trace for t = {t} vanishes at z = 0"
        )));
    }
    let out = raw.scale(&c0.recip());
    if out.eval_zero() != eisenstein(6, n)? {
        return Err(Error::mismatch(format!(
            "level trace for t = {t} does not specialize to E6"
        )));
    }
    Ok(out)
}

impl fmt::Display for JacobiExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (n, l) in self.levels.iter().enumerate() {
            if l.is_empty() {
                continue;
            }
            let inner: Vec<String> = l
                .iter()
                .map(|(m, c)| {
                    if m.is_zero() {
                        c.to_string()
                    } else if c.is_one() {
                        WeylOrbit::new(*m).to_string()
                    } else {
                        format!("{c}*{}", WeylOrbit::new(*m))
                    }
                })
                .collect();
            let body = inner.join(" + ").replace("+ -", "- ");
            let qpow = match n {
                0 => String::new(),
                1 => "q".into(),
                _ => format!("q^{n}"),
            };
            let term = match (n, inner.len()) {
                (0, _) => body,
                (_, 1)
                    if l.values().next().is_some_and(|c| c.is_one())
                        && !l.contains_key(&DominantWeight::ZERO) =>
                {
                    format!("{qpow}*{body}")
                }
                _ => format!("{qpow}*({body})"),
            };
            terms.push(term);
        }
        if terms.is_empty() {
            terms.push("0".into());
        }
        write!(f, "{} + O(q^{})", terms.join(" + "), self.truncation())
    }
}

/// Portable serialized form: dominant weights as 8-tuples and rationals as
/// decimal numerator/denominator strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub weight: i32,
    pub index: u32,
    pub truncation: usize,
    pub holomorphic: bool,
    pub levels: Vec<Vec<([u32; 8], [String; 2])>>,
}

impl From<&JacobiExpansion> for ExpansionRecord {
    fn from(e: &JacobiExpansion) -> Self {
        ExpansionRecord {
            weight: e.weight,
            index: e.index,
            truncation: e.truncation(),
            holomorphic: e.holomorphic,
            levels: e
                .levels
                .iter()
                .map(|l| l.iter().map(|(m, c)| (m.0, rational_pair(c))).collect())
                .collect(),
        }
    }
}

impl TryFrom<&ExpansionRecord> for JacobiExpansion {
    type Error = Error;
    fn try_from(r: &ExpansionRecord) -> Result<Self> {
        if r.levels.len() != r.truncation {
            return Err(Error::Cache(format!(
                "record lists {} levels for truncation {}",
                r.levels.len(),
                r.truncation
            )));
        }
        let levels = r
            .levels
            .iter()
            .map(|l| {
                l.iter()
                    .map(|(m, p)| {
                        Ok((
                            DominantWeight(*m),
                            parse_rational_pair(p).map_err(Error::Cache)?,
                        ))
                    })
                    .collect::<Result<Level>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JacobiExpansion::new(
            r.weight,
            r.index,
            r.holomorphic,
            levels,
        ))
    }
}
