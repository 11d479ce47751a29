//! The ring of W(E8)-invariant exponential sums.
//!
//! This ring is a polynomial ring in the eight fundamental orbit sums
//! `x_i = orb(w_i)`, and a monomial `x^l` has leading term `orb(l)` plus
//! orbits strictly below `l` in the dominance order. Both bases are indexed
//! by dominant weights, so a Fourier level can be stored as a sparse vector
//! over either one. Products are cheap in the monomial basis (exponents add),
//! and the table `M(l) = x^l` expanded in orbits converts back.
//!
//! Dominant weights are indexed in order of `(T, height, coords)`. Dominance
//! lowers both `T` and height, so conversion is triangular in index order,
//! and growing the `T` bound only appends indices.

use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;

use crate::e8::{self, make_dominant_i32, orbit_size, DominantWeight, RANK};
use crate::error::{Error, Result};
use crate::int::Int;

pub(crate) const NONE: u32 = u32::MAX;

/// Largest `T` bound the shared ring may grow to before refusing.
pub const DEFAULT_MAX_GRADE: u32 = 22;

pub type Sparse = Vec<(u32, Int)>;

pub struct OrbitRing {
    tmax: u32,
    weights: Vec<DominantWeight>,
    grades: Vec<u32>,
    index: FxHashMap<DominantWeight, u32>,
    /// Row-major `len x len` table of `index(a + b)`, `NONE` above `tmax`.
    sum_table: Vec<u32>,
    /// `x^l` in the orbit basis.
    mono: Vec<Sparse>,
    /// `orb(d) * orb(w_i)` in the orbit basis, keyed by `(d, i)`.
    products: FxHashMap<(u32, u8), Sparse>,
}

impl OrbitRing {
    fn build(tmax: u32, previous: Option<&OrbitRing>) -> Result<Self> {
        let mut weights = e8::dominant_by_t(tmax);
        weights.sort_by_key(|m| (m.t_grade(), m.height(), m.0));
        let grades: Vec<u32> = weights.iter().map(|m| m.t_grade()).collect();
        let index: FxHashMap<DominantWeight, u32> = weights
            .iter()
            .enumerate()
            .map(|(i, m)| (*m, i as u32))
            .collect();
        let n = weights.len();
        let mut sum_table = vec![NONE; n * n];
        for i in 0..n {
            for j in i..n {
                if grades[i] + grades[j] <= tmax {
                    let k = index[&weights[i].add(&weights[j])];
                    sum_table[i * n + j] = k;
                    sum_table[j * n + i] = k;
                }
            }
        }
        let mut ring = OrbitRing {
            tmax,
            weights,
            grades,
            index,
            sum_table,
            mono: Vec::with_capacity(n),
            products: FxHashMap::default(),
        };
        if let Some(prev) = previous {
            ring.mono.extend(prev.mono.iter().cloned());
            ring.products = prev.products.clone();
        }
        let mut builder = ProductBuilder::new();
        while ring.mono.len() < n {
            let l = ring.mono.len();
            let m = ring.expand_monomial(l, &mut builder)?;
            ring.mono.push(m);
        }
        Ok(ring)
    }

    fn expand_monomial(&mut self, l: usize, builder: &mut ProductBuilder) -> Result<Sparse> {
        let w = self.weights[l];
        if w.is_zero() {
            return Ok(vec![(l as u32, Int::Small(1))]);
        }
        // Split off the fundamental weight that makes the remaining product
        // cheapest: orbit size times the support it multiplies.
        let i = (0..RANK)
            .filter(|&i| w.0[i] > 0)
            .min_by_key(|&i| {
                let mut c = w;
                c.0[i] -= 1;
                let support = self.mono[self.index[&c] as usize].len() as u64;
                orbit_size(&DominantWeight::fundamental(i + 1)) * support
            })
            .expect("nonzero weight");
        let mut c = w;
        c.0[i] -= 1;
        let ci = self.index[&c] as usize;
        let base = self.mono[ci].clone();
        let mut acc: FxHashMap<u32, Int> = FxHashMap::default();
        for (d, coef) in &base {
            let prod = self.orbit_times_fundamental(*d, i, builder)?;
            for (e, pc) in prod.iter() {
                acc.entry(*e).or_default().add_mul(coef, pc);
            }
        }
        Ok(to_sorted(acc))
    }

    /// `orb(d) * orb(w_{i+1})` by folding sums into the dominant chamber:
    /// `coef_e = |W d| #{y in W w : dom(d + y) = e} / |W e|`.
    fn orbit_times_fundamental(
        &mut self,
        d: u32,
        i: usize,
        builder: &mut ProductBuilder,
    ) -> Result<Sparse> {
        if let Some(p) = self.products.get(&(d, i as u8)) {
            return Ok(p.clone());
        }
        let dw = self.weights[d as usize];
        let size_d = orbit_size(&dw);
        let counts = builder.fold_counts(&dw, i)?;
        let mut out = Vec::with_capacity(counts.len());
        for (v, cnt) in counts {
            let e = DominantWeight(v.map(|x| x as u32));
            let idx = *self.index.get(&e).ok_or_else(|| {
                Error::resource(format!(
                    "product orbit {e} lies above the grade bound {}",
                    self.tmax
                ))
            })?;
            let num = size_d as u128 * cnt as u128;
            let den = orbit_size(&e) as u128;
            debug_assert_eq!(num % den, 0);
            out.push((idx, Int::Small((num / den) as i128)));
        }
        out.sort_by_key(|(k, _)| *k);
        self.products.insert((d, i as u8), out.clone());
        Ok(out)
    }

    pub fn grade_bound(&self) -> u32 {
        self.tmax
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: u32) -> DominantWeight {
        self.weights[i as usize]
    }

    pub fn grade(&self, i: u32) -> u32 {
        self.grades[i as usize]
    }

    pub fn index_of(&self, m: &DominantWeight) -> Option<u32> {
        self.index.get(m).copied()
    }

    #[cfg(test)]
    pub(crate) fn sum_index(&self, a: u32, b: u32) -> u32 {
        self.sum_table[a as usize * self.weights.len() + b as usize]
    }

    /// `x^l` expanded in the orbit basis.
    pub fn monomial_in_orbits(&self, l: u32) -> &Sparse {
        &self.mono[l as usize]
    }

    /// Converts a sparse vector from the monomial basis to the orbit basis.
    pub fn to_orbits(&self, v: &Sparse) -> Sparse {
        let mut acc: FxHashMap<u32, Int> = FxHashMap::default();
        for (l, c) in v {
            for (d, m) in &self.mono[*l as usize] {
                acc.entry(*d).or_default().add_mul(c, m);
            }
        }
        to_sorted(acc)
    }

    /// Converts a sparse vector from the orbit basis to the monomial basis by
    /// peeling off leading orbits from the top index down.
    pub fn to_monomials(&self, v: &Sparse) -> Sparse {
        let mut rest: std::collections::BTreeMap<u32, Int> =
            v.iter().filter(|(_, c)| !c.is_zero()).cloned().collect();
        let mut out = Vec::new();
        while let Some((&top, _)) = rest.iter().next_back() {
            let c = rest.remove(&top).expect("present");
            for (d, m) in &self.mono[top as usize] {
                if *d == top {
                    debug_assert_eq!(*m, Int::Small(1));
                    continue;
                }
                let e = rest.entry(*d).or_default();
                let mut neg = Int::zero();
                neg.add_mul(&c, m);
                *e -= &neg;
                if e.is_zero() {
                    rest.remove(d);
                }
            }
            out.push((top, c));
        }
        out.reverse();
        out
    }
}

/// Scratch state for orbit products: the fundamental orbits, filtered by
/// the stabilizer of the other factor, and parabolic subgroup orders
/// indexed by node bitmask.
struct ProductBuilder {
    orbits: Vec<Option<Vec<[i32; RANK]>>>,
    filtered: FxHashMap<(usize, u32), Vec<([i32; RANK], u64)>>,
    parabolic: Vec<u64>,
}

impl ProductBuilder {
    fn new() -> Self {
        let parabolic = (0..1u32 << RANK)
            .map(|mask| {
                let nodes: Vec<usize> = (0..RANK).filter(|k| mask >> k & 1 == 1).collect();
                e8::classify_subdiagram(&nodes)
                    .iter()
                    .map(e8::SimpleType::weyl_order)
                    .product()
            })
            .collect();
        ProductBuilder {
            orbits: vec![None; RANK],
            filtered: FxHashMap::default(),
            parabolic,
        }
    }

    /// Vectors of `W w_{i+1}` dominant for the parabolic subgroup on `zeros`,
    /// each with the size of its orbit under that subgroup.
    fn representatives(&mut self, i: usize, zeros: u32) -> Result<&[([i32; RANK], u64)]> {
        if !self.filtered.contains_key(&(i, zeros)) {
            if self.orbits[i].is_none() {
                self.orbits[i] = Some(e8::orbit_vectors(
                    &DominantWeight::fundamental(i + 1),
                    1 << 24,
                )?);
            }
            let stab = self.parabolic[zeros as usize];
            let mut reps = Vec::new();
            'next: for y in self.orbits[i].as_ref().expect("just filled") {
                let mut fixed = 0u32;
                for k in 0..RANK {
                    if zeros >> k & 1 == 1 {
                        if y[k] < 0 {
                            continue 'next;
                        }
                        if y[k] == 0 {
                            fixed |= 1 << k;
                        }
                    }
                }
                reps.push((*y, stab / self.parabolic[fixed as usize]));
            }
            self.filtered.insert((i, zeros), reps);
        }
        Ok(&self.filtered[&(i, zeros)])
    }

    /// `#{y in W w_{i+1} : dom(d + y) = e}` for every `e`.
    ///
    /// `dom(d + y)` only depends on the orbit of `y` under the stabilizer
    /// `W_d`, so only `W_d`-dominant `y` are folded, weighted by orbit size.
    fn fold_counts(&mut self, d: &DominantWeight, i: usize) -> Result<FxHashMap<[i32; RANK], u64>> {
        let zeros: u32 = (0..RANK)
            .filter(|&k| d.0[k] == 0)
            .fold(0, |m, k| m | 1 << k);
        let base = d.0.map(|x| x as i32);
        let mut counts: FxHashMap<[i32; RANK], u64> = FxHashMap::default();
        for (y, weight) in self.representatives(i, zeros)? {
            let mut v = [0i32; RANK];
            for k in 0..RANK {
                v[k] = base[k] + y[k];
            }
            make_dominant_i32(&mut v);
            *counts.entry(v).or_default() += weight;
        }
        Ok(counts)
    }
}

fn to_sorted(acc: FxHashMap<u32, Int>) -> Sparse {
    let mut v: Sparse = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    v.sort_by_key(|(k, _)| *k);
    v
}

fn shared() -> &'static RwLock<Option<Arc<OrbitRing>>> {
    static RING: OnceLock<RwLock<Option<Arc<OrbitRing>>>> = OnceLock::new();
    RING.get_or_init(|| RwLock::new(None))
}

static MAX_GRADE: std::sync::atomic::AtomicU32 =
    std::sync::atomic::AtomicU32::new(DEFAULT_MAX_GRADE);

/// Sets the largest `T` bound the shared ring may grow to.
pub fn set_max_grade(t: u32) {
    MAX_GRADE.store(t, std::sync::atomic::Ordering::Relaxed);
}

/// The shared ring, grown if needed to cover all weights with `T <= t`.
pub fn ring_with_grade(t: u32) -> Result<Arc<OrbitRing>> {
    if let Some(r) = shared().read().expect("ring lock").as_ref() {
        if r.tmax >= t {
            return Ok(r.clone());
        }
    }
    let limit = MAX_GRADE.load(std::sync::atomic::Ordering::Relaxed);
    if t > limit {
        return Err(Error::resource(format!(
            "orbit products up to T = {t} requested; the configured bound is {limit}"
        )));
    }
    let mut guard = shared().write().expect("ring lock");
    if let Some(r) = guard.as_ref() {
        if r.tmax >= t {
            return Ok(r.clone());
        }
    }
    // Grow in steps of at least two to avoid rebuilding the table repeatedly.
    let target = guard
        .as_ref()
        .map_or(t, |r| t.max(r.tmax + 2))
        .min(limit.max(t));
    let ring = Arc::new(OrbitRing::build(target, guard.as_deref())?);
    *guard = Some(ring.clone());
    Ok(ring)
}

/// A truncated q-series whose coefficients lie in the orbit ring, stored in
/// the monomial basis as integer vectors over a common positive denominator.
#[derive(Clone, Debug)]
pub struct PolySeries {
    den: BigInt,
    levels: Vec<Sparse>,
}

impl PartialEq for PolySeries {
    fn eq(&self, other: &Self) -> bool {
        self.den == other.den && self.levels == other.levels
    }
}

impl Eq for PolySeries {}

impl PolySeries {
    pub fn new(den: BigInt, levels: Vec<Sparse>) -> Self {
        let mut s = PolySeries { den, levels };
        s.normalize();
        s
    }

    pub fn zero(truncation: usize) -> Self {
        PolySeries {
            den: BigInt::one(),
            levels: vec![Vec::new(); truncation],
        }
    }

    /// The constant `1` (the monomial `x^0` at `q^0`).
    pub fn one(truncation: usize) -> Self {
        let mut s = PolySeries::zero(truncation);
        if truncation > 0 {
            s.levels[0].push((0, Int::Small(1)));
        }
        s
    }

    /// A scalar q-series times the constant orbit.
    pub fn from_scalar(coeffs: &[BigInt]) -> Self {
        PolySeries {
            den: BigInt::one(),
            levels: coeffs
                .iter()
                .map(|c| {
                    if c.is_zero() {
                        Vec::new()
                    } else {
                        vec![(0, Int::from(c))]
                    }
                })
                .collect(),
        }
    }

    pub fn truncation(&self) -> usize {
        self.levels.len()
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn levels(&self) -> &[Sparse] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(Vec::is_empty)
    }

    fn normalize(&mut self) {
        for lvl in &mut self.levels {
            lvl.retain(|(_, c)| !c.is_zero());
        }
        if self.den.is_negative() {
            self.den = -self.den.clone();
            for lvl in &mut self.levels {
                for (_, c) in lvl.iter_mut() {
                    *c = -std::mem::take(c);
                }
            }
        }
        if self.den.is_one() {
            return;
        }
        let mut g = self.den.clone();
        'outer: for lvl in &self.levels {
            for (_, c) in lvl {
                g = g.gcd(&c.to_bigint());
                if g.is_one() {
                    break 'outer;
                }
            }
        }
        if self.is_zero() {
            g = self.den.clone();
        }
        if !g.is_one() {
            self.den = &self.den / &g;
            for lvl in &mut self.levels {
                for (_, c) in lvl.iter_mut() {
                    *c = Int::from_bigint(c.to_bigint() / &g);
                }
            }
        }
    }

    pub fn truncate(&self, n: usize) -> Self {
        PolySeries::new(
            self.den.clone(),
            self.levels.iter().take(n).cloned().collect(),
        )
    }

    /// Largest `T` grade present on each level.
    fn grade_profile(&self, ring: &OrbitRing) -> Vec<Option<u32>> {
        self.levels
            .iter()
            .map(|l| l.iter().map(|(k, _)| ring.grade(*k)).max())
            .collect()
    }

    fn max_index(&self) -> Option<u32> {
        self.levels
            .iter()
            .filter_map(|l| l.last().map(|(k, _)| *k))
            .max()
    }

    /// `self * num / den` for an integer scale.
    pub fn scale(&self, num: &BigInt, den: &BigInt) -> Self {
        let n = Int::from(num);
        let levels = self
            .levels
            .iter()
            .map(|l| l.iter().map(|(k, c)| (*k, c * &n)).collect())
            .collect();
        PolySeries::new(&self.den * den, levels)
    }

    /// Linear combination `sum c_i f_i` with integer weights over a common
    /// denominator; truncation is the minimum.
    pub fn combine(terms: &[(&PolySeries, BigInt)]) -> Self {
        let n = terms.iter().map(|(f, _)| f.truncation()).min().unwrap_or(0);
        let mut den = BigInt::one();
        for (f, _) in terms {
            den = den.lcm(&f.den);
        }
        let mut levels = Vec::with_capacity(n);
        for lvl in 0..n {
            let mut acc: FxHashMap<u32, Int> = FxHashMap::default();
            for (f, c) in terms {
                if c.is_zero() {
                    continue;
                }
                let factor = Int::from_bigint(c * (&den / &f.den));
                for (k, v) in &f.levels[lvl] {
                    acc.entry(*k).or_default().add_mul(v, &factor);
                }
            }
            levels.push(to_sorted(acc));
        }
        PolySeries::new(den, levels)
    }

    pub fn add(&self, other: &PolySeries) -> Self {
        PolySeries::combine(&[(self, BigInt::one()), (other, BigInt::one())])
    }

    pub fn sub(&self, other: &PolySeries) -> Self {
        PolySeries::combine(&[(self, BigInt::one()), (other, -BigInt::one())])
    }

    /// Product in the orbit ring, growing the shared ring when the product
    /// reaches higher grades.
    pub fn mul(&self, other: &PolySeries) -> Result<Self> {
        let n = self.truncation().min(other.truncation());
        let probe = ring_with_grade(0)?;
        let fa = self.grade_profile(&probe);
        let fb = other.grade_profile(&probe);
        let mut need = 0;
        for a in 0..n {
            for b in 0..n - a {
                if let (Some(x), Some(y)) = (fa[a], fb[b]) {
                    need = need.max(x + y);
                }
            }
        }
        let ring = ring_with_grade(need)?;
        let width = ring.len();
        let mut levels = Vec::with_capacity(n);
        let mut acc: Vec<Int> = vec![Int::zero(); width];
        let mut touched: Vec<u32> = Vec::new();
        for lvl in 0..n {
            for a in 0..=lvl {
                let (la, lb) = (&self.levels[a], &other.levels[lvl - a]);
                if la.is_empty() || lb.is_empty() {
                    continue;
                }
                for (ia, ca) in la {
                    let row = *ia as usize * width;
                    for (ib, cb) in lb {
                        let k = ring.sum_table[row + *ib as usize];
                        debug_assert_ne!(k, NONE);
                        let slot = &mut acc[k as usize];
                        if slot.is_zero() {
                            touched.push(k);
                        }
                        slot.add_mul(ca, cb);
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let mut out = Vec::with_capacity(touched.len());
            for &k in &touched {
                let c = std::mem::take(&mut acc[k as usize]);
                if !c.is_zero() {
                    out.push((k, c));
                }
            }
            touched.clear();
            levels.push(out);
        }
        Ok(PolySeries::new(&self.den * &other.den, levels))
    }

    /// Multiplication by a scalar q-series with integer coefficients.
    pub fn mul_scalar_series(&self, s: &[BigInt]) -> Self {
        let n = self.truncation().min(s.len());
        let width = self.max_index().map_or(0, |k| k as usize + 1);
        let s_int: Vec<Int> = s.iter().map(Int::from).collect();
        let mut levels = Vec::with_capacity(n);
        let mut acc: Vec<Int> = vec![Int::zero(); width];
        for lvl in 0..n {
            for j in 0..=lvl {
                if s_int[j].is_zero() {
                    continue;
                }
                for (k, c) in &self.levels[lvl - j] {
                    acc[*k as usize].add_mul(c, &s_int[j]);
                }
            }
            let mut out = Vec::new();
            for (k, slot) in acc.iter_mut().enumerate() {
                if !slot.is_zero() {
                    out.push((k as u32, std::mem::take(slot)));
                }
            }
            levels.push(out);
        }
        PolySeries::new(self.den.clone(), levels)
    }

    /// Division by `q^n`; the first `n` levels must vanish.
    pub fn shift_down(&self, n: usize) -> Result<Self> {
        if let Some(lvl) = (0..n.min(self.truncation())).find(|&l| !self.levels[l].is_empty()) {
            return Err(Error::mismatch(format!(
                "not divisible by q^{n}: level q^{lvl} is nonzero"
            )));
        }
        Ok(PolySeries {
            den: self.den.clone(),
            levels: self.levels.iter().skip(n).cloned().collect(),
        })
    }

    /// Level `n` in the orbit basis, as a sparse vector over the same denominator.
    pub fn level_in_orbits(&self, n: usize) -> Result<Sparse> {
        Ok(ring_with_grade(0)?.to_orbits(&self.levels[n]))
    }
}
