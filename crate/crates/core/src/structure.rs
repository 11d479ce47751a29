//! Module structure of weak and holomorphic forms of fixed index: ranks,
//! dimension gaps, weak bases from the universal ansatz, generator weights,
//! singular-weight spaces and conjecture checks.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::e8::{self, DominantWeight, LatticeVector};
use crate::error::{Error, Result};
use crate::generators::{builtin, monomials, Engine, Exponents, GeneratorPolynomial, E4};
use crate::int::Int;
use crate::jacobi::{hecke_theta, JacobiExpansion};
use crate::linalg::{normalize_vector, IntMatrix, RationalMatrix};
use crate::orbit_ring::{ring_with_grade, PolySeries, Sparse};
use crate::qseries::discriminant;

/// `r(t)` for `0 <= t <= t_max`: coefficients of
/// `1 / ((1-x)(1-x^2)^2(1-x^3)^2(1-x^4)^2(1-x^5)(1-x^6))`.
pub fn rank_r(t_max: usize) -> Vec<u64> {
    let mut r = vec![0u64; t_max + 1];
    r[0] = 1;
    for d in [1usize, 2, 2, 3, 3, 4, 4, 5, 6] {
        for t in d..=t_max {
            r[t] += r[t - d];
        }
    }
    r
}

/// `ceil(a / t)`.
pub fn epsilon(t: u64, a: u64) -> u64 {
    a.div_ceil(t)
}

/// `sum_a eps_t(a) |S_t(a)|`, where `S_t(a)` collects the nonzero dominant
/// weights with `T(x) <= t` and `(x, x) = 2a`.
pub fn delta_t(t: u32) -> u64 {
    e8::dominant_by_t(t)
        .iter()
        .filter(|m| !m.is_zero())
        .map(|m| epsilon(t as u64, m.norm() as u64))
        .sum()
}

/// The `Delta` power of the universal ansatz.
pub fn n_cap(t: u32) -> usize {
    let t0 = (t / 6) as usize;
    match t % 6 {
        0 | 1 => 5 * t0,
        2 => 5 * t0 + 1,
        3 => 5 * t0 + 2,
        _ => 5 * t0 + 3,
    }
}

/// The `E4` power of the universal ansatz.
pub fn t1(t: u32) -> u32 {
    t / 5
}

/// `ceil(max { (m, m) / 2t : T(m) <= t })`: beyond `q^{M_t - 1}` a weak form
/// of index `t` has no coefficients with `(l, l) > 2nt` left to check.
pub fn m_cap(t: u32) -> usize {
    let max = e8::dominant_by_t(t)
        .iter()
        .map(DominantWeight::norm2)
        .max()
        .unwrap_or(0);
    (max as u64).div_ceil(2 * t as u64) as usize
}

/// Generator levels needed by [`Workspace::weak_basis`] at index `t`.
pub fn weak_levels(t: u32) -> usize {
    n_cap(t).max(1)
}

/// Generator levels needed by [`Workspace::holo_basis`] at index `t`.
pub fn holo_levels(t: u32) -> usize {
    n_cap(t) + m_cap(t)
}

/// Generator levels needed by [`Workspace::singular_solve`] with `Delta^d`;
/// `None` selects the default power `N_t - 1`.
pub fn singular_levels(t: u32, d: Option<usize>) -> usize {
    d.unwrap_or_else(|| n_cap(t).saturating_sub(1)) + m_cap(t).max(1)
}

/// `N(t)`: number of Weyl orbits of norm `t`.
pub fn orbit_count_norm(t: u64) -> usize {
    e8::dominant_by_norm(t).len()
}

/// A weak form `numerator / (Delta^D E4^e)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakForm {
    pub weight: i32,
    pub index: u32,
    pub delta_power: usize,
    pub e4_power: u32,
    pub numerator: GeneratorPolynomial,
}

impl WeakForm {
    /// Expansion to `engine truncation - delta_power` levels.
    pub fn expansion(&self, engine: &Engine) -> Result<JacobiExpansion> {
        let num = engine.expand(&self.numerator)?;
        divide_out(num, self.delta_power, self.e4_power)
    }
}

fn divide_out(num: JacobiExpansion, delta_power: usize, e4_power: u32) -> Result<JacobiExpansion> {
    let mut f = if delta_power > 0 {
        num.div_delta(delta_power)?
    } else {
        num
    };
    for _ in 0..e4_power {
        f = f.div_e4();
    }
    Ok(f.with_holomorphic(false))
}

/// An ansatz column: `mono * E4^slot * P165^(t1 - slot)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Column {
    slot: u32,
    mono: Exponents,
}

fn ansatz_columns(num_weight: i32, t: u32, e4_power: u32) -> Vec<Column> {
    let mut out = Vec::new();
    for j in 0..=e4_power {
        let rest = e4_power - j;
        let w = num_weight - 16 * rest as i32 - 4 * j as i32;
        let idx = t - 5 * rest;
        for mono in monomials(w, idx, j < e4_power, false) {
            out.push(Column { slot: j, mono });
        }
    }
    out
}

/// Shared state for structural computations: generator expansions, powers
/// of `P165` and memoized weak bases.
pub struct Workspace {
    engine: Engine,
    p165: GeneratorPolynomial,
    p165_powers: Mutex<Vec<Arc<PolySeries>>>,
    weak: Mutex<FxHashMap<(i32, u32), Arc<Vec<WeakForm>>>>,
}

impl Workspace {
    pub fn new(engine: Engine) -> Self {
        Workspace {
            engine,
            p165: builtin("P165").expect("builtin"),
            p165_powers: Mutex::new(Vec::new()),
            weak: Mutex::new(FxHashMap::default()),
        }
    }

    /// Workspace with generators expanded to `levels` levels.
    pub fn build(levels: usize) -> Result<Self> {
        Ok(Workspace::new(Engine::build(levels)?))
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn truncation(&self) -> usize {
        self.engine.truncation()
    }

    fn require(&self, levels: usize, what: &str) -> Result<()> {
        if self.truncation() < levels {
            return Err(Error::resource(format!(
                "{what} needs generator expansions to {levels} levels (order {}), have {}",
                levels.saturating_sub(1),
                self.truncation()
            )));
        }
        Ok(())
    }

    fn p165_power(&self, k: u32) -> Result<Arc<PolySeries>> {
        let mut cache = self.p165_powers.lock().expect("lock");
        if cache.is_empty() {
            cache.push(Arc::new(PolySeries::one(self.truncation())));
        }
        while cache.len() <= k as usize {
            let next = cache
                .last()
                .expect("nonempty")
                .mul(&self.engine.expand_poly(&self.p165)?)?;
            cache.push(Arc::new(next));
        }
        Ok(cache[k as usize].clone())
    }

    fn column_series(&self, c: &Column, e4_power: u32) -> Result<PolySeries> {
        let mut e = c.mono;
        e[E4] += c.slot;
        let base = self.engine.monomial(&e)?;
        let rest = e4_power - c.slot;
        if rest == 0 {
            Ok((*base).clone())
        } else {
            base.mul(&*self.p165_power(rest)?)
        }
    }

    fn column_polynomial(&self, c: &Column, e4_power: u32) -> GeneratorPolynomial {
        let mut e = c.mono;
        e[E4] += c.slot;
        GeneratorPolynomial::monomial(e, BigRational::one()).mul(&self.p165.pow(e4_power - c.slot))
    }

    /// Canonical basis of weak forms of weight `k` and index `t`.
    pub fn weak_basis(&self, k: i32, t: u32) -> Result<Arc<Vec<WeakForm>>> {
        self.weak_basis_with(k, t, None)
    }

    /// As [`Workspace::weak_basis`], with an optional `Delta` power in place of `N_t`.
    pub fn weak_basis_with(
        &self,
        k: i32,
        t: u32,
        delta_power: Option<usize>,
    ) -> Result<Arc<Vec<WeakForm>>> {
        if delta_power.is_none() {
            if let Some(b) = self.weak.lock().expect("lock").get(&(k, t)) {
                return Ok(b.clone());
            }
        }
        if t == 0 {
            return Err(Error::usage("index must be positive"));
        }
        let d = delta_power.unwrap_or_else(|| n_cap(t));
        let e4p = t1(t);
        self.require(d.max(1), "weak basis")?;
        let num_weight = k + 12 * d as i32 + 4 * e4p as i32;
        let cols = if k % 2 != 0 || num_weight < 0 {
            Vec::new()
        } else {
            ansatz_columns(num_weight, t, e4p)
        };
        let series = cols
            .iter()
            .map(|c| self.column_series(c, e4p))
            .collect::<Result<Vec<_>>>()?;
        let kernel = column_kernel(&series, &[], d)?;
        let basis: Vec<WeakForm> = kernel
            .iter()
            .map(|x| {
                let numerator =
                    cols.iter()
                        .zip(x)
                        .fold(GeneratorPolynomial::zero(), |acc, (c, xc)| {
                            if xc.is_zero() {
                                acc
                            } else {
                                acc.add(&self.column_polynomial(c, e4p).scale(xc))
                            }
                        });
                WeakForm {
                    weight: k,
                    index: t,
                    delta_power: d,
                    e4_power: e4p,
                    numerator,
                }
            })
            .collect();
        let basis = Arc::new(basis);
        if delta_power.is_none() {
            self.weak
                .lock()
                .expect("lock")
                .insert((k, t), basis.clone());
        }
        Ok(basis)
    }

    pub fn weak_dim(&self, k: i32, t: u32) -> Result<usize> {
        Ok(self.weak_basis(k, t)?.len())
    }

    /// Smallest weight with a nonzero weak form, scanning up from `-5t`.
    pub fn min_weight(&self, t: u32) -> Result<i32> {
        let mut k = -5 * t as i32;
        if k % 2 != 0 {
            k += 1;
        }
        while k <= MAX_GENERATOR_WEIGHT {
            if self.weak_dim(k, t)? > 0 {
                return Ok(k);
            }
            k += 2;
        }
        Err(Error::mismatch(format!(
            "no weak form of index {t} up to weight {MAX_GENERATOR_WEIGHT}"
        )))
    }

    /// Generators of the free module of weak forms of index `t`.
    pub fn module_generators(&self, t: u32) -> Result<ModuleDescription> {
        let kmin = self.min_weight(t)?;
        let mut generators = Vec::new();
        let mut dims = BTreeMap::new();
        let mut k = kmin;
        while k <= MAX_GENERATOR_WEIGHT {
            let basis = self.weak_basis(k, t)?;
            dims.insert(k, basis.len());
            let mut spanning: Vec<GeneratorPolynomial> = Vec::new();
            for (shift, gen) in [(4, 0usize), (6, 1)] {
                if k - shift >= kmin {
                    let g = GeneratorPolynomial::generator(gen);
                    for f in self.weak_basis(k - shift, t)?.iter() {
                        spanning.push(f.numerator.mul(&g));
                    }
                }
            }
            let mut rank = polynomial_rank(&spanning)?;
            for f in basis.iter() {
                spanning.push(f.numerator.clone());
                let r = polynomial_rank(&spanning)?;
                if r > rank {
                    rank = r;
                    generators.push(f.clone());
                } else {
                    spanning.pop();
                }
            }
            if rank != basis.len() {
                return Err(Error::mismatch(format!(
                    "weight {k}, index {t}: E4/E6 multiples and generators span {rank} of {} dimensions",
                    basis.len()
                )));
            }
            k += 2;
        }
        let mut poly = BTreeMap::new();
        for g in &generators {
            *poly.entry(g.weight).or_insert(0usize) += 1;
        }
        Ok(ModuleDescription {
            index: t,
            generators,
            weight_polynomial: poly,
            computed_dims: dims,
        })
    }

    /// Whether `form` is a weak form of its bidegree, and whether it is a
    /// new generator modulo `E4` and `E6` multiples of lower weights.
    pub fn classify(&self, form: &WeakForm) -> Result<Membership> {
        let (k, t) = (form.weight, form.index);
        let (d, e) = (n_cap(t), t1(t));
        if form.delta_power > d || form.e4_power > e {
            return Err(Error::usage(format!(
                "denominator Delta^{} E4^{} exceeds the ansatz Delta^{d} E4^{e}",
                form.delta_power, form.e4_power
            )));
        }
        if form.numerator.bidegree()
            != Some((
                k + 12 * form.delta_power as i32 + 4 * form.e4_power as i32,
                t,
            ))
        {
            return Err(Error::usage("numerator bidegree does not match the form"));
        }
        let delta = GeneratorPolynomial::parse("E4^3/1728 - E6^2/1728")?;
        let lifted = form
            .numerator
            .mul(&delta.pow((d - form.delta_power) as u32))
            .mul(&GeneratorPolynomial::generator(E4).pow(e - form.e4_power));
        let basis: Vec<GeneratorPolynomial> = self
            .weak_basis(k, t)?
            .iter()
            .map(|f| f.numerator.clone())
            .collect();
        let mut with = basis.clone();
        with.push(lifted.clone());
        let in_space = polynomial_rank(&with)? == polynomial_rank(&basis)?;
        let mut lower = Vec::new();
        for (shift, gen) in [(4, 0usize), (6, 1)] {
            let g = GeneratorPolynomial::generator(gen);
            for f in self.weak_basis(k - shift, t)?.iter() {
                lower.push(f.numerator.mul(&g));
            }
        }
        let r = polynomial_rank(&lower)?;
        lower.push(lifted);
        let is_generator = in_space && polynomial_rank(&lower)? > r;
        Ok(Membership {
            in_space,
            is_generator,
        })
    }

    /// Holomorphic forms of weight `k` and index `t`, obtained by imposing
    /// `c(n, l) = 0` for `(l, l) > 2nt`, `n < M_t`, on the weak basis.
    pub fn holo_basis(&self, k: i32, t: u32) -> Result<Vec<JacobiExpansion>> {
        let basis = self.weak_basis(k, t)?;
        let mt = m_cap(t);
        self.require(holo_levels(t), "holomorphic basis")?;
        let exps = basis
            .iter()
            .map(|f| f.expansion(&self.engine))
            .collect::<Result<Vec<_>>>()?;
        let mut rows: BTreeMap<(usize, DominantWeight), usize> = BTreeMap::new();
        for e in &exps {
            for n in 0..mt {
                for m in e.level(n).keys() {
                    if m.norm2() > 2 * (n as i64) * t as i64 {
                        let len = rows.len();
                        rows.entry((n, *m)).or_insert(len);
                    }
                }
            }
        }
        let mut mat = RationalMatrix::zeros(rows.len(), exps.len());
        for (j, e) in exps.iter().enumerate() {
            for (&(n, m), &i) in &rows {
                mat.set(i, j, e.coeff(n, &m));
            }
        }
        let mut out = Vec::new();
        for v in mat.kernel_basis() {
            let mut f =
                JacobiExpansion::new(k, t, true, vec![Default::default(); exps[0].truncation()]);
            for (e, c) in exps.iter().zip(&v) {
                if !c.is_zero() {
                    f = f.add(&e.scale(&BigRational::from_integer(c.clone())))?;
                }
            }
            out.push(f.with_holomorphic(true));
        }
        Ok(out)
    }

    /// `dim J_{k,t}` from [`Workspace::holo_basis`], independent of `delta_t`.
    pub fn holo_dim_direct(&self, k: i32, t: u32) -> Result<usize> {
        Ok(self.holo_basis(k, t)?.len())
    }

    /// Holomorphic forms of singular weight 4 and index `t`.
    pub fn singular_solve(&self, t: u32, delta_power: Option<usize>) -> Result<SingularSpace> {
        if t == 0 {
            return Err(Error::usage("index must be positive"));
        }
        let d = delta_power.unwrap_or_else(|| n_cap(t).saturating_sub(1));
        let e4p = t1(t);
        let mt = m_cap(t);
        // The q^0-term of a solution vanishes, which matters when M_t = 0.
        let levels = singular_levels(t, Some(d));
        self.require(levels, "singular-weight solve")?;
        let num_weight = 4 + 12 * d as i32 + 4 * e4p as i32;
        let cols = ansatz_columns(num_weight, t, e4p);
        let series = cols
            .iter()
            .map(|c| self.column_series(c, e4p))
            .collect::<Result<Vec<_>>>()?;
        // Unknown singular coefficients: q^n orb(m) with (m, m) = 2nt, 1 <= n < M_t.
        let mut singular: Vec<(usize, DominantWeight)> = Vec::new();
        for n in 1..mt {
            for m in e8::dominant_by_norm(n as u64 * t as u64) {
                singular.push((n, m));
            }
        }
        let n = self.truncation();
        let mut factor = discriminant(n).pow(d as u32);
        let e4 = crate::qseries::eisenstein(4, n)?;
        for _ in 0..e4p {
            factor = &factor * &e4;
        }
        let factor = factor.to_integers().expect("integral");
        let sing_series = singular
            .iter()
            .map(|(sn, m)| singular_column(*sn, m, &factor))
            .collect::<Result<Vec<_>>>()?;
        let kernel = column_kernel(&series, &sing_series, levels)?;
        let mut basis = vec![hecke_theta(t, n - d)?];
        let mut certificates = vec![None];
        for x in &kernel {
            let (xc, xs) = x.split_at(cols.len());
            let lead = xs.iter().find(|c| !c.is_zero()).cloned().ok_or_else(|| {
                Error::mismatch(format!("index {t}: solution without singular coefficients"))
            })?;
            let xc: Vec<BigRational> = xc.iter().map(|c| c / &lead).collect();
            let terms: Vec<(&PolySeries, BigRational)> = series
                .iter()
                .zip(&xc)
                .filter(|(_, c)| !c.is_zero())
                .map(|(s, c)| (s, c.clone()))
                .collect();
            let num = combine_rational(&terms, n);
            let f = JacobiExpansion::from_poly(num_weight, t, false, &num)?;
            let f = divide_out(f, d, e4p)?;
            if let Some(w) = f.check_singular_support() {
                return Err(Error::mismatch(format!(
                    "index {t}: solution leaves the singular support at {w}"
                )));
            }
            let numerator =
                cols.iter()
                    .zip(&xc)
                    .fold(GeneratorPolynomial::zero(), |acc, (c, v)| {
                        if v.is_zero() {
                            acc
                        } else {
                            acc.add(&self.column_polynomial(c, e4p).scale(v))
                        }
                    });
            basis.push(f.with_holomorphic(true));
            certificates.push(Some(WeakForm {
                weight: 4,
                index: t,
                delta_power: d,
                e4_power: e4p,
                numerator,
            }));
        }
        Ok(SingularSpace {
            index: t,
            dimension: basis.len(),
            delta_power: d,
            m_cap: mt,
            basis,
            certificates,
        })
    }

    /// `dim J_{k,t}` for holomorphic forms: `dim J^w - delta_t` for `k >= 6`,
    /// the singular-weight solve for `k = 4`, and zero below.
    pub fn holo_dim(&self, k: i32, t: u32) -> Result<usize> {
        if k < 4 || k % 2 != 0 {
            return Ok(0);
        }
        if k == 4 {
            return Ok(self.singular_solve(t, None)?.dimension);
        }
        let weak = self.weak_dim(k, t)?;
        let delta = delta_t(t) as usize;
        weak.checked_sub(delta).ok_or_else(|| {
            Error::mismatch(format!(
                "dim J^w_{{{k},{t}}} = {weak} is below delta_{t} = {delta}"
            ))
        })
    }
}

/// Generators of weight above this are not searched for.
pub const MAX_GENERATOR_WEIGHT: i32 = 16;

/// `q^n orb(m) * factor(q)` in the monomial basis.
fn singular_column(n: usize, m: &DominantWeight, factor: &[BigInt]) -> Result<PolySeries> {
    let ring = ring_with_grade(m.t_grade())?;
    let idx = ring.index_of(m).expect("grade covered");
    let vec = ring.to_monomials(&vec![(idx, Int::Small(1))]);
    let levels: Vec<Sparse> = (0..factor.len())
        .map(|l| {
            if l < n || factor[l - n].is_zero() {
                Vec::new()
            } else {
                let c = Int::from(&factor[l - n]);
                vec.iter()
                    .map(|(k, v)| (*k, v.clone() * c.clone()))
                    .collect()
            }
        })
        .collect();
    Ok(PolySeries::new(BigInt::one(), levels))
}

fn combine_rational(terms: &[(&PolySeries, BigRational)], n: usize) -> PolySeries {
    if terms.is_empty() {
        return PolySeries::zero(n);
    }
    let den = terms.iter().fold(BigInt::one(), |l, (_, c)| {
        num_integer::Integer::lcm(&l, c.denom())
    });
    let ints: Vec<(&PolySeries, BigInt)> = terms
        .iter()
        .map(|(s, c)| (*s, c.numer() * (&den / c.denom())))
        .collect();
    PolySeries::combine(&ints).scale(&BigInt::one(), &den)
}

/// Kernel of `sum_c x_c col_c - sum_e y_e extra_e = 0` on the first `levels`
/// levels, in terms of the original (unscaled) columns.
fn column_kernel(
    cols: &[PolySeries],
    extra: &[PolySeries],
    levels: usize,
) -> Result<Vec<Vec<BigRational>>> {
    let all: Vec<&PolySeries> = cols.iter().chain(extra.iter()).collect();
    let mut rows: FxHashMap<(usize, u32), usize> = FxHashMap::default();
    let mut order: Vec<(usize, u32)> = Vec::new();
    for s in &all {
        for (n, l) in s.levels().iter().enumerate().take(levels) {
            for (k, _) in l {
                rows.entry((n, *k)).or_insert_with(|| {
                    order.push((n, *k));
                    order.len() - 1
                });
            }
        }
    }
    let mut m = IntMatrix::zeros(order.len(), all.len());
    for (j, s) in all.iter().enumerate() {
        let sign = if j < cols.len() { 1 } else { -1 };
        for (n, l) in s.levels().iter().enumerate().take(levels) {
            for (k, v) in l {
                let i = rows[&(n, *k)];
                m.data[i * all.len() + j] = if sign > 0 { v.clone() } else { -v.clone() };
            }
        }
    }
    let kernel = m.kernel();
    Ok(kernel
        .basis
        .iter()
        .map(|y| {
            let x: Vec<BigRational> = y
                .iter()
                .zip(&all)
                .map(|(yc, s)| BigRational::from_integer(yc * s.denominator()))
                .collect();
            normalize_vector(&x)
                .into_iter()
                .map(BigRational::from_integer)
                .collect()
        })
        .collect())
}

/// Rank of polynomials as coefficient vectors.
pub fn polynomial_rank(polys: &[GeneratorPolynomial]) -> Result<usize> {
    if polys.is_empty() {
        return Ok(0);
    }
    let mut index: BTreeMap<Exponents, usize> = BTreeMap::new();
    for p in polys {
        for e in p.terms().keys() {
            let len = index.len();
            index.entry(*e).or_insert(len);
        }
    }
    let mut m = RationalMatrix::zeros(polys.len(), index.len());
    for (i, p) in polys.iter().enumerate() {
        for (e, c) in p.terms() {
            m.set(i, index[e], c.clone());
        }
    }
    Ok(m.rank())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub in_space: bool,
    pub is_generator: bool,
}

#[derive(Clone, Debug)]
pub struct ModuleDescription {
    pub index: u32,
    pub generators: Vec<WeakForm>,
    /// `k -> d_{k,t}`.
    pub weight_polynomial: BTreeMap<i32, usize>,
    /// `k -> dim J^w_{k,t}` for every weight scanned.
    pub computed_dims: BTreeMap<i32, usize>,
}

impl ModuleDescription {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn series(&self, to: i32) -> BTreeMap<i32, u64> {
        gen_series(&self.weight_polynomial, to)
    }
}

/// `P(x) / ((1 - x^4)(1 - x^6))` up to and including `x^to`.
pub fn gen_series(poly: &BTreeMap<i32, usize>, to: i32) -> BTreeMap<i32, u64> {
    let mut out = BTreeMap::new();
    let Some(&lo) = poly.keys().next() else {
        return out;
    };
    let mut k = lo;
    while k <= to {
        out.insert(k, 0);
        k += 2;
    }
    for (&w, &d) in poly {
        let mut a = 0;
        while w + 4 * a <= to {
            let mut b = 0;
            while w + 4 * a + 6 * b <= to {
                *out.get_mut(&(w + 4 * a + 6 * b)).expect("even grid") += d as u64;
                b += 1;
            }
            a += 1;
        }
    }
    out
}

/// Renders `sum d_k x^k` as `x^-4 + x^-2 + 1`.
pub fn format_laurent(poly: &BTreeMap<i32, u64>) -> String {
    let mut parts = Vec::new();
    for (&k, &d) in poly {
        if d == 0 {
            continue;
        }
        let mono = match k {
            0 => String::new(),
            1 => "x".into(),
            _ => format!("x^{k}"),
        };
        parts.push(match (d, mono.is_empty()) {
            (_, true) => d.to_string(),
            (1, false) => mono,
            (_, false) => format!("{d}*{mono}"),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

#[derive(Clone, Debug)]
pub struct SingularSpace {
    pub index: u32,
    pub dimension: usize,
    pub delta_power: usize,
    pub m_cap: usize,
    /// `X_t` first, then solutions with zero `q^0`-term.
    pub basis: Vec<JacobiExpansion>,
    pub certificates: Vec<Option<WeakForm>>,
}

impl SingularSpace {
    /// The element `1 + (240 / |W m|) q orb(m) + O(q^2)` with no other
    /// norm-`t` orbit at `q^1`, if the space contains one.
    pub fn phi(&self, m: &DominantWeight) -> Result<Option<JacobiExpansion>> {
        let t = self.index as u64;
        if m.norm() as u64 != t {
            return Err(Error::usage(format!(
                "orbit {} does not have norm {t}",
                m.label()
            )));
        }
        let targets = e8::dominant_by_norm(t);
        let x = &self.basis[0];
        if x.truncation() < 2 {
            return Err(Error::resource("need the q^1 term"));
        }
        let rest = &self.basis[1..];
        let mut mat = RationalMatrix::zeros(targets.len(), rest.len());
        let mut rhs = Vec::with_capacity(targets.len());
        for (i, o) in targets.iter().enumerate() {
            for (j, f) in rest.iter().enumerate() {
                mat.set(i, j, f.coeff(1, o));
            }
            let want = if o == m {
                BigRational::new(240.into(), BigInt::from(o.orbit_size()))
            } else {
                BigRational::zero()
            };
            rhs.push(want - x.coeff(1, o));
        }
        let Some(a) = mat.solve(&rhs) else {
            return Ok(None);
        };
        let mut out = x.clone();
        for (f, c) in rest.iter().zip(&a) {
            if !c.is_zero() {
                out = out.add(&f.truncate(out.truncation()).scale(c))?;
            }
        }
        Ok(Some(out))
    }
}

/// Minimal weights of stable generator counts: `(K, L(K), d_{K, L(K)})`.
pub const STABILITY_TABLE: [(i32, u32, usize); 13] = [
    (0, 2, 1),
    (-2, 2, 1),
    (-4, 2, 1),
    (-6, 3, 1),
    (-8, 4, 2),
    (-10, 5, 2),
    (-12, 5, 3),
    (-14, 7, 4),
    (-16, 8, 5),
    (-18, 9, 6),
    (-20, 10, 8),
    (-22, 11, 9),
    (-24, 12, 12),
];

/// `max { (y, v4) : y in W w_i }` for a norm-2 vector `v4` (`(v4, v4) = 4`).
pub fn pairing_values() -> [i64; 8] {
    // Norm-2 vectors form a single Weyl orbit, so w1 is as good as any.
    let v4 = LatticeVector::fundamental_weight(1);
    std::array::from_fn(|i| e8::max_pairing(&DominantWeight::fundamental(i + 1), &v4))
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub index: u32,
    pub min_weight: i32,
    pub min_weight_bound_holds: bool,
    pub unique_low_generators: bool,
    pub holo_singular_dim: Option<usize>,
    pub orbit_count: usize,
    pub singular_matches_orbits: Option<bool>,
    pub stability: Vec<(i32, usize, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub pairing: [i64; 8],
    pub indices: Vec<IndexReport>,
}

impl Workspace {
    /// Evidence for the minimal-weight, stability, low-weight uniqueness and
    /// singular-dimension conjectures over `t_range`. Singular dimensions are
    /// included only where the expansions suffice.
    pub fn conjecture_report(
        &self,
        t_range: std::ops::RangeInclusive<u32>,
    ) -> Result<ConjectureReport> {
        let mut indices = Vec::new();
        for t in t_range {
            let module = self.module_generators(t)?;
            let min_weight = *module.weight_polynomial.keys().next().expect("nonempty");
            let d = |k: i32| module.weight_polynomial.get(&k).copied().unwrap_or(0);
            let unique_low_generators = t < 2 || [0, -2, -4].iter().all(|&k| d(k) == 1);
            let holo = match self.singular_solve(t, None) {
                Ok(s) => Some(s.dimension),
                Err(Error::Resource(_)) => None,
                Err(e) => return Err(e),
            };
            let orbit_count = orbit_count_norm(t as u64);
            let stability = STABILITY_TABLE
                .iter()
                .filter(|(_, l, _)| *l <= t)
                .map(|&(k, _, expect)| (k, expect, d(k)))
                .collect();
            indices.push(IndexReport {
                index: t,
                min_weight,
                min_weight_bound_holds: min_weight >= -4 * t as i32,
                unique_low_generators,
                holo_singular_dim: holo,
                orbit_count,
                singular_matches_orbits: holo.map(|h| h == orbit_count),
                stability,
            });
        }
        Ok(ConjectureReport {
            pairing: pairing_values(),
            indices,
        })
    }
}

impl ConjectureReport {
    /// Every computed verdict holds.
    pub fn all_hold(&self) -> bool {
        self.pairing == [4, 5, 7, 10, 8, 6, 4, 2]
            && self.indices.iter().all(|r| {
                r.min_weight_bound_holds
                    && r.unique_low_generators
                    && r.singular_matches_orbits != Some(false)
                    && r.stability.iter().all(|(_, e, d)| e == d)
            })
    }
}

pub fn laurent_from_dims(dims: &BTreeMap<i32, usize>) -> BTreeMap<i32, u64> {
    dims.iter().map(|(&k, &d)| (k, d as u64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_series() {
        let r = rank_r(18);
        assert_eq!(r[0], 1);
        assert_eq!(
            &r[1..],
            &[1, 3, 5, 10, 15, 27, 39, 63, 90, 135, 187, 270, 364, 505, 670, 902, 1173, 1545]
        );
    }

    #[test]
    fn caps() {
        assert_eq!(n_cap(2), 1);
        assert_eq!(n_cap(5), 3);
        assert_eq!(n_cap(6), 5);
        assert_eq!(n_cap(13), 10);
        assert_eq!(t1(13), 2);
        assert_eq!(m_cap(2), 1);
        assert_eq!(epsilon(5, 7), 2);
    }

    #[test]
    fn delta_values() {
        assert_eq!(delta_t(1), 0);
        assert_eq!(delta_t(2), 2);
        assert_eq!(delta_t(13), 1373);
    }

    #[test]
    fn series_from_weight_polynomial() {
        let p: BTreeMap<i32, usize> = [(-4, 1), (-2, 1), (0, 1)].into_iter().collect();
        let s = gen_series(&p, 20);
        assert_eq!(s[&-4], 1);
        assert_eq!(s[&0], 2);
        assert_eq!(s[&20], 7);
        assert_eq!(format_laurent(&laurent_from_dims(&p)), "x^-4 + x^-2 + 1");
    }

    #[test]
    fn pairing_table() {
        assert_eq!(pairing_values(), [4, 5, 7, 10, 8, 6, 4, 2]);
    }

    #[test]
    fn index_two_basis() {
        let ws = Workspace::build(3).unwrap();
        assert_eq!(ws.weak_dim(-6, 1).unwrap(), 0);
        assert_eq!(ws.weak_dim(-4, 2).unwrap(), 1);
        assert_eq!(ws.weak_dim(6, 2).unwrap(), 3);
        let b = ws.weak_basis(-4, 2).unwrap();
        let expect = GeneratorPolynomial::parse("A1^2 - A2*E4").unwrap();
        assert_eq!(b[0].numerator, expect);
        let m = ws.module_generators(2).unwrap();
        assert_eq!(
            format_laurent(&laurent_from_dims(&m.weight_polynomial)),
            "x^-4 + x^-2 + 1"
        );
    }

    #[test]
    fn minimal_weights() {
        let ws = Workspace::build(3).unwrap();
        assert_eq!(ws.min_weight(1).unwrap(), 4);
        assert_eq!(ws.min_weight(3).unwrap(), -8);
    }

    #[test]
    fn holomorphic_dimension_two_ways() {
        let ws = Workspace::build(5).unwrap();
        // dim J^w_{6,2} = 3 minus two singular orbits at q^0.
        assert_eq!(ws.holo_dim(6, 2).unwrap(), 1);
        for (k, t) in [(6, 2), (8, 3), (10, 4), (12, 3)] {
            assert_eq!(
                ws.holo_dim(k, t).unwrap(),
                ws.holo_dim_direct(k, t).unwrap(),
                "k={k} t={t}"
            );
        }
        assert_eq!(ws.holo_dim(2, 3).unwrap(), 0);
    }

    #[test]
    fn weak_forms_are_quasi_periodic() {
        let ws = Workspace::build(5).unwrap();
        for (k, t) in [(-8, 3), (-6, 3), (-16, 4)] {
            for f in ws.weak_basis(k, t).unwrap().iter() {
                let e = f.expansion(ws.engine()).unwrap();
                assert_eq!(e.truncation(), 5 - n_cap(t));
                assert!(e.quasi_periodicity_violation(1).unwrap().is_none());
                assert!(!e.level(0).is_empty());
            }
        }
    }

    #[test]
    fn singular_index_four_contains_a4() {
        let ws = Workspace::build(5).unwrap();
        let sp = ws.singular_solve(4, None).unwrap();
        assert_eq!(sp.dimension, 2);
        let n = sp.basis[0].truncation();
        let a4 = ws.engine().sakai().get(
            crate::generators::NAMES
                .iter()
                .position(|&s| s == "A4")
                .unwrap(),
        );
        let a4 = a4.truncate(n);
        let mut rows: BTreeMap<(usize, DominantWeight), usize> = BTreeMap::new();
        for f in sp.basis.iter().chain([&a4]) {
            for l in 0..n {
                for m in f.level(l).keys() {
                    let len = rows.len();
                    rows.entry((l, *m)).or_insert(len);
                }
            }
        }
        let mut mat = RationalMatrix::zeros(rows.len(), 2);
        let mut rhs = vec![BigRational::zero(); rows.len()];
        for (&(l, m), &i) in &rows {
            for j in 0..2 {
                mat.set(i, j, sp.basis[j].coeff(l, &m));
            }
            rhs[i] = a4.coeff(l, &m);
        }
        assert!(mat.solve(&rhs).is_some());
        for (f, cert) in sp.basis.iter().zip(&sp.certificates) {
            assert!(f.check_singular_support().is_none());
            if let Some(c) = cert {
                assert_eq!(&c.expansion(ws.engine()).unwrap().with_holomorphic(true), f);
            }
        }
    }

    #[test]
    fn singular_small_indices() {
        let ws = Workspace::build(6).unwrap();
        let dims: Vec<usize> = (1..=5)
            .map(|t| ws.singular_solve(t, None).unwrap().dimension)
            .collect();
        assert_eq!(dims, [1, 1, 1, 2, 1]);
        assert!(matches!(
            ws.singular_solve(7, None),
            Err(Error::Resource(_))
        ));
    }
}
