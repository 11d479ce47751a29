//! E8 root-system combinatorics.
//!
//! Vectors are written in the simple-root basis with Bourbaki node labels:
//! the chain `1-3-4-5-6-7-8` with node `2` attached to node `4`. In this
//! labeling `w8` is the highest root and `T(m) = (m, w8)` is the grading
//! `2m1 + 3m2 + 4m3 + 6m4 + 5m5 + 4m6 + 3m7 + 2m8`.
//!
//! The lattice is unimodular, so the fundamental weights are integral in the
//! root basis and weight coordinates `(v, alpha_i)` are integral for every
//! lattice vector.

use std::cmp::Ordering;

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RANK: usize = 8;

/// Order of the Weyl group W(E8).
pub const WEYL_ORDER: u64 = 696_729_600;

/// Cartan matrix (= Gram matrix of the simple roots).
pub const CARTAN: [[i64; RANK]; RANK] = [
    [2, 0, -1, 0, 0, 0, 0, 0],
    [0, 2, 0, -1, 0, 0, 0, 0],
    [-1, 0, 2, -1, 0, 0, 0, 0],
    [0, -1, -1, 2, -1, 0, 0, 0],
    [0, 0, 0, -1, 2, -1, 0, 0],
    [0, 0, 0, 0, -1, 2, -1, 0],
    [0, 0, 0, 0, 0, -1, 2, -1],
    [0, 0, 0, 0, 0, 0, -1, 2],
];

/// Inverse Cartan matrix: row `i` is `w_{i+1}` in root coordinates, and the
/// matrix is also the Gram matrix of the fundamental weights.
pub const INV_CARTAN: [[i64; RANK]; RANK] = [
    [4, 5, 7, 10, 8, 6, 4, 2],
    [5, 8, 10, 15, 12, 9, 6, 3],
    [7, 10, 14, 20, 16, 12, 8, 4],
    [10, 15, 20, 30, 24, 18, 12, 6],
    [8, 12, 16, 24, 20, 15, 10, 5],
    [6, 9, 12, 18, 15, 12, 8, 4],
    [4, 6, 8, 12, 10, 8, 6, 3],
    [2, 3, 4, 6, 5, 4, 3, 2],
];

/// `T(w_i) = (w_i, w_8)`.
pub const T_GRADING: [u32; RANK] = [2, 3, 4, 6, 5, 4, 3, 2];

/// Neighbours of each node in the Dynkin diagram (0-based).
const NEIGHBOURS: [&[usize]; RANK] = [
    &[2],
    &[3],
    &[0, 3],
    &[1, 2, 4],
    &[3, 5],
    &[4, 6],
    &[5, 7],
    &[6],
];

/// A lattice vector in simple-root coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVector(pub [i64; RANK]);

impl LatticeVector {
    pub const ZERO: LatticeVector = LatticeVector([0; RANK]);

    /// Simple root `alpha_i` for Bourbaki label `i` in `1..=8`.
    pub fn simple_root(i: usize) -> Self {
        assert!((1..=RANK).contains(&i), "node label out of range: {i}");
        let mut c = [0; RANK];
        c[i - 1] = 1;
        LatticeVector(c)
    }

    /// Fundamental weight `w_i` in root coordinates.
    pub fn fundamental_weight(i: usize) -> Self {
        assert!((1..=RANK).contains(&i), "node label out of range: {i}");
        LatticeVector(INV_CARTAN[i - 1])
    }

    pub fn from_weight_coords(w: [i64; RANK]) -> Self {
        let mut c = [0; RANK];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = (0..RANK).map(|j| INV_CARTAN[i][j] * w[j]).sum();
        }
        LatticeVector(c)
    }

    /// Pairings `(v, alpha_i)`.
    pub fn weight_coords(&self) -> [i64; RANK] {
        let mut w = [0; RANK];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = (0..RANK).map(|j| CARTAN[i][j] * self.0[j]).sum();
        }
        w
    }

    pub fn inner(&self, other: &LatticeVector) -> i64 {
        inner_product(self, other)
    }

    /// `(v, v)`, always even.
    pub fn norm2(&self) -> i64 {
        self.inner(self)
    }

    pub fn reflect(&self, i: usize) -> Self {
        let p = self.weight_coords()[i - 1];
        let mut c = self.0;
        c[i - 1] -= p;
        LatticeVector(c)
    }

    pub fn add(&self, other: &LatticeVector) -> Self {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        LatticeVector(c)
    }

    pub fn sub(&self, other: &LatticeVector) -> Self {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(other.0.iter()) {
            *a -= b;
        }
        LatticeVector(c)
    }

    pub fn neg(&self) -> Self {
        LatticeVector(self.0.map(|x| -x))
    }

    pub fn to_dominant(&self) -> DominantWeight {
        to_dominant(self)
    }
}

/// The symmetric bilinear form with Gram matrix [`CARTAN`].
pub fn inner_product(u: &LatticeVector, v: &LatticeVector) -> i64 {
    let mut s = 0;
    for i in 0..RANK {
        if u.0[i] == 0 {
            continue;
        }
        let row: i64 = (0..RANK).map(|j| CARTAN[i][j] * v.0[j]).sum();
        s += u.0[i] * row;
    }
    s
}

/// A dominant weight `m = sum m_i w_i`, all `m_i >= 0`.
///
/// Ordered canonically by `(norm, coordinates)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DominantWeight(pub [u32; RANK]);

impl DominantWeight {
    pub const ZERO: DominantWeight = DominantWeight([0; RANK]);

    /// `w_i` for Bourbaki label `i` in `1..=8`.
    pub fn fundamental(i: usize) -> Self {
        assert!((1..=RANK).contains(&i), "node label out of range: {i}");
        let mut m = [0; RANK];
        m[i - 1] = 1;
        DominantWeight(m)
    }

    pub fn coords(&self) -> [u32; RANK] {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// `(m, m')` through the Gram matrix of fundamental weights.
    pub fn inner(&self, other: &DominantWeight) -> i64 {
        let mut s = 0;
        for i in 0..RANK {
            if self.0[i] == 0 {
                continue;
            }
            let row: i64 = (0..RANK)
                .map(|j| INV_CARTAN[i][j] * other.0[j] as i64)
                .sum();
            s += self.0[i] as i64 * row;
        }
        s
    }

    /// `(m, m)`.
    pub fn norm2(&self) -> i64 {
        self.inner(self)
    }

    /// `(m, m) / 2`.
    pub fn norm(&self) -> i64 {
        self.norm2() / 2
    }

    /// `T(m) = (m, w8)`.
    pub fn t_grade(&self) -> u32 {
        self.0.iter().zip(T_GRADING).map(|(&m, t)| m * t).sum()
    }

    /// Height of `m` in the root basis (sum of root coordinates).
    pub fn height(&self) -> i64 {
        self.to_lattice().0.iter().sum()
    }

    pub fn to_lattice(&self) -> LatticeVector {
        LatticeVector::from_weight_coords(self.0.map(|x| x as i64))
    }

    pub fn add(&self, other: &DominantWeight) -> Self {
        let mut m = self.0;
        for (a, b) in m.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        DominantWeight(m)
    }

    pub fn scale(&self, a: u32) -> Self {
        DominantWeight(self.0.map(|x| x * a))
    }

    /// `m / a` if every coordinate is divisible by `a`.
    pub fn checked_div(&self, a: u32) -> Option<Self> {
        if a == 0 || self.0.iter().any(|x| x % a != 0) {
            None
        } else {
            Some(DominantWeight(self.0.map(|x| x / a)))
        }
    }

    pub fn orbit_size(&self) -> u64 {
        orbit_size(self)
    }

    /// Digit string `[m1...m8]`, with braces around any coordinate above 9.
    pub fn label(&self) -> String {
        let mut s = String::from("[");
        for &x in &self.0 {
            if x < 10 {
                s.push_str(&x.to_string());
            } else {
                s.push_str(&format!("{{{x}}}"));
            }
        }
        s.push(']');
        s
    }
}

impl Ord for DominantWeight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm2()
            .cmp(&other.norm2())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for DominantWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DominantWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A Weyl orbit described by its dominant representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylOrbit {
    pub rep: DominantWeight,
    pub size: u64,
    pub norm: i64,
}

impl WeylOrbit {
    pub fn new(rep: DominantWeight) -> Self {
        WeylOrbit {
            rep,
            size: orbit_size(&rep),
            norm: rep.norm(),
        }
    }
}

impl fmt::Display for WeylOrbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "O_{{{},{}}}^{{{}}}",
            self.norm,
            self.size,
            self.rep.label()
        )
    }
}

/// Reflect weight coordinates into the dominant chamber in place.
///
/// Each step applies the simple reflection at a negative coordinate, which
/// strictly raises the height, so the loop terminates.
#[inline]
pub fn make_dominant(w: &mut [i64; RANK]) {
    loop {
        let Some(i) = w.iter().position(|&x| x < 0) else {
            return;
        };
        let v = w[i];
        w[i] = -v;
        for &j in NEIGHBOURS[i] {
            w[j] += v;
        }
    }
}

/// `i32` variant of [`make_dominant`] for hot loops.
#[inline]
pub fn make_dominant_i32(w: &mut [i32; RANK]) {
    loop {
        let mut i = RANK;
        for (k, &x) in w.iter().enumerate() {
            if x < 0 {
                i = k;
                break;
            }
        }
        if i == RANK {
            return;
        }
        let v = w[i];
        w[i] = -v;
        for &j in NEIGHBOURS[i] {
            w[j] += v;
        }
    }
}

pub fn to_dominant(v: &LatticeVector) -> DominantWeight {
    let mut w = v.weight_coords();
    make_dominant(&mut w);
    DominantWeight(w.map(|x| x as u32))
}

/// Simple Lie types occurring as subdiagrams of E8.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimpleType {
    A(usize),
    D(usize),
    E(usize),
}

impl SimpleType {
    pub fn weyl_order(&self) -> u64 {
        match *self {
            SimpleType::A(n) => factorial(n as u64 + 1),
            SimpleType::D(n) => (1u64 << (n - 1)) * factorial(n as u64),
            SimpleType::E(6) => 51_840,
            SimpleType::E(7) => 2_903_040,
            SimpleType::E(8) => WEYL_ORDER,
            SimpleType::E(n) => panic!("no E{n} subdiagram"),
        }
    }
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

/// Connected components of the Dynkin subdiagram on `nodes`, classified.
pub fn classify_subdiagram(nodes: &[usize]) -> Vec<SimpleType> {
    let inside = |k: usize| nodes.contains(&k);
    let mut seen = [false; RANK];
    let mut out = Vec::new();
    for &start in nodes {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &u in NEIGHBOURS[v] {
                if inside(u) && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        let degree = |v: usize| NEIGHBOURS[v].iter().filter(|&&u| inside(u)).count();
        let n = comp.len();
        match comp.iter().copied().find(|&v| degree(v) == 3) {
            None => out.push(SimpleType::A(n)),
            Some(branch) => {
                let mut arms: Vec<usize> = NEIGHBOURS[branch]
                    .iter()
                    .map(|&first| arm_length(branch, first, &inside))
                    .collect();
                arms.sort_unstable();
                let t = match (arms[0], arms[1], arms[2]) {
                    (1, 1, _) => SimpleType::D(n),
                    (1, 2, 2) => SimpleType::E(6),
                    (1, 2, 3) => SimpleType::E(7),
                    (1, 2, 4) => SimpleType::E(8),
                    other => panic!("impossible E8 subdiagram arms {other:?}"),
                };
                out.push(t);
            }
        }
    }
    out
}

fn arm_length(branch: usize, first: usize, inside: &dyn Fn(usize) -> bool) -> usize {
    let mut prev = branch;
    let mut cur = first;
    let mut len = 0;
    loop {
        if !inside(cur) {
            return len;
        }
        len += 1;
        let next = NEIGHBOURS[cur].iter().copied().find(|&u| u != prev);
        match next {
            Some(u) => {
                prev = cur;
                cur = u;
            }
            None => return len,
        }
    }
}

/// Orbit size from the stabilizer: the parabolic subgroup generated by the
/// simple reflections fixing `m`.
pub fn orbit_size(m: &DominantWeight) -> u64 {
    let zeros: Vec<usize> = (0..RANK).filter(|&i| m.0[i] == 0).collect();
    let stab: u64 = classify_subdiagram(&zeros)
        .iter()
        .map(SimpleType::weyl_order)
        .product();
    WEYL_ORDER / stab
}

/// Full Weyl orbit of `m` in weight coordinates. Fails if the orbit exceeds
/// `max` elements.
///
/// Every non-dominant `v` is reached exactly once, from `s_i v` where `i` is
/// the first node with `(v, alpha_i) < 0`, so no visited set is needed.
pub fn orbit_vectors(m: &DominantWeight, max: usize) -> Result<Vec<[i32; RANK]>> {
    let size = orbit_size(m);
    if size > max as u64 {
        return Err(Error::resource(format!(
            "orbit of {m} has {size} vectors, above the enumeration budget of {max}"
        )));
    }
    let mut out = Vec::with_capacity(size as usize);
    out.push(m.0.map(|x| x as i32));
    let mut head = 0;
    while head < out.len() {
        let w = out[head];
        head += 1;
        for i in 0..RANK {
            if w[i] <= 0 {
                continue;
            }
            let mut r = w;
            let v = r[i];
            r[i] = -v;
            for &j in NEIGHBOURS[i] {
                r[j] += v;
            }
            if r[..i].iter().all(|&x| x >= 0) {
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// All lattice vectors with `(v, v) = 2n`.
///
/// Depth-first enumeration over the exact rational triangular decomposition
/// `Q(r) = sum_i d_i (r_i + sum_{j>i} mu_ij r_j)^2` of the Cartan form.
pub fn shell(n: u64, max_vectors: u64) -> Result<Vec<LatticeVector>> {
    let expected = if n == 0 { 1 } else { 240 * sigma(3, n) };
    if expected > max_vectors {
        return Err(Error::resource(format!(
            "shell of norm {n} has {expected} vectors, above the bound of {max_vectors}"
        )));
    }
    let (d, mu) = triangular_form();
    let target = Ratio::from_integer(2 * n as i128);
    let mut out = Vec::with_capacity(expected as usize);
    let mut r = [0i64; RANK];
    shell_rec(RANK, &d, &mu, target, &mut r, &mut out);
    Ok(out)
}

type Q128 = Ratio<i128>;

fn triangular_form() -> ([Q128; RANK], [[Q128; RANK]; RANK]) {
    let zero = Q128::from_integer(0);
    let mut d = [zero; RANK];
    let mut mu = [[zero; RANK]; RANK];
    for i in 0..RANK {
        let mut dii = Q128::from_integer(CARTAN[i][i] as i128);
        for k in 0..i {
            dii -= d[k] * mu[k][i] * mu[k][i];
        }
        d[i] = dii;
        for j in i + 1..RANK {
            let mut s = Q128::from_integer(CARTAN[i][j] as i128);
            for k in 0..i {
                s -= d[k] * mu[k][i] * mu[k][j];
            }
            mu[i][j] = s / dii;
        }
    }
    (d, mu)
}

fn shell_rec(
    level: usize,
    d: &[Q128; RANK],
    mu: &[[Q128; RANK]; RANK],
    remaining: Q128,
    r: &mut [i64; RANK],
    out: &mut Vec<LatticeVector>,
) {
    if level == 0 {
        if remaining == Q128::from_integer(0) {
            out.push(LatticeVector(*r));
        }
        return;
    }
    let i = level - 1;
    let mut c = Q128::from_integer(0);
    for j in i + 1..RANK {
        c += mu[i][j] * Q128::from_integer(r[j] as i128);
    }
    // Integer window around -c from isqrt(floor(R / d_i)), filtered exactly below.
    let s = remaining / d[i];
    let a = isqrt((s.numer() / s.denom()).max(0) as u64) as i64;
    let centre = -c;
    let lo = centre.floor().to_integer() as i64 - a - 1;
    let hi = centre.ceil().to_integer() as i64 + a + 1;
    for x in lo..=hi {
        let shifted = Q128::from_integer(x as i128) + c;
        let used = d[i] * shifted * shifted;
        if used > remaining {
            continue;
        }
        r[i] = x;
        shell_rec(level - 1, d, mu, remaining - used, r, out);
    }
    r[i] = 0;
}

/// Divisor power sum `sigma_k(n)`.
pub fn sigma(k: u32, n: u64) -> u64 {
    (1..=n).filter(|d| n % d == 0).map(|d| d.pow(k)).sum()
}

/// All dominant weights with `T(m) <= t`, in canonical order.
pub fn dominant_by_t(t: u32) -> Vec<DominantWeight> {
    let mut out = Vec::new();
    let mut m = [0u32; RANK];
    grade_rec(0, t, &mut m, &mut out);
    out.sort();
    out
}

fn grade_rec(i: usize, budget: u32, m: &mut [u32; RANK], out: &mut Vec<DominantWeight>) {
    if i == RANK {
        out.push(DominantWeight(*m));
        return;
    }
    let step = T_GRADING[i];
    let mut k = 0;
    while k * step <= budget {
        m[i] = k;
        grade_rec(i + 1, budget - k * step, m, out);
        k += 1;
    }
    m[i] = 0;
}

/// Dominant weights of norm `n`, i.e. `(m, m) = 2n`, in canonical order.
pub fn dominant_by_norm(n: u64) -> Vec<DominantWeight> {
    // Cauchy-Schwarz against the highest root: T(m)^2 <= 2 (m, m) = 4n.
    let tmax = isqrt(4 * n) as u32;
    dominant_by_t(tmax)
        .into_iter()
        .filter(|m| m.norm2() == 2 * n as i64)
        .collect()
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `max { (y, v) : y in W m }`, evaluated as `(m, dominant(v))`.
pub fn max_pairing(m: &DominantWeight, v: &LatticeVector) -> i64 {
    m.inner(&to_dominant(v))
}

/// Checks the coordinate model against the grading `(w_i, w_8)`.
pub fn self_test() -> Result<()> {
    for i in 0..RANK {
        for j in 0..RANK {
            let e: i64 = (0..RANK).map(|k| CARTAN[i][k] * INV_CARTAN[k][j]).sum();
            if e != (i == j) as i64 {
                return Err(Error::mismatch("inverse Cartan table is inconsistent"));
            }
        }
    }
    let w8 = LatticeVector::fundamental_weight(8);
    for i in 1..=RANK {
        let p = LatticeVector::fundamental_weight(i).inner(&w8);
        if p != T_GRADING[i - 1] as i64 {
            return Err(Error::mismatch(format!(
                "(w{i}, w8) = {p}, expected {}",
                T_GRADING[i - 1]
            )));
        }
    }
    Ok(())
}
