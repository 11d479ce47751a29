//! Exact rational linear algebra: rank, kernel and solve.
//!
//! Small systems are eliminated fraction-free (Bareiss). Larger ones are
//! row-reduced modulo word-sized primes, lifted by CRT and rational
//! reconstruction, and then verified by exact multiplication. A verified
//! kernel of dimension `d` proves the rank: reduction mod `p` can only lower
//! the rank, so the kernel over Q has dimension at most `d`.
//!
//! Kernel bases are canonical: the reduced-echelon basis (one vector per
//! free column), scaled to coprime integers with positive leading entry.

use std::collections::HashSet;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::int::Int;

/// Below this many columns the fraction-free path is used.
const BAREISS_MAX_COLS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
            row_labels: (0..rows).map(|i| format!("r{i}")).collect(),
            col_labels: (0..cols).map(|j| format!("c{j}")).collect(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::usage("ragged matrix rows"));
        }
        let n = rows.len();
        let mut m = RationalMatrix::zeros(n, cols);
        m.data = rows.into_iter().flatten().collect();
        Ok(m)
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        RationalMatrix::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&x| BigRational::from_integer(x.into()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn with_labels(mut self, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if row_labels.len() != self.rows || col_labels.len() != self.cols {
            return Err(Error::usage("label count does not match matrix shape"));
        }
        for labels in [&row_labels, &col_labels] {
            let unique: HashSet<&String> = labels.iter().collect();
            if unique.len() != labels.len() {
                return Err(Error::usage("matrix labels must be unique"));
            }
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(BigRational::zero(), |acc, j| {
                    let a = self.get(i, j);
                    if a.is_zero() || v[j].is_zero() {
                        acc
                    } else {
                        acc + a * &v[j]
                    }
                })
            })
            .collect()
    }

    /// Integer matrix with the same row space: each row scaled by the lcm of
    /// its denominators.
    fn to_integer(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let l = row.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    m.data[i * self.cols + j] = Int::from_bigint(c.numer() * (&l / c.denom()));
                }
            }
        }
        m
    }

    pub fn rank(&self) -> usize {
        self.cols - self.kernel_basis().len()
    }

    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        self.to_integer().kernel().basis
    }

    /// A solution of `M x = b` with all free variables zero, or `None` if
    /// the system is inconsistent.
    pub fn solve(&self, b: &[BigRational]) -> Option<Vec<BigRational>> {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let mut aug = RationalMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, -b[i].clone());
        }
        let k = aug.to_integer().kernel();
        if k.pivots.contains(&self.cols) {
            return None;
        }
        // The basis vector of the last free column has its unit there.
        let v = k.basis.iter().find(|v| {
            !v[self.cols].is_zero()
                && v[..self.cols]
                    .iter()
                    .enumerate()
                    .all(|(j, x)| x.is_zero() || k.pivots.contains(&j))
        })?;
        let last = BigRational::from_integer(v[self.cols].clone());
        Some(
            v[..self.cols]
                .iter()
                .map(|x| BigRational::from_integer(x.clone()) / &last)
                .collect(),
        )
    }
}

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Int>,
}

/// Kernel together with the pivot columns of the reduced echelon form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Kernel {
    pub pivots: Vec<usize>,
    pub basis: Vec<Vec<BigInt>>,
}

impl Kernel {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![Int::zero(); rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i * self.cols + j]
    }

    /// Canonical kernel basis.
    pub fn kernel(&self) -> Kernel {
        let compact = self.without_zero_rows();
        if compact.cols <= BAREISS_MAX_COLS || compact.rows == 0 {
            compact.kernel_bareiss()
        } else {
            compact.kernel_multimodular()
        }
    }

    fn without_zero_rows(&self) -> IntMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        let mut rows = 0;
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            if row.iter().any(|x| !x.is_zero()) {
                data.extend(row.iter().cloned());
                rows += 1;
            }
        }
        IntMatrix {
            rows,
            cols: self.cols,
            data,
        }
    }

    /// Fraction-free elimination to a reduced echelon form, pivoting on the
    /// entry of smallest bit length in each column.
    pub fn kernel_bareiss(&self) -> Kernel {
        let (rows, cols) = (self.rows, self.cols);
        let mut a: Vec<Vec<BigInt>> = (0..rows)
            .map(|i| (0..cols).map(|j| self.get(i, j).to_bigint()).collect())
            .collect();
        let mut pivots = Vec::new();
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows)
                .filter(|&i| !a[i][c].is_zero())
                .min_by_key(|&i| a[i][c].bits())
            else {
                continue;
            };
            a.swap(r, p);
            for i in 0..rows {
                if i == r {
                    continue;
                }
                if i < r {
                    // Rows above the pivot are eliminated at the end.
                    continue;
                }
                for j in c + 1..cols {
                    let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                    a[i][j] = v;
                }
                a[i][c] = BigInt::zero();
            }
            prev = a[r][c].clone();
            pivots.push(c);
            r += 1;
        }
        // Back-substitute over Q on the (small) echelon form.
        let rank = pivots.len();
        let mut rref: Vec<Vec<BigRational>> = a[..rank]
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| BigRational::from_integer(x.clone()))
                    .collect()
            })
            .collect();
        for k in (0..rank).rev() {
            let pc = pivots[k];
            let inv = rref[k][pc].recip();
            for x in rref[k].iter_mut() {
                *x *= &inv;
            }
            for i in 0..k {
                let f = rref[i][pc].clone();
                if f.is_zero() {
                    continue;
                }
                for j in pc..cols {
                    let t = &f * &rref[k][j];
                    rref[i][j] -= t;
                }
            }
        }
        let basis = basis_from_rref(cols, &pivots, |i, f| rref[i][f].clone());
        Kernel { pivots, basis }
    }

    pub fn kernel_multimodular(&self) -> Kernel {
        let mut primes = PrimeStream::new();
        let mut best: Option<Vec<usize>> = None;
        let mut modulus = BigInt::one();
        // Residues of the RREF entries at (pivot row, free column).
        let mut residues: Vec<BigInt> = Vec::new();
        let mut last_attempt: Option<Vec<BigRational>> = None;
        loop {
            let p = primes.next_prime();
            let (pivots, rref) = rref_mod(self, p);
            let accept = match &best {
                None => true,
                Some(b) => {
                    if pivots.len() > b.len() || (pivots.len() == b.len() && pivots < *b) {
                        true
                    } else if pivots == *b {
                        false
                    } else {
                        continue;
                    }
                }
            };
            let free = free_columns(self.cols, &pivots);
            let entries: Vec<u64> = pivots
                .iter()
                .enumerate()
                .flat_map(|(i, _)| free.iter().map(move |&f| (i, f)))
                .map(|(i, f)| rref[i * self.cols + f])
                .collect();
            if accept {
                best = Some(pivots.clone());
                modulus = BigInt::from(p);
                residues = entries.iter().map(|&x| BigInt::from(x)).collect();
                last_attempt = None;
            } else {
                crt_combine(&mut residues, &mut modulus, &entries, p);
            }
            let pivots = best.clone().expect("set above");
            let free = free_columns(self.cols, &pivots);
            let Some(values) = residues
                .iter()
                .map(|r| rational_reconstruct(r, &modulus))
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            if last_attempt.as_ref() != Some(&values) {
                last_attempt = Some(values);
                continue;
            }
            let nf = free.len();
            let basis = basis_from_rref(self.cols, &pivots, |i, f| {
                let k = free.binary_search(&f).expect("free column");
                values[i * nf + k].clone()
            });
            if basis.iter().all(|v| self.annihilates(v)) {
                return Kernel { pivots, basis };
            }
            last_attempt = None;
        }
    }

    fn annihilates(&self, v: &[BigInt]) -> bool {
        let vi: Vec<Int> = v.iter().map(Int::from).collect();
        (0..self.rows).all(|i| {
            let mut acc = Int::zero();
            for j in 0..self.cols {
                let a = self.get(i, j);
                if !a.is_zero() && !vi[j].is_zero() {
                    acc.add_mul(a, &vi[j]);
                }
            }
            acc.is_zero()
        })
    }
}

fn free_columns(cols: usize, pivots: &[usize]) -> Vec<usize> {
    let set: HashSet<usize> = pivots.iter().copied().collect();
    (0..cols).filter(|c| !set.contains(c)).collect()
}

/// One kernel vector per free column `f`: `e_f - sum_i R[i][f] e_{pivot_i}`,
/// then cleared of denominators and normalized.
fn basis_from_rref(
    cols: usize,
    pivots: &[usize],
    entry: impl Fn(usize, usize) -> BigRational,
) -> Vec<Vec<BigInt>> {
    free_columns(cols, pivots)
        .into_iter()
        .map(|f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                if pc < f {
                    v[pc] = -entry(i, f);
                }
            }
            normalize_vector(&v)
        })
        .collect()
}

/// Clears denominators, divides out the content, and makes the first
/// nonzero entry positive.
pub fn normalize_vector(v: &[BigRational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let mut ints: Vec<BigInt> = v.iter().map(|c| c.numer() * (&l / c.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in ints.iter_mut() {
            *x = &*x / &g;
        }
    }
    if ints
        .iter()
        .find(|x| !x.is_zero())
        .is_some_and(Signed::is_negative)
    {
        for x in ints.iter_mut() {
            *x = -&*x;
        }
    }
    ints
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Reduced echelon form modulo `p`; returns pivot columns and the reduced
/// rows (only the first `rank` rows are meaningful).
fn rref_mod(m: &IntMatrix, p: u64) -> (Vec<usize>, Vec<u64>) {
    let (rows, cols) = (m.rows, m.cols);
    let mut a: Vec<u64> = m.data.iter().map(|x| x.rem_u64(p)).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| a[i * cols + c] != 0) else {
            continue;
        };
        if piv != r {
            for j in 0..cols {
                a.swap(piv * cols + j, r * cols + j);
            }
        }
        let inv = invmod(a[r * cols + c], p);
        for j in c..cols {
            a[r * cols + j] = mulmod(a[r * cols + j], inv, p);
        }
        let (head, tail) = a.split_at_mut(r * cols);
        let (pivot_row, rest) = tail.split_at_mut(cols);
        let eliminate = |row: &mut [u64]| {
            let f = row[c];
            if f == 0 {
                return;
            }
            let nf = p - f;
            for j in c..cols {
                if pivot_row[j] != 0 {
                    row[j] =
                        ((row[j] as u128 + nf as u128 * pivot_row[j] as u128) % p as u128) as u64;
                }
            }
        };
        for row in head.chunks_mut(cols) {
            eliminate(row);
        }
        for row in rest.chunks_mut(cols) {
            eliminate(row);
        }
        pivots.push(c);
        r += 1;
    }
    (pivots, a)
}

fn crt_combine(residues: &mut [BigInt], modulus: &mut BigInt, new: &[u64], p: u64) {
    // x = r + M * ((a - r) * M^{-1} mod p)
    let m_mod = (&*modulus % p).to_u64().expect("fits");
    let m_inv = invmod(m_mod, p);
    for (r, &a) in residues.iter_mut().zip(new) {
        let r_mod = (&*r % p).to_u64().expect("fits");
        let diff = (a + p - r_mod) % p;
        let k = mulmod(diff, m_inv, p);
        *r += &*modulus * k;
    }
    *modulus *= p;
}

/// `n / d` with `n = a d mod m`, `|n|, d <= sqrt(m / 2)`, if one exists.
pub fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<BigRational> {
    let bound = (m / 2u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if !r1.gcd(&t1).is_one() {
        return None;
    }
    let (n, d) = if t1.sign() == Sign::Minus {
        (-r1, -t1)
    } else {
        (r1, t1)
    };
    Some(BigRational::new(n, d))
}

/// Descending primes below `2^62`.
struct PrimeStream {
    next: u64,
}

impl PrimeStream {
    fn new() -> Self {
        PrimeStream {
            next: (1u64 << 62) - 1,
        }
    }

    fn next_prime(&mut self) -> u64 {
        loop {
            let c = self.next;
            self.next -= 2;
            if is_prime(c) {
                return c;
            }
        }
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn random_matrix(
        rng: &mut ChaCha8Rng,
        rows: usize,
        cols: usize,
        rank: usize,
    ) -> RationalMatrix {
        // Product of random rows x cols factors gives a known rank bound.
        let left: Vec<Vec<i64>> = (0..rows)
            .map(|_| (0..rank).map(|_| rng.gen_range(-9..=9)).collect())
            .collect();
        let right: Vec<Vec<i64>> = (0..rank)
            .map(|_| (0..cols).map(|_| rng.gen_range(-9..=9)).collect())
            .collect();
        let mut m = RationalMatrix::zeros(rows, cols);
        for i in 0..rows {
            let den = rng.gen_range(1..4);
            for j in 0..cols {
                let s: i64 = (0..rank).map(|k| left[i][k] * right[k][j]).sum();
                m.set(i, j, q(s, den));
            }
        }
        m
    }

    #[test]
    fn identity_has_trivial_kernel() {
        let mut m = RationalMatrix::zeros(5, 5);
        for i in 0..5 {
            m.set(i, i, q(1, 1));
        }
        assert!(m.kernel_basis().is_empty());
        assert_eq!(m.rank(), 5);
    }

    #[test]
    fn kernel_of_difference_row() {
        let m = RationalMatrix::from_i64_rows(&[vec![1, -1]]).unwrap();
        assert_eq!(
            m.kernel_basis(),
            vec![vec![BigInt::from(1), BigInt::from(1)]]
        );
    }

    #[test]
    fn rank_nullity_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_matrix(&mut rng, 20, 30, 20);
            let k = m.kernel_basis();
            assert_eq!(m.rank() + k.len(), 30);
            for v in &k {
                let vq: Vec<BigRational> = v
                    .iter()
                    .map(|x| BigRational::from_integer(x.clone()))
                    .collect();
                assert!(m.mul_vec(&vq).iter().all(Zero::is_zero));
            }
        }
    }

    #[test]
    fn multimodular_agrees_with_bareiss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (rows, cols, rank) in [(12, 30, 7), (40, 35, 30), (10, 50, 10)] {
            let m = random_matrix(&mut rng, rows, cols, rank).to_integer();
            let a = m.kernel_bareiss();
            let b = m.kernel_multimodular();
            assert_eq!(a, b);
            assert_eq!(a.rank(), rank);
        }
    }

    #[test]
    fn large_entries_reconstruct() {
        // Entries far beyond one prime force several CRT rounds.
        let big = BigInt::from(10).pow(60) + 7;
        let mut m = IntMatrix::zeros(2, 30);
        for j in 0..30 {
            m.data[j] = Int::from_bigint(&big * (j as i64 + 1) + j);
            m.data[30 + j] = Int::from_bigint(BigInt::from(j as i64 * j as i64 + 1));
        }
        let k = m.kernel_multimodular();
        assert_eq!(k, m.kernel_bareiss());
        assert_eq!(k.basis.len(), 28);
    }

    #[test]
    fn canonical_under_row_shuffles() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 25, 40, 15);
        let base = m.kernel_basis();
        let mut rows: Vec<Vec<BigRational>> = (0..25)
            .map(|i| (0..40).map(|j| m.get(i, j).clone()).collect())
            .collect();
        for _ in 0..3 {
            rows.shuffle(&mut rng);
            let shuffled = RationalMatrix::from_rows(rows.clone()).unwrap();
            assert_eq!(shuffled.kernel_basis(), base);
        }
    }

    #[test]
    fn solve_examples() {
        let m = RationalMatrix::from_i64_rows(&[vec![1, 1], vec![1, -1]]).unwrap();
        let x = m.solve(&[q(3, 1), q(1, 1)]).unwrap();
        assert_eq!(x, vec![q(2, 1), q(1, 1)]);
        let singular = RationalMatrix::from_i64_rows(&[vec![1, 1], vec![2, 2]]).unwrap();
        assert!(singular.solve(&[q(1, 1), q(3, 1)]).is_none());
        let y = singular.solve(&[q(1, 2), q(1, 1)]).unwrap();
        assert_eq!(singular.mul_vec(&y), vec![q(1, 2), q(1, 1)]);
    }

    #[test]
    fn labels_must_be_unique() {
        let m = RationalMatrix::zeros(2, 2);
        assert!(m
            .clone()
            .with_labels(vec!["a".into(), "a".into()], vec!["x".into(), "y".into()])
            .is_err());
        assert!(m
            .with_labels(vec!["a".into(), "b".into()], vec!["x".into(), "y".into()])
            .is_ok());
    }

    #[test]
    fn reconstruction_examples() {
        let m = BigInt::from(1_000_003u64) * BigInt::from(998_244_353u64);
        let target = q(-17, 23);
        let a = (BigInt::from(-17) * BigInt::from(23).modinv(&m).unwrap()).mod_floor(&m);
        assert_eq!(rational_reconstruct(&a, &m), Some(target));
        assert!(is_prime((1 << 61) - 1));
        assert!(!is_prime((1 << 62) - 1));
    }

    proptest! {
        #[test]
        fn kernel_vectors_are_annihilated(entries in prop::collection::vec(-3i64..=3, 6 * 8)) {
            let rows: Vec<Vec<i64>> = entries.chunks(8).map(<[i64]>::to_vec).collect();
            let m = RationalMatrix::from_i64_rows(&rows).unwrap();
            let k = m.kernel_basis();
            prop_assert_eq!(m.rank() + k.len(), 8);
            for v in &k {
                let vq: Vec<BigRational> = v.iter().map(|x| BigRational::from_integer(x.clone())).collect();
                prop_assert!(m.mul_vec(&vq).iter().all(Zero::is_zero));
                prop_assert!(v.iter().find(|x| !x.is_zero()).unwrap().is_positive());
            }
        }
    }
}
