//! Polynomials in `E4, E6` and Sakai's forms `A1..A5, B2, B3, B4, B6`, and
//! their evaluation as Jacobi forms.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use crate::e8::DominantWeight;
use crate::error::{Error, Result};
use crate::jacobi::{hecke_theta, level_trace, theta_e8, JacobiExpansion, Witness};
use crate::orbit_ring::PolySeries;
use crate::qseries::{discriminant, eisenstein, QSeries};

/// Generator symbols in exponent-vector order.
pub const NAMES: [&str; 11] = [
    "E4", "E6", "A1", "A2", "A3", "A4", "A5", "B2", "B3", "B4", "B6",
];
pub const WEIGHTS: [i32; 11] = [4, 6, 4, 4, 4, 4, 4, 6, 6, 6, 6];
pub const INDICES: [u32; 11] = [0, 0, 1, 2, 3, 4, 5, 2, 3, 4, 6];

pub const E4: usize = 0;
pub const E6: usize = 1;
pub const B4: usize = 9;

/// Factor order used when printing a monomial.
const PRINT_ORDER: [usize; 11] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 0, 1];

pub type Exponents = [u32; 11];

pub fn unit(i: usize) -> Exponents {
    let mut e = [0; 11];
    e[i] = 1;
    e
}

pub fn exponent_weight(e: &Exponents) -> i32 {
    e.iter().zip(WEIGHTS).map(|(&a, w)| a as i32 * w).sum()
}

pub fn exponent_index(e: &Exponents) -> u32 {
    e.iter().zip(INDICES).map(|(&a, t)| a * t).sum()
}

fn print_key(e: &Exponents) -> [u32; 11] {
    PRINT_ORDER.map(|i| e[i])
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratorPolynomial {
    terms: BTreeMap<Exponents, BigRational>,
}

impl GeneratorPolynomial {
    pub fn zero() -> Self {
        GeneratorPolynomial::default()
    }

    pub fn constant(c: BigRational) -> Self {
        GeneratorPolynomial::monomial([0; 11], c)
    }

    pub fn monomial(e: Exponents, c: BigRational) -> Self {
        let mut p = GeneratorPolynomial::zero();
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn generator(i: usize) -> Self {
        GeneratorPolynomial::monomial(unit(i), BigRational::one())
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The common `(weight, index)` of all terms, if there is one.
    pub fn bidegree(&self) -> Option<(i32, u32)> {
        let mut it = self
            .terms
            .keys()
            .map(|e| (exponent_weight(e), exponent_index(e)));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn is_bihomogeneous(&self) -> bool {
        self.is_zero() || self.bidegree().is_some()
    }

    fn add_term(&mut self, e: Exponents, c: BigRational) {
        let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return GeneratorPolynomial::zero();
        }
        GeneratorPolynomial {
            terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = GeneratorPolynomial::zero();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let mut e = *a;
                for i in 0..11 {
                    e[i] += b[i];
                }
                out.add_term(e, x * y);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = GeneratorPolynomial::constant(BigRational::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// The scalar value of a constant polynomial.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&[0; 11]).cloned(),
            _ => None,
        }
    }

    /// Splits `P = P0 + x_i P1`; fails if `x_i` occurs to a power above one.
    pub fn split_linear(&self, i: usize) -> Result<(Self, Self)> {
        let mut p0 = GeneratorPolynomial::zero();
        let mut p1 = GeneratorPolynomial::zero();
        for (e, c) in &self.terms {
            match e[i] {
                0 => p0.add_term(*e, c.clone()),
                1 => {
                    let mut f = *e;
                    f[i] = 0;
                    p1.add_term(f, c.clone());
                }
                _ => {
                    return Err(Error::usage(format!(
                        "{} occurs non-linearly in the polynomial",
                        NAMES[i]
                    )))
                }
            }
        }
        Ok((p0, p1))
    }

    /// Polynomial with `x_i -> value`.
    pub fn substitute(&self, i: usize, value: &Self) -> Self {
        let mut out = GeneratorPolynomial::zero();
        for (e, c) in &self.terms {
            let mut f = *e;
            f[i] = 0;
            out = out.add(&GeneratorPolynomial::monomial(f, c.clone()).mul(&value.pow(e[i])));
        }
        out
    }

    /// Specialization at `z = 0`: every `Ai -> E4`, every `Bj -> E6`.
    /// The result is a polynomial in `E4, E6` only.
    pub fn reduce_at_zero(&self) -> Self {
        let mut out = GeneratorPolynomial::zero();
        for (e, c) in &self.terms {
            let mut f = [0; 11];
            f[E4] = e[E4] + e[2..7].iter().sum::<u32>();
            f[E6] = e[E6] + e[7..].iter().sum::<u32>();
            out.add_term(f, c.clone());
        }
        out
    }

    pub fn parse(s: &str) -> Result<Self> {
        Parser::new(s).parse()
    }
}

impl fmt::Display for GeneratorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<(&Exponents, &BigRational)> = self.terms.iter().collect();
        terms.sort_by(|a, b| print_key(b.0).cmp(&print_key(a.0)));
        for (k, (e, c)) in terms.into_iter().enumerate() {
            let factors: Vec<String> = PRINT_ORDER
                .iter()
                .filter(|&&i| e[i] > 0)
                .map(|&i| match e[i] {
                    1 => NAMES[i].to_string(),
                    p => format!("{}^{p}", NAMES[i]),
                })
                .collect();
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            match (factors.is_empty(), mag.is_one()) {
                (true, _) => write!(f, "{mag}")?,
                (false, true) => write!(f, "{}", factors.join("*"))?,
                (false, false) => write!(f, "{mag}*{}", factors.join("*"))?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(BigInt),
    Ident(String),
    Op(char),
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(s: &str) -> Self {
        let mut tokens = Vec::new();
        let chars: Vec<(usize, char)> = s.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (p, c) = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let mut j = i;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().map(|x| x.1).collect();
                tokens.push((p, Token::Num(text.parse().expect("digits"))));
                i = j;
            } else if c.is_ascii_alphabetic() {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                tokens.push((p, Token::Ident(chars[i..j].iter().map(|x| x.1).collect())));
                i = j;
            } else {
                tokens.push((p, Token::Op(c)));
                i += 1;
            }
        }
        Parser {
            tokens,
            pos: 0,
            end: s.len(),
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let pos = self.tokens.get(self.pos).map_or(self.end, |t| t.0);
        Err(Error::Parse {
            pos,
            msg: msg.into(),
        })
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((_, Token::Op(c))) => Some(*c),
            _ => None,
        }
    }

    fn parse(mut self) -> Result<GeneratorPolynomial> {
        if self.tokens.is_empty() {
            return self.error("empty polynomial");
        }
        let p = self.expr()?;
        if self.pos < self.tokens.len() {
            return self.error("unexpected trailing input");
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<GeneratorPolynomial> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' {
                acc.add(&rhs)
            } else {
                acc.sub(&rhs)
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<GeneratorPolynomial> {
        let mut acc = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let at = self.pos;
            let rhs = self.unary()?;
            if op == '*' {
                acc = acc.mul(&rhs);
            } else {
                match rhs.as_constant() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&c.recip()),
                    Some(_) => {
                        self.pos = at;
                        return self.error("division by zero");
                    }
                    None => {
                        self.pos = at;
                        return self.error("only division by a nonzero constant is supported");
                    }
                }
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<GeneratorPolynomial> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(self.unary()?.scale(&-BigRational::one()))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<GeneratorPolynomial> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        match self.tokens.get(self.pos) {
            Some((_, Token::Num(k))) => match k.to_u32() {
                Some(k) if k <= 64 => {
                    self.pos += 1;
                    Ok(base.pow(k))
                }
                _ => self.error("exponent too large"),
            },
            _ => self.error("expected a non-negative integer exponent"),
        }
    }

    fn atom(&mut self) -> Result<GeneratorPolynomial> {
        let Some((_, tok)) = self.tokens.get(self.pos).cloned() else {
            return self.error("unexpected end of input");
        };
        match tok {
            Token::Num(n) => {
                self.pos += 1;
                Ok(GeneratorPolynomial::constant(BigRational::from_integer(n)))
            }
            Token::Ident(name) => match lookup(&name) {
                Some(p) => {
                    self.pos += 1;
                    Ok(p)
                }
                None => self.error(format!("unknown symbol `{name}`")),
            },
            Token::Op('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek_op() != Some(')') {
                    return self.error("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Token::Op(c) => self.error(format!("unexpected `{c}`")),
        }
    }
}

fn lookup(name: &str) -> Option<GeneratorPolynomial> {
    if let Some(i) = NAMES.iter().position(|n| *n == name) {
        return Some(GeneratorPolynomial::generator(i));
    }
    builtin(name)
}

fn parse_builtin(s: &str) -> GeneratorPolynomial {
    GeneratorPolynomial::parse(s).expect("built-in polynomial parses")
}

/// Named polynomials: `P165` (weight 16, index 5), `Q185`, and `P1..P4`
/// whose quotients by powers of `Delta` have a single fundamental orbit as
/// `q^0`-term.
pub fn builtin(name: &str) -> Option<GeneratorPolynomial> {
    let text = match name {
        "P165" | "P16_5" => {
            "864*A1^3*A2 + 3825*A1*B2^2 - 770*A3*B2*E6 - 840*A2*B3*E6 + 60*A1*B4*E6 + 21*A5*E6^2"
        }
        "Q185" | "Q18_5" => {
            "-2880*A1^3*B2 + 1350*A1*A2*B2*E4 + 1920*A1^2*B3*E4 - 70*A3*B2*E4^2 \
             - 600*A2*B3*E4^2 - 60*A1*B4*E4^2 - 567*A1*A2^2*E6 + 672*A1^2*A3*E6 \
             - 2400*B2*B3*E6 - 504*A2*A3*E4*E6 - 21*A5*E4^2*E6"
        }
        "P1" => "1/4*(-12*A1^2*E4^2 + 17*A2*E4^3 + 10*A2*E6^2 - 15*B2*E4*E6)",
        "P2" => "1/72*(24*A1^2*E4^2 - 14*A2*E4^3 + 5*A2*E6^2 - 15*B2*E4*E6)",
        "P3" => "7/18*(-27*A1*A2*E4^2 - 45*A1*B2*E6 + 37*A3*E4^3 + 35*A3*E6^2)",
        "P4" => {
            "1/864*(126*A1^3*E4^4 - 414*A1^3*E4*E6^2 + 675*A1*A2*E4^2*E6^2 - 243*A1*A2*E4^5 \
             - 1440*A1*B2*E6^3 - 251*A3*E4^3*E6^2 + 122*A3*E4^6 + 465*A3*E6^4 \
             - 20*B3*E4^4*E6 + 980*B3*E4*E6^3)"
        }
        _ => return None,
    };
    Some(parse_builtin(text))
}

pub const BUILTIN_NAMES: [&str; 6] = ["P165", "Q185", "P1", "P2", "P3", "P4"];

/// All exponent vectors of the given bidegree, optionally without `E4` or `E6`.
pub fn monomials(weight: i32, index: u32, exclude_e4: bool, exclude_e6: bool) -> Vec<Exponents> {
    let mut out = Vec::new();
    if weight < 0 || weight % 2 != 0 {
        return out;
    }
    let mut e = [0u32; 11];
    fn index_part(
        i: usize,
        index: u32,
        weight: i32,
        e: &mut Exponents,
        f: &mut dyn FnMut(&Exponents, i32),
    ) {
        if i == 11 {
            if index == 0 {
                f(e, weight);
            }
            return;
        }
        let mut k = 0;
        loop {
            let used_t = k * INDICES[i];
            let used_w = k as i32 * WEIGHTS[i];
            if used_t > index || used_w > weight {
                break;
            }
            e[i] = k;
            index_part(i + 1, index - used_t, weight - used_w, e, f);
            k += 1;
        }
        e[i] = 0;
    }
    index_part(2, index, weight, &mut e, &mut |e, rest| {
        // rest = 4a + 6b
        let mut b = 0;
        while 6 * b <= rest {
            let r = rest - 6 * b;
            if r % 4 == 0 {
                let a = (r / 4) as u32;
                if !(exclude_e4 && a > 0) && !(exclude_e6 && b > 0) {
                    let mut m = *e;
                    m[E4] = a;
                    m[E6] = b as u32;
                    out.push(m);
                }
            }
            b += 1;
        }
    });
    out.sort();
    out
}

/// Sakai's generators together with the auxiliary form `B5hat`.
#[derive(Clone, Debug)]
pub struct SakaiForms {
    pub truncation: usize,
    /// Indexed like [`NAMES`].
    pub forms: Vec<JacobiExpansion>,
    pub b5_hat: JacobiExpansion,
}

impl SakaiForms {
    pub fn get(&self, i: usize) -> &JacobiExpansion {
        &self.forms[i]
    }

    pub fn by_name(&self, name: &str) -> Option<&JacobiExpansion> {
        if name == "B5hat" {
            return Some(&self.b5_hat);
        }
        NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| &self.forms[i])
    }
}

/// Candidate forms for `B4` before pinning: the level-4 trace and `V_2 B2`.
pub fn b4_candidates(n: usize) -> Result<(JacobiExpansion, JacobiExpansion)> {
    let trace = level_trace(4, n)?;
    let b2 = level_trace(2, 2 * (n - 1) + 1)?;
    Ok((trace, b2.hecke_v(2)?))
}

const MIN_PIN_LEVELS: usize = 3;

/// Builds all generators to `n` levels (`n >= 2`).
pub fn sakai_generators(n: usize) -> Result<SakaiForms> {
    if n < 2 {
        return Err(Error::usage("generators need at least two levels"));
    }
    if n < MIN_PIN_LEVELS {
        // The pinning identity has no usable coefficient below this order.
        let full = sakai_generators(MIN_PIN_LEVELS)?;
        return Ok(SakaiForms {
            truncation: n,
            forms: full.forms.iter().map(|f| f.truncate(n)).collect(),
            b5_hat: full.b5_hat.truncate(n),
        });
    }
    let e4 = eisenstein(4, n)?;
    let e6 = eisenstein(6, n)?;
    let mut forms = vec![
        JacobiExpansion::from_modular(4, &e4),
        JacobiExpansion::from_modular(6, &e6),
    ];
    for t in 1..=5 {
        forms.push(if t == 4 {
            theta_e8(n).scale_z(2)
        } else {
            hecke_theta(t, n)?
        });
    }
    forms.push(level_trace(2, n)?);
    forms.push(level_trace(3, n)?);
    forms.push(JacobiExpansion::constant(n)); // B4 placeholder
    forms.push(level_trace(6, n)?);
    let b5_hat = level_trace(5, n)?;
    let mut sakai = SakaiForms {
        truncation: n,
        forms,
        b5_hat,
    };
    let (trace, v2) = b4_candidates(n)?;
    let pinned = pin_b4(&sakai, &trace, &v2)?;
    sakai.forms[B4] = pinned.form;
    Ok(sakai)
}

/// Outcome of pinning `B4 = alpha * trace + beta * V_2 B2`.
#[derive(Clone, Debug)]
pub struct PinnedB4 {
    pub alpha: BigRational,
    pub beta: BigRational,
    pub probe: (usize, DominantWeight),
    pub form: JacobiExpansion,
}

/// Residual of `179712 Delta E4 B5hat = E6 P165 + E4 Q185` as an affine
/// function of `B4`: returns `(R0, R1)` with residual `R0 + R1 * B4`.
fn lemma_residual_parts(engine: &Engine) -> Result<(JacobiExpansion, JacobiExpansion)> {
    let n = engine.truncation();
    let rhs = identity_rhs();
    let (r0, r1) = rhs.split_linear(B4)?;
    let delta = discriminant(n);
    let e4 = eisenstein(4, n)?;
    let lhs_factor = (&delta * &e4).scale(&BigRational::from_integer(179712.into()));
    let lhs = engine.sakai().b5_hat.mul_series(&lhs_factor, 16);
    let r0 = lhs.sub(&engine.expand(&r0)?)?;
    let r1 = engine.expand(&r1)?.scale(&-BigRational::one());
    Ok((r0, r1))
}

/// `E6 * P165 + E4 * Q185`.
pub fn identity_rhs() -> GeneratorPolynomial {
    let p = builtin("P165").expect("builtin");
    let q = builtin("Q185").expect("builtin");
    GeneratorPolynomial::generator(E6)
        .mul(&p)
        .add(&GeneratorPolynomial::generator(E4).mul(&q))
}

/// Pins `B4` by `eval_zero(B4) = E6` and one coefficient of the residual
/// identity, then checks the identity at every computed coefficient.
pub fn pin_b4(
    forms: &SakaiForms,
    trace: &JacobiExpansion,
    v2: &JacobiExpansion,
) -> Result<PinnedB4> {
    let n = forms.truncation;
    let engine = Engine::new(forms.clone())?;
    let (r0, r1) = lemma_residual_parts(&engine)?;
    let lt = r1.multiply(trace)?;
    let lv = r1.multiply(v2)?;
    let c_t = trace.eval_zero().coeff(0);
    let c_v = v2.eval_zero().coeff(0);
    // alpha c_t + beta c_v = 1 and r0 + alpha lt + beta lv = 0 at the probe.
    let mut solution = None;
    'probe: for k in 0..n {
        let keys: std::collections::BTreeSet<DominantWeight> = lt.levels()[k]
            .keys()
            .chain(lv.levels()[k].keys())
            .copied()
            .collect();
        for m in keys {
            let (a, b) = (lt.coeff(k, &m), lv.coeff(k, &m));
            let det = &c_t * &b - &c_v * &a;
            if det.is_zero() {
                continue;
            }
            let rhs = -r0.coeff(k, &m);
            let alpha = (&b - &c_v * &rhs) / &det;
            let beta = (&c_t * &rhs - &a) / &det;
            solution = Some((alpha, beta, (k, m)));
            break 'probe;
        }
    }
    let Some((alpha, beta, probe)) = solution else {
        return Err(Error::mismatch("no coefficient of the identity pins B4"));
    };
    let form = trace
        .scale(&alpha)
        .add(&v2.truncate(n).scale(&beta))?
        .with_holomorphic(true);
    let residual = r0.add(&r1.multiply(&form)?)?;
    if let Some(w) = first_nonzero(&residual) {
        return Err(Error::mismatch(format!(
            "identity fails after pinning B4 at {w}"
        )));
    }
    if form.eval_zero() != eisenstein(6, n)? {
        return Err(Error::mismatch("pinned B4 does not specialize to E6"));
    }
    Ok(PinnedB4 {
        alpha,
        beta,
        probe,
        form,
    })
}

pub fn first_nonzero(f: &JacobiExpansion) -> Option<Witness> {
    f.levels().iter().enumerate().find_map(|(n, l)| {
        l.iter().next().map(|(m, c)| Witness {
            n,
            m: *m,
            value: c.clone(),
        })
    })
}

/// Evaluates generator polynomials with memoized monomial expansions.
pub struct Engine {
    sakai: SakaiForms,
    poly: Vec<PolySeries>,
    scalars: [Vec<BigInt>; 2],
    products: Mutex<FxHashMap<Exponents, Arc<PolySeries>>>,
    scalar_powers: Mutex<FxHashMap<(u32, u32), Arc<Vec<BigInt>>>>,
}

impl Engine {
    /// Fails when the generators exceed the configured orbit-grade bound.
    pub fn new(sakai: SakaiForms) -> Result<Self> {
        let n = sakai.truncation;
        let poly = sakai
            .forms
            .iter()
            .map(JacobiExpansion::to_poly)
            .collect::<Result<_>>()?;
        let ints = |k| {
            eisenstein(k, n)
                .expect("weight")
                .to_integers()
                .expect("integral")
        };
        Ok(Engine {
            sakai,
            poly,
            scalars: [ints(4), ints(6)],
            products: Mutex::new(FxHashMap::default()),
            scalar_powers: Mutex::new(FxHashMap::default()),
        })
    }

    pub fn build(n: usize) -> Result<Self> {
        Engine::new(sakai_generators(n)?)
    }

    pub fn truncation(&self) -> usize {
        self.sakai.truncation
    }

    pub fn sakai(&self) -> &SakaiForms {
        &self.sakai
    }

    fn scalar_power(&self, a: u32, b: u32) -> Arc<Vec<BigInt>> {
        if let Some(v) = self.scalar_powers.lock().expect("lock").get(&(a, b)) {
            return v.clone();
        }
        let n = self.truncation();
        let v = if (a, b) == (0, 0) {
            let mut one = vec![BigInt::zero(); n];
            one[0] = BigInt::one();
            one
        } else {
            let (prev, idx) = if a > 0 {
                ((a - 1, b), 0)
            } else {
                ((a, b - 1), 1)
            };
            let p = self.scalar_power(prev.0, prev.1);
            let s = &self.scalars[idx];
            (0..n)
                .map(|i| (0..=i).map(|j| &p[j] * &s[i - j]).sum())
                .collect()
        };
        let v = Arc::new(v);
        self.scalar_powers
            .lock()
            .expect("lock")
            .insert((a, b), v.clone());
        v
    }

    /// Expansion of a single monomial in the monomial basis of the orbit ring.
    pub fn monomial(&self, e: &Exponents) -> Result<Arc<PolySeries>> {
        if let Some(p) = self.products.lock().expect("lock").get(e) {
            return Ok(p.clone());
        }
        let n = self.truncation();
        let result = if e[E4] > 0 || e[E6] > 0 {
            let mut base = *e;
            base[E4] = 0;
            base[E6] = 0;
            self.monomial(&base)?
                .mul_scalar_series(&self.scalar_power(e[E4], e[E6]))
        } else if let Some(i) = (2..11).rev().find(|&i| e[i] > 0) {
            let mut rest = *e;
            rest[i] -= 1;
            self.monomial(&rest)?.mul(&self.poly[i])?
        } else {
            PolySeries::one(n)
        };
        let result = Arc::new(result);
        self.products
            .lock()
            .expect("lock")
            .insert(*e, result.clone());
        Ok(result)
    }

    /// `sum_e c_e * monomial(e)` as a series over a common denominator.
    pub fn expand_poly(&self, p: &GeneratorPolynomial) -> Result<PolySeries> {
        let n = self.truncation();
        if p.is_zero() {
            return Ok(PolySeries::zero(n));
        }
        let den = p
            .terms
            .values()
            .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let monos: Vec<(Arc<PolySeries>, BigInt)> = p
            .terms
            .iter()
            .map(|(e, c)| Ok((self.monomial(e)?, c.numer() * (&den / c.denom()))))
            .collect::<Result<_>>()?;
        let refs: Vec<(&PolySeries, BigInt)> =
            monos.iter().map(|(s, c)| (&**s, c.clone())).collect();
        Ok(PolySeries::combine(&refs).scale(&BigInt::one(), &den))
    }

    /// The Jacobi form defined by a bihomogeneous polynomial.
    pub fn expand(&self, p: &GeneratorPolynomial) -> Result<JacobiExpansion> {
        let Some((weight, index)) = p.bidegree() else {
            if p.is_zero() {
                return Ok(JacobiExpansion::new(
                    0,
                    0,
                    true,
                    vec![Default::default(); self.truncation()],
                ));
            }
            return Err(Error::usage(format!(
                "polynomial is not bihomogeneous: {p}"
            )));
        };
        JacobiExpansion::from_poly(weight, index, true, &self.expand_poly(p)?)
    }
}

/// `E4^a E6^b` as a q-series with `a, b` read from a polynomial in `E4, E6`.
pub fn modular_value(p: &GeneratorPolynomial, n: usize) -> Result<QSeries> {
    let e4 = eisenstein(4, n)?;
    let e6 = eisenstein(6, n)?;
    let mut out = QSeries::zero(n);
    for (e, c) in &p.terms {
        if e[2..].iter().any(|&x| x > 0) {
            return Err(Error::usage("not a polynomial in E4 and E6"));
        }
        out = &out + &(&e4.pow(e[E4]) * &e6.pow(e[E6])).scale(c);
    }
    Ok(out)
}
