//! Exact fields: the rationals, prime fields and their finite extensions.
//!
//! Every other module is generic over [`Field`]. Finite fields share one
//! element representation (`u64` holding the base-`p` digits of the
//! coefficient vector in the power basis), so a prime field and all of its
//! extensions can be enumerated by index and mixed in one witness search.

use std::collections::HashMap;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("invalid field specification `{0}` (expected Q, F<p> or F<p>^<k>)")]
    BadSpec(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field order {p}^{k} does not fit in 64 bits")]
    TooLarge { p: u64, k: u32 },
    #[error("characteristic {p} exceeds 32 bits")]
    CharacteristicTooLarge { p: u64 },
    #[error("modulus is not irreducible over F{0}")]
    Reducible(u64),
    #[error("cannot parse `{text}` as an element of {field}")]
    BadElement { text: String, field: String },
    #[error("no embedding of {from} into {to}")]
    NoEmbedding { from: String, to: String },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
}

/// An exact commutative field.
pub trait Field: Clone + Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Eq + Hash + Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// 0 for the rationals.
    fn characteristic(&self) -> u64;
    /// `None` when the field is infinite.
    fn order(&self) -> Option<u64>;
    fn spec(&self) -> FieldSpec;
    fn format_elem(&self, a: &Self::Elem) -> String;
    fn parse_elem(&self, s: &str) -> Result<Self::Elem, FieldError>;

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// `acc + a*b`, overridable where a fused path is cheaper.
    fn mul_add(&self, acc: &Self::Elem, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(acc, &self.mul(a, b))
    }
}

/// A field whose elements can be listed as `0..order`.
pub trait FiniteField: Field {
    fn size(&self) -> u64;
    fn elem_at(&self, index: u64) -> Self::Elem;
    fn index_of(&self, a: &Self::Elem) -> u64;
}

/// Textual field specification: `Q`, `F<p>`, `F<p>^<k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FieldSpec {
    Rationals,
    Prime(u64),
    Extension { p: u64, k: u32 },
}

impl FieldSpec {
    pub fn characteristic(&self) -> u64 {
        match *self {
            FieldSpec::Rationals => 0,
            FieldSpec::Prime(p) | FieldSpec::Extension { p, .. } => p,
        }
    }

    /// Degree over the prime field (1 for `Q` and `F<p>`).
    pub fn degree(&self) -> u32 {
        match *self {
            FieldSpec::Extension { k, .. } => k,
            _ => 1,
        }
    }

    pub fn order(&self) -> Option<u64> {
        match *self {
            FieldSpec::Rationals => None,
            FieldSpec::Prime(p) => Some(p),
            FieldSpec::Extension { p, k } => p.checked_pow(k),
        }
    }

    /// Finite field of order `q`, with `q` a prime power.
    pub fn of_order(q: u64) -> Result<FieldSpec, FieldError> {
        let (p, k) = prime_power(q).ok_or(FieldError::NotPrimePower(q))?;
        Ok(if k == 1 { FieldSpec::Prime(p) } else { FieldSpec::Extension { p, k } })
    }

    pub fn build(&self) -> Result<AnyField, FieldError> {
        Ok(match *self {
            FieldSpec::Rationals => AnyField::Q(Rationals),
            FieldSpec::Prime(p) => AnyField::Fq(Fq::new(p, 1)?),
            FieldSpec::Extension { p, k } => AnyField::Fq(Fq::new(p, k)?),
        })
    }
}

impl Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::Prime(p) => write!(f, "F{p}"),
            FieldSpec::Extension { p, k } if k == 1 => write!(f, "F{p}"),
            FieldSpec::Extension { p, k } => write!(f, "F{p}^{k}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || FieldError::BadSpec(s.to_string());
        if t == "Q" {
            return Ok(FieldSpec::Rationals);
        }
        let rest = t.strip_prefix('F').ok_or_else(bad)?;
        let (p_str, k) = match rest.split_once('^') {
            Some((p, k)) => (p, k.parse::<u32>().map_err(|_| bad())?),
            None => (rest, 1),
        };
        let p: u64 = p_str.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(if k == 1 { FieldSpec::Prime(p) } else { FieldSpec::Extension { p, k } })
    }
}

impl TryFrom<String> for FieldSpec {
    type Error = FieldError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FieldSpec> for String {
    fn from(s: FieldSpec) -> String {
        s.to_string()
    }
}

/// Runtime choice between the two concrete field families.
#[derive(Debug, Clone)]
pub enum AnyField {
    Q(Rationals),
    Fq(Fq),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// `q = p^k` with `p` prime, if it is one.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2u64;
    let mut m = q;
    while p.saturating_mul(p) <= m && m % p != 0 {
        p += 1;
    }
    if m % p != 0 {
        p = m;
    }
    let mut k = 0;
    while m % p == 0 {
        m /= p;
        k += 1;
    }
    (m == 1).then_some((p, k))
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// ---------------------------------------------------------------------------
// Rationals

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        (!a.is_zero()).then(|| a.recip())
    }
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn is_one(&self, a: &BigRational) -> bool {
        a.is_one()
    }
    fn characteristic(&self) -> u64 {
        0
    }
    fn order(&self) -> Option<u64> {
        None
    }
    fn spec(&self) -> FieldSpec {
        FieldSpec::Rationals
    }
    fn format_elem(&self, a: &BigRational) -> String {
        if a.is_integer() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }
    fn parse_elem(&self, s: &str) -> Result<BigRational, FieldError> {
        let bad = || FieldError::BadElement { text: s.to_string(), field: "Q".into() };
        let t = s.trim();
        match t.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(BigRational::new(n, d))
            }
            None => Ok(BigRational::from_integer(t.parse().map_err(|_| bad())?)),
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomials over F_p, coefficient vectors low degree first.

pub(crate) mod poly {
    pub fn trim(a: &mut Vec<u64>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y % p) % p;
            }
        }
        let mut out = out;
        trim(&mut out);
        out
    }

    pub fn inv_mod_p(a: u64, p: u64) -> u64 {
        let (mut t, mut new_t) = (0i128, 1i128);
        let (mut r, mut new_r) = (p as i128, a as i128);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        debug_assert_eq!(r, 1);
        t.rem_euclid(p as i128) as u64
    }

    /// Remainder of `a` modulo `m` (`m` nonzero).
    pub fn rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        let mut r = a.to_vec();
        trim(&mut r);
        let dm = m.len() - 1;
        let lead_inv = inv_mod_p(m[dm], p);
        while r.len() > dm {
            let shift = r.len() - 1 - dm;
            let c = r[r.len() - 1] * lead_inv % p;
            for (i, &mi) in m.iter().enumerate() {
                let t = c * mi % p;
                r[shift + i] = (r[shift + i] + p - t) % p;
            }
            trim(&mut r);
        }
        r
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let mut out: Vec<u64> = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(&mut out);
        out
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        trim(&mut x);
        trim(&mut y);
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = y;
            y = r;
        }
        if let Some(&lead) = x.last() {
            let li = inv_mod_p(lead, p);
            for c in x.iter_mut() {
                *c = *c * li % p;
            }
        }
        x
    }

    /// `base^e mod m`.
    pub fn pow_mod(base: &[u64], mut e: u128, m: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = rem(base, m, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = rem(&mul(&acc, &b, p), m, p);
            }
            b = rem(&mul(&b, &b, p), m, p);
            e >>= 1;
        }
        acc
    }
}

/// Rabin's irreducibility test for a monic `f` of degree `k` over F_p.
pub fn is_irreducible(f: &[u64], p: u64) -> bool {
    let k = f.len() - 1;
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    let pk = (p as u128).pow(k as u32);
    let xq = poly::pow_mod(&x, pk, f, p);
    if poly::sub(&xq, &x, p) != Vec::<u64>::new() {
        return false;
    }
    for r in prime_divisors(k as u64) {
        let e = (p as u128).pow((k as u64 / r) as u32);
        let h = poly::sub(&poly::pow_mod(&x, e, f, p), &x, p);
        if poly::gcd(&h, f, p).len() != 1 {
            return false;
        }
    }
    true
}

/// Lowest monic irreducible of degree `k` over F_p, ordering candidates by
/// the integer whose base-`p` digits are the lower coefficients (constant
/// term least significant).
pub fn lowest_irreducible(p: u64, k: u32) -> Vec<u64> {
    let count = (p as u128).pow(k);
    let mut idx: u128 = 0;
    loop {
        assert!(idx < count, "no irreducible polynomial of degree {k} over F{p}");
        let mut f = Vec::with_capacity(k as usize + 1);
        let mut t = idx;
        for _ in 0..k {
            f.push((t % p as u128) as u64);
            t /= p as u128;
        }
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
        idx += 1;
    }
}

// ---------------------------------------------------------------------------
// Finite fields

const TABLE_LIMIT: u64 = 1 << 16;

#[derive(Debug)]
struct FqInner {
    p: u64,
    k: u32,
    order: u64,
    modulus: Vec<u64>,
    /// `log[a]` for `a != 0`, `exp[i] = g^i` with `g` primitive.
    tables: Option<(Vec<u32>, Vec<u64>)>,
}

/// The finite field `F_{p^k}`, presented as `F_p[x]/(f)` with `f` the lowest
/// monic irreducible of degree `k`.
#[derive(Clone)]
pub struct Fq(Arc<FqInner>);

impl Debug for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec())
    }
}

impl PartialEq for Fq {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.modulus == other.0.modulus
    }
}
impl Eq for Fq {}

impl Fq {
    pub fn new(p: u64, k: u32) -> Result<Fq, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if p >= 1 << 32 {
            return Err(FieldError::CharacteristicTooLarge { p });
        }
        let modulus = if k == 1 { vec![0, 1] } else { lowest_irreducible(p, k) };
        Fq::with_modulus(p, modulus)
    }

    pub fn prime(p: u64) -> Result<Fq, FieldError> {
        Fq::new(p, 1)
    }

    /// Finite field of order `q`.
    pub fn of_order(q: u64) -> Result<Fq, FieldError> {
        let (p, k) = prime_power(q).ok_or(FieldError::NotPrimePower(q))?;
        Fq::new(p, k)
    }

    /// Builds `F_p[x]/(modulus)`; `modulus` must be monic and irreducible.
    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Fq, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if p >= 1 << 32 {
            return Err(FieldError::CharacteristicTooLarge { p });
        }
        let k = (modulus.len() - 1) as u32;
        if modulus.last() != Some(&1) || !is_irreducible(&modulus, p) {
            return Err(FieldError::Reducible(p));
        }
        let order = p.checked_pow(k).ok_or(FieldError::TooLarge { p, k })?;
        let mut inner = FqInner { p, k, order, modulus, tables: None };
        if k > 1 && order <= TABLE_LIMIT {
            inner.tables = Some(build_tables(&inner));
        }
        Ok(Fq(Arc::new(inner)))
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.k
    }

    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }

    /// Base-`p` coefficient digits of `a`, constant term first.
    pub fn digits(&self, a: u64) -> Vec<u64> {
        let p = self.0.p;
        let mut t = a;
        (0..self.0.k)
            .map(|_| {
                let d = t % p;
                t /= p;
                d
            })
            .collect()
    }

    pub fn from_digits(&self, d: &[u64]) -> u64 {
        let p = self.0.p;
        d.iter().rev().fold(0u64, |acc, &c| acc * p + c % p)
    }

    /// The class of `x` in the power basis (the generator of the extension).
    pub fn generator(&self) -> u64 {
        if self.0.k == 1 {
            // any element generates F_p over itself; pick 1
            1
        } else {
            self.0.p
        }
    }

    /// `a^p`.
    pub fn frobenius(&self, a: u64) -> u64 {
        self.pow(&a, self.0.p)
    }

    /// Embedding of `self` into `target` (same characteristic, degree dividing).
    pub fn embedding_into(&self, target: &Fq) -> Result<Embedding, FieldError> {
        let fail = || FieldError::NoEmbedding { from: self.spec().to_string(), to: target.spec().to_string() };
        if self.p() != target.p() || target.degree() % self.degree() != 0 {
            return Err(fail());
        }
        let image_of_x = if self.degree() == 1 {
            0
        } else if self == target {
            self.generator()
        } else {
            // smallest root of our modulus in the target
            let f = self.modulus();
            (0..target.size())
                .find(|&cand| {
                    let mut acc = 0u64;
                    for &c in f.iter().rev() {
                        acc = target.add(&target.mul(&acc, &cand), &c);
                    }
                    acc == 0
                })
                .ok_or_else(fail)?
        };
        let mut powers = Vec::with_capacity(self.degree() as usize);
        let mut cur = 1u64;
        for _ in 0..self.degree() {
            powers.push(cur);
            cur = target.mul(&cur, &image_of_x);
        }
        Ok(Embedding { source: self.clone(), target: target.clone(), powers })
    }

    fn poly_mul(&self, a: u64, b: u64) -> u64 {
        let p = self.0.p;
        let prod = poly::mul(&self.digits(a), &self.digits(b), p);
        let r = poly::rem(&prod, &self.0.modulus, p);
        self.from_digits(&r)
    }
}

fn build_tables(inner: &FqInner) -> (Vec<u32>, Vec<u64>) {
    let tmp = Fq(Arc::new(FqInner {
        p: inner.p,
        k: inner.k,
        order: inner.order,
        modulus: inner.modulus.clone(),
        tables: None,
    }));
    let n = inner.order - 1;
    let factors = prime_divisors(n);
    let g = (2..inner.order)
        .find(|&g| factors.iter().all(|&f| tmp.pow_slow(g, n / f) != 1))
        .unwrap_or(1);
    let mut exp = Vec::with_capacity(n as usize);
    let mut log = vec![0u32; inner.order as usize];
    let mut cur = 1u64;
    for i in 0..n {
        exp.push(cur);
        log[cur as usize] = i as u32;
        cur = tmp.poly_mul(cur, g);
    }
    (log, exp)
}

impl Fq {
    fn pow_slow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.poly_mul(acc, base);
            }
            base = self.poly_mul(base, base);
            e >>= 1;
        }
        acc
    }
}

impl Field for Fq {
    type Elem = u64;

    #[inline]
    fn zero(&self) -> u64 {
        0
    }
    #[inline]
    fn one(&self) -> u64 {
        1
    }
    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = &self.0;
        if s.k == 1 {
            let t = a + b;
            if t >= s.p {
                t - s.p
            } else {
                t
            }
        } else if s.p == 2 {
            a ^ b
        } else {
            let (mut x, mut y, mut out, mut place) = (*a, *b, 0u64, 1u64);
            while x > 0 || y > 0 {
                let d = (x % s.p + y % s.p) % s.p;
                out += d * place;
                place *= s.p;
                x /= s.p;
                y /= s.p;
            }
            out
        }
    }
    #[inline]
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        self.add(a, &self.neg(b))
    }
    #[inline]
    fn neg(&self, a: &u64) -> u64 {
        let s = &self.0;
        if *a == 0 {
            0
        } else if s.k == 1 {
            s.p - a
        } else if s.p == 2 {
            *a
        } else {
            let (mut x, mut out, mut place) = (*a, 0u64, 1u64);
            while x > 0 {
                let d = x % s.p;
                out += ((s.p - d) % s.p) * place;
                place *= s.p;
                x /= s.p;
            }
            out
        }
    }
    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        let s = &self.0;
        if s.k == 1 {
            a * b % s.p
        } else if *a == 0 || *b == 0 {
            0
        } else if let Some((log, exp)) = &s.tables {
            let e = (log[*a as usize] as u64 + log[*b as usize] as u64) % (s.order - 1);
            exp[e as usize]
        } else {
            self.poly_mul(*a, *b)
        }
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        let s = &self.0;
        if *a == 0 {
            None
        } else if s.k == 1 {
            Some(poly::inv_mod_p(*a, s.p))
        } else if let Some((log, exp)) = &s.tables {
            let n = s.order - 1;
            Some(exp[((n - log[*a as usize] as u64) % n) as usize])
        } else {
            Some(self.pow_slow(*a, s.order - 2))
        }
    }
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.0.p as i64) as u64
    }
    #[inline]
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn characteristic(&self) -> u64 {
        self.0.p
    }
    fn order(&self) -> Option<u64> {
        Some(self.0.order)
    }
    fn spec(&self) -> FieldSpec {
        if self.0.k == 1 {
            FieldSpec::Prime(self.0.p)
        } else {
            FieldSpec::Extension { p: self.0.p, k: self.0.k }
        }
    }
    fn format_elem(&self, a: &u64) -> String {
        a.to_string()
    }
    fn parse_elem(&self, s: &str) -> Result<u64, FieldError> {
        let t = s.trim();
        let bad = || FieldError::BadElement { text: s.to_string(), field: self.spec().to_string() };
        if self.0.k == 1 {
            // signed integers are reduced mod p
            let v: i64 = t.parse().map_err(|_| bad())?;
            return Ok(self.from_i64(v));
        }
        let v: u64 = t.parse().map_err(|_| bad())?;
        if v >= self.0.order {
            return Err(bad());
        }
        Ok(v)
    }
    #[inline]
    fn mul_add(&self, acc: &u64, a: &u64, b: &u64) -> u64 {
        if self.0.k == 1 {
            (acc + a * b) % self.0.p
        } else {
            self.add(acc, &self.mul(a, b))
        }
    }
}

impl FiniteField for Fq {
    fn size(&self) -> u64 {
        self.0.order
    }
    fn elem_at(&self, index: u64) -> u64 {
        index
    }
    fn index_of(&self, a: &u64) -> u64 {
        *a
    }
}

/// Field homomorphism `F_{p^m} -> F_{p^{mk}}`.
#[derive(Debug, Clone)]
pub struct Embedding {
    source: Fq,
    target: Fq,
    powers: Vec<u64>,
}

impl Embedding {
    pub fn source(&self) -> &Fq {
        &self.source
    }

    pub fn target(&self) -> &Fq {
        &self.target
    }

    pub fn map(&self, a: &u64) -> u64 {
        if self.source.degree() == 1 {
            return *a;
        }
        let t = &self.target;
        self.source
            .digits(*a)
            .iter()
            .zip(&self.powers)
            .fold(0u64, |acc, (&d, &pw)| t.add(&acc, &t.mul(&d, &pw)))
    }
}

/// Cached extensions `F_q ⊂ F_{q^k}` keyed by the base field and `k`.
#[derive(Debug, Clone)]
pub struct Extension {
    pub field: Fq,
    pub embedding: Embedding,
    pub degree: u32,
}

type Registry = RwLock<HashMap<(u64, Vec<u64>, u32), Arc<Extension>>>;

fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(|| RwLock::new(HashMap::new()))
}

/// The degree-`k` extension of `base`, built once per process.
pub fn extension(base: &Fq, k: u32) -> Result<Arc<Extension>, FieldError> {
    let key = (base.p(), base.modulus().to_vec(), k);
    if let Some(e) = registry().read().expect("registry poisoned").get(&key) {
        return Ok(e.clone());
    }
    let field = if k == 1 { base.clone() } else { Fq::new(base.p(), base.degree() * k)? };
    let embedding = base.embedding_into(&field)?;
    let ext = Arc::new(Extension { field, embedding, degree: k });
    let mut w = registry().write().expect("registry poisoned");
    Ok(w.entry(key).or_insert(ext).clone())
}

/// Convenience for rationals as integer pairs in tests and constructors.
pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Trial factorization: `f` has no monic factor of degree 1..=deg/2.
    fn irreducible_by_trial(f: &[u64], p: u64) -> bool {
        let k = f.len() - 1;
        for d in 1..=k / 2 {
            for idx in 0..p.pow(d as u32) {
                let mut g = Vec::new();
                let mut t = idx;
                for _ in 0..d {
                    g.push(t % p);
                    t /= p;
                }
                g.push(1);
                if poly::rem(f, &g, p).is_empty() {
                    return false;
                }
            }
        }
        k > 0
    }

    #[test]
    fn rabin_agrees_with_trial_division() {
        for &p in &[2u64, 3, 5] {
            for k in 1..=4u32 {
                for idx in 0..p.pow(k) {
                    let mut f = Vec::new();
                    let mut t = idx;
                    for _ in 0..k {
                        f.push(t % p);
                        t /= p;
                    }
                    f.push(1);
                    assert_eq!(is_irreducible(&f, p), irreducible_by_trial(&f, p), "{f:?} over F{p}");
                }
            }
        }
    }

    #[test]
    fn lowest_irreducibles() {
        assert_eq!(lowest_irreducible(2, 2), vec![1, 1, 1]);
        assert_eq!(lowest_irreducible(2, 3), vec![1, 1, 0, 1]);
        assert_eq!(lowest_irreducible(3, 2), vec![1, 0, 1]);
    }

    #[test]
    fn spec_grammar() {
        assert_eq!("Q".parse::<FieldSpec>().unwrap(), FieldSpec::Rationals);
        assert_eq!("F5".parse::<FieldSpec>().unwrap(), FieldSpec::Prime(5));
        assert_eq!("F2^3".parse::<FieldSpec>().unwrap(), FieldSpec::Extension { p: 2, k: 3 });
        assert_eq!(FieldSpec::Extension { p: 2, k: 3 }.to_string(), "F2^3");
        assert!("F4".parse::<FieldSpec>().is_err());
        assert!("G5".parse::<FieldSpec>().is_err());
        assert!("F5^0".parse::<FieldSpec>().is_err());
        assert_eq!(FieldSpec::of_order(9).unwrap(), FieldSpec::Extension { p: 3, k: 2 });
        assert!(FieldSpec::of_order(12).is_err());
    }

    #[test]
    fn prime_power_detection() {
        assert_eq!(prime_power(2), Some((2, 1)));
        assert_eq!(prime_power(16), Some((2, 4)));
        assert_eq!(prime_power(49), Some((7, 2)));
        assert_eq!(prime_power(6), None);
        assert_eq!(prime_power(1), None);
    }

    fn check_field_axioms(f: &Fq) {
        let q = f.size();
        for a in 0..q.min(40) {
            assert_eq!(f.add(&a, &f.neg(&a)), 0);
            if a != 0 {
                assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), 1);
            }
        }
    }

    #[test]
    fn small_fields_axioms() {
        for (p, k) in [(2, 1), (2, 2), (2, 4), (3, 2), (5, 1), (7, 3), (2, 20)] {
            check_field_axioms(&Fq::new(p, k).unwrap());
        }
    }

    #[test]
    fn table_and_polynomial_paths_agree() {
        let f = Fq::new(3, 3).unwrap();
        for a in 0..27 {
            for b in 0..27 {
                assert_eq!(f.mul(&a, &b), f.poly_mul(a, b));
            }
        }
    }

    #[test]
    fn embeddings_are_homomorphisms() {
        let f4 = Fq::new(2, 2).unwrap();
        let f16 = Fq::new(2, 4).unwrap();
        let e = f4.embedding_into(&f16).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(e.map(&f4.mul(&a, &b)), f16.mul(&e.map(&a), &e.map(&b)));
                assert_eq!(e.map(&f4.add(&a, &b)), f16.add(&e.map(&a), &e.map(&b)));
            }
        }
        assert!(f4.embedding_into(&Fq::new(2, 3).unwrap()).is_err());
        assert!(f4.embedding_into(&Fq::new(3, 2).unwrap()).is_err());
    }

    #[test]
    fn registry_returns_same_instance() {
        let f3 = Fq::prime(3).unwrap();
        let a = extension(&f3, 2).unwrap();
        let b = extension(&f3, 2).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.field.size(), 9);
    }

    #[test]
    fn rationals_parse_and_format() {
        let q = Rationals;
        let x = q.parse_elem("-3/6").unwrap();
        assert_eq!(q.format_elem(&x), "-1/2");
        assert_eq!(q.format_elem(&q.parse_elem("4").unwrap()), "4");
        assert!(q.parse_elem("1/0").is_err());
    }

    proptest! {
        #[test]
        fn frobenius_is_a_ring_map(
            (p, k) in prop_oneof![Just((2u64, 3u32)), Just((3, 2)), Just((5, 2)), Just((7, 1)), Just((2, 17))],
            a in any::<u64>(), b in any::<u64>(),
        ) {
            let f = Fq::new(p, k).unwrap();
            let a = a % f.size();
            let b = b % f.size();
            prop_assert_eq!(f.frobenius(f.add(&a, &b)), f.add(&f.frobenius(a), &f.frobenius(b)));
            prop_assert_eq!(f.frobenius(f.mul(&a, &b)), f.mul(&f.frobenius(a), &f.frobenius(b)));
        }

        #[test]
        fn sampled_field_axioms(
            (p, k) in prop_oneof![Just((2u64, 1u32)), Just((2, 3)), Just((3, 2)), Just((5, 1)), Just((5, 3)), Just((13, 2))],
            a in any::<u64>(), b in any::<u64>(), c in any::<u64>(),
        ) {
            let f = Fq::new(p, k).unwrap();
            let (a, b, c) = (a % f.size(), b % f.size(), c % f.size());
            prop_assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
            prop_assert_eq!(f.add(&f.add(&a, &b), &c), f.add(&a, &f.add(&b, &c)));
            prop_assert_eq!(f.mul(&a, &f.add(&b, &c)), f.add(&f.mul(&a, &b), &f.mul(&a, &c)));
            prop_assert_eq!(f.sub(&f.add(&a, &b), &b), a);
            if a != 0 {
                prop_assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), 1);
            }
        }
    }
}
