//! Exact arithmetic in the real quadratic field Q(√m).
//!
//! A [`QuadScalar`] is `a + b·√m` with rational `a`, `b` and square-free `m`.
//! Pure rationals are normalized to `b = 0, m = 0`, so structural equality is
//! value equality. Mixing two different irrational rings is a logic error and
//! panics.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Returns true when `m` has no repeated prime factor.
pub fn is_square_free(m: u32) -> bool {
    if m < 2 {
        return false;
    }
    let mut n = m;
    let mut p = 2u32;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        p += 1;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadScalar {
    a: BigRational,
    b: BigRational,
    m: u32,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl QuadScalar {
    pub fn zero() -> Self {
        QuadScalar {
            a: BigRational::zero(),
            b: BigRational::zero(),
            m: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat(n))
    }

    pub fn from_rational(a: BigRational) -> Self {
        QuadScalar {
            a,
            b: BigRational::zero(),
            m: 0,
        }
    }

    /// Builds `a + b·√m`. `m` must be 0 or square-free; with `m = 0` the
    /// irrational part must vanish.
    pub fn new(a: BigRational, b: BigRational, m: u32) -> Result<Self> {
        if b.is_zero() {
            return Ok(Self::from_rational(a));
        }
        if m == 0 {
            return Err(Error::Parse("irrational part given with ring m = 0".into()));
        }
        if !is_square_free(m) {
            return Err(Error::Parse(format!("ring parameter {m} is not square-free")));
        }
        Ok(QuadScalar { a, b, m })
    }

    /// `√m` itself.
    pub fn sqrt(m: u32) -> Result<Self> {
        Self::new(BigRational::zero(), BigRational::one(), m)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.b
    }

    /// The ring parameter; 0 for rationals.
    pub fn ring(&self) -> u32 {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        self.is_rational().then(|| self.a.clone())
    }

    fn joint_ring(&self, other: &Self) -> u32 {
        match (self.m, other.m) {
            (0, m) | (m, 0) => m,
            (m, n) if m == n => m,
            (m, n) => panic!("mixing quadratic rings Q(√{m}) and Q(√{n})"),
        }
    }

    fn build(a: BigRational, b: BigRational, m: u32) -> Self {
        if b.is_zero() {
            Self::from_rational(a)
        } else {
            QuadScalar { a, b, m }
        }
    }

    pub fn conjugate(&self) -> Self {
        Self::build(self.a.clone(), -self.b.clone(), self.m)
    }

    /// Field norm `a² − m·b²`.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * rat(self.m as i64)
    }

    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = self.b.cmp(&BigRational::zero());
        match (sa, sb) {
            (s, Ordering::Equal) => s,
            (Ordering::Equal, s) => s,
            (x, y) if x == y => x,
            (x, _) => {
                // opposite signs: compare a² with m·b²
                let lhs = &self.a * &self.a;
                let rhs = &self.b * &self.b * rat(self.m as i64);
                match lhs.cmp(&rhs) {
                    Ordering::Greater => x,
                    Ordering::Less => x.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        let c = self.conjugate();
        Some(Self::build(&c.a / &n, &c.b / &n, c.m))
    }

    /// Values with integer coefficients only.
    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    pub(crate) fn denominators(&self) -> (BigInt, BigInt) {
        (self.a.denom().clone(), self.b.denom().clone())
    }

    pub(crate) fn numerators(&self) -> (BigInt, BigInt) {
        (self.a.numer().clone(), self.b.numer().clone())
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Self::build(&self.a * k, &self.b * k, self.m)
    }
}

impl Default for QuadScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for QuadScalar {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl From<BigRational> for QuadScalar {
    fn from(r: BigRational) -> Self {
        Self::from_rational(r)
    }
}

impl PartialOrd for QuadScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl<'a> Add<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    fn add(self, o: &QuadScalar) -> QuadScalar {
        let m = self.joint_ring(o);
        QuadScalar::build(&self.a + &o.a, &self.b + &o.b, m)
    }
}

impl<'a> Sub<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    fn sub(self, o: &QuadScalar) -> QuadScalar {
        let m = self.joint_ring(o);
        QuadScalar::build(&self.a - &o.a, &self.b - &o.b, m)
    }
}

impl<'a> Mul<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    fn mul(self, o: &QuadScalar) -> QuadScalar {
        let m = self.joint_ring(o);
        let a = &self.a * &o.a + &self.b * &o.b * rat(m as i64);
        let b = &self.a * &o.b + &self.b * &o.a;
        QuadScalar::build(a, b, m)
    }
}

impl<'a> Div<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    fn div(self, o: &QuadScalar) -> QuadScalar {
        let inv = o.inverse().expect("division by zero in Q(√m)");
        self * &inv
    }
}

impl Neg for &QuadScalar {
    type Output = QuadScalar;
    fn neg(self) -> QuadScalar {
        QuadScalar::build(-self.a.clone(), -self.b.clone(), self.m)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<QuadScalar> for QuadScalar {
            type Output = QuadScalar;
            fn $f(self, o: QuadScalar) -> QuadScalar {
                (&self).$f(&o)
            }
        }
        impl<'a> $tr<&'a QuadScalar> for QuadScalar {
            type Output = QuadScalar;
            fn $f(self, o: &QuadScalar) -> QuadScalar {
                (&self).$f(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for QuadScalar {
    type Output = QuadScalar;
    fn neg(self) -> QuadScalar {
        -&self
    }
}

impl std::iter::Sum for QuadScalar {
    fn sum<I: Iterator<Item = QuadScalar>>(iter: I) -> Self {
        iter.fold(QuadScalar::zero(), |acc, x| acc + x)
    }
}

pub(crate) fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(
            BigInt::from_str(s).map_err(|_| bad())?,
        )),
    }
}

/// Formats as `a`, `a+b*r` or `a-b*r`, where `r` stands for √m.
impl fmt::Display for QuadScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return f.write_str(&fmt_rational(&self.a));
        }
        let sign = if self.b.is_negative() { '-' } else { '+' };
        write!(
            f,
            "{}{}{}*r",
            fmt_rational(&self.a),
            sign,
            fmt_rational(&self.b.abs())
        )
    }
}

impl QuadScalar {
    /// Parses `a`, `a+b*r`, `a-b*r`, `b*r` or `-b*r` with integer or `p/q`
    /// coefficients; `r` stands for √m.
    pub fn parse(s: &str, m: u32) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(body) = t.strip_suffix("*r") else {
            if t.contains('r') {
                return Err(Error::Parse(format!("bad scalar {s:?}")));
            }
            return Ok(Self::from_rational(parse_rational(&t)?));
        };
        // split at the last sign that is not at position 0
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let (a, b) = match split {
            Some(i) => {
                let (a, b) = body.split_at(i);
                let b = b.strip_prefix('+').unwrap_or(b);
                (parse_rational(a)?, parse_rational(b)?)
            }
            None => (BigRational::zero(), parse_rational(body)?),
        };
        Self::new(a, b, m)
    }
}

impl FromStr for QuadScalar {
    type Err = Error;
    /// Parses without a ring; irrational literals are rejected.
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, 0)
    }
}

/// Serialized in the textual `a+b*r` form; the ring is carried by the enclosing model.
impl Serialize for QuadScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QuadScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        // rings are re-attached by the model loader
        QuadScalar::parse(&s, 0).map_err(serde::de::Error::custom)
    }
}

/// Gcd of a list of integers, ignoring zeros; 0 for an all-zero list.
pub(crate) fn gcd_all<'a>(xs: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::zero(), |g, x| if x.is_zero() { g } else { g.gcd(x) })
}

pub(crate) fn lcm_all<'a>(xs: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |l, x| l.lcm(x))
}
