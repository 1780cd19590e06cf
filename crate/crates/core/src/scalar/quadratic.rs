use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{rational_to_f64, ExactScalar, Rational, ScalarError};

/// Selects the quadratic extension `Q(√d)` shared by all scalars of a run.
///
/// `d` is reduced to its square-free part on construction; `d ∈ {0, 1}` (or
/// any perfect square) collapses to the plain rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldContext {
    d: u64,
    // √(requested d) = factor · √d
    factor: u64,
}

impl FieldContext {
    pub fn rationals() -> Self {
        FieldContext { d: 0, factor: 0 }
    }

    pub fn new(d: u64) -> Self {
        let (factor, core) = square_free(d);
        if core <= 1 {
            FieldContext { d: 0, factor: if core == 1 { factor } else { 0 } }
        } else {
            FieldContext { d: core, factor }
        }
    }

    /// Square-free radicand, 0 for the rationals.
    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.d == 0
    }

    /// `a + b·√d` in this field.
    pub fn scalar(&self, a: Rational, b: Rational) -> Quadratic {
        Quadratic::new(a, b, self.d)
    }

    /// The square root of the radicand the context was created with.
    pub fn sqrt(&self) -> Quadratic {
        if self.d == 0 {
            Quadratic::from_rational(Rational::from_integer(BigInt::from(self.factor)))
        } else {
            Quadratic::new(Rational::zero(), Rational::from_integer(BigInt::from(self.factor)), self.d)
        }
    }

    /// Accepts a scalar into this context, rejecting foreign radicals.
    pub fn admit(&self, x: &Quadratic) -> Result<(), ScalarError> {
        if x.d != 0 && x.d != self.d {
            return Err(ScalarError::MixedRadicals(self.d, x.d));
        }
        Ok(())
    }
}

/// Returns `(s, core)` with `d = s² · core` and `core` square-free.
fn square_free(d: u64) -> (u64, u64) {
    if d == 0 {
        return (0, 0);
    }
    let mut core = d;
    let mut s = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= core {
        while core.is_multiple_of(p * p) {
            core /= p * p;
            s *= p;
        }
        p += 1;
    }
    (s, core)
}

/// An element `a + b·√d` of a real quadratic field.
///
/// Invariant: `d` is square-free and `d = 0 ⇔ b = 0`, which makes the
/// representation unique. Arithmetic between two irrational scalars with
/// different radicands panics; machine parsing rejects such inputs earlier.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quadratic {
    a: Rational,
    b: Rational,
    d: u64,
}

impl Quadratic {
    pub fn new(a: Rational, b: Rational, d: u64) -> Self {
        let (s, core) = square_free(d);
        let b = b * Rational::from_integer(BigInt::from(s));
        if core <= 1 || b.is_zero() {
            // √core is 1 or 0 here
            let extra = if core == 1 { b } else { Rational::zero() };
            return Quadratic { a: a + extra, b: Rational::zero(), d: 0 };
        }
        Quadratic { a, b, d: core }
    }

    pub fn from_rational(a: Rational) -> Self {
        Quadratic { a, b: Rational::zero(), d: 0 }
    }

    /// The golden ratio `(1 + √5) / 2`.
    pub fn phi() -> Self {
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        Quadratic::new(half.clone(), half, 5)
    }

    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn irrational_part(&self) -> &Rational {
        &self.b
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn rational_value(&self) -> Option<Rational> {
        if self.b.is_zero() {
            Some(self.a.clone())
        } else {
            None
        }
    }

    pub fn conjugate(&self) -> Self {
        Quadratic { a: self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    fn joint_radicand(&self, other: &Self) -> u64 {
        match (self.d, other.d) {
            (0, d) | (d, 0) => d,
            (x, y) if x == y => x,
            (x, y) => panic!("{}", ScalarError::MixedRadicals(x, y)),
        }
    }

    /// Exact sign, decided by comparing `a²` with `b²·d`.
    pub fn signum(&self) -> i8 {
        let sa = rat_sign(&self.a);
        let sb = rat_sign(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * Rational::from_integer(BigInt::from(self.d));
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            // unreachable for square-free d > 1, kept total
            Ordering::Equal => 0,
        }
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError> {
        if rhs.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let d = self.joint_radicand(rhs);
        if rhs.d == 0 {
            return Ok(Quadratic::new(&self.a / &rhs.a, &self.b / &rhs.a, d));
        }
        // (x)(conj y) / (y conj y), where y conj y = a² − b²d is a nonzero rational
        let norm = &rhs.a * &rhs.a - &rhs.b * &rhs.b * Rational::from_integer(BigInt::from(d));
        let num = self.mul_ref(&rhs.conjugate());
        Ok(Quadratic::new(&num.a / &norm, &num.b / &norm, d))
    }

    fn add_ref(&self, rhs: &Self) -> Self {
        let d = self.joint_radicand(rhs);
        Quadratic::new(&self.a + &rhs.a, &self.b + &rhs.b, d)
    }

    fn sub_ref(&self, rhs: &Self) -> Self {
        let d = self.joint_radicand(rhs);
        Quadratic::new(&self.a - &rhs.a, &self.b - &rhs.b, d)
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        let d = self.joint_radicand(rhs);
        if self.d == 0 {
            return Quadratic::new(&self.a * &rhs.a, &self.a * &rhs.b, d);
        }
        if rhs.d == 0 {
            return Quadratic::new(&self.a * &rhs.a, &self.b * &rhs.a, d);
        }
        let dr = Rational::from_integer(BigInt::from(d));
        let a = &self.a * &rhs.a + &self.b * &rhs.b * dr;
        let b = &self.a * &rhs.b + &self.b * &rhs.a;
        Quadratic::new(a, b, d)
    }
}

fn rat_sign(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialOrd for Quadratic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quadratic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.d == 0 && other.d == 0 {
            return self.a.cmp(&other.a);
        }
        self.sub_ref(other).signum().cmp(&0)
    }
}

impl Add for Quadratic {
    type Output = Quadratic;
    fn add(self, rhs: Self) -> Self {
        self.add_ref(&rhs)
    }
}

impl<'a> Add<&'a Quadratic> for Quadratic {
    type Output = Quadratic;
    fn add(self, rhs: &'a Quadratic) -> Self {
        self.add_ref(rhs)
    }
}

impl Sub for Quadratic {
    type Output = Quadratic;
    fn sub(self, rhs: Self) -> Self {
        self.sub_ref(&rhs)
    }
}

impl<'a> Sub<&'a Quadratic> for Quadratic {
    type Output = Quadratic;
    fn sub(self, rhs: &'a Quadratic) -> Self {
        self.sub_ref(rhs)
    }
}

impl Mul for Quadratic {
    type Output = Quadratic;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}

impl<'a> Mul<&'a Quadratic> for Quadratic {
    type Output = Quadratic;
    fn mul(self, rhs: &'a Quadratic) -> Self {
        self.mul_ref(rhs)
    }
}

impl Neg for Quadratic {
    type Output = Quadratic;
    fn neg(self) -> Self {
        Quadratic { a: -self.a, b: -self.b, d: self.d }
    }
}

impl Zero for Quadratic {
    fn zero() -> Self {
        Quadratic::from_rational(Rational::zero())
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl One for Quadratic {
    fn one() -> Self {
        Quadratic::from_rational(Rational::one())
    }
}

impl ExactScalar for Quadratic {
    fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError> {
        Quadratic::checked_div(self, rhs)
    }

    fn from_rational(r: Rational) -> Self {
        Quadratic::from_rational(r)
    }

    fn to_rational(&self) -> Option<Rational> {
        self.rational_value()
    }

    fn to_quadratic(&self) -> Quadratic {
        self.clone()
    }

    fn from_quadratic(q: &Quadratic) -> Result<Self, ScalarError> {
        Ok(q.clone())
    }

    fn radicand(&self) -> u64 {
        self.d
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(&self.a) + rational_to_f64(&self.b) * (self.d as f64).sqrt()
    }

    fn sign(&self) -> i8 {
        self.signum()
    }
}

impl fmt::Display for Quadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if !self.a.is_zero() {
            write!(f, "{}", self.a)?;
            f.write_str(if self.b.is_negative() { "-" } else { "+" })?;
        } else if self.b.is_negative() {
            f.write_str("-")?;
        }
        let mag = self.b.abs();
        if !mag.is_one() {
            write!(f, "{}*", mag)?;
        }
        write!(f, "sqrt({})", self.d)
    }
}

impl fmt::Debug for Quadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_rational(text: &str) -> Result<Rational, String> {
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| format!("bad integer `{n}`"))?;
    let d: BigInt = d.parse().map_err(|_| format!("bad integer `{d}`"))?;
    if d.is_zero() {
        return Err(ScalarError::DivisionByZero.to_string());
    }
    Ok(Rational::new(n, d))
}

impl FromStr for Quadratic {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let fail = |why: String| ScalarError::Parse(s.to_string(), why);
        if text.is_empty() {
            return Err(fail("empty".into()));
        }
        let Some(at) = text.find("sqrt(") else {
            return parse_rational(&text).map(Quadratic::from_rational).map_err(fail);
        };
        let radical = &text[at + 5..];
        let radicand = radical.strip_suffix(')').ok_or_else(|| fail("unclosed sqrt(".into()))?;
        let d: u64 = radicand.parse().map_err(|_| fail(format!("bad radicand `{radicand}`")))?;
        let head = &text[..at];
        let head = head.strip_suffix('*').unwrap_or(head);
        // the coefficient starts at the last sign that is not the leading one
        let split = head.char_indices().rev().find(|&(i, c)| (c == '+' || c == '-') && i > 0).map(|(i, _)| i);
        let (rat, coef) = match split {
            Some(i) => (&head[..i], &head[i..]),
            None => ("", head),
        };
        let a = if rat.is_empty() { Rational::zero() } else { parse_rational(rat).map_err(fail)? };
        let b = match coef {
            "" | "+" => Rational::one(),
            "-" => -Rational::one(),
            c => parse_rational(c.strip_prefix('+').unwrap_or(c)).map_err(fail)?,
        };
        Ok(Quadratic::new(a, b, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Quadratic {
        s.parse().unwrap()
    }

    #[test]
    fn irrational_parts_cancel() {
        assert_eq!(q("1+sqrt(5)") + q("-sqrt(5)"), q("1"));
    }

    #[test]
    fn golden_ratio_squares_to_itself_plus_one() {
        let phi = Quadratic::phi();
        let sq = phi.clone() * &phi;
        assert_eq!(sq, q("3/2+1/2*sqrt(5)"));
        assert_eq!(sq, phi + Quadratic::one());
    }

    #[test]
    fn division_matches_cross_multiplication() {
        assert_eq!(q("2/3").checked_div(&q("1/6")).unwrap(), q("4"));
        assert_eq!(q("1").checked_div(&Quadratic::zero()), Err(ScalarError::DivisionByZero));
        let phi = Quadratic::phi();
        assert_eq!(Quadratic::one().checked_div(&phi).unwrap(), phi - Quadratic::one());
    }

    #[test]
    fn signs() {
        assert_eq!(q("1+sqrt(5)").signum(), 1);
        assert_eq!(q("-3+sqrt(5)").signum(), -1);
        assert_eq!(q("3-sqrt(5)").signum(), 1);
        assert_eq!(Quadratic::zero().signum(), 0);
    }

    #[test]
    fn radicand_is_square_free() {
        assert_eq!(q("sqrt(20)"), q("2*sqrt(5)"));
        assert_eq!(q("sqrt(9)"), q("3"));
        assert_eq!(q("1+sqrt(1)"), q("2"));
        assert_eq!(FieldContext::new(12).radicand(), 3);
        assert_eq!(FieldContext::new(12).sqrt(), q("2*sqrt(3)"));
        assert!(FieldContext::new(1).is_rational());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Quadratic::phi().to_string(), "1/2+1/2*sqrt(5)");
        assert_eq!((Quadratic::phi() - Quadratic::one()).to_string(), "-1/2+1/2*sqrt(5)");
        assert_eq!(q("-sqrt(5)").to_string(), "-sqrt(5)");
        assert_eq!(q("3/2-1/2*sqrt(5)").to_string(), "3/2-1/2*sqrt(5)");
        assert_eq!(q("-7/3").to_string(), "-7/3");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("1/0".parse::<Quadratic>(), Err(ScalarError::Parse(_, m)) if m.contains("division by zero")));
        assert!("sqrt(5".parse::<Quadratic>().is_err());
        assert!("abc".parse::<Quadratic>().is_err());
        assert!("".parse::<Quadratic>().is_err());
    }

    #[test]
    #[should_panic(expected = "mixed radicals")]
    fn mixed_radicals_panic() {
        let _ = q("sqrt(2)") + q("sqrt(3)");
    }
}
