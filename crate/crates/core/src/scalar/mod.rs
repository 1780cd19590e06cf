//! Exact scalars: the numeric substrate of every coordinate in a run.
//!
//! Two implementations are provided: plain rationals ([`Rational`]) and
//! elements of a real quadratic extension `a + b·√d` ([`Quadratic`]). All
//! geometry in this crate is generic over [`ExactScalar`]; there is no
//! floating-point path except [`ExactScalar::to_f64`], used for rendering.

mod arith;
mod quadratic;

pub use arith::{euclid_trace, floor, floor_div_mod, is_commensurate, rational_gcd, EuclidStep};
pub use quadratic::{FieldContext, Quadratic};

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number in canonical form.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("values are incommensurate: {0} / {1} is irrational")]
    Incommensurate(String, String),
    #[error("expected a positive value, got {0}")]
    NotPositive(String),
    #[error("mixed radicals: sqrt({0}) and sqrt({1}) in one field")]
    MixedRadicals(u64, u64),
    #[error("value {0} is not representable in this scalar type")]
    NotRepresentable(String),
    #[error("cannot parse scalar `{0}`: {1}")]
    Parse(String, String),
}

/// An exactly represented, totally ordered real number field element.
///
/// Equality is structural and coincides with equality of values, so
/// scalars may be used as map keys and compared with `==` at zero
/// tolerance.
pub trait ExactScalar:
    Clone
    + Eq
    + Ord
    + Hash
    + Debug
    + Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + Send
    + Sync
    + 'static
{
    fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError>;

    fn from_rational(r: Rational) -> Self;

    /// The value as a rational, if its irrational part is zero.
    fn to_rational(&self) -> Option<Rational>;

    fn to_quadratic(&self) -> Quadratic;

    fn from_quadratic(q: &Quadratic) -> Result<Self, ScalarError>;

    /// Square-free radicand of the irrational part, 0 for rationals.
    fn radicand(&self) -> u64;

    /// Lossy conversion, for display only.
    fn to_f64(&self) -> f64;

    fn sign(&self) -> i8 {
        match self.cmp(&Self::zero()) {
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Greater => 1,
        }
    }

    fn is_positive_value(&self) -> bool {
        self.sign() > 0
    }

    fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn from_bigint(n: BigInt) -> Self {
        Self::from_rational(Rational::from_integer(n))
    }

    fn is_rational_value(&self) -> bool {
        self.radicand() == 0
    }

    fn abs_value(&self) -> Self {
        if self.sign() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl ExactScalar for Rational {
    fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError> {
        if rhs.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(self / rhs)
    }

    fn from_rational(r: Rational) -> Self {
        r
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn to_quadratic(&self) -> Quadratic {
        Quadratic::from_rational(self.clone())
    }

    fn from_quadratic(q: &Quadratic) -> Result<Self, ScalarError> {
        q.rational_value().ok_or_else(|| ScalarError::NotRepresentable(q.to_string()))
    }

    fn radicand(&self) -> u64 {
        0
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn sign(&self) -> i8 {
        if self.is_zero() {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        }
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(r) {
        if v.is_finite() {
            return v;
        }
    }
    // Huge numerator and denominator: scale both down by the same power of two.
    let (n, d) = (r.numer(), r.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Parse a scalar written as `p`, `p/q`, or `a+b*sqrt(d)`.
pub fn parse_scalar<S: ExactScalar>(text: &str) -> Result<S, ScalarError> {
    let q: Quadratic = text.parse()?;
    S::from_quadratic(&q)
}
