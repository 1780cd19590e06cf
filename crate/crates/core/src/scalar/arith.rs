use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ExactScalar, ScalarError};

/// Largest integer `n` with `n ≤ x`, bracketed by exponential then binary
/// search on exact comparisons.
pub fn floor<S: ExactScalar>(x: &S) -> BigInt {
    let le = |n: &BigInt| S::from_bigint(n.clone()) <= *x;
    let two = BigInt::from(2);
    let (mut lo, mut hi) = if x.sign() >= 0 {
        let mut hi = BigInt::one();
        while le(&hi) {
            hi = &hi * &two;
        }
        (BigInt::zero(), hi)
    } else {
        let mut lo = -BigInt::one();
        while !le(&lo) {
            lo = &lo * &two;
        }
        let hi = &lo / &two + BigInt::one();
        (lo, hi)
    };
    // lo ≤ x < hi
    while &hi - &lo > BigInt::one() {
        let mid = (&lo + &hi).div_floor(&two);
        if le(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Euclidean division of reals: `a = b·n + r` with `0 ≤ r < b`.
pub fn floor_div_mod<S: ExactScalar>(a: &S, b: &S) -> Result<(BigInt, S), ScalarError> {
    if b.sign() <= 0 {
        return Err(ScalarError::NotPositive(b.to_string()));
    }
    let n = floor(&a.checked_div(b)?);
    let r = a.clone() - b.clone() * S::from_bigint(n.clone());
    Ok((n, r))
}

/// Whether `x / y` is rational.
pub fn is_commensurate<S: ExactScalar>(x: &S, y: &S) -> Result<bool, ScalarError> {
    Ok(x.checked_div(y)?.to_rational().is_some())
}

/// Greatest positive real dividing both `x` and `y` with integer quotients.
pub fn rational_gcd<S: ExactScalar>(x: &S, y: &S) -> Result<S, ScalarError> {
    for v in [x, y] {
        if v.sign() <= 0 {
            return Err(ScalarError::NotPositive(v.to_string()));
        }
    }
    let ratio =
        x.checked_div(y)?.to_rational().ok_or_else(|| ScalarError::Incommensurate(x.to_string(), y.to_string()))?;
    // x / y = m / n in lowest terms, so x = g·m and y = g·n
    let m = S::from_bigint(ratio.numer().clone());
    x.checked_div(&m)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EuclidStep<S> {
    pub a: S,
    pub b: S,
    pub quotient: BigInt,
    pub remainder: S,
}

/// Reference Euclid recursion `a' = b`, `b' = a mod b`.
///
/// Stops after the first zero remainder or after `max_steps` steps.
pub fn euclid_trace<S: ExactScalar>(a: &S, b: &S, max_steps: usize) -> Result<Vec<EuclidStep<S>>, ScalarError> {
    if a.sign() <= 0 {
        return Err(ScalarError::NotPositive(a.to_string()));
    }
    let mut steps = Vec::new();
    let (mut a, mut b) = (a.clone(), b.clone());
    while steps.len() < max_steps {
        let (quotient, remainder) = floor_div_mod(&a, &b)?;
        let done = remainder.is_zero();
        steps.push(EuclidStep { a: a.clone(), b: b.clone(), quotient, remainder: remainder.clone() });
        if done {
            break;
        }
        a = std::mem::replace(&mut b, remainder);
    }
    Ok(steps)
}

/// Integer gcd of the numerators, for tests on rational quotients.
#[allow(dead_code)]
pub(crate) fn bigint_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    a.abs().gcd(&b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Quadratic, Rational};

    fn q(s: &str) -> Quadratic {
        s.parse().unwrap()
    }

    #[test]
    fn floor_brackets_both_signs() {
        assert_eq!(floor(&q("7/2")), BigInt::from(3));
        assert_eq!(floor(&q("-7/2")), BigInt::from(-4));
        assert_eq!(floor(&q("-3")), BigInt::from(-3));
        assert_eq!(floor(&q("0")), BigInt::from(0));
        assert_eq!(floor(&Quadratic::phi()), BigInt::from(1));
        assert_eq!(floor(&(-Quadratic::phi())), BigInt::from(-2));
        assert_eq!(floor(&q("1000000+sqrt(2)")), BigInt::from(1_000_001));
    }

    #[test]
    fn division_with_remainder() {
        assert_eq!(floor_div_mod(&q("11"), &q("3")).unwrap(), (BigInt::from(3), q("2")));
        assert_eq!(floor_div_mod(&q("6"), &q("3")).unwrap(), (BigInt::from(2), q("0")));
        let phi = Quadratic::phi();
        assert_eq!(floor_div_mod(&phi, &Quadratic::one()).unwrap(), (BigInt::from(1), phi.clone() - Quadratic::one()));
        assert!(floor_div_mod(&q("1"), &q("0")).is_err());
        assert!(floor_div_mod(&q("1"), &q("-2")).is_err());
    }

    #[test]
    fn commensurability() {
        assert!(is_commensurate(&q("3/2"), &q("1/2")).unwrap());
        assert!(!is_commensurate(&Quadratic::phi(), &q("1")).unwrap());
        let phi = Quadratic::phi();
        assert!(is_commensurate(&(phi.clone() + &phi), &phi).unwrap());
        assert!(is_commensurate(&q("1"), &q("0")).is_err());
    }

    #[test]
    fn gcd_of_reals() {
        assert_eq!(rational_gcd(&q("8"), &q("3")).unwrap(), q("1"));
        assert_eq!(rational_gcd(&q("3/2"), &q("1/2")).unwrap(), q("1/2"));
        assert_eq!(rational_gcd(&q("5/7"), &q("5/7")).unwrap(), q("5/7"));
        let phi = Quadratic::phi();
        assert_eq!(rational_gcd(&(phi.clone() * q("4")), &(phi.clone() * q("6"))).unwrap(), phi.clone() * q("2"));
        assert!(matches!(rational_gcd(&phi, &q("1")), Err(ScalarError::Incommensurate(..))));
        assert!(rational_gcd(&q("0"), &q("1")).is_err());
    }

    #[test]
    fn gcd_matches_integer_formula() {
        // gcd(p1/q1, p2/q2) = gcd(p1·q2, p2·q1) / (q1·q2)
        for (p1, q1, p2, q2) in [(3i64, 2i64, 1i64, 2i64), (4, 9, 10, 3), (7, 5, 21, 10)] {
            let expected =
                Rational::new(bigint_gcd(&BigInt::from(p1 * q2), &BigInt::from(p2 * q1)), BigInt::from(q1 * q2));
            let got = rational_gcd(&Rational::new(p1.into(), q1.into()), &Rational::new(p2.into(), q2.into()));
            assert_eq!(got.unwrap(), expected);
        }
    }

    #[test]
    fn euclid_traces() {
        let t = euclid_trace(&q("8"), &q("3"), 100).unwrap();
        let rems: Vec<_> = t.iter().map(|s| s.remainder.clone()).collect();
        assert_eq!(rems, vec![q("2"), q("1"), q("0")]);
        assert_eq!(t.last().unwrap().b, q("1"));

        let t = euclid_trace(&q("4"), &q("2"), 100).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].b, q("2"));

        let phi = Quadratic::phi();
        let t = euclid_trace(&phi, &Quadratic::one(), 30).unwrap();
        assert_eq!(t.len(), 30);
        assert!(t.iter().all(|s| s.quotient == BigInt::one()));
        assert_eq!(t[0].remainder, phi.clone() - Quadratic::one());
        assert_eq!(t[1].remainder, q("2") - phi);
    }
}
