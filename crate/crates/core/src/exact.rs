//! Exact logarithms of positive rationals and dyadic helpers.
//!
//! No floating point: `⌈log2 q⌉` and `⌊log2 q⌋` are found from bit lengths
//! and then corrected with exact comparisons against powers of two.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

/// `2^e` for any integer `e`.
pub fn pow2(e: i64) -> Rational {
    let mag = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new(BigInt::one(), mag)
    }
}

/// `num / 2^exp`.
pub fn dyadic(num: u128, exp: u32) -> Rational {
    Rational::new(BigInt::from(num), BigInt::one() << exp)
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn bit_len(n: &BigInt) -> i64 {
    n.magnitude().bits() as i64
}

/// `⌊log2 q⌋` for `q > 0`.
pub fn floor_log2(q: &Rational) -> i64 {
    assert!(q.is_positive(), "log of non-positive rational {q}");
    // 2^(bn-1) <= n < 2^bn, same for d, so log2 q lies in (bn-bd-1, bn-bd+1).
    let mut k = bit_len(q.numer()) - bit_len(q.denom());
    while pow2(k) > *q {
        k -= 1;
    }
    while pow2(k + 1) <= *q {
        k += 1;
    }
    k
}

/// `⌈log2 q⌉` for `q > 0`.
pub fn ceil_log2(q: &Rational) -> i64 {
    let f = floor_log2(q);
    if pow2(f) == *q {
        f
    } else {
        f + 1
    }
}

/// `⌈−log2 q⌉` for `q > 0`: the code length of a probability.
pub fn code_length(q: &Rational) -> i64 {
    -floor_log2(q)
}

pub fn sum<'a, I: IntoIterator<Item = &'a Rational>>(it: I) -> Rational {
    it.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

/// Render as `num/den` (or `num` when integral).
pub fn show(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn is_power_of_two(n: &BigUint) -> bool {
    !n.is_zero() && n.count_ones() == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two_are_exact() {
        for e in -70..70 {
            let q = pow2(e);
            assert_eq!(floor_log2(&q), e);
            assert_eq!(ceil_log2(&q), e);
            assert_eq!(code_length(&q), -e);
        }
    }

    #[test]
    fn between_powers() {
        assert_eq!(floor_log2(&ratio(3, 1)), 1);
        assert_eq!(ceil_log2(&ratio(3, 1)), 2);
        assert_eq!(floor_log2(&ratio(1, 3)), -2);
        assert_eq!(ceil_log2(&ratio(1, 3)), -1);
        // ⌈−log2(3/8)⌉ = ⌈1.415⌉ = 2
        assert_eq!(code_length(&ratio(3, 8)), 2);
        assert_eq!(code_length(&ratio(1, 4)), 2);
        assert_eq!(code_length(&ratio(5, 16)), 2);
    }

    #[test]
    fn brute_force_agreement() {
        // Compare against a direct search over exponents.
        for n in 1..60i64 {
            for d in 1..60i64 {
                let q = ratio(n, d);
                let f = (-20..20).filter(|&k| pow2(k) <= q).max().unwrap();
                let c = (-20..20).filter(|&k| pow2(k) >= q).min().unwrap();
                assert_eq!(floor_log2(&q), f, "{n}/{d}");
                assert_eq!(ceil_log2(&q), c, "{n}/{d}");
            }
        }
    }

    #[test]
    fn dyadic_values() {
        assert_eq!(dyadic(3, 2), ratio(3, 4));
        assert_eq!(show(&ratio(6, 4)), "3/2");
        assert_eq!(show(&int(2)), "2");
    }
}
