//! Nonnegative reals stored by their natural logarithm.
//!
//! Frequencies such as `2^(n^n)` leave the native range after a handful of
//! terms, so every sequence quantity is carried as a `LogReal`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Zero,
}

/// A value `exp(log_magnitude)` or exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LogReal<T> {
    sign: Sign,
    log_magnitude: T,
}

impl<T: Real> LogReal<T> {
    pub fn zero() -> Self {
        LogReal {
            sign: Sign::Zero,
            log_magnitude: T::neg_infinity(),
        }
    }

    pub fn one() -> Self {
        Self::from_log(T::zero())
    }

    /// Builds from a natural logarithm; `-inf` maps to zero.
    pub fn from_log(log_magnitude: T) -> Self {
        debug_assert!(!log_magnitude.is_nan());
        if log_magnitude == T::neg_infinity() {
            Self::zero()
        } else {
            LogReal {
                sign: Sign::Positive,
                log_magnitude,
            }
        }
    }

    /// Builds from a native value; negative input is rejected with `None`.
    pub fn from_value(x: T) -> Option<Self> {
        if x < T::zero() || x.is_nan() {
            None
        } else if x == T::zero() {
            Some(Self::zero())
        } else {
            Some(Self::from_log(x.ln()))
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    /// Natural log; `-inf` for zero.
    pub fn ln(&self) -> T {
        self.log_magnitude
    }

    /// `max(ln, 0)`.
    pub fn ln_plus(&self) -> T {
        self.log_magnitude.max(T::zero())
    }

    /// Native value; overflows to `+inf` when out of range.
    pub fn value(&self) -> T {
        match self.sign {
            Sign::Zero => T::zero(),
            Sign::Positive => self.log_magnitude.exp(),
        }
    }

    /// `log(x) + log1p(exp(log(y) - log(x)))` with the larger operand first.
    pub fn log_add(self, other: Self) -> Self {
        match (self.sign, other.sign) {
            (Sign::Zero, _) => other,
            (_, Sign::Zero) => self,
            _ => {
                let (hi, lo) = if self.log_magnitude >= other.log_magnitude {
                    (self.log_magnitude, other.log_magnitude)
                } else {
                    (other.log_magnitude, self.log_magnitude)
                };
                Self::from_log(hi + (lo - hi).exp().ln_1p())
            }
        }
    }

    pub fn powf(self, e: T) -> Self {
        match self.sign {
            Sign::Zero => {
                if e == T::zero() {
                    Self::one()
                } else {
                    Self::zero()
                }
            }
            Sign::Positive => Self::from_log(self.log_magnitude * e),
        }
    }
}

/// Log-sum-exp over an iterator of logs, with a single rescaled accumulator.
pub fn log_sum_exp<T: Real, I: IntoIterator<Item = T>>(logs: I) -> T {
    let mut max = T::neg_infinity();
    let mut acc = T::zero();
    for l in logs {
        if l == T::neg_infinity() {
            continue;
        }
        if l > max {
            acc = acc * (max - l).exp() + T::one();
            max = l;
        } else {
            acc += (l - max).exp();
        }
    }
    if max == T::neg_infinity() {
        max
    } else {
        max + acc.ln()
    }
}

impl<T: Real> Add for LogReal<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.log_add(rhs)
    }
}

impl<T: Real> Mul for LogReal<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            Self::zero()
        } else {
            Self::from_log(self.log_magnitude + rhs.log_magnitude)
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)] // quotients subtract logs
impl<T: Real> Div for LogReal<T> {
    type Output = Self;
    /// Division by zero yields `+inf` in the log (an infinite value).
    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            Self::zero()
        } else if rhs.is_zero() {
            Self::from_log(T::infinity())
        } else {
            Self::from_log(self.log_magnitude - rhs.log_magnitude)
        }
    }
}

impl<T: Real> PartialOrd for LogReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.log_magnitude.partial_cmp(&other.log_magnitude)
    }
}

impl<T: Real> fmt::Display for LogReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Positive => write!(f, "exp({})", self.log_magnitude),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_uses_sentinel() {
        let z = LogReal::<f64>::zero();
        assert!(z.is_zero());
        assert_eq!(z.ln(), f64::NEG_INFINITY);
        assert_eq!(LogReal::from_value(0.0f64).unwrap(), z);
        assert!(LogReal::from_value(-1.0f64).is_none());
    }

    #[test]
    fn large_magnitudes_do_not_overflow() {
        // log(e^1234 + e^1232) = 1232 + log(e^2 + 1)
        let s = LogReal::from_log(1234.0f64) + LogReal::from_log(1232.0);
        assert!((s.ln() - (1232.0 + (2f64.exp() + 1.0).ln())).abs() < 1e-12);
        assert!((log_sum_exp([1234.0f64, 1232.0]) - s.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_is_additive_identity() {
        let x = LogReal::from_value(3.5f64).unwrap();
        assert_eq!(x + LogReal::zero(), x);
        assert_eq!(LogReal::zero() + x, x);
        assert!((x * LogReal::zero()).is_zero());
    }

    #[test]
    fn f32_path() {
        let s = LogReal::from_value(2.0f32).unwrap() + LogReal::from_value(6.0f32).unwrap();
        assert!((s.value() - 8.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn add_matches_native(a in 1e-30f64..1e30, b in 1e-30f64..1e30) {
            let s = LogReal::from_value(a).unwrap() + LogReal::from_value(b).unwrap();
            prop_assert!(((s.value() - (a + b)) / (a + b)).abs() < 1e-12);
        }

        #[test]
        fn streaming_matches_pairwise(xs in proptest::collection::vec(-50f64..50.0, 1..40)) {
            let pair = xs.iter().fold(LogReal::zero(), |acc, &l| acc + LogReal::from_log(l));
            prop_assert!((log_sum_exp(xs.iter().copied()) - pair.ln()).abs() < 1e-12);
        }
    }
}
