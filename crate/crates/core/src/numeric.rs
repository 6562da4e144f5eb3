//! Scalar abstraction shared by the floating-point and exact-rational code paths.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

/// Comparison slack used by every floating-point odds and probability test.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// A probability-valued scalar: either `f64` or an exact `BigRational`.
pub trait Probability: Num + Clone + PartialOrd + Debug {
    /// `self >= 1`, up to [`FLOAT_TOLERANCE`] for floats and exactly for rationals.
    fn reaches_one(&self) -> bool;

    /// `|self - 1|` is within tolerance (exact for rationals).
    fn near_one(&self) -> bool;

    fn to_f64(&self) -> f64;

    /// Equality up to [`FLOAT_TOLERANCE`] for floats, exact for rationals.
    fn approx_eq(&self, other: &Self) -> bool;

    /// `n / d` in this representation.
    fn ratio(n: i64, d: i64) -> Self;

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn one_minus(&self) -> Self {
        Self::one() - self.clone()
    }
}

impl Probability for f64 {
    fn reaches_one(&self) -> bool {
        *self >= 1.0 - FLOAT_TOLERANCE
    }

    fn near_one(&self) -> bool {
        (*self - 1.0).abs() <= FLOAT_TOLERANCE
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }

    fn ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
}

impl Probability for BigRational {
    fn reaches_one(&self) -> bool {
        *self >= BigRational::one()
    }

    fn near_one(&self) -> bool {
        One::is_one(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn ratio(n: i64, d: i64) -> Self {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
}

/// Exact rational image of a finite float (every finite `f64` is dyadic).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Convert a discrete probability vector to rationals whose sum is exactly one.
///
/// All but the last entry are converted exactly; the last one absorbs the
/// rounding residue. Returns `None` if the residue is not a valid probability.
pub fn exact_probabilities(probs: &[f64]) -> Option<Vec<BigRational>> {
    let (last, head) = probs.split_last()?;
    let mut out = Vec::with_capacity(probs.len());
    let mut acc = BigRational::zero();
    for &p in head {
        let r = rational_from_f64(p)?;
        acc += &r;
        out.push(r);
    }
    let residue = BigRational::one() - acc;
    if residue <= BigRational::zero() || (ToPrimitive::to_f64(&residue).unwrap_or(f64::NAN) - last).abs() > 1e-9 {
        return None;
    }
    out.push(residue);
    Some(out)
}
