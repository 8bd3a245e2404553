use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{Float, Signed, ToPrimitive, Zero};

/// Scalar type carried by the atoms of a [`Measure`](super::Measure).
///
/// `f64` is the working type. [`Dyadic`] is an exact alternative: every
/// finite `f64` is a dyadic rational, and sums and products of dyadic
/// rationals stay dyadic, so convolution over `Dyadic` weights is exact.
pub trait Weight: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(n: u64) -> Self;
    fn is_zero(&self) -> bool;
    fn mul(&self, other: &Self) -> Self {
        let mut acc = Self::zero();
        self.mul_add_to(other, &mut acc);
        acc
    }
    /// `acc += self * other`
    fn mul_add_to(&self, other: &Self, acc: &mut Self);
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// True when `|self| < tol`.
    fn below(&self, tol: f64) -> bool;
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn mul_add_to(&self, other: &Self, acc: &mut Self) {
        *acc += self * other;
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn below(&self, tol: f64) -> bool {
        f64::abs(*self) < tol
    }
}

/// Exact dyadic rational `mantissa * 2^exponent`.
///
/// Canonical form: the mantissa is odd, or the value is zero with
/// exponent 0. Equality is therefore structural.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        let mut d = Dyadic { mantissa, exponent };
        d.normalize();
        d
    }

    /// Exact conversion; panics on NaN or infinity.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "Dyadic::from_f64 on non-finite value");
        if x == 0.0 {
            return Self::zero();
        }
        let (mant, exp, sign) = Float::integer_decode(x);
        let m = BigInt::from(mant) * i32::from(sign);
        Dyadic::new(m, i64::from(exp))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exponent += tz as i64;
        }
    }

    fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
        match a.exponent.cmp(&b.exponent) {
            Ordering::Equal => (a.mantissa.clone(), b.mantissa.clone(), a.exponent),
            Ordering::Greater => {
                let shift = (a.exponent - b.exponent) as usize;
                (&a.mantissa << shift, b.mantissa.clone(), b.exponent)
            }
            Ordering::Less => {
                let shift = (b.exponent - a.exponent) as usize;
                (a.mantissa.clone(), &b.mantissa << shift, a.exponent)
            }
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

/// Multiply by `2^e` without intermediate overflow.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl Weight for Dyadic {
    fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }
    fn one() -> Self {
        Dyadic {
            mantissa: BigInt::from(1),
            exponent: 0,
        }
    }
    fn from_u64(n: u64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }
    fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }
    fn mul_add_to(&self, other: &Self, acc: &mut Self) {
        if self.is_zero() || other.is_zero() {
            return;
        }
        let prod = Dyadic {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: self.exponent + other.exponent,
        };
        *acc = acc.add(&prod);
    }
    fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b, e) = Dyadic::aligned(self, other);
        Dyadic::new(a + b, e)
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn neg(&self) -> Self {
        Dyadic {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }
    fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }
    /// Correctly rounded (round-to-nearest) conversion.
    fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        let (m, e) = if bits > 100 {
            let shift = (bits - 100) as usize;
            let mag = self.mantissa.magnitude();
            let mut top = mag >> shift;
            // sticky bit keeps round-to-nearest correct
            if (mag.trailing_zeros().unwrap_or(0) as usize) < shift {
                top |= num_bigint::BigUint::from(1u8);
            }
            let signed = BigInt::from_biguint(self.mantissa.sign(), top);
            (signed, self.exponent + shift as i64)
        } else {
            (self.mantissa.clone(), self.exponent)
        };
        let base = m.to_f64().unwrap_or(match m.sign() {
            Sign::Minus => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        });
        ldexp(base, e)
    }
    fn below(&self, tol: f64) -> bool {
        self.to_f64().abs() < tol
    }
}
