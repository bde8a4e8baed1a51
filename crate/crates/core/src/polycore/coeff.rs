use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact Gaussian rational `a + b i` with `a, b ∈ Q`.
pub type GaussianRational = Complex<BigRational>;

/// Coefficient field for [`Polynomial`](super::Polynomial).
///
/// Two backends exist: `Complex64` for everything analytic and
/// [`GaussianRational`] for exact certification.
pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Builds `re + im·i` from exact rational parts.
    fn from_parts(re: &BigRational, im: &BigRational) -> Self;

    fn from_i64(v: i64) -> Self {
        let r = BigRational::from_integer(BigInt::from(v));
        Self::from_parts(&r, &BigRational::zero())
    }

    fn to_c64(&self) -> Complex64;

    /// A literal in the polynomial grammar that parses back to `self`.
    fn literal(&self) -> String;

    /// True when the backend is exact.
    fn is_exact() -> bool;
}

impl Coeff for Complex64 {
    fn from_parts(re: &BigRational, im: &BigRational) -> Self {
        Complex64::new(rational_to_f64(re), rational_to_f64(im))
    }

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn literal(&self) -> String {
        let re = if self.re == 0.0 { 0.0 } else { self.re };
        let im = if self.im == 0.0 { 0.0 } else { self.im };
        match (re == 0.0, im == 0.0) {
            (_, true) => format!("({re:?})"),
            (true, false) => format!("({im:?}i)"),
            (false, false) if im < 0.0 => format!("({re:?}-{:?}i)", -im),
            (false, false) => format!("({re:?}+{im:?}i)"),
        }
    }

    fn is_exact() -> bool {
        false
    }
}

impl Coeff for GaussianRational {
    fn from_parts(re: &BigRational, im: &BigRational) -> Self {
        Complex::new(re.clone(), im.clone())
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    fn literal(&self) -> String {
        let re = rational_literal(&self.re);
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => format!("({re})"),
            (true, false) => format!("({}i)", rational_literal(&self.im)),
            (false, false) if self.im.is_negative() => {
                format!("({re}-{}i)", rational_literal(&-self.im.clone()))
            }
            (false, false) => format!("({re}+{}i)", rational_literal(&self.im)),
        }
    }

    fn is_exact() -> bool {
        true
    }
}

fn rational_literal(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact Gaussian rational from an `f64` pair. Every finite double is a dyadic
/// rational, so the conversion is lossless.
pub fn gaussian_from_c64(z: Complex64) -> Option<GaussianRational> {
    Some(Complex::new(
        BigRational::from_float(z.re)?,
        BigRational::from_float(z.im)?,
    ))
}

/// Best rational approximation with denominator at most `max_den`
/// (continued-fraction convergents).
pub fn rationalize(x: f64, max_den: u64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let a_int = a as u128;
        let p2 = a_int.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a_int.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den as u128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    let r = BigRational::new(BigInt::from(p1), BigInt::from(q1));
    Some(if neg { -r } else { r })
}

pub fn rationalize_c64(z: Complex64, max_den: u64) -> Option<GaussianRational> {
    Some(Complex::new(
        rationalize(z.re, max_den)?,
        rationalize(z.im, max_den)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_literals() {
        assert_eq!(Complex64::new(1.5, 0.0).literal(), "(1.5)");
        assert_eq!(Complex64::new(0.0, -2.0).literal(), "(-2.0i)");
        assert_eq!(Complex64::new(1.0, -2.0).literal(), "(1.0-2.0i)");
        assert_eq!(Complex64::new(-0.0, 0.0).literal(), "(0.0)");
    }

    #[test]
    fn exact_literals() {
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(GaussianRational::new(q(3, 4), q(0, 1)).literal(), "(3/4)");
        assert_eq!(
            GaussianRational::new(q(-1, 2), q(-5, 1)).literal(),
            "(-1/2-5i)"
        );
    }

    #[test]
    fn rationalize_recovers_small_fractions() {
        let r = rationalize(-0.375, 1000).unwrap();
        assert_eq!(r, BigRational::new((-3).into(), 8.into()));
        let r = rationalize(1.0 / 3.0, 1000).unwrap();
        assert_eq!(r, BigRational::new(1.into(), 3.into()));
    }
}
