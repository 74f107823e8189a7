//! Scalar abstraction shared by the symbolic layer and the solver.
//!
//! Model coefficients are exact rationals ([`Rat`]) so that canonical
//! comparison, rescaling and ground-truth mappings stay exact. The solver
//! runs on any [`LpFloat`] (`f64` by default, `f32` works for small toys);
//! conversion happens once, at the model boundary.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Float, FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

/// Exact rational scalar used throughout the symbolic layer.
pub type Rat = num_rational::BigRational;

/// Minimal bound set for coefficients stored in a [`crate::instance::ConcreteModel`].
pub trait Scalar: Num + Clone + PartialOrd + Neg<Output = Self> + Debug {}
impl<T> Scalar for T where T: Num + Clone + PartialOrd + Neg<Output = T> + Debug {}

/// Floating scalar the simplex and branch-and-bound run on.
pub trait LpFloat:
    Scalar + Float + FromPrimitive + ToPrimitive + Sum + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from an exact rational.
    fn from_rat(r: &Rat) -> Self {
        Self::from_f64(rat_to_f64(r)).expect("rational out of float range")
    }
}
impl<T> LpFloat for T where
    T: Scalar + Float + FromPrimitive + ToPrimitive + Sum + Display + Send + Sync + 'static
{
}

/// Rational from a small integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational n/d. Panics on d = 0.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `f64` value of a rational (best double approximation).
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational equal to the given finite double.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Parse a plain decimal literal (`-12`, `3.25`, `1e-3`, `2.5E2`) into an
/// exact rational. Returns `None` on anything else.
pub fn parse_decimal(text: &str) -> Option<Rat> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    let (s, neg) = match s.strip_prefix('-') {
        Some(rest) => (rest, true),
        None => (s.strip_prefix('+').unwrap_or(s), false),
    };
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().ok()?;
            (&s[..pos], e)
        }
        None => (s, 0i64),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits: String = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = Rat::from_integer(num);
    if scale >= 0 {
        value *= Rat::from_integer(ten.pow(scale as u32));
    } else {
        value /= Rat::from_integer(ten.pow((-scale) as u32));
    }
    if neg {
        value = -value;
    }
    Some(value)
}

/// Render a rational as an exact decimal string when its reduced denominator
/// is of the form 2^a·5^b, e.g. `1/2 -> "0.5"`, `-3 -> "-3"`. Returns `None`
/// for denominators like 60 that have no finite decimal expansion.
pub fn to_decimal_string(r: &Rat) -> Option<String> {
    let mut den = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while den.is_multiple_of(&two) {
        den /= &two;
        twos += 1;
    }
    while den.is_multiple_of(&five) {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let digits = twos.max(fives);
    let scaled = r.numer() * BigInt::from(10).pow(digits) / r.denom();
    let (sign, mag) = (scaled.sign(), scaled.magnitude().to_string());
    let mut out = String::new();
    if sign == Sign::Minus {
        out.push('-');
    }
    if digits == 0 {
        out.push_str(&mag);
        return Some(out);
    }
    let mag = if mag.len() <= digits as usize {
        format!("{}{}", "0".repeat(digits as usize + 1 - mag.len()), mag)
    } else {
        mag
    };
    let split = mag.len() - digits as usize;
    let frac = mag[split..].trim_end_matches('0');
    if frac.is_empty() {
        out.push_str(&mag[..split]);
    } else {
        out.push_str(&format!("{}.{}", &mag[..split], frac));
    }
    Some(out)
}

/// Canonical text form of a rational: exact decimal when one exists,
/// otherwise `numer/denom`.
pub fn rat_display(r: &Rat) -> String {
    to_decimal_string(r).unwrap_or_else(|| format!("{}/{}", r.numer(), r.denom()))
}

/// Parse either form produced by [`rat_display`].
pub fn parse_rat(text: &str) -> Option<Rat> {
    if let Some((n, d)) = text.split_once('/') {
        let num: BigInt = n.trim().parse().ok()?;
        let den: BigInt = d.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rat::new(num, den));
    }
    parse_decimal(text)
}

/// True when the rational is within `tol` of the nearest integer.
pub fn is_near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parse_exact() {
        assert_eq!(parse_decimal("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_decimal("-12").unwrap(), rat_int(-12));
        assert_eq!(parse_decimal("3.25").unwrap(), rat(13, 4));
        assert_eq!(parse_decimal("1e3").unwrap(), rat_int(1000));
        assert_eq!(parse_decimal("2.5E-2").unwrap(), rat(1, 40));
        assert!(parse_decimal("1/2").is_none());
        assert!(parse_decimal("x").is_none());
    }

    #[test]
    fn decimal_render() {
        assert_eq!(to_decimal_string(&rat(1, 2)).unwrap(), "0.5");
        assert_eq!(to_decimal_string(&rat(-3, 1)).unwrap(), "-3");
        assert_eq!(to_decimal_string(&rat(1, 100)).unwrap(), "0.01");
        assert_eq!(to_decimal_string(&rat(123, 10)).unwrap(), "12.3");
        assert!(to_decimal_string(&rat(1, 60)).is_none());
        assert_eq!(rat_display(&rat(1, 60)), "1/60");
        assert_eq!(parse_rat("1/60").unwrap(), rat(1, 60));
        assert_eq!(parse_rat("0.5").unwrap(), rat(1, 2));
    }

    #[test]
    fn float_round_trip() {
        let r = rat_from_f64(0.75).unwrap();
        assert_eq!(r, rat(3, 4));
        assert_eq!(rat_to_f64(&r), 0.75);
    }
}
