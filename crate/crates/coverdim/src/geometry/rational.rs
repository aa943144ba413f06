//! Exact rational scalars used by all geometric predicates.
//!
//! General position is measure-zero fragile: floating-point rank tests give
//! false verdicts arbitrarily close to degeneracy. Every predicate in this
//! crate therefore runs over `BigRational`. Floats are converted *exactly*
//! (every finite f64 is a dyadic rational); decimal strings can be converted
//! exactly in base ten instead via [`q_from_decimal`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

/// Exact conversion of a finite f64 into a rational.
///
/// Panics on NaN/infinity; callers validate their inputs first.
pub fn q_from_f64(x: f64) -> Q {
    BigRational::from_f64(x).expect("finite float required")
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().expect("rational out of f64 range")
}

pub fn q_int(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn q_ratio(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parse a decimal literal (`"-1.25"`, `"3"`, `"0.001"`) or a fraction
/// (`"2/3"`) into an exact rational.
pub fn q_from_decimal(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|e| format!("bad numerator: {e}"))?;
        let d: BigInt = den.trim().parse().map_err(|e| format!("bad denominator: {e}"))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(BigRational::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("empty numeric literal {s:?}"));
    }
    let digits = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part);
    let n: BigInt = digits.parse().map_err(|e| format!("bad digits in {s:?}: {e}"))?;
    let d = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(n * sign, d))
}

/// Sup-norm of a rational vector difference.
pub fn q_sup_distance(a: &[Q], b: &[Q]) -> Q {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .max()
        .unwrap_or_else(Q::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parse_is_exact() {
        assert_eq!(q_from_decimal("0.1").unwrap(), q_ratio(1, 10));
        assert_eq!(q_from_decimal("-1.25").unwrap(), q_ratio(-5, 4));
        assert_eq!(q_from_decimal("3").unwrap(), q_int(3));
        assert_eq!(q_from_decimal("2/3").unwrap(), q_ratio(2, 3));
        assert!(q_from_decimal("").is_err());
        assert!(q_from_decimal("1/0").is_err());
    }

    #[test]
    fn f64_conversion_roundtrips() {
        for &x in &[0.0, 1.0, -0.5, 0.1, 123.456] {
            assert_eq!(q_to_f64(&q_from_f64(x)), x);
        }
    }
}
