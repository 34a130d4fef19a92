//! Text formatting shared by the CSV and report writers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::ball::Ball;

/// Fixed-point decimal with `frac_digits` digits after the point, rounded to
/// nearest.
pub fn decimal(x: &BigRational, frac_digits: usize) -> String {
    let scale = BigInt::from(10).pow(frac_digits as u32);
    let scaled = x.abs() * BigRational::from_integer(scale.clone());
    let rounded = (scaled + BigRational::new(1.into(), 2.into())).floor().to_integer();
    let (ip, fp) = rounded.div_rem(&scale);
    let sign = if x.is_negative() && !rounded.is_zero() { "-" } else { "" };
    if frac_digits == 0 {
        return format!("{sign}{ip}");
    }
    format!("{sign}{ip}.{:0>width$}", fp.to_string(), width = frac_digits)
}

pub fn decimal_ball(x: &Ball, frac_digits: usize) -> String {
    decimal(&x.mid_rational(), frac_digits)
}

pub fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Shortest round-trip formatting for floats in CSV cells.
pub fn float(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    #[test]
    fn decimals() {
        assert_eq!(decimal(&(q(1) / q(3)), 5), "0.33333");
        assert_eq!(decimal(&(q(-2) / q(3)), 3), "-0.667");
        assert_eq!(decimal(&q(7), 2), "7.00");
        assert_eq!(decimal(&(q(-1) / q(1000)), 2), "0.00");
    }
}
