//! Exact rational views of user-supplied decimal parameters.
//!
//! A parameter such as `0.7` is stored as the nearest `f64`, whose shortest
//! round-trip decimal is again `0.7`. Parsing that decimal recovers the value
//! the user wrote, so threshold comparisons (`2α = β`, `⌈γ n⌉`) can be
//! decided exactly.

use num_rational::Ratio;

pub(crate) type Rational = Ratio<i128>;

/// More digits than this and the decimal is treated as inexact.
const MAX_DIGITS: usize = 30;

pub(crate) fn decimal(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x}");
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let digits = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    if digits.len() > MAX_DIGITS || frac_part.len() > MAX_DIGITS {
        return None;
    }
    let numer: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10i128.checked_pow(frac_part.len() as u32)?;
    let numer = if negative { -numer } else { numer };
    Some(Ratio::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_written_decimals() {
        assert_eq!(decimal(0.7), Some(Ratio::new(7, 10)));
        assert_eq!(decimal(-0.375), Some(Ratio::new(-3, 8)));
        assert_eq!(decimal(1.0), Some(Ratio::from_integer(1)));
        assert_eq!(decimal(0.0), Some(Ratio::from_integer(0)));
        assert_eq!(decimal(f64::NAN), None);
        assert_eq!(decimal(1e-40), None);
        // 0.7 - 0.3 is not 0.4 in binary, but it is in decimal.
        assert_ne!(0.7 - 0.3, 0.4);
        assert_eq!(
            decimal(0.7).unwrap() - decimal(0.3).unwrap(),
            decimal(0.4).unwrap()
        );
    }
}
