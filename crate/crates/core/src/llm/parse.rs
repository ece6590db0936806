use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

fn pair_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"[\[(]\s*(-?\d+)\s*,\s*(-?\d+)\s*[\])]").expect("valid pattern"))
}

fn saturating_int(digits: &str) -> i64 {
    digits
        .parse::<i64>()
        .unwrap_or(if digits.starts_with('-') { i64::MIN } else { i64::MAX })
}

/// Every bracketed or parenthesized integer pair in document order. Prose
/// around the pairs is ignored; the pairs are not checked against a grid.
pub fn parse_trajectory(raw: &str) -> Result<Vec<(i64, i64)>> {
    let pairs: Vec<(i64, i64)> = pair_pattern()
        .captures_iter(raw)
        .map(|c| (saturating_int(&c[1]), saturating_int(&c[2])))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyOutput);
    }
    Ok(pairs)
}
