//! Configuration and property values: `<REAL> <MEAS>` with range and
//! free-text fallbacks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The magnitude part of a [`Quantity`]. Exactly one form is populated.
#[derive(Debug, Clone, PartialEq)]
pub enum Magnitude {
    Scalar(f64),
    /// Inclusive range with `min <= max`.
    Range { min: f64, max: f64 },
    /// Non-numeric text such as `overnight`.
    Token(String),
}

/// A value with an optional measurement unit.
///
/// Units are free strings; two quantities with different unit spellings are
/// simply different values.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    magnitude: Magnitude,
    unit: String,
}

impl Quantity {
    pub fn scalar(value: f64, unit: impl Into<String>) -> Self {
        Self { magnitude: Magnitude::Scalar(value), unit: normalize_unit(&unit.into()) }
    }

    /// Returns `None` when `min > max` or either bound is not finite.
    pub fn range(min: f64, max: f64, unit: impl Into<String>) -> Option<Self> {
        (min.is_finite() && max.is_finite() && min <= max).then(|| Self {
            magnitude: Magnitude::Range { min, max },
            unit: normalize_unit(&unit.into()),
        })
    }

    pub fn token(text: impl Into<String>) -> Self {
        Self { magnitude: Magnitude::Token(normalize_unit(&text.into())), unit: String::new() }
    }

    pub fn magnitude(&self) -> &Magnitude {
        &self.magnitude
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn value(&self) -> Option<f64> {
        match self.magnitude {
            Magnitude::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn range_bounds(&self) -> Option<(f64, f64)> {
        match self.magnitude {
            Magnitude::Range { min, max } => Some((min, max)),
            _ => None,
        }
    }

    pub fn as_token(&self) -> Option<&str> {
        match &self.magnitude {
            Magnitude::Token(t) => Some(t),
            _ => None,
        }
    }

    /// A single number standing for the quantity: the scalar itself or the
    /// midpoint of a range.
    pub fn numeric(&self) -> Option<f64> {
        match self.magnitude {
            Magnitude::Scalar(v) => Some(v),
            Magnitude::Range { min, max } => Some(0.5 * (min + max)),
            Magnitude::Token(_) => None,
        }
    }
}

fn normalize_unit(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Scans a leading number: optional sign, digits with `,ddd` thousands
/// groups, optional fraction. Returns the value and the byte length consumed.
fn scan_number(s: &str) -> Option<(f64, usize)> {
    let b = s.as_bytes();
    let digit_at = |k: usize| b.get(k).is_some_and(u8::is_ascii_digit);
    let mut i = 0;
    let mut text = String::new();
    if matches!(b.first(), Some(b'-' | b'+')) {
        if b[0] == b'-' {
            text.push('-');
        }
        i = 1;
    }
    let int_start = i;
    while digit_at(i) {
        text.push(b[i] as char);
        i += 1;
    }
    let has_int = i > int_start;
    // thousands groups: a comma followed by exactly three digits
    while has_int && b.get(i) == Some(&b',') && (1..=3).all(|k| digit_at(i + k)) && !digit_at(i + 4) {
        text.push_str(&s[i + 1..i + 4]);
        i += 4;
    }
    let mut has_frac = false;
    if b.get(i) == Some(&b'.') && digit_at(i + 1) {
        text.push('.');
        i += 1;
        while digit_at(i) {
            text.push(b[i] as char);
            i += 1;
        }
        has_frac = true;
    }
    if !has_int && !has_frac {
        return None;
    }
    let v: f64 = text.parse().ok()?;
    v.is_finite().then_some((v, i))
}

const RANGE_SEPARATORS: [&str; 4] = ["-", "–", "—", "~"];

/// Parses configuration text such as `"15,000 x g"`, `"20-30 min"` or
/// `"overnight"`. Never fails: text without a numeric prefix becomes a token.
pub fn parse_quantity(text: &str) -> Quantity {
    let text = text.trim();
    let Some((first, used)) = scan_number(text) else {
        return Quantity::token(text);
    };
    let rest = &text[used..];
    let after_ws = rest.trim_start();
    for sep in RANGE_SEPARATORS {
        let Some(tail) = after_ws.strip_prefix(sep) else { continue };
        let tail = tail.trim_start();
        if let Some((second, used2)) = scan_number(tail) {
            if let Some(q) = Quantity::range(first, second, &tail[used2..]) {
                return q;
            }
        }
    }
    Quantity::scalar(first, rest)
}

fn fmt_number(v: f64) -> String {
    // `Display` for f64 is the shortest text that parses back to the same
    // value and never uses exponent notation.
    let s = format!("{v}");
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.magnitude {
            Magnitude::Token(t) => f.write_str(t),
            Magnitude::Scalar(v) => {
                f.write_str(&fmt_number(*v))?;
                if !self.unit.is_empty() {
                    write!(f, " {}", self.unit)?;
                }
                Ok(())
            }
            Magnitude::Range { min, max } => {
                write!(f, "{}-{}", fmt_number(*min), fmt_number(*max))?;
                if !self.unit.is_empty() {
                    write!(f, " {}", self.unit)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Quantity {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(parse_quantity(s))
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Text(s) => parse_quantity(&s),
            Raw::Number(v) => Quantity::scalar(v, ""),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thousands_separator() {
        let q = parse_quantity("15,000 x g");
        assert_eq!(q.value(), Some(15000.0));
        assert_eq!(q.unit(), "x g");
    }

    #[test]
    fn ranges() {
        let q = parse_quantity("20-30 min");
        assert_eq!(q.range_bounds(), Some((20.0, 30.0)));
        assert_eq!(q.unit(), "min");
        let q = parse_quantity("20 – 30 min");
        assert_eq!(q.range_bounds(), Some((20.0, 30.0)));
        // reversed bounds are not a range
        let q = parse_quantity("30-20 min");
        assert_eq!(q.value(), Some(30.0));
        assert_eq!(q.unit(), "-20 min");
    }

    #[test]
    fn token_fallback() {
        let q = parse_quantity("overnight");
        assert_eq!(q.as_token(), Some("overnight"));
        assert_eq!(q.unit(), "");
    }

    #[test]
    fn negative_and_decimal() {
        let q = parse_quantity("-80 °C");
        assert_eq!(q.value(), Some(-80.0));
        assert_eq!(q.unit(), "°C");
        let q = parse_quantity("0.5 mL");
        assert_eq!(q.value(), Some(0.5));
        let q = parse_quantity("4C");
        assert_eq!((q.value(), q.unit()), (Some(4.0), "C"));
    }

    #[test]
    fn display() {
        assert_eq!(parse_quantity("15,000 x g").to_string(), "15000 x g");
        assert_eq!(parse_quantity("20 - 30   min").to_string(), "20-30 min");
        assert_eq!(parse_quantity("7").to_string(), "7");
    }

    #[test]
    fn json_number_accepted() {
        let q: Quantity = serde_json::from_str("37").unwrap();
        assert_eq!(q.value(), Some(37.0));
        let q: Quantity = serde_json::from_str("\"37 °C\"").unwrap();
        assert_eq!(serde_json::to_string(&q).unwrap(), "\"37 °C\"");
    }

    proptest! {
        #[test]
        fn reparse_is_identity(text in "\\PC{1,24}") {
            let q = parse_quantity(&text);
            prop_assert_eq!(parse_quantity(&q.to_string()), q);
        }

        #[test]
        fn reparse_numeric_forms(
            a in -1.0e6f64..1.0e6,
            b in 0.0f64..1.0e6,
            unit in "[a-zA-Zµ°% /]{0,6}",
        ) {
            for text in [format!("{a} {unit}"), format!("{a}-{b} {unit}"), format!("{a:.3}{unit}")] {
                let q = parse_quantity(&text);
                prop_assert_eq!(parse_quantity(&q.to_string()), q);
            }
        }
    }
}
