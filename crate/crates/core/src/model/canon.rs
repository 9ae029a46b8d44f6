//! Name canonicalization shared by every comparison in the crate.

use super::ModelError;

fn is_trimmable(c: char) -> bool {
    c.is_whitespace() || c.is_ascii_punctuation() || matches!(c, '–' | '—' | '·' | '…' | '“' | '”' | '‘' | '’')
}

/// Lowercases, strips surrounding punctuation, and joins internal
/// whitespace runs with a single underscore.
///
/// `"Bench-top Centrifuge "` becomes `"bench-top_centrifuge"`. The result is
/// a fixed point: canonicalizing it again returns it unchanged.
pub fn canonicalize(raw: &str) -> Result<String, ModelError> {
    let lowered = raw.to_lowercase();
    let trimmed = lowered.trim_matches(is_trimmable);
    if trimmed.is_empty() {
        return Err(ModelError::EmptyName(raw.to_string()));
    }
    let mut out = String::with_capacity(trimmed.len());
    let mut pending_space = false;
    for c in trimmed.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space {
            out.push('_');
            pending_space = false;
        }
        out.push(c);
    }
    Ok(out)
}

/// Like [`canonicalize`] but maps empty input to `None` instead of an error.
pub fn canonicalize_opt(raw: &str) -> Option<String> {
    canonicalize(raw).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(canonicalize("Bench-top Centrifuge ").unwrap(), "bench-top_centrifuge");
        assert_eq!(canonicalize("bench-top_centrifuge").unwrap(), "bench-top_centrifuge");
        assert!(matches!(canonicalize("  "), Err(ModelError::EmptyName(_))));
        assert!(matches!(canonicalize(" .,; "), Err(ModelError::EmptyName(_))));
        assert_eq!(canonicalize("(Cell  Suspension)").unwrap(), "cell_suspension");
        assert_eq!(canonicalize("Bench-top_centrifuge").unwrap(), "bench-top_centrifuge");
    }

    proptest! {
        #[test]
        fn idempotent(raw in "\\PC{0,24}") {
            if let Ok(once) = canonicalize(&raw) {
                prop_assert_eq!(canonicalize(&once).unwrap(), once);
            }
        }

        #[test]
        fn no_whitespace_in_output(raw in "[a-zA-Z \\t.,-]{1,20}") {
            if let Ok(c) = canonicalize(&raw) {
                prop_assert!(!c.chars().any(char::is_whitespace));
            }
        }
    }
}
