//! Sentence splitting and opcode extraction.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::lexicon::{self, contains};

/// Minimum sentence length kept by the splitter (strictly greater than).
pub const MIN_SENTENCE_CHARS: usize = 10;

/// Verb lexicon and stoplist for opcode extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct OpcodeLexicon {
    pub verbs: BTreeSet<String>,
    pub stop_verbs: BTreeSet<String>,
}

impl Default for OpcodeLexicon {
    fn default() -> Self {
        Self {
            verbs: lexicon::VERBS.iter().map(|s| s.to_string()).collect(),
            stop_verbs: lexicon::DEFAULT_STOP_VERBS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl OpcodeLexicon {
    pub fn with_stop_verbs<I: IntoIterator<Item = S>, S: Into<String>>(stop: I) -> Self {
        Self { stop_verbs: stop.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn is_verb(&self, word: &str) -> bool {
        self.verbs.contains(word)
    }
}

/// Lowercased word with its byte span in the source text.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Word<'a> {
    pub text: String,
    pub raw: &'a str,
    pub start: usize,
    pub end: usize,
    /// Punctuation immediately after the word (`,`, `;`, `:`, `.`).
    pub trailing: Option<char>,
}

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\p{L}\p{N}][\p{L}\p{N}°%µμ'/\-\.,]*").unwrap());

/// Splits into words; trailing `.`/`,` that end a word are recorded, not kept.
pub(crate) fn words(text: &str) -> Vec<Word<'_>> {
    WORD.find_iter(text)
        .map(|m| {
            let mut raw = m.as_str();
            let mut trailing = None;
            while let Some(c) = raw.chars().last().filter(|c| matches!(c, '.' | ',' | '\'' | '-' | '/')) {
                trailing.get_or_insert(c);
                raw = &raw[..raw.len() - c.len_utf8()];
            }
            if trailing.is_none() {
                trailing = text[m.end()..].chars().next().filter(|c| matches!(c, ',' | ';' | ':' | '.' | ')'));
            }
            Word { text: raw.to_lowercase(), raw, start: m.start(), end: m.start() + raw.len(), trailing }
        })
        .filter(|w| !w.text.is_empty())
        .collect()
}

/// Index of the imperative verb in `ws`, if the clause has one.
pub(crate) fn opcode_position(ws: &[Word<'_>], lex: &OpcodeLexicon) -> Option<usize> {
    let mut i = 0;
    if ws.first().is_some_and(|w| contains(lexicon::SUBORDINATORS, &w.text) && !lex.is_verb(&w.text)) {
        let comma = ws.iter().position(|w| w.trailing == Some(','))?;
        i = comma + 1;
    }
    while let Some(w) = ws.get(i) {
        if lex.is_verb(&w.text) {
            return Some(i);
        }
        if contains(lexicon::ADVERBS, &w.text) || (w.text.ends_with("ly") && w.text.len() > 4) {
            i += 1;
            continue;
        }
        return None;
    }
    None
}

/// The imperative verb opening `sentence`, canonicalized, or `None` when the
/// sentence has no verb in imperative position or the verb is stoplisted.
pub fn extract_opcode(sentence: &str, lex: &OpcodeLexicon) -> Option<String> {
    let ws = words(sentence);
    let i = opcode_position(&ws, lex)?;
    let verb = &ws[i].text;
    (!lex.stop_verbs.contains(verb)).then(|| verb.clone())
}

fn has_verb(fragment: &str, lex: &OpcodeLexicon) -> bool {
    opcode_position(&words(fragment), lex).is_some()
}

static CONNECTOR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\s*,?\s*\b(?:and\s+then|then|and)\s+([\p{L}\-]+)").unwrap());

/// Splits step text into sentences.
///
/// Sentences end at `.`, `!` or `?` followed by whitespace. A fragment
/// without an imperative verb is merged into the preceding sentence; then
/// only sentences longer than [`MIN_SENTENCE_CHARS`] are kept, and each is
/// split again wherever "and", "then" or "and then" is followed by a verb.
pub fn split_sentences(text: &str, lex: &OpcodeLexicon) -> Vec<String> {
    let mut raw: Vec<String> = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    for (i, c) in text.char_indices() {
        let end = i + c.len_utf8();
        let at_break = matches!(c, '.' | '!' | '?') && (end == bytes.len() || text[end..].starts_with(char::is_whitespace));
        if at_break {
            raw.push(text[start..end].trim().to_string());
            start = end;
        }
    }
    if !text[start..].trim().is_empty() {
        raw.push(text[start..].trim().to_string());
    }

    let mut merged: Vec<String> = Vec::new();
    for frag in raw.into_iter().filter(|f| !f.is_empty()) {
        match merged.last_mut() {
            Some(prev) if !has_verb(&frag, lex) => {
                prev.push(' ');
                prev.push_str(&frag);
            }
            _ => merged.push(frag),
        }
    }

    let mut out = Vec::new();
    for sentence in merged.into_iter().filter(|s| s.chars().count() > MIN_SENTENCE_CHARS) {
        let mut cut = 0;
        for caps in CONNECTOR.captures_iter(&sentence) {
            let whole = caps.get(0).unwrap();
            let next = caps.get(1).unwrap();
            if whole.start() < cut || !lex.is_verb(&next.as_str().to_lowercase()) {
                continue;
            }
            push_piece(&mut out, &sentence[cut..whole.start()]);
            cut = next.start();
        }
        push_piece(&mut out, &sentence[cut..]);
    }
    out
}

fn push_piece(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim().trim_end_matches([',', ';']).trim_end();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> OpcodeLexicon {
        OpcodeLexicon::default()
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_sentences("Spin the tube. Discard it.", &lex()), ["Spin the tube.", "Discard it."]);
        assert_eq!(split_sentences("Mix well and then incubate overnight.", &lex()), ["Mix well", "incubate overnight."]);
        assert!(split_sentences("Ok.", &lex()).is_empty());
    }

    #[test]
    fn verbless_fragment_merges() {
        let s = split_sentences("Incubate the plate at 37 °C. Overnight at 4C.", &lex());
        assert_eq!(s, ["Incubate the plate at 37 °C. Overnight at 4C."]);
    }

    #[test]
    fn decimals_do_not_split() {
        let s = split_sentences("Add 0.5 mL of buffer to the tube.", &lex());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn and_without_verb_stays() {
        let s = split_sentences("Combine the lysate and the beads in a tube.", &lex());
        assert_eq!(s.len(), 1);
        let s = split_sentences("Wash the pellet twice, then resuspend it in PBS.", &lex());
        assert_eq!(s, ["Wash the pellet twice", "resuspend it in PBS."]);
    }

    #[test]
    fn opcode_examples() {
        assert_eq!(extract_opcode("Centrifuge the tubes at 15,000 x g for 20 minutes", &lex()).as_deref(), Some("centrifuge"));
        assert_eq!(extract_opcode("Overnight at 4C", &lex()), None);
        assert_eq!(extract_opcode("Carefully add buffer", &lex()).as_deref(), Some("add"));
        assert_eq!(extract_opcode("After 10 min, remove the lid.", &lex()).as_deref(), Some("remove"));
        assert_eq!(extract_opcode("Note the volume.", &lex()), None);
        let no_stop = OpcodeLexicon::with_stop_verbs(Vec::<String>::new());
        assert_eq!(extract_opcode("Note the volume.", &no_stop).as_deref(), Some("note"));
    }
}
