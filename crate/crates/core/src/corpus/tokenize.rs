use unicode_normalization::char::{decompose_canonical, is_combining_mark};

use super::{Document, TokenSequence};

pub const MIN_TOKEN_LEN: usize = 2;
pub const MAX_TOKEN_LEN: usize = 28;

/// Tokenizes an article's title and body.
pub fn preprocess(doc: &Document) -> TokenSequence {
    tokenize(&doc.full_text())
}

/// Lowercases, folds accented letters to ASCII and splits on everything that
/// is not a letter. Tokens outside `[MIN_TOKEN_LEN, MAX_TOKEN_LEN]` are dropped.
pub fn tokenize(text: &str) -> TokenSequence {
    tokenize_bounded(text, MIN_TOKEN_LEN, MAX_TOKEN_LEN)
}

/// [`tokenize`] with explicit token-length bounds.
pub fn tokenize_bounded(text: &str, min_len: usize, max_len: usize) -> TokenSequence {
    let bounds = min_len..=max_len;
    let mut tokens = Vec::new();
    let mut current = String::new();
    for raw in text.chars() {
        for c in raw.to_lowercase() {
            if !fold_char(c, &mut current) {
                flush(&mut current, &mut tokens, &bounds);
            }
        }
    }
    flush(&mut current, &mut tokens, &bounds);
    tokens
}

fn flush(current: &mut String, tokens: &mut TokenSequence, bounds: &std::ops::RangeInclusive<usize>) {
    if bounds.contains(&current.len()) {
        tokens.push(std::mem::take(current));
    } else {
        current.clear();
    }
}

/// Appends the ASCII form of `c` and returns true, or returns false when `c`
/// is a token boundary.
fn fold_char(c: char, out: &mut String) -> bool {
    if c.is_ascii_alphabetic() {
        out.push(c);
        return true;
    }
    if c.is_ascii() {
        return false;
    }
    if is_combining_mark(c) {
        // a stray combining mark continues the current token
        return !out.is_empty();
    }
    if let Some(s) = ligature(c) {
        out.push_str(s);
        return true;
    }
    let mut base = None;
    let mut clean = true;
    decompose_canonical(c, |d| {
        if base.is_none() {
            base = Some(d);
        } else if !is_combining_mark(d) {
            clean = false;
        }
    });
    match base {
        Some(b) if clean && b != c && b.is_ascii_alphabetic() => {
            out.push(b.to_ascii_lowercase());
            true
        }
        _ => false,
    }
}

fn ligature(c: char) -> Option<&'static str> {
    Some(match c {
        'ß' => "ss",
        'æ' => "ae",
        'œ' => "oe",
        'ø' => "o",
        'ł' => "l",
        'đ' => "d",
        'ð' => "d",
        'þ' => "th",
        'ı' => "i",
        _ => return None,
    })
}
