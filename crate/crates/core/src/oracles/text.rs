//! Text transforms for the scrambled-text, string-parsing, and debugging
//! tasks.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextError {
    #[error("ratio {0} outside [0, 1]")]
    InvalidRatio(f64),
    #[error("needed {required} scramblable words, text has {available}")]
    NotEnoughEligibleWords { required: usize, available: usize },
    #[error("code snippet is empty")]
    EmptyCode,
}

fn check_ratio(ratio: f64) -> Result<(), TextError> {
    if (0.0..=1.0).contains(&ratio) {
        Ok(())
    } else {
        Err(TextError::InvalidRatio(ratio))
    }
}

/// `round(ratio * n)` with halves rounded away from zero.
pub fn budget(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).round() as usize).min(n)
}

pub fn count_needles(s: &str, needle: char) -> usize {
    s.chars().filter(|&c| c == needle).count()
}

/// Byte span of a whitespace-delimited word and of its letter core.
#[derive(Debug, Clone, Copy)]
struct WordSpan {
    core_start: usize,
    core_end: usize,
}

fn words(text: &str) -> Vec<WordSpan> {
    let mut out = Vec::new();
    let mut start = None;
    let mut push = |s: usize, e: usize| {
        let w = &text[s..e];
        let lead = w.len() - w.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
        let trail = w.len() - w.trim_end_matches(|c: char| !c.is_alphanumeric()).len();
        if lead + trail < w.len() {
            out.push(WordSpan {
                core_start: s + lead,
                core_end: e - trail,
            });
        }
    };
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                push(s, i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push(s, text.len());
    }
    out
}

/// A word can be scrambled when its core is purely alphabetic, at least
/// four letters long, and its interior holds two distinct letters.
fn scramblable(core: &str) -> bool {
    let chars: Vec<char> = core.chars().collect();
    if chars.len() < 4 || !chars.iter().all(|c| c.is_alphabetic()) {
        return false;
    }
    let interior = &chars[1..chars.len() - 1];
    interior.iter().any(|&c| c != interior[0])
}

/// Number of words `disrupt_words` may scramble.
pub fn eligible_word_count(text: &str) -> usize {
    words(text)
        .iter()
        .filter(|w| scramblable(&text[w.core_start..w.core_end]))
        .count()
}

/// Number of whitespace-delimited words with letter or digit content.
pub fn word_count(text: &str) -> usize {
    words(text).len()
}

/// Permutes the interior letters of `round(ratio * eligible)` eligible
/// words, keeping first and last letters and all punctuation in place.
pub fn disrupt_words<R: Rng + ?Sized>(text: &str, ratio: f64, rng: &mut R) -> Result<String, TextError> {
    check_ratio(ratio)?;
    let eligible: Vec<WordSpan> = words(text)
        .into_iter()
        .filter(|w| scramblable(&text[w.core_start..w.core_end]))
        .collect();
    if ratio > 0.0 && eligible.is_empty() {
        return Err(TextError::NotEnoughEligibleWords {
            required: 1,
            available: 0,
        });
    }
    let required = budget(ratio, eligible.len());
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, eligible.len(), required).into_vec();
    picked.sort_unstable();
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for idx in picked {
        let w = eligible[idx];
        out.push_str(&text[cursor..w.core_start]);
        out.push_str(&scramble_interior(&text[w.core_start..w.core_end], rng));
        cursor = w.core_end;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

fn scramble_interior<R: Rng + ?Sized>(word: &str, rng: &mut R) -> String {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let original = &chars[1..n - 1];
    let mut interior = original.to_vec();
    while interior == original {
        interior.shuffle(rng);
    }
    let mut s = String::with_capacity(word.len());
    s.push(chars[0]);
    s.extend(interior);
    s.push(chars[n - 1]);
    s
}

/// Replaces exactly `round(ratio * maskable)` letters/digits with `*`.
pub fn mask_text<R: Rng + ?Sized>(text: &str, ratio: f64, rng: &mut R) -> Result<String, TextError> {
    check_ratio(ratio)?;
    let maskable: Vec<usize> = text
        .char_indices()
        .filter(|(_, c)| c.is_alphanumeric())
        .map(|(i, _)| i)
        .collect();
    Ok(mask_positions(text, &maskable, budget(ratio, maskable.len()), rng))
}

fn mask_positions<R: Rng + ?Sized>(text: &str, candidates: &[usize], count: usize, rng: &mut R) -> String {
    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, candidates.len(), count)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    chosen.sort_unstable();
    let mut out = String::with_capacity(text.len());
    let mut next = chosen.into_iter().peekable();
    for (i, c) in text.char_indices() {
        if next.peek() == Some(&i) {
            next.next();
            out.push('*');
        } else {
            out.push(c);
        }
    }
    out
}

/// Masks `round(ratio * n)` of the `n` identifier and keyword characters.
/// Whitespace, operators, and punctuation are untouched, so line structure
/// and indentation survive.
pub fn mask_code<R: Rng + ?Sized>(code: &str, ratio: f64, rng: &mut R) -> Result<String, TextError> {
    check_ratio(ratio)?;
    if code.trim().is_empty() {
        return Err(TextError::EmptyCode);
    }
    let candidates = identifier_positions(code);
    Ok(mask_positions(code, &candidates, budget(ratio, candidates.len()), rng))
}

/// Byte offsets of characters that belong to identifier-like tokens.
fn identifier_positions(code: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut in_ident = false;
    let mut in_string: Option<char> = None;
    let mut prev = '\0';
    for (i, c) in code.char_indices() {
        if let Some(q) = in_string {
            if c == q && prev != '\\' {
                in_string = None;
            }
            prev = c;
            continue;
        }
        if c == '"' || c == '\'' {
            in_string = Some(c);
            in_ident = false;
        } else if c.is_ascii_alphabetic() || c == '_' || (in_ident && c.is_ascii_digit()) {
            in_ident = true;
            out.push(i);
        } else {
            in_ident = false;
        }
        prev = c;
    }
    out
}

/// Number of `*` characters introduced relative to `original`.
pub fn masked_count(original: &str, masked: &str) -> usize {
    original
        .chars()
        .zip(masked.chars())
        .filter(|&(a, b)| a != b && b == '*')
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn needles() {
        assert_eq!(count_needles("a-D#fG%kL-q-W!zXe@R-tY&", '-'), 4);
        assert_eq!(count_needles("", '-'), 0);
    }

    #[test]
    fn scrambles_single_word() {
        let out = disrupt_words("forest", 1.0, &mut rng()).unwrap();
        assert_ne!(out, "forest");
        assert!(out.starts_with('f') && out.ends_with('t'));
        let mut a: Vec<char> = out.chars().collect();
        let mut b: Vec<char> = "forest".chars().collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_ratio_is_identity() {
        let t = "Amid the dense forest, Lena stumbled upon an ancient cabin.";
        assert_eq!(disrupt_words(t, 0.0, &mut rng()).unwrap(), t);
        assert_eq!(mask_text(t, 0.0, &mut rng()).unwrap(), t);
    }

    #[test]
    fn punctuation_stays_put() {
        let t = "“You’ve finally found it.” The journal’s last page read, “The key.”";
        let out = disrupt_words(t, 1.0, &mut rng()).unwrap();
        let punct = |s: &str| s.chars().filter(|c| !c.is_alphabetic()).collect::<String>();
        assert_eq!(punct(&out), punct(t));
    }

    #[test]
    fn no_eligible_words() {
        assert_eq!(
            disrupt_words("a an the", 0.5, &mut rng()),
            Err(TextError::NotEnoughEligibleWords {
                required: 1,
                available: 0
            })
        );
    }

    #[test]
    fn mask_saturates() {
        let t = "de 42 forest!";
        let out = mask_text(t, 1.0, &mut rng()).unwrap();
        assert_eq!(out, "** ** ******!");
    }

    #[test]
    fn mask_budget_is_exact() {
        let t = "Amid the dense forest, Lena stumbled upon an ancient, moss-covered cabin.";
        let n = t.chars().filter(|c| c.is_alphanumeric()).count();
        for ratio in [0.1, 0.25, 0.5, 0.9] {
            let out = mask_text(t, ratio, &mut rng()).unwrap();
            assert_eq!(masked_count(t, &out), budget(ratio, n));
            assert_eq!(out.len(), t.len());
        }
    }

    #[test]
    fn code_mask_keeps_layout() {
        let code = "from typing import List\ndef f(xs: List[int]) -> int:\n    return sum(xs) + 1\n";
        let out = mask_code(code, 0.3, &mut rng()).unwrap();
        assert_eq!(out.lines().count(), code.lines().count());
        for (a, b) in code.lines().zip(out.lines()) {
            assert_eq!(a.len(), b.len());
            let indent = |s: &str| s.len() - s.trim_start().len();
            assert_eq!(indent(a), indent(b));
        }
        assert!(out.contains("+ 1"), "digits and operators untouched: {out}");
        assert_eq!(mask_code(code, 0.0, &mut rng()).unwrap(), code);
        assert_eq!(mask_code("  \n", 0.5, &mut rng()), Err(TextError::EmptyCode));
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(mask_text("abc", 1.5, &mut rng()).is_err());
        assert!(disrupt_words("abcd", -0.1, &mut rng()).is_err());
    }
}
