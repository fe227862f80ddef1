use alloc::string::String;
use alloc::vec::Vec;

/// Tokens ending in a period that never close a sentence (compared lowercase).
const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.", "a.m.", "p.m.", "vs.", "e.g.", "i.e.", "approx.",
    "fig.", "no.", "pt.", "hx.", "dx.", "b.i.d.", "t.i.d.", "q.d.",
];

/// Rule-based sentence splitter.
///
/// A sentence ends after `.`, `!` or `?` when followed by whitespace and then
/// an uppercase letter or a digit, unless the token carrying the period is a
/// known abbreviation. Whitespace inside a sentence is collapsed to single
/// spaces so that sentences render on one line in prompts.
pub fn segment_sentences(raw_text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = raw_text.char_indices().collect();
    for (pos, &(byte, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = byte + c.len_utf8();
        if !followed_by_sentence_start(&chars[pos + 1..]) {
            continue;
        }
        if c == '.' && is_abbreviation(&raw_text[start..end]) {
            continue;
        }
        push_sentence(&mut out, &raw_text[start..end]);
        start = end;
    }
    push_sentence(&mut out, &raw_text[start..]);
    out
}

fn followed_by_sentence_start(rest: &[(usize, char)]) -> bool {
    let mut iter = rest.iter().map(|&(_, c)| c);
    match iter.next() {
        Some(c) if c.is_whitespace() => {}
        _ => return false,
    }
    match iter.find(|c| !c.is_whitespace()) {
        Some(c) => c.is_uppercase() || c.is_ascii_digit(),
        None => false,
    }
}

fn is_abbreviation(segment: &str) -> bool {
    let token = segment.rsplit(char::is_whitespace).next().unwrap_or("");
    let token = token.trim_start_matches(['(', '"', '\'']);
    let lower = token.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

fn push_sentence(out: &mut Vec<String>, raw: &str) {
    let mut sentence = String::new();
    for word in raw.split_whitespace() {
        if !sentence.is_empty() {
            sentence.push(' ');
        }
        sentence.push_str(word);
    }
    if !sentence.is_empty() {
        out.push(sentence);
    }
}
