use alloc::string::String;
use alloc::vec::Vec;

/// Lowercase alphanumeric tokens; everything else separates tokens.
/// No stemming and no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}
