use alloc::string::{String, ToString};
use alloc::vec::Vec;

const BULLETS: [char; 3] = ['-', '*', '•'];
const HEADERS: [&str; 2] = ["inclusion criteria", "exclusion criteria"];

/// Splits a registry criteria block into individual criterion texts.
///
/// One criterion per line. Leading bullets and `n.` / `n)` enumerators are
/// stripped (repeatedly, so the split is idempotent), section headers such
/// as `Inclusion Criteria:` are dropped, as are lines shorter than two
/// characters.
pub fn segment_criteria(raw_block: &str) -> Vec<String> {
    raw_block
        .lines()
        .map(strip_markers)
        .filter(|line| line.chars().count() >= 2 && !is_header(line))
        .map(ToString::to_string)
        .collect()
}

fn strip_markers(line: &str) -> &str {
    let mut rest = line.trim();
    loop {
        let next = strip_bullet(rest).or_else(|| strip_enumerator(rest));
        match next {
            Some(stripped) => rest = stripped.trim_start(),
            None => return rest.trim_end(),
        }
    }
}

fn strip_bullet(line: &str) -> Option<&str> {
    line.strip_prefix(BULLETS)
}

// "12." or "3)" followed by whitespace or end of line; "1.5 mg" is content.
fn strip_enumerator(line: &str) -> Option<&str> {
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    match rest.chars().next() {
        None => Some(rest),
        Some(c) if c.is_whitespace() => Some(rest),
        Some(_) => None,
    }
}

fn is_header(line: &str) -> bool {
    let normalized = line.trim_end_matches(':').trim().to_lowercase();
    HEADERS.iter().any(|h| normalized == *h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn bullet_block_with_header() {
        assert_eq!(
            segment_criteria("Inclusion Criteria:\n- age > 18\n- signed consent"),
            vec!["age > 18", "signed consent"]
        );
    }

    #[test]
    fn empty_block() {
        assert!(segment_criteria("").is_empty());
        assert!(segment_criteria("\n \n-\n").is_empty());
    }

    #[test]
    fn numbered_list() {
        assert_eq!(
            segment_criteria("1. pregnancy\n2. prior chemotherapy"),
            vec!["pregnancy", "prior chemotherapy"]
        );
        assert_eq!(segment_criteria("1) a b\n10) c d"), vec!["a b", "c d"]);
    }

    #[test]
    fn decimals_are_not_enumerators() {
        assert_eq!(segment_criteria("1.5 mg/kg dose"), vec!["1.5 mg/kg dose"]);
        assert_eq!(segment_criteria("18 years or older"), vec!["18 years or older"]);
    }

    // Blocks laid out the way registry exports present them: indented
    // bullets, nested enumerations, blank separator lines, mixed headers.
    #[test]
    fn registry_style_blocks() {
        let cases: &[(&str, &[&str])] = &[
            (
                "Inclusion Criteria:\n\n          -  Histologically confirmed glioblastoma\n\n          -  Age >= 18 years\n",
                &["Histologically confirmed glioblastoma", "Age >= 18 years"],
            ),
            (
                "Exclusion Criteria:\n\n          1. Pregnant or breastfeeding\n          2. Prior radiotherapy to the brain\n          3. Known HIV infection",
                &["Pregnant or breastfeeding", "Prior radiotherapy to the brain", "Known HIV infection"],
            ),
            (
                "        Inclusion Criteria:\n\n        * Diagnosis of asthma\n        * FEV1 > 60% predicted",
                &["Diagnosis of asthma", "FEV1 > 60% predicted"],
            ),
            (
                "INCLUSION CRITERIA\n• ECOG 0-1\n• Adequate organ function",
                &["ECOG 0-1", "Adequate organ function"],
            ),
            (
                "- 1. Platelets >= 100,000/mm3\n- 2) Creatinine <= 1.5 x ULN",
                &["Platelets >= 100,000/mm3", "Creatinine <= 1.5 x ULN"],
            ),
            (
                "Exclusion criteria:\n  - Active infection\n  - Body weight < 40 kg\n  - x",
                &["Active infection", "Body weight < 40 kg"],
            ),
        ];
        for (block, expected) in cases {
            assert_eq!(&segment_criteria(block), expected, "block {block:?}");
        }
    }

    proptest! {
        #[test]
        fn resegmenting_joined_output_is_stable(lines in proptest::collection::vec("[-*• 0-9.)a-zA-Z:]{0,24}", 0..12)) {
            let block = lines.join("\n");
            let once = segment_criteria(&block);
            let twice = segment_criteria(&once.join("\n"));
            prop_assert_eq!(once, twice);
        }
    }
}
