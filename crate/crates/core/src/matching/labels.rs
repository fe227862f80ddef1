use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Side;

/// Criterion-level eligibility label. Inclusion criteria use
/// `Included`/`NotIncluded`, exclusion criteria `Excluded`/`NotExcluded`;
/// both sides share the last two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EligibilityLabel {
    Included,
    NotIncluded,
    Excluded,
    NotExcluded,
    NotEnoughInformation,
    NotApplicable,
}

impl EligibilityLabel {
    pub const INCLUSION: [EligibilityLabel; 4] = [
        EligibilityLabel::Included,
        EligibilityLabel::NotIncluded,
        EligibilityLabel::NotEnoughInformation,
        EligibilityLabel::NotApplicable,
    ];
    pub const EXCLUSION: [EligibilityLabel; 4] = [
        EligibilityLabel::Excluded,
        EligibilityLabel::NotExcluded,
        EligibilityLabel::NotEnoughInformation,
        EligibilityLabel::NotApplicable,
    ];

    pub fn vocabulary(side: Side) -> &'static [EligibilityLabel; 4] {
        match side {
            Side::Inclusion => &Self::INCLUSION,
            Side::Exclusion => &Self::EXCLUSION,
        }
    }

    pub fn belongs_to(self, side: Side) -> bool {
        Self::vocabulary(side).contains(&self)
    }

    /// Label text as shown to the model and to annotators.
    pub fn display_text(self) -> &'static str {
        match self {
            EligibilityLabel::Included => "included",
            EligibilityLabel::NotIncluded => "not included",
            EligibilityLabel::Excluded => "excluded",
            EligibilityLabel::NotExcluded => "not excluded",
            EligibilityLabel::NotEnoughInformation => "not enough information",
            EligibilityLabel::NotApplicable => "not applicable",
        }
    }

    /// Case-, underscore- and hyphen-insensitive lookup within the side's
    /// vocabulary. "no relevant information" is read as not enough information.
    pub fn normalize(raw: &str, side: Side) -> Option<EligibilityLabel> {
        let mut norm = String::with_capacity(raw.len());
        for word in raw
            .trim()
            .trim_matches(|c: char| c == '.' || c == '"' || c == '\'')
            .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
            .filter(|w| !w.is_empty())
        {
            if !norm.is_empty() {
                norm.push(' ');
            }
            norm.push_str(&word.to_lowercase());
        }
        let label = match norm.as_str() {
            "no relevant information" | "not enough info" => EligibilityLabel::NotEnoughInformation,
            other => *Self::vocabulary(side).iter().find(|l| l.display_text() == other)?,
        };
        Some(label)
    }
}

impl fmt::Display for EligibilityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_text())
    }
}
