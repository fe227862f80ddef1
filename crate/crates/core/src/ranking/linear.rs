use serde::{Deserialize, Serialize};

use crate::corpus::Side;
use crate::matching::{EligibilityLabel, TrialMatchResult};

/// Label proportions per side, over the criteria that apply to the patient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearAggregates {
    pub pct_met_inclusion: f64,
    pub pct_unmet_inclusion: f64,
    pub pct_noinfo_inclusion: f64,
    pub pct_met_exclusion: f64,
    pub pct_unmet_exclusion: f64,
    pub pct_noinfo_exclusion: f64,
    /// Inclusion criteria minus those labelled not applicable.
    pub m_effective: usize,
    pub n_effective: usize,
}

/// Counts labels per side. Failed predictions already carry
/// not-enough-information and are counted there. A side whose criteria are
/// all not applicable (or that has none) gets all-zero percentages.
pub fn linear_from_labels(
    inclusion: impl IntoIterator<Item = EligibilityLabel>,
    exclusion: impl IntoIterator<Item = EligibilityLabel>,
) -> LinearAggregates {
    let (m_eff, inc) = side_fractions(inclusion, Side::Inclusion);
    let (n_eff, exc) = side_fractions(exclusion, Side::Exclusion);
    LinearAggregates {
        pct_met_inclusion: inc[0],
        pct_unmet_inclusion: inc[1],
        pct_noinfo_inclusion: inc[2],
        pct_met_exclusion: exc[0],
        pct_unmet_exclusion: exc[1],
        pct_noinfo_exclusion: exc[2],
        m_effective: m_eff,
        n_effective: n_eff,
    }
}

pub fn linear_aggregate(result: &TrialMatchResult) -> LinearAggregates {
    linear_from_labels(result.labels(Side::Inclusion), result.labels(Side::Exclusion))
}

// [met, unmet, no information] for one side.
fn side_fractions(labels: impl IntoIterator<Item = EligibilityLabel>, side: Side) -> (usize, [f64; 3]) {
    let (met, unmet) = match side {
        Side::Inclusion => (EligibilityLabel::Included, EligibilityLabel::NotIncluded),
        Side::Exclusion => (EligibilityLabel::Excluded, EligibilityLabel::NotExcluded),
    };
    let mut counts = [0usize; 3];
    let mut effective = 0usize;
    for label in labels {
        if label == EligibilityLabel::NotApplicable {
            continue;
        }
        effective += 1;
        if label == met {
            counts[0] += 1;
        } else if label == unmet {
            counts[1] += 1;
        } else {
            counts[2] += 1;
        }
    }
    if effective == 0 {
        return (0, [0.0; 3]);
    }
    let d = effective as f64;
    (effective, counts.map(|c| c as f64 / d))
}
