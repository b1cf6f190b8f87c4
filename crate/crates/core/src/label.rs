//! Canonical activity classes and the raw-to-canonical aggregation table.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};

/// One of the thirteen aggregated activity classes.
///
/// The discriminant order is the reporting order used for confusion matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityLabel {
    Bathing,
    BedToToilet,
    Cook,
    Eat,
    EnterHome,
    LeaveHome,
    PersonalHygiene,
    Relax,
    Sleep,
    TakeMedicine,
    WashDishes,
    Work,
    Other,
}

impl ActivityLabel {
    pub const COUNT: usize = 13;

    pub const ALL: [ActivityLabel; Self::COUNT] = [
        ActivityLabel::Bathing,
        ActivityLabel::BedToToilet,
        ActivityLabel::Cook,
        ActivityLabel::Eat,
        ActivityLabel::EnterHome,
        ActivityLabel::LeaveHome,
        ActivityLabel::PersonalHygiene,
        ActivityLabel::Relax,
        ActivityLabel::Sleep,
        ActivityLabel::TakeMedicine,
        ActivityLabel::WashDishes,
        ActivityLabel::Work,
        ActivityLabel::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn is_other(self) -> bool {
        self == ActivityLabel::Other
    }

    /// Single-token name used in log files and reports.
    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Bathing => "Bathing",
            ActivityLabel::BedToToilet => "Bed_to_Toilet",
            ActivityLabel::Cook => "Cook",
            ActivityLabel::Eat => "Eat",
            ActivityLabel::EnterHome => "Enter_Home",
            ActivityLabel::LeaveHome => "Leave_Home",
            ActivityLabel::PersonalHygiene => "Personal_Hygiene",
            ActivityLabel::Relax => "Relax",
            ActivityLabel::Sleep => "Sleep",
            ActivityLabel::TakeMedicine => "Take_Medicine",
            ActivityLabel::WashDishes => "Wash_Dishes",
            ActivityLabel::Work => "Work",
            ActivityLabel::Other => "Other",
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '_' | ' ' | '-' | '/'))
        .flat_map(char::to_lowercase)
        .collect()
}

impl FromStr for ActivityLabel {
    type Err = HarError;

    /// Accepts the canonical token in any case, with or without separators
    /// (`Bed_to_Toilet`, `bed to toilet`, `BedToToilet`).
    fn from_str(s: &str) -> Result<Self> {
        let key = normalize(s);
        ActivityLabel::ALL
            .into_iter()
            .find(|l| normalize(l.name()) == key)
            .ok_or_else(|| HarError::InvalidInput(format!("unknown activity class `{s}`")))
    }
}

/// Raw dataset label to canonical class table.
///
/// Patterns may contain `*` wildcards. Exact entries are consulted first, then
/// wildcard entries in file order, then the canonical names themselves.
/// Anything left over maps to [`ActivityLabel::Other`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    entries: Vec<(String, ActivityLabel)>,
}

const DEFAULT_TABLE: &str = include_str!("../data/labels_default.txt");

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// The built-in table covering the public CASAS vocabularies.
    pub fn casas_default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("built-in label table is valid")
    }

    pub fn insert(&mut self, pattern: impl Into<String>, label: ActivityLabel) {
        self.entries.push((pattern.into(), label));
    }

    pub fn entries(&self) -> &[(String, ActivityLabel)] {
        &self.entries
    }

    /// Parses the two-column `raw_label canonical_label` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = LabelMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(raw), Some(canon)) = (fields.next(), fields.next()) else {
                return Err(HarError::Parse {
                    line: i + 1,
                    message: "expected `raw_label canonical_label`".into(),
                });
            };
            if fields.next().is_some() {
                return Err(HarError::Parse {
                    line: i + 1,
                    message: "too many fields".into(),
                });
            }
            let label = canon.parse().map_err(|_| HarError::Parse {
                line: i + 1,
                message: format!("unknown canonical class `{canon}`"),
            })?;
            map.insert(raw, label);
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn resolve(&self, raw: &str) -> ActivityLabel {
        if let Some((_, l)) = self.entries.iter().find(|(p, _)| !p.contains('*') && p == raw) {
            return *l;
        }
        if let Some((_, l)) = self
            .entries
            .iter()
            .find(|(p, _)| p.contains('*') && glob_match(p, raw))
        {
            return *l;
        }
        raw.parse().unwrap_or(ActivityLabel::Other)
    }
}

/// `*` matches any (possibly empty) run of characters.
fn glob_match(pattern: &str, text: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    let (first, rest) = parts.split_first().expect("split yields at least one part");
    let Some(mut remaining) = text.strip_prefix(first) else {
        return false;
    };
    let Some((last, middle)) = rest.split_last() else {
        return remaining.is_empty();
    };
    for part in middle {
        match remaining.find(part) {
            Some(pos) => remaining = &remaining[pos + part.len()..],
            None => return false,
        }
    }
    remaining.len() >= last.len() && remaining.ends_with(last)
}
