use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The nine top-level kinds of actionable information.
///
/// Variant order only fixes report and chart layout; it carries no priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionabilityType {
    Needs,
    ResponseGroups,
    ThreatsToResponse,
    AccessibilityChange,
    DamageInfrastructure,
    GeographicMention,
    EnvironmentChange,
    RescueReporting,
    PersonalOpinion,
}

impl ActionabilityType {
    pub const ALL: [ActionabilityType; 9] = [
        ActionabilityType::Needs,
        ActionabilityType::ResponseGroups,
        ActionabilityType::ThreatsToResponse,
        ActionabilityType::AccessibilityChange,
        ActionabilityType::DamageInfrastructure,
        ActionabilityType::GeographicMention,
        ActionabilityType::EnvironmentChange,
        ActionabilityType::RescueReporting,
        ActionabilityType::PersonalOpinion,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionabilityType::Needs => "Needs",
            ActionabilityType::ResponseGroups => "ResponseGroups",
            ActionabilityType::ThreatsToResponse => "ThreatsToResponse",
            ActionabilityType::AccessibilityChange => "AccessibilityChange",
            ActionabilityType::DamageInfrastructure => "DamageInfrastructure",
            ActionabilityType::GeographicMention => "GeographicMention",
            ActionabilityType::EnvironmentChange => "EnvironmentChange",
            ActionabilityType::RescueReporting => "RescueReporting",
            ActionabilityType::PersonalOpinion => "PersonalOpinion",
        }
    }

    /// Human-readable row label for reports.
    pub fn title(self) -> &'static str {
        match self {
            ActionabilityType::Needs => "Needs",
            ActionabilityType::ResponseGroups => "Response groups",
            ActionabilityType::ThreatsToResponse => "Threats to response",
            ActionabilityType::AccessibilityChange => "Change in accessibility",
            ActionabilityType::DamageInfrastructure => "Damage to infrastructure, livelihoods",
            ActionabilityType::GeographicMention => "Geographic names",
            ActionabilityType::EnvironmentChange => "Changes in environment",
            ActionabilityType::RescueReporting => "Reporting about the rescue",
            ActionabilityType::PersonalOpinion => "Personal opinions",
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        let i = (c.to_ascii_uppercase() as u32).checked_sub('A' as u32)? as usize;
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for ActionabilityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActionabilityType {
    type Err = Error;

    /// Accepts a letter code (`"D"`) or a name (`"AccessibilityChange"`, case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            return Self::from_code(c)
                .ok_or_else(|| Error::Config(format!("unknown actionability code {s:?}")));
        }
        Self::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown actionability type {s:?}")))
    }
}

/// A (possibly empty) set of actionability types.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ActionSet {
    members: BTreeSet<ActionabilityType>,
}

impl ActionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_codes<'a>(codes: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        codes.into_iter().map(str::parse).collect()
    }

    pub fn insert(&mut self, t: ActionabilityType) -> bool {
        self.members.insert(t)
    }

    pub fn contains(&self, t: ActionabilityType) -> bool {
        self.members.contains(&t)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ActionabilityType> + '_ {
        self.members.iter().copied()
    }

    pub fn codes(&self) -> Vec<String> {
        self.iter().map(|t| t.code().to_string()).collect()
    }

    /// Bit `i` set for the `i`-th type in [`ActionabilityType::ALL`].
    pub fn bits(&self) -> u16 {
        self.iter().fold(0, |acc, t| acc | (1 << t.index()))
    }
}

impl FromIterator<ActionabilityType> for ActionSet {
    fn from_iter<I: IntoIterator<Item = ActionabilityType>>(iter: I) -> Self {
        ActionSet {
            members: iter.into_iter().collect(),
        }
    }
}
