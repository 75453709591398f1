//! The five-level ordinal scale used for factor assessments and rule relevance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ordinal assessment value. The numeric image runs from 1 (`VeryLow`) to 5
/// (`VeryHigh`) and the derived ordering follows it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleLevel {
    VeryLow = 1,
    Low = 2,
    Medium = 3,
    High = 4,
    VeryHigh = 5,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scale level `{0}` (expected one of very_low, low, medium, high, very_high)")]
pub struct UnknownLevel(pub String);

impl ScaleLevel {
    pub const ALL: [ScaleLevel; 5] = [
        ScaleLevel::VeryLow,
        ScaleLevel::Low,
        ScaleLevel::Medium,
        ScaleLevel::High,
        ScaleLevel::VeryHigh,
    ];

    pub fn numeric(self) -> u8 {
        self as u8
    }

    pub fn from_numeric(value: u8) -> Option<Self> {
        match value {
            1 => Some(ScaleLevel::VeryLow),
            2 => Some(ScaleLevel::Low),
            3 => Some(ScaleLevel::Medium),
            4 => Some(ScaleLevel::High),
            5 => Some(ScaleLevel::VeryHigh),
            _ => None,
        }
    }

    /// Scale reflection: `6 - v`. `Medium` is the fixed point.
    pub fn negate(self) -> Self {
        Self::from_numeric(6 - self.numeric()).expect("reflection stays on the scale")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScaleLevel::VeryLow => "very_low",
            ScaleLevel::Low => "low",
            ScaleLevel::Medium => "medium",
            ScaleLevel::High => "high",
            ScaleLevel::VeryHigh => "very_high",
        }
    }

    pub fn is_level_name(s: &str) -> bool {
        s.parse::<ScaleLevel>().is_ok()
    }
}

impl fmt::Display for ScaleLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScaleLevel {
    type Err = UnknownLevel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "very_low" => Ok(ScaleLevel::VeryLow),
            "low" => Ok(ScaleLevel::Low),
            "medium" => Ok(ScaleLevel::Medium),
            "high" => Ok(ScaleLevel::High),
            "very_high" => Ok(ScaleLevel::VeryHigh),
            other => Err(UnknownLevel(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_table() {
        // Enumerated reflection table, written out by hand.
        let table = [
            (ScaleLevel::VeryLow, ScaleLevel::VeryHigh),
            (ScaleLevel::Low, ScaleLevel::High),
            (ScaleLevel::Medium, ScaleLevel::Medium),
            (ScaleLevel::High, ScaleLevel::Low),
            (ScaleLevel::VeryHigh, ScaleLevel::VeryLow),
        ];
        for (input, expected) in table {
            assert_eq!(input.negate(), expected);
            assert_eq!(input.negate().negate(), input);
        }
    }

    #[test]
    fn order_matches_numeric_image() {
        for pair in ScaleLevel::ALL.windows(2) {
            assert!(pair[0] < pair[1]);
            assert_eq!(pair[0].numeric() + 1, pair[1].numeric());
        }
    }

    #[test]
    fn names_round_trip() {
        for level in ScaleLevel::ALL {
            assert_eq!(level.as_str().parse::<ScaleLevel>().unwrap(), level);
        }
        assert!("VeryHigh".parse::<ScaleLevel>().is_err());
        assert_eq!(ScaleLevel::from_numeric(0), None);
        assert_eq!(ScaleLevel::from_numeric(6), None);
    }
}
