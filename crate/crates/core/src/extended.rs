use serde::{Deserialize, Serialize};

/// A nonnegative quantity that may be infinite.
///
/// Infinity is carried as a variant so it never leaks into arithmetic as a
/// float sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Maximum in the extended order.
    pub fn max(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.max(b)),
            _ => Extended::Infinite,
        }
    }

    pub fn scale(self, factor: f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(v * factor),
            Extended::Infinite => Extended::Infinite,
        }
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}
