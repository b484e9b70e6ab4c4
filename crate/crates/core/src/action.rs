use serde::{Deserialize, Serialize};

/// Decision taken in a slot: `Skip` (w = 0) keeps the in-service update or
/// stays idle, `Switch` (w = 1) starts transmitting the new arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Action {
    Skip,
    Switch,
}

impl Action {
    pub fn as_u8(self) -> u8 {
        match self {
            Action::Skip => 0,
            Action::Switch => 1,
        }
    }

    pub fn is_switch(self) -> bool {
        self == Action::Switch
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.as_u8()
    }
}

impl TryFrom<u8> for Action {
    type Error = String;

    fn try_from(w: u8) -> Result<Self, Self::Error> {
        match w {
            0 => Ok(Action::Skip),
            1 => Ok(Action::Switch),
            other => Err(format!("action must be 0 or 1, got {other}")),
        }
    }
}

/// Set of admissible actions in a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSet {
    /// Only `Skip` (no arrival this slot).
    SkipOnly,
    /// Both `Skip` and `Switch`.
    Both,
}

impl ActionSet {
    pub fn contains(self, w: Action) -> bool {
        match self {
            ActionSet::SkipOnly => w == Action::Skip,
            ActionSet::Both => true,
        }
    }

    pub fn to_vec(self) -> Vec<Action> {
        match self {
            ActionSet::SkipOnly => vec![Action::Skip],
            ActionSet::Both => vec![Action::Skip, Action::Switch],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_integer_form() {
        assert_eq!(Action::try_from(0u8), Ok(Action::Skip));
        assert_eq!(Action::try_from(1u8), Ok(Action::Switch));
        assert!(Action::try_from(2u8).is_err());
        assert_eq!(u8::from(Action::Switch), 1);
    }
}
