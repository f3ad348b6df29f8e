use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Three-way veracity label. The declaration order is the class index order
/// used for logits, probabilities and argmax tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Supports,
    Refutes,
    Nei,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Supports, Label::Refutes, Label::Nei];

    pub fn index(self) -> usize {
        match self {
            Label::Supports => 0,
            Label::Refutes => 1,
            Label::Nei => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Supports => "SUPPORTS",
            Label::Refutes => "REFUTES",
            Label::Nei => "NEI",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SUPPORTS" => Ok(Label::Supports),
            "REFUTES" => Ok(Label::Refutes),
            "NEI" | "NOT ENOUGH INFO" => Ok(Label::Nei),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_serde_uses_uppercase_names() {
        let s = serde_json::to_string(&Label::Nei).unwrap();
        assert_eq!(s, "\"NEI\"");
        let l: Label = serde_json::from_str("\"REFUTES\"").unwrap();
        assert_eq!(l, Label::Refutes);
    }

    #[test]
    fn index_round_trips() {
        for l in Label::ALL {
            assert_eq!(Label::from_index(l.index()), Some(l));
        }
        assert_eq!(Label::from_index(3), None);
    }
}
