use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Abstract permission class of a tool call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Capability {
    #[serde(rename = "fs-read")]
    FsRead,
    #[serde(rename = "fs-write")]
    FsWrite,
    #[serde(rename = "net-egress")]
    NetEgress,
    #[serde(rename = "exec")]
    Exec,
}

impl Capability {
    pub fn name(self) -> &'static str {
        match self {
            Self::FsRead => "fs-read",
            Self::FsWrite => "fs-write",
            Self::NetEgress => "net-egress",
            Self::Exec => "exec",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of capabilities with set semantics and a stable iteration order.
pub type CapabilitySet = BTreeSet<Capability>;

/// Convenience constructor for literal capability sets.
pub fn caps(items: &[Capability]) -> CapabilitySet {
    items.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_uses_kebab_names() {
        assert_eq!(
            serde_json::to_string(&Capability::NetEgress).unwrap(),
            "\"net-egress\""
        );
        let parsed: Capability = serde_json::from_str("\"fs-read\"").unwrap();
        assert_eq!(parsed, Capability::FsRead);
    }

    #[test]
    fn set_deduplicates() {
        let set = caps(&[Capability::Exec, Capability::Exec, Capability::FsRead]);
        assert_eq!(set.len(), 2);
    }
}
