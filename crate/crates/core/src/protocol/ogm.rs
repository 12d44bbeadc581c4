use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NodeId, Sqn, Ttl};

/// Originator message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ogm {
    /// Node that created the message. Never changes on rebroadcast.
    pub oid: NodeId,
    /// Node that last (re)broadcast the message.
    pub sid: NodeId,
    pub sqn: Sqn,
    pub ttl: Ttl,
    /// Set when the rebroadcasting node received it straight from the originator.
    pub is_direct: bool,
    /// Set when the link to the previous sender failed the bidirectional check.
    pub is_unidirectional: bool,
}

impl Ogm {
    /// A freshly originated message: `oid == sid`, full TTL, no flags.
    pub fn originate(id: NodeId, sqn: Sqn, ttl: Ttl) -> Self {
        Ogm {
            oid: id,
            sid: id,
            sqn,
            ttl,
            is_direct: false,
            is_unidirectional: false,
        }
    }
}

impl fmt::Display for Ogm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "oid={} sid={} sqn={} ttl={} direct={} uni={}",
            self.oid,
            self.sid,
            self.sqn,
            self.ttl,
            u8::from(self.is_direct),
            u8::from(self.is_unidirectional)
        )
    }
}
