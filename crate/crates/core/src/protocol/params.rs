use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Sqn, Ttl};
use crate::error::ConfigError;

/// Which reading of the receive rules a node applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpretation {
    /// Window updates only for newer sequence numbers; a single designated
    /// best next hop; duplicates with an equal TTL are rebroadcast.
    Literal,
    /// Window updates for any non-duplicate in range; every neighbour with the
    /// top ranking is a best next hop; in-range rebroadcasts need an equal or
    /// better TTL.
    Alternative,
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpretation::Literal => "literal",
            Interpretation::Alternative => "alternative",
        })
    }
}

impl FromStr for Interpretation {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "literal" => Ok(Interpretation::Literal),
            "alternative" => Ok(Interpretation::Alternative),
            other => Err(ConfigError::invalid(
                "interpretation",
                format!("expected `literal` or `alternative`, got `{other}`"),
            )),
        }
    }
}

/// Protocol constants shared by every node of a network.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n_nodes: usize,
    pub max_sqn: Sqn,
    pub ttl_max: Ttl,
    pub window_size: usize,
    pub bi_link_timeout: u32,
    pub buffer_capacity: usize,
    pub interpretation: Interpretation,
}

impl ProtocolParams {
    /// Largest window the bit-packed [`SlidingWindow`](super::SlidingWindow) can hold.
    pub const MAX_WINDOW_SIZE: usize = 32;

    pub fn new(n_nodes: usize, interpretation: Interpretation) -> Self {
        ProtocolParams {
            n_nodes,
            max_sqn: 15,
            ttl_max: 10,
            window_size: 5,
            bi_link_timeout: 5,
            buffer_capacity: 64,
            interpretation,
        }
    }

    /// Number of distinct sequence numbers, `max_sqn + 1`.
    #[inline]
    pub fn range(&self) -> u32 {
        u32::from(self.max_sqn) + 1
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_nodes == 0 {
            return Err(ConfigError::invalid("n_nodes", "must be at least 1"));
        }
        if self.max_sqn == 0 {
            return Err(ConfigError::invalid("max_sqn", "must be at least 1"));
        }
        if self.window_size == 0 || self.window_size > Self::MAX_WINDOW_SIZE {
            return Err(ConfigError::invalid(
                "window_size",
                format!("must be in 1..={}", Self::MAX_WINDOW_SIZE),
            ));
        }
        if (self.range() as usize) < 2 * self.window_size {
            return Err(ConfigError::invalid(
                "window_size",
                format!(
                    "max_sqn + 1 = {} must be at least twice the window size {}",
                    self.range(),
                    self.window_size
                ),
            ));
        }
        if self.bi_link_timeout == 0 || self.bi_link_timeout > self.range() / 2 {
            return Err(ConfigError::invalid(
                "bi_link_timeout",
                format!("must be in 1..={}", self.range() / 2),
            ));
        }
        if self.ttl_max < 2 {
            return Err(ConfigError::invalid("ttl_max", "must be at least 2"));
        }
        if self.buffer_capacity == 0 {
            return Err(ConfigError::invalid("buffer_capacity", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = ProtocolParams::new(17, Interpretation::Literal);
        assert_eq!(p.range(), 16);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_overlapping_windows() {
        let mut p = ProtocolParams::new(4, Interpretation::Literal);
        p.window_size = 9;
        assert_eq!(p.validate().unwrap_err().field(), Some("window_size"));
        p.window_size = 8;
        p.validate().unwrap();
    }

    #[test]
    fn rejects_zero_window_and_bad_timeout() {
        let mut p = ProtocolParams::new(4, Interpretation::Alternative);
        p.window_size = 0;
        assert_eq!(p.validate().unwrap_err().field(), Some("window_size"));
        p.window_size = 5;
        p.bi_link_timeout = 9;
        assert_eq!(p.validate().unwrap_err().field(), Some("bi_link_timeout"));
        p.bi_link_timeout = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn interpretation_parses_case_insensitively() {
        assert_eq!("Literal".parse::<Interpretation>().unwrap(), Interpretation::Literal);
        assert_eq!("alternative".parse::<Interpretation>().unwrap(), Interpretation::Alternative);
        assert!("rfc".parse::<Interpretation>().is_err());
    }
}
