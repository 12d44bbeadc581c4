//! Scenario files.
//!
//! A scenario is a flat `key=value` text file; `#` starts a comment. Unknown
//! keys are rejected. Every key has a default, so a file only needs the
//! values it changes:
//!
//! ```text
//! # four nodes in a ring
//! topology=ring:4
//! interpretation=literal
//! budgets=2,1,1,1
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::explorer::DEFAULT_STATE_CAP;
use crate::protocol::{Interpretation, ProtocolParams, Sqn, Ttl};
use crate::sim::TimedConfig;
use crate::topology::{Topology, TopologySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(ConfigError::invalid("format", format!("expected `csv` or `json`, got `{other}`"))),
        }
    }
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub interpretation: Interpretation,
    pub topology: TopologySpec,
    pub max_sqn: Sqn,
    pub ttl_max: Ttl,
    pub window_size: usize,
    pub bi_link_timeout: u32,
    pub buffer_capacity: usize,
    /// Own OGMs per node for the explorer; empty means none.
    pub budgets: Vec<u32>,
    pub state_cap: usize,
    pub timed: TimedConfig,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = ProtocolParams::new(0, Interpretation::Literal);
        ScenarioConfig {
            interpretation: p.interpretation,
            topology: TopologySpec::Ring(4),
            max_sqn: p.max_sqn,
            ttl_max: p.ttl_max,
            window_size: p.window_size,
            bi_link_timeout: p.bi_link_timeout,
            buffer_capacity: p.buffer_capacity,
            budgets: Vec::new(),
            state_cap: DEFAULT_STATE_CAP,
            timed: TimedConfig::default(),
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn num<T: FromStr>(field: &'static str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::invalid(field, format!("cannot parse `{v}`")))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                reason: format!("expected key=value, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Read a scenario file. A relative custom topology path is taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::invalid("config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let TopologySpec::Custom(ref mut edges) = cfg.topology {
            if edges.is_relative() {
                if let Some(dir) = path.parent() {
                    *edges = dir.join(&*edges);
                }
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "interpretation" => self.interpretation = value.parse()?,
            "topology" => self.topology = value.parse()?,
            "max_sqn" => self.max_sqn = num("max_sqn", value)?,
            "ttl_max" => self.ttl_max = num("ttl_max", value)?,
            "window_size" => self.window_size = num("window_size", value)?,
            "bi_link_timeout" => self.bi_link_timeout = num("bi_link_timeout", value)?,
            "buffer_capacity" => self.buffer_capacity = num("buffer_capacity", value)?,
            "budgets" => {
                self.budgets = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| num("budgets", s))
                    .collect::<Result<_, _>>()?
            }
            "state_cap" => self.state_cap = num("state_cap", value)?,
            "min_ogmtime" => self.timed.min_ogmtime = num("min_ogmtime", value)?,
            "max_ogmtime" => self.timed.max_ogmtime = num("max_ogmtime", value)?,
            "max_response" => self.timed.max_response = num("max_response", value)?,
            "horizon" => self.timed.horizon = num("horizon", value)?,
            "runs" => self.timed.runs = num("runs", value)?,
            "seed" => self.timed.seed = num("seed", value)?,
            "sample_period" => self.timed.sample_period = num("sample_period", value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// The configuration as scenario text; [`ScenarioConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let budgets: Vec<String> = self.budgets.iter().map(u32::to_string).collect();
        let t = &self.timed;
        // writing to a String cannot fail
        let _ = writeln!(s, "interpretation={}", self.interpretation);
        let _ = writeln!(s, "topology={}", self.topology);
        let _ = writeln!(s, "max_sqn={}", self.max_sqn);
        let _ = writeln!(s, "ttl_max={}", self.ttl_max);
        let _ = writeln!(s, "window_size={}", self.window_size);
        let _ = writeln!(s, "bi_link_timeout={}", self.bi_link_timeout);
        let _ = writeln!(s, "buffer_capacity={}", self.buffer_capacity);
        let _ = writeln!(s, "budgets={}", budgets.join(","));
        let _ = writeln!(s, "state_cap={}", self.state_cap);
        let _ = writeln!(s, "min_ogmtime={}", t.min_ogmtime);
        let _ = writeln!(s, "max_ogmtime={}", t.max_ogmtime);
        let _ = writeln!(s, "max_response={}", t.max_response);
        let _ = writeln!(s, "horizon={}", t.horizon);
        let _ = writeln!(s, "runs={}", t.runs);
        let _ = writeln!(s, "seed={}", t.seed);
        let _ = writeln!(s, "sample_period={}", t.sample_period);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out={}", out.display());
        }
        let _ = writeln!(s, "format={}", self.format.as_str());
        s
    }

    pub fn protocol_params(&self, n_nodes: usize) -> ProtocolParams {
        ProtocolParams {
            n_nodes,
            max_sqn: self.max_sqn,
            ttl_max: self.ttl_max,
            window_size: self.window_size,
            bi_link_timeout: self.bi_link_timeout,
            buffer_capacity: self.buffer_capacity,
            interpretation: self.interpretation,
        }
    }

    /// Build the topology and check every parameter against it.
    pub fn resolve(&self) -> Result<(ProtocolParams, Topology), ConfigError> {
        let topology = Topology::build(&self.topology)?;
        let params = self.protocol_params(topology.len());
        params.validate()?;
        self.timed.validate()?;
        if !self.budgets.is_empty() && self.budgets.len() != topology.len() {
            return Err(ConfigError::invalid(
                "budgets",
                format!("{} entries for {} nodes", self.budgets.len(), topology.len()),
            ));
        }
        if self.state_cap == 0 {
            return Err(ConfigError::invalid("state_cap", "must be at least 1"));
        }
        Ok((params, topology))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ScenarioConfig::parse("# comment\n topology = grid_center:4x4 \ninterpretation=alternative # inline\nseed=7\n").unwrap();
        assert_eq!(cfg.topology, TopologySpec::GridCenter(4, 4));
        assert_eq!(cfg.interpretation, Interpretation::Alternative);
        assert_eq!(cfg.timed.seed, 7);
        assert_eq!(cfg.window_size, 5);
        let (p, t) = cfg.resolve().unwrap();
        assert_eq!(p.n_nodes, 17);
        assert_eq!(t.len(), 17);
    }

    #[test]
    fn errors_name_the_field() {
        let e = ScenarioConfig::parse("window_size=0\n").unwrap().resolve().unwrap_err();
        assert_eq!(e.field(), Some("window_size"));
        let e = ScenarioConfig::parse("ttl_max=abc\n").unwrap_err();
        assert_eq!(e.field(), Some("ttl_max"));
        let e = ScenarioConfig::parse("colour=blue\n").unwrap_err();
        assert_eq!(e.field(), Some("colour"));
        let e = ScenarioConfig::parse("budgets=1,1\n").unwrap().resolve().unwrap_err();
        assert_eq!(e.field(), Some("budgets"));
        assert!(matches!(
            ScenarioConfig::parse("nonsense\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ScenarioConfig::parse("topology=grid:3x5\nbudgets=1,0,2\nmax_response=0.25\nout=results/x\nformat=json\n").unwrap();
        let again = ScenarioConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
        cfg.out = None;
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
