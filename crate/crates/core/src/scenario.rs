//! JSON scenario files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "seller": 0,
//!   "agents": [
//!     { "id": 0, "neighbors": [1], "valuation": "0" },
//!     { "id": 1, "label": "A", "neighbors": [0], "valuation": "2.5" }
//!   ],
//!   "declared_profile": [ { "id": 1, "bid": "2", "diffusion_set": [] } ]
//! }
//! ```
//!
//! Valuations and bids are decimal strings (plain integers are accepted
//! too) and are quantized to the requested precision on load. Buyers missing
//! from `declared_profile` act truthfully.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::model::{Action, ActionProfile, AgentId, ModelError, SocialNetwork};
use crate::value::{Value, ValueError, MAX_DECIMALS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario JSON")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("agent ids must be exactly 0..{n} with no repeats; found {found}")]
    Ids { n: usize, found: AgentId },
    #[error("declared profile mentions agent {0} twice")]
    DuplicateDeclaration(AgentId),
    #[error("bad decimal for agent {agent}")]
    Decimal { agent: AgentId, source: ValueError },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Decimal kept as written until it is quantized on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Decimal(pub String);

impl From<Value> for Decimal {
    fn from(v: Value) -> Self {
        Decimal(v.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DecimalVisitor;

        impl Visitor<'_> for DecimalVisitor {
            type Value = Decimal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
                Ok(Decimal(v.to_string()))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
                Ok(Decimal(v.to_string()))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
                Ok(Decimal(v.to_string()))
            }
        }

        deserializer.deserialize_any(DecimalVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentEntry {
    pub id: AgentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub neighbors: Vec<AgentId>,
    pub valuation: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredAction {
    pub id: AgentId,
    /// `None` is the null action.
    pub bid: Option<Decimal>,
    #[serde(default)]
    pub diffusion_set: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seller: AgentId,
    pub agents: Vec<AgentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_profile: Option<Vec<DeclaredAction>>,
}

/// A loaded, validated scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: Option<String>,
    pub network: SocialNetwork,
    pub labels: Vec<Option<String>>,
    /// Declared actions before the feasibility transform.
    pub declared: Option<ActionProfile>,
}

impl Scenario {
    /// Display name of an agent: its label, or its id.
    pub fn label(&self, agent: AgentId) -> String {
        match self.labels.get(agent.index()) {
            Some(Some(l)) => l.clone(),
            _ => agent.to_string(),
        }
    }

    /// Looks an agent up by label, falling back to a numeric id.
    pub fn agent(&self, name: &str) -> Option<AgentId> {
        self.labels
            .iter()
            .position(|l| l.as_deref() == Some(name))
            .map(AgentId::new)
            .or_else(|| name.parse::<u32>().ok().map(AgentId).filter(|&a| self.network.contains(a)))
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Schema(file.schema_version));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail") + "\n"
    }

    /// Canonical file for a network: agents and neighbor lists sorted,
    /// valuations in canonical decimal form.
    pub fn from_network(net: &SocialNetwork, labels: &[Option<String>], declared: Option<&ActionProfile>) -> Self {
        let agents = net
            .agents()
            .map(|a| AgentEntry {
                id: a,
                label: labels.get(a.index()).cloned().flatten(),
                neighbors: net.neighbors(a).to_vec(),
                valuation: net.valuation(a).into(),
            })
            .collect();
        let declared_profile = declared.map(|p| {
            net.buyers()
                .map(|b| match p.action(b) {
                    Action::Null => DeclaredAction { id: b, bid: None, diffusion_set: Vec::new() },
                    Action::Bid { value, diffusion } => {
                        DeclaredAction { id: b, bid: Some((*value).into()), diffusion_set: diffusion.clone() }
                    }
                })
                .collect()
        });
        ScenarioFile { schema_version: SCHEMA_VERSION, name: None, seller: net.seller(), agents, declared_profile }
    }

    /// Validates and quantizes to `precision` decimal places.
    pub fn load(&self, precision: u32) -> Result<Scenario, ScenarioError> {
        let n = self.agents.len();
        let mut slots: Vec<Option<&AgentEntry>> = vec![None; n];
        for entry in &self.agents {
            match slots.get_mut(entry.id.index()) {
                Some(slot @ None) => *slot = Some(entry),
                _ => return Err(ScenarioError::Ids { n, found: entry.id }),
            }
        }
        let entries: Vec<&AgentEntry> = slots.into_iter().map(|s| s.expect("all ids seen")).collect();
        let parse = |agent: AgentId, d: &Decimal| {
            Value::parse_quantized(&d.0, precision).map_err(|source| ScenarioError::Decimal { agent, source })
        };
        let neighbors = entries.iter().map(|e| e.neighbors.clone()).collect();
        let valuations = entries.iter().map(|e| parse(e.id, &e.valuation)).collect::<Result<Vec<_>, _>>()?;
        let network = SocialNetwork::new(self.seller, neighbors, valuations)?;
        let labels = entries.iter().map(|e| e.label.clone()).collect();

        let declared = match &self.declared_profile {
            None => None,
            Some(list) => {
                let mut by_id = BTreeMap::new();
                for d in list {
                    network.check_buyer(d.id)?;
                    if by_id.insert(d.id, d).is_some() {
                        return Err(ScenarioError::DuplicateDeclaration(d.id));
                    }
                }
                let mut actions = Vec::with_capacity(n);
                for a in network.agents() {
                    let action = if a == network.seller() {
                        Action::Null
                    } else if let Some(d) = by_id.get(&a) {
                        match &d.bid {
                            None => Action::Null,
                            Some(b) => Action::bid(parse(a, b)?, d.diffusion_set.clone()),
                        }
                    } else {
                        Action::bid(network.valuation(a), network.neighbors(a).to_vec())
                    };
                    actions.push(action);
                }
                Some(ActionProfile::new(&network, actions)?)
            }
        };
        Ok(Scenario { name: self.name.clone(), network, labels, declared })
    }
}

/// Parses and loads at full precision.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    ScenarioFile::from_json(text)?.load(MAX_DECIMALS)
}

/// Scenarios shipped with the crate, by short name.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "line5" => Some(include_str!("../scenarios/line5.json")),
        "example12" => Some(include_str!("../scenarios/example12.json")),
        "single" => Some(include_str!("../scenarios/single.json")),
        _ => None,
    }
}
