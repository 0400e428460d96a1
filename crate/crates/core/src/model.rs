//! Agents, the true social network, buyer actions and feasibility.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::Outcome;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a network needs a seller and at least one buyer, got {0} agents")]
    TooFewAgents(usize),
    #[error("agent {0} is out of range for a network of {1} agents")]
    UnknownAgent(AgentId, usize),
    #[error("agent {0} lists itself as a neighbor")]
    SelfLoop(AgentId),
    #[error("neighbor relation is not symmetric: {0} lists {1} but not vice versa")]
    Asymmetric(AgentId, AgentId),
    #[error("agent {0} has no neighbors")]
    Isolated(AgentId),
    #[error("agent {0} has a negative valuation {1}")]
    NegativeValuation(AgentId, Value),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("agent {0} is the seller, not a buyer")]
    NotABuyer(AgentId),
    #[error("buyer {buyer} diffuses to {target}, who is not a neighbor")]
    NotANeighbor { buyer: AgentId, target: AgentId },
    #[error("buyer {0} reports a negative valuation {1}")]
    NegativeBid(AgentId, Value),
}

/// Dense index into the agent table.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn new(index: usize) -> Self {
        AgentId(u32::try_from(index).expect("agent index exceeds u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// The true, undirected communication graph together with private valuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialNetwork {
    seller: AgentId,
    neighbors: Vec<Vec<AgentId>>,
    /// Indexed by agent; the seller's slot holds the reserve price.
    valuations: Vec<Value>,
}

impl SocialNetwork {
    /// Validates and normalizes (sorts, dedups) the neighbor lists.
    pub fn new(seller: AgentId, mut neighbors: Vec<Vec<AgentId>>, valuations: Vec<Value>) -> Result<Self, ModelError> {
        let n = neighbors.len();
        if n < 2 {
            return Err(ModelError::TooFewAgents(n));
        }
        if valuations.len() != n {
            return Err(ModelError::LengthMismatch { expected: n, got: valuations.len() });
        }
        if seller.index() >= n {
            return Err(ModelError::UnknownAgent(seller, n));
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        for (i, list) in neighbors.iter().enumerate() {
            let me = AgentId::new(i);
            if list.is_empty() {
                return Err(ModelError::Isolated(me));
            }
            for &j in list {
                if j.index() >= n {
                    return Err(ModelError::UnknownAgent(j, n));
                }
                if j == me {
                    return Err(ModelError::SelfLoop(me));
                }
                if neighbors[j.index()].binary_search(&me).is_err() {
                    return Err(ModelError::Asymmetric(me, j));
                }
            }
        }
        for (i, &v) in valuations.iter().enumerate() {
            if v.is_negative() {
                return Err(ModelError::NegativeValuation(AgentId::new(i), v));
            }
        }
        Ok(SocialNetwork { seller, neighbors, valuations })
    }

    /// Builds a network from an undirected edge list. The seller's reserve is zero.
    pub fn from_edges(
        n: usize,
        seller: AgentId,
        edges: &[(AgentId, AgentId)],
        buyer_valuations: impl Fn(AgentId) -> Value,
    ) -> Result<Self, ModelError> {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            for x in [a, b] {
                if x.index() >= n {
                    return Err(ModelError::UnknownAgent(x, n));
                }
            }
            neighbors[a.index()].push(b);
            neighbors[b.index()].push(a);
        }
        let valuations = (0..n)
            .map(|i| {
                let id = AgentId::new(i);
                if id == seller {
                    Value::ZERO
                } else {
                    buyer_valuations(id)
                }
            })
            .collect();
        SocialNetwork::new(seller, neighbors, valuations)
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn seller(&self) -> AgentId {
        self.seller
    }

    pub fn neighbors(&self, agent: AgentId) -> &[AgentId] {
        &self.neighbors[agent.index()]
    }

    pub fn valuation(&self, agent: AgentId) -> Value {
        self.valuations[agent.index()]
    }

    pub fn seller_reserve(&self) -> Value {
        self.valuations[self.seller.index()]
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        agent.index() < self.n()
    }

    pub fn is_buyer(&self, agent: AgentId) -> bool {
        self.contains(agent) && agent != self.seller
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.n()).map(AgentId::new)
    }

    pub fn buyers(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.agents().filter(move |&a| a != self.seller)
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.agents().flat_map(move |a| self.neighbors(a).iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    /// Same topology, new valuations (seller slot included).
    pub fn with_valuations(&self, valuations: Vec<Value>) -> Result<Self, ModelError> {
        SocialNetwork::new(self.seller, self.neighbors.clone(), valuations)
    }

    pub fn valuations(&self) -> &[Value] {
        &self.valuations
    }

    pub(crate) fn check_buyer(&self, agent: AgentId) -> Result<(), ModelError> {
        if !self.contains(agent) {
            Err(ModelError::UnknownAgent(agent, self.n()))
        } else if agent == self.seller {
            Err(ModelError::NotABuyer(agent))
        } else {
            Ok(())
        }
    }
}

/// A buyer's declared action: stay out, or report a valuation and forward the
/// auction to a subset of its neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum Action {
    #[default]
    Null,
    Bid {
        value: Value,
        diffusion: Vec<AgentId>,
    },
}

impl Action {
    /// Normalizes the diffusion set to sorted, duplicate-free order.
    pub fn bid(value: Value, mut diffusion: Vec<AgentId>) -> Self {
        diffusion.sort_unstable();
        diffusion.dedup();
        Action::Bid { value, diffusion }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Action::Null)
    }

    pub fn reported_value(&self) -> Option<Value> {
        match self {
            Action::Null => None,
            Action::Bid { value, .. } => Some(*value),
        }
    }

    pub fn diffusion_set(&self) -> &[AgentId] {
        match self {
            Action::Null => &[],
            Action::Bid { diffusion, .. } => diffusion,
        }
    }
}

/// One action per agent (the seller's slot is always `Null`), with the
/// feasibility status computed at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionProfile {
    actions: Vec<Action>,
    feasible: bool,
}

impl ActionProfile {
    pub fn new(net: &SocialNetwork, actions: Vec<Action>) -> Result<Self, ModelError> {
        if actions.len() != net.n() {
            return Err(ModelError::LengthMismatch { expected: net.n(), got: actions.len() });
        }
        for (i, action) in actions.iter().enumerate() {
            let id = AgentId::new(i);
            let Action::Bid { value, diffusion } = action else { continue };
            if id == net.seller() {
                return Err(ModelError::NotABuyer(id));
            }
            if value.is_negative() {
                return Err(ModelError::NegativeBid(id, *value));
            }
            let mine = net.neighbors(id);
            if let Some(&target) = diffusion.iter().find(|t| mine.binary_search(t).is_err()) {
                return Err(ModelError::NotANeighbor { buyer: id, target });
            }
        }
        let reached = reached_from_seller(net, &actions);
        let feasible = actions.iter().zip(&reached).all(|(a, &r)| a.is_null() || r);
        Ok(ActionProfile { actions, feasible })
    }

    /// Everybody stays out.
    pub fn all_null(net: &SocialNetwork) -> Self {
        ActionProfile { actions: vec![Action::Null; net.n()], feasible: true }
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, agent: AgentId) -> &Action {
        &self.actions[agent.index()]
    }

    /// Cached feasibility status.
    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn participants(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.actions.iter().enumerate().filter(|(_, a)| !a.is_null()).map(|(i, _)| AgentId::new(i))
    }

    pub fn bid(&self, agent: AgentId) -> Option<Value> {
        self.actions[agent.index()].reported_value()
    }

    /// Reported bids per agent, `None` for non-participants.
    pub fn bids(&self) -> Vec<Option<Value>> {
        self.actions.iter().map(Action::reported_value).collect()
    }

    /// Replaces one buyer's action. The result is not feasibility-transformed.
    pub fn with_action(&self, net: &SocialNetwork, buyer: AgentId, action: Action) -> Result<Self, ModelError> {
        net.check_buyer(buyer)?;
        let mut actions = self.actions.clone();
        actions[buyer.index()] = action;
        ActionProfile::new(net, actions)
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }
}

/// Which agents receive the auction information. The seller informs all of
/// its neighbors; a buyer forwards only if it participates.
pub(crate) fn reached_from_seller(net: &SocialNetwork, actions: &[Action]) -> Vec<bool> {
    let mut reached = vec![false; net.n()];
    let seller = net.seller();
    reached[seller.index()] = true;
    let mut queue = VecDeque::from([seller]);
    while let Some(u) = queue.pop_front() {
        let out = if u == seller { net.neighbors(u) } else { actions[u.index()].diffusion_set() };
        for &v in out {
            if !reached[v.index()] {
                reached[v.index()] = true;
                if !actions[v.index()].is_null() {
                    queue.push_back(v);
                }
            }
        }
    }
    reached
}

/// Every buyer reports its true valuation and forwards to all neighbors;
/// buyers the seller cannot reach are set to `Null`.
pub fn truthful_profile(net: &SocialNetwork) -> ActionProfile {
    let actions = net
        .agents()
        .map(|a| {
            if a == net.seller() {
                Action::Null
            } else {
                Action::Bid { value: net.valuation(a), diffusion: net.neighbors(a).to_vec() }
            }
        })
        .collect();
    let raw = ActionProfile::new(net, actions).expect("truthful actions are always well-formed");
    feasibility_transform(net, &raw)
}

/// Forces every buyer who cannot receive the information to `Null`.
///
/// Reachability is a single BFS from the seller that only expands
/// participating buyers, which is already a fixed point: dropping
/// unreached buyers removes no edge into the reached set.
pub fn feasibility_transform(net: &SocialNetwork, profile: &ActionProfile) -> ActionProfile {
    if profile.feasible {
        return profile.clone();
    }
    let reached = reached_from_seller(net, &profile.actions);
    let actions =
        profile.actions.iter().zip(&reached).map(|(a, &r)| if r { a.clone() } else { Action::Null }).collect();
    ActionProfile { actions, feasible: true }
}

/// Recomputes feasibility from scratch, ignoring the cached flag.
pub fn is_feasible(net: &SocialNetwork, profile: &ActionProfile) -> bool {
    let reached = reached_from_seller(net, &profile.actions);
    profile.actions.iter().zip(&reached).all(|(a, &r)| a.is_null() || r)
}

/// Buyers that the transform would force to `Null`.
pub fn forced_null(net: &SocialNetwork, profile: &ActionProfile) -> Vec<AgentId> {
    let reached = reached_from_seller(net, &profile.actions);
    profile.participants().filter(|a| !reached[a.index()]).collect()
}

/// Quasilinear utility: true valuation if allocated, minus payment.
pub fn utility(net: &SocialNetwork, buyer: AgentId, outcome: &Outcome) -> Result<Value, ModelError> {
    net.check_buyer(buyer)?;
    if outcome.payments().len() != net.n() {
        return Err(ModelError::LengthMismatch { expected: net.n(), got: outcome.payments().len() });
    }
    let gain = if outcome.winner() == Some(buyer) { net.valuation(buyer) } else { Value::ZERO };
    Ok(gain - outcome.payment(buyer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::line_network;

    fn id(i: u32) -> AgentId {
        AgentId(i)
    }

    fn v(u: i64) -> Value {
        Value::from_units(u)
    }

    /// s=0 - {1,2}, 1-3, 2-3
    fn diamond() -> SocialNetwork {
        SocialNetwork::from_edges(4, id(0), &[(id(0), id(1)), (id(0), id(2)), (id(1), id(3)), (id(2), id(3))], |_| v(1))
            .unwrap()
    }

    #[test]
    fn validation_rejects_bad_networks() {
        let asym = SocialNetwork::new(id(0), vec![vec![id(1)], vec![]], vec![v(0), v(0)]);
        assert!(matches!(asym, Err(ModelError::Isolated(_)) | Err(ModelError::Asymmetric(..))));
        let self_loop = SocialNetwork::new(id(0), vec![vec![id(1)], vec![id(0), id(1)]], vec![v(0), v(0)]);
        assert_eq!(self_loop, Err(ModelError::SelfLoop(id(1))));
        let neg = SocialNetwork::new(id(0), vec![vec![id(1)], vec![id(0)]], vec![v(0), v(-1)]);
        assert_eq!(neg, Err(ModelError::NegativeValuation(id(1), v(-1))));
        assert_eq!(SocialNetwork::new(id(0), vec![vec![]], vec![v(0)]), Err(ModelError::TooFewAgents(1)));
        let one_way = SocialNetwork::new(id(0), vec![vec![id(1), id(2)], vec![id(0)], vec![id(1)]], vec![v(0); 3]);
        assert_eq!(one_way, Err(ModelError::Asymmetric(id(0), id(2))));
    }

    #[test]
    fn truthful_line_is_feasible() {
        let net = line_network(3, &[v(0), v(0), v(1)]).unwrap();
        let p = truthful_profile(&net);
        assert!(p.is_feasible());
        for b in net.buyers() {
            assert_eq!(p.action(b), &Action::bid(net.valuation(b), net.neighbors(b).to_vec()));
        }
    }

    #[test]
    fn unreachable_component_becomes_null() {
        // 0-1 and a separate 2-3 component.
        let net = SocialNetwork::from_edges(4, id(0), &[(id(0), id(1)), (id(2), id(3))], |_| v(5)).unwrap();
        let p = truthful_profile(&net);
        assert!(!p.action(id(1)).is_null());
        assert!(p.action(id(2)).is_null());
        assert!(p.action(id(3)).is_null());
        assert!(is_feasible(&net, &p));
    }

    #[test]
    fn silent_intermediary_cuts_the_line() {
        let net = line_network(3, &[v(0), v(0), v(1)]).unwrap();
        let p = truthful_profile(&net).with_action(&net, id(1), Action::bid(v(0), vec![])).unwrap();
        assert!(!p.is_feasible());
        assert_eq!(forced_null(&net, &p), vec![id(2), id(3)]);
        let f = feasibility_transform(&net, &p);
        assert!(f.action(id(2)).is_null() && f.action(id(3)).is_null());
        assert!(!f.action(id(1)).is_null());
        assert!(is_feasible(&net, &f));
    }

    #[test]
    fn diamond_keeps_alternate_route() {
        let net = diamond();
        let p = truthful_profile(&net)
            .with_action(&net, id(1), Action::bid(v(1), vec![]))
            .unwrap()
            .with_action(&net, id(2), Action::bid(v(1), vec![id(3)]))
            .unwrap();
        let f = feasibility_transform(&net, &p);
        assert_eq!(f, p);
        assert!(!f.action(id(3)).is_null());
    }

    #[test]
    fn all_null_is_feasible() {
        let net = diamond();
        let p = ActionProfile::new(&net, vec![Action::Null; 4]).unwrap();
        assert!(p.is_feasible());
        assert_eq!(p, ActionProfile::all_null(&net));
    }

    #[test]
    fn profile_validation() {
        let net = diamond();
        let mut actions = truthful_profile(&net).into_actions();
        actions[1] = Action::bid(v(1), vec![id(2)]);
        assert_eq!(
            ActionProfile::new(&net, actions.clone()),
            Err(ModelError::NotANeighbor { buyer: id(1), target: id(2) })
        );
        actions[1] = Action::bid(v(-1), vec![]);
        assert_eq!(ActionProfile::new(&net, actions.clone()), Err(ModelError::NegativeBid(id(1), v(-1))));
        actions[1] = Action::Null;
        actions[0] = Action::bid(v(1), vec![]);
        assert_eq!(ActionProfile::new(&net, actions), Err(ModelError::NotABuyer(id(0))));
    }

    #[test]
    fn null_buyers_do_not_forward() {
        // 0-1-2: buyer 1 is Null, so 2 never hears about the auction.
        let net = line_network(2, &[v(1), v(1)]).unwrap();
        let p = ActionProfile::new(&net, vec![Action::Null, Action::Null, Action::bid(v(1), vec![id(1)])]).unwrap();
        assert!(!p.is_feasible());
        assert_eq!(feasibility_transform(&net, &p), ActionProfile::all_null(&net));
    }
}
