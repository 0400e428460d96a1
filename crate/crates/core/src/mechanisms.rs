//! The three single-item mechanisms: second price among the seller's
//! neighbors, VCG extended to diffusion graphs, and the information
//! diffusion mechanism (IDM).
//!
//! All three evaluate against a [`DiffusionAnalysis`] and a vector of
//! reported bids, so callers that sweep many bids over one diffusion
//! structure can reuse the analysis.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_diffusion_graph, dominator_analysis, DiffusionAnalysis, GraphError};
use crate::model::{ActionProfile, AgentId, SocialNetwork};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("mechanisms only run on feasible profiles; apply the feasibility transform first")]
    Infeasible,
    #[error("profile has {got} actions but the network has {expected} agents")]
    SizeMismatch { expected: usize, got: usize },
    #[error("buyer classification needs an IDM outcome, got {0}")]
    NotIdm(MechanismKind),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown mechanism `{0}` (expected idm, vcg or spl)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    SecondPriceLocal,
    NetworkVcg,
    Idm,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 3] =
        [MechanismKind::Idm, MechanismKind::NetworkVcg, MechanismKind::SecondPriceLocal];

    pub fn short_name(self) -> &'static str {
        match self {
            MechanismKind::SecondPriceLocal => "spl",
            MechanismKind::NetworkVcg => "vcg",
            MechanismKind::Idm => "idm",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for MechanismKind {
    type Err = MechanismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "idm" => Ok(MechanismKind::Idm),
            "vcg" | "network-vcg" => Ok(MechanismKind::NetworkVcg),
            "spl" | "second-price-local" | "second-price" => Ok(MechanismKind::SecondPriceLocal),
            _ => Err(MechanismError::UnknownKind(s.to_string())),
        }
    }
}

/// How to pick among several buyers tied for the highest report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestId,
    Seeded(u64),
}

impl TieBreak {
    fn pick(self, tied: &[AgentId]) -> Option<AgentId> {
        match (self, tied) {
            (_, []) => None,
            (TieBreak::LowestId, _) | (_, [_]) => tied.iter().copied().min(),
            (TieBreak::Seeded(seed), _) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Some(tied[rng.gen_range(0..tied.len())])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuyerStatus {
    Winner,
    OnPath,
    Unlucky,
    Normal,
    NonParticipant,
}

impl fmt::Display for BuyerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuyerStatus::Winner => "winner",
            BuyerStatus::OnPath => "on-path",
            BuyerStatus::Unlucky => "unlucky",
            BuyerStatus::Normal => "normal",
            BuyerStatus::NonParticipant => "non-participant",
        })
    }
}

/// Allocation and payments of one mechanism run. Vectors are indexed by
/// agent id; the seller's slot is always zero / `NonParticipant`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub mechanism: MechanismKind,
    pub winner: Option<AgentId>,
    /// Highest reporter after tie-breaking (`m`); IDM's unlucky set hangs off it.
    pub top_bidder: Option<AgentId>,
    pub payments: Vec<Value>,
    pub revenue: Value,
    /// Winner's true valuation, zero without a winner.
    pub welfare: Value,
    pub status: Vec<BuyerStatus>,
}

impl Outcome {
    fn empty(mechanism: MechanismKind, n: usize) -> Self {
        Outcome {
            mechanism,
            winner: None,
            top_bidder: None,
            payments: vec![Value::ZERO; n],
            revenue: Value::ZERO,
            welfare: Value::ZERO,
            status: vec![BuyerStatus::NonParticipant; n],
        }
    }

    pub fn winner(&self) -> Option<AgentId> {
        self.winner
    }

    pub fn payments(&self) -> &[Value] {
        &self.payments
    }

    pub fn payment(&self, agent: AgentId) -> Value {
        self.payments[agent.index()]
    }

    pub fn status(&self, agent: AgentId) -> BuyerStatus {
        self.status[agent.index()]
    }

    pub fn is_allocated(&self, agent: AgentId) -> bool {
        self.winner == Some(agent)
    }

    fn finish(mut self, net: &SocialNetwork) -> Self {
        self.revenue = self.payments.iter().sum();
        self.welfare = self.winner.map_or(Value::ZERO, |w| net.valuation(w));
        self
    }
}

/// `v*` over the complement of any dependent set in O(1): prefix and suffix
/// maxima of the bids laid out in dominator-tree preorder, where every
/// dependent set is one contiguous interval.
pub struct OutsideMax {
    prefix: Vec<Value>,
    suffix: Vec<Value>,
}

impl OutsideMax {
    pub fn new(analysis: &DiffusionAnalysis, bids: &[Option<Value>], floor: Value) -> Self {
        let order = analysis.preorder();
        let bid = |k: usize| bids[order[k].index()].unwrap_or(floor);
        let mut prefix = Vec::with_capacity(order.len() + 1);
        prefix.push(floor);
        for k in 0..order.len() {
            let last = prefix[k];
            prefix.push(last.max(bid(k)));
        }
        let mut suffix = vec![floor; order.len() + 1];
        for k in (0..order.len()).rev() {
            suffix[k] = suffix[k + 1].max(bid(k));
        }
        OutsideMax { prefix, suffix }
    }

    /// `v*_{-d_i}`: highest report among buyers outside `d_i`, or the floor.
    pub fn without(&self, analysis: &DiffusionAnalysis, i: AgentId) -> Value {
        let pre = analysis.preorder_index(i).expect("participant");
        let end = analysis.subtree_end(i).expect("participant");
        self.prefix[pre].max(self.suffix[end])
    }

    /// Highest report overall.
    pub fn overall(&self) -> Value {
        self.suffix[0]
    }
}

/// A mechanism together with its tie-breaking rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mechanism {
    pub kind: MechanismKind,
    pub tie_break: TieBreak,
}

impl Mechanism {
    pub fn new(kind: MechanismKind) -> Self {
        Mechanism { kind, tie_break: TieBreak::LowestId }
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    /// Runs on a feasible profile.
    pub fn run(&self, net: &SocialNetwork, profile: &ActionProfile) -> Result<Outcome, MechanismError> {
        if profile.actions().len() != net.n() {
            return Err(MechanismError::SizeMismatch { expected: net.n(), got: profile.actions().len() });
        }
        if !profile.is_feasible() {
            return Err(MechanismError::Infeasible);
        }
        let graph = build_diffusion_graph(net, profile)?;
        let analysis = dominator_analysis(&graph);
        Ok(self.evaluate(net, &analysis, &profile.bids()))
    }

    /// Evaluates against a precomputed analysis. `bids[i]` must be `Some`
    /// exactly for the analysis' participants.
    pub fn evaluate(&self, net: &SocialNetwork, analysis: &DiffusionAnalysis, bids: &[Option<Value>]) -> Outcome {
        debug_assert_eq!(bids.len(), net.n());
        debug_assert!(net.agents().all(|a| bids[a.index()].is_some() == analysis.is_participant(a)));
        match self.kind {
            MechanismKind::SecondPriceLocal => spl_outcome(net, bids, self.tie_break),
            MechanismKind::NetworkVcg => vcg_outcome(net, analysis, bids, self.tie_break),
            MechanismKind::Idm => idm_outcome(net, analysis, bids, self.tie_break),
        }
    }
}

fn top_bidder(
    candidates: impl Iterator<Item = AgentId>,
    bids: &[Option<Value>],
    floor: Value,
    tie_break: TieBreak,
) -> Option<AgentId> {
    let mut best = floor;
    let mut tied: Vec<AgentId> = Vec::new();
    for a in candidates {
        let Some(b) = bids[a.index()] else { continue };
        if b > best || (tied.is_empty() && b == best) {
            best = b;
            tied.clear();
            tied.push(a);
        } else if b == best {
            tied.push(a);
        }
    }
    tie_break.pick(&tied)
}

fn spl_outcome(net: &SocialNetwork, bids: &[Option<Value>], tie_break: TieBreak) -> Outcome {
    let mut out = Outcome::empty(MechanismKind::SecondPriceLocal, net.n());
    for a in net.buyers().filter(|a| bids[a.index()].is_some()) {
        out.status[a.index()] = BuyerStatus::Normal;
    }
    let reserve = net.seller_reserve();
    let local = net.neighbors(net.seller());
    let Some(w) = top_bidder(local.iter().copied(), bids, reserve, tie_break) else {
        return out.finish(net);
    };
    let price = local.iter().filter(|&&a| a != w).filter_map(|a| bids[a.index()]).fold(reserve, Value::max);
    out.winner = Some(w);
    out.top_bidder = Some(w);
    out.payments[w.index()] = price;
    out.status[w.index()] = BuyerStatus::Winner;
    out.finish(net)
}

fn vcg_outcome(
    net: &SocialNetwork,
    analysis: &DiffusionAnalysis,
    bids: &[Option<Value>],
    tie_break: TieBreak,
) -> Outcome {
    let mut out = Outcome::empty(MechanismKind::NetworkVcg, net.n());
    let reserve = net.seller_reserve();
    let participants: Vec<AgentId> = analysis.preorder()[1..].to_vec();
    for &a in &participants {
        out.status[a.index()] = BuyerStatus::Normal;
    }
    let outside = OutsideMax::new(analysis, bids, reserve);
    let winner = top_bidder(participants.iter().copied(), bids, reserve, tie_break);
    // W(a'): efficient welfare; the seller keeps the item below the reserve.
    let welfare_all = winner.map_or(reserve, |w| bids[w.index()].expect("participant"));
    for &i in &participants {
        let own = if Some(i) == winner { bids[i.index()].expect("participant") } else { Value::ZERO };
        out.payments[i.index()] = outside.without(analysis, i) - (welfare_all - own);
    }
    if let Some(w) = winner {
        out.winner = Some(w);
        out.top_bidder = Some(w);
        out.status[w.index()] = BuyerStatus::Winner;
        for c in analysis.critical_nodes(w).expect("participant") {
            out.status[c.index()] = BuyerStatus::OnPath;
        }
    }
    out.finish(net)
}

fn idm_outcome(
    net: &SocialNetwork,
    analysis: &DiffusionAnalysis,
    bids: &[Option<Value>],
    tie_break: TieBreak,
) -> Outcome {
    let mut out = Outcome::empty(MechanismKind::Idm, net.n());
    let reserve = net.seller_reserve();
    let participants = &analysis.preorder()[1..];
    for &a in participants {
        out.status[a.index()] = BuyerStatus::Normal;
    }
    let Some(m) = top_bidder(participants.iter().copied(), bids, reserve, tie_break) else {
        return out.finish(net);
    };
    let outside = OutsideMax::new(analysis, bids, reserve);
    let chain = analysis.sequence(m).expect("participant");
    let bid = |a: AgentId| bids[a.index()].expect("participant");

    // First buyer on C_m, from the seller side, whose report is the highest
    // once its successor's dependent set is removed; m always qualifies.
    let w_pos = (0..chain.len() - 1)
        .find(|&t| bid(chain[t]) == outside.without(analysis, chain[t + 1]))
        .unwrap_or(chain.len() - 1);
    let w = chain[w_pos];

    for t in 0..w_pos {
        let (i, next) = (chain[t], chain[t + 1]);
        out.payments[i.index()] = outside.without(analysis, i) - outside.without(analysis, next);
    }
    out.payments[w.index()] = outside.without(analysis, w);
    out.winner = Some(w);
    out.top_bidder = Some(m);
    apply_idm_status(&mut out.status, analysis, &chain, w_pos);
    out.finish(net)
}

fn apply_idm_status(status: &mut [BuyerStatus], analysis: &DiffusionAnalysis, chain: &[AgentId], w_pos: usize) {
    let w = chain[w_pos];
    let m = *chain.last().expect("non-empty chain");
    let unlucky_root = if w != m { chain[w_pos + 1] } else { m };
    let pre = analysis.preorder_index(unlucky_root).expect("participant");
    let end = analysis.subtree_end(unlucky_root).expect("participant");
    for &a in &analysis.preorder()[pre..end] {
        status[a.index()] = BuyerStatus::Unlucky;
    }
    for &a in &chain[..w_pos] {
        status[a.index()] = BuyerStatus::OnPath;
    }
    status[w.index()] = BuyerStatus::Winner;
}

/// Runs `kind` with lowest-id tie-breaking.
pub fn run(kind: MechanismKind, net: &SocialNetwork, profile: &ActionProfile) -> Result<Outcome, MechanismError> {
    Mechanism::new(kind).run(net, profile)
}

/// Second-price auction among the seller's participating neighbors; all
/// diffusion is ignored.
pub fn second_price_local(net: &SocialNetwork, profile: &ActionProfile) -> Result<Outcome, MechanismError> {
    run(MechanismKind::SecondPriceLocal, net, profile)
}

/// VCG on the diffusion graph: efficient allocation, and each participant
/// pays `W(a'_{-d_i}) - (W(a') - π_i v'_i)`.
pub fn vcg_network(net: &SocialNetwork, profile: &ActionProfile) -> Result<Outcome, MechanismError> {
    run(MechanismKind::NetworkVcg, net, profile)
}

/// Information diffusion mechanism.
pub fn idm(net: &SocialNetwork, profile: &ActionProfile) -> Result<Outcome, MechanismError> {
    run(MechanismKind::Idm, net, profile)
}

/// Recomputes the IDM status classes (winner, on-path, unlucky, normal,
/// non-participant) of an IDM outcome.
pub fn classify_buyers(
    net: &SocialNetwork,
    profile: &ActionProfile,
    idm_outcome: &Outcome,
) -> Result<Vec<BuyerStatus>, MechanismError> {
    if idm_outcome.mechanism != MechanismKind::Idm {
        return Err(MechanismError::NotIdm(idm_outcome.mechanism));
    }
    if !profile.is_feasible() {
        return Err(MechanismError::Infeasible);
    }
    let graph = build_diffusion_graph(net, profile)?;
    let analysis = dominator_analysis(&graph);
    let mut status = vec![BuyerStatus::NonParticipant; net.n()];
    for &a in &analysis.preorder()[1..] {
        status[a.index()] = BuyerStatus::Normal;
    }
    if let (Some(w), Some(m)) = (idm_outcome.winner, idm_outcome.top_bidder) {
        let chain = analysis.sequence(m)?;
        let w_pos = chain.iter().position(|&c| c == w).ok_or(GraphError::NotAParticipant(w))?;
        apply_idm_status(&mut status, &analysis, &chain, w_pos);
    }
    Ok(status)
}

pub fn revenue(outcome: &Outcome) -> Value {
    outcome.payments.iter().sum()
}

pub fn welfare(net: &SocialNetwork, outcome: &Outcome) -> Value {
    outcome.winner.map_or(Value::ZERO, |w| net.valuation(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::line_network;
    use crate::model::{truthful_profile, utility, Action};

    fn id(i: u32) -> AgentId {
        AgentId(i)
    }

    fn v(u: i64) -> Value {
        Value::from_units(u)
    }

    fn line5() -> SocialNetwork {
        line_network(5, &[v(0), v(0), v(0), v(0), v(1)]).unwrap()
    }

    /// Seller with two independent neighbors bidding 7 and 4.
    fn pair() -> SocialNetwork {
        SocialNetwork::from_edges(3, id(0), &[(id(0), id(1)), (id(0), id(2))], |a| if a == id(1) { v(7) } else { v(4) })
            .unwrap()
    }

    fn single() -> SocialNetwork {
        SocialNetwork::from_edges(2, id(0), &[(id(0), id(1))], |_| v(9)).unwrap()
    }

    #[test]
    fn line5_vcg_runs_a_deficit() {
        let net = line5();
        let o = vcg_network(&net, &truthful_profile(&net)).unwrap();
        assert_eq!(o.winner, Some(id(5)));
        assert_eq!(o.payment(id(5)), v(0));
        for i in 1..=4 {
            assert_eq!(o.payment(id(i)), v(-1));
            assert_eq!(o.status(id(i)), BuyerStatus::OnPath);
        }
        assert_eq!(o.revenue, v(-4));
        assert_eq!(revenue(&o), v(-4));
    }

    #[test]
    fn line5_spl_and_idm() {
        let net = line5();
        let p = truthful_profile(&net);
        let s = second_price_local(&net, &p).unwrap();
        assert_eq!((s.winner, s.payment(id(1)), s.revenue), (Some(id(1)), v(0), v(0)));

        let o = idm(&net, &p).unwrap();
        assert_eq!(o.winner, Some(id(1)));
        assert_eq!(o.top_bidder, Some(id(5)));
        assert!(o.payments.iter().all(|&x| x == v(0)));
        assert_eq!((o.revenue, o.welfare), (v(0), v(0)));
        let expected = [
            BuyerStatus::NonParticipant,
            BuyerStatus::Winner,
            BuyerStatus::Unlucky,
            BuyerStatus::Unlucky,
            BuyerStatus::Unlucky,
            BuyerStatus::Unlucky,
        ];
        assert_eq!(o.status, expected);
        assert_eq!(classify_buyers(&net, &p, &o).unwrap(), expected);
    }

    #[test]
    fn independent_neighbors_pay_second_price() {
        let net = pair();
        let p = truthful_profile(&net);
        for kind in MechanismKind::ALL {
            let o = run(kind, &net, &p).unwrap();
            assert_eq!(o.winner, Some(id(1)), "{kind}");
            assert_eq!(o.payment(id(1)), v(4), "{kind}");
            assert_eq!(o.payment(id(2)), v(0), "{kind}");
            assert_eq!(o.revenue, v(4), "{kind}");
        }
    }

    #[test]
    fn single_buyer_wins_for_free() {
        let net = single();
        let p = truthful_profile(&net);
        for kind in MechanismKind::ALL {
            let o = run(kind, &net, &p).unwrap();
            assert_eq!((o.winner, o.payment(id(1)), o.revenue, o.welfare), (Some(id(1)), v(0), v(0), v(9)));
            assert_eq!(o.status(id(1)), BuyerStatus::Winner);
        }
    }

    #[test]
    fn empty_participation() {
        let net = pair();
        let p = ActionProfile::all_null(&net);
        for kind in MechanismKind::ALL {
            let o = run(kind, &net, &p).unwrap();
            assert_eq!((o.winner, o.revenue, o.welfare), (None, v(0), v(0)));
            assert!(o.status.iter().all(|&s| s == BuyerStatus::NonParticipant));
            assert_eq!(welfare(&net, &o), v(0));
        }
    }

    #[test]
    fn infeasible_profiles_are_rejected() {
        let net = line5();
        let p = truthful_profile(&net).with_action(&net, id(2), Action::bid(v(0), vec![])).unwrap();
        for kind in MechanismKind::ALL {
            assert_eq!(run(kind, &net, &p), Err(MechanismError::Infeasible));
        }
    }

    #[test]
    fn utilities_use_true_valuations() {
        let net = pair();
        // Buyer 1 shades its bid to 5 and still wins at price 4.
        let p = truthful_profile(&net).with_action(&net, id(1), Action::bid(v(5), vec![])).unwrap();
        let o = idm(&net, &p).unwrap();
        assert_eq!(utility(&net, id(1), &o).unwrap(), v(3));
        assert_eq!(utility(&net, id(2), &o).unwrap(), v(0));
        assert!(utility(&net, id(0), &o).is_err());
        assert!(utility(&net, id(9), &o).is_err());
    }

    #[test]
    fn seeded_tie_break_is_deterministic() {
        let net =
            SocialNetwork::from_edges(4, id(0), &[(id(0), id(1)), (id(0), id(2)), (id(0), id(3))], |_| v(5)).unwrap();
        let p = truthful_profile(&net);
        let lowest = idm(&net, &p).unwrap();
        assert_eq!(lowest.winner, Some(id(1)));
        for seed in 0..20 {
            let m = Mechanism::new(MechanismKind::Idm).with_tie_break(TieBreak::Seeded(seed));
            let a = m.run(&net, &p).unwrap();
            assert_eq!(a, m.run(&net, &p).unwrap());
            assert_eq!(a.payment(a.winner.unwrap()), v(5));
        }
        let winners: std::collections::BTreeSet<_> = (0..20)
            .map(|s| {
                Mechanism::new(MechanismKind::Idm).with_tie_break(TieBreak::Seeded(s)).run(&net, &p).unwrap().winner
            })
            .collect();
        assert!(winners.len() > 1);
    }

    #[test]
    fn classify_rejects_other_mechanisms() {
        let net = single();
        let p = truthful_profile(&net);
        let o = vcg_network(&net, &p).unwrap();
        assert_eq!(classify_buyers(&net, &p, &o), Err(MechanismError::NotIdm(MechanismKind::NetworkVcg)));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("IDM".parse::<MechanismKind>().unwrap(), MechanismKind::Idm);
        assert_eq!("network_vcg".parse::<MechanismKind>().unwrap(), MechanismKind::NetworkVcg);
        assert_eq!("spl".parse::<MechanismKind>().unwrap(), MechanismKind::SecondPriceLocal);
        assert!("first-price".parse::<MechanismKind>().is_err());
    }
}
