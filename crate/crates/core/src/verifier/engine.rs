//! Deviation evaluation with shared diffusion structures.
//!
//! The feasibility transform, the diffusion graph and its dominator tree
//! depend only on who is `Null` and on the reported diffusion sets, never on
//! bid values. [`StructureCache`] memoizes the analysis per skeleton so a
//! sweep over bids (and over valuation assignments of one topology) pays for
//! each structure once.

use std::collections::HashMap;
use std::rc::Rc;

use crate::graph::{build_diffusion_graph, dominator_analysis, DiffusionAnalysis};
use crate::mechanisms::{BuyerStatus, Mechanism, MechanismKind, Outcome};
use crate::model::{feasibility_transform, Action, ActionProfile, AgentId, SocialNetwork};
use crate::scenario::ScenarioFile;
use crate::value::Value;

use super::{declared, Counterexample, DeviationSpace, Property, VerificationReport};

/// Seller's neighbor list first, then each buyer's diffusion set (`None`
/// for `Null`). Together these determine the transformed profile's graph.
type Skeleton = Vec<Option<Vec<AgentId>>>;

#[derive(Default)]
pub(crate) struct StructureCache {
    map: HashMap<Skeleton, Rc<DiffusionAnalysis>>,
}

impl StructureCache {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn analysis(&mut self, net: &SocialNetwork, actions: &[Action]) -> Rc<DiffusionAnalysis> {
        let key: Skeleton = net
            .agents()
            .map(|a| {
                if a == net.seller() {
                    Some(net.neighbors(a).to_vec())
                } else {
                    match &actions[a.index()] {
                        Action::Null => None,
                        Action::Bid { diffusion, .. } => Some(diffusion.clone()),
                    }
                }
            })
            .collect();
        if let Some(hit) = self.map.get(&key) {
            return Rc::clone(hit);
        }
        let raw = ActionProfile::new(net, actions.to_vec()).expect("verifier builds well-formed actions");
        let profile = feasibility_transform(net, &raw);
        assert!(profile.is_feasible(), "deviation profile escaped the feasibility transform");
        let graph = build_diffusion_graph(net, &profile).expect("feasible profile");
        let analysis = Rc::new(dominator_analysis(&graph));
        self.map.insert(key, Rc::clone(&analysis));
        analysis
    }
}

/// Reported bids after the transform: raw bids of participants only.
fn transformed_bids(actions: &[Action], analysis: &DiffusionAnalysis) -> Vec<Option<Value>> {
    actions
        .iter()
        .enumerate()
        .map(|(k, a)| if analysis.is_participant(AgentId::new(k)) { a.reported_value() } else { None })
        .collect()
}

fn buyer_utility(outcome: &Outcome, buyer: AgentId, true_value: Value) -> Value {
    let gain = if outcome.winner == Some(buyer) { true_value } else { Value::ZERO };
    gain - outcome.payments[buyer.index()]
}

/// Per (property, mechanism) reports in a fixed order: IR then IC for each
/// mechanism, then unlucky neutrality when IDM is present.
pub(crate) struct Accumulator {
    kinds: Vec<MechanismKind>,
    ir: Vec<VerificationReport>,
    ic: Vec<VerificationReport>,
    unlucky: Option<VerificationReport>,
}

impl Accumulator {
    pub(crate) fn new(mechanisms: &[Mechanism]) -> Self {
        let kinds: Vec<MechanismKind> = mechanisms.iter().map(|m| m.kind).collect();
        Accumulator {
            ir: kinds.iter().map(|&k| VerificationReport::new(Property::IndividualRationality, Some(k))).collect(),
            ic: kinds.iter().map(|&k| VerificationReport::new(Property::IncentiveCompatibility, Some(k))).collect(),
            unlucky: kinds
                .contains(&MechanismKind::Idm)
                .then(|| VerificationReport::new(Property::UnluckyNeutrality, Some(MechanismKind::Idm))),
            kinds,
        }
    }

    pub(crate) fn into_reports(self) -> Vec<VerificationReport> {
        let mut out = Vec::with_capacity(2 * self.kinds.len() + 1);
        for (ir, ic) in self.ir.into_iter().zip(self.ic) {
            out.push(ir);
            out.push(ic);
        }
        out.extend(self.unlucky);
        out
    }
}

struct Baseline<'a> {
    net: &'a SocialNetwork,
    buyer: AgentId,
    others: &'a [Action],
}

impl Baseline<'_> {
    fn counterexample(&self, truthful: Value, deviation: &Action, deviating: Value, detail: String) -> Counterexample {
        let profile = ActionProfile::new(self.net, self.others.to_vec()).expect("well-formed");
        Counterexample {
            scenario: ScenarioFile::from_network(self.net, &[], Some(&profile)),
            buyer: Some(self.buyer),
            truthful_utility: Some(truthful),
            deviation: Some(declared(deviation, self.buyer)),
            deviating_utility: Some(deviating),
            detail,
        }
    }
}

/// Checks every deviation of `buyer` against the opponent actions `others`
/// (whose slot for `buyer` holds its truthful action).
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_buyer(
    net: &SocialNetwork,
    buyer: AgentId,
    others: &[Action],
    deviation_sets: &[Vec<AgentId>],
    mechanisms: &[Mechanism],
    space: &DeviationSpace,
    cache: &mut StructureCache,
    acc: &mut Accumulator,
) {
    let true_value = net.valuation(buyer);
    let base = Baseline { net, buyer, others };
    let mut actions = others.to_vec();

    let analysis = cache.analysis(net, &actions);
    for r in acc.ir.iter_mut().chain(acc.ic.iter_mut()) {
        r.instances_checked += 1;
    }
    if !analysis.is_participant(buyer) {
        // Nobody forwards to this buyer; every action leaves it out with utility 0.
        return;
    }
    let bids = transformed_bids(&actions, &analysis);
    let mut truthful_utility = Vec::with_capacity(mechanisms.len());
    let mut unlucky = false;
    for (k, mech) in mechanisms.iter().enumerate() {
        let outcome = mech.evaluate(net, &analysis, &bids);
        let u = buyer_utility(&outcome, buyer, true_value);
        truthful_utility.push(u);
        if u.is_negative() {
            let action = actions[buyer.index()].clone();
            acc.ir[k].record(base.counterexample(u, &action, u, format!("{}: truthful utility {u}", mech.kind)));
        }
        if mech.kind == MechanismKind::Idm && outcome.status[buyer.index()] == BuyerStatus::Unlucky {
            unlucky = true;
        }
    }
    if unlucky {
        if let Some(r) = acc.unlucky.as_mut() {
            r.instances_checked += 1;
        }
    }

    let other_bids: Vec<Value> = others
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != buyer.index())
        .filter_map(|(_, a)| a.reported_value())
        .collect();
    let values = space.bid_values(true_value, other_bids);

    let mut deviations: Vec<(Option<usize>, Vec<Value>)> = Vec::with_capacity(deviation_sets.len() + 1);
    if space.include_null {
        deviations.push((None, vec![Value::ZERO]));
    }
    for s in 0..deviation_sets.len() {
        deviations.push((Some(s), values.clone()));
    }

    for (set, values) in deviations {
        actions[buyer.index()] = match set {
            None => Action::Null,
            Some(s) => Action::bid(Value::ZERO, deviation_sets[s].clone()),
        };
        let analysis = cache.analysis(net, &actions);
        let mut bids = transformed_bids(&actions, &analysis);
        let present = analysis.is_participant(buyer);
        for &b in &values {
            if present {
                bids[buyer.index()] = Some(b);
            }
            let deviation = match set {
                None => Action::Null,
                Some(s) => Action::bid(b, deviation_sets[s].clone()),
            };
            let truthful_value = set.is_some() && b == true_value;
            for (k, mech) in mechanisms.iter().enumerate() {
                let outcome = mech.evaluate(net, &analysis, &bids);
                let u = buyer_utility(&outcome, buyer, true_value);
                let u0 = truthful_utility[k];
                acc.ic[k].deviations_checked += 1;
                if u > u0 {
                    acc.ic[k].record(base.counterexample(
                        u0,
                        &deviation,
                        u,
                        format!("{}: deviation gains {} over truthful", mech.kind, u - u0),
                    ));
                }
                if truthful_value {
                    acc.ir[k].deviations_checked += 1;
                    if u.is_negative() {
                        acc.ir[k].record(base.counterexample(
                            u0,
                            &deviation,
                            u,
                            format!("{}: true value with a smaller diffusion set gives utility {u}", mech.kind),
                        ));
                    }
                }
                if unlucky && mech.kind == MechanismKind::Idm {
                    let r = acc.unlucky.as_mut().expect("IDM present");
                    r.deviations_checked += 1;
                    if u != Value::ZERO {
                        r.record(base.counterexample(u0, &deviation, u, format!("unlucky buyer reaches utility {u}")));
                    }
                }
            }
        }
    }
    actions[buyer.index()] = others[buyer.index()].clone();
}
