//! Mechanical checks of individual rationality, incentive compatibility,
//! weak budget balance and revenue dominance.
//!
//! Deviation checks follow the dominant-strategy definitions literally:
//! buyer `i` swaps its truthful action for a deviation, the others keep
//! their intended actions, and the combined profile is passed through the
//! feasibility transform before the mechanism runs. Valuation deviations are
//! drawn from a finite grid that contains every opponent bid, its
//! neighbors one step away, midpoints and a value above the maximum, so that
//! every allocation boundary is crossed.

mod campaign;
mod engine;
pub mod enumerate;
mod minimize;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::ProfileSampler;
use crate::graph::{build_diffusion_graph, dependent_set_without, dominator_analysis};
use crate::mechanisms::{Mechanism, MechanismError, MechanismKind};
use crate::model::{truthful_profile, Action, ActionProfile, AgentId, SocialNetwork};
use crate::scenario::{DeclaredAction, ScenarioFile};
use crate::value::Value;

pub use campaign::{
    dominance_campaign, incentive_campaign, monotonicity_campaign, wbb_campaign, Budget, CampaignConfig,
    CampaignReport, RandomGraphConfig,
};
pub use enumerate::{connected_topologies, enumerate_connected_networks, valuation_assignments, EXHAUSTIVE_N_MAX};
pub use minimize::{minimize_counterexample, remove_agent};

pub(crate) use engine::StructureCache;
use engine::{run_buyer, Accumulator};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("valuation grid is empty")]
    EmptyGrid,
    #[error("valuation grid contains a negative value")]
    NegativeGrid,
    #[error("exhaustive enumeration is limited to {max} agents, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("buyer {buyer} has {degree} neighbors; too many to enumerate every diffusion subset")]
    TooManySubsets { buyer: AgentId, degree: usize },
    #[error("exhaustive opponent enumeration would visit {0} profiles")]
    TooManyProfiles(u128),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// Largest neighbor count for which all diffusion subsets are enumerated.
pub const MAX_SUBSET_DEGREE: usize = 20;

/// Upper bound on opponent profiles per buyer in exhaustive mode.
pub const MAX_OPPONENT_PROFILES: u128 = 2_000_000;

/// Which diffusion sets a deviating buyer may report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMode {
    AllSubsets,
    /// The full neighbor set plus `count` random subsets.
    SampledSubsets {
        count: usize,
        seed: u64,
    },
}

/// Which opponent profiles `a'_{-i}` are quantified over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OthersMode {
    /// Everybody else acts truthfully.
    Truthful,
    /// Every combination of opponent actions drawn from the base grid, all
    /// diffusion subsets and `Null`, restricted to profiles that are feasible
    /// when `i` is truthful.
    Exhaustive,
    /// `count` random opponent profiles, feasibility-transformed.
    Sampled { count: usize, seed: u64 },
}

/// Finite stand-in for a buyer's action space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationSpace {
    /// Ascending, non-negative base grid; also the opponents' bid grid in
    /// exhaustive and sampled opponent modes.
    pub valuation_grid: Vec<Value>,
    pub diffusion_mode: DiffusionMode,
    pub include_null: bool,
    pub others: OthersMode,
    /// Greedily shrink counterexamples before reporting them.
    pub minimize: bool,
}

impl DeviationSpace {
    pub fn new(mut grid: Vec<Value>) -> Result<Self, VerifyError> {
        if grid.is_empty() {
            return Err(VerifyError::EmptyGrid);
        }
        if grid.iter().any(|v| v.is_negative()) {
            return Err(VerifyError::NegativeGrid);
        }
        grid.sort_unstable();
        grid.dedup();
        Ok(DeviationSpace {
            valuation_grid: grid,
            diffusion_mode: DiffusionMode::AllSubsets,
            include_null: true,
            others: OthersMode::Truthful,
            minimize: true,
        })
    }

    pub fn with_others(mut self, others: OthersMode) -> Self {
        self.others = others;
        self
    }

    pub fn with_diffusion_mode(mut self, mode: DiffusionMode) -> Self {
        self.diffusion_mode = mode;
        self
    }

    /// Smallest gap in the base grid (one unit for a single-point grid).
    pub fn step(&self) -> Value {
        self.valuation_grid.windows(2).map(|w| w[1] - w[0]).min().unwrap_or(Value::from_units(1))
    }

    /// Candidate reports for a buyer with the given true value facing the
    /// given opponent bids: the base grid, the true value, every opponent
    /// bid and its neighbors one step away, one step above the maximum, and
    /// the midpoint of every consecutive pair.
    pub fn bid_values(&self, true_value: Value, other_bids: impl IntoIterator<Item = Value>) -> Vec<Value> {
        let step = self.step();
        let mut points = self.valuation_grid.clone();
        points.push(true_value);
        for b in other_bids {
            points.push(b);
            points.push(b + step);
            if b >= step {
                points.push(b - step);
            }
        }
        points.sort_unstable();
        points.dedup();
        let top = *points.last().expect("non-empty");
        points.push(top + step);
        let mids: Vec<Value> =
            points.windows(2).filter(|w| w[1] - w[0] > Value::epsilon()).map(|w| w[0].midpoint(w[1])).collect();
        points.extend(mids);
        points.sort_unstable();
        points.dedup();
        points
    }

    /// Diffusion sets a buyer with neighbors `r` may report.
    pub fn diffusion_sets(&self, buyer: AgentId, r: &[AgentId]) -> Result<Vec<Vec<AgentId>>, VerifyError> {
        match self.diffusion_mode {
            DiffusionMode::AllSubsets => {
                if r.len() > MAX_SUBSET_DEGREE {
                    return Err(VerifyError::TooManySubsets { buyer, degree: r.len() });
                }
                Ok((0u32..1 << r.len())
                    .map(|mask| r.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &a)| a).collect())
                    .collect())
            }
            DiffusionMode::SampledSubsets { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(buyer.0).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut sets = vec![r.to_vec()];
                for _ in 0..count {
                    sets.push(r.iter().copied().filter(|_| rng.gen_bool(0.5)).collect());
                }
                sets.sort();
                sets.dedup();
                Ok(sets)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    IndividualRationality,
    IncentiveCompatibility,
    WeakBudgetBalance,
    RevenueDominance,
    UnluckyNeutrality,
    DependentSetMonotonicity,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::IndividualRationality => "IR",
            Property::IncentiveCompatibility => "IC",
            Property::WeakBudgetBalance => "WBB",
            Property::RevenueDominance => "revenue-dominance",
            Property::UnluckyNeutrality => "unlucky-neutrality",
            Property::DependentSetMonotonicity => "d-monotonicity",
        })
    }
}

/// A point at which a checked property failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Network plus the baseline profile (the buyer truthful, the others as
    /// quantified) as a declared profile.
    pub scenario: ScenarioFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buyer: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truthful_utility: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeclaredAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviating_utility: Option<Value>,
    pub detail: String,
}

/// Stored counterexamples are capped; `violations` counts all of them.
pub const MAX_STORED_COUNTEREXAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub property: Property,
    pub mechanism: Option<MechanismKind>,
    /// Whether the property is claimed for this mechanism. Violations of an
    /// unclaimed property (VCG budget balance) are recorded, not failures.
    pub expected_to_hold: bool,
    pub instances_checked: u64,
    pub deviations_checked: u64,
    pub violations: u64,
    pub counterexamples: Vec<Counterexample>,
    pub truncated: bool,
}

impl VerificationReport {
    pub fn new(property: Property, mechanism: Option<MechanismKind>) -> Self {
        let expected_to_hold =
            !(property == Property::WeakBudgetBalance && mechanism == Some(MechanismKind::NetworkVcg));
        VerificationReport {
            property,
            mechanism,
            expected_to_hold,
            instances_checked: 0,
            deviations_checked: 0,
            violations: 0,
            counterexamples: Vec::new(),
            truncated: false,
        }
    }

    /// No violation on any checked point.
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    /// Holds, or the property was never claimed for this mechanism.
    pub fn passed(&self) -> bool {
        self.holds() || !self.expected_to_hold
    }

    pub fn record(&mut self, cx: Counterexample) {
        self.violations += 1;
        if self.counterexamples.len() < MAX_STORED_COUNTEREXAMPLES {
            self.counterexamples.push(cx);
        }
    }

    pub fn merge(&mut self, other: VerificationReport) {
        debug_assert_eq!((self.property, self.mechanism), (other.property, other.mechanism));
        self.instances_checked += other.instances_checked;
        self.deviations_checked += other.deviations_checked;
        self.violations += other.violations;
        self.truncated |= other.truncated;
        let room = MAX_STORED_COUNTEREXAMPLES.saturating_sub(self.counterexamples.len());
        self.counterexamples.extend(other.counterexamples.into_iter().take(room));
    }
}

fn declared(action: &Action, id: AgentId) -> DeclaredAction {
    DeclaredAction { id, bid: action.reported_value().map(Into::into), diffusion_set: action.diffusion_set().to_vec() }
}

/// Runs the IR, IC and (for IDM) unlucky-neutrality checks for every buyer
/// of `net` in one traversal; reports come back per (property, mechanism).
pub fn check_incentives(
    net: &SocialNetwork,
    mechanisms: &[Mechanism],
    space: &DeviationSpace,
) -> Result<Vec<VerificationReport>, VerifyError> {
    check_incentives_cached(net, mechanisms, space, &mut StructureCache::new())
}

pub(crate) fn check_incentives_cached(
    net: &SocialNetwork,
    mechanisms: &[Mechanism],
    space: &DeviationSpace,
    cache: &mut StructureCache,
) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut acc = Accumulator::new(mechanisms);
    for buyer in net.buyers() {
        let deviation_sets = space.diffusion_sets(buyer, net.neighbors(buyer))?;
        for others in opponent_profiles(net, buyer, space)? {
            run_buyer(net, buyer, &others, &deviation_sets, mechanisms, space, cache, &mut acc);
        }
    }
    let mut reports = acc.into_reports();
    if space.minimize {
        for report in reports.iter_mut().filter(|r| !r.holds()) {
            if let Some(cx) = minimized(net, mechanisms, space, report.property, report.mechanism) {
                report.counterexamples.insert(0, cx);
                report.counterexamples.truncate(MAX_STORED_COUNTEREXAMPLES);
            }
        }
    }
    Ok(reports)
}

/// A counterexample on the smallest network the greedy shrinker finds.
fn minimized(
    net: &SocialNetwork,
    mechanisms: &[Mechanism],
    space: &DeviationSpace,
    property: Property,
    kind: Option<MechanismKind>,
) -> Option<Counterexample> {
    let space = DeviationSpace { minimize: false, ..space.clone() };
    let failing = |n: &SocialNetwork| -> Option<Counterexample> {
        let reports = check_incentives(n, mechanisms, &space).ok()?;
        let report = reports.into_iter().find(|r| r.property == property && r.mechanism == kind)?;
        report.counterexamples.into_iter().next()
    };
    let small = minimize_counterexample(net, &space.valuation_grid, |n| failing(n).is_some());
    if small == *net {
        return None;
    }
    let mut cx = failing(&small)?;
    cx.detail = format!("minimized: {}", cx.detail);
    Some(cx)
}

/// Opponent profiles for `buyer` under the space's [`OthersMode`], each a full
/// action vector with `buyer`'s slot to be overwritten.
pub(crate) fn opponent_profiles(
    net: &SocialNetwork,
    buyer: AgentId,
    space: &DeviationSpace,
) -> Result<Vec<Vec<Action>>, VerifyError> {
    let truthful: Vec<Action> =
        net.agents()
            .map(|a| {
                if a == net.seller() {
                    Action::Null
                } else {
                    Action::bid(net.valuation(a), net.neighbors(a).to_vec())
                }
            })
            .collect();
    match space.others {
        OthersMode::Truthful => Ok(vec![truthful]),
        OthersMode::Exhaustive => {
            let mut options: Vec<Vec<Action>> = Vec::new();
            let mut total: u128 = 1;
            for a in net.agents() {
                let opts = if a == net.seller() || a == buyer {
                    vec![truthful[a.index()].clone()]
                } else {
                    let mut o = vec![Action::Null];
                    for set in space.diffusion_sets(a, net.neighbors(a))? {
                        for &v in &space.valuation_grid {
                            o.push(Action::bid(v, set.clone()));
                        }
                    }
                    o
                };
                total = total.saturating_mul(opts.len() as u128);
                options.push(opts);
            }
            if total > MAX_OPPONENT_PROFILES {
                return Err(VerifyError::TooManyProfiles(total));
            }
            let mut out = Vec::new();
            let mut idx = vec![0usize; options.len()];
            'outer: loop {
                let actions: Vec<Action> = idx.iter().zip(&options).map(|(&k, o)| o[k].clone()).collect();
                // Only opponent profiles that are feasible next to a truthful buyer.
                if ActionProfile::new(net, actions.clone()).map(|p| p.is_feasible()).unwrap_or(false) {
                    out.push(actions);
                }
                for pos in (0..idx.len()).rev() {
                    idx[pos] += 1;
                    if idx[pos] < options[pos].len() {
                        continue 'outer;
                    }
                    idx[pos] = 0;
                }
                break;
            }
            Ok(out)
        }
        OthersMode::Sampled { count, seed } => {
            let sampler = ProfileSampler::new(space.valuation_grid.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(buyer.0).wrapping_mul(0xD1B5_4A32_D192_ED03));
            let mut out = vec![truthful.clone()];
            for _ in 0..count {
                let mut actions: Vec<Action> = net
                    .agents()
                    .map(|a| if a == net.seller() { Action::Null } else { sampler.random_action(net, a, &mut rng) })
                    .collect();
                actions[buyer.index()] = truthful[buyer.index()].clone();
                let raw = ActionProfile::new(net, actions).expect("sampled actions are well-formed");
                let fixed = crate::model::feasibility_transform(net, &raw);
                if !fixed.action(buyer).is_null() {
                    out.push(fixed.into_actions());
                }
            }
            Ok(out)
        }
    }
}

fn select(reports: Vec<VerificationReport>, property: Property, kind: MechanismKind) -> VerificationReport {
    reports
        .into_iter()
        .find(|r| r.property == property && r.mechanism == Some(kind))
        .unwrap_or_else(|| VerificationReport::new(property, Some(kind)))
}

/// Truthful valuation with every diffusion subset (per `space`): utility
/// must never be negative.
pub fn check_ir(
    net: &SocialNetwork,
    mechanism: Mechanism,
    space: &DeviationSpace,
) -> Result<VerificationReport, VerifyError> {
    Ok(select(check_incentives(net, &[mechanism], space)?, Property::IndividualRationality, mechanism.kind))
}

/// No deviation in `space` may beat the truthful action.
pub fn check_ic(
    net: &SocialNetwork,
    mechanism: Mechanism,
    space: &DeviationSpace,
) -> Result<VerificationReport, VerifyError> {
    Ok(select(check_incentives(net, &[mechanism], space)?, Property::IncentiveCompatibility, mechanism.kind))
}

/// Every IDM-unlucky buyer gets exactly zero utility whatever it does.
pub fn check_unlucky_neutrality(
    net: &SocialNetwork,
    space: &DeviationSpace,
) -> Result<VerificationReport, VerifyError> {
    let idm = Mechanism::new(MechanismKind::Idm);
    Ok(select(check_incentives(net, &[idm], space)?, Property::UnluckyNeutrality, MechanismKind::Idm))
}

/// Revenue must be non-negative on `trials` sampled feasible profiles. For
/// network VCG violations are expected and only recorded.
pub fn check_wbb(
    net: &SocialNetwork,
    mechanism: Mechanism,
    sampler: &ProfileSampler,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    if trials == 0 {
        return Err(VerifyError::NoTrials);
    }
    let mut report = VerificationReport::new(Property::WeakBudgetBalance, Some(mechanism.kind));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truthful = truthful_profile(net);
    for t in 0..trials {
        // The first trial is always the truthful profile.
        let profile = if t == 0 { truthful.clone() } else { sampler.sample(net, &mut rng) };
        let outcome = mechanism.run(net, &profile)?;
        report.instances_checked += 1;
        if outcome.revenue.is_negative() {
            report.record(Counterexample {
                scenario: ScenarioFile::from_network(net, &[], Some(&profile)),
                buyer: None,
                truthful_utility: None,
                deviation: None,
                deviating_utility: None,
                detail: format!("revenue {}", outcome.revenue),
            });
        }
    }
    Ok(report)
}

/// Revenues (and welfare) of the three mechanisms on one profile, plus
/// the IDM revenue identity computed by brute force.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevenueComparison {
    pub idm: Value,
    pub vcg: Value,
    pub spl: Value,
    /// `v*_{-d_1}` for the first buyer on the IDM winner's critical sequence.
    pub idm_identity: Value,
    pub idm_welfare: Value,
    pub spl_welfare: Value,
    /// Every VCG payment off the top bidder's critical sequence is zero.
    pub vcg_off_chain_zero: bool,
    pub truthful: bool,
}

impl RevenueComparison {
    /// Human-readable list of failed relations; empty when all hold.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.idm < self.vcg {
            v.push(format!("rev(IDM) {} < rev(VCG) {}", self.idm, self.vcg));
        }
        if self.idm < self.spl {
            v.push(format!("rev(IDM) {} < rev(SPL) {}", self.idm, self.spl));
        }
        if self.idm.is_negative() {
            v.push(format!("rev(IDM) {} < 0", self.idm));
        }
        if self.idm != self.idm_identity {
            v.push(format!("rev(IDM) {} != v*(-d_1) {}", self.idm, self.idm_identity));
        }
        if self.truthful && self.idm_welfare < self.spl_welfare {
            v.push(format!("welfare(IDM) {} < welfare(SPL) {}", self.idm_welfare, self.spl_welfare));
        }
        if !self.vcg_off_chain_zero {
            v.push("VCG charges a buyer off the top bidder's critical sequence".into());
        }
        v
    }

    pub fn holds(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Runs all three mechanisms on a feasible profile and compares revenues.
pub fn check_revenue_dominance(net: &SocialNetwork, profile: &ActionProfile) -> Result<RevenueComparison, VerifyError> {
    let idm = Mechanism::new(MechanismKind::Idm).run(net, profile)?;
    let vcg = Mechanism::new(MechanismKind::NetworkVcg).run(net, profile)?;
    let spl = Mechanism::new(MechanismKind::SecondPriceLocal).run(net, profile)?;

    let graph = build_diffusion_graph(net, profile).map_err(MechanismError::from)?;
    let analysis = dominator_analysis(&graph);
    let v_star = |set: &[AgentId]| set.iter().filter_map(|&a| profile.bid(a)).fold(net.seller_reserve(), Value::max);
    let idm_identity = match idm.winner {
        None => Value::ZERO,
        Some(w) => {
            let first = analysis.sequence(w).map_err(MechanismError::from)?[0];
            v_star(&dependent_set_without(&analysis, first).map_err(MechanismError::from)?)
        }
    };
    let vcg_off_chain_zero = match vcg.top_bidder {
        None => true,
        Some(m) => {
            let chain = analysis.sequence(m).map_err(MechanismError::from)?;
            net.buyers().filter(|b| !chain.contains(b)).all(|b| vcg.payment(b) == Value::ZERO)
        }
    };
    Ok(RevenueComparison {
        idm: idm.revenue,
        vcg: vcg.revenue,
        spl: spl.revenue,
        idm_identity,
        idm_welfare: idm.welfare,
        spl_welfare: spl.welfare,
        vcg_off_chain_zero,
        truthful: *profile == truthful_profile(net),
    })
}

/// Dependent sets grow with the diffusion set: for every buyer and every
/// pair `r' ⊆ r''` of its diffusion sets (others truthful),
/// `d_i(r') ⊆ d_i(r'')`.
pub fn check_dependent_set_monotonicity(net: &SocialNetwork) -> Result<VerificationReport, VerifyError> {
    let mut report = VerificationReport::new(Property::DependentSetMonotonicity, None);
    let base = truthful_profile(net);
    let space = DeviationSpace::new(vec![Value::ZERO])?;
    for buyer in net.buyers() {
        if base.action(buyer).is_null() {
            continue;
        }
        let r = net.neighbors(buyer);
        let sets = space.diffusion_sets(buyer, r)?;
        let masks: Vec<u32> =
            sets.iter().map(|s| s.iter().map(|a| 1u32 << r.binary_search(a).expect("subset")).sum()).collect();
        let dependents: Vec<Vec<AgentId>> = sets
            .iter()
            .map(|s| {
                let p = base
                    .with_action(net, buyer, Action::bid(net.valuation(buyer), s.clone()))
                    .expect("subset of true neighbors");
                let p = crate::model::feasibility_transform(net, &p);
                let g = build_diffusion_graph(net, &p).expect("feasible");
                dominator_analysis(&g).dependent_set(buyer).expect("buyer stays reachable")
            })
            .collect();
        for (a, &small) in masks.iter().enumerate() {
            for (b, &large) in masks.iter().enumerate() {
                if a == b || small & !large != 0 {
                    continue;
                }
                report.deviations_checked += 1;
                if !dependents[a].iter().all(|x| dependents[b].contains(x)) {
                    report.record(Counterexample {
                        scenario: ScenarioFile::from_network(net, &[], Some(&base)),
                        buyer: Some(buyer),
                        truthful_utility: None,
                        deviation: Some(declared(&Action::bid(net.valuation(buyer), sets[a].clone()), buyer)),
                        deviating_utility: None,
                        detail: format!(
                            "d_i({:?}) = {:?} is not inside d_i({:?}) = {:?}",
                            sets[a], dependents[a], sets[b], dependents[b]
                        ),
                    });
                }
            }
        }
        report.instances_checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::deficit_line;
    use crate::scenario::{builtin, parse_scenario};

    fn grid(values: &[i64]) -> Vec<Value> {
        values.iter().map(|&u| Value::from_units(u)).collect()
    }

    fn v(u: i64) -> Value {
        Value::from_units(u)
    }

    #[test]
    fn bid_values_cover_boundaries() {
        let space = DeviationSpace::new(grid(&[0, 1, 2, 3])).unwrap();
        assert_eq!(space.step(), v(1));
        let shown: Vec<String> = space.bid_values(v(1), [v(3)]).iter().map(|x| x.to_string()).collect();
        assert_eq!(shown, ["0", "0.5", "1", "1.5", "2", "2.5", "3", "3.5", "4", "4.5", "5"]);
        let odd = DeviationSpace::new(grid(&[2])).unwrap();
        assert_eq!(odd.step(), v(1));
        assert!(odd.bid_values(v(7), []).contains(&v(7)));
        assert!(DeviationSpace::new(vec![]).is_err());
        assert!(DeviationSpace::new(grid(&[-1])).is_err());
    }

    #[test]
    fn diffusion_set_modes() {
        let space = DeviationSpace::new(grid(&[0])).unwrap();
        let r = [AgentId(1), AgentId(2), AgentId(3)];
        assert_eq!(space.diffusion_sets(AgentId(4), &r).unwrap().len(), 8);
        let sampled = space.clone().with_diffusion_mode(DiffusionMode::SampledSubsets { count: 3, seed: 1 });
        let sets = sampled.diffusion_sets(AgentId(4), &r).unwrap();
        assert!(sets.contains(&r.to_vec()));
        assert!(sets.len() <= 4);
        let big: Vec<AgentId> = (0..21).map(AgentId).collect();
        assert!(matches!(space.diffusion_sets(AgentId(99), &big), Err(VerifyError::TooManySubsets { .. })));
    }

    #[test]
    fn line5_incentives_hold() {
        let net = deficit_line(5).unwrap();
        let space = DeviationSpace::new(grid(&[0, 1])).unwrap();
        for kind in [MechanismKind::Idm, MechanismKind::NetworkVcg, MechanismKind::SecondPriceLocal] {
            let ir = check_ir(&net, Mechanism::new(kind), &space).unwrap();
            let ic = check_ic(&net, Mechanism::new(kind), &space).unwrap();
            assert!(ir.holds() && ic.holds(), "{kind}: {ir:?} {ic:?}");
            assert_eq!(ic.instances_checked, 5);
            assert!(ic.deviations_checked > 0);
        }
        let unlucky = check_unlucky_neutrality(&net, &space).unwrap();
        assert!(unlucky.holds());
        // Buyers 2..=5 are unlucky under IDM on this line.
        assert_eq!(unlucky.instances_checked, 4);
    }

    #[test]
    fn single_buyer_ir() {
        let s = parse_scenario(builtin("single").unwrap()).unwrap();
        let space = DeviationSpace::new(grid(&[0, 9])).unwrap();
        for kind in MechanismKind::ALL {
            assert!(check_ir(&s.network, Mechanism::new(kind), &space).unwrap().holds());
        }
    }

    #[test]
    fn spl_ignores_hidden_bidders() {
        // Buyer 1 is a cut vertex hiding buyer 2 (value 3) from the seller.
        let net = crate::generators::line_network(2, &[v(1), v(3)]).unwrap();
        let space = DeviationSpace::new(grid(&[0, 1, 3])).unwrap();
        let spl = Mechanism::new(MechanismKind::SecondPriceLocal);
        let report = check_ic(&net, spl, &space).unwrap();
        assert!(report.holds());
        let truthful = spl.run(&net, &truthful_profile(&net)).unwrap();
        let hiding = crate::model::feasibility_transform(
            &net,
            &truthful_profile(&net).with_action(&net, AgentId(1), Action::bid(v(1), vec![])).unwrap(),
        );
        let hidden = spl.run(&net, &hiding).unwrap();
        // Hiding the higher bidder changes nothing for anyone under SPL.
        assert_eq!(truthful.payments, hidden.payments);
        assert_eq!(truthful.winner, hidden.winner);
    }

    #[test]
    fn wbb_line5() {
        let net = deficit_line(5).unwrap();
        let sampler = ProfileSampler::new(grid(&[0, 1]));
        let vcg = check_wbb(&net, Mechanism::new(MechanismKind::NetworkVcg), &sampler, 20, 1).unwrap();
        assert!(!vcg.holds());
        assert!(vcg.passed());
        assert_eq!(vcg.counterexamples[0].detail, "revenue -4");
        let idm = check_wbb(&net, Mechanism::new(MechanismKind::Idm), &sampler, 20, 1).unwrap();
        assert!(idm.holds() && idm.expected_to_hold);
        assert_eq!(idm.instances_checked, 20);
        assert!(check_wbb(&net, Mechanism::new(MechanismKind::Idm), &sampler, 0, 1).is_err());
    }

    #[test]
    fn dominance_examples() {
        let net = deficit_line(5).unwrap();
        let c = check_revenue_dominance(&net, &truthful_profile(&net)).unwrap();
        assert_eq!((c.idm, c.vcg, c.spl), (v(0), v(-4), v(0)));
        assert!(c.holds() && c.truthful);

        let s = parse_scenario(builtin("example12").unwrap()).unwrap();
        let c = check_revenue_dominance(&s.network, &truthful_profile(&s.network)).unwrap();
        // VCG and SPL values computed by hand and by an independent script.
        assert_eq!((c.idm, c.vcg, c.spl), (v(10), v(7), v(4)));
        assert_eq!((c.idm_welfare, c.spl_welfare), (v(12), v(6)));
        assert!(c.holds());

        let single = parse_scenario(builtin("single").unwrap()).unwrap();
        let c = check_revenue_dominance(&single.network, &truthful_profile(&single.network)).unwrap();
        assert_eq!((c.idm, c.vcg, c.spl), (v(0), v(0), v(0)));
    }

    #[test]
    fn monotonicity_on_example12() {
        let s = parse_scenario(builtin("example12").unwrap()).unwrap();
        let r = check_dependent_set_monotonicity(&s.network).unwrap();
        assert!(r.holds());
        assert_eq!(r.instances_checked, 12);
    }

    #[test]
    fn exhaustive_opponents_are_feasible_next_to_truthful_buyer() {
        let net = crate::generators::line_network(3, &[v(0), v(1), v(1)]).unwrap();
        let space = DeviationSpace::new(grid(&[0, 1])).unwrap().with_others(OthersMode::Exhaustive);
        let profiles = opponent_profiles(&net, AgentId(2), &space).unwrap();
        assert!(profiles.iter().all(|a| ActionProfile::new(&net, a.clone()).unwrap().is_feasible()));
        // Buyer 1 must participate and forward to 2 unless 2 is cut off;
        // every combination is feasible only if unreachable buyers are Null.
        assert!(profiles.len() > 10);
        let report = check_ic(&net, Mechanism::new(MechanismKind::Idm), &space).unwrap();
        assert!(report.holds());
    }

    #[test]
    fn report_merge_caps_storage() {
        let mut a = VerificationReport::new(Property::IncentiveCompatibility, Some(MechanismKind::Idm));
        let net = deficit_line(1).unwrap();
        let cx = Counterexample {
            scenario: ScenarioFile::from_network(&net, &[], None),
            buyer: None,
            truthful_utility: None,
            deviation: None,
            deviating_utility: None,
            detail: String::new(),
        };
        for _ in 0..MAX_STORED_COUNTEREXAMPLES + 5 {
            a.record(cx.clone());
        }
        let mut b = VerificationReport::new(Property::IncentiveCompatibility, Some(MechanismKind::Idm));
        b.record(cx);
        a.merge(b);
        assert_eq!(a.violations as usize, MAX_STORED_COUNTEREXAMPLES + 6);
        assert_eq!(a.counterexamples.len(), MAX_STORED_COUNTEREXAMPLES);
        assert!(!a.passed());
    }
}
