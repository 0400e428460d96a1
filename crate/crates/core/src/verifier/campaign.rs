//! Whole sweeps: exhaustive small networks and seeded random graphs, run in
//! parallel with an optional evaluation and wall-clock budget.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generators::{erdos_renyi_connected, random_tree, ProfileSampler};
use crate::mechanisms::{Mechanism, MechanismKind};
use crate::model::{truthful_profile, SocialNetwork};
use crate::scenario::ScenarioFile;
use crate::value::Value;

use super::enumerate::{connected_topologies, valuation_assignments};
use super::{
    check_dependent_set_monotonicity, check_incentives_cached, check_revenue_dominance, check_wbb, Counterexample,
    DeviationSpace, Property, StructureCache, VerificationReport, VerifyError,
};

/// Shared stop condition for a sweep.
#[derive(Debug, Default)]
pub struct Budget {
    deadline: Option<Instant>,
    max_units: Option<u64>,
    used: AtomicU64,
    hit: AtomicBool,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn new(time_limit: Option<Duration>, max_units: Option<u64>) -> Self {
        Budget { deadline: time_limit.map(|d| Instant::now() + d), max_units, ..Self::default() }
    }

    /// Spends `units` (networks or graphs); false once the budget is gone.
    pub fn charge(&self, units: u64) -> bool {
        let used = self.used.fetch_add(units, Ordering::Relaxed) + units;
        let over = self.max_units.is_some_and(|m| used > m) || self.deadline.is_some_and(|d| Instant::now() > d);
        if over {
            self.hit.store(true, Ordering::Relaxed);
        }
        !over
    }

    pub fn exhausted(&self) -> bool {
        self.hit.load(Ordering::Relaxed)
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }
}

/// Exhaustive sweep over every connected network with `2..=n_max` agents
/// and every buyer valuation assignment from the space's grid.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub n_max: usize,
    pub mechanisms: Vec<Mechanism>,
    pub space: DeviationSpace,
    pub seller_degree_min: usize,
}

impl CampaignConfig {
    pub fn new(n_max: usize, mechanisms: &[MechanismKind], space: DeviationSpace) -> Self {
        CampaignConfig {
            n_max,
            mechanisms: mechanisms.iter().map(|&k| Mechanism::new(k)).collect(),
            space,
            seller_degree_min: 0,
        }
    }
}

/// Seeded random connected graphs: Erdős–Rényi and uniform trees
/// alternating, `n` uniform on `2..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGraphConfig {
    pub count: usize,
    pub n_max: usize,
    pub grid: Vec<Value>,
    pub seed: u64,
}

impl RandomGraphConfig {
    /// The `k`-th graph; independent of every other index.
    pub fn graph(&self, k: usize) -> SocialNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let n = rng.gen_range(2..=self.n_max.max(2));
        let result = if k.is_multiple_of(2) {
            // Twice the connectivity threshold, so rejection sampling is cheap.
            let p = (2.0 * (n as f64).ln() / n as f64).clamp(0.05, 1.0);
            erdos_renyi_connected(n, p, &self.grid, &mut rng)
        } else {
            random_tree(n, &self.grid, &mut rng)
        };
        result.expect("config produces valid graphs")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub reports: Vec<VerificationReport>,
    pub networks_checked: u64,
    /// The budget ran out before the sweep finished.
    pub truncated: bool,
    pub elapsed_secs: f64,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(VerificationReport::passed)
    }

    pub fn report(&self, property: Property, mechanism: Option<MechanismKind>) -> Option<&VerificationReport> {
        self.reports.iter().find(|r| r.property == property && r.mechanism == mechanism)
    }

    fn finish(mut reports: Vec<VerificationReport>, networks: u64, budget: &Budget, start: Instant) -> Self {
        let truncated = budget.exhausted();
        for r in &mut reports {
            r.truncated |= truncated;
        }
        CampaignReport { reports, networks_checked: networks, truncated, elapsed_secs: start.elapsed().as_secs_f64() }
    }
}

fn merge_all(acc: &mut Vec<VerificationReport>, more: Vec<VerificationReport>) {
    if acc.is_empty() {
        *acc = more;
        return;
    }
    for (a, b) in acc.iter_mut().zip(more) {
        a.merge(b);
    }
}

fn all_topologies(n_max: usize, seller_degree_min: usize) -> Result<Vec<SocialNetwork>, VerifyError> {
    let mut out = Vec::new();
    for n in 2..=n_max {
        out.extend(connected_topologies(n, seller_degree_min, false)?);
    }
    Ok(out)
}

/// IR, IC and unlucky neutrality over the exhaustive sweep. Work is split
/// per topology; diffusion structures are shared across the valuation
/// assignments of one topology.
pub fn incentive_campaign(config: &CampaignConfig, budget: &Budget) -> Result<CampaignReport, VerifyError> {
    let start = Instant::now();
    let topologies = all_topologies(config.n_max, config.seller_degree_min)?;
    let grid = &config.space.valuation_grid;
    let partials: Vec<(Vec<VerificationReport>, u64)> = topologies
        .par_iter()
        .map(|topology| {
            let mut cache = StructureCache::new();
            let mut reports = Vec::new();
            let mut networks = 0;
            for net in valuation_assignments(topology, grid) {
                if !budget.charge(1) {
                    break;
                }
                merge_all(&mut reports, check_incentives_cached(&net, &config.mechanisms, &config.space, &mut cache)?);
                networks += 1;
            }
            Ok((reports, networks))
        })
        .collect::<Result<_, VerifyError>>()?;
    let mut reports = Vec::new();
    let mut networks = 0;
    for (r, n) in partials {
        if !r.is_empty() {
            merge_all(&mut reports, r);
        }
        networks += n;
    }
    if reports.is_empty() {
        reports = super::engine::Accumulator::new(&config.mechanisms).into_reports();
    }
    Ok(CampaignReport::finish(reports, networks, budget, start))
}

/// Dependent-set monotonicity on every connected topology with `2..=n_max`
/// agents. Dependent sets never read valuations, so one assignment per
/// topology covers the whole valuation sweep.
pub fn monotonicity_campaign(n_max: usize, budget: &Budget) -> Result<CampaignReport, VerifyError> {
    let start = Instant::now();
    let topologies = all_topologies(n_max, 0)?;
    let partials: Vec<VerificationReport> = topologies
        .par_iter()
        .filter(|_| budget.charge(1))
        .map(check_dependent_set_monotonicity)
        .collect::<Result<_, _>>()?;
    let networks = partials.len() as u64;
    let mut total = VerificationReport::new(Property::DependentSetMonotonicity, None);
    for r in partials {
        total.merge(r);
    }
    Ok(CampaignReport::finish(vec![total], networks, budget, start))
}

/// Revenue dominance and the IDM revenue identity on truthful profiles of
/// random graphs.
pub fn dominance_campaign(config: &RandomGraphConfig, budget: &Budget) -> Result<CampaignReport, VerifyError> {
    let start = Instant::now();
    let partials: Vec<VerificationReport> = (0..config.count)
        .into_par_iter()
        .filter(|_| budget.charge(1))
        .map(|k| {
            let net = config.graph(k);
            let profile = truthful_profile(&net);
            let cmp = check_revenue_dominance(&net, &profile)?;
            let mut r = VerificationReport::new(Property::RevenueDominance, Some(MechanismKind::Idm));
            r.instances_checked = 1;
            let problems = cmp.violations();
            if !problems.is_empty() {
                r.record(Counterexample {
                    scenario: ScenarioFile::from_network(&net, &[], Some(&profile)),
                    buyer: None,
                    truthful_utility: None,
                    deviation: None,
                    deviating_utility: None,
                    detail: format!("graph #{k}: {}", problems.join("; ")),
                });
            }
            Ok(r)
        })
        .collect::<Result<_, VerifyError>>()?;
    let networks = partials.len() as u64;
    let mut total = VerificationReport::new(Property::RevenueDominance, Some(MechanismKind::Idm));
    for r in partials {
        total.merge(r);
    }
    Ok(CampaignReport::finish(vec![total], networks, budget, start))
}

/// Non-negative revenue on `trials` sampled profiles of each random graph,
/// for each mechanism.
pub fn wbb_campaign(
    config: &RandomGraphConfig,
    mechanisms: &[MechanismKind],
    trials: usize,
    budget: &Budget,
) -> Result<CampaignReport, VerifyError> {
    let start = Instant::now();
    let sampler = ProfileSampler::new(config.grid.clone());
    let partials: Vec<Vec<VerificationReport>> = (0..config.count)
        .into_par_iter()
        .filter(|_| budget.charge(1))
        .map(|k| {
            let net = config.graph(k);
            mechanisms
                .iter()
                .map(|&kind| check_wbb(&net, Mechanism::new(kind), &sampler, trials, config.seed ^ k as u64))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, VerifyError>>()?;
    let networks = partials.len() as u64;
    let mut reports: Vec<VerificationReport> =
        mechanisms.iter().map(|&k| VerificationReport::new(Property::WeakBudgetBalance, Some(k))).collect();
    for p in partials {
        for (a, b) in reports.iter_mut().zip(p) {
            a.merge(b);
        }
    }
    Ok(CampaignReport::finish(reports, networks, budget, start))
}
