use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use netauction::generators::ProfileSampler;
use netauction::mechanisms::{Mechanism, MechanismKind};
use netauction::model::truthful_profile;
use netauction::scenario::ScenarioFile;
use netauction::value::MAX_DECIMALS;
use netauction::verifier::{
    check_dependent_set_monotonicity, check_incentives, check_revenue_dominance, check_wbb, dominance_campaign,
    incentive_campaign, monotonicity_campaign, wbb_campaign, Budget, CampaignConfig, CampaignReport, Counterexample,
    DeviationSpace, OthersMode, Property, RandomGraphConfig, VerificationReport,
};
use netauction::SocialNetwork;
use serde::Serialize;

use crate::{input, parse_mechanism, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Ir,
    Ic,
    Wbb,
    Dominance,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OthersArg {
    Truthful,
    Exhaustive,
    Sampled,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Largest network (seller included) in exhaustive sweeps
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    /// Valuation grid, comma separated
    #[arg(long, default_value = "0,1,2,3")]
    pub grid: String,
    /// Mechanisms to check (repeat or comma separate); default depends on the suite
    #[arg(long, short, value_delimiter = ',', value_parser = parse_mechanism)]
    pub mechanism: Vec<MechanismKind>,
    /// Check one scenario instead of a sweep
    #[arg(long)]
    pub scenario: Option<String>,
    /// Random graphs for dominance and budget sweeps; sampled profiles for a single scenario
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Largest random graph
    #[arg(long, default_value_t = 50)]
    pub graph_n_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Opponent profiles quantified in IR/IC checks
    #[arg(long, value_enum, default_value = "truthful")]
    pub others: OthersArg,
    /// Opponent profiles per buyer with `--others sampled`
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Stop after this many networks or graphs
    #[arg(long)]
    pub max_evals: Option<u64>,
    #[arg(long)]
    pub time_limit_secs: Option<u64>,
    /// Print the full report as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct VerifyOutput {
    suite: Suite,
    passed: bool,
    truncated: bool,
    networks_checked: u64,
    elapsed_secs: f64,
    reports: Vec<VerificationReport>,
}

#[derive(Default)]
struct Collected {
    reports: Vec<VerificationReport>,
    networks: u64,
    truncated: bool,
}

impl Collected {
    fn add_campaign(&mut self, c: CampaignReport, keep: &[Property]) {
        self.networks += c.networks_checked;
        self.truncated |= c.truncated;
        self.reports.extend(c.reports.into_iter().filter(|r| keep.contains(&r.property)));
    }

    fn add_single(&mut self, reports: Vec<VerificationReport>, keep: &[Property]) {
        self.networks += 1;
        self.reports.extend(reports.into_iter().filter(|r| keep.contains(&r.property)));
    }
}

fn scenario_network(args: &VerifyArgs) -> anyhow::Result<Option<SocialNetwork>> {
    args.scenario.as_deref().map(|s| Ok(input::load(s, MAX_DECIMALS)?.0.network)).transpose()
}

fn incentive_properties(suite: Suite) -> Vec<Property> {
    match suite {
        Suite::Ir => vec![Property::IndividualRationality],
        Suite::Ic => vec![Property::IncentiveCompatibility, Property::UnluckyNeutrality],
        _ => vec![Property::IndividualRationality, Property::IncentiveCompatibility, Property::UnluckyNeutrality],
    }
}

pub fn verify(args: &VerifyArgs) -> anyhow::Result<Status> {
    let start = Instant::now();
    let grid = input::parse_grid(&args.grid)?;
    let budget = Budget::new(args.time_limit_secs.map(Duration::from_secs), args.max_evals);
    let network = scenario_network(args)?;
    let mechanisms =
        |default: &[MechanismKind]| if args.mechanism.is_empty() { default.to_vec() } else { args.mechanism.clone() };
    let incentive_mechs = mechanisms(&[MechanismKind::Idm, MechanismKind::NetworkVcg]);
    let all_mechs = mechanisms(&MechanismKind::ALL);
    let random = RandomGraphConfig { count: args.trials, n_max: args.graph_n_max, grid: grid.clone(), seed: args.seed };
    let mut out = Collected::default();

    if matches!(args.suite, Suite::Ir | Suite::Ic | Suite::All) {
        let mut space = DeviationSpace::new(grid.clone())?;
        space.others = match args.others {
            OthersArg::Truthful => OthersMode::Truthful,
            OthersArg::Exhaustive => OthersMode::Exhaustive,
            OthersArg::Sampled => OthersMode::Sampled { count: args.samples, seed: args.seed },
        };
        let keep = incentive_properties(args.suite);
        match &network {
            Some(net) => {
                let mechs: Vec<Mechanism> = incentive_mechs.iter().map(|&k| Mechanism::new(k)).collect();
                out.add_single(check_incentives(net, &mechs, &space)?, &keep);
            }
            None => {
                let cfg = CampaignConfig::new(args.n_max, &incentive_mechs, space);
                out.add_campaign(incentive_campaign(&cfg, &budget)?, &keep);
            }
        }
    }
    if args.suite == Suite::All {
        let keep = [Property::DependentSetMonotonicity];
        match &network {
            Some(net) => out.add_single(vec![check_dependent_set_monotonicity(net)?], &keep),
            None => out.add_campaign(monotonicity_campaign(args.n_max, &budget)?, &keep),
        }
    }
    if matches!(args.suite, Suite::Wbb | Suite::All) {
        let keep = [Property::WeakBudgetBalance];
        match &network {
            Some(net) => {
                let sampler = ProfileSampler::new(grid.clone());
                let reports = all_mechs
                    .iter()
                    .map(|&k| check_wbb(net, Mechanism::new(k), &sampler, args.trials.max(1), args.seed))
                    .collect::<Result<Vec<_>, _>>()?;
                out.add_single(reports, &keep);
            }
            None => out.add_campaign(wbb_campaign(&random, &all_mechs, 10, &budget)?, &keep),
        }
    }
    if matches!(args.suite, Suite::Dominance | Suite::All) {
        let keep = [Property::RevenueDominance];
        match &network {
            Some(net) => {
                let profile = truthful_profile(net);
                let cmp = check_revenue_dominance(net, &profile)?;
                let mut r = VerificationReport::new(Property::RevenueDominance, Some(MechanismKind::Idm));
                r.instances_checked = 1;
                let problems = cmp.violations();
                if !problems.is_empty() {
                    r.record(Counterexample {
                        scenario: ScenarioFile::from_network(net, &[], Some(&profile)),
                        buyer: None,
                        truthful_utility: None,
                        deviation: None,
                        deviating_utility: None,
                        detail: problems.join("; "),
                    });
                }
                out.add_single(vec![r], &keep);
            }
            None => out.add_campaign(dominance_campaign(&random, &budget)?, &keep),
        }
    }

    let passed = out.reports.iter().all(VerificationReport::passed);
    let status = if out.truncated {
        Status::Truncated
    } else if passed {
        Status::Ok
    } else {
        Status::Failed
    };
    let summary = VerifyOutput {
        suite: args.suite,
        passed,
        truncated: out.truncated,
        networks_checked: out.networks,
        elapsed_secs: start.elapsed().as_secs_f64(),
        reports: out.reports,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print_pretty(&summary);
    }
    Ok(status)
}

fn print_pretty(s: &VerifyOutput) {
    for r in &s.reports {
        let verdict = match (r.holds(), r.expected_to_hold) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "EXPECTED",
        };
        let who = r.mechanism.map(|m| format!(" {m}")).unwrap_or_default();
        println!(
            "{verdict:<8} {}{who}: {} instances, {} deviations, {} violations",
            r.property, r.instances_checked, r.deviations_checked, r.violations
        );
        let shown = if r.expected_to_hold { 3 } else { 1 };
        for cx in r.counterexamples.iter().take(shown) {
            let buyer = cx.buyer.map(|b| format!("buyer {b}: ")).unwrap_or_default();
            println!("    {buyer}{}", cx.detail);
            if let Some(d) = &cx.deviation {
                println!("    deviation: {}", serde_json::to_string(d).unwrap_or_default());
            }
            println!("    scenario: {}", serde_json::to_string(&cx.scenario).unwrap_or_default());
        }
    }
    let tail = if s.truncated { ", stopped early by the resource bound" } else { "" };
    println!(
        "{} networks in {:.2}s: {}{tail}",
        s.networks_checked,
        s.elapsed_secs,
        if s.passed { "ok" } else { "failed" }
    );
}
