//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use netauction::generators::{deficit_line, erdos_renyi_connected, ProfileSampler};
use netauction::graph::{build_diffusion_graph, dominator_analysis, oracle_mismatches};
use netauction::mechanisms::{Mechanism, MechanismKind, OutsideMax};
use netauction::model::{truthful_profile, AgentId};
use netauction::scenario::{builtin, parse_scenario};
use netauction::value::Value;
use netauction::verifier::{
    dominance_campaign, incentive_campaign, monotonicity_campaign, Budget, CampaignConfig, CampaignReport,
    DeviationSpace, Property, RandomGraphConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(units: i64) -> Value {
    Value::from_units(units)
}

struct Gate {
    failures: usize,
}

impl Gate {
    fn report(&mut self, id: u32, name: &str, problems: Vec<String>, elapsed: Duration, limit: Option<Duration>) {
        let mut problems = problems;
        if let Some(limit) = limit {
            if elapsed > limit {
                problems.push(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        let verdict = if problems.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {id} [{verdict}] {name} ({elapsed:.2?})");
        for p in &problems {
            println!("    {p}");
        }
        if !problems.is_empty() {
            self.failures += 1;
        }
    }
}

fn expect<T: PartialEq + std::fmt::Debug>(problems: &mut Vec<String>, what: &str, got: T, want: T) {
    if got != want {
        problems.push(format!("{what}: got {got:?}, expected {want:?}"));
    }
}

fn deficit_line_criterion() -> Vec<String> {
    let mut p = Vec::new();
    let net = deficit_line(5).expect("line");
    let profile = truthful_profile(&net);
    let run = |k| Mechanism::new(k).run(&net, &profile).expect("feasible");
    let vcg = run(MechanismKind::NetworkVcg);
    expect(&mut p, "VCG revenue", vcg.revenue, v(-4));
    for i in 1..=4 {
        expect(&mut p, &format!("VCG payment of intermediary {i}"), vcg.payment(AgentId(i)), v(-1));
    }
    expect(&mut p, "SPL revenue", run(MechanismKind::SecondPriceLocal).revenue, v(0));
    let idm = run(MechanismKind::Idm);
    expect(&mut p, "IDM revenue", idm.revenue, v(0));
    if idm.payments.iter().any(|x| x.is_negative()) {
        p.push(format!("IDM payments contain a negative entry: {:?}", idm.payments));
    }
    p
}

fn example12_criterion() -> Vec<String> {
    let mut p = Vec::new();
    let s = parse_scenario(builtin("example12").expect("built in")).expect("valid scenario");
    let net = &s.network;
    let a = |name: &str| s.agent(name).expect("label");
    let names = |ids: Vec<AgentId>| ids.into_iter().map(|i| s.label(i)).collect::<Vec<_>>();
    let profile = truthful_profile(net);
    let graph = build_diffusion_graph(net, &profile).expect("feasible");
    let analysis = dominator_analysis(&graph);

    expect(&mut p, "C_L", names(analysis.sequence(a("L")).unwrap()), vec!["C".into(), "I".into(), "L".into()]);
    expect(&mut p, "C_G", names(analysis.sequence(a("G")).unwrap()), vec!["D".into(), "G".into()]);
    expect(
        &mut p,
        "d_D",
        names(analysis.dependent_set(a("D")).unwrap()),
        ["D", "F", "G", "K"].map(String::from).to_vec(),
    );
    expect(&mut p, "d_G", names(analysis.dependent_set(a("G")).unwrap()), ["G", "K"].map(String::from).to_vec());
    expect(&mut p, "v_I", net.valuation(a("I")), v(12));
    let outside = OutsideMax::new(&analysis, &profile.bids(), net.seller_reserve());
    expect(&mut p, "v*(-d_I)", outside.without(&analysis, a("I")), v(11));
    expect(&mut p, "v*(-d_C)", outside.without(&analysis, a("C")), v(10));

    let idm = Mechanism::new(MechanismKind::Idm).run(net, &profile).expect("feasible");
    expect(&mut p, "IDM winner", idm.winner.map(|w| s.label(w)), Some("I".into()));
    expect(&mut p, "p_I", idm.payment(a("I")), v(11));
    expect(&mut p, "p_C", idm.payment(a("C")), v(-1));
    expect(&mut p, "IDM revenue", idm.revenue, v(10));
    p
}

fn campaign_problems(report: &CampaignReport, properties: &[Property]) -> Vec<String> {
    let mut p = Vec::new();
    if report.truncated {
        p.push("sweep was truncated".into());
    }
    for r in report.reports.iter().filter(|r| properties.contains(&r.property)) {
        let who = r.mechanism.map_or(String::new(), |m| format!(" {m}"));
        println!(
            "    {}{who}: {} instances, {} deviations, {} violations",
            r.property, r.instances_checked, r.deviations_checked, r.violations
        );
        if r.instances_checked == 0 {
            p.push(format!("{}{who}: nothing was checked", r.property));
        }
        if !r.holds() {
            p.push(format!("{}{who}: {} violations", r.property, r.violations));
            for cx in r.counterexamples.iter().take(3) {
                p.push(format!("  {} | buyer {:?} | {}", cx.detail, cx.buyer, cx.scenario.to_json().replace('\n', "")));
            }
        }
    }
    p
}

fn dominance_criterion() -> Vec<String> {
    let cfg = RandomGraphConfig { count: 10_000, n_max: 50, grid: (0..=10).map(v).collect(), seed: 20_240_601 };
    let report = dominance_campaign(&cfg, &Budget::unlimited()).expect("campaign");
    let mut p = campaign_problems(&report, &[Property::RevenueDominance]);
    expect(&mut p, "graphs checked", report.networks_checked, 10_000);
    p
}

fn oracle_criterion() -> Vec<String> {
    let mut p = Vec::new();
    let grid: Vec<Value> = (0..=5).map(v).collect();
    let sampler = ProfileSampler::new(grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut participants = 0usize;
    for k in 0..500 {
        let n = rng.gen_range(2..=200);
        let p_edge = (3.0 / n as f64).clamp(0.02, 1.0).max(1.2 * (n as f64).ln() / n as f64).min(1.0);
        let net = erdos_renyi_connected(n, p_edge, &grid, &mut rng).expect("connected");
        let profile = sampler.sample(&net, &mut rng);
        let g = build_diffusion_graph(&net, &profile).expect("feasible");
        let analysis = dominator_analysis(&g);
        participants += g.participants().count();
        let bad = oracle_mismatches(&g, &analysis);
        if !bad.is_empty() {
            p.push(format!("profile #{k} (n = {n}): mismatches at {bad:?}"));
        }
    }
    println!("    500 profiles, {participants} participants compared");
    p
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: 0 };
    let second = Some(Duration::from_secs(1));

    let t = Instant::now();
    let p = deficit_line_criterion();
    gate.report(1, "line of five: VCG deficit, SPL and IDM revenue", p, t.elapsed(), second);

    let t = Instant::now();
    let p = example12_criterion();
    gate.report(2, "twelve-buyer worked example under IDM", p, t.elapsed(), second);

    let t = Instant::now();
    let space = DeviationSpace::new((0..=3).map(v).collect()).expect("grid");
    let cfg = CampaignConfig::new(5, &[MechanismKind::NetworkVcg, MechanismKind::Idm], space);
    let sweep = incentive_campaign(&cfg, &Budget::unlimited()).expect("sweep");
    let mut p = campaign_problems(&sweep, &[Property::IndividualRationality, Property::IncentiveCompatibility]);
    println!("    {} networks swept", sweep.networks_checked);
    // 1*4 + 4*16 + 38*64 + 728*256 networks with n <= 5 over {0,1,2,3}.
    expect(&mut p, "networks swept", sweep.networks_checked, 4 + 64 + 2432 + 186_368);
    gate.report(3, "exhaustive IC and IR, n <= 5, grid {0,1,2,3}, VCG and IDM", p, t.elapsed(), None);

    let t = Instant::now();
    let p = dominance_criterion();
    gate.report(4, "revenue dominance on 10,000 random graphs", p, t.elapsed(), Some(Duration::from_secs(60)));

    let t = Instant::now();
    let p = oracle_criterion();
    gate.report(5, "dominator tree vs. deletion oracle on 500 profiles", p, t.elapsed(), None);

    let t = Instant::now();
    let mono = monotonicity_campaign(5, &Budget::unlimited()).expect("sweep");
    let mut p = campaign_problems(&mono, &[Property::DependentSetMonotonicity]);
    p.extend(campaign_problems(&sweep, &[Property::UnluckyNeutrality]));
    gate.report(6, "dependent-set monotonicity and unlucky neutrality, n <= 5", p, t.elapsed(), None);

    if gate.failures == 0 {
        println!("acceptance: all 6 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 6 criteria failed", gate.failures);
        ExitCode::FAILURE
    }
}
