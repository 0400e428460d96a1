use anyhow::bail;
use clap::{Args, ValueEnum};
use netauction::mechanisms::{Mechanism, MechanismKind, Outcome, TieBreak};
use netauction::model::{truthful_profile, utility, AgentId};
use netauction::value::Value;
use netauction::verifier::check_revenue_dominance;
use netauction::Scenario;
use serde::Serialize;

use crate::{input, parse_mechanism, OutputFormat, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TieBreakArg {
    LowestId,
    Seeded,
}

#[derive(Args)]
pub struct RunArgs {
    /// Scenario file or built-in name (line5, example12, single)
    pub scenario: String,
    #[arg(long, short, default_value = "idm", value_parser = parse_mechanism)]
    pub mechanism: MechanismKind,
    #[arg(long, value_enum, default_value = "lowest-id")]
    pub tie_break: TieBreakArg,
    /// Seed for `--tie-break seeded`
    #[arg(long)]
    pub seed: Option<u64>,
    /// Decimal places kept from scenario valuations and bids
    #[arg(long, default_value_t = 6)]
    pub precision: u32,
    #[arg(long, short, value_enum, default_value = "pretty")]
    pub output: OutputFormat,
}

#[derive(Args)]
pub struct CompareArgs {
    pub scenario: String,
    #[arg(long, default_value_t = 6)]
    pub precision: u32,
    #[arg(long, short, value_enum, default_value = "pretty")]
    pub output: OutputFormat,
}

#[derive(Serialize)]
struct AgentRow {
    id: AgentId,
    label: String,
    valuation: Value,
    bid: Option<Value>,
    status: String,
    payment: Value,
    utility: Value,
}

#[derive(Serialize)]
struct RunReport {
    scenario: String,
    mechanism: MechanismKind,
    tie_break: TieBreak,
    forced_null: Vec<AgentId>,
    winner: Option<String>,
    revenue: Value,
    welfare: Value,
    agents: Vec<AgentRow>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    mechanism: &'a str,
    winner: String,
    revenue: String,
    welfare: String,
    n: usize,
    seed: String,
}

fn tie_break(args: &RunArgs) -> anyhow::Result<TieBreak> {
    match (args.tie_break, args.seed) {
        (TieBreakArg::LowestId, None) => Ok(TieBreak::LowestId),
        (TieBreakArg::Seeded, Some(s)) => Ok(TieBreak::Seeded(s)),
        (TieBreakArg::Seeded, None) => bail!("--tie-break seeded needs --seed"),
        (TieBreakArg::LowestId, Some(_)) => bail!("--seed only applies to --tie-break seeded"),
    }
}

fn csv_text(rows: &[CsvRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

fn report(scenario: &Scenario, name: &str, outcome: &Outcome, tie: TieBreak, forced: Vec<AgentId>) -> RunReport {
    let net = &scenario.network;
    let profile = input::effective_profile(scenario);
    let agents = net
        .buyers()
        .map(|b| AgentRow {
            id: b,
            label: scenario.label(b),
            valuation: net.valuation(b),
            bid: profile.bid(b),
            status: outcome.status(b).to_string(),
            payment: outcome.payment(b),
            utility: utility(net, b, outcome).expect("buyer"),
        })
        .collect();
    RunReport {
        scenario: name.to_string(),
        mechanism: outcome.mechanism,
        tie_break: tie,
        forced_null: forced,
        winner: outcome.winner.map(|w| scenario.label(w)),
        revenue: outcome.revenue,
        welfare: outcome.welfare,
        agents,
    }
}

pub fn run(args: &RunArgs) -> anyhow::Result<Status> {
    let tie = tie_break(args)?;
    let (scenario, name) = input::load(&args.scenario, args.precision)?;
    let forced = input::warn_forced(&scenario);
    let profile = input::effective_profile(&scenario);
    let outcome = Mechanism::new(args.mechanism).with_tie_break(tie).run(&scenario.network, &profile)?;
    let rep = report(&scenario, &name, &outcome, tie, forced);
    let text = match args.output {
        OutputFormat::Json => serde_json::to_string_pretty(&rep)? + "\n",
        OutputFormat::Csv => csv_text(&[CsvRow {
            scenario: &name,
            mechanism: args.mechanism.short_name(),
            winner: rep.winner.clone().unwrap_or_default(),
            revenue: rep.revenue.to_string(),
            welfare: rep.welfare.to_string(),
            n: scenario.network.n(),
            seed: args.seed.map(|s| s.to_string()).unwrap_or_default(),
        }])?,
        OutputFormat::Pretty => {
            let rows: Vec<Vec<String>> = rep
                .agents
                .iter()
                .map(|a| {
                    vec![
                        a.label.clone(),
                        a.valuation.to_string(),
                        a.bid.map_or("-".into(), |b| b.to_string()),
                        a.status.clone(),
                        a.payment.to_string(),
                        a.utility.to_string(),
                    ]
                })
                .collect();
            format!(
                "{name}: {}\n{}winner {}, revenue {}, welfare {}\n",
                args.mechanism,
                table(&["buyer", "value", "bid", "status", "payment", "utility"], &rows),
                rep.winner.as_deref().unwrap_or("none"),
                rep.revenue,
                rep.welfare
            )
        }
    };
    print!("{text}");
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct CompareRow {
    mechanism: MechanismKind,
    winner: Option<String>,
    revenue: Value,
    welfare: Value,
}

#[derive(Serialize)]
struct CompareReport {
    scenario: String,
    rows: Vec<CompareRow>,
    violations: Vec<String>,
}

pub fn compare(args: &CompareArgs) -> anyhow::Result<Status> {
    let (scenario, name) = input::load(&args.scenario, args.precision)?;
    let net = &scenario.network;
    let profile = truthful_profile(net);
    let rows: Vec<CompareRow> = MechanismKind::ALL
        .iter()
        .map(|&k| {
            let o = Mechanism::new(k).run(net, &profile)?;
            Ok(CompareRow {
                mechanism: k,
                winner: o.winner.map(|w| scenario.label(w)),
                revenue: o.revenue,
                welfare: o.welfare,
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let violations = check_revenue_dominance(net, &profile)?.violations();
    let status = if violations.is_empty() { Status::Ok } else { Status::Failed };
    let text = match args.output {
        OutputFormat::Json => serde_json::to_string_pretty(&CompareReport { scenario: name, rows, violations })? + "\n",
        OutputFormat::Csv => csv_text(
            &rows
                .iter()
                .map(|r| CsvRow {
                    scenario: &name,
                    mechanism: r.mechanism.short_name(),
                    winner: r.winner.clone().unwrap_or_default(),
                    revenue: r.revenue.to_string(),
                    welfare: r.welfare.to_string(),
                    n: net.n(),
                    seed: String::new(),
                })
                .collect::<Vec<_>>(),
        )?,
        OutputFormat::Pretty => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.mechanism.to_string(),
                        r.winner.clone().unwrap_or_else(|| "none".into()),
                        r.revenue.to_string(),
                        r.welfare.to_string(),
                    ]
                })
                .collect();
            let mut t = format!("{name}\n{}", table(&["mechanism", "winner", "revenue", "welfare"], &cells));
            if violations.is_empty() {
                t += "IDM revenue dominates: ok\n";
            }
            for v in &violations {
                t += &format!("FAIL: {v}\n");
            }
            t
        }
    };
    print!("{text}");
    Ok(status)
}
