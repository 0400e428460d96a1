use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use netauction::graph::{dominator_analysis, oracle_critical_sets, DiffusionGraph};
use netauction::AgentId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{OutputFormat, Status};

#[derive(Args)]
pub struct BenchArgs {
    /// Node counts, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Average out-degree of the random digraphs
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    #[arg(long, short, value_enum, default_value = "pretty")]
    pub output: OutputFormat,
}

#[derive(Serialize)]
struct Row {
    n: usize,
    edges: usize,
    reachable: usize,
    dominator_secs: f64,
    oracle_secs: f64,
}

/// Random digraph rooted at 0 with a spanning arborescence, so every node
/// is reachable, plus `degree * n` random extra edges.
fn random_digraph(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> anyhow::Result<DiffusionGraph> {
    let mut edges: Vec<(AgentId, AgentId)> =
        (1..n).map(|v| (AgentId::new(rng.gen_range(0..v)), AgentId::new(v))).collect();
    for _ in 0..degree * n {
        edges.push((AgentId::new(rng.gen_range(0..n)), AgentId::new(rng.gen_range(0..n))));
    }
    Ok(DiffusionGraph::from_digraph(n, AgentId(0), &edges)?)
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<Status> {
    let mut rows = Vec::new();
    for &n in &args.sizes {
        if n == 0 {
            bail!("sizes must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ n as u64);
        let g = random_digraph(n, args.degree, &mut rng).with_context(|| format!("building a graph of size {n}"))?;
        let t = Instant::now();
        let analysis = dominator_analysis(&g);
        let dominator_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let oracle = oracle_critical_sets(&g);
        let oracle_secs = t.elapsed().as_secs_f64();
        for j in g.participants() {
            let mut fast = analysis.critical_nodes(j)?;
            fast.sort_unstable();
            if fast != oracle[j.index()] {
                bail!("dominator tree disagrees with the oracle at node {j} (n = {n})");
            }
        }
        rows.push(Row {
            n,
            edges: g.edge_count(),
            reachable: g.participants().count() + 1,
            dominator_secs,
            oracle_secs,
        });
    }
    match args.output {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Pretty => {
            println!("{:>7} {:>8} {:>14} {:>14} {:>9}", "n", "edges", "dominators(s)", "oracle(s)", "ratio");
            for r in &rows {
                let ratio = if r.dominator_secs > 0.0 { r.oracle_secs / r.dominator_secs } else { f64::NAN };
                println!("{:>7} {:>8} {:>14.6} {:>14.6} {:>9.1}", r.n, r.edges, r.dominator_secs, r.oracle_secs, ratio);
            }
        }
    }
    Ok(Status::Ok)
}
