use std::path::PathBuf;

use clap::{Args, Subcommand};
use netauction::generators::{deficit_line, erdos_renyi_connected, line_network, random_tree};
use netauction::scenario::ScenarioFile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{emit, input, Status};

#[derive(Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Valuations are drawn uniformly from this grid (random graphs only)
    #[arg(long, global = true, default_value = "0,1,2,3,4,5,6,7,8,9,10")]
    pub grid: String,
    /// Output file (default: stdout)
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum GenKind {
    /// Seller at one end of a path of `l` buyers; all values 0 except the far end, 1
    Line {
        l: usize,
        /// Explicit buyer values along the path, comma separated
        #[arg(long)]
        values: Option<String>,
    },
    /// Connected G(n, p) with `n` agents including the seller
    Er { n: usize, p: f64 },
    /// Uniform random tree on `n` agents including the seller
    Tree { n: usize },
}

pub fn gen(args: &GenArgs) -> anyhow::Result<Status> {
    let grid = input::parse_grid(&args.grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (net, name) = match &args.kind {
        GenKind::Line { l, values: None } => (deficit_line(*l)?, format!("line-{l}")),
        GenKind::Line { l, values: Some(v) } => (line_network(*l, &input::parse_grid(v)?)?, format!("line-{l}")),
        GenKind::Er { n, p } => {
            (erdos_renyi_connected(*n, *p, &grid, &mut rng)?, format!("er-{n}-{p}-seed{}", args.seed))
        }
        GenKind::Tree { n } => (random_tree(*n, &grid, &mut rng)?, format!("tree-{n}-seed{}", args.seed)),
    };
    let mut file = ScenarioFile::from_network(&net, &[], None);
    file.name = Some(name);
    emit(args.out.as_ref(), &file.to_json())?;
    Ok(Status::Ok)
}
