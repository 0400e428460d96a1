//! Seeded scenario generators: lines, connected Erdős–Rényi graphs, uniform
//! random trees, and random (feasible) action profiles.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{feasibility_transform, Action, ActionProfile, AgentId, ModelError, SocialNetwork};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("need at least one buyer")]
    NoBuyers,
    #[error("edge probability {0} is outside (0, 1]")]
    BadProbability(f64),
    #[error("no connected G({n}, {p}) sample after {attempts} attempts")]
    NotConnected { n: usize, p: f64, attempts: usize },
    #[error("valuation grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
}

const MAX_ATTEMPTS: usize = 10_000;

/// Seller 0 at one end of a path through buyers `1..=l`; `values[k]` is
/// buyer `k + 1`'s valuation.
pub fn line_network(l: usize, values: &[Value]) -> Result<SocialNetwork, GenError> {
    if l == 0 {
        return Err(GenError::NoBuyers);
    }
    if values.len() != l {
        return Err(ModelError::LengthMismatch { expected: l, got: values.len() }.into());
    }
    let edges: Vec<_> = (0..l).map(|i| (AgentId::new(i), AgentId::new(i + 1))).collect();
    Ok(SocialNetwork::from_edges(l + 1, AgentId(0), &edges, |a| values[a.index() - 1])?)
}

/// The deficit example for network VCG: all zeros except the far end, which
/// values the item at 1.
pub fn deficit_line(l: usize) -> Result<SocialNetwork, GenError> {
    let mut values = vec![Value::ZERO; l];
    if let Some(last) = values.last_mut() {
        *last = Value::from_units(1);
    }
    line_network(l, &values)
}

/// `n` agents (seller 0 plus `n - 1` buyers), each pair linked with
/// probability `p`, resampled until connected.
pub fn erdos_renyi_connected<R: Rng>(n: usize, p: f64, grid: &[Value], rng: &mut R) -> Result<SocialNetwork, GenError> {
    if n < 2 {
        return Err(GenError::NoBuyers);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GenError::BadProbability(p));
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    edges.push((AgentId::new(a), AgentId::new(b)));
                }
            }
        }
        if is_connected(n, &edges) {
            return with_grid_values(n, &edges, grid, rng);
        }
    }
    Err(GenError::NotConnected { n, p, attempts: MAX_ATTEMPTS })
}

/// Uniform labeled tree on `n` agents via a random Prüfer sequence.
pub fn random_tree<R: Rng>(n: usize, grid: &[Value], rng: &mut R) -> Result<SocialNetwork, GenError> {
    if n < 2 {
        return Err(GenError::NoBuyers);
    }
    let edges = prufer_decode(n, &(0..n.saturating_sub(2)).map(|_| rng.gen_range(0..n)).collect::<Vec<_>>());
    with_grid_values(n, &edges, grid, rng)
}

fn prufer_decode(n: usize, seq: &[usize]) -> Vec<(AgentId, AgentId)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&i| degree[i] == 1).expect("a leaf always exists");
        edges.push((AgentId::new(leaf), AgentId::new(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    edges.push((AgentId::new(rest[0]), AgentId::new(rest[1])));
    edges
}

fn with_grid_values<R: Rng>(
    n: usize,
    edges: &[(AgentId, AgentId)],
    grid: &[Value],
    rng: &mut R,
) -> Result<SocialNetwork, GenError> {
    if grid.is_empty() {
        return Err(GenError::EmptyGrid);
    }
    let values: Vec<Value> = (0..n).map(|_| *grid.choose(rng).expect("non-empty")).collect();
    Ok(SocialNetwork::from_edges(n, AgentId(0), edges, |a| values[a.index()])?)
}

pub(crate) fn is_connected(n: usize, edges: &[(AgentId, AgentId)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a.index()].push(b.index());
        adj[b.index()].push(a.index());
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Draws arbitrary (possibly untruthful) actions and feasibility-transforms
/// them.
#[derive(Debug, Clone)]
pub struct ProfileSampler {
    pub grid: Vec<Value>,
    /// Probability that a buyer picks `Null`.
    pub null_probability: f64,
    /// Probability that each neighbor is included in the diffusion set.
    pub forward_probability: f64,
}

impl ProfileSampler {
    pub fn new(grid: Vec<Value>) -> Self {
        ProfileSampler { grid, null_probability: 0.1, forward_probability: 0.7 }
    }

    pub fn random_action<R: Rng>(&self, net: &SocialNetwork, buyer: AgentId, rng: &mut R) -> Action {
        if rng.gen_bool(self.null_probability) {
            return Action::Null;
        }
        let value = *self.grid.choose(rng).expect("non-empty grid");
        let diffusion =
            net.neighbors(buyer).iter().copied().filter(|_| rng.gen_bool(self.forward_probability)).collect();
        Action::bid(value, diffusion)
    }

    /// A random feasible profile.
    pub fn sample<R: Rng>(&self, net: &SocialNetwork, rng: &mut R) -> ActionProfile {
        let actions = net
            .agents()
            .map(|a| if a == net.seller() { Action::Null } else { self.random_action(net, a, rng) })
            .collect();
        let raw = ActionProfile::new(net, actions).expect("sampled actions are well-formed");
        feasibility_transform(net, &raw)
    }
}
