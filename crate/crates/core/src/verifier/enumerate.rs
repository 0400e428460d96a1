//! Exhaustive enumeration of small connected networks with the seller fixed
//! at agent 0.

use std::collections::BTreeSet;

use crate::model::{AgentId, SocialNetwork};
use crate::value::Value;

use super::VerifyError;

/// Largest agent count accepted for exhaustive enumeration.
pub const EXHAUSTIVE_N_MAX: usize = 6;

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

fn connected(n: usize, adj: &[u32]) -> bool {
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0u32;
        for (v, &row) in adj.iter().enumerate().take(n) {
            if frontier & (1 << v) != 0 {
                next |= row;
            }
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen == (1u32 << n) - 1
}

/// Canonical edge mask under relabelings of the buyers (seller stays 0):
/// the smallest mask over all buyer permutations.
fn canonical_mask(n: usize, mask: u32, pairs: &[(usize, usize)]) -> u32 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u32::MAX;
    loop {
        let mut m = 0u32;
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if mask & (1 << k) != 0 {
                let (x, y) = (perm[a].min(perm[b]), perm[a].max(perm[b]));
                let idx = pairs.iter().position(|&p| p == (x, y)).expect("pair exists");
                m |= 1 << idx;
            }
        }
        best = best.min(m);
        if !next_permutation(&mut perm[1..]) {
            break;
        }
    }
    best
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// All connected graphs on exactly `n` labeled agents with the seller at 0
/// and seller degree at least `seller_degree_min`, in ascending edge-mask
/// order. With `up_to_isomorphism`, one representative per class of buyer
/// relabelings. Valuations are all zero.
pub fn connected_topologies(
    n: usize,
    seller_degree_min: usize,
    up_to_isomorphism: bool,
) -> Result<Vec<SocialNetwork>, VerifyError> {
    if n > EXHAUSTIVE_N_MAX {
        return Err(VerifyError::TooLarge { n, max: EXHAUSTIVE_N_MAX });
    }
    if n < 2 {
        return Ok(Vec::new());
    }
    let pairs = pairs(n);
    let mut seen_classes = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let mut adj = vec![0u32; n];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if mask & (1 << k) != 0 {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
        }
        if (adj[0].count_ones() as usize) < seller_degree_min || !connected(n, &adj) {
            continue;
        }
        if up_to_isomorphism && !seen_classes.insert(canonical_mask(n, mask, &pairs)) {
            continue;
        }
        let edges: Vec<_> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &(a, b))| (AgentId::new(a), AgentId::new(b)))
            .collect();
        out.push(
            SocialNetwork::from_edges(n, AgentId(0), &edges, |_| Value::ZERO).expect("connected graphs are valid"),
        );
    }
    Ok(out)
}

/// Every valuation assignment from `grid` for the buyers of `topology`,
/// buyer 1 varying slowest.
pub fn valuation_assignments<'a>(
    topology: &'a SocialNetwork,
    grid: &'a [Value],
) -> impl Iterator<Item = SocialNetwork> + 'a {
    let buyers = topology.n() - 1;
    let total = grid.len().checked_pow(buyers as u32).unwrap_or(0);
    (0..total).map(move |mut code| {
        let mut values = vec![Value::ZERO; topology.n()];
        for slot in (1..topology.n()).rev() {
            values[slot] = grid[code % grid.len()];
            code /= grid.len();
        }
        topology.with_valuations(values).expect("grid values are non-negative")
    })
}

/// Every connected network on `2..=n_max` agents (seller 0) crossed with
/// every buyer valuation assignment from `grid`, in deterministic order.
pub fn enumerate_connected_networks(
    n_max: usize,
    grid: &[Value],
    seller_degree_min: usize,
) -> Result<impl Iterator<Item = SocialNetwork> + '_, VerifyError> {
    if grid.is_empty() {
        return Err(VerifyError::EmptyGrid);
    }
    if grid.iter().any(|v| v.is_negative()) {
        return Err(VerifyError::NegativeGrid);
    }
    let mut topologies = Vec::new();
    for n in 2..=n_max {
        topologies.extend(connected_topologies(n, seller_degree_min, false)?);
    }
    Ok(topologies.into_iter().flat_map(move |t| valuation_assignments(&t, grid).collect::<Vec<_>>()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid01() -> Vec<Value> {
        vec![Value::ZERO, Value::from_units(1)]
    }

    #[test]
    fn two_agents_two_scenarios() {
        let nets: Vec<_> = enumerate_connected_networks(2, &grid01(), 0).unwrap().collect();
        assert_eq!(nets.len(), 2);
        assert_eq!(nets[0].valuation(AgentId(1)), Value::ZERO);
        assert_eq!(nets[1].valuation(AgentId(1)), Value::from_units(1));
    }

    #[test]
    fn three_agents_include_path_and_triangle() {
        let tops = connected_topologies(3, 0, false).unwrap();
        let edge_counts: Vec<usize> = tops.iter().map(|t| t.edges().count()).collect();
        assert_eq!(edge_counts.iter().filter(|&&e| e == 3).count(), 1);
        assert_eq!(edge_counts.iter().filter(|&&e| e == 2).count(), 3);
    }

    #[test]
    fn counts_match_independent_enumeration() {
        // Labeled connected graphs on 2, 3, 4, 5 vertices: 1, 4, 38, 728.
        let counts: Vec<usize> = (2..=5).map(|n| connected_topologies(n, 0, false).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 4, 38, 728]);
        // 1*2 + 4*4 + 38*8, counted by a separate brute-force script.
        assert_eq!(enumerate_connected_networks(4, &grid01(), 0).unwrap().count(), 322);
    }

    #[test]
    fn isomorphism_reduction_and_seller_degree() {
        // Rooted connected graphs up to relabeling of the non-root vertices.
        let iso: Vec<usize> = (2..=5).map(|n| connected_topologies(n, 0, true).unwrap().len()).collect();
        assert_eq!(iso, vec![1, 3, 11, 58]);
        assert!(connected_topologies(4, 2, false).unwrap().iter().all(|t| t.neighbors(AgentId(0)).len() >= 2));
        assert!(connected_topologies(7, 0, false).is_err());
    }

    #[test]
    fn order_is_deterministic() {
        let a: Vec<_> = enumerate_connected_networks(3, &grid01(), 0).unwrap().collect();
        let b: Vec<_> = enumerate_connected_networks(3, &grid01(), 0).unwrap().collect();
        assert_eq!(a, b);
    }
}
