//! Greedy shrinking of failing networks.

use crate::generators::is_connected;
use crate::model::{AgentId, SocialNetwork};
use crate::value::Value;

/// `net` without `agent`, higher ids shifted down by one. `None` for the
/// seller, for the last buyer, or when the rest falls apart.
pub fn remove_agent(net: &SocialNetwork, agent: AgentId) -> Option<SocialNetwork> {
    if agent == net.seller() || !net.contains(agent) || net.n() <= 2 {
        return None;
    }
    let relabel = |a: AgentId| if a.0 > agent.0 { AgentId(a.0 - 1) } else { a };
    let edges: Vec<(AgentId, AgentId)> =
        net.edges().filter(|&(a, b)| a != agent && b != agent).map(|(a, b)| (relabel(a), relabel(b))).collect();
    let n = net.n() - 1;
    if !is_connected(n, &edges) {
        return None;
    }
    let values: Vec<Value> = net.agents().filter(|&a| a != agent).map(|a| net.valuation(a)).collect();
    let seller = relabel(net.seller());
    let shrunk = SocialNetwork::from_edges(n, seller, &edges, |a| values[a.index()]).ok()?;
    shrunk.with_valuations(values).ok()
}

/// Removes buyers, then lowers valuations to smaller `grid` points, as long
/// as `still_fails` keeps holding. Returns `net` unchanged if it does not
/// fail to begin with.
pub fn minimize_counterexample(
    net: &SocialNetwork,
    grid: &[Value],
    still_fails: impl Fn(&SocialNetwork) -> bool,
) -> SocialNetwork {
    let mut current = net.clone();
    if !still_fails(&current) {
        return current;
    }
    'shrink: loop {
        let buyers: Vec<AgentId> = current.buyers().collect();
        for &b in buyers.iter().rev() {
            if let Some(smaller) = remove_agent(&current, b) {
                if still_fails(&smaller) {
                    current = smaller;
                    continue 'shrink;
                }
            }
        }
        break;
    }
    let buyers: Vec<AgentId> = current.buyers().collect();
    for b in buyers {
        for &g in grid.iter().filter(|&&g| g < current.valuation(b)) {
            let mut values = current.valuations().to_vec();
            values[b.index()] = g;
            let candidate = current.with_valuations(values).expect("grid values are non-negative");
            if still_fails(&candidate) {
                current = candidate;
                break;
            }
        }
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::line_network;

    fn v(u: i64) -> Value {
        Value::from_units(u)
    }

    #[test]
    fn removal_relabels_and_keeps_connectivity() {
        let net = line_network(3, &[v(1), v(2), v(3)]).unwrap();
        // Cutting the middle of a path disconnects it.
        assert!(remove_agent(&net, AgentId(1)).is_none());
        let tail = remove_agent(&net, AgentId(3)).unwrap();
        assert_eq!(tail.n(), 3);
        assert_eq!(tail.valuation(AgentId(2)), v(2));
        assert!(remove_agent(&net, AgentId(0)).is_none());
        let single = line_network(1, &[v(1)]).unwrap();
        assert!(remove_agent(&single, AgentId(1)).is_none());
    }

    #[test]
    fn shrinks_to_smallest_witness() {
        // Synthetic failure: some buyer values the item at 2 or more.
        let net = line_network(4, &[v(0), v(3), v(1), v(2)]).unwrap();
        let grid = [v(0), v(1), v(2), v(3)];
        let fails = |n: &SocialNetwork| n.buyers().any(|b| n.valuation(b) >= v(2));
        let small = minimize_counterexample(&net, &grid, fails);
        // Buyer 1 is a cut vertex, so only the tail can go.
        assert_eq!(small.n(), 3);
        assert_eq!(small.valuations(), &[v(0), v(0), v(2)]);
        // Non-failing input comes back untouched.
        let ok = line_network(2, &[v(0), v(0)]).unwrap();
        assert_eq!(minimize_counterexample(&ok, &grid, fails), ok);
    }
}
