//! Diffusion digraphs, diffusion critical nodes and dependent sets.
//!
//! A buyer `i` is critical for `j` when every information path from the
//! seller to `j` passes through `i`; in the rooted diffusion digraph that is
//! exactly "`i` is a proper dominator of `j`". The fast path builds the
//! dominator tree with the Cooper-Harvey-Kennedy iterative algorithm. Each
//! buyer's dependent set `d_i` is then its dominator subtree, which the
//! analysis stores as a contiguous preorder interval.
//!
//! [`critical_nodes_oracle`] recomputes the same sets by deleting one node at
//! a time and re-running reachability. It shares no code with the dominator
//! path and is kept as a differential oracle.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ActionProfile, AgentId, SocialNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("the action profile is not feasible")]
    Infeasible,
    #[error("agent {0} does not participate in the diffusion graph")]
    NotAParticipant(AgentId),
    #[error("agent {0} is out of range for a graph of {1} nodes")]
    UnknownNode(AgentId, usize),
}

const NONE: u32 = u32::MAX;

/// Directed graph of who forwarded the auction to whom.
///
/// Only the seller and participating buyers have out-edges, and edges only
/// point at participants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionGraph {
    root: AgentId,
    out_edges: Vec<Vec<AgentId>>,
    participant: Vec<bool>,
}

impl DiffusionGraph {
    /// Arbitrary digraph rooted at `root`. Nodes the root cannot reach are
    /// treated as non-participants and lose their edges.
    pub fn from_digraph(n: usize, root: AgentId, edges: &[(AgentId, AgentId)]) -> Result<Self, GraphError> {
        if root.index() >= n {
            return Err(GraphError::UnknownNode(root, n));
        }
        let mut out = vec![Vec::new(); n];
        for &(a, b) in edges {
            for x in [a, b] {
                if x.index() >= n {
                    return Err(GraphError::UnknownNode(x, n));
                }
            }
            if b != root && a != b {
                out[a.index()].push(b);
            }
        }
        let reached = bfs(root, &out, None);
        let participant: Vec<bool> = (0..n).map(|i| reached[i] && i != root.index()).collect();
        for (i, list) in out.iter_mut().enumerate() {
            if !reached[i] {
                list.clear();
            }
            list.sort_unstable();
            list.dedup();
        }
        Ok(DiffusionGraph { root, out_edges: out, participant })
    }

    pub fn root(&self) -> AgentId {
        self.root
    }

    pub fn n(&self) -> usize {
        self.out_edges.len()
    }

    pub fn out_edges(&self, node: AgentId) -> &[AgentId] {
        &self.out_edges[node.index()]
    }

    pub fn is_participant(&self, node: AgentId) -> bool {
        self.participant.get(node.index()).copied().unwrap_or(false)
    }

    pub fn participants(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.participant.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| AgentId::new(i))
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.out_edges.iter().enumerate().flat_map(|(i, list)| list.iter().map(move |&j| (AgentId::new(i), j)))
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    /// Edges along which information can actually travel: `u -> v` is dropped
    /// when `v` dominates `u`, since `v` already holds the information by
    /// the time it reaches `u`.
    pub fn flow_edges<'a>(&'a self, analysis: &'a DiffusionAnalysis) -> impl Iterator<Item = (AgentId, AgentId)> + 'a {
        self.edges().filter(move |&(u, v)| !analysis.dominates(v, u))
    }
}

/// Edges `i -> j` for every participant `i` and participating `j` in its
/// reported diffusion set, plus seller -> each participating neighbor.
pub fn build_diffusion_graph(net: &SocialNetwork, profile: &ActionProfile) -> Result<DiffusionGraph, GraphError> {
    if !profile.is_feasible() {
        return Err(GraphError::Infeasible);
    }
    let n = net.n();
    let participant: Vec<bool> = profile.actions().iter().map(|a| !a.is_null()).collect();
    let root = net.seller();
    let keep =
        |targets: &[AgentId]| -> Vec<AgentId> { targets.iter().copied().filter(|t| participant[t.index()]).collect() };
    let out_edges = (0..n)
        .map(|i| {
            let id = AgentId::new(i);
            if id == root {
                keep(net.neighbors(id))
            } else if participant[i] {
                keep(profile.action(id).diffusion_set())
            } else {
                Vec::new()
            }
        })
        .collect();
    Ok(DiffusionGraph { root, out_edges, participant })
}

fn bfs(root: AgentId, out: &[Vec<AgentId>], removed: Option<AgentId>) -> Vec<bool> {
    let mut seen = vec![false; out.len()];
    seen[root.index()] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &out[u.index()] {
            if Some(v) != removed && !seen[v.index()] {
                seen[v.index()] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Dominator tree of a diffusion graph, with each node's subtree stored as a
/// preorder interval `pre[i]..end[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionAnalysis {
    root: AgentId,
    idom: Vec<u32>,
    pre: Vec<u32>,
    end: Vec<u32>,
    order: Vec<AgentId>,
}

impl DiffusionAnalysis {
    pub fn root(&self) -> AgentId {
        self.root
    }

    pub fn n(&self) -> usize {
        self.idom.len()
    }

    pub fn is_participant(&self, node: AgentId) -> bool {
        node != self.root && self.pre.get(node.index()).is_some_and(|&p| p != NONE)
    }

    /// Root first, then participants in dominator-tree preorder.
    pub fn preorder(&self) -> &[AgentId] {
        &self.order
    }

    pub fn preorder_index(&self, node: AgentId) -> Option<usize> {
        match self.pre[node.index()] {
            NONE => None,
            p => Some(p as usize),
        }
    }

    /// End (exclusive) of `node`'s subtree interval in [`Self::preorder`].
    pub fn subtree_end(&self, node: AgentId) -> Option<usize> {
        match self.end[node.index()] {
            NONE => None,
            e => Some(e as usize),
        }
    }

    /// Immediate dominator; `None` for the root and for non-participants.
    pub fn immediate_dominator(&self, node: AgentId) -> Option<AgentId> {
        if node == self.root || !self.is_participant(node) {
            None
        } else {
            Some(AgentId(self.idom[node.index()]))
        }
    }

    /// Whether `a` dominates `b` (reflexive). False if either is absent.
    pub fn dominates(&self, a: AgentId, b: AgentId) -> bool {
        let (pa, pb) = (self.pre[a.index()], self.pre[b.index()]);
        pa != NONE && pb != NONE && pa <= pb && pb < self.end[a.index()]
    }

    /// `j ∈ d_i`: `i` is `j` itself or one of `j`'s critical nodes.
    pub fn in_dependent_set(&self, i: AgentId, j: AgentId) -> bool {
        i != self.root && self.dominates(i, j)
    }

    /// Diffusion critical nodes of `j`, ordered from the seller side.
    pub fn critical_nodes(&self, j: AgentId) -> Result<Vec<AgentId>, GraphError> {
        let mut seq = self.sequence(j)?;
        seq.pop();
        Ok(seq)
    }

    /// Diffusion critical sequence `C_j`: critical nodes from the seller side,
    /// then `j` itself. Dependent sets shrink strictly along it.
    pub fn sequence(&self, j: AgentId) -> Result<Vec<AgentId>, GraphError> {
        if !self.is_participant(j) {
            return Err(GraphError::NotAParticipant(j));
        }
        let mut seq = Vec::new();
        let mut x = j;
        while x != self.root {
            seq.push(x);
            x = AgentId(self.idom[x.index()]);
        }
        seq.reverse();
        Ok(seq)
    }

    /// `d_i`: `i` and every buyer for whom `i` is critical, sorted by id.
    pub fn dependent_set(&self, i: AgentId) -> Result<Vec<AgentId>, GraphError> {
        if !self.is_participant(i) {
            return Err(GraphError::NotAParticipant(i));
        }
        let (p, e) = (self.pre[i.index()] as usize, self.end[i.index()] as usize);
        let mut d = self.order[p..e].to_vec();
        d.sort_unstable();
        Ok(d)
    }
}

/// `−d_i`: every buyer outside `d_i`, participating or not, sorted by id.
pub fn dependent_set_without(analysis: &DiffusionAnalysis, i: AgentId) -> Result<Vec<AgentId>, GraphError> {
    if !analysis.is_participant(i) {
        return Err(GraphError::NotAParticipant(i));
    }
    Ok((0..analysis.n())
        .map(AgentId::new)
        .filter(|&j| j != analysis.root && !analysis.in_dependent_set(i, j))
        .collect())
}

/// Builds the dominator tree of `g` (Cooper, Harvey & Kennedy, "A Simple,
/// Fast Dominance Algorithm").
pub fn dominator_analysis(g: &DiffusionGraph) -> DiffusionAnalysis {
    let n = g.n();
    let root = g.root;

    // Postorder numbering by iterative DFS.
    let mut post = vec![NONE; n];
    let mut postorder: Vec<u32> = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut stack: Vec<(u32, usize)> = vec![(root.0, 0)];
    visited[root.index()] = true;
    while let Some(&mut (u, ref mut next)) = stack.last_mut() {
        let succ = &g.out_edges[u as usize];
        if *next < succ.len() {
            let v = succ[*next];
            *next += 1;
            if !visited[v.index()] {
                visited[v.index()] = true;
                stack.push((v.0, 0));
            }
        } else {
            post[u as usize] = postorder.len() as u32;
            postorder.push(u);
            stack.pop();
        }
    }

    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &u in &postorder {
        for &v in &g.out_edges[u as usize] {
            preds[v.index()].push(u);
        }
    }

    let mut idom = vec![NONE; n];
    idom[root.index()] = root.0;
    let intersect = |idom: &[u32], mut a: u32, mut b: u32| -> u32 {
        while a != b {
            while post[a as usize] < post[b as usize] {
                a = idom[a as usize];
            }
            while post[b as usize] < post[a as usize] {
                b = idom[b as usize];
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &u in postorder.iter().rev() {
            if u == root.0 {
                continue;
            }
            let mut new_idom = NONE;
            for &p in &preds[u as usize] {
                if idom[p as usize] == NONE {
                    continue;
                }
                new_idom = if new_idom == NONE { p } else { intersect(&idom, p, new_idom) };
            }
            if idom[u as usize] != new_idom {
                idom[u as usize] = new_idom;
                changed = true;
            }
        }
    }

    // Dominator tree preorder with subtree intervals.
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &u in postorder.iter().rev() {
        if u != root.0 {
            children[idom[u as usize] as usize].push(u);
        }
    }
    for c in &mut children {
        c.sort_unstable();
    }
    let mut pre = vec![NONE; n];
    let mut end = vec![NONE; n];
    let mut order = Vec::with_capacity(postorder.len());
    let mut stack: Vec<(u32, usize)> = vec![(root.0, 0)];
    pre[root.index()] = 0;
    order.push(root);
    while let Some(&mut (u, ref mut next)) = stack.last_mut() {
        if let Some(&c) = children[u as usize].get(*next) {
            *next += 1;
            pre[c as usize] = order.len() as u32;
            order.push(AgentId(c));
            stack.push((c, 0));
        } else {
            end[u as usize] = order.len() as u32;
            stack.pop();
        }
    }

    DiffusionAnalysis { root, idom, pre, end, order }
}

/// Brute force: `i` is critical for `j` iff `j` is unreachable once `i` is
/// deleted. One reachability sweep per candidate. Sorted by id.
pub fn critical_nodes_oracle(g: &DiffusionGraph, j: AgentId) -> Result<Vec<AgentId>, GraphError> {
    if !g.is_participant(j) {
        return Err(GraphError::NotAParticipant(j));
    }
    Ok(g.participants().filter(|&i| i != j && !bfs(g.root, &g.out_edges, Some(i))[j.index()]).collect())
}

/// Critical-node sets of every agent by the brute-force route, indexed by
/// agent id (empty for the root and non-participants). Sweeps run in
/// parallel over the deleted node.
pub fn oracle_critical_sets(g: &DiffusionGraph) -> Vec<Vec<AgentId>> {
    let participants: Vec<AgentId> = g.participants().collect();
    let lost: Vec<(AgentId, Vec<bool>)> =
        participants.par_iter().map(|&i| (i, bfs(g.root, &g.out_edges, Some(i)))).collect();
    let mut sets = vec![Vec::new(); g.n()];
    for (i, reached) in lost {
        for &j in &participants {
            if j != i && !reached[j.index()] {
                sets[j.index()].push(i);
            }
        }
    }
    sets
}

/// Participants whose dominator-derived critical nodes differ from the
/// brute-force oracle. Empty when the two routes agree.
pub fn oracle_mismatches(g: &DiffusionGraph, analysis: &DiffusionAnalysis) -> Vec<AgentId> {
    let oracle = oracle_critical_sets(g);
    g.participants()
        .filter(|&j| {
            let mut fast = analysis.critical_nodes(j).unwrap_or_default();
            fast.sort_unstable();
            fast != oracle[j.index()]
        })
        .collect()
}

/// Graphviz rendering of the information flow and the dominator tree.
pub fn to_dot(g: &DiffusionGraph, analysis: &DiffusionAnalysis, label: impl Fn(AgentId) -> String) -> String {
    let mut out = String::from("digraph diffusion {\n  rankdir=TB;\n");
    let node = |out: &mut String, prefix: &str, id: AgentId| {
        let shape = if id == g.root { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "    {prefix}{} [label=\"{}\", shape={shape}];", id.0, label(id));
    };
    out.push_str("  subgraph cluster_flow {\n    label=\"information flow\";\n");
    node(&mut out, "f", g.root);
    for p in g.participants() {
        node(&mut out, "f", p);
    }
    for (u, v) in g.flow_edges(analysis) {
        let both_ways = g.out_edges(v).contains(&u) && !analysis.dominates(u, v);
        if both_ways && u > v {
            continue;
        }
        let dir = if both_ways { " [dir=both]" } else { "" };
        let _ = writeln!(out, "    f{} -> f{}{dir};", u.0, v.0);
    }
    out.push_str("  }\n  subgraph cluster_dom {\n    label=\"dominator tree\";\n");
    for &id in analysis.preorder() {
        node(&mut out, "d", id);
    }
    for &id in analysis.preorder() {
        if let Some(parent) = analysis.immediate_dominator(id) {
            let _ = writeln!(out, "    d{} -> d{};", parent.0, id.0);
        }
    }
    out.push_str("  }\n}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::line_network;
    use crate::model::truthful_profile;
    use crate::value::Value;

    fn id(i: u32) -> AgentId {
        AgentId(i)
    }

    fn ids(v: &[u32]) -> Vec<AgentId> {
        v.iter().map(|&i| AgentId(i)).collect()
    }

    fn line3() -> (SocialNetwork, DiffusionGraph) {
        let net = line_network(3, &[Value::ZERO, Value::ZERO, Value::from_units(1)]).unwrap();
        let g = build_diffusion_graph(&net, &truthful_profile(&net)).unwrap();
        (net, g)
    }

    #[test]
    fn line_edges_point_away_from_seller_only_into_buyers() {
        let net = line_network(2, &[Value::ZERO, Value::ZERO]).unwrap();
        let g = build_diffusion_graph(&net, &truthful_profile(&net)).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(id(0), id(1)), (id(1), id(2)), (id(2), id(1))]);
        assert!(!edges.iter().any(|&(_, t)| t == id(0)));
    }

    #[test]
    fn infeasible_profile_is_rejected() {
        let (net, _) = line3();
        let p =
            truthful_profile(&net).with_action(&net, id(1), crate::model::Action::bid(Value::ZERO, vec![])).unwrap();
        assert_eq!(build_diffusion_graph(&net, &p), Err(GraphError::Infeasible));
    }

    #[test]
    fn line_chain_dominators() {
        let (_, g) = line3();
        let a = dominator_analysis(&g);
        assert_eq!(a.sequence(id(3)).unwrap(), ids(&[1, 2, 3]));
        assert_eq!(a.critical_nodes(id(3)).unwrap(), ids(&[1, 2]));
        assert_eq!(critical_nodes_oracle(&g, id(3)).unwrap(), ids(&[1, 2]));
        assert_eq!(a.dependent_set(id(1)).unwrap(), ids(&[1, 2, 3]));
        assert_eq!(a.critical_nodes(id(1)).unwrap(), vec![]);
        assert!(dependent_set_without(&a, id(1)).unwrap().is_empty());
        assert_eq!(dependent_set_without(&a, id(3)).unwrap(), ids(&[1, 2]));
        assert!(oracle_mismatches(&g, &a).is_empty());
    }

    #[test]
    fn diamond_has_two_routes() {
        let g =
            DiffusionGraph::from_digraph(4, id(0), &[(id(0), id(1)), (id(0), id(2)), (id(1), id(3)), (id(2), id(3))])
                .unwrap();
        let a = dominator_analysis(&g);
        assert!(a.critical_nodes(id(3)).unwrap().is_empty());
        assert_eq!(a.dependent_set(id(1)).unwrap(), ids(&[1]));
        assert!(critical_nodes_oracle(&g, id(3)).unwrap().is_empty());
    }

    #[test]
    fn non_participants_are_rejected() {
        let g = DiffusionGraph::from_digraph(4, id(0), &[(id(0), id(1)), (id(2), id(3))]).unwrap();
        let a = dominator_analysis(&g);
        assert!(!g.is_participant(id(2)));
        assert!(g.out_edges(id(2)).is_empty());
        assert_eq!(critical_nodes_oracle(&g, id(2)), Err(GraphError::NotAParticipant(id(2))));
        assert_eq!(a.sequence(id(3)), Err(GraphError::NotAParticipant(id(3))));
        assert_eq!(a.sequence(id(0)), Err(GraphError::NotAParticipant(id(0))));
        assert_eq!(a.immediate_dominator(id(1)), Some(id(0)));
        assert_eq!(a.immediate_dominator(id(2)), None);
        assert_eq!(a.immediate_dominator(id(0)), None);
    }

    #[test]
    fn single_node_graph() {
        let g = DiffusionGraph::from_digraph(1, id(0), &[]).unwrap();
        let a = dominator_analysis(&g);
        assert_eq!(a.preorder(), &[id(0)]);
        assert!(oracle_critical_sets(&g)[0].is_empty());
    }

    #[test]
    fn flow_edges_drop_edges_into_dominators() {
        let (_, g) = line3();
        let a = dominator_analysis(&g);
        let flow: Vec<_> = g.flow_edges(&a).collect();
        assert_eq!(flow, vec![(id(0), id(1)), (id(1), id(2)), (id(2), id(3))]);
        let dot = to_dot(&g, &a, |x| x.to_string());
        assert!(dot.contains("f1 -> f2;"));
        assert!(!dot.contains("f2 -> f1"));
        assert!(dot.contains("d2 -> d3;"));
    }
}
