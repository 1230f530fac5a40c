//! Directed traffic network: links, junctions and their incidence sets.
//!
//! A link flows from its tail junction to its head junction. Either end may
//! be absent, which marks a network boundary: a link without a tail is fed
//! from outside, a link without a head drains out of the network.
//!
//! Links are stored sorted by [`LinkId`]; every state vector in this crate is
//! indexed by that position.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TopologyError;
use crate::junction::JunctionModel;
use crate::link::LinkParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JunctionId(pub String);

impl fmt::Display for JunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for JunctionId {
    fn from(s: &str) -> Self {
        JunctionId(s.to_owned())
    }
}

/// One link as given by the user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: LinkId,
    pub tail: Option<JunctionId>,
    pub head: Option<JunctionId>,
}

impl Edge {
    pub fn new(id: u32, tail: Option<&str>, head: Option<&str>) -> Self {
        Edge {
            id: LinkId(id),
            tail: tail.map(JunctionId::from),
            head: head.map(JunctionId::from),
        }
    }
}

/// An ordered link pair `(from, to)` with `head(from) == tail(to)`: the only
/// pairs that may carry flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkPair {
    pub from: usize,
    pub to: usize,
}

/// Immutable network with eagerly computed incidence sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    links: Vec<LinkId>,
    junctions: Vec<JunctionId>,
    tail: Vec<Option<usize>>,
    head: Vec<Option<usize>>,
    inputs: Vec<Vec<usize>>,
    outputs: Vec<Vec<usize>>,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
    adj: Vec<Vec<usize>>,
    sources: Vec<usize>,
    pairs: Vec<LinkPair>,
    pairs_into: Vec<std::ops::Range<usize>>,
    pairs_from: Vec<Vec<usize>>,
}

impl Network {
    pub fn build(edges: &[Edge]) -> Result<Network, TopologyError> {
        let mut sorted: Vec<&Edge> = edges.iter().collect();
        sorted.sort_by_key(|e| e.id);
        for w in sorted.windows(2) {
            if w[0].id == w[1].id {
                return Err(TopologyError::DuplicateLinkId(w[0].id));
            }
        }
        for e in &sorted {
            if let (Some(t), Some(h)) = (&e.tail, &e.head) {
                if t == h {
                    return Err(TopologyError::SelfLoop {
                        link: e.id,
                        junction: t.clone(),
                    });
                }
            }
        }

        let junction_set: BTreeSet<&JunctionId> = sorted
            .iter()
            .flat_map(|e| e.tail.iter().chain(e.head.iter()))
            .collect();
        let junctions: Vec<JunctionId> = junction_set.into_iter().cloned().collect();
        let jindex: BTreeMap<&JunctionId, usize> =
            junctions.iter().enumerate().map(|(i, j)| (j, i)).collect();

        let n = sorted.len();
        let links: Vec<LinkId> = sorted.iter().map(|e| e.id).collect();
        let tail: Vec<Option<usize>> = sorted
            .iter()
            .map(|e| e.tail.as_ref().map(|j| jindex[j]))
            .collect();
        let head: Vec<Option<usize>> = sorted
            .iter()
            .map(|e| e.head.as_ref().map(|j| jindex[j]))
            .collect();

        let mut inputs = vec![Vec::new(); junctions.len()];
        let mut outputs = vec![Vec::new(); junctions.len()];
        for l in 0..n {
            if let Some(v) = head[l] {
                inputs[v].push(l);
            }
            if let Some(v) = tail[l] {
                outputs[v].push(l);
            }
        }

        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        let mut adj = vec![Vec::new(); n];
        for l in 0..n {
            if let Some(v) = tail[l] {
                up[l] = inputs[v].clone();
                adj[l] = outputs[v].iter().copied().filter(|&k| k != l).collect();
            }
            if let Some(v) = head[l] {
                down[l] = outputs[v].clone();
            }
        }
        let sources = (0..n).filter(|&l| up[l].is_empty()).collect();

        let mut pairs = Vec::new();
        let mut pairs_into = Vec::with_capacity(n);
        let mut pairs_from = vec![Vec::new(); n];
        for l in 0..n {
            let start = pairs.len();
            for &k in &up[l] {
                pairs_from[k].push(pairs.len());
                pairs.push(LinkPair { from: k, to: l });
            }
            pairs_into.push(start..pairs.len());
        }

        Ok(Network {
            links,
            junctions,
            tail,
            head,
            inputs,
            outputs,
            up,
            down,
            adj,
            sources,
            pairs,
            pairs_into,
            pairs_from,
        })
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_junctions(&self) -> usize {
        self.junctions.len()
    }

    /// Link ids in index order (sorted).
    pub fn link_ids(&self) -> &[LinkId] {
        &self.links
    }

    pub fn junction_ids(&self) -> &[JunctionId] {
        &self.junctions
    }

    pub fn link_index(&self, id: LinkId) -> Option<usize> {
        self.links.binary_search(&id).ok()
    }

    pub fn junction_index(&self, id: &JunctionId) -> Option<usize> {
        self.junctions.binary_search(id).ok()
    }

    pub fn tail(&self, l: usize) -> Option<usize> {
        self.tail[l]
    }

    pub fn head(&self, l: usize) -> Option<usize> {
        self.head[l]
    }

    pub fn inputs(&self, v: usize) -> &[usize] {
        &self.inputs[v]
    }

    pub fn outputs(&self, v: usize) -> &[usize] {
        &self.outputs[v]
    }

    pub fn up(&self, l: usize) -> &[usize] {
        &self.up[l]
    }

    pub fn down(&self, l: usize) -> &[usize] {
        &self.down[l]
    }

    pub fn adj(&self, l: usize) -> &[usize] {
        &self.adj[l]
    }

    /// Links with no upstream links; the only entry points of exogenous flow.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn is_source(&self, l: usize) -> bool {
        self.up[l].is_empty()
    }

    pub fn is_sink(&self, l: usize) -> bool {
        self.down[l].is_empty()
    }

    /// Links incident to the head junction of `l` (its inputs and outputs).
    /// Empty when `l` leaves the network.
    pub fn head_neighbourhood(&self, l: usize) -> Vec<usize> {
        match self.head[l] {
            Some(v) => {
                let mut s: Vec<usize> = self.inputs[v]
                    .iter()
                    .chain(self.outputs[v].iter())
                    .copied()
                    .collect();
                s.sort_unstable();
                s.dedup();
                s
            }
            None => Vec::new(),
        }
    }

    /// All pairs that may carry flow, grouped by receiving link.
    pub fn pairs(&self) -> &[LinkPair] {
        &self.pairs
    }

    /// Indices into [`Network::pairs`] of the pairs entering `l`.
    pub fn pairs_into(&self, l: usize) -> std::ops::Range<usize> {
        self.pairs_into[l].clone()
    }

    /// Indices into [`Network::pairs`] of the pairs leaving `k`.
    pub fn pairs_from(&self, k: usize) -> &[usize] {
        &self.pairs_from[k]
    }

    /// The edge list this network was built from, in sorted order.
    pub fn edges(&self) -> Vec<Edge> {
        (0..self.num_links())
            .map(|l| Edge {
                id: self.links[l],
                tail: self.tail[l].map(|v| self.junctions[v].clone()),
                head: self.head[l].map(|v| self.junctions[v].clone()),
            })
            .collect()
    }
}

pub fn build_network(edges: &[Edge]) -> Result<Network, TopologyError> {
    Network::build(edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A junction with several outputs must have exactly one input under the
    /// lane-based and multi-set partial FIFO rules.
    DivergeRule {
        junction: JunctionId,
        inputs: usize,
        outputs: usize,
    },
    /// Turn ratios of the links downstream of `link` sum above one.
    TurnRatioSum { link: LinkId, sum: f64 },
    /// `(gamma + 1) * sum(beta)` above one for the links downstream of `link`.
    OfframpBudget { link: LinkId, gamma: f64, sum: f64 },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::DivergeRule { .. } => Severity::Error,
            Violation::TurnRatioSum { .. } | Violation::OfframpBudget { .. } => Severity::Warning,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DivergeRule {
                junction,
                inputs,
                outputs,
            } => write!(
                f,
                "junction {junction} has {outputs} outgoing links but {inputs} incoming (diverges need exactly one)"
            ),
            Violation::TurnRatioSum { link, sum } => {
                write!(f, "turn ratios downstream of link {link} sum to {sum} > 1")
            }
            Violation::OfframpBudget { link, gamma, sum } => write!(
                f,
                "link {link}: (gamma + 1) * sum(beta) = {} > 1 (gamma = {gamma}, sum = {sum})",
                (gamma + 1.0) * sum
            ),
        }
    }
}

/// Structural checks that depend on the junction model and turn ratios.
/// Violations are returned as data; warnings do not block a run but void the
/// outflow bound `sum_k f(l->k) + f(l->) <= d_l`.
pub fn validate_structure(
    net: &Network,
    params: &[LinkParams],
    model: &JunctionModel,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if model.requires_single_input_diverges() {
        for v in 0..net.num_junctions() {
            let (ni, no) = (net.inputs(v).len(), net.outputs(v).len());
            if no > 1 && ni != 1 {
                out.push(Violation::DivergeRule {
                    junction: net.junctions[v].clone(),
                    inputs: ni,
                    outputs: no,
                });
            }
        }
    }
    for l in 0..net.num_links() {
        if net.down(l).is_empty() {
            continue;
        }
        let sum: f64 = net.down(l).iter().map(|&k| params[k].beta).sum();
        if sum > 1.0 {
            out.push(Violation::TurnRatioSum {
                link: net.links[l],
                sum,
            });
        }
        let gamma = params[l].gamma;
        if (gamma + 1.0) * sum > 1.0 {
            out.push(Violation::OfframpBudget {
                link: net.links[l],
                gamma,
                sum,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(net: &Network, idx: &[usize]) -> Vec<u32> {
        idx.iter().map(|&i| net.link_ids()[i].0).collect()
    }

    fn fig1() -> Network {
        build_network(&[
            Edge::new(1, None, Some("v")),
            Edge::new(2, Some("v"), None),
            Edge::new(3, Some("v"), None),
        ])
        .unwrap()
    }

    #[test]
    fn diverge_incidence() {
        let net = fig1();
        let l = |id| net.link_index(LinkId(id)).unwrap();
        assert_eq!(ids(&net, net.up(l(2))), vec![1]);
        assert_eq!(ids(&net, net.adj(l(2))), vec![3]);
        assert_eq!(ids(&net, net.adj(l(3))), vec![2]);
        assert_eq!(ids(&net, net.down(l(1))), vec![2, 3]);
        assert_eq!(ids(&net, net.sources()), vec![1]);
        assert!(net.is_sink(l(2)) && net.is_sink(l(3)) && !net.is_sink(l(1)));
        assert_eq!(net.pairs().len(), 2);
    }

    #[test]
    fn isolated_link() {
        let net = build_network(&[Edge::new(7, None, None)]).unwrap();
        assert!(net.up(0).is_empty() && net.down(0).is_empty() && net.adj(0).is_empty());
        assert_eq!(net.sources(), &[0]);
        assert_eq!(net.num_junctions(), 0);
    }

    #[test]
    fn chain_has_no_adjacency() {
        let net = build_network(&[
            Edge::new(1, None, Some("a")),
            Edge::new(2, Some("a"), Some("b")),
            Edge::new(3, Some("b"), Some("c")),
            Edge::new(4, Some("c"), None),
        ])
        .unwrap();
        for l in 0..4 {
            assert!(net.adj(l).is_empty());
        }
        assert_eq!(ids(&net, net.down(0)), vec![2]);
    }

    #[test]
    fn links_sorted_regardless_of_input_order() {
        let net = build_network(&[
            Edge::new(10, Some("v"), None),
            Edge::new(2, None, Some("v")),
        ])
        .unwrap();
        assert_eq!(net.link_ids(), &[LinkId(2), LinkId(10)]);
    }

    #[test]
    fn rejects_duplicates_and_self_loops() {
        let dup = build_network(&[Edge::new(1, None, Some("v")), Edge::new(1, Some("v"), None)]);
        assert!(matches!(
            dup,
            Err(TopologyError::DuplicateLinkId(LinkId(1)))
        ));
        let lp = build_network(&[Edge::new(4, Some("v"), Some("v"))]);
        assert!(matches!(lp, Err(TopologyError::SelfLoop { .. })));
    }

    #[test]
    fn rebuild_from_edges_is_identical() {
        let net = fig1();
        assert_eq!(build_network(&net.edges()).unwrap(), net);
    }
}
