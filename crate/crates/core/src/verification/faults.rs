//! Deliberately broken flow systems for negative-control audits.
//!
//! [`FaultyModel`] wraps a flow system and adds a linear term
//! `coefficient * x_m` to a single flow so that exactly one structural
//! condition is violated with a large derivative.

use super::Condition;
use crate::branch::BranchLog;
use crate::junction::{FlowBreakdown, FlowSystem};
use crate::topology::Network;

pub const DEFAULT_COEFFICIENT: f64 = 10.0;

/// Which flow is perturbed and by which density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fault {
    pub condition: Condition,
    /// Link index for A1, A2, A5, A6, A7; pair index otherwise.
    pub target: usize,
    /// Index of the density the perturbation depends on.
    pub wrt: usize,
    pub coefficient: f64,
}

impl Fault {
    /// Picks a site on `net` where `condition` can be broken, or `None` when
    /// the topology has no such site (e.g. no adjacent links for A8/A9).
    pub fn locate(net: &Network, condition: Condition) -> Option<Fault> {
        let n = net.num_links();
        let pairs = net.pairs();
        let site = match condition {
            Condition::A1 => net
                .sources()
                .iter()
                .find_map(|&l| (0..n).find(|&m| m != l).map(|m| (l, m))),
            Condition::A2 => (0..n).find_map(|l| (0..n).find(|&m| m != l).map(|m| (l, m))),
            Condition::A3 | Condition::A4 => (0..pairs.len()).find_map(|p| {
                let local = net.head_neighbourhood(pairs[p].from);
                (0..n).find(|m| !local.contains(m)).map(|m| (p, m))
            }),
            Condition::A5 | Condition::A6 => {
                (0..n).find_map(|l| net.up(l).first().map(|&m| (l, m)))
            }
            Condition::A7 => (0..n).find_map(|l| {
                if net.pairs_from(l).is_empty() {
                    return None;
                }
                net.head_neighbourhood(l)
                    .into_iter()
                    .find(|&m| m != l)
                    .map(|m| (l, m))
            }),
            Condition::A8 | Condition::A9 => {
                (0..pairs.len()).find_map(|p| net.adj(pairs[p].to).first().map(|&m| (p, m)))
            }
            Condition::D1Identity | Condition::D1XSign | Condition::D1YSign => None,
        }?;
        Some(Fault {
            condition,
            target: site.0,
            wrt: site.1,
            coefficient: DEFAULT_COEFFICIENT,
        })
    }

    fn apply(&self, net: &Network, x: &[f64], b: &mut FlowBreakdown) {
        let t = self.coefficient * x[self.wrt];
        match self.condition {
            Condition::A1 => b.inflow_exo[self.target] -= t,
            Condition::A2 => b.outflow_exo[self.target] += t,
            Condition::A3 => b.nonfifo[self.target] += t,
            Condition::A4 => b.fifo[self.target] += t,
            Condition::A5 => {
                let p = net.pairs_into(self.target).start;
                b.fifo[p] -= t;
            }
            Condition::A6 => {
                let p = net.pairs_into(self.target).start;
                b.nonfifo[p] -= t;
            }
            Condition::A7 => {
                let p = net.pairs_from(self.target)[0];
                b.nonfifo[p] += t;
            }
            Condition::A8 => b.nonfifo[self.target] -= t,
            Condition::A9 => b.fifo[self.target] += t,
            Condition::D1Identity | Condition::D1XSign | Condition::D1YSign => {}
        }
    }
}

/// A flow system with one injected fault.
#[derive(Debug, Clone)]
pub struct FaultyModel<S> {
    pub inner: S,
    pub fault: Fault,
}

impl<S: FlowSystem> FaultyModel<S> {
    /// `None` when the network of `inner` cannot host a violation of
    /// `condition`.
    pub fn inject(inner: S, condition: Condition) -> Option<Self> {
        let fault = Fault::locate(inner.network(), condition)?;
        Some(FaultyModel { inner, fault })
    }
}

impl<S: FlowSystem> FlowSystem for FaultyModel<S> {
    fn network(&self) -> &Network {
        self.inner.network()
    }

    fn jam_densities(&self) -> &[f64] {
        self.inner.jam_densities()
    }

    fn flows_logged<L: BranchLog>(&self, x: &[f64], log: &mut L) -> FlowBreakdown {
        let mut b = self.inner.flows_logged(x, log);
        self.fault.apply(self.inner.network(), x, &mut b);
        b
    }
}
