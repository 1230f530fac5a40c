//! Junction flow rules and the network vector field.
//!
//! Five rules are supported, from fully non-FIFO to partial FIFO with several
//! interacting restriction sets. Each link-to-link flow is split into a part
//! subject to the FIFO restriction and a part that is not.
//!
//! All `min` sites go through [`crate::branch`] so callers can tell which
//! smooth piece a state lies on.

use serde::{Deserialize, Serialize};

use crate::branch::{capped_ratio, min2, BranchLog, NoLog};
use crate::error::ModelError;
use crate::link::LinkParams;
use crate::topology::{validate_structure, Network, Severity, Violation};

/// One FIFO restriction set at a diverging junction: the listed outgoing
/// links throttle each other's FIFO share. `eta[i]` is the share of traffic
/// bound for `links[i]` governed by this set.
#[derive(Debug, Clone, PartialEq)]
pub struct FifoSet {
    pub junction: usize,
    pub links: Vec<usize>,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JunctionModel {
    /// Each outgoing link throttles only its own inflow.
    NonFifo,
    /// The most congested outgoing link throttles the whole junction.
    FullFifo,
    /// `eta`-weighted blend of the two rules above, per receiving link.
    ConvexCombo { eta: Vec<f64> },
    /// Shared lanes (share `eta`) obey full FIFO, exclusive lanes do not.
    PartialFifoLanes { eta: Vec<f64> },
    /// Several FIFO restriction sets per diverging junction.
    MultiSetFifo { sets: Vec<FifoSet> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NonFifo,
    FullFifo,
    ConvexCombo,
    PartialFifoLanes,
    MultiSetFifo,
}

impl JunctionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            JunctionModel::NonFifo => ModelKind::NonFifo,
            JunctionModel::FullFifo => ModelKind::FullFifo,
            JunctionModel::ConvexCombo { .. } => ModelKind::ConvexCombo,
            JunctionModel::PartialFifoLanes { .. } => ModelKind::PartialFifoLanes,
            JunctionModel::MultiSetFifo { .. } => ModelKind::MultiSetFifo,
        }
    }

    /// Lane and multi-set rules need every diverge to have a single input.
    pub fn requires_single_input_diverges(&self) -> bool {
        matches!(
            self,
            JunctionModel::PartialFifoLanes { .. } | JunctionModel::MultiSetFifo { .. }
        )
    }
}

/// Flows at one state. Pair entries follow the order of [`Network::pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBreakdown {
    pub fifo: Vec<f64>,
    pub nonfifo: Vec<f64>,
    pub inflow_exo: Vec<f64>,
    pub outflow_exo: Vec<f64>,
}

impl FlowBreakdown {
    pub fn zeros(num_pairs: usize, num_links: usize) -> Self {
        FlowBreakdown {
            fifo: vec![0.0; num_pairs],
            nonfifo: vec![0.0; num_pairs],
            inflow_exo: vec![0.0; num_links],
            outflow_exo: vec![0.0; num_links],
        }
    }

    pub fn pair_flow(&self, p: usize) -> f64 {
        self.fifo[p] + self.nonfifo[p]
    }

    /// Total flow received by `l` from other links.
    pub fn inflow(&self, net: &Network, l: usize) -> f64 {
        net.pairs_into(l).map(|p| self.pair_flow(p)).sum()
    }

    /// Total flow sent by `l` to other links.
    pub fn outflow(&self, net: &Network, l: usize) -> f64 {
        net.pairs_from(l).iter().map(|&p| self.pair_flow(p)).sum()
    }

    pub fn fifo_into(&self, net: &Network, l: usize) -> f64 {
        net.pairs_into(l).map(|p| self.fifo[p]).sum()
    }

    pub fn nonfifo_into(&self, net: &Network, l: usize) -> f64 {
        net.pairs_into(l).map(|p| self.nonfifo[p]).sum()
    }

    /// Density rate `F_l = inflow - outflow + exogenous in - exogenous out`.
    pub fn field(&self, net: &Network) -> Vec<f64> {
        (0..net.num_links())
            .map(|l| {
                self.inflow(net, l) - self.outflow(net, l) + self.inflow_exo[l]
                    - self.outflow_exo[l]
            })
            .collect()
    }
}

/// Anything that produces a flow breakdown on a box of link densities.
///
/// The decomposition, the audits and the integrator only see this trait, so
/// test code can wrap a model and inject faults.
pub trait FlowSystem {
    fn network(&self) -> &Network;
    fn jam_densities(&self) -> &[f64];
    /// Flows at `x`, which the caller has already clamped to the box.
    fn flows_logged<L: BranchLog>(&self, x: &[f64], log: &mut L) -> FlowBreakdown;

    fn flows(&self, x: &[f64]) -> FlowBreakdown {
        self.flows_logged(x, &mut NoLog)
    }

    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.jam_densities())
            .map(|(&v, &hi)| v.clamp(0.0, hi))
            .collect()
    }
}

impl<T: FlowSystem + ?Sized> FlowSystem for &T {
    fn network(&self) -> &Network {
        (**self).network()
    }

    fn jam_densities(&self) -> &[f64] {
        (**self).jam_densities()
    }

    fn flows_logged<L: BranchLog>(&self, x: &[f64], log: &mut L) -> FlowBreakdown {
        (**self).flows_logged(x, log)
    }

    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        (**self).clamp(x)
    }
}

/// A validated network, its link parameters and a junction rule.
#[derive(Debug, Clone)]
pub struct TrafficModel {
    net: Network,
    params: Vec<LinkParams>,
    model: JunctionModel,
    jam: Vec<f64>,
    // multi-set rule: per link (set index, share); per junction set indices
    shares: Vec<Vec<(usize, f64)>>,
    eta_bar: Vec<f64>,
}

impl TrafficModel {
    /// Validates `model` against `net` and normalises it: under the lane rule
    /// links without adjacent links get `eta = 1`.
    pub fn new(
        net: Network,
        params: Vec<LinkParams>,
        model: JunctionModel,
    ) -> Result<TrafficModel, ModelError> {
        let n = net.num_links();
        if params.len() != n {
            return Err(ModelError::Dimension {
                expected: n,
                found: params.len(),
            });
        }
        for v in validate_structure(&net, &params, &model) {
            if v.severity() == Severity::Error {
                if let Violation::DivergeRule {
                    junction,
                    inputs,
                    outputs,
                } = v
                {
                    return Err(ModelError::DivergeRuleViolation {
                        junction,
                        inputs,
                        outputs,
                    });
                }
            }
        }
        let ids = net.link_ids();
        let check_eta = |eta: &[f64]| -> Result<(), ModelError> {
            if eta.len() != n {
                return Err(ModelError::Dimension {
                    expected: n,
                    found: eta.len(),
                });
            }
            for (l, &e) in eta.iter().enumerate() {
                if !(0.0..=1.0).contains(&e) {
                    return Err(ModelError::EtaOutOfRange {
                        link: ids[l],
                        value: e,
                    });
                }
            }
            Ok(())
        };

        let mut shares = vec![Vec::new(); n];
        let mut eta_bar = vec![1.0; n];
        let model = match model {
            JunctionModel::ConvexCombo { eta } => {
                check_eta(&eta)?;
                JunctionModel::ConvexCombo { eta }
            }
            JunctionModel::PartialFifoLanes { mut eta } => {
                check_eta(&eta)?;
                for (l, e) in eta.iter_mut().enumerate() {
                    if net.adj(l).is_empty() {
                        *e = 1.0;
                    }
                }
                JunctionModel::PartialFifoLanes { eta }
            }
            JunctionModel::MultiSetFifo { sets } => {
                for (si, set) in sets.iter().enumerate() {
                    if set.junction >= net.num_junctions() {
                        return Err(ModelError::Dimension {
                            expected: net.num_junctions(),
                            found: set.junction,
                        });
                    }
                    let jid = net.junction_ids()[set.junction].clone();
                    if set.links.len() != set.eta.len() {
                        return Err(ModelError::SetShape {
                            junction: jid,
                            links: set.links.len(),
                            etas: set.eta.len(),
                        });
                    }
                    for (&l, &e) in set.links.iter().zip(&set.eta) {
                        if l >= n {
                            return Err(ModelError::Dimension {
                                expected: n,
                                found: l,
                            });
                        }
                        if !net.outputs(set.junction).contains(&l) {
                            return Err(ModelError::NotAnOutput {
                                junction: jid,
                                link: ids[l],
                            });
                        }
                        if !(0.0..=1.0).contains(&e) {
                            return Err(ModelError::EtaOutOfRange {
                                link: ids[l],
                                value: e,
                            });
                        }
                        shares[l].push((si, e));
                    }
                }
                for l in 0..n {
                    let sum: f64 = shares[l].iter().map(|&(_, e)| e).sum();
                    if sum > 1.0 + 1e-12 {
                        return Err(ModelError::EtaSumExceedsOne { link: ids[l], sum });
                    }
                    eta_bar[l] = (1.0 - sum).max(0.0);
                }
                JunctionModel::MultiSetFifo { sets }
            }
            m => m,
        };
        let jam = params.iter().map(|p| p.jam_density).collect();
        Ok(TrafficModel {
            net,
            params,
            model,
            jam,
            shares,
            eta_bar,
        })
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn params(&self) -> &[LinkParams] {
        &self.params
    }

    pub fn model(&self) -> &JunctionModel {
        &self.model
    }

    /// Share of traffic into `l` not subject to any FIFO restriction
    /// (`1 - eta_l`, or `1 - sum_phi eta_{l,phi}` under the multi-set rule).
    pub fn nonfifo_share(&self, l: usize) -> f64 {
        match &self.model {
            JunctionModel::NonFifo => 1.0,
            JunctionModel::FullFifo => 0.0,
            JunctionModel::ConvexCombo { eta } | JunctionModel::PartialFifoLanes { eta } => {
                1.0 - eta[l]
            }
            JunctionModel::MultiSetFifo { .. } => {
                if self.net.adj(l).is_empty() {
                    0.0
                } else {
                    self.eta_bar[l]
                }
            }
        }
    }

    fn demands<L: BranchLog>(&self, x: &[f64], log: &mut L) -> Vec<f64> {
        self.params
            .iter()
            .zip(x)
            .map(|(p, &v)| p.demand_logged(v, log))
            .collect()
    }

    fn supplies<L: BranchLog>(&self, x: &[f64], log: &mut L) -> Vec<f64> {
        self.params
            .iter()
            .zip(x)
            .map(|(p, &v)| p.supply_logged(v, log))
            .collect()
    }

    fn alpha_nf<L: BranchLog>(&self, l: usize, d: &[f64], s: &[f64], log: &mut L) -> f64 {
        let upstream: f64 = self.net.up(l).iter().map(|&j| d[j]).sum();
        capped_ratio([(s[l], self.params[l].beta * upstream)], log)
    }

    fn alpha_f<L: BranchLog>(&self, v: usize, d: &[f64], s: &[f64], log: &mut L) -> f64 {
        let upstream: f64 = self.net.inputs(v).iter().map(|&j| d[j]).sum();
        capped_ratio(
            self.net
                .outputs(v)
                .iter()
                .map(|&k| (s[k], self.params[k].beta * upstream)),
            log,
        )
    }

    fn alpha_set<L: BranchLog>(
        &self,
        members: &[usize],
        upstream: usize,
        d: &[f64],
        s: &[f64],
        log: &mut L,
    ) -> f64 {
        capped_ratio(
            members
                .iter()
                .map(|&j| (s[j], self.params[j].beta * d[upstream])),
            log,
        )
    }

    fn evaluate<L: BranchLog>(&self, x: &[f64], log: &mut L) -> FlowBreakdown {
        let net = &self.net;
        let n = net.num_links();
        let d = self.demands(x, log);
        let s = self.supplies(x, log);
        let mut fb = FlowBreakdown::zeros(net.pairs().len(), n);

        // per-junction full FIFO factor, computed lazily in junction order
        let needs_alpha_f = !matches!(self.model, JunctionModel::NonFifo);
        let alpha_f: Vec<f64> = if needs_alpha_f {
            (0..net.num_junctions())
                .map(|v| {
                    if net.outputs(v).is_empty() {
                        1.0
                    } else {
                        self.alpha_f(v, &d, &s, log)
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        let alpha_sets: Vec<f64> = match &self.model {
            JunctionModel::MultiSetFifo { sets } => sets
                .iter()
                .map(|set| {
                    let ins = net.inputs(set.junction);
                    if ins.len() == 1 && net.outputs(set.junction).len() > 1 {
                        self.alpha_set(&set.links, ins[0], &d, &s, log)
                    } else {
                        1.0
                    }
                })
                .collect(),
            _ => Vec::new(),
        };

        for l in 0..n {
            let Some(v) = net.tail(l) else { continue };
            let beta = self.params[l].beta;
            let range = net.pairs_into(l);
            match &self.model {
                JunctionModel::NonFifo => {
                    let a = self.alpha_nf(l, &d, &s, log);
                    for p in range {
                        fb.nonfifo[p] = a * beta * d[net.pairs()[p].from];
                    }
                }
                JunctionModel::FullFifo => {
                    for p in range {
                        fb.fifo[p] = alpha_f[v] * beta * d[net.pairs()[p].from];
                    }
                }
                JunctionModel::ConvexCombo { eta } => {
                    let a = self.alpha_nf(l, &d, &s, log);
                    for p in range {
                        let dk = d[net.pairs()[p].from];
                        fb.fifo[p] = eta[l] * (alpha_f[v] * beta * dk);
                        fb.nonfifo[p] = (1.0 - eta[l]) * (a * beta * dk);
                    }
                }
                JunctionModel::PartialFifoLanes { eta } => {
                    if net.adj(l).is_empty() {
                        for p in range {
                            fb.fifo[p] = alpha_f[v] * beta * d[net.pairs()[p].from];
                        }
                    } else {
                        // single upstream link guaranteed by the diverge rule
                        let p = range.start;
                        let dk = d[net.pairs()[p].from];
                        let f = eta[l] * (alpha_f[v] * beta * dk);
                        fb.fifo[p] = f;
                        fb.nonfifo[p] = min2((1.0 - eta[l]) * beta * dk, s[l] - f, log).max(0.0);
                    }
                }
                JunctionModel::MultiSetFifo { .. } => {
                    if net.adj(l).is_empty() {
                        for p in range {
                            fb.fifo[p] = alpha_f[v] * beta * d[net.pairs()[p].from];
                        }
                    } else {
                        let p = range.start;
                        let dk = d[net.pairs()[p].from];
                        let f: f64 = self.shares[l]
                            .iter()
                            .map(|&(si, e)| e * (alpha_sets[si] * beta * dk))
                            .sum();
                        fb.fifo[p] = f;
                        fb.nonfifo[p] = min2(self.eta_bar[l] * beta * dk, s[l] - f, log).max(0.0);
                    }
                }
            }
        }

        for l in 0..n {
            if net.is_source(l) {
                fb.inflow_exo[l] = min2(self.params[l].delta, s[l], log);
            }
            fb.outflow_exo[l] = if net.is_sink(l) {
                d[l]
            } else {
                self.params[l].gamma * fb.outflow(net, l)
            };
        }
        fb
    }
}

impl FlowSystem for TrafficModel {
    fn network(&self) -> &Network {
        &self.net
    }

    fn jam_densities(&self) -> &[f64] {
        &self.jam
    }

    fn flows_logged<L: BranchLog>(&self, x: &[f64], log: &mut L) -> FlowBreakdown {
        self.evaluate(x, log)
    }
}

/// Non-FIFO throttle of link `l`: `min{1, s_l / (beta_l * sum_up d_j)}`.
pub fn alpha_nonfifo(m: &TrafficModel, x: &[f64], l: usize) -> f64 {
    let x = m.clamp(x);
    let d = m.demands(&x, &mut NoLog);
    let s = m.supplies(&x, &mut NoLog);
    m.alpha_nf(l, &d, &s, &mut NoLog)
}

/// Full FIFO throttle of junction `v`.
pub fn alpha_fifo(m: &TrafficModel, x: &[f64], v: usize) -> f64 {
    let x = m.clamp(x);
    let d = m.demands(&x, &mut NoLog);
    let s = m.supplies(&x, &mut NoLog);
    m.alpha_f(v, &d, &s, &mut NoLog)
}

/// Throttle of FIFO restriction set `set` (outgoing links of the diverge `v`).
pub fn alpha_phi(m: &TrafficModel, x: &[f64], v: usize, set: &[usize]) -> Result<f64, ModelError> {
    let net = m.net();
    let ins = net.inputs(v);
    if ins.len() != 1 {
        return Err(ModelError::DivergeRuleViolation {
            junction: net.junction_ids()[v].clone(),
            inputs: ins.len(),
            outputs: net.outputs(v).len(),
        });
    }
    let x = m.clamp(x);
    let d = m.demands(&x, &mut NoLog);
    let s = m.supplies(&x, &mut NoLog);
    Ok(m.alpha_set(set, ins[0], &d, &s, &mut NoLog))
}

pub fn link_to_link_flows(m: &TrafficModel, x: &[f64]) -> FlowBreakdown {
    m.flows(&m.clamp(x))
}

/// `min{delta_l, s_l(x_l)}` on source links, zero elsewhere.
pub fn exogenous_inflow(m: &TrafficModel, x: &[f64], l: usize) -> f64 {
    if m.net().is_source(l) {
        let p = &m.params()[l];
        p.delta.min(p.supply(x[l]))
    } else {
        0.0
    }
}

/// Off-ramp share of the total outflow, or the full demand on sink links.
pub fn exogenous_outflow(m: &TrafficModel, x: &[f64], l: usize, total_downstream: f64) -> f64 {
    if m.net().is_sink(l) {
        m.params()[l].demand(x[l])
    } else {
        m.params()[l].gamma * total_downstream
    }
}

/// Density rate of every link at `x` (clamped to the box first).
pub fn vector_field<S: FlowSystem>(sys: &S, x: &[f64]) -> Vec<f64> {
    let x = sys.clamp(x);
    sys.flows(&x).field(sys.network())
}
