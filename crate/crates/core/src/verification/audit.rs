use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{sample_interior, FD_TOL, IDENTITY_TOL};
use crate::embedding::decomposition_logged;
use crate::junction::{FlowBreakdown, FlowSystem};
use crate::numerics::{jacobian_fd, FdJacobian, FdSpec};
use crate::topology::{LinkId, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
    A9,
    #[serde(rename = "D1.identity")]
    D1Identity,
    #[serde(rename = "D1.x-sign")]
    D1XSign,
    #[serde(rename = "D1.y-sign")]
    D1YSign,
}

impl Condition {
    pub const ASSUMPTIONS: [Condition; 9] = [
        Condition::A1,
        Condition::A2,
        Condition::A3,
        Condition::A4,
        Condition::A5,
        Condition::A6,
        Condition::A7,
        Condition::A8,
        Condition::A9,
    ];
    pub const DECOMPOSITION: [Condition; 3] = [
        Condition::D1Identity,
        Condition::D1XSign,
        Condition::D1YSign,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::A1 => "A1",
            Condition::A2 => "A2",
            Condition::A3 => "A3",
            Condition::A4 => "A4",
            Condition::A5 => "A5",
            Condition::A6 => "A6",
            Condition::A7 => "A7",
            Condition::A8 => "A8",
            Condition::A9 => "A9",
            Condition::D1Identity => "D1.identity",
            Condition::D1XSign => "D1.x-sign",
            Condition::D1YSign => "D1.y-sign",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Condition::A1 => "exogenous inflow nondecreasing in other densities",
            Condition::A2 => "exogenous outflow nonincreasing in other densities",
            Condition::A3 => "non-FIFO flow depends only on the local junction",
            Condition::A4 => "FIFO flow depends only on the local junction",
            Condition::A5 => "total FIFO inflow nondecreasing in upstream densities",
            Condition::A6 => "total non-FIFO inflow nondecreasing in upstream densities",
            Condition::A7 => "total outflow nonincreasing in head-junction densities",
            Condition::A8 => "non-FIFO flow nondecreasing in adjacent densities",
            Condition::A9 => "FIFO flow nonincreasing in adjacent densities",
            Condition::D1Identity => "g(x, x) equals the vector field",
            Condition::D1XSign => "g nondecreasing in off-diagonal x",
            Condition::D1YSign => "g nonincreasing in y",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The state and the derivative entry where a condition was violated worst.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// Differentiated quantity, e.g. `fifo(1->2)`.
    pub quantity: String,
    /// Coordinate differentiated against; absent for the identity check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wrt: Option<LinkId>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub passed: bool,
    pub worst_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Derivative entries (or identity components) examined.
    pub probes: usize,
    /// Entries skipped because a branch switch lay within the exclusion radius.
    pub masked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub links: Vec<LinkId>,
    pub conditions: Vec<ConditionResult>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn get(&self, condition: Condition) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.condition == condition)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionResult> {
        self.conditions.iter().filter(|c| !c.passed)
    }

    pub fn merge(mut self, other: AuditReport) -> AuditReport {
        self.conditions.extend(other.conditions);
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("audit report serializes")
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:<6} {:>12} {:>9} {:>8}  description",
            "condition", "result", "worst", "probes", "masked"
        )?;
        for c in &self.conditions {
            writeln!(
                f,
                "{:<12} {:<6} {:>12.3e} {:>9} {:>8}  {}",
                c.condition.label(),
                if c.passed { "pass" } else { "FAIL" },
                c.worst_violation,
                c.probes,
                c.masked,
                c.condition.description()
            )?;
            if let (false, Some(w)) = (c.passed, &c.witness) {
                write!(f, "    witness: {} = {:.6e}", w.quantity, w.value)?;
                if let Some(m) = w.wrt {
                    write!(f, " wrt x_{m}")?;
                }
                writeln!(f, " at x = {:?}", w.x)?;
                if let Some(y) = &w.y {
                    writeln!(f, "             y = {y:?}")?;
                }
            }
        }
        write!(
            f,
            "{} samples, seed {}, tolerance {:e}: {}",
            self.samples,
            self.seed,
            self.tol,
            if self.passed() {
                "all pass"
            } else {
                "violations found"
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            samples: 1000,
            seed: 0,
            tol: FD_TOL,
        }
    }
}

/// Running worst case for one condition.
struct Tally {
    condition: Condition,
    worst: f64,
    witness: Option<Witness>,
    probes: usize,
    masked: usize,
}

impl Tally {
    fn new(condition: Condition) -> Self {
        Tally {
            condition,
            worst: 0.0,
            witness: None,
            probes: 0,
            masked: 0,
        }
    }

    fn probe(&mut self, violation: f64, masked: bool, witness: impl FnOnce() -> Witness) {
        self.probes += 1;
        if masked {
            self.masked += 1;
            return;
        }
        if violation > self.worst || (violation.is_nan() && !self.worst.is_nan()) {
            self.worst = violation;
            self.witness = Some(witness());
        }
    }

    fn finish(self, tol: f64) -> ConditionResult {
        let passed = self.worst <= tol;
        ConditionResult {
            condition: self.condition,
            passed,
            worst_violation: self.worst,
            witness: if passed { None } else { self.witness },
            probes: self.probes,
            masked: self.masked,
        }
    }
}

/// Layout of the audited quantity vector: per-pair FIFO and non-FIFO flows,
/// then per-link exogenous inflow, exogenous outflow, total FIFO inflow,
/// total non-FIFO inflow and total outflow to other links.
struct Layout {
    pairs: usize,
    links: usize,
}

impl Layout {
    fn fifo(&self, p: usize) -> usize {
        p
    }
    fn nonfifo(&self, p: usize) -> usize {
        self.pairs + p
    }
    fn inflow_exo(&self, l: usize) -> usize {
        2 * self.pairs + l
    }
    fn outflow_exo(&self, l: usize) -> usize {
        2 * self.pairs + self.links + l
    }
    fn fifo_into(&self, l: usize) -> usize {
        2 * self.pairs + 2 * self.links + l
    }
    fn nonfifo_into(&self, l: usize) -> usize {
        2 * self.pairs + 3 * self.links + l
    }
    fn outflow(&self, l: usize) -> usize {
        2 * self.pairs + 4 * self.links + l
    }

    fn flatten(&self, net: &Network, b: &FlowBreakdown) -> Vec<f64> {
        let mut q = Vec::with_capacity(2 * self.pairs + 5 * self.links);
        q.extend_from_slice(&b.fifo);
        q.extend_from_slice(&b.nonfifo);
        q.extend_from_slice(&b.inflow_exo);
        q.extend_from_slice(&b.outflow_exo);
        q.extend((0..self.links).map(|l| b.fifo_into(net, l)));
        q.extend((0..self.links).map(|l| b.nonfifo_into(net, l)));
        q.extend((0..self.links).map(|l| b.outflow(net, l)));
        q
    }
}

fn pair_name(net: &Network, p: usize) -> String {
    let pair = net.pairs()[p];
    format!("{}->{}", net.link_ids()[pair.from], net.link_ids()[pair.to])
}

/// Finite-difference audit of the nine structural sign and locality
/// conditions on the flow functions.
pub fn check_assumptions<S: FlowSystem>(sys: &S, opts: &AuditOptions) -> AuditReport {
    let net = sys.network();
    let n = net.num_links();
    let layout = Layout {
        pairs: net.pairs().len(),
        links: n,
    };
    let ids = net.link_ids();
    let spec = FdSpec::relative(sys.jam_densities());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tallies: Vec<Tally> = Condition::ASSUMPTIONS
        .iter()
        .map(|&c| Tally::new(c))
        .collect();

    let neighbourhoods: Vec<Vec<usize>> = (0..n).map(|l| net.head_neighbourhood(l)).collect();

    for _ in 0..opts.samples {
        let x = sample_interior(&mut rng, sys.jam_densities());
        let jac = jacobian_fd(
            |z, log| layout.flatten(net, &sys.flows_logged(z, log)),
            &x,
            &spec,
        );
        let mut visit =
            |t: usize, row: usize, m: usize, violation: f64, quantity: &dyn Fn() -> String| {
                let value = jac.get(row, m);
                tallies[t].probe(violation, jac.is_masked(row, m), || Witness {
                    x: x.clone(),
                    y: None,
                    quantity: quantity(),
                    wrt: Some(ids[m]),
                    value,
                });
            };

        for l in 0..n {
            for m in (0..n).filter(|&m| m != l) {
                let d = jac.get(layout.inflow_exo(l), m);
                visit(0, layout.inflow_exo(l), m, -d, &|| {
                    format!("inflow_exo({})", ids[l])
                });
                let d = jac.get(layout.outflow_exo(l), m);
                visit(1, layout.outflow_exo(l), m, d, &|| {
                    format!("outflow_exo({})", ids[l])
                });
            }
        }

        for (p, pair) in net.pairs().iter().enumerate() {
            let local = &neighbourhoods[pair.from];
            for m in (0..n).filter(|m| local.binary_search(m).is_err()) {
                let d = jac.get(layout.nonfifo(p), m);
                visit(2, layout.nonfifo(p), m, d.abs(), &|| {
                    format!("nonfifo({})", pair_name(net, p))
                });
                let d = jac.get(layout.fifo(p), m);
                visit(3, layout.fifo(p), m, d.abs(), &|| {
                    format!("fifo({})", pair_name(net, p))
                });
            }
            for &m in net.adj(pair.to) {
                let d = jac.get(layout.nonfifo(p), m);
                visit(7, layout.nonfifo(p), m, -d, &|| {
                    format!("nonfifo({})", pair_name(net, p))
                });
                let d = jac.get(layout.fifo(p), m);
                visit(8, layout.fifo(p), m, d, &|| {
                    format!("fifo({})", pair_name(net, p))
                });
            }
        }

        for l in 0..n {
            for &m in net.up(l) {
                let d = jac.get(layout.fifo_into(l), m);
                visit(4, layout.fifo_into(l), m, -d, &|| {
                    format!("fifo_into({})", ids[l])
                });
                let d = jac.get(layout.nonfifo_into(l), m);
                visit(5, layout.nonfifo_into(l), m, -d, &|| {
                    format!("nonfifo_into({})", ids[l])
                });
            }
            for &m in neighbourhoods[l].iter().filter(|&&m| m != l) {
                let d = jac.get(layout.outflow(l), m);
                visit(6, layout.outflow(l), m, d, &|| {
                    format!("outflow({})", ids[l])
                });
            }
        }
    }

    AuditReport {
        samples: opts.samples,
        seed: opts.seed,
        tol: opts.tol,
        links: ids.to_vec(),
        conditions: tallies.into_iter().map(|t| t.finish(opts.tol)).collect(),
    }
}

/// Audit of the decomposition function: the diagonal identity at sampled
/// `x`, and the off-diagonal sign pattern at independently sampled `(x, y)`.
pub fn check_decomposition<S: FlowSystem>(sys: &S, opts: &AuditOptions) -> AuditReport {
    let net = sys.network();
    let n = net.num_links();
    let ids = net.link_ids();
    let spec = FdSpec::relative(sys.jam_densities());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut identity = Tally::new(Condition::D1Identity);
    let mut xsign = Tally::new(Condition::D1XSign);
    let mut ysign = Tally::new(Condition::D1YSign);

    for _ in 0..opts.samples {
        let x = sample_interior(&mut rng, sys.jam_densities());
        let y = sample_interior(&mut rng, sys.jam_densities());

        let g = decomposition_logged(sys, &x, &x, &mut crate::branch::NoLog);
        let f = crate::junction::vector_field(sys, &x);
        for l in 0..n {
            let err = (g[l] - f[l]).abs();
            identity.probe(err, false, || Witness {
                x: x.clone(),
                y: Some(x.clone()),
                quantity: format!("g({0}) - F({0})", ids[l]),
                wrt: None,
                value: g[l] - f[l],
            });
        }

        let jx: FdJacobian = jacobian_fd(|z, log| decomposition_logged(sys, z, &y, log), &x, &spec);
        let jy: FdJacobian = jacobian_fd(|z, log| decomposition_logged(sys, &x, z, log), &y, &spec);
        for i in 0..n {
            for j in 0..n {
                let witness = |value: f64, wrt_y: bool| Witness {
                    x: x.clone(),
                    y: Some(y.clone()),
                    quantity: format!("d g({}) / d {}", ids[i], if wrt_y { "y" } else { "x" }),
                    wrt: Some(ids[j]),
                    value,
                };
                if i != j {
                    let d = jx.get(i, j);
                    xsign.probe(-d, jx.is_masked(i, j), || witness(d, false));
                }
                let d = jy.get(i, j);
                ysign.probe(d, jy.is_masked(i, j), || witness(d, true));
            }
        }
    }

    AuditReport {
        samples: opts.samples,
        seed: opts.seed,
        tol: opts.tol,
        links: ids.to_vec(),
        conditions: vec![
            identity.finish(IDENTITY_TOL),
            xsign.finish(opts.tol),
            ysign.finish(opts.tol),
        ],
    }
}

/// Both audits, reported together.
pub fn audit<S: FlowSystem>(sys: &S, opts: &AuditOptions) -> AuditReport {
    check_assumptions(sys, opts).merge(check_decomposition(sys, opts))
}
