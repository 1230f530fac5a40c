//! Simulation and verification of traffic-flow network dynamics with
//! partial FIFO diverging junctions.
//!
//! A network of links carries densities `x`. Junction rules split each
//! link-to-link flow into a FIFO part, throttled by congestion on sibling
//! outgoing links, and a non-FIFO part. From those flows the crate builds
//! the network vector field, a decomposition function whose embedding system
//! is monotone, finite-difference audits of the structural conditions the
//! flows must satisfy, and a certificate of global convergence obtained by
//! integrating the embedding system from the extreme corner of the box.
//!
//! Scenarios are read from TOML files (see [`scenario`]); the `pfifo` binary
//! in the companion CLI crate drives everything from the command line.

pub mod branch;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod junction;
pub mod link;
pub mod numerics;
pub mod scenario;
pub mod topology;
pub mod verification;

pub use branch::{BranchLog, NoLog};
pub use dynamics::{simulate, simulate_embedding};
pub use embedding::{
    decomposition, embedding_field, order_leq, surrogate_state, EmbeddingState, SoutheastOrder,
};
pub use error::{ModelError, NumericsError, ParamError, ScenarioError, TopologyError};
pub use junction::{
    alpha_fifo, alpha_nonfifo, alpha_phi, exogenous_inflow, exogenous_outflow, link_to_link_flows,
    vector_field, FifoSet, FlowBreakdown, FlowSystem, JunctionModel, ModelKind, TrafficModel,
};
pub use link::{DemandCurve, LinkParams, SupplyCurve};
pub use numerics::{integrate, jacobian_fd, Bounds, FdJacobian, FdSpec, Trajectory};
pub use scenario::{load_scenario, parse_scenario, RunDefaults, Scenario, ScenarioFile};
pub use topology::{
    build_network, validate_structure, Edge, JunctionId, LinkId, LinkPair, Network, Severity,
    Violation,
};
pub use verification::{
    audit, certify_convergence, check_assumptions, check_decomposition, jacobian_sign_survey,
    AuditOptions, AuditReport, CertificateStatus, CertifyOptions, Condition, ConditionResult,
    ConvergenceCertificate, SignClass, SignSurvey, Witness,
};
