use thiserror::Error;

use crate::topology::{JunctionId, LinkId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("duplicate link id {0}")]
    DuplicateLinkId(LinkId),
    #[error("link {link} starts and ends at junction {junction}")]
    SelfLoop { link: LinkId, junction: JunctionId },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("link {link}: {message}")]
    Curve { link: LinkId, message: String },
    #[error("link {link}: {field} = {value} is out of range ({expected})")]
    OutOfRange {
        link: LinkId,
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("link {link}: missing {field}")]
    Missing { link: LinkId, field: &'static str },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("junction {junction}: {outputs} outgoing links require exactly one incoming link, found {inputs}")]
    DivergeRuleViolation {
        junction: JunctionId,
        inputs: usize,
        outputs: usize,
    },
    #[error("link {link}: eta = {value} must lie in [0, 1]")]
    EtaOutOfRange { link: LinkId, value: f64 },
    #[error("link {link}: FIFO shares sum to {sum} > 1")]
    EtaSumExceedsOne { link: LinkId, sum: f64 },
    #[error("junction {junction}: FIFO set member {link} is not an outgoing link")]
    NotAnOutput { junction: JunctionId, link: LinkId },
    #[error("junction {0}: unknown junction in FIFO set")]
    UnknownJunction(JunctionId),
    #[error("link {0}: unknown link")]
    UnknownLink(LinkId),
    #[error("model parameter vector has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("FIFO set at junction {junction} lists {links} links but {etas} shares")]
    SetShape {
        junction: JunctionId,
        links: usize,
        etas: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("non-finite state at t = {time} (component {component})")]
    NonFiniteState { time: f64, component: usize },
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}
