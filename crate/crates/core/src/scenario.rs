//! Scenario files: network, link parameters, junction rule and run defaults.
//!
//! The canonical form is TOML; the same schema rendered as JSON is accepted
//! wherever a scenario is read (detected by a leading `{`).
//!
//! ```toml
//! name = "div3"
//!
//! [model]
//! kind = "partial_fifo_lanes"   # non_fifo | full_fifo | convex_combo
//!                               # | partial_fifo_lanes | multi_set_fifo
//! [run]
//! dt = 0.01
//! t_final = 200.0
//!
//! [[links]]
//! id = 1
//! head = "v"                    # tail/head may be omitted at the boundary
//! jam_density = 6.0
//! demand = { kind = "exponential", a = 4.0, c = 0.5 }
//! supply = { kind = "affine", b = 6.0 }
//! delta = 4.0
//!
//! [[fifo_sets]]                 # multi_set_fifo only
//! junction = "v"
//! links = [2, 3]
//! eta = [0.1, 0.9]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::junction::{FifoSet, JunctionModel, ModelKind, TrafficModel};
use crate::link::{DemandCurve, LinkParams, SupplyCurve};
use crate::topology::{build_network, validate_structure, Edge, JunctionId, LinkId, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunDefaults {
    pub dt: f64,
    pub t_final: f64,
    pub residual_tol: f64,
    pub gap_tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for RunDefaults {
    fn default() -> Self {
        RunDefaults {
            dt: 1e-2,
            t_final: 200.0,
            residual_tol: 1e-8,
            gap_tol: 1e-6,
            samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<String>,
    pub jam_density: f64,
    pub demand: DemandCurve,
    pub supply: SupplyCurve,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FifoSetSpec {
    pub junction: String,
    pub links: Vec<u32>,
    pub eta: Vec<f64>,
}

/// On-disk schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub model: ModelSpec,
    #[serde(default)]
    pub run: RunDefaults,
    pub links: Vec<LinkSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fifo_sets: Vec<FifoSetSpec>,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: TrafficModel,
    pub run: RunDefaults,
    /// Non-blocking structural findings (turn-ratio budget warnings).
    pub warnings: Vec<Violation>,
    pub source: ScenarioFile,
}

impl Scenario {
    pub fn link_ids(&self) -> &[LinkId] {
        self.model.net().link_ids()
    }

    pub fn jam_densities(&self) -> Vec<f64> {
        self.model.params().iter().map(|p| p.jam_density).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.source).expect("scenario schema serialises")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.source).expect("scenario schema serialises")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: Some(e.line()),
            message: e.to_string(),
        })?
    } else {
        toml::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_owned(),
        })?
    };
    from_file(file)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let mut errors = Vec::new();
    let kind = file.model.kind;

    let edges: Vec<Edge> = file
        .links
        .iter()
        .map(|l| Edge {
            id: LinkId(l.id),
            tail: l.tail.clone().map(JunctionId),
            head: l.head.clone().map(JunctionId),
        })
        .collect();
    let net = build_network(&edges).map_err(|e| ScenarioError::Validation(vec![e.to_string()]))?;
    let n = net.num_links();

    let mut specs: Vec<&LinkSpec> = file.links.iter().collect();
    specs.sort_by_key(|l| l.id);

    let uses_eta = matches!(kind, ModelKind::ConvexCombo | ModelKind::PartialFifoLanes);
    let mut params = Vec::with_capacity(n);
    let mut eta = vec![0.0; n];
    for (l, spec) in specs.iter().enumerate() {
        let id = LinkId(spec.id);
        let beta = match spec.beta {
            Some(b) if !net.is_source(l) && !(b > 0.0) => {
                errors.push(format!("link {id}: beta = {b} must be > 0"));
                b
            }
            Some(b) => b,
            None if !net.is_source(l) => {
                errors.push(format!("link {id}: missing beta (link has upstream links)"));
                0.0
            }
            None => 0.0,
        };
        let p = LinkParams {
            jam_density: spec.jam_density,
            demand: spec.demand.clone(),
            supply: spec.supply.clone(),
            beta,
            gamma: spec.gamma.unwrap_or(0.0),
            delta: spec.delta.unwrap_or(0.0),
        };
        if let Err(e) = p.validate(id) {
            errors.push(e.to_string());
        }
        params.push(p);

        match (spec.eta, uses_eta) {
            (Some(e), true) => {
                if !(0.0..=1.0).contains(&e) {
                    errors.push(format!("link {id}: eta = {e} must lie in [0, 1]"));
                }
                eta[l] = e;
            }
            (Some(_), false) => errors.push(format!(
                "link {id}: eta is not used by model {kind:?}; use fifo_sets or remove it"
            )),
            (None, true) => {
                let needed = match kind {
                    ModelKind::ConvexCombo => !net.is_source(l),
                    _ => !net.adj(l).is_empty(),
                };
                if needed {
                    errors.push(format!("link {id}: missing eta"));
                }
                eta[l] = if kind == ModelKind::PartialFifoLanes {
                    1.0
                } else {
                    0.0
                };
            }
            (None, false) => {}
        }
    }

    if !file.fifo_sets.is_empty() && kind != ModelKind::MultiSetFifo {
        errors.push("fifo_sets are only used by model multi_set_fifo".into());
    }
    let mut sets = Vec::new();
    for fs in &file.fifo_sets {
        let jid = JunctionId(fs.junction.clone());
        let Some(v) = net.junction_index(&jid) else {
            errors.push(format!("fifo set: unknown junction {jid}"));
            continue;
        };
        let mut links = Vec::new();
        for &id in &fs.links {
            match net.link_index(LinkId(id)) {
                Some(l) => links.push(l),
                None => errors.push(format!("fifo set at {jid}: unknown link {id}")),
            }
        }
        sets.push(FifoSet {
            junction: v,
            links,
            eta: fs.eta.clone(),
        });
    }

    if !errors.is_empty() {
        return Err(ScenarioError::Validation(errors));
    }

    let model = match kind {
        ModelKind::NonFifo => JunctionModel::NonFifo,
        ModelKind::FullFifo => JunctionModel::FullFifo,
        ModelKind::ConvexCombo => JunctionModel::ConvexCombo { eta },
        ModelKind::PartialFifoLanes => JunctionModel::PartialFifoLanes { eta },
        ModelKind::MultiSetFifo => JunctionModel::MultiSetFifo { sets },
    };
    let warnings = validate_structure(&net, &params, &model);
    let model = TrafficModel::new(net, params, model)
        .map_err(|e| ScenarioError::Validation(vec![e.to_string()]))?;

    let run = file.run;
    if !(run.dt > 0.0 && run.t_final >= 0.0 && run.residual_tol > 0.0 && run.gap_tol > 0.0) {
        return Err(ScenarioError::Validation(vec![
            "run: dt, residual_tol and gap_tol must be > 0 and t_final >= 0".into(),
        ]));
    }

    Ok(Scenario {
        name: file.name.clone().unwrap_or_else(|| "scenario".into()),
        model,
        run,
        warnings,
        source: file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIV3: &str = r#"
name = "div3"
[model]
kind = "partial_fifo_lanes"

[[links]]
id = 1
head = "v"
jam_density = 6.0
demand = { kind = "exponential", a = 4.0, c = 0.5 }
supply = { kind = "affine", b = 6.0 }
delta = 4.0

[[links]]
id = 2
tail = "v"
jam_density = 4.0
demand = { kind = "exponential", a = 3.0, c = 0.5 }
supply = { kind = "affine", b = 4.0 }
beta = 0.8
eta = 0.1

[[links]]
id = 3
tail = "v"
jam_density = 2.0
demand = { kind = "exponential", a = 2.0, c = 0.5 }
supply = { kind = "affine", b = 2.0 }
beta = 0.2
eta = 0.9
"#;

    #[test]
    fn parses_inline_div3() {
        let s = parse_scenario(DIV3).unwrap();
        assert_eq!(s.name, "div3");
        assert_eq!(s.link_ids(), &[LinkId(1), LinkId(2), LinkId(3)]);
        assert_eq!(
            s.model.params()[0].demand,
            DemandCurve::Exponential { a: 4.0, c: 0.5 }
        );
        assert!(s.warnings.is_empty());
        assert_eq!(s.run, RunDefaults::default());
    }

    #[test]
    fn json_rendering_round_trips() {
        let s = parse_scenario(DIV3).unwrap();
        let back = parse_scenario(&s.to_json()).unwrap();
        assert_eq!(back.source, s.source);
        let back = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(back.source, s.source);
    }

    #[test]
    fn eta_out_of_range() {
        let text = DIV3.replace("eta = 0.1", "eta = 1.3");
        match parse_scenario(&text) {
            Err(ScenarioError::Validation(msgs)) => assert!(msgs[0].contains("eta")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_has_line() {
        let text = DIV3.replace("jam_density = 4.0", "jam_density = ");
        match parse_scenario(&text) {
            Err(ScenarioError::Parse { line: Some(l), .. }) => {
                assert!((17..=18).contains(&l), "line {l}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let text = DIV3.replace("delta = 4.0", "delta = 4.0\nspeed = 3");
        assert!(matches!(
            parse_scenario(&text),
            Err(ScenarioError::Parse { .. })
        ));
    }

    #[test]
    fn multiset_share_sum_rejected() {
        let text = DIV3
            .replace("partial_fifo_lanes", "multi_set_fifo")
            .replace("eta = 0.1\n", "")
            .replace("eta = 0.9\n", "")
            + r#"
[[fifo_sets]]
junction = "v"
links = [2]
eta = [0.5]

[[fifo_sets]]
junction = "v"
links = [2, 3]
eta = [0.6, 0.2]
"#;
        match parse_scenario(&text) {
            Err(ScenarioError::Validation(msgs)) => {
                assert!(msgs[0].contains("FIFO shares sum to"), "{msgs:?}")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_beta_reported() {
        let text = DIV3.replace("beta = 0.8\n", "");
        match parse_scenario(&text) {
            Err(ScenarioError::Validation(msgs)) => {
                assert!(msgs.iter().any(|m| m.contains("beta")))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn turn_ratio_warnings() {
        let text = DIV3.replace("delta = 4.0", "delta = 4.0\ngamma = 0.5");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert!(matches!(s.warnings[0], Violation::OfframpBudget { .. }));
    }
}
