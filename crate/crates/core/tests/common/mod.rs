#![allow(dead_code)]

use std::path::PathBuf;

use pfifo::{
    build_network, load_scenario, DemandCurve, Edge, JunctionModel, LinkParams, Scenario,
    SupplyCurve, TrafficModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn shipped() -> Vec<Scenario> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scenario"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_scenario(p).unwrap()).collect()
}

pub fn shipped_named(name: &str) -> Scenario {
    load_scenario(scenario_dir().join(format!("{name}.scenario"))).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the box; with probability 1/4 per coordinate snapped to a face.
pub fn sample_box(rng: &mut ChaCha8Rng, jam: &[f64]) -> Vec<f64> {
    jam.iter()
        .map(|&hi| match rng.random_range(0..8) {
            0 => 0.0,
            1 => hi,
            _ => rng.random_range(0.0..=hi),
        })
        .collect()
}

pub fn sample_uniform(rng: &mut ChaCha8Rng, jam: &[f64]) -> Vec<f64> {
    jam.iter().map(|&hi| rng.random_range(0.0..=hi)).collect()
}

/// Same network and link parameters, different junction rule.
pub fn with_model(base: &TrafficModel, model: JunctionModel) -> TrafficModel {
    TrafficModel::new(base.net().clone(), base.params().to_vec(), model).unwrap()
}

pub fn exp_link(jam: f64, a: f64, beta: f64, gamma: f64, delta: f64) -> LinkParams {
    LinkParams {
        jam_density: jam,
        demand: DemandCurve::Exponential { a, c: 0.5 },
        supply: SupplyCurve::Affine { b: jam },
        beta,
        gamma,
        delta,
    }
}

/// The single-diverge example: link 1 feeds links 2 and 3.
pub fn diverge(model: JunctionModel) -> TrafficModel {
    let net = build_network(&[
        Edge::new(1, None, Some("v")),
        Edge::new(2, Some("v"), None),
        Edge::new(3, Some("v"), None),
    ])
    .unwrap();
    TrafficModel::new(
        net,
        vec![
            exp_link(6.0, 4.0, 0.0, 0.0, 4.0),
            exp_link(4.0, 3.0, 0.8, 0.0, 0.0),
            exp_link(2.0, 2.0, 0.2, 0.0, 0.0),
        ],
        model,
    )
    .unwrap()
}
