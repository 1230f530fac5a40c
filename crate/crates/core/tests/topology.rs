mod common;

use common::{diverge, exp_link};
use pfifo::{build_network, validate_structure, Edge, JunctionModel, Severity, Violation};
use proptest::prelude::*;

fn edges_strategy() -> impl Strategy<Value = Vec<Edge>> {
    (2usize..6).prop_flat_map(|junctions| {
        prop::collection::vec(
            (
                prop::option::of(0..junctions),
                prop::option::of(0..junctions),
            ),
            1..12,
        )
        .prop_map(move |ends| {
            ends.into_iter()
                .enumerate()
                .map(|(i, (tail, head))| {
                    let head = match (tail, head) {
                        (Some(t), Some(h)) if t == h => Some((h + 1) % junctions),
                        (_, h) => h,
                    };
                    let name = |j: usize| format!("j{j}");
                    Edge::new(
                        100 - i as u32,
                        tail.map(name).as_deref(),
                        head.map(name).as_deref(),
                    )
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn incidence_sets_are_consistent(edges in edges_strategy()) {
        let net = build_network(&edges).unwrap();
        let n = net.num_links();
        for l in 0..n {
            for &k in net.adj(l) {
                prop_assert!(net.adj(k).contains(&l));
                prop_assert_ne!(k, l);
            }
            for k in 0..n {
                prop_assert_eq!(net.up(l).contains(&k), net.down(k).contains(&l));
            }
            prop_assert_eq!(net.is_source(l), net.sources().contains(&l));
            prop_assert_eq!(net.pairs_into(l).len(), net.up(l).len());
        }
        let ids = net.link_ids();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        let again = build_network(&net.edges()).unwrap();
        prop_assert_eq!(again, net);
    }
}

#[test]
fn lane_example_has_no_violations() {
    let m = diverge(JunctionModel::PartialFifoLanes {
        eta: vec![1.0, 0.1, 0.9],
    });
    assert!(validate_structure(m.net(), m.params(), m.model()).is_empty());
}

#[test]
fn multi_input_diverge_flagged_for_partial_fifo() {
    let net = build_network(&[
        Edge::new(1, None, Some("v")),
        Edge::new(2, None, Some("v")),
        Edge::new(3, Some("v"), None),
        Edge::new(4, Some("v"), None),
    ])
    .unwrap();
    let params = vec![
        exp_link(4.0, 2.0, 0.0, 0.0, 1.0),
        exp_link(4.0, 2.0, 0.0, 0.0, 1.0),
        exp_link(4.0, 2.0, 0.5, 0.0, 0.0),
        exp_link(4.0, 2.0, 0.5, 0.0, 0.0),
    ];
    let lanes = JunctionModel::PartialFifoLanes {
        eta: vec![1.0, 1.0, 0.5, 0.5],
    };
    let v = validate_structure(&net, &params, &lanes);
    assert_eq!(
        v,
        vec![Violation::DivergeRule {
            junction: "v".into(),
            inputs: 2,
            outputs: 2
        }]
    );
    assert_eq!(v[0].severity(), Severity::Error);
    assert!(validate_structure(&net, &params, &JunctionModel::FullFifo).is_empty());
}

#[test]
fn offramp_budget_warning() {
    let m = diverge(JunctionModel::NonFifo);
    let mut params = m.params().to_vec();
    assert!(validate_structure(m.net(), &params, m.model()).is_empty());
    params[0].gamma = 0.5;
    let v = validate_structure(m.net(), &params, m.model());
    assert_eq!(v.len(), 1);
    assert!(matches!(v[0], Violation::OfframpBudget { gamma, .. } if gamma == 0.5));
    assert_eq!(v[0].severity(), Severity::Warning);
    params[1].beta = 0.9;
    let v = validate_structure(m.net(), &params, m.model());
    assert!(v
        .iter()
        .any(|x| matches!(x, Violation::TurnRatioSum { .. })));
}
