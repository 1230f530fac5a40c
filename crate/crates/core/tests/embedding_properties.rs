mod common;

use common::{rng, sample_box, sample_uniform, shipped, shipped_named};
use pfifo::{
    decomposition, order_leq, simulate, simulate_embedding, vector_field, EmbeddingState,
    FlowSystem,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn diagonal_identity_on_every_scenario() {
    for s in shipped() {
        let mut r = rng(71);
        for _ in 0..10_000 {
            let x = sample_box(&mut r, s.model.jam_densities());
            let g = decomposition(&s.model, &x, &x);
            let f = vector_field(&s.model, &x);
            let err = g
                .iter()
                .zip(&f)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(
                err <= 1e-12,
                "{}: |g(x,x) - F(x)| = {err:e} at {x:?}",
                s.name
            );
        }
    }
}

fn states(traj: &pfifo::Trajectory) -> Vec<EmbeddingState> {
    traj.states
        .iter()
        .map(|s| EmbeddingState::from_flat(s))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn ordered_starts_stay_ordered(seed in 0u64..1_000_000, which in 0usize..10) {
        let scenarios = shipped();
        let m = &scenarios[which % scenarios.len()].model;
        let jam = m.jam_densities();
        let mut r = rng(seed);
        // a <= b: b.x above a.x, b.y below a.y
        let ax = sample_uniform(&mut r, jam);
        let ay = sample_uniform(&mut r, jam);
        let bx: Vec<f64> = ax.iter().zip(jam).map(|(v, hi)| v + (hi - v) * 0.5 * r.random::<f64>()).collect();
        let by: Vec<f64> = ay.iter().map(|v| v * (1.0 - 0.5 * r.random::<f64>())).collect();
        let a = EmbeddingState::new(ax, ay);
        let b = EmbeddingState::new(bx, by);
        prop_assert!(order_leq(&a, &b, 0.0));

        let ta = simulate_embedding(m, &a, 10.0, 0.01).unwrap();
        let tb = simulate_embedding(m, &b, 10.0, 0.01).unwrap();
        for (k, (sa, sb)) in states(&ta).iter().zip(&states(&tb)).enumerate() {
            prop_assert!(order_leq(sa, sb, 1e-9), "order lost at t = {}", ta.times[k]);
        }
    }
}

#[test]
fn swapped_start_gives_swapped_trajectory() {
    for s in shipped() {
        let mut r = rng(72);
        let jam = s.model.jam_densities();
        let start = EmbeddingState::new(sample_uniform(&mut r, jam), sample_uniform(&mut r, jam));
        let a = simulate_embedding(&s.model, &start, 20.0, 0.01).unwrap();
        let b = simulate_embedding(&s.model, &start.swapped(), 20.0, 0.01).unwrap();
        for (sa, sb) in states(&a).iter().zip(&states(&b)) {
            let sw = sa.swapped();
            let err = sw
                .to_flat()
                .iter()
                .zip(sb.to_flat())
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(err <= 1e-12, "{}: swap symmetry broken by {err:e}", s.name);
        }
    }
}

#[test]
fn diagonal_start_stays_on_diagonal_and_matches_plain_dynamics() {
    for s in shipped() {
        let mut r = rng(73);
        let x0 = sample_uniform(&mut r, s.model.jam_densities());
        let emb = simulate_embedding(
            &s.model,
            &EmbeddingState::new(x0.clone(), x0.clone()),
            20.0,
            0.01,
        )
        .unwrap();
        let plain = simulate(&s.model, &x0, 20.0, 0.01).unwrap();
        for (e, p) in states(&emb).iter().zip(&plain.states) {
            assert_eq!(e.x, e.y, "{}", s.name);
            assert_eq!(&e.x, p, "{}", s.name);
        }
    }
}

#[test]
fn box_is_invariant_without_clamping() {
    for s in shipped() {
        let mut r = rng(74);
        let jam = s.model.jam_densities().to_vec();
        for _ in 0..5 {
            let x0 = sample_box(&mut r, &jam);
            let t = simulate(&s.model, &x0, 50.0, 0.01).unwrap();
            assert!(
                t.max_clamp <= 1e-9,
                "{}: clamp {:e} from {x0:?}",
                s.name,
                t.max_clamp
            );
        }
        let corner = EmbeddingState::new(vec![0.0; jam.len()], jam.clone());
        let t = simulate_embedding(&s.model, &corner, 50.0, 0.01).unwrap();
        assert!(
            t.max_clamp <= 1e-9,
            "{}: embedding clamp {:e}",
            s.name,
            t.max_clamp
        );
    }
}

#[test]
fn empty_start_fills_monotonically() {
    let s = shipped_named("div3");
    let t = simulate(&s.model, &[0.0; 3], 200.0, 0.01).unwrap();
    for w in t.states.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            assert!(b >= &(a - 1e-12), "density decreased from {a} to {b}");
        }
    }
}
