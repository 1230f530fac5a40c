//! Decomposition function and the doubled (embedding) system.
//!
//! `g(x, y)` evaluates FIFO inflows of link `l` at a surrogate state in which
//! the links adjacent to `l` take their values from `y`; everything else is
//! evaluated at `x`. On the diagonal `g(x, x)` is the network vector field,
//! and the system `x' = g(x, y)`, `y' = g(y, x)` is monotone for the
//! southeast order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::branch::{BranchLog, NoLog};
use crate::junction::FlowSystem;
use crate::topology::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl EmbeddingState {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len(), "embedding halves must have equal length");
        EmbeddingState { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `[x..., y...]`
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dim());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v
    }

    pub fn from_flat(v: &[f64]) -> Self {
        let n = v.len() / 2;
        EmbeddingState {
            x: v[..n].to_vec(),
            y: v[n..].to_vec(),
        }
    }

    pub fn swapped(&self) -> Self {
        EmbeddingState {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// `(x, y) <= (v, w)` iff `x <= v` and `w <= y` componentwise.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SoutheastOrder {
    pub tol: f64,
}

impl SoutheastOrder {
    pub fn leq(&self, a: &EmbeddingState, b: &EmbeddingState) -> bool {
        order_leq(a, b, self.tol)
    }
}

pub fn order_leq(a: &EmbeddingState, b: &EmbeddingState, tol: f64) -> bool {
    assert_eq!(a.dim(), b.dim());
    a.x.iter().zip(&b.x).all(|(p, q)| *p <= q + tol)
        && b.y.iter().zip(&a.y).all(|(p, q)| *p <= q + tol)
}

/// `z^l`: `y` on the links adjacent to `l`, `x` elsewhere.
pub fn surrogate_state(net: &Network, x: &[f64], y: &[f64], l: usize) -> Vec<f64> {
    let mut z = x.to_vec();
    for &k in net.adj(l) {
        z[k] = y[k];
    }
    z
}

pub fn decomposition<S: FlowSystem>(sys: &S, x: &[f64], y: &[f64]) -> Vec<f64> {
    decomposition_logged(sys, x, y, &mut NoLog)
}

/// Decomposition function with branch logging over every flow evaluation it
/// performs. Exogenous terms and outflows are taken at `x`.
pub fn decomposition_logged<S: FlowSystem, L: BranchLog>(
    sys: &S,
    x: &[f64],
    y: &[f64],
    log: &mut L,
) -> Vec<f64> {
    let net = sys.network();
    let x = sys.clamp(x);
    let y = sys.clamp(y);
    let at_x = sys.flows_logged(&x, log);

    // one evaluation per distinct adjacency set; z depends on l only via adj(l)
    let mut at_z: HashMap<&[usize], crate::junction::FlowBreakdown> = HashMap::new();
    for l in 0..net.num_links() {
        let adj = net.adj(l);
        if adj.is_empty() || at_z.contains_key(adj) {
            continue;
        }
        let z = surrogate_state(net, &x, &y, l);
        at_z.insert(adj, sys.flows_logged(&z, log));
    }

    (0..net.num_links())
        .map(|l| {
            let fifo_src = match net.adj(l) {
                [] => &at_x,
                adj => &at_z[adj],
            };
            let inflow: f64 = net
                .pairs_into(l)
                .map(|p| fifo_src.fifo[p] + at_x.nonfifo[p])
                .sum();
            inflow - at_x.outflow(net, l) + at_x.inflow_exo[l] - at_x.outflow_exo[l]
        })
        .collect()
}

/// `(g(x, y), g(y, x))`
pub fn embedding_field<S: FlowSystem>(sys: &S, s: &EmbeddingState) -> EmbeddingState {
    EmbeddingState {
        x: decomposition(sys, &s.x, &s.y),
        y: decomposition(sys, &s.y, &s.x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junction::{vector_field, JunctionModel, TrafficModel};
    use crate::link::{DemandCurve, LinkParams, SupplyCurve};
    use crate::topology::{build_network, Edge};

    fn div3() -> TrafficModel {
        let net = build_network(&[
            Edge::new(1, None, Some("v")),
            Edge::new(2, Some("v"), None),
            Edge::new(3, Some("v"), None),
        ])
        .unwrap();
        let link = |a: f64, b: f64, beta: f64, delta: f64| LinkParams {
            jam_density: b,
            demand: DemandCurve::Exponential { a, c: 0.5 },
            supply: SupplyCurve::Affine { b },
            beta,
            gamma: 0.0,
            delta,
        };
        TrafficModel::new(
            net,
            vec![
                link(4.0, 6.0, 0.0, 4.0),
                link(3.0, 4.0, 0.8, 0.0),
                link(2.0, 2.0, 0.2, 0.0),
            ],
            JunctionModel::PartialFifoLanes {
                eta: vec![1.0, 0.1, 0.9],
            },
        )
        .unwrap()
    }

    #[test]
    fn surrogate_swaps_adjacent_coordinates() {
        let m = div3();
        let x = [1.0, 2.0, 3.0];
        let y = [4.0, 5.0, 6.0];
        assert_eq!(surrogate_state(m.net(), &x, &y, 1), vec![1.0, 2.0, 6.0]);
        assert_eq!(surrogate_state(m.net(), &x, &y, 2), vec![1.0, 5.0, 3.0]);
        assert_eq!(surrogate_state(m.net(), &x, &y, 0), x.to_vec());
        assert_eq!(surrogate_state(m.net(), &x, &x, 1), x.to_vec());
    }

    #[test]
    fn extreme_corners() {
        let m = div3();
        let lo = [0.0, 0.0, 0.0];
        let hi = [6.0, 4.0, 2.0];
        assert_eq!(decomposition(&m, &lo, &hi), vec![4.0, 0.0, 0.0]);
        let g = decomposition(&m, &hi, &lo);
        assert_eq!(g[0], 0.0);
        assert!((g[1] + 3.0 * (1.0 - (-2.0f64).exp())).abs() <= 1e-12);
        assert!((g[2] + 2.0 * (1.0 - (-1.0f64).exp())).abs() <= 1e-12);
    }

    #[test]
    fn diagonal_matches_vector_field() {
        let m = div3();
        for x in [[1.0, 1.0, 1.0], [3.0, 1.0, 1.9], [5.5, 3.9, 0.1]] {
            let e = embedding_field(&m, &EmbeddingState::new(x.to_vec(), x.to_vec()));
            let f = vector_field(&m, &x);
            assert_eq!(e.x, f);
            assert_eq!(e.y, f);
        }
    }

    #[test]
    fn field_swap_symmetry() {
        let m = div3();
        let s = EmbeddingState::new(vec![1.0, 0.5, 1.5], vec![4.0, 3.0, 0.2]);
        let a = embedding_field(&m, &s);
        let b = embedding_field(&m, &s.swapped());
        assert_eq!(a.swapped(), b);
    }

    #[test]
    fn order_relation() {
        let a = EmbeddingState::new(vec![0.0, 0.0, 0.0], vec![6.0, 4.0, 2.0]);
        let b = EmbeddingState::new(vec![1.0, 0.0, 0.0], vec![6.0, 4.0, 2.0]);
        assert!(order_leq(&a, &b, 0.0));
        assert!(!order_leq(&b, &a, 0.0));
        assert!(order_leq(&a, &a, 0.0));
        let c = EmbeddingState::new(vec![0.0], vec![2.0]);
        let d = EmbeddingState::new(vec![0.0], vec![1.0]);
        assert!(order_leq(&c, &d, 0.0));
        assert!(!order_leq(&d, &c, 0.0));
        assert!(SoutheastOrder { tol: 1.5 }.leq(&d, &c));
    }
}
