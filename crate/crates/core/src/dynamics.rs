//! Trajectories of the network dynamics and of the embedding system.

use crate::embedding::{decomposition, EmbeddingState};
use crate::error::NumericsError;
use crate::junction::{vector_field, FlowSystem};
use crate::numerics::{integrate, Bounds, Trajectory};

pub fn simulate<S: FlowSystem>(
    sys: &S,
    x0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<Trajectory, NumericsError> {
    let n = sys.network().num_links();
    if x0.len() != n {
        return Err(NumericsError::Dimension {
            expected: n,
            found: x0.len(),
        });
    }
    let bounds = Bounds::from_upper(sys.jam_densities());
    integrate(|_, x| vector_field(sys, x), x0, t_final, dt, Some(&bounds))
}

/// `(x, y)` trajectory stored flat as `[x..., y...]` per step.
pub fn simulate_embedding<S: FlowSystem>(
    sys: &S,
    s0: &EmbeddingState,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory, NumericsError> {
    let n = sys.network().num_links();
    if s0.dim() != n {
        return Err(NumericsError::Dimension {
            expected: n,
            found: s0.dim(),
        });
    }
    let jam = sys.jam_densities();
    let upper: Vec<f64> = jam.iter().chain(jam.iter()).copied().collect();
    let bounds = Bounds::from_upper(&upper);
    integrate(
        |_, s| {
            let (x, y) = s.split_at(n);
            let mut out = decomposition(sys, x, y);
            out.extend(decomposition(sys, y, x));
            out
        },
        &s0.to_flat(),
        t_final,
        dt,
        Some(&bounds),
    )
}
