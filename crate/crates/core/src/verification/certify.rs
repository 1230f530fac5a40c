use std::fmt;

use serde::Serialize;

use crate::dynamics::simulate_embedding;
use crate::embedding::{decomposition, order_leq, EmbeddingState};
use crate::error::NumericsError;
use crate::junction::{vector_field, FlowSystem};
use crate::numerics::DEFAULT_DT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub t_horizon: f64,
    pub dt: f64,
    pub residual_tol: f64,
    pub gap_tol: f64,
    /// Slack allowed in the order comparison of consecutive states.
    pub order_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            t_horizon: 200.0,
            dt: DEFAULT_DT,
            residual_tol: 1e-8,
            gap_tol: 1e-6,
            order_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateStatus {
    Certified,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hint {
    /// The field was still shrinking at the horizon; a longer run may settle.
    HorizonTooShort,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Outcome of integrating the embedding system from the extreme corner
/// `(0, jam)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCertificate {
    pub status: CertificateStatus,
    /// Present only when certified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<f64>>,
    pub midpoint: Vec<f64>,
    pub x_final: Vec<f64>,
    pub y_final: Vec<f64>,
    /// `max |F(midpoint)|`
    pub residual: f64,
    /// `max |(g(x, y), g(y, x))|` at the horizon.
    pub embedding_residual: f64,
    /// `max |x(T) - y(T)|`
    pub gap: f64,
    pub initial_signs_ok: bool,
    pub monotone: bool,
    /// First output time at which the order check failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone_break: Option<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub residual_tol: f64,
    pub gap_tol: f64,
    pub max_clamp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<Hint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tail: Vec<TailPoint>,
}

impl ConvergenceCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("certificate serializes")
    }
}

impl fmt::Display for ConvergenceCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(f, "status:             {:?}", self.status)?;
        if let Some(xe) = &self.equilibrium {
            writeln!(f, "equilibrium:        {xe:?}")?;
        }
        writeln!(f, "initial signs:      {}", mark(self.initial_signs_ok))?;
        writeln!(f, "order monotone:     {}", mark(self.monotone))?;
        writeln!(
            f,
            "embedding residual: {:.3e} ({})",
            self.embedding_residual,
            mark(self.embedding_residual <= self.residual_tol)
        )?;
        writeln!(
            f,
            "residual at x^e:    {:.3e} ({})",
            self.residual,
            mark(self.residual <= self.residual_tol)
        )?;
        writeln!(
            f,
            "gap:                {:.3e} ({})",
            self.gap,
            mark(self.gap <= self.gap_tol)
        )?;
        write!(f, "horizon:            {} (dt {})", self.horizon, self.dt)?;
        if let Some(h) = self.hint {
            write!(f, "\nhint:               {h:?}")?;
        }
        Ok(())
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
}

fn embedding_norm<S: FlowSystem>(sys: &S, x: &[f64], y: &[f64]) -> f64 {
    sup_norm(&decomposition(sys, x, y)).max(sup_norm(&decomposition(sys, y, x)))
}

const TAIL_LEN: usize = 10;

/// Integrates the embedding system from `(0, jam)` and certifies global
/// convergence when the run starts with the right derivative signs, stays
/// monotone in the southeast order, settles and closes its gap. Anything
/// short of that is reported as inconclusive.
pub fn certify_convergence<S: FlowSystem>(
    sys: &S,
    opts: &CertifyOptions,
) -> Result<ConvergenceCertificate, NumericsError> {
    let n = sys.network().num_links();
    let jam = sys.jam_densities().to_vec();
    let s0 = EmbeddingState::new(vec![0.0; n], jam.clone());

    let g_lo = decomposition(sys, &s0.x, &s0.y);
    let g_hi = decomposition(sys, &s0.y, &s0.x);
    let initial_signs_ok = g_lo.iter().all(|&v| v >= 0.0) && g_hi.iter().all(|&v| v <= 0.0);

    let traj = simulate_embedding(sys, &s0, opts.t_horizon, opts.dt)?;
    let states: Vec<EmbeddingState> = traj
        .states
        .iter()
        .map(|s| EmbeddingState::from_flat(s))
        .collect();

    let monotone_break = states
        .windows(2)
        .position(|w| !order_leq(&w[0], &w[1], opts.order_tol))
        .map(|k| traj.times[k + 1]);
    let monotone = monotone_break.is_none();

    let last = states.last().expect("trajectory holds the initial state");
    let (x_final, y_final) = (last.x.clone(), last.y.clone());
    let embedding_residual = embedding_norm(sys, &x_final, &y_final);
    let gap = x_final
        .iter()
        .zip(&y_final)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let midpoint: Vec<f64> = x_final
        .iter()
        .zip(&y_final)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let residual = sup_norm(&vector_field(sys, &midpoint));

    let settled = embedding_residual <= opts.residual_tol;
    let certified = initial_signs_ok
        && monotone
        && settled
        && gap <= opts.gap_tol
        && residual <= opts.residual_tol;

    let hint = if settled {
        None
    } else {
        let k = ((0.9 * traj.len() as f64) as usize).min(traj.len() - 1);
        let earlier = &states[k];
        (embedding_norm(sys, &earlier.x, &earlier.y) > embedding_residual)
            .then_some(Hint::HorizonTooShort)
    };

    let tail = if certified {
        Vec::new()
    } else {
        let start = states.len().saturating_sub(TAIL_LEN);
        (start..states.len())
            .map(|k| TailPoint {
                t: traj.times[k],
                x: states[k].x.clone(),
                y: states[k].y.clone(),
            })
            .collect()
    };

    Ok(ConvergenceCertificate {
        status: if certified {
            CertificateStatus::Certified
        } else {
            CertificateStatus::Inconclusive
        },
        equilibrium: certified.then(|| midpoint.clone()),
        midpoint,
        x_final,
        y_final,
        residual,
        embedding_residual,
        gap,
        initial_signs_ok,
        monotone,
        monotone_break,
        horizon: opts.t_horizon,
        dt: opts.dt,
        residual_tol: opts.residual_tol,
        gap_tol: opts.gap_tol,
        max_clamp: traj.max_clamp,
        hint,
        tail,
    })
}
