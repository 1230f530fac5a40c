//! Fundamental-diagram data for a single link.
//!
//! Demand is the most a link can send, supply the most it can receive. Both
//! are defined on `[0, jam_density]`; arguments outside are clamped first.

use serde::{Deserialize, Serialize};

use crate::branch::{BranchLog, NoLog};
use crate::error::ParamError;
use crate::topology::LinkId;

/// Grid resolution (as a fraction of jam density) and slack used when checking
/// strict monotonicity of a curve.
pub const MONOTONE_GRID: usize = 1000;
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandCurve {
    /// `d(x) = a (1 - exp(-c x))`
    Exponential {
        a: f64,
        c: f64,
    },
    PiecewiseLinear {
        breakpoints: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupplyCurve {
    /// `s(x) = b - x`; requires `b` equal to the jam density.
    Affine {
        b: f64,
    },
    PiecewiseLinear {
        breakpoints: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub jam_density: f64,
    pub demand: DemandCurve,
    pub supply: SupplyCurve,
    /// Turn ratio; meaningful only for links with upstream links.
    pub beta: f64,
    /// Off-ramp fraction of the total outflow; meaningful only for links with
    /// downstream links.
    pub gamma: f64,
    /// Exogenous inflow demand; meaningful only for source links.
    pub delta: f64,
}

fn interpolate<L: BranchLog>(bp: &[(f64, f64)], x: f64, log: &mut L) -> f64 {
    // breakpoints validated: at least two, densities strictly increasing
    let seg = match bp.iter().position(|&(d, _)| d > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => bp.len() - 2,
    }
    .min(bp.len() - 2);
    log.record(seg as u32);
    let (x0, y0) = bp[seg];
    let (x1, y1) = bp[seg + 1];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl DemandCurve {
    pub fn eval_logged<L: BranchLog>(&self, x: f64, log: &mut L) -> f64 {
        match self {
            DemandCurve::Exponential { a, c } => -a * (-c * x).exp_m1(),
            DemandCurve::PiecewiseLinear { breakpoints } => interpolate(breakpoints, x, log),
        }
    }
}

impl SupplyCurve {
    pub fn eval_logged<L: BranchLog>(&self, x: f64, log: &mut L) -> f64 {
        match self {
            SupplyCurve::Affine { b } => b - x,
            SupplyCurve::PiecewiseLinear { breakpoints } => interpolate(breakpoints, x, log),
        }
    }
}

impl LinkParams {
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(0.0, self.jam_density)
    }

    pub fn demand_logged<L: BranchLog>(&self, x: f64, log: &mut L) -> f64 {
        self.demand.eval_logged(self.clamp(x), log)
    }

    pub fn supply_logged<L: BranchLog>(&self, x: f64, log: &mut L) -> f64 {
        // guard against -0.0 / rounding below zero at jam
        self.supply.eval_logged(self.clamp(x), log).max(0.0)
    }

    pub fn demand(&self, x: f64) -> f64 {
        self.demand_logged(x, &mut NoLog)
    }

    pub fn supply(&self, x: f64) -> f64 {
        self.supply_logged(x, &mut NoLog)
    }

    /// Checks the curve family constraints and strict monotonicity on a grid.
    /// Turn ratio positivity depends on topology and is checked by the caller.
    pub fn validate(&self, link: LinkId) -> Result<(), ParamError> {
        let xbar = self.jam_density;
        if !(xbar.is_finite() && xbar > 0.0) {
            return Err(ParamError::OutOfRange {
                link,
                field: "jam_density",
                value: xbar,
                expected: "> 0",
            });
        }
        for (field, value) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError::OutOfRange {
                    link,
                    field,
                    value,
                    expected: ">= 0",
                });
            }
        }
        let curve = |message: String| ParamError::Curve { link, message };

        match &self.demand {
            DemandCurve::Exponential { a, c } => {
                if !(*a > 0.0 && a.is_finite() && *c > 0.0 && c.is_finite()) {
                    return Err(curve(format!(
                        "exponential demand needs a > 0 and c > 0 (a = {a}, c = {c})"
                    )));
                }
            }
            DemandCurve::PiecewiseLinear { breakpoints } => {
                check_breakpoints(breakpoints, xbar, true).map_err(curve)?;
            }
        }
        match &self.supply {
            SupplyCurve::Affine { b } => {
                if (b - xbar).abs() > 1e-12 * xbar {
                    return Err(curve(format!(
                        "affine supply needs b equal to the jam density (b = {b}, jam density = {xbar})"
                    )));
                }
            }
            SupplyCurve::PiecewiseLinear { breakpoints } => {
                check_breakpoints(breakpoints, xbar, false).map_err(curve)?;
            }
        }
        self.check_monotone().map_err(curve)
    }

    /// Strict monotonicity sampled at `MONOTONE_GRID + 1` points.
    pub fn check_monotone(&self) -> Result<(), String> {
        let h = self.jam_density / MONOTONE_GRID as f64;
        let mut prev_d = self.demand(0.0);
        let mut prev_s = self.supply(0.0);
        if prev_d != 0.0 {
            return Err(format!("demand at zero density is {prev_d}, expected 0"));
        }
        for i in 1..=MONOTONE_GRID {
            let x = if i == MONOTONE_GRID {
                self.jam_density
            } else {
                i as f64 * h
            };
            let d = self.demand(x);
            let s = self.supply(x);
            if !(d.is_finite() && s.is_finite()) || d < 0.0 || s < 0.0 {
                return Err(format!("curve value at x = {x} is negative or non-finite"));
            }
            if d - prev_d < MONOTONE_TOL {
                return Err(format!("demand is not strictly increasing near x = {x}"));
            }
            if prev_s - s < MONOTONE_TOL {
                return Err(format!("supply is not strictly decreasing near x = {x}"));
            }
            prev_d = d;
            prev_s = s;
        }
        if prev_s != 0.0 {
            return Err(format!("supply at jam density is {prev_s}, expected 0"));
        }
        Ok(())
    }
}

fn check_breakpoints(bp: &[(f64, f64)], xbar: f64, increasing: bool) -> Result<(), String> {
    if bp.len() < 2 {
        return Err("piecewise-linear curve needs at least two breakpoints".into());
    }
    if bp.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err("non-finite breakpoint".into());
    }
    if bp[0].0 != 0.0 {
        return Err("first breakpoint must be at density 0".into());
    }
    if (bp[bp.len() - 1].0 - xbar).abs() > 1e-12 * xbar {
        return Err("last breakpoint must be at the jam density".into());
    }
    for w in bp.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err("breakpoint densities must be strictly increasing".into());
        }
        let ok = if increasing {
            w[1].1 > w[0].1
        } else {
            w[1].1 < w[0].1
        };
        if !ok {
            return Err(format!(
                "breakpoint flows must be strictly {}",
                if increasing {
                    "increasing"
                } else {
                    "decreasing"
                }
            ));
        }
    }
    if increasing && bp[0].1 != 0.0 {
        return Err("demand must vanish at density 0".into());
    }
    if !increasing && bp[bp.len() - 1].1 != 0.0 {
        return Err("supply must vanish at the jam density".into());
    }
    Ok(())
}

pub fn demand(p: &LinkParams, x: f64) -> f64 {
    p.demand(x)
}

pub fn supply(p: &LinkParams, x: f64) -> f64 {
    p.supply(x)
}
