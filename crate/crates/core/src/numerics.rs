//! Fixed-step RK4 integration and central-difference Jacobians.

use serde::Serialize;

use crate::error::NumericsError;

/// Default integrator step.
pub const DEFAULT_DT: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Bounds { lower, upper }
    }

    /// `[0, upper]` per coordinate.
    pub fn from_upper(upper: &[f64]) -> Self {
        Bounds {
            lower: vec![0.0; upper.len()],
            upper: upper.to_vec(),
        }
    }

    /// Clamps `x` in place and returns the largest excess relative to the
    /// box width.
    pub fn clamp(&self, x: &mut [f64]) -> f64 {
        let mut worst = 0.0f64;
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            let c = v.clamp(lo, hi);
            let width = (hi - lo).max(f64::MIN_POSITIVE);
            worst = worst.max((*v - c).abs() / width);
            *v = c;
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
    pub method: &'static str,
    /// Largest clamping correction applied after any step, relative to the
    /// box width of the coordinate.
    pub max_clamp: f64,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_finite(v: &[f64], time: f64) -> Result<(), NumericsError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(component) => Err(NumericsError::NonFiniteState { time, component }),
        None => Ok(()),
    }
}

/// Classical fourth-order Runge-Kutta with fixed step `dt`; the last step is
/// shortened to land on `t_final`. States are clamped to `bounds` after every
/// step and recorded at every step.
pub fn integrate<F>(
    mut field: F,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    bounds: Option<&Bounds>,
) -> Result<Trajectory, NumericsError>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NumericsError::InvalidStep(format!(
            "dt = {dt} must be positive"
        )));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(NumericsError::InvalidStep(format!(
            "t_final = {t_final} must be >= 0"
        )));
    }
    let n = x0.len();
    if let Some(b) = bounds {
        if b.upper.len() != n {
            return Err(NumericsError::Dimension {
                expected: n,
                found: b.upper.len(),
            });
        }
    }
    let mut x = x0.to_vec();
    if let Some(b) = bounds {
        b.clamp(&mut x);
    }
    check_finite(&x, 0.0)?;

    let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x.clone());
    let mut max_clamp = 0.0f64;
    let mut tmp = vec![0.0; n];

    for k in 0..steps {
        let t = k as f64 * dt;
        let t_next = if k + 1 == steps {
            t_final
        } else {
            (k + 1) as f64 * dt
        };
        let h = t_next - t;

        let k1 = field(t, &x);
        check_finite(&k1, t)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        let k2 = field(t + 0.5 * h, &tmp);
        check_finite(&k2, t)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        let k3 = field(t + 0.5 * h, &tmp);
        check_finite(&k3, t)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        let k4 = field(t + h, &tmp);
        check_finite(&k4, t)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(&x, t_next)?;
        if let Some(b) = bounds {
            max_clamp = max_clamp.max(b.clamp(&mut x));
        }
        times.push(t_next);
        states.push(x.clone());
    }

    Ok(Trajectory {
        times,
        states,
        dt,
        method: "rk4",
        max_clamp,
    })
}

/// Finite-difference settings, per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSpec {
    pub step: Vec<f64>,
    pub exclusion_radius: Vec<f64>,
}

impl FdSpec {
    pub const REL_STEP: f64 = 1e-6;
    pub const REL_EXCLUSION: f64 = 1e-4;

    /// Step `1e-6 * scale` and exclusion radius `1e-4 * scale`.
    pub fn relative(scale: &[f64]) -> Self {
        FdSpec {
            step: scale.iter().map(|s| s * Self::REL_STEP).collect(),
            exclusion_radius: scale.iter().map(|s| s * Self::REL_EXCLUSION).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if self.step.len() != self.exclusion_radius.len() {
            return Err(NumericsError::Dimension {
                expected: self.step.len(),
                found: self.exclusion_radius.len(),
            });
        }
        for (h, r) in self.step.iter().zip(&self.exclusion_radius) {
            if !(*h > 0.0) || r < h {
                return Err(NumericsError::InvalidStep(format!(
                    "need step > 0 and exclusion radius >= step (step {h}, radius {r})"
                )));
            }
        }
        Ok(())
    }
}

/// Row-major Jacobian estimate with a per-column kink mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FdJacobian {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    /// Column `j` is masked when the active branches differ anywhere in
    /// `x +- r_j e_j`.
    pub masked: Vec<bool>,
}

impl FdJacobian {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn is_masked(&self, _i: usize, j: usize) -> bool {
        self.masked[j]
    }
}

/// Central differences of `func` at `x`. `func` writes the branch record of
/// each evaluation into the supplied buffer; a column is masked when the
/// records at `x - r e_j`, `x` and `x + r e_j` disagree.
pub fn jacobian_fd<F>(mut func: F, x: &[f64], spec: &FdSpec) -> FdJacobian
where
    F: FnMut(&[f64], &mut Vec<u32>) -> Vec<f64>,
{
    let n = x.len();
    let mut sig0 = Vec::new();
    let f0 = func(x, &mut sig0);
    let m = f0.len();
    let mut values = vec![0.0; m * n];
    let mut masked = vec![false; n];
    let mut probe = x.to_vec();
    let mut sig = Vec::new();

    for j in 0..n {
        let (h, r) = (spec.step[j], spec.exclusion_radius[j]);

        for delta in [-r, r] {
            probe[j] = x[j] + delta;
            sig.clear();
            func(&probe, &mut sig);
            if sig != sig0 {
                masked[j] = true;
            }
        }

        probe[j] = x[j] + h;
        sig.clear();
        let fp = func(&probe, &mut sig);
        probe[j] = x[j] - h;
        sig.clear();
        let fm = func(&probe, &mut sig);
        probe[j] = x[j];

        for i in 0..m {
            values[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }

    FdJacobian {
        rows: m,
        cols: n,
        values,
        masked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn decay_error(dt: f64) -> f64 {
        let tr = integrate(|_, x| vec![-x[0]], &[1.0], 1.0, dt, None).unwrap();
        (tr.last()[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn zero_field_keeps_state() {
        let tr = integrate(|_, x| vec![0.0; x.len()], &[1.5, 2.5], 3.0, 0.5, None).unwrap();
        assert_eq!(tr.len(), 7);
        assert!(tr.states.iter().all(|s| s == &[1.5, 2.5]));
    }

    #[test]
    fn exponential_decay_accuracy() {
        assert!(decay_error(1e-3) <= 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let ratio = decay_error(0.1) / decay_error(0.05);
        assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn lands_exactly_on_final_time() {
        let tr = integrate(|_, _| vec![1.0], &[0.0], 0.25, 0.1, None).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.1, 0.2, 0.25]);
        assert_abs_diff_eq!(tr.last()[0], 0.25, epsilon = 1e-15);
        let tr = integrate(|_, _| vec![1.0], &[0.0], 0.0, 0.1, None).unwrap();
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn times_strictly_increasing() {
        let tr = integrate(|_, x| vec![-x[0]], &[1.0], 2.0, 0.01, None).unwrap();
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*tr.times.last().unwrap(), 2.0);
    }

    #[test]
    fn clamps_to_box() {
        let b = Bounds::from_upper(&[1.0]);
        let tr = integrate(|_, _| vec![1.0], &[0.5], 1.0, 0.1, Some(&b)).unwrap();
        assert_eq!(tr.last()[0], 1.0);
        assert!(tr.max_clamp > 0.0);
    }

    #[test]
    fn non_finite_is_an_error() {
        let err = integrate(|_, _| vec![f64::NAN], &[0.0], 1.0, 0.1, None).unwrap_err();
        assert!(matches!(
            err,
            NumericsError::NonFiniteState { component: 0, .. }
        ));
        assert!(integrate(|_, _| vec![0.0], &[0.0], 1.0, 0.0, None).is_err());
    }

    #[test]
    fn linear_jacobian_recovered() {
        let a = [[1.0, -2.0, 0.5], [0.0, 3.0, -1.0]];
        let f = |x: &[f64], _: &mut Vec<u32>| {
            a.iter()
                .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
                .collect()
        };
        let spec = FdSpec::relative(&[1.0, 1.0, 1.0]);
        let j = jacobian_fd(f, &[0.3, 0.4, 0.5], &spec);
        for i in 0..2 {
            for k in 0..3 {
                assert_abs_diff_eq!(j.get(i, k), a[i][k], epsilon = 1e-9);
            }
        }
        assert!(j.masked.iter().all(|m| !m));
    }

    #[test]
    fn kink_is_masked() {
        let f = |x: &[f64], log: &mut Vec<u32>| vec![crate::branch::min2(x[0], 2.0, log)];
        let spec = FdSpec::relative(&[4.0]);
        assert!(jacobian_fd(f, &[2.0], &spec).masked[0]);
        assert!(!jacobian_fd(f, &[1.0], &spec).masked[0]);
    }

    #[test]
    fn fd_spec_validation() {
        assert!(FdSpec::relative(&[1.0, 2.0]).validate().is_ok());
        let bad = FdSpec {
            step: vec![1e-3],
            exclusion_radius: vec![1e-4],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn jacobian_is_deterministic() {
        let f = |x: &[f64], _: &mut Vec<u32>| vec![x[0].sin() * x[1], x[1].exp()];
        let spec = FdSpec::relative(&[1.0, 1.0]);
        let a = jacobian_fd(f, &[0.3, 0.7], &spec);
        let b = jacobian_fd(f, &[0.3, 0.7], &spec);
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
