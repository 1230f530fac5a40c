//! Bookkeeping of which argument of each `min` is active.
//!
//! Every nondifferentiability of the flow models comes from an explicit
//! `min` (or a segment switch of a piecewise-linear curve). Evaluations can
//! record the branch taken at each of those sites; two evaluations with the
//! same record lie on the same smooth piece.

/// Sink for branch indices emitted during a flow evaluation.
pub trait BranchLog {
    fn record(&mut self, branch: u32);
}

/// Discards everything. Used on the integrator hot path.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoLog;

impl BranchLog for NoLog {
    #[inline(always)]
    fn record(&mut self, _branch: u32) {}
}

impl BranchLog for Vec<u32> {
    #[inline]
    fn record(&mut self, branch: u32) {
        self.push(branch);
    }
}

/// `min{a, b}`, logging 0 when `a` is kept and 1 otherwise.
#[inline]
pub fn min2<L: BranchLog>(a: f64, b: f64, log: &mut L) -> f64 {
    if b < a {
        log.record(1);
        b
    } else {
        log.record(0);
        a
    }
}

/// `min{1, min_i num_i / den_i}`. Terms with a zero denominator are skipped,
/// so the result is 1 when every denominator vanishes. Logs the index of the
/// active term (0 for the constant 1, `i + 1` for the i-th ratio).
pub fn capped_ratio<L, I>(terms: I, log: &mut L) -> f64
where
    L: BranchLog,
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut best = 1.0;
    let mut arg = 0u32;
    for (i, (num, den)) in terms.into_iter().enumerate() {
        if den <= 0.0 {
            continue;
        }
        let r = num / den;
        if r < best {
            best = r;
            arg = i as u32 + 1;
        }
    }
    log.record(arg);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min2_logs_active_argument() {
        let mut log = Vec::new();
        assert_eq!(min2(1.0, 2.0, &mut log), 1.0);
        assert_eq!(min2(3.0, 2.0, &mut log), 2.0);
        assert_eq!(log, vec![0, 1]);
    }

    #[test]
    fn capped_ratio_zero_denominator_is_one() {
        let mut log = Vec::new();
        assert_eq!(capped_ratio([(0.0, 0.0), (5.0, 0.0)], &mut log), 1.0);
        assert_eq!(log, vec![0]);
    }

    #[test]
    fn capped_ratio_picks_smallest() {
        let mut log = Vec::new();
        let a = capped_ratio([(3.0, 2.0), (0.5, 2.0)], &mut log);
        assert_eq!(a, 0.25);
        assert_eq!(log, vec![2]);
        let mut log = Vec::new();
        assert_eq!(capped_ratio([(3.0, 2.0), (4.0, 2.0)], &mut log), 1.0);
        assert_eq!(log, vec![0]);
    }
}
