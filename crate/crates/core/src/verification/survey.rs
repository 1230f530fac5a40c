use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sample_interior;
use crate::junction::FlowSystem;
use crate::numerics::{jacobian_fd, FdSpec};
use crate::topology::LinkId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    /// Within tolerance of zero at every unmasked sample.
    Zero,
    Nonnegative,
    Nonpositive,
    Mixed,
}

/// Sign summary of `dF_row / dx_col` over the samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignEntry {
    pub row: LinkId,
    pub col: LinkId,
    pub class: SignClass,
    pub positive: usize,
    pub negative: usize,
    pub masked: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignSurvey {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub links: Vec<LinkId>,
    pub entries: Vec<SignEntry>,
}

impl SignSurvey {
    pub fn mixed(&self) -> impl Iterator<Item = &SignEntry> {
        self.entries.iter().filter(|e| e.class == SignClass::Mixed)
    }

    pub fn get(&self, row: LinkId, col: LinkId) -> Option<&SignEntry> {
        self.entries.iter().find(|e| e.row == row && e.col == col)
    }

    /// Orthant signs `e` with `e_i e_j dF_i/dx_j >= 0` for every observed
    /// off-diagonal entry, i.e. an orthant order the sampled dynamics would
    /// preserve. `None` when the observed sign pattern admits no such order,
    /// either because an entry is mixed or because some cycle of entries has
    /// an odd number of negative signs. Signs are indexed like the links.
    pub fn orthant_order(&self) -> Option<Vec<i8>> {
        let idx = |id: LinkId| {
            self.links
                .binary_search(&id)
                .expect("entry ids are link ids")
        };
        let n = self.links.len();
        let mut edges = vec![Vec::new(); n];
        for e in &self.entries {
            let flip = match e.class {
                SignClass::Zero => continue,
                SignClass::Nonnegative => false,
                SignClass::Nonpositive => true,
                SignClass::Mixed => return None,
            };
            let (i, j) = (idx(e.row), idx(e.col));
            edges[i].push((j, flip));
            edges[j].push((i, flip));
        }
        let mut sign = vec![0i8; n];
        for root in 0..n {
            if sign[root] != 0 {
                continue;
            }
            sign[root] = 1;
            let mut stack = vec![root];
            while let Some(i) = stack.pop() {
                for &(j, flip) in &edges[i] {
                    let want = if flip { -sign[i] } else { sign[i] };
                    if sign[j] == 0 {
                        sign[j] = want;
                        stack.push(j);
                    } else if sign[j] != want {
                        return None;
                    }
                }
            }
        }
        Some(sign)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sign survey serializes")
    }
}

impl fmt::Display for SignSurvey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>5} {:>5} {:<12} {:>8} {:>8} {:>8} {:>12} {:>12}",
            "row", "col", "sign", "pos", "neg", "masked", "min", "max"
        )?;
        for e in &self.entries {
            let class = match e.class {
                SignClass::Zero => "zero",
                SignClass::Nonnegative => "nonnegative",
                SignClass::Nonpositive => "nonpositive",
                SignClass::Mixed => "MIXED",
            };
            writeln!(
                f,
                "{:>5} {:>5} {:<12} {:>8} {:>8} {:>8} {:>12.4e} {:>12.4e}",
                e.row.to_string(),
                e.col.to_string(),
                class,
                e.positive,
                e.negative,
                e.masked,
                e.min,
                e.max
            )?;
        }
        write!(
            f,
            "{} samples, seed {}, tolerance {:e}: {} mixed-sign entries; ",
            self.samples,
            self.seed,
            self.tol,
            self.mixed().count()
        )?;
        match self.orthant_order() {
            Some(signs) => write!(f, "sign pattern consistent with orthant {signs:?}"),
            None => write!(f, "sign pattern consistent with no orthant order"),
        }
    }
}

/// Classifies every off-diagonal entry of the Jacobian of the vector field
/// by the signs it takes at uniformly sampled interior states.
pub fn jacobian_sign_survey<S: FlowSystem>(
    sys: &S,
    samples: usize,
    seed: u64,
    tol: f64,
) -> SignSurvey {
    let net = sys.network();
    let n = net.num_links();
    let ids = net.link_ids();
    let spec = FdSpec::relative(sys.jam_densities());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut entries: Vec<SignEntry> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| SignEntry {
            row: ids[i],
            col: ids[j],
            class: SignClass::Zero,
            positive: 0,
            negative: 0,
            masked: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        })
        .collect();

    for _ in 0..samples {
        let x = sample_interior(&mut rng, sys.jam_densities());
        let jac = jacobian_fd(|z, log| sys.flows_logged(z, log).field(net), &x, &spec);
        let pairs = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
        for ((i, j), e) in pairs.zip(entries.iter_mut()) {
            if jac.is_masked(i, j) {
                e.masked += 1;
                continue;
            }
            let d = jac.get(i, j);
            e.min = e.min.min(d);
            e.max = e.max.max(d);
            if d > tol {
                e.positive += 1;
            } else if d < -tol {
                e.negative += 1;
            }
        }
    }

    for e in &mut entries {
        e.class = match (e.positive > 0, e.negative > 0) {
            (false, false) => SignClass::Zero,
            (true, false) => SignClass::Nonnegative,
            (false, true) => SignClass::Nonpositive,
            (true, true) => SignClass::Mixed,
        };
    }

    SignSurvey {
        samples,
        seed,
        tol,
        links: ids.to_vec(),
        entries,
    }
}
