//! Single-trajectory identity tester and the property suite of the chain
//! distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{self, TransitionMatrix};
use crate::config::{derive_seed, Constants};
use crate::error::{ChainError, Result};
use crate::generate;
use crate::iid_test::{self, Decision, TestVerdict};
use crate::metrics::{self, chain_distance};
use crate::partition::{self, PartitionOptions, StatePartition};
use crate::sampling::{self, HittingSchedule, IidOutcome, Trajectory};

/// How the observed trajectory relates to the lazy chain the tester works
/// with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LazifyMode {
    /// Insert Geometric hold times into a path of the original chain.
    Emulate,
    /// The path already comes from the lazy chain.
    Assume,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub eps: f64,
    /// Partition tolerance; `eps/16` when absent.
    pub beta: Option<f64>,
    /// Per-component confidence; `1/(10d)` when absent.
    pub delta_iid: Option<f64>,
    pub constants: Constants,
    pub seed: u64,
    pub lazify: LazifyMode,
}

impl TestConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self { eps, beta: None, delta_iid: None, constants: Constants::default(), seed, lazify: LazifyMode::Emulate }
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(self.eps / 16.0)
    }

    pub fn delta_iid(&self, d: usize) -> f64 {
        self.delta_iid.unwrap_or(1.0 / (10.0 * d as f64))
    }

    /// Laziness `ε²/(2√2)`.
    pub fn alpha(&self) -> f64 {
        self.eps * self.eps / (2.0 * std::f64::consts::SQRT_2)
    }

    /// Hellinger parameter handed to the iid tester, `√(ε²/128)`.
    pub fn hellinger_eps(&self) -> f64 {
        (self.eps * self.eps / 128.0).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailInfo {
    pub state: usize,
    pub needed: usize,
    pub available: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentTrace {
    pub states: Vec<usize>,
    pub samples_requested: usize,
    pub fail: Option<FailInfo>,
    pub verdict: Option<TestVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub verdict: Decision,
    pub partition_used: StatePartition,
    pub tested_component: Option<Vec<usize>>,
    pub per_component: Vec<ComponentTrace>,
    pub trajectory_length: usize,
}

/// `⌈C_len · ln⁶(max(d,2)) · ln(1/π̄⋆) · ln(d/π̄⋆) / (ε⁴ π̄⋆)⌉`.
pub fn trajectory_budget(d: usize, pibar_star: f64, eps: f64, constants: &Constants) -> Result<u64> {
    if d == 0 || !(pibar_star > 0.0 && pibar_star < 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(ChainError::BadArgs("need d ≥ 1, π̄⋆ in (0,1), ε in (0,1)".into()));
    }
    let l = (d.max(2) as f64).ln();
    let v = constants.c_len * l.powi(6) * (1.0 / pibar_star).ln() * (d as f64 / pibar_star).ln()
        / (eps.powi(4) * pibar_star);
    Ok(v.ceil() as u64)
}

pub fn identity_test(pbar: &TransitionMatrix, traj: &Trajectory, cfg: &TestConfig) -> Result<TestReport> {
    let d = pbar.d();
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(ChainError::BadArgs(format!("ε must lie in (0,1), got {}", cfg.eps)));
    }
    let class = chain::validate(pbar)?;
    if !(class.irreducible && class.reversible) {
        return Err(ChainError::NotReversibleReference);
    }
    if let Some(&s) = traj.states.iter().find(|&&s| s >= d) {
        return Err(ChainError::TrajectoryAlphabetMismatch { state: s, d });
    }
    if traj.d != d {
        return Err(ChainError::TrajectoryAlphabetMismatch { state: traj.d, d });
    }
    let alpha = cfg.alpha();
    let lazy_ref = chain::lazy_version(pbar, alpha)?;
    let observed = match cfg.lazify {
        LazifyMode::Emulate => sampling::lazify_trajectory(traj, alpha, derive_seed(cfg.seed, 1))?,
        LazifyMode::Assume => traj.clone(),
    };
    let opts = PartitionOptions { constants: cfg.constants.clone(), certify: true };
    let part = partition::partition_with(&lazy_ref, cfg.beta(), derive_seed(cfg.seed, 2), &opts)?;
    let pibar = chain::stationary_distribution(&lazy_ref)?;
    let mut order: Vec<Vec<usize>> = part.components.clone();
    order.sort_by(|a, b| pibar.mass(b).total_cmp(&pibar.mass(a)).then(a[0].cmp(&b[0])));
    let schedule = HittingSchedule::new(&observed);
    let delta = cfg.delta_iid(d);
    let eps_h = cfg.hellinger_eps();
    let mut traces = Vec::new();
    for (k, comp) in order.iter().enumerate() {
        let nu = pibar.conditioned_on(comp)?;
        let induced = metrics::induced_distribution(&lazy_ref, &nu, comp)?;
        let l = iid_test::iid_sample_size(induced.alphabet_size(), eps_h, delta, &cfg.constants)?;
        let outcome =
            sampling::iid_generate_with(&observed, &schedule, comp, &nu, l, derive_seed(cfg.seed, 100 + 2 * k as u64))?;
        match outcome {
            IidOutcome::Fail { state, needed, available } => traces.push(ComponentTrace {
                states: comp.clone(),
                samples_requested: l,
                fail: Some(FailInfo { state, needed, available }),
                verdict: None,
            }),
            IidOutcome::Samples(samples) => {
                let idx: Vec<usize> =
                    samples.iter().map(|&s| induced.index_of(s).expect("symbol of the component")).collect();
                let verdict = iid_test::iid_test(
                    &idx,
                    &induced.dense(),
                    eps_h,
                    delta,
                    derive_seed(cfg.seed, 101 + 2 * k as u64),
                    &cfg.constants,
                )?;
                let decision = verdict.decision;
                traces.push(ComponentTrace {
                    states: comp.clone(),
                    samples_requested: l,
                    fail: None,
                    verdict: Some(verdict),
                });
                return Ok(TestReport {
                    verdict: decision,
                    partition_used: part,
                    tested_component: Some(comp.clone()),
                    per_component: traces,
                    trajectory_length: traj.len(),
                });
            }
        }
    }
    Ok(TestReport {
        verdict: Decision::Reject,
        partition_used: part,
        tested_component: None,
        per_component: traces,
        trajectory_length: traj.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Smallest margin by which the check held; negative on violation.
    pub worst_margin: f64,
}

impl PropertyCheck {
    fn new(name: &str) -> Self {
        Self { name: name.into(), cases: 0, violations: 0, worst_margin: f64::INFINITY }
    }

    fn record(&mut self, margin: f64) {
        self.cases += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if margin < 0.0 {
            self.violations += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub a: f64,
    pub distance: f64,
    pub hellinger_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub pairs: usize,
    pub checks: Vec<PropertyCheck>,
    pub family: Vec<FamilyPoint>,
}

impl PropertyReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

pub const PROPERTY_PAIRS: usize = 1000;
const SLACK: f64 = 1e-9;
const EQUALITY_TOL: f64 = 1e-7;
const LIMIT_TOL: f64 = 1e-4;
const LIMIT_POWER: u64 = 2048;
pub const FAMILY_POINTS: [f64; 3] = [0.1, 0.01, 0.001];

/// Checks the distance properties over `pairs` random pairs of sizes 2..=8:
/// lazy versions, time reversal, mixtures, powers, the power limit,
/// multiplicative reversibilization and the two-state family.
pub fn property_suite(seed: u64, pairs: usize) -> Result<PropertyReport> {
    let mut lazy = PropertyCheck::new("lazy_versions_keep_half_the_distance");
    let mut reversal = PropertyCheck::new("time_reversal_preserves_distance");
    let mut mixture = PropertyCheck::new("mixture_lower_bound");
    let mut powers = PropertyCheck::new("power_upper_bound");
    let mut limit = PropertyCheck::new("power_limit_is_stationary_hellinger");
    let mut dagger = PropertyCheck::new("reversibilization_at_most_doubles");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let d = rng.random_range(2..=8);
        let reversible = rng.random_bool(0.5);
        let density = rng.random_range(0.2..0.9);
        let hold = if rng.random_bool(0.5) { rng.random_range(0.05..0.5) } else { 0.0 };
        let make = |rng: &mut ChaCha8Rng| {
            if reversible {
                generate::random_reversible(d, density, hold, rng)
            } else {
                generate::random_irreducible(d, density, hold, rng)
            }
        };
        let p = make(&mut rng);
        let pbar = make(&mut rng);
        let dist = chain_distance(&p, &pbar)?;

        if dist > 0.0 && dist < 1.0 {
            let a = dist * dist / (2.0 * std::f64::consts::SQRT_2);
            let dl = chain_distance(&chain::lazy_version(&p, a)?, &chain::lazy_version(&pbar, a)?)?;
            lazy.record(dl - dist / 2.0 + SLACK);
        }

        let dr = chain_distance(&chain::time_reversal(&p)?, &chain::time_reversal(&pbar)?)?;
        reversal.record(EQUALITY_TOL - (dr - dist).abs());

        if reversible {
            let pi = chain::stationary_distribution(&p)?;
            let pibar = chain::stationary_distribution(&pbar)?;
            let r = metrics::ratio_distance(&pi, &pibar)?;
            if r < 1.0 - 1e-6 {
                let eps = r + 1e-6;
                let a: f64 = rng.random();
                let mix = chain::convex_combination(&p, &pbar, a)?;
                let c = 2.0 * ((1.0 - a) / (1.0 - eps)).sqrt();
                let bound = 1.0 - a.sqrt() - c + c * dist;
                mixture.record(chain_distance(&p, &mix)? - bound + SLACK);
            }
        }

        let k = rng.random_range(1..=8u64);
        let dk = chain_distance(&chain::matrix_power(&p, k)?, &chain::matrix_power(&pbar, k)?)?;
        powers.record(1.0 - (1.0 - dist).powi(k as i32) - dk + SLACK);

        if hold > 0.0 {
            let pi = chain::stationary_distribution(&p)?;
            let pibar = chain::stationary_distribution(&pbar)?;
            let h = metrics::hellinger_sq(pi.as_slice(), pibar.as_slice())?;
            let dl = chain_distance(&chain::matrix_power(&p, LIMIT_POWER)?, &chain::matrix_power(&pbar, LIMIT_POWER)?)?;
            limit.record(LIMIT_TOL - (dl - h).abs());
        }

        let dd = chain_distance(
            &chain::multiplicative_reversibilization(&p)?,
            &chain::multiplicative_reversibilization(&pbar)?,
        )?;
        dagger.record(2.0 * dist - dd + SLACK);
    }
    let mut family = Vec::new();
    for a in FAMILY_POINTS {
        let (p, pbar) = generate::two_state_family(a);
        let pi = chain::stationary_distribution(&p)?;
        let pibar = chain::stationary_distribution(&pbar)?;
        family.push(FamilyPoint {
            a,
            distance: chain_distance(&p, &pbar)?,
            hellinger_sq: metrics::hellinger_sq(pi.as_slice(), pibar.as_slice())?,
        });
    }
    let mut fam = PropertyCheck::new("two_state_family_separates");
    for w in family.windows(2) {
        fam.record(w[0].distance - w[1].distance);
    }
    let last = family.last().expect("family points");
    fam.record(last.hellinger_sq - 0.25);
    fam.record(0.05 - last.distance);
    Ok(PropertyReport {
        seed,
        pairs,
        checks: vec![lazy, reversal, mixture, powers, limit, dagger, fam],
        family,
    })
}
