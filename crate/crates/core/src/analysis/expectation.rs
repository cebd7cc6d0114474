//! Expected squared errors: the closed form for the diagonal model with
//! pure relaxation, an enumeration oracle for it, and Monte Carlo estimates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{DiagonalModel, Distribution, DistributionSchedule};
use crate::solver::{squared_error_path, DeterministicOrder, Relaxation, SelectionRule};
use crate::system::SchwarzSystem;

pub const BRUTEFORCE_MAX_SUPPORT: usize = 4;
pub const BRUTEFORCE_MAX_STEPS: usize = 8;

/// Trials per parallel work unit. Fixed so the merge order, and hence the
/// floating-point result, does not depend on the thread count.
const TRIAL_CHUNK: usize = 64;

/// Per-`m` sample statistics of `ε_m^2` over `trials` runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationEstimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: usize,
}

/// `Σ_i c_i^2 (1 - π_i)^m`.
pub fn exact_expected_error(model: &DiagonalModel, pi: &Distribution, m: usize) -> f64 {
    model
        .entries()
        .map(|(i, c)| c * c * (1.0 - pi.prob(i)).powi(m as i32))
        .sum()
}

/// `E(ε_m^2)` by enumerating every index sequence of length `m` over the
/// support of `π` and running the pure-relaxation iteration along it.
pub fn bruteforce_expected_error(model: &DiagonalModel, pi: &Distribution, m: usize) -> Result<f64> {
    let len = pi
        .support_len()
        .ok_or_else(|| Error::EnumerationTooLarge("distribution has infinite support".into()))?;
    let atoms: Vec<(usize, f64)> = (1..=len).map(|i| (i, pi.prob(i))).filter(|&(_, p)| p > 0.0).collect();
    if atoms.len() > BRUTEFORCE_MAX_SUPPORT {
        return Err(Error::EnumerationTooLarge(format!(
            "support of size {} exceeds {BRUTEFORCE_MAX_SUPPORT}",
            atoms.len()
        )));
    }
    if m > BRUTEFORCE_MAX_STEPS {
        return Err(Error::EnumerationTooLarge(format!("m = {m} exceeds {BRUTEFORCE_MAX_STEPS}")));
    }
    let k = atoms.len();
    let total = k.pow(m as u32);
    let mut acc = 0.0;
    let mut digits = vec![0usize; m];
    for _ in 0..total {
        let seq: Vec<usize> = digits.iter().map(|&d| atoms[d].0).collect();
        let weight: f64 = digits.iter().map(|&d| atoms[d].1).product();
        let rule = SelectionRule::Deterministic(DeterministicOrder::Sequence(seq));
        let path = squared_error_path(model, &rule, Relaxation::Pure, m, 0, 0)?;
        acc += weight * path[m];
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Self { n: 0.0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, xs: &[f64]) {
        self.n += 1.0;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(xs) {
            let d = x - *mean;
            *mean += d / self.n;
            *m2 += d * (x - *mean);
        }
    }

    // Chan et al. pairwise combination
    fn merge(mut self, other: &Welford) -> Self {
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        for j in 0..self.mean.len() {
            let d = other.mean[j] - self.mean[j];
            self.mean[j] += d * other.n / n;
            self.m2[j] += other.m2[j] + d * d * self.n * other.n / n;
        }
        self.n = n;
        self
    }
}

/// Sample mean and standard error of `ε_m^2`, `m = 0..=steps`, over
/// `trials` runs; trial `k` draws from the random stream `(master_seed, k)`.
pub fn mc_expected_error<S: SchwarzSystem + ?Sized>(
    system: &S,
    rule: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    trials: usize,
    master_seed: u64,
) -> Result<ExpectationEstimate> {
    mc_reduce(system, rule, relaxation, steps, trials, master_seed, |_, _| Ok(()))
}

/// As [`mc_expected_error`], calling `inspect(trial, squared_errors)` on every path.
pub fn mc_reduce<S, F>(
    system: &S,
    rule: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    trials: usize,
    master_seed: u64,
    inspect: F,
) -> Result<ExpectationEstimate>
where
    S: SchwarzSystem + ?Sized,
    F: Fn(u64, &[f64]) -> Result<()> + Sync,
{
    if trials < 2 {
        return Err(Error::param("trials", format!("need at least 2, got {trials}")));
    }
    let chunks: Vec<(usize, usize)> = (0..trials)
        .step_by(TRIAL_CHUNK)
        .map(|start| (start, (start + TRIAL_CHUNK).min(trials)))
        .collect();
    let partial: Vec<Welford> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut w = Welford::new(steps + 1);
            for k in start..end {
                let path = squared_error_path(system, rule, relaxation, steps, master_seed, k as u64)?;
                inspect(k as u64, &path)?;
                w.push(&path);
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;
    let total = partial.iter().fold(Welford::new(steps + 1), |acc, w| acc.merge(w));
    let k = trials as f64;
    let stderr = total.m2.iter().map(|m2| (m2.max(0.0) / (k - 1.0)).sqrt() / k.sqrt()).collect();
    Ok(ExpectationEstimate { mean: total.mean, stderr, trials })
}

/// `Σ_i π_i^2 (1 - π_i)^m`.
pub fn pcons_sum(pi: &Distribution, m: usize) -> f64 {
    crate::models::squared_mass_decay(pi, m)
}

/// `max_{t in [0,1]} t^2 (1-t)^m (m+1)^2`, attained at `t = 2/(m+2)`.
pub fn pcons_constant(m: usize) -> f64 {
    let t = 2.0 / (m as f64 + 2.0);
    t * t * (1.0 - t).powi(m as i32) * (m as f64 + 1.0).powi(2)
}

/// ‖π^{(m)} - π‖_1 measured directly on the materialized `π^{(m)}`, next to the budget `D (m+2)^{-1/2}`.
pub fn truncation_error(schedule: &DistributionSchedule, m: usize) -> Result<(f64, f64)> {
    let DistributionSchedule::Truncated { base, .. } = schedule else {
        return Ok((0.0, 0.0));
    };
    let budget = schedule.budget_at(m).expect("truncated");
    let pm = schedule.distribution_at(m)?;
    let n = pm.support_len().expect("explicit");
    let head: f64 = (1..=n).map(|i| (pm.prob(i) - base.prob(i)).abs()).sum();
    Ok((head + base.tail_mass(n), budget))
}
