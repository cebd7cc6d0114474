//! Per-step invariant checks, run as a [`StepObserver`] alongside the solver.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::DiagonalModel;
use crate::solver::{run, run_observed, PoolPolicy, Relaxation, SelectionRule, StepEvent, StepObserver};
use crate::system::SchwarzSystem;

pub const RECURSION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantTally {
    pub steps: usize,
    pub omega_violations: usize,
    pub recursion_violations: usize,
    pub greedy_violations: usize,
    /// Smallest `α ε_m + |1-α| ‖u*‖ - ε_{m+1}` seen.
    pub worst_recursion_slack: f64,
    pub first_failure: Option<String>,
}

impl InvariantTally {
    pub fn passed(&self) -> bool {
        self.omega_violations == 0 && self.recursion_violations == 0 && self.greedy_violations == 0
    }

    fn fail(&mut self, msg: String) {
        if self.first_failure.is_none() {
            self.first_failure = Some(msg);
        }
    }
}

/// Checks on every step:
/// the realized error is no larger than at `ω ± δ` (three-point test),
/// `ε_{m+1} <= α ε_m + |1-α| ‖u*‖ + 1e-9`, and for greedy rules that the
/// pick reaches `β^2` times the maximal local energy over the pool.
#[derive(Debug, Clone)]
pub struct InvariantObserver {
    greedy: Option<(f64, PoolPolicy)>,
    pub tally: InvariantTally,
}

impl InvariantObserver {
    pub fn new(rule: &SelectionRule) -> Self {
        let greedy = match rule {
            SelectionRule::Greedy { beta, pool } => Some((*beta, pool.clone())),
            _ => None,
        };
        Self { greedy, tally: InvariantTally { worst_recursion_slack: f64::INFINITY, ..Default::default() } }
    }
}

impl<S: SchwarzSystem + ?Sized> StepObserver<S> for InvariantObserver {
    fn observe(&mut self, system: &S, e: &StepEvent<'_, S>) -> Result<()> {
        let t = &mut self.tally;
        t.steps += 1;
        let scale = system.solution_energy_norm().max(f64::MIN_POSITIVE);

        let delta = 1e-3 * e.omega.abs().max(1.0);
        for w in [e.omega - delta, e.omega + delta] {
            let mut probe = e.before.clone();
            system.apply_update(&mut probe, e.residual, e.alpha, w)?;
            let other = system.energy_error(&probe);
            if e.error_after > other + 1e-12 * scale {
                t.omega_violations += 1;
                t.fail(format!("step {}: error {} at omega {} exceeds {} at {}", e.m, e.error_after, e.omega, other, w));
            }
        }

        let slack = e.alpha * e.error_before + (1.0 - e.alpha).abs() * system.solution_energy_norm() - e.error_after;
        t.worst_recursion_slack = t.worst_recursion_slack.min(slack);
        if slack < -RECURSION_TOL {
            t.recursion_violations += 1;
            t.fail(format!("step {}: one-sided recursion violated by {}", e.m, -slack));
        }

        if let Some((beta, pool)) = &self.greedy {
            let indices = system.greedy_pool(e.before, pool, e.m)?;
            let all = system.local_solves(e.before, &indices)?;
            let max = all.iter().map(|r| r.local_norm * r.local_norm).fold(0.0, f64::max);
            let picked = e.residual.local_norm * e.residual.local_norm;
            if picked < beta * beta * max * (1.0 - 1e-12) {
                t.greedy_violations += 1;
                t.fail(format!("step {}: greedy pick {} has energy {} below beta^2 * {}", e.m, e.residual.index, picked, max));
            }
        }
        Ok(())
    }
}

/// Runs with an [`InvariantObserver`] attached.
pub fn check_run<S: SchwarzSystem + ?Sized>(
    system: &S,
    rule: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    seed: u64,
) -> Result<InvariantTally> {
    let mut obs = InvariantObserver::new(rule);
    run_observed(system, rule, relaxation, steps, seed, 0, &mut obs)?;
    Ok(obs.tally)
}

/// Two runs from the same seed produce identical records.
pub fn check_determinism<S: SchwarzSystem + ?Sized>(
    system: &S,
    rule: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    seed: u64,
) -> Result<bool> {
    let a = run(system, rule, relaxation, steps, seed)?;
    let b = run(system, rule, relaxation, steps, seed)?;
    Ok(a.records == b.records)
}

/// Largest discrepancy between runs on the lazy model and on its dense
/// embedding of dimension `n`, over errors and iterates at every step.
/// Greedy pools on the support become `FixedFinite(n)` on the dense side.
pub fn lazy_dense_discrepancy(
    model: &DiagonalModel,
    n: usize,
    rule: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let dense = model.dense_embedding(n)?;
    let dense_rule = match rule {
        SelectionRule::Greedy { beta, pool: PoolPolicy::SupportUnion } => {
            SelectionRule::Greedy { beta: *beta, pool: PoolPolicy::FixedFinite(n) }
        }
        other => other.clone(),
    };

    struct Iterates<'a, F>(&'a F, Vec<DVector<f64>>);
    impl<S: SchwarzSystem + ?Sized, F: Fn(&S::State) -> DVector<f64>> StepObserver<S> for Iterates<'_, F> {
        fn observe(&mut self, _: &S, e: &StepEvent<'_, S>) -> Result<()> {
            self.1.push((self.0)(e.after));
            Ok(())
        }
    }
    let lazy_view = |s: &crate::models::DiagonalState| model.dense_iterate(s, n);
    let dense_view = |s: &crate::splitting::MatrixState| s.u.clone();
    let mut lazy = Iterates(&lazy_view, Vec::new());
    let mut full = Iterates(&dense_view, Vec::new());
    let ta = run_observed(model, rule, relaxation, steps, seed, 0, &mut lazy)?;
    let tb = run_observed(&dense, &dense_rule, relaxation, steps, seed, 0, &mut full)?;

    let mut worst: f64 = 0.0;
    for (a, b) in ta.records.iter().zip(&tb.records) {
        worst = worst.max((a.error - b.error).abs());
        if let (Some(sa), Some(sb)) = (a.step, b.step) {
            // picks among residuals at round-off level are arbitrary
            let noise = 1e3 * model.zero_threshold();
            if sa.local_norm.max(sb.local_norm) > noise && sa.index != sb.index {
                return Err(Error::Internal(format!(
                    "step {}: picks differ ({} vs {}, local norms {:e} vs {:e})",
                    a.m, sa.index, sb.index, sa.local_norm, sb.local_norm
                )));
            }
            worst = worst.max((sa.alpha - sb.alpha).abs()).max((sa.local_norm - sb.local_norm).abs());
        }
    }
    for (a, b) in lazy.1.iter().zip(&full.1) {
        worst = worst.max((a - b).amax());
    }
    Ok(worst)
}
