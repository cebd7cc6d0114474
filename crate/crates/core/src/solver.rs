//! The multiplicative Schwarz iteration
//!
//! ```text
//! r_i    = T_i (u* - u^{(m)})           (local solve, uses only b, A, u^{(m)})
//! u^{(m+1)} = α_m u^{(m)} + ω_m R_i r_i
//! ```
//!
//! with the index `i = i_m` chosen by a deterministic, greedy or random
//! rule, and `(α_m, ω_m)` by one of the [`Relaxation`] variants.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::models::distribution::DistributionSchedule;
use crate::rng::{self, SchwarzRng};
use crate::splitting::BlockResidual;
use crate::system::{SchwarzSystem, StepGeometry};

/// Finite candidate sets `I_m` for greedy selection.
#[derive(Debug, Clone, PartialEq)]
pub enum PoolPolicy {
    /// `I_m = {1, ..., N}`.
    FixedFinite(usize),
    /// `I_m = {1, ..., initial + growth * m}`.
    GrowingNested { initial: usize, growth: usize },
    /// Diagonal model only: `supp(u*) ∪ supp(u^{(m)})`.
    SupportUnion,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeterministicOrder {
    /// `1, 2, ..., N, 1, 2, ...`; `None` uses the component count.
    Cyclic { period: Option<usize> },
    /// A user sequence, repeated once exhausted.
    Sequence(Vec<usize>),
    /// `1; 1, 2; 1, 2, 3; ...`
    Expanding,
}

impl DeterministicOrder {
    fn index_at(&self, m: usize, count: Option<usize>) -> Result<usize> {
        match self {
            DeterministicOrder::Cyclic { period } => {
                let n = period.or(count).ok_or_else(|| {
                    Error::Unsupported("cyclic order on a countable splitting needs an explicit period".into())
                })?;
                if n == 0 {
                    return Err(Error::param("period", "must be positive"));
                }
                Ok(m % n + 1)
            }
            DeterministicOrder::Sequence(seq) => {
                if seq.is_empty() {
                    return Err(Error::param("sequence", "must be nonempty"));
                }
                Ok(seq[m % seq.len()])
            }
            DeterministicOrder::Expanding => {
                // round k (1-based) occupies positions k(k-1)/2 .. k(k+1)/2 - 1
                let mut k = ((((8 * m + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
                while k * (k + 1) / 2 > m {
                    k -= 1;
                }
                while (k + 1) * (k + 2) / 2 <= m {
                    k += 1;
                }
                Ok(m - k * (k + 1) / 2 + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRule {
    Deterministic(DeterministicOrder),
    /// `a_{i_m}(r, r) >= β^2 max_{i in I_m} a_i(r_i, r_i)`.
    Greedy { beta: f64, pool: PoolPolicy },
    Random(DistributionSchedule),
}

impl SelectionRule {
    pub fn greedy(beta: f64, pool: PoolPolicy) -> Result<Self> {
        check_beta(beta)?;
        Ok(SelectionRule::Greedy { beta, pool })
    }

    pub fn describe(&self) -> String {
        match self {
            SelectionRule::Deterministic(o) => format!("deterministic({o:?})"),
            SelectionRule::Greedy { beta, pool } => format!("greedy(beta={beta}, pool={pool:?})"),
            SelectionRule::Random(s) => format!("random({})", s.describe()),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, SelectionRule::Random(_))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param("beta", format!("must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relaxation {
    /// `α_m = 1 - (m+2)^{-1}`, `ω_m` optimal.
    Gawr,
    /// `α_m = 1`, `ω_m` optimal.
    Pure,
    /// Joint minimization over `α >= 0` and `ω`.
    TwoParam,
}

impl Relaxation {
    pub fn name(&self) -> &'static str {
        match self {
            Relaxation::Gawr => "gawr",
            Relaxation::Pure => "pure",
            Relaxation::TwoParam => "two_param",
        }
    }
}

/// `α_m = 1 - (m+2)^{-1}`.
pub fn gawr_alpha(m: usize) -> f64 {
    1.0 - 1.0 / (m as f64 + 2.0)
}

fn is_zero_direction(g: &StepGeometry, local_norm: f64, zero_threshold: f64) -> bool {
    local_norm <= zero_threshold || g.direction_energy <= 0.0
}

/// Minimizer over `ω` of `‖u* - α u - ω R_i r_i‖_a`:
/// `ω = (α a_i(r, r) + (1 - α) F(R r)) / ‖R r‖_a^2`, and 0 on a zero direction.
pub fn omega_optimal(g: &StepGeometry, local_norm: f64, alpha: f64, zero_threshold: f64) -> f64 {
    if is_zero_direction(g, local_norm, zero_threshold) {
        return 0.0;
    }
    (alpha * g.local_energy + (1.0 - alpha) * g.direction_load) / g.direction_energy
}

/// Minimizer of `‖u* - α u - ω d‖_a` over `α >= 0` and `ω`, with the
/// GAWR `α` as fallback for a degenerate Gram matrix.
pub fn two_param_update(g: &StepGeometry, local_norm: f64, m: usize, zero_threshold: f64) -> (f64, f64) {
    let fallback = || {
        let alpha = gawr_alpha(m);
        (alpha, omega_optimal(g, local_norm, alpha, zero_threshold))
    };
    if is_zero_direction(g, local_norm, zero_threshold) || g.state_energy <= 0.0 {
        return fallback();
    }
    let (uu, ud, dd) = (g.state_energy, g.cross_energy, g.direction_energy);
    let det = uu * dd - ud * ud;
    if det <= 1e-12 * uu * dd {
        return fallback();
    }
    // normal equations; a(u*, u) = F(u), a(u*, d) = F(d)
    let (fu, fd) = (g.state_load, g.direction_load);
    let alpha = (fu * dd - ud * fd) / det;
    let omega = (uu * fd - ud * fu) / det;
    if alpha < 0.0 {
        return (0.0, fd / dd);
    }
    (alpha, omega)
}

/// Greedy pick: the smallest index in the pool whose local energy reaches
/// `β^2` times the pool maximum.
pub fn select_greedy<S: SchwarzSystem + ?Sized>(
    system: &S,
    state: &S::State,
    beta: f64,
    pool: &PoolPolicy,
    step: usize,
) -> Result<BlockResidual> {
    check_beta(beta)?;
    let indices = system.greedy_pool(state, pool, step)?;
    if indices.is_empty() {
        return Err(Error::EmptyPool { step });
    }
    let mut residuals = system.local_solves(state, &indices)?;
    let max = residuals.iter().map(|r| r.local_norm * r.local_norm).fold(0.0, f64::max);
    let threshold = beta * beta * max;
    let pos = residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| r.local_norm * r.local_norm >= threshold)
        .min_by_key(|(_, r)| r.index)
        .map(|(p, _)| p)
        .expect("the maximizer passes its own threshold");
    Ok(residuals.swap_remove(pos))
}

pub fn select_random(schedule: &DistributionSchedule, m: usize, rng: &mut SchwarzRng) -> Result<usize> {
    schedule.sample(m, rng)
}

/// Record at `m`: the step that produced `u^{(m)}` (none for `m = 0`) and `‖u* - u^{(m)}‖_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub m: usize,
    pub step: Option<StepTaken>,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTaken {
    pub index: usize,
    pub alpha: f64,
    pub omega: f64,
    pub local_norm: f64,
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub records: Vec<StepRecord>,
    /// Seconds since the start of the run, per record.
    pub elapsed: Vec<f64>,
    pub seed: u64,
    pub rule: String,
    pub relaxation: Relaxation,
    pub problem: String,
}

impl IterationTrace {
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error).collect()
    }

    pub fn squared_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error * r.error).collect()
    }
}

/// One iteration, as passed to a [`StepObserver`].
pub struct StepEvent<'a, S: SchwarzSystem + ?Sized> {
    pub m: usize,
    pub before: &'a S::State,
    pub after: &'a S::State,
    pub residual: &'a BlockResidual,
    pub geometry: StepGeometry,
    pub alpha: f64,
    pub omega: f64,
    pub error_before: f64,
    pub error_after: f64,
}

pub trait StepObserver<S: SchwarzSystem + ?Sized> {
    fn observe(&mut self, system: &S, event: &StepEvent<'_, S>) -> Result<()>;
}

impl<S: SchwarzSystem + ?Sized> StepObserver<S> for () {
    fn observe(&mut self, _: &S, _: &StepEvent<'_, S>) -> Result<()> {
        Ok(())
    }
}

/// Runs `steps` iterations from `u^{(0)} = 0` with the random stream `(seed, 0)`.
pub fn run<S: SchwarzSystem + ?Sized>(
    system: &S,
    selection: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    seed: u64,
) -> Result<IterationTrace> {
    run_observed(system, selection, relaxation, steps, seed, 0, &mut ())
}

pub fn run_observed<S: SchwarzSystem + ?Sized, O: StepObserver<S> + ?Sized>(
    system: &S,
    selection: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    seed: u64,
    stream_id: u64,
    observer: &mut O,
) -> Result<IterationTrace> {
    let start = Instant::now();
    let mut rng = rng::stream(seed, stream_id);
    let mut state = system.initial_state();
    let mut error = system.energy_error(&state);
    let mut records = Vec::with_capacity(steps + 1);
    let mut elapsed = Vec::with_capacity(steps + 1);
    records.push(StepRecord { m: 0, step: None, error });
    elapsed.push(start.elapsed().as_secs_f64());
    let zero = system.zero_threshold();
    let count = system.component_count();

    for m in 0..steps {
        let residual = match selection {
            SelectionRule::Deterministic(order) => {
                let i = order.index_at(m, count)?;
                system.local_solve(&state, i)?
            }
            SelectionRule::Greedy { beta, pool } => select_greedy(system, &state, *beta, pool, m)?,
            SelectionRule::Random(schedule) => {
                let i = select_random(schedule, m, &mut rng)?;
                if let Some(n) = count {
                    if i > n {
                        return Err(Error::IndexOutOfRange { index: i, count: n });
                    }
                }
                system.local_solve(&state, i)?
            }
        };
        let geometry = system.geometry(&state, &residual)?;
        let (alpha, omega) = match relaxation {
            Relaxation::Gawr => {
                let alpha = gawr_alpha(m);
                (alpha, omega_optimal(&geometry, residual.local_norm, alpha, zero))
            }
            Relaxation::Pure => (1.0, omega_optimal(&geometry, residual.local_norm, 1.0, zero)),
            Relaxation::TwoParam => two_param_update(&geometry, residual.local_norm, m, zero),
        };
        let before = state.clone();
        system.apply_update(&mut state, &residual, alpha, omega)?;
        let error_after = system.energy_error(&state);
        observer.observe(
            system,
            &StepEvent {
                m,
                before: &before,
                after: &state,
                residual: &residual,
                geometry,
                alpha,
                omega,
                error_before: error,
                error_after,
            },
        )?;
        error = error_after;
        records.push(StepRecord {
            m: m + 1,
            step: Some(StepTaken {
                index: residual.index,
                alpha,
                omega,
                local_norm: residual.local_norm,
            }),
            error,
        });
        elapsed.push(start.elapsed().as_secs_f64());
    }

    Ok(IterationTrace {
        records,
        elapsed,
        seed,
        rule: selection.describe(),
        relaxation,
        problem: system.describe(),
    })
}

/// Squared errors `ε_m^2`, `m = 0..=steps`, without building a trace.
pub fn squared_error_path<S: SchwarzSystem + ?Sized>(
    system: &S,
    selection: &SelectionRule,
    relaxation: Relaxation,
    steps: usize,
    seed: u64,
    stream_id: u64,
) -> Result<Vec<f64>> {
    struct Collect(Vec<f64>);
    impl<S: SchwarzSystem + ?Sized> StepObserver<S> for Collect {
        fn observe(&mut self, _: &S, e: &StepEvent<'_, S>) -> Result<()> {
            self.0.push(e.error_after * e.error_after);
            Ok(())
        }
    }
    let mut c = Collect(vec![system.solution_energy_norm().powi(2)]);
    run_observed(system, selection, relaxation, steps, seed, stream_id, &mut c)?;
    Ok(c.0)
}
