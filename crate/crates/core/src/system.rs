//! The interface the solver iterates against.

use nalgebra::DVector;

use crate::error::Result;
use crate::solver::PoolPolicy;
use crate::splitting::BlockResidual;

/// Scalars needed to pick the relaxation parameters of one step, where
/// `d = R_i r_i` is the step direction and `u = u^{(m)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGeometry {
    /// `a_i(r_i, r_i)`.
    pub local_energy: f64,
    /// `‖d‖_a^2`.
    pub direction_energy: f64,
    /// `F(d)`.
    pub direction_load: f64,
    /// `a(u, d)`.
    pub cross_energy: f64,
    /// `a(u, u)`.
    pub state_energy: f64,
    /// `F(u)`.
    pub state_load: f64,
}

/// A problem together with a space splitting.
///
/// Component indices are 1-based. Implementations never consult `u*` when
/// computing residuals or geometry; `u*` only enters [`Self::energy_error`].
pub trait SchwarzSystem: Sync {
    type State: Clone + Send;

    fn describe(&self) -> String;

    /// The starting iterate `u^{(0)} = 0`.
    fn initial_state(&self) -> Self::State;

    /// `None` for countable (lazily indexed) splittings.
    fn component_count(&self) -> Option<usize>;

    fn local_solve(&self, state: &Self::State, index: usize) -> Result<BlockResidual>;

    fn local_solves(&self, state: &Self::State, indices: &[usize]) -> Result<Vec<BlockResidual>> {
        indices.iter().map(|&i| self.local_solve(state, i)).collect()
    }

    fn geometry(&self, state: &Self::State, residual: &BlockResidual) -> Result<StepGeometry>;

    /// `u <- α u + ω R_i r_i`.
    fn apply_update(&self, state: &mut Self::State, residual: &BlockResidual, alpha: f64, omega: f64) -> Result<()>;

    /// `‖u* - u‖_a`.
    fn energy_error(&self, state: &Self::State) -> f64;

    /// `‖u*‖_a`.
    fn solution_energy_norm(&self) -> f64;

    /// Local norms at or below this value are treated as zero residuals.
    fn zero_threshold(&self) -> f64;

    fn greedy_pool(&self, state: &Self::State, policy: &PoolPolicy, step: usize) -> Result<Vec<usize>>;

    /// The iterate as a dense vector (for diagnostics).
    fn iterate(&self, state: &Self::State) -> DVector<f64>;
}
