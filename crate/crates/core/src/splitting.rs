//! Problems, space splittings and local subproblem solves on `R^n`.
//!
//! A [`Problem`] is an SPD matrix `A` with right-hand side `b`; the energy
//! inner product is `a(u, v) = v^T A u`. A [`FiniteSplitting`] is a list of
//! components `(R_i, A_i)`: a prolongation `R_i: R^{d_i} -> R^n` and a local
//! SPD form `A_i`. Components are numbered from 1.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::solver::PoolPolicy;
use crate::system::{SchwarzSystem, StepGeometry};

const SYMMETRY_RTOL: f64 = 1e-12;
const EXACT_SOLVE_RTOL: f64 = 1e-10;
const RANK_RTOL: f64 = 1e-10;
/// Number of cached updates after which `A u` is recomputed from scratch.
pub const REFRESH_INTERVAL: usize = 1000;
/// Relative threshold below which a local residual counts as zero.
pub const ZERO_RESIDUAL_RTOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Problem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    exact: DVector<f64>,
    /// `A u*` evaluated by a matrix-vector product.
    a_exact: DVector<f64>,
    exact_energy_norm: f64,
}

impl Problem {
    /// Builds a problem and computes `u*` by a Cholesky solve.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_square_symmetric(&a)?;
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        let chol = Cholesky::new(a.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("global form A".into()))?;
        let exact = chol.solve(&b);
        Self::with_solution(a, b, exact)
    }

    /// Builds a problem from an analytically known solution `u*`.
    pub fn with_solution(a: DMatrix<f64>, b: DVector<f64>, exact: DVector<f64>) -> Result<Self> {
        check_square_symmetric(&a)?;
        let n = a.nrows();
        for len in [b.len(), exact.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        let chol = Cholesky::new(a.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("global form A".into()))?;
        let a_exact = &a * &exact;
        let exact_energy_norm = exact.dot(&a_exact).max(0.0).sqrt();
        // ‖u - A^{-1} b‖_a = (d^T A^{-1} d)^{1/2} with d = A u - b
        let defect = &a_exact - &b;
        let defect_energy = defect.dot(&chol.solve(&defect)).max(0.0).sqrt();
        let tolerance = EXACT_SOLVE_RTOL * exact_energy_norm;
        if defect_energy > tolerance {
            return Err(Error::InaccurateSolve {
                residual: defect_energy,
                tolerance,
            });
        }
        Ok(Self {
            a,
            b,
            exact,
            a_exact,
            exact_energy_norm,
        })
    }

    /// Dense row-major constructor used by config-driven builders.
    pub fn from_row_major(n: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: a.len(),
            });
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a),
            DVector::from_column_slice(b),
        )
    }

    pub fn dimension(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn exact_solution(&self) -> &DVector<f64> {
        &self.exact
    }

    /// `‖u*‖_a`.
    pub fn solution_energy_norm(&self) -> f64 {
        self.exact_energy_norm
    }

    /// `a(u, v) = v^T A u`.
    pub fn energy_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        Ok(v.dot(&(&self.a * u)))
    }

    /// The functional `F(v) = v^T b`.
    pub fn load(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_len(v.len())?;
        Ok(v.dot(&self.b))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: len,
            });
        }
        Ok(())
    }
}

fn check_square_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Err(Error::param("dimension", "must be positive"));
    }
    let scale = a.amax();
    let asymmetry = (a - a.transpose()).amax();
    if asymmetry > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// `‖v‖_a = sqrt(v^T A v)`.
pub fn energy_norm(problem: &Problem, v: &DVector<f64>) -> Result<f64> {
    Ok(problem.energy_inner(v, v)?.max(0.0).sqrt())
}

/// The prolongation `R_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Restriction {
    /// Injection of local coordinates into the listed (0-based) global coordinates.
    Injection(Vec<usize>),
    /// A general `n x d` matrix.
    Dense(DMatrix<f64>),
}

impl Restriction {
    pub fn local_dimension(&self) -> usize {
        match self {
            Restriction::Injection(idx) => idx.len(),
            Restriction::Dense(m) => m.ncols(),
        }
    }

    /// `R^T g`.
    pub fn restrict(&self, g: &DVector<f64>) -> DVector<f64> {
        match self {
            Restriction::Injection(idx) => DVector::from_iterator(idx.len(), idx.iter().map(|&j| g[j])),
            Restriction::Dense(m) => m.tr_mul(g),
        }
    }

    /// `out += scale * R r`.
    pub fn prolongate_add(&self, scale: f64, r: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            Restriction::Injection(idx) => {
                for (k, &j) in idx.iter().enumerate() {
                    out[j] += scale * r[k];
                }
            }
            Restriction::Dense(m) => out.gemv(scale, m, r, 1.0),
        }
    }

    pub fn prolongate(&self, r: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        self.prolongate_add(1.0, r, &mut out);
        out
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        match self {
            Restriction::Injection(idx) => {
                let mut m = DMatrix::zeros(n, idx.len());
                for (k, &j) in idx.iter().enumerate() {
                    m[(j, k)] = 1.0;
                }
                m
            }
            Restriction::Dense(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplittingComponent {
    index: usize,
    restriction: Restriction,
    local_form: DMatrix<f64>,
    local_factor: Cholesky<f64, Dyn>,
}

impl SplittingComponent {
    /// `index` is 1-based; `n` is the global dimension.
    pub fn new(index: usize, restriction: Restriction, local_form: DMatrix<f64>, n: usize) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidComponent { index, reason };
        let d = restriction.local_dimension();
        if d == 0 {
            return Err(invalid("local dimension must be at least 1".into()));
        }
        match &restriction {
            Restriction::Injection(idx) => {
                if let Some(&j) = idx.iter().find(|&&j| j >= n) {
                    return Err(invalid(format!("injection target {j} outside 0..{n}")));
                }
            }
            Restriction::Dense(m) => {
                if m.nrows() != n {
                    return Err(invalid(format!("R has {} rows, expected {n}", m.nrows())));
                }
                if m.iter().all(|&x| x == 0.0) {
                    return Err(invalid("R has trivial range".into()));
                }
            }
        }
        if local_form.nrows() != d || local_form.ncols() != d {
            return Err(invalid(format!(
                "local form is {}x{}, expected {d}x{d}",
                local_form.nrows(),
                local_form.ncols()
            )));
        }
        check_square_symmetric(&local_form).map_err(|e| invalid(e.to_string()))?;
        let local_factor = Cholesky::new(local_form.clone())
            .ok_or_else(|| invalid("local form is not positive definite".into()))?;
        Ok(Self {
            index,
            restriction,
            local_form,
            local_factor,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn restriction(&self) -> &Restriction {
        &self.restriction
    }

    pub fn local_form(&self) -> &DMatrix<f64> {
        &self.local_form
    }

    pub fn local_dimension(&self) -> usize {
        self.local_form.nrows()
    }

    /// `‖v‖_{a_i}`.
    pub fn local_norm(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.local_form * v)).max(0.0).sqrt()
    }

    fn solve_local(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.local_factor.solve(rhs)
    }

    fn rescaled(&self, factor: f64) -> Self {
        let local_form = &self.local_form * factor;
        let local_factor = Cholesky::new(local_form.clone()).expect("positive rescaling keeps SPD");
        Self {
            index: self.index,
            restriction: self.restriction.clone(),
            local_form,
            local_factor,
        }
    }
}

/// `T_i e` for one component.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResidual {
    pub index: usize,
    pub values: DVector<f64>,
    /// `sqrt(a_i(r_i, r_i))`.
    pub local_norm: f64,
}

impl BlockResidual {
    pub fn zero(index: usize, d: usize) -> Self {
        Self {
            index,
            values: DVector::zeros(d),
            local_norm: 0.0,
        }
    }
}

/// Solves `A_i r_i = R_i^T g` where `g = b - A u` is the current global residual.
pub fn local_solve(problem: &Problem, component: &SplittingComponent, g: &DVector<f64>) -> Result<BlockResidual> {
    problem.check_len(g.len())?;
    let rhs = component.restriction.restrict(g);
    Ok(local_solve_restricted(component, &rhs))
}

fn local_solve_restricted(component: &SplittingComponent, rhs: &DVector<f64>) -> BlockResidual {
    if rhs.iter().all(|&x| x == 0.0) {
        return BlockResidual::zero(component.index, component.local_dimension());
    }
    let values = component.solve_local(rhs);
    // a_i(r, r) = r . (R^T g) by the local equation
    let local_norm = component.local_norm(&values);
    BlockResidual {
        index: component.index,
        values,
        local_norm,
    }
}

/// An indexed finite family of components whose ranges span `R^n`.
#[derive(Debug, Clone)]
pub struct FiniteSplitting {
    dimension: usize,
    components: Vec<SplittingComponent>,
}

impl FiniteSplitting {
    pub fn new(dimension: usize, components: Vec<SplittingComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("components", "splitting has no components"));
        }
        for (k, c) in components.iter().enumerate() {
            if c.index != k + 1 {
                return Err(Error::InvalidComponent {
                    index: c.index,
                    reason: format!("expected index {}", k + 1),
                });
            }
            if let Restriction::Dense(m) = &c.restriction {
                if m.nrows() != dimension {
                    return Err(Error::DimensionMismatch {
                        expected: dimension,
                        found: m.nrows(),
                    });
                }
            }
        }
        let rank = spanned_rank(dimension, &components);
        if rank < dimension {
            return Err(Error::NotSpanning { rank, dimension });
        }
        Ok(Self {
            dimension,
            components,
        })
    }

    /// Convenience constructor: every block is an injection with exact local
    /// form `A_i = R_i^T A R_i`.
    pub fn from_blocks(problem: &Problem, blocks: &[Vec<usize>]) -> Result<Self> {
        let n = problem.dimension();
        let components = blocks
            .iter()
            .enumerate()
            .map(|(k, idx)| {
                let r = Restriction::Injection(idx.clone());
                let local = galerkin_form(problem, &r);
                SplittingComponent::new(k + 1, r, local, n)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, components)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[SplittingComponent] {
        &self.components
    }

    /// 1-based lookup.
    pub fn component(&self, index: usize) -> Result<&SplittingComponent> {
        if index == 0 || index > self.components.len() {
            return Err(Error::IndexOutOfRange {
                index,
                count: self.components.len(),
            });
        }
        Ok(&self.components[index - 1])
    }

    /// Rescales every `A_i` by `Λ_i^2` so that the uniform bound becomes 1.
    pub fn normalized(&self, problem: &Problem) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| Ok(c.rescaled(component_bound(problem, c)?.powi(2))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dimension: self.dimension,
            components,
        })
    }
}

/// `R^T A R`.
pub fn galerkin_form(problem: &Problem, restriction: &Restriction) -> DMatrix<f64> {
    match restriction {
        Restriction::Injection(idx) => {
            let a = problem.matrix();
            DMatrix::from_fn(idx.len(), idx.len(), |p, q| a[(idx[p], idx[q])])
        }
        Restriction::Dense(r) => r.tr_mul(&(problem.matrix() * r)),
    }
}

fn spanned_rank(n: usize, components: &[SplittingComponent]) -> usize {
    let all_injections = components
        .iter()
        .all(|c| matches!(c.restriction, Restriction::Injection(_)));
    if all_injections {
        let mut covered = vec![false; n];
        for c in components {
            if let Restriction::Injection(idx) = &c.restriction {
                for &j in idx {
                    covered[j] = true;
                }
            }
        }
        return covered.iter().filter(|&&x| x).count();
    }
    // rank [R_1 ... R_N] = rank sum_i R_i R_i^T
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for c in components {
        let r = c.restriction.to_dense(n);
        gram += &r * r.transpose();
    }
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.amax();
    eig.eigenvalues.iter().filter(|&&l| l > RANK_RTOL * top).count()
}

fn component_bound(problem: &Problem, component: &SplittingComponent) -> Result<f64> {
    let g = galerkin_form(problem, &component.restriction);
    let l = component.local_factor.l();
    let lower = l
        .solve_lower_triangular(&g)
        .ok_or_else(|| Error::Internal("singular local factor".into()))?;
    let sym = l
        .solve_lower_triangular(&lower.transpose())
        .ok_or_else(|| Error::Internal("singular local factor".into()))?;
    let sym = (&sym + sym.transpose()) * 0.5;
    let top = SymmetricEigen::new(sym).eigenvalues.max();
    Ok(top.max(0.0).sqrt())
}

/// Smallest `Λ` with `‖R_i v‖_a <= Λ ‖v‖_{a_i}` for every component.
pub fn uniform_bound(problem: &Problem, splitting: &FiniteSplitting) -> Result<f64> {
    splitting
        .components
        .iter()
        .map(|c| component_bound(problem, c))
        .try_fold(0.0f64, |acc, b| Ok(acc.max(b?)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConstants {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `λ_max / λ_min`, infinite for an unstable splitting.
    pub condition: f64,
    pub stable: bool,
}

/// Extreme eigenvalues of the additive Schwarz operator `P = Σ R_i A_i^{-1} R_i^T A`.
pub fn stability_constants(problem: &Problem, splitting: &FiniteSplitting) -> Result<StabilityConstants> {
    let n = problem.dimension();
    if splitting.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: splitting.dimension(),
        });
    }
    let mut additive = DMatrix::<f64>::zeros(n, n);
    for c in &splitting.components {
        let r = c.restriction.to_dense(n);
        let local_inv_rt = c.local_factor.solve(&r.transpose());
        additive += &r * local_inv_rt;
    }
    let l = Cholesky::new(problem.matrix().clone())
        .ok_or_else(|| Error::NotPositiveDefinite("global form A".into()))?
        .l();
    // L^T B L is similar to P = B L L^T and symmetric
    let sym = l.transpose() * additive * &l;
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let lambda_max = eig.max();
    let lambda_min = eig.min().max(0.0);
    let stable = lambda_min > RANK_RTOL * lambda_max;
    Ok(StabilityConstants {
        lambda_min,
        lambda_max,
        condition: if stable { lambda_max / lambda_min } else { f64::INFINITY },
        stable,
    })
}

#[derive(Debug, Clone)]
struct ComponentCache {
    /// `A R_i`.
    a_r: DMatrix<f64>,
    /// `R_i^T A R_i`.
    galerkin: DMatrix<f64>,
    /// `R_i^T b`.
    local_load: DVector<f64>,
}

/// A matrix problem with a finite splitting: the dense backend of the solver.
#[derive(Debug, Clone)]
pub struct MatrixSystem {
    problem: Problem,
    splitting: FiniteSplitting,
    caches: Vec<ComponentCache>,
    rhs_norm: f64,
    label: String,
}

/// Iterate `u^{(m)}` together with the cached product `w = A u^{(m)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixState {
    pub u: DVector<f64>,
    pub au: DVector<f64>,
    updates_since_refresh: usize,
}

impl MatrixSystem {
    pub fn new(problem: Problem, splitting: FiniteSplitting) -> Result<Self> {
        if splitting.dimension() != problem.dimension() {
            return Err(Error::DimensionMismatch {
                expected: problem.dimension(),
                found: splitting.dimension(),
            });
        }
        let n = problem.dimension();
        let caches = splitting
            .components
            .iter()
            .map(|c| {
                let r = c.restriction.to_dense(n);
                ComponentCache {
                    a_r: problem.matrix() * &r,
                    galerkin: galerkin_form(&problem, &c.restriction),
                    local_load: c.restriction.restrict(problem.rhs()),
                }
            })
            .collect();
        let rhs_norm = problem.rhs().norm();
        let label = format!("matrix(n={}, components={})", n, splitting.len());
        Ok(Self {
            problem,
            splitting,
            caches,
            rhs_norm,
            label,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn splitting(&self) -> &FiniteSplitting {
        &self.splitting
    }

    pub fn uniform_bound(&self) -> Result<f64> {
        uniform_bound(&self.problem, &self.splitting)
    }

    pub fn stability_constants(&self) -> Result<StabilityConstants> {
        stability_constants(&self.problem, &self.splitting)
    }

    /// A state at an arbitrary iterate `u`.
    pub fn state_at(&self, u: DVector<f64>) -> Result<MatrixState> {
        self.problem.check_len(u.len())?;
        let au = self.problem.matrix() * &u;
        Ok(MatrixState {
            u,
            au,
            updates_since_refresh: 0,
        })
    }

    /// `b - A u` from the cache.
    pub fn global_residual(&self, state: &MatrixState) -> DVector<f64> {
        self.problem.rhs() - &state.au
    }

    fn cache(&self, index: usize) -> Result<&ComponentCache> {
        self.splitting.component(index)?;
        Ok(&self.caches[index - 1])
    }

    /// One explicit representation `u* = Σ R_i v_i` (minimum Euclidean norm
    /// in the stacked coefficients), returned as local pieces.
    pub fn explicit_representation(&self) -> Result<Vec<DVector<f64>>> {
        let n = self.problem.dimension();
        let mut gram = DMatrix::<f64>::zeros(n, n);
        let dense: Vec<DMatrix<f64>> = self
            .splitting
            .components
            .iter()
            .map(|c| c.restriction.to_dense(n))
            .collect();
        for r in &dense {
            gram += r * r.transpose();
        }
        let y = Cholesky::new(gram)
            .ok_or_else(|| Error::Internal("stacked restriction Gram matrix is singular".into()))?
            .solve(self.problem.exact_solution());
        Ok(dense.iter().map(|r| r.tr_mul(&y)).collect())
    }

    /// Upper estimates of `‖u*‖_{A_1}` and, given `π`, of `‖u*‖_{A_∞^π}`,
    /// from [`Self::explicit_representation`].
    pub fn representation_norms(&self) -> Result<Vec<f64>> {
        Ok(self
            .explicit_representation()?
            .iter()
            .zip(&self.splitting.components)
            .map(|(v, c)| c.local_norm(v))
            .collect())
    }
}

impl SchwarzSystem for MatrixSystem {
    type State = MatrixState;

    fn describe(&self) -> String {
        self.label.clone()
    }

    fn initial_state(&self) -> MatrixState {
        let n = self.problem.dimension();
        MatrixState {
            u: DVector::zeros(n),
            au: DVector::zeros(n),
            updates_since_refresh: 0,
        }
    }

    fn component_count(&self) -> Option<usize> {
        Some(self.splitting.len())
    }

    fn local_solve(&self, state: &MatrixState, index: usize) -> Result<BlockResidual> {
        let component = self.splitting.component(index)?;
        let cache = &self.caches[index - 1];
        let rhs = &cache.local_load - component.restriction.restrict(&state.au);
        Ok(local_solve_restricted(component, &rhs))
    }

    fn local_solves(&self, state: &MatrixState, indices: &[usize]) -> Result<Vec<BlockResidual>> {
        let g = self.global_residual(state);
        indices
            .iter()
            .map(|&i| {
                let c = self.splitting.component(i)?;
                Ok(local_solve_restricted(c, &c.restriction.restrict(&g)))
            })
            .collect()
    }

    fn geometry(&self, state: &MatrixState, residual: &BlockResidual) -> Result<StepGeometry> {
        let c = self.splitting.component(residual.index)?;
        let cache = self.cache(residual.index)?;
        let r = &residual.values;
        Ok(StepGeometry {
            local_energy: residual.local_norm * residual.local_norm,
            direction_energy: r.dot(&(&cache.galerkin * r)).max(0.0),
            direction_load: cache.local_load.dot(r),
            cross_energy: c.restriction.restrict(&state.au).dot(r),
            state_energy: state.u.dot(&state.au),
            state_load: state.u.dot(self.problem.rhs()),
        })
    }

    fn apply_update(&self, state: &mut MatrixState, residual: &BlockResidual, alpha: f64, omega: f64) -> Result<()> {
        let c = self.splitting.component(residual.index)?;
        let cache = &self.caches[residual.index - 1];
        if alpha != 1.0 {
            state.u *= alpha;
            state.au *= alpha;
        }
        if omega != 0.0 {
            c.restriction.prolongate_add(omega, &residual.values, &mut state.u);
            state.au.gemv(omega, &cache.a_r, &residual.values, 1.0);
        }
        state.updates_since_refresh += 1;
        if state.updates_since_refresh >= REFRESH_INTERVAL {
            state.au = self.problem.matrix() * &state.u;
            state.updates_since_refresh = 0;
        }
        Ok(())
    }

    fn energy_error(&self, state: &MatrixState) -> f64 {
        // A e = A u* - A u, both sides cached
        let e = self.problem.exact_solution() - &state.u;
        let ae = &self.problem.a_exact - &state.au;
        e.dot(&ae).max(0.0).sqrt()
    }

    fn solution_energy_norm(&self) -> f64 {
        self.problem.solution_energy_norm()
    }

    fn zero_threshold(&self) -> f64 {
        ZERO_RESIDUAL_RTOL * self.rhs_norm
    }

    fn greedy_pool(&self, _state: &MatrixState, policy: &PoolPolicy, step: usize) -> Result<Vec<usize>> {
        let count = self.splitting.len();
        let size = match *policy {
            PoolPolicy::FixedFinite(n) => {
                if n > count {
                    return Err(Error::IndexOutOfRange { index: n, count });
                }
                n
            }
            PoolPolicy::GrowingNested { initial, growth } => {
                initial.saturating_add(growth.saturating_mul(step)).min(count)
            }
            PoolPolicy::SupportUnion => {
                return Err(Error::Unsupported(
                    "support-union pools exist only for the diagonal model".into(),
                ))
            }
        };
        if size == 0 {
            return Err(Error::EmptyPool { step });
        }
        Ok((1..=size).collect())
    }

    fn iterate(&self, state: &MatrixState) -> DVector<f64> {
        state.u.clone()
    }
}
