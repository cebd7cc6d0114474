//! The one-dimensional splitting induced by an orthonormal system.
//!
//! `u* = Σ c_i ψ_i` with finitely many nonzero `c_i`; `a(·,·)` is the
//! Euclidean inner product and component `i` is the line through `ψ_i`
//! with `A_i = (1)`. Indices run over all of `1, 2, ...`; the iterate is
//! stored only on the support of `c`, which it never leaves.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::distribution::Distribution;
use crate::solver::PoolPolicy;
use crate::splitting::{BlockResidual, FiniteSplitting, MatrixSystem, Problem, Restriction, SplittingComponent, ZERO_RESIDUAL_RTOL};
use crate::system::{SchwarzSystem, StepGeometry};

#[derive(Debug, Clone)]
pub struct DiagonalModel {
    indices: Vec<usize>,
    coefficients: Vec<f64>,
    position: HashMap<usize, usize>,
    norm: f64,
}

/// `u^{(m)}` on the support of `c`, aligned with [`DiagonalModel::support`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState {
    pub values: Vec<f64>,
}

impl DiagonalModel {
    /// From `(index, c_index)` pairs; indices are 1-based, zero coefficients are dropped.
    pub fn new(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (i, c) in pairs {
            if i == 0 {
                return Err(Error::param("coefficients", "indices start at 1"));
            }
            if !c.is_finite() {
                return Err(Error::param("coefficients", format!("c_{i} = {c} is not finite")));
            }
            entries.push((i, c));
        }
        entries.sort_by_key(|&(i, _)| i);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::param("coefficients", format!("index {} listed twice", w[0].0)));
        }
        entries.retain(|&(_, c)| c != 0.0);
        let indices: Vec<usize> = entries.iter().map(|e| e.0).collect();
        let coefficients: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let position = indices.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let norm = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(Self {
            indices,
            coefficients,
            position,
            norm,
        })
    }

    /// `c_1, c_2, ...` listed densely.
    pub fn from_dense(c: &[f64]) -> Result<Self> {
        Self::new(c.iter().enumerate().map(|(k, &v)| (k + 1, v)))
    }

    pub fn support(&self) -> &[usize] {
        &self.indices
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, i: usize) -> f64 {
        self.position.get(&i).map_or(0.0, |&p| self.coefficients[p])
    }

    /// `‖u*‖_a = (Σ c_i^2)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn max_index(&self) -> usize {
        self.indices.last().copied().unwrap_or(0)
    }

    /// `(index, c_index)` over the support.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.coefficients.iter().copied())
    }

    pub fn a1_norm(&self) -> f64 {
        a1_norm_diagonal(self)
    }

    pub fn ainfty_pi_norm(&self, pi: &Distribution) -> f64 {
        ainfty_pi_norm_diagonal(self, pi)
    }

    /// The same model as a dense matrix system on `R^n`, `n >= max_index()`.
    pub fn dense_embedding(&self, n: usize) -> Result<MatrixSystem> {
        if n < self.max_index() || n == 0 {
            return Err(Error::param("n", format!("{n} does not cover index {}", self.max_index())));
        }
        let b = DVector::from_fn(n, |j, _| self.coefficient(j + 1));
        let problem = Problem::with_solution(DMatrix::identity(n, n), b.clone(), b)?;
        let components = (0..n)
            .map(|j| SplittingComponent::new(j + 1, Restriction::Injection(vec![j]), DMatrix::identity(1, 1), n))
            .collect::<Result<Vec<_>>>()?;
        let splitting = FiniteSplitting::new(n, components)?;
        Ok(MatrixSystem::new(problem, splitting)?.with_label(format!("diagonal-dense(n={n})")))
    }

    /// Expands a state to `u_1..u_n`.
    pub fn dense_iterate(&self, state: &DiagonalState, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (&i, &v) in self.indices.iter().zip(&state.values) {
            if i <= n {
                out[i - 1] = v;
            }
        }
        out
    }

    /// Coefficient of `u` at index `i`.
    pub fn state_value(&self, state: &DiagonalState, i: usize) -> f64 {
        self.position.get(&i).map_or(0.0, |&p| state.values[p])
    }

    /// State with `u = Σ values_i ψ_i`; entries off the support of `c` are rejected.
    pub fn state_from(&self, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<DiagonalState> {
        let mut values = vec![0.0; self.indices.len()];
        for (i, v) in pairs {
            match self.position.get(&i) {
                Some(&p) => values[p] = v,
                None if v == 0.0 => {}
                None => {
                    return Err(Error::param("state", format!("index {i} lies outside the support of c")));
                }
            }
        }
        Ok(DiagonalState { values })
    }
}

/// `‖u‖_{A_1} = Σ |c_i|`.
pub fn a1_norm_diagonal(model: &DiagonalModel) -> f64 {
    model.coefficients.iter().map(|c| c.abs()).sum()
}

/// `‖u‖_{A_∞^π} = sup_i |c_i| / π_i`; infinite when `c_i != 0` where `π_i = 0`.
pub fn ainfty_pi_norm_diagonal(model: &DiagonalModel, pi: &Distribution) -> f64 {
    model
        .entries()
        .map(|(i, c)| {
            let p = pi.prob(i);
            if p > 0.0 {
                c.abs() / p
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

impl SchwarzSystem for DiagonalModel {
    type State = DiagonalState;

    fn describe(&self) -> String {
        format!("diagonal(support={}, max_index={})", self.indices.len(), self.max_index())
    }

    fn initial_state(&self) -> DiagonalState {
        DiagonalState {
            values: vec![0.0; self.indices.len()],
        }
    }

    fn component_count(&self) -> Option<usize> {
        None
    }

    fn local_solve(&self, state: &DiagonalState, index: usize) -> Result<BlockResidual> {
        if index == 0 {
            return Err(Error::IndexOutOfRange { index, count: usize::MAX });
        }
        let r = match self.position.get(&index) {
            Some(&p) => self.coefficients[p] - state.values[p],
            None => 0.0,
        };
        Ok(BlockResidual {
            index,
            values: DVector::from_element(1, r),
            local_norm: r.abs(),
        })
    }

    fn geometry(&self, state: &DiagonalState, residual: &BlockResidual) -> Result<StepGeometry> {
        let r = residual.values[0];
        let u_i = self.state_value(state, residual.index);
        let c_i = self.coefficient(residual.index);
        Ok(StepGeometry {
            local_energy: r * r,
            direction_energy: r * r,
            direction_load: c_i * r,
            cross_energy: u_i * r,
            state_energy: state.values.iter().map(|v| v * v).sum(),
            state_load: state.values.iter().zip(&self.coefficients).map(|(v, c)| v * c).sum(),
        })
    }

    fn apply_update(&self, state: &mut DiagonalState, residual: &BlockResidual, alpha: f64, omega: f64) -> Result<()> {
        if alpha != 1.0 {
            state.values.iter_mut().for_each(|v| *v *= alpha);
        }
        let r = residual.values[0];
        if omega != 0.0 && r != 0.0 {
            let p = self.position.get(&residual.index).ok_or_else(|| {
                Error::Internal(format!("nonzero residual off the support at index {}", residual.index))
            })?;
            state.values[*p] += omega * r;
        }
        Ok(())
    }

    fn energy_error(&self, state: &DiagonalState) -> f64 {
        self.coefficients
            .iter()
            .zip(&state.values)
            .map(|(c, v)| (c - v) * (c - v))
            .sum::<f64>()
            .sqrt()
    }

    fn solution_energy_norm(&self) -> f64 {
        self.norm
    }

    fn zero_threshold(&self) -> f64 {
        ZERO_RESIDUAL_RTOL * self.norm
    }

    fn greedy_pool(&self, _state: &DiagonalState, policy: &PoolPolicy, step: usize) -> Result<Vec<usize>> {
        let pool: Vec<usize> = match *policy {
            PoolPolicy::FixedFinite(n) => (1..=n).collect(),
            PoolPolicy::GrowingNested { initial, growth } => (1..=initial.saturating_add(growth.saturating_mul(step))).collect(),
            // residuals vanish off supp(c) ∪ supp(u) = supp(c)
            PoolPolicy::SupportUnion => self.indices.clone(),
        };
        if pool.is_empty() {
            return Err(Error::EmptyPool { step });
        }
        Ok(pool)
    }

    fn iterate(&self, state: &DiagonalState) -> DVector<f64> {
        self.dense_iterate(state, self.max_index())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_coefficient_model() {
        let m = DiagonalModel::new([(1, 1.0)]).unwrap();
        assert_eq!(m.solution_energy_norm(), 1.0);
        let s = m.initial_state();
        assert_eq!(m.energy_error(&s), 1.0);
        assert_eq!(m.a1_norm(), 1.0);
    }

    #[test]
    fn norms() {
        let m = DiagonalModel::from_dense(&[1.0, 0.5, 0.25]).unwrap();
        assert_eq!(a1_norm_diagonal(&m), 1.75);
        let m = DiagonalModel::from_dense(&[1.0, 0.5]).unwrap();
        let pi = Distribution::explicit(vec![0.5, 0.5]).unwrap();
        assert_eq!(ainfty_pi_norm_diagonal(&m, &pi), 2.0);
        let point = Distribution::explicit(vec![1.0, 0.0]).unwrap();
        assert_eq!(ainfty_pi_norm_diagonal(&m, &point), f64::INFINITY);
        let scaled = DiagonalModel::from_dense(&[-3.0, -1.5]).unwrap();
        assert_eq!(ainfty_pi_norm_diagonal(&scaled, &pi), 6.0);
        // c = π
        let pi = Distribution::explicit(vec![0.2, 0.3, 0.5]).unwrap();
        let m = DiagonalModel::from_dense(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(ainfty_pi_norm_diagonal(&m, &pi), 1.0);
    }

    #[test]
    fn residual_is_coefficient_gap() {
        let m = DiagonalModel::new([(2, 3.0), (7, -1.0)]).unwrap();
        let s = m.state_from([(2, 1.0)]).unwrap();
        assert_eq!(m.local_solve(&s, 2).unwrap().values[0], 2.0);
        assert_eq!(m.local_solve(&s, 7).unwrap().values[0], -1.0);
        assert_eq!(m.local_solve(&s, 5).unwrap().local_norm, 0.0);
        assert!(m.state_from([(3, 1.0)]).is_err());
        assert!(DiagonalModel::new([(1, 1.0), (1, 2.0)]).is_err());
        assert!(DiagonalModel::new([(0, 1.0)]).is_err());
    }

    #[test]
    fn support_union_pool() {
        let m = DiagonalModel::new([(9, 1.0), (2, 1.0)]).unwrap();
        let s = m.initial_state();
        assert_eq!(m.greedy_pool(&s, &PoolPolicy::SupportUnion, 0).unwrap(), vec![2, 9]);
        assert_eq!(m.greedy_pool(&s, &PoolPolicy::GrowingNested { initial: 1, growth: 2 }, 3).unwrap().len(), 7);
        assert!(matches!(m.greedy_pool(&s, &PoolPolicy::FixedFinite(0), 0), Err(Error::EmptyPool { .. })));
    }
}
