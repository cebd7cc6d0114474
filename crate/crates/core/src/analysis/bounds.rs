//! Closed-form error bounds and the Chebyshev probability bounds derived from them.

use crate::error::{Error, Result};
use crate::models::{DiagonalModel, Distribution};

/// The constants entering a bound. `distance` is `‖u - h‖_a`, the
/// remaining norms belong to `h` in the density variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundSpec {
    Greedy { solution_norm: f64, lambda: f64, beta: f64, a1_norm: f64 },
    Random { solution_norm: f64, lambda: f64, ainfty_norm: f64 },
    GreedyDensity { distance: f64, solution_norm: f64, lambda: f64, beta: f64, a1_norm: f64 },
    RandomDensity { distance: f64, solution_norm: f64, lambda: f64, ainfty_norm: f64 },
}

impl BoundSpec {
    /// Greedy constants of a diagonal model (`Λ = 1`).
    pub fn greedy_diagonal(model: &DiagonalModel, beta: f64) -> Result<Self> {
        BoundSpec::Greedy {
            solution_norm: model.norm(),
            lambda: 1.0,
            beta,
            a1_norm: model.a1_norm(),
        }
        .validated()
    }

    pub fn random_diagonal(model: &DiagonalModel, pi: &Distribution) -> Result<Self> {
        BoundSpec::Random {
            solution_norm: model.norm(),
            lambda: 1.0,
            ainfty_norm: model.ainfty_pi_norm(pi),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let (norms, beta): (&[f64], Option<f64>) = match &self {
            BoundSpec::Greedy { solution_norm, lambda, beta, a1_norm } => (&[*solution_norm, *lambda, *a1_norm], Some(*beta)),
            BoundSpec::Random { solution_norm, lambda, ainfty_norm } => (&[*solution_norm, *lambda, *ainfty_norm], None),
            BoundSpec::GreedyDensity { distance, solution_norm, lambda, beta, a1_norm } => {
                (&[*distance, *solution_norm, *lambda, *a1_norm], Some(*beta))
            }
            BoundSpec::RandomDensity { distance, solution_norm, lambda, ainfty_norm } => {
                (&[*distance, *solution_norm, *lambda, *ainfty_norm], None)
            }
        };
        // an infinite class norm is allowed: the bound is then vacuous
        if norms.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::param("bound", "norms must be nonnegative"));
        }
        if let Some(b) = beta {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::param("beta", format!("must lie in (0, 1], got {b}")));
            }
        }
        Ok(self)
    }

    /// `‖u‖_a^2 + (Λ/β)^2 ‖·‖_{A_1}^2` or `‖u‖_a^2 + Λ^2 ‖·‖_{A_∞^π}^2`.
    pub fn constant(&self) -> f64 {
        match *self {
            BoundSpec::Greedy { solution_norm, lambda, beta, a1_norm }
            | BoundSpec::GreedyDensity { solution_norm, lambda, beta, a1_norm, .. } => {
                solution_norm.powi(2) + (lambda / beta).powi(2) * a1_norm.powi(2)
            }
            BoundSpec::Random { solution_norm, lambda, ainfty_norm }
            | BoundSpec::RandomDensity { solution_norm, lambda, ainfty_norm, .. } => {
                solution_norm.powi(2) + lambda.powi(2) * ainfty_norm.powi(2)
            }
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, BoundSpec::Random { .. } | BoundSpec::RandomDensity { .. })
    }
}

fn wrong_variant(op: &str, spec: &BoundSpec) -> Error {
    Error::param("bound", format!("{op} does not apply to {spec:?}"))
}

/// Bound on `ε_m^2` for the weak greedy rule.
pub fn greedy_bound(m: usize, spec: &BoundSpec) -> Result<f64> {
    match spec {
        BoundSpec::Greedy { .. } => Ok(2.0 * spec.constant() / (m as f64 + 1.0)),
        _ => Err(wrong_variant("greedy_bound", spec)),
    }
}

/// Bound on `E(ε_m^2)` for the random rule.
pub fn random_bound(m: usize, spec: &BoundSpec) -> Result<f64> {
    match spec {
        BoundSpec::Random { .. } => Ok(2.0 * spec.constant() / (m as f64 + 1.0)),
        _ => Err(wrong_variant("random_bound", spec)),
    }
}

/// Bound on `ε_m` (greedy) or `E(ε_m^2)^{1/2}` (random) through an approximant `h`.
pub fn density_bound(m: usize, spec: &BoundSpec) -> Result<f64> {
    match *spec {
        BoundSpec::GreedyDensity { distance, .. } | BoundSpec::RandomDensity { distance, .. } => {
            Ok(2.0 * distance + (8.0 * spec.constant()).sqrt() / (m as f64 + 1.0).sqrt())
        }
        _ => Err(wrong_variant("density_bound", spec)),
    }
}

/// Lower bound on `P(ε_m < ε)`.
pub fn chebyshev_tail(m: usize, spec: &BoundSpec, eps: f64) -> Result<f64> {
    if !spec.is_random() {
        return Err(wrong_variant("chebyshev_tail", spec));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param("epsilon", format!("must be positive, got {eps}")));
    }
    let p = 1.0 - 8.0 * spec.constant() / ((m as f64 + 1.0) * eps * eps);
    Ok(p.clamp(0.0, 1.0))
}

/// The `ε` with `P(ε_m < ε) >= 1 - δ`.
pub fn chebyshev_threshold(m: usize, spec: &BoundSpec, delta: f64) -> Result<f64> {
    if !spec.is_random() {
        return Err(wrong_variant("chebyshev_threshold", spec));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1], got {delta}")));
    }
    Ok((8.0 * spec.constant() / ((m as f64 + 1.0) * delta)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_greedy(beta: f64) -> BoundSpec {
        BoundSpec::Greedy { solution_norm: 1.0, lambda: 1.0, beta, a1_norm: 1.0 }
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_bound(0, &unit_greedy(1.0)).unwrap(), 4.0);
        let b = |m| greedy_bound(m, &unit_greedy(1.0)).unwrap();
        for m in [0, 3, 10, 1000] {
            assert!((b(4 * m + 3) - b(m) / 4.0).abs() < 1e-15);
        }
        // β = 1/2 quadruples the class term
        let spec = |beta| BoundSpec::Greedy { solution_norm: 0.7, lambda: 1.3, beta, a1_norm: 2.1 };
        for m in [0, 5, 99] {
            let gap = greedy_bound(m, &spec(0.5)).unwrap() - greedy_bound(m, &spec(1.0)).unwrap();
            let expect = 2.0 * 3.0 * 1.3f64.powi(2) * 2.1f64.powi(2) / (m as f64 + 1.0);
            assert!((gap - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn random_examples() {
        let s = BoundSpec::Random { solution_norm: 1.0, lambda: 1.0, ainfty_norm: 1.0 };
        assert_eq!(random_bound(1, &s).unwrap(), 2.0);
        let z = BoundSpec::Random { solution_norm: 0.0, lambda: 1.0, ainfty_norm: 0.0 };
        assert_eq!(random_bound(4, &z).unwrap(), 0.0);
        assert!(random_bound(1, &unit_greedy(1.0)).is_err());
        assert!(greedy_bound(1, &s).is_err());
    }

    #[test]
    fn density_examples() {
        let s = BoundSpec::GreedyDensity { distance: 0.0, solution_norm: 1.0, lambda: 1.0, beta: 1.0, a1_norm: 1.0 };
        for m in [0, 8, 63] {
            let root = greedy_bound(m, &unit_greedy(1.0)).unwrap().sqrt();
            assert!((density_bound(m, &s).unwrap() - 2.0 * root).abs() < 1e-14);
        }
        let s = BoundSpec::RandomDensity { distance: 1.0, solution_norm: 0.0, lambda: 1.0, ainfty_norm: 0.0 };
        assert_eq!(density_bound(0, &s).unwrap(), 2.0);
    }

    #[test]
    fn validation() {
        assert!(unit_greedy(1.5).validated().is_err());
        assert!(unit_greedy(0.0).validated().is_err());
        let s = BoundSpec::Random { solution_norm: -1.0, lambda: 1.0, ainfty_norm: 1.0 };
        assert!(s.validated().is_err());
        let s = BoundSpec::Random { solution_norm: 1.0, lambda: 1.0, ainfty_norm: f64::INFINITY };
        assert!(s.validated().is_ok());
    }

    #[test]
    fn chebyshev_examples() {
        // 8 C = 8 with C = 1
        let s = BoundSpec::Random { solution_norm: 0.0, lambda: 1.0, ainfty_norm: 1.0 };
        assert!((chebyshev_tail(7, &s, 2f64.sqrt()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(chebyshev_tail(7, &s, 1e6).unwrap(), 1.0 - 8.0 / (8.0 * 1e12));
        assert_eq!(chebyshev_tail(0, &s, 0.1).unwrap(), 0.0);
        assert!(chebyshev_tail(0, &s, 0.0).is_err());
        assert!(chebyshev_threshold(0, &s, 0.0).is_err());
        assert!(chebyshev_threshold(0, &s, 1.5).is_err());
        let eps = chebyshev_threshold(7, &s, 0.5).unwrap();
        assert!((chebyshev_tail(7, &s, eps).unwrap() - 0.5).abs() < 1e-14);
    }
}
