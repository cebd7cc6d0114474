//! Numeric checks of the auxiliary inequalities behind the rate proofs.

use crate::error::Result;
use crate::models::{DiagonalModel, DiagonalState, Distribution};
use crate::solver::{select_greedy, PoolPolicy};
use crate::system::SchwarzSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lemma3Report {
    /// `b_m <= A` for every `m <= steps` along the largest admissible sequence.
    Checked { holds: bool, worst: f64, worst_m: usize },
    /// `B <= 0`, `A < B/√2 + √2` or `b_0 > A`.
    NotApplicable,
}

impl Lemma3Report {
    pub fn holds(&self) -> bool {
        matches!(self, Lemma3Report::Checked { holds: true, .. })
    }
}

/// The largest `b_{m+1}` allowed by both
/// `b_{m+1} <= α_m^{1/2} b_m + B (m+2)^{-1/2}` and, for `b_m > 0`,
/// `b_{m+1} <= α_m^{1/2} (b_m + ((m+1) b_m)^{-1})`, with `α_m = (m+1)/(m+2)`.
pub fn lemma3_next(b_const: f64, b: f64, m: usize) -> f64 {
    let mf = m as f64;
    let sa = ((mf + 1.0) / (mf + 2.0)).sqrt();
    let first = sa * b + b_const / (mf + 2.0).sqrt();
    if b > 0.0 {
        first.min(sa * (b + 1.0 / ((mf + 1.0) * b)))
    } else {
        first
    }
}

/// Runs the worst-case sequence from `b_0 = B`.
pub fn lemma3_check(b_const: f64, a: f64, steps: usize) -> Lemma3Report {
    lemma3_check_from(b_const, a, b_const, steps)
}

pub fn lemma3_check_from(b_const: f64, a: f64, b0: f64, steps: usize) -> Lemma3Report {
    let threshold = b_const / 2f64.sqrt() + 2f64.sqrt();
    if b_const.is_nan() || b_const <= 0.0 || a < threshold || b0 > a {
        return Lemma3Report::NotApplicable;
    }
    let (mut b, mut worst, mut worst_m) = (b0, b0, 0);
    let mut holds = true;
    for m in 0..steps {
        b = lemma3_next(b_const, b, m);
        if b > worst {
            worst = b;
            worst_m = m + 1;
        }
        holds &= b <= a;
    }
    Lemma3Report::Checked { holds, worst, worst_m }
}

fn energy_pairing(model: &DiagonalModel, state: &DiagonalState, h: &DiagonalModel) -> f64 {
    h.entries().map(|(i, hi)| (model.coefficient(i) - model.state_value(state, i)) * hi).sum()
}

/// `‖r_{i_m}‖ - β a(e, h) / ‖h‖_{A_1}` for the greedy pick at error `e = u* - u`.
pub fn lemma1_greedy_slack(model: &DiagonalModel, state: &DiagonalState, h: &DiagonalModel, beta: f64) -> Result<f64> {
    let pick = select_greedy(model, state, beta, &PoolPolicy::SupportUnion, 0)?;
    let h1 = h.a1_norm();
    let bound = if h1 > 0.0 { beta * energy_pairing(model, state, h) / h1 } else { 0.0 };
    Ok(pick.local_norm - bound)
}

/// `Σ_i π_i ‖r_i‖ - a(e, h) / ‖h‖_{A_∞^π}`.
pub fn lemma1_random_slack(model: &DiagonalModel, state: &DiagonalState, h: &DiagonalModel, pi: &Distribution) -> Result<f64> {
    let mut weighted = 0.0;
    for &i in model.support() {
        weighted += pi.prob(i) * model.local_solve(state, i)?.local_norm;
    }
    let hn = h.ainfty_pi_norm(pi);
    let bound = if hn > 0.0 && hn.is_finite() { energy_pairing(model, state, h) / hn } else { 0.0 };
    Ok(weighted - bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma3_examples() {
        let b = 1.0 / 2f64.sqrt();
        assert!(lemma3_check(b, 2.0, 100_000).holds());
        assert_eq!(lemma3_check_from(b, 2.0, 2.5, 10), Lemma3Report::NotApplicable);
        assert_eq!(lemma3_check(b, 1.0, 10), Lemma3Report::NotApplicable);
        assert_eq!(lemma3_check(0.0, 2.0, 10), Lemma3Report::NotApplicable);
    }

    #[test]
    fn lemma3_next_takes_the_tighter_inequality() {
        // b = 1, m = 0: √½ + B/√2 against √½ · 2
        let b = 0.1;
        assert!((lemma3_next(b, 1.0, 0) - (0.5f64.sqrt() + b / 2f64.sqrt())).abs() < 1e-15);
        let b = 5.0;
        assert!((lemma3_next(b, 1.0, 0) - 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(lemma3_next(1.0, 0.0, 0), 1.0 / 2f64.sqrt());
    }

    #[test]
    fn lemma1_examples() {
        let model = DiagonalModel::from_dense(&[1.0, -0.5, 0.25]).unwrap();
        let state = model.initial_state();
        let h = DiagonalModel::from_dense(&[0.5, 0.0, 1.0]).unwrap();
        // a(e, h) = 0.75, ‖h‖_1 = 1.5, best residual 1
        assert!((lemma1_greedy_slack(&model, &state, &h, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let pi = Distribution::uniform(3).unwrap();
        // Σ π|e| = 1.75/3, ‖h‖_∞π = 3
        let s = lemma1_random_slack(&model, &state, &h, &pi).unwrap();
        assert!((s - (1.75 / 3.0 - 0.25)).abs() < 1e-15);
    }
}
