pub mod bounds;
pub mod expectation;
pub mod invariants;
pub mod lemmas;
pub mod rate;

pub use bounds::{chebyshev_tail, chebyshev_threshold, density_bound, greedy_bound, random_bound, BoundSpec};
pub use expectation::{
    bruteforce_expected_error, exact_expected_error, mc_expected_error, mc_reduce, pcons_constant, pcons_sum,
    truncation_error, ExpectationEstimate,
};
pub use lemmas::{lemma1_greedy_slack, lemma1_random_slack, lemma3_check, lemma3_check_from, Lemma3Report};
pub use rate::{default_range, fit_rate, RateFit, RateOutcome};
pub use invariants::{check_determinism, check_run, lazy_dense_discrepancy, InvariantObserver, InvariantTally};
