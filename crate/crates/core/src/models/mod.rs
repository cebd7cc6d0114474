pub mod diagonal;
pub mod distribution;
pub mod poisson;

pub use diagonal::{a1_norm_diagonal, ainfty_pi_norm_diagonal, DiagonalModel, DiagonalState};
pub use distribution::{squared_mass_decay, Distribution, DistributionFamily, DistributionSchedule};
pub use poisson::{make_poisson_1d, PoissonSplitting};
