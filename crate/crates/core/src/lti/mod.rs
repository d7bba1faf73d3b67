//! Transfer functions with dead time: polynomial algebra, roots, frequency
//! response, composition and parametric perturbation.

mod plant;
mod polynomial;
mod roots;
mod transfer;

pub use plant::{
    lead_lag, perturb, pid, series_pid_filtered, Factor, FactoredPlant, PerturbationSpec,
};
pub use polynomial::Polynomial;
pub use roots::{poly_roots, poly_roots_with_axis_tol, RootSet, DEFAULT_RHP_TOL, DEFAULT_ROOT_TOL};
pub use transfer::{OpenLoop, TransferFunction};
