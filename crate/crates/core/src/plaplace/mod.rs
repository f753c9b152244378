//! Discrete p-Laplace subdiffusion with a power-law reaction term.

mod experiment;
mod grid;
mod regime;

pub use experiment::*;
pub use grid::{dirichlet_p_energy, discrete_p_laplacian, q_potential, Grid, GridError, PDirichlet, FLUX_EPSILON};
pub use regime::{
    classify_regime, exponents_equal, interpolation_theta, AssumptionProfile, RegimeReport, Verdict, EXPONENT_TOL,
};
