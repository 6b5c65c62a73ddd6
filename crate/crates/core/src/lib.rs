//! Variational theory of a trapped dilute Bose gas.
//!
//! Units are hbar = 2m = 1 throughout, so the one-body Hamiltonian is
//! `-laplacian + V(x)` and a harmonic trap `V = r^2` has ground energy D per
//! particle in D dimensions. Everything is radially symmetric: profiles live
//! on a uniform radial grid and integrals carry the surface measure
//! S_D r^(D-1).
//!
//! The pieces, bottom to top:
//!
//! * [`grid`], [`trap`], [`pair`]: radial grids with Simpson quadrature,
//!   trap potentials, pair potentials.
//! * [`scattering`]: the zero-energy two-body problem and the scattering
//!   length it defines.
//! * [`gp`]: mean-field energy minimization by a normalized semi-implicit
//!   gradient flow.
//! * [`tf`]: the strong-coupling density functional obtained by dropping
//!   the gradient term, solved by root-finding in the chemical potential.
//! * [`coupling`]: the dimension-dependent coupling constant g(a), mean
//!   densities and diluteness bookkeeping.
//! * [`vmc`]: a variational Monte Carlo upper bound from a pair-correlated
//!   trial function built out of the mean-field profile and the scattering
//!   solution.
//! * [`asymptotics`]: scaling identities, automatic grid sizing and the
//!   mean-field to density-functional crossover sweep.

pub mod asymptotics;
pub mod coupling;
pub mod gp;
pub mod grid;
mod interp;
pub mod pair;
pub mod scattering;
pub mod tf;
pub mod trap;
pub mod vmc;

pub use asymptotics::{
    gp_tf_sweep, scaling_check, suggest_grid, tf_collapse_check, GridPolicy, SweepRecord,
};
pub use coupling::{
    coupling_constant, diluteness, homogeneous_energy_density, mean_gp_density, CouplingReport,
    RhoBarSource,
};
pub use gp::{
    chemical_potential, euler_lagrange_residual, gp_energy_breakdown, minimize_gp, GpEnergies,
    GpSolverOptions, GpState,
};
pub use grid::{build_radial_grid, radial_integral, RadialGrid};
pub use pair::{scale_pair_potential, PairPotential};
pub use scattering::{default_scattering_grid, zero_energy_profile, ScatteringSolution};
pub use tf::{rescaled_tf_profile, solve_tf, TfState};
pub use trap::TrapPotential;
pub use vmc::{
    local_energy, run_vmc, run_vmc_parallel, trial_log_psi, Configuration, DensityHistogram,
    TrialFunction, VmcOptions, VmcResult,
};

/// Surface area of the unit sphere in D dimensions: 2π for D=2, 4π for D=3.
pub fn surface_area(dimension: usize) -> f64 {
    match dimension {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        d => panic!("unsupported dimension {d}: only D = 2 and D = 3 are implemented"),
    }
}
