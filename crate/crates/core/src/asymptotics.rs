//! Consistency harness for the large-N limit.
//!
//! The mean-field energy per particle depends on N and g only through the
//! combination gamma = N g, and for strong coupling it approaches the
//! density-functional value from above. The functions here automate grids
//! for that regime, sweep the ratio of the two energies over gamma, and
//! verify the exact identities (the N-scaling of the mean-field functional
//! and the collapse of rescaled density-functional profiles) that the
//! solvers must reproduce to discretization accuracy.

use thiserror::Error;

use crate::coupling::mean_gp_density;
use crate::gp::{minimize_gp, GpError, GpSolverOptions};
use crate::grid::{build_radial_grid, GridError, RadialGrid};
use crate::tf::{rescaled_tf_profile, solve_tf, TfError};
use crate::trap::TrapPotential;

#[derive(Debug, Error, PartialEq)]
pub enum AsymptoticsError {
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("grid policy field {field} must be positive and finite, got {value}")]
    BadPolicy { field: &'static str, value: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Tf(#[from] TfError),
}

/// Rules for sizing a radial grid to a given cloud.
///
/// The extent covers the density-functional support with margin plus a few
/// healing lengths for the surface layer, and never falls below a few
/// single-particle oscillator lengths so the weak-coupling limit stays
/// resolved. It is rounded up to a half-integer so equivalent parameter
/// sets land on identical grids.
#[derive(Debug, Clone)]
pub struct GridPolicy {
    /// Grid nodes per unit radius.
    pub points_per_unit: f64,
    /// Multiple of the density-functional support radius to cover.
    pub support_margin: f64,
    /// Healing lengths added beyond the support.
    pub healing_lengths: f64,
    /// Minimum extent in units of the trap's single-particle length scale.
    pub oscillator_lengths: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            points_per_unit: 200.0,
            support_margin: 1.5,
            healing_lengths: 2.0,
            oscillator_lengths: 8.0,
        }
    }
}

impl GridPolicy {
    fn validate(&self) -> Result<(), AsymptoticsError> {
        let fields = [
            ("points_per_unit", self.points_per_unit),
            ("support_margin", self.support_margin),
            ("healing_lengths", self.healing_lengths),
            ("oscillator_lengths", self.oscillator_lengths),
        ];
        for (field, value) in fields {
            if value <= 0.0 || !value.is_finite() {
                return Err(AsymptoticsError::BadPolicy { field, value });
            }
        }
        Ok(())
    }
}

/// One point of a mean-field versus density-functional sweep.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    /// Combined coupling gamma = N g.
    pub parameter: f64,
    /// Mean-field energy per particle.
    pub e_gp: f64,
    /// Density-functional energy per particle.
    pub e_tf: f64,
    /// e_gp / e_tf; approaches 1 from above as gamma grows.
    pub ratio: f64,
    pub mu_gp: f64,
    pub mu_tf: f64,
    /// Gas parameter a^D rho_bar implied by the coupling and the mean
    /// density of the mean-field cloud.
    pub diluteness: f64,
    pub r_max: f64,
    pub n_points: usize,
}

/// Builds a grid sized by the policy for the given cloud parameters.
pub fn suggest_grid(
    trap: &TrapPotential,
    dimension: usize,
    particle_number: f64,
    coupling: f64,
    policy: &GridPolicy,
) -> Result<RadialGrid, AsymptoticsError> {
    policy.validate()?;
    check_positive("particle_number", particle_number)?;
    if coupling < 0.0 || !coupling.is_finite() {
        return Err(AsymptoticsError::BadParameter {
            name: "coupling",
            value: coupling,
        });
    }
    let table_top = match trap {
        TrapPotential::Tabulated { radii, .. } => Some(*radii.last().expect("non-empty table")),
        TrapPotential::Power { .. } => None,
    };
    let floor = match trap {
        TrapPotential::Power {
            exponent,
            coefficient,
        } => policy.oscillator_lengths * coefficient.powf(-1.0 / (exponent + 2.0)),
        TrapPotential::Tabulated { .. } => table_top.unwrap(),
    };
    let mut extent = floor;
    if coupling > 0.0 {
        let tf = solve_tf(trap, dimension, particle_number, coupling)?;
        let healing = 1.0 / (8.0 * std::f64::consts::PI * coupling * tf.mean_density).sqrt();
        let wanted = policy.support_margin * tf.support_radius + policy.healing_lengths * healing;
        extent = extent.max(wanted);
    }
    let mut r_max = (extent / 0.5).ceil() * 0.5;
    if let Some(top) = table_top {
        r_max = r_max.min(top);
    }
    let mut intervals = ((policy.points_per_unit * r_max).ceil() as usize).max(16);
    if intervals % 2 == 1 {
        intervals += 1;
    }
    Ok(build_radial_grid(dimension, r_max, intervals + 1)?)
}

/// Solves the mean-field and density-functional problems at each combined
/// coupling gamma = N g and reports their energies side by side.
pub fn gp_tf_sweep(
    trap: &TrapPotential,
    dimension: usize,
    particle_number: f64,
    gammas: &[f64],
    policy: &GridPolicy,
) -> Result<Vec<SweepRecord>, AsymptoticsError> {
    check_positive("particle_number", particle_number)?;
    let mut records = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        check_positive("gamma", gamma)?;
        let g = gamma / particle_number;
        let grid = suggest_grid(trap, dimension, particle_number, g, policy)?;
        let gp = minimize_gp(trap, &grid, particle_number, g, &GpSolverOptions::default())?;
        let tf = solve_tf(trap, dimension, particle_number, g)?;
        let diluteness = match dimension {
            3 => g.powi(3) * mean_gp_density(&gp),
            _ => (-1.0 / g).exp(),
        };
        records.push(SweepRecord {
            parameter: gamma,
            e_gp: gp.energy / particle_number,
            e_tf: tf.energy / particle_number,
            ratio: gp.energy / tf.energy,
            mu_gp: gp.chemical_potential,
            mu_tf: tf.chemical_potential,
            diluteness,
            r_max: grid.r_max(),
            n_points: grid.n_points(),
        });
    }
    Ok(records)
}

/// Relative defect of the identity E(N, g) = N E(1, N g), with both
/// problems minimized on the same grid. The identity is exact for the
/// discrete functional, so the defect measures only solver tolerance.
pub fn scaling_check(
    trap: &TrapPotential,
    dimension: usize,
    particle_number: f64,
    coupling: f64,
    policy: &GridPolicy,
) -> Result<f64, AsymptoticsError> {
    check_positive("particle_number", particle_number)?;
    check_positive("coupling", coupling)?;
    let grid = suggest_grid(trap, dimension, particle_number, coupling, policy)?;
    let options = GpSolverOptions {
        energy_tol: 1e-14,
        ..GpSolverOptions::default()
    };
    let full = minimize_gp(trap, &grid, particle_number, coupling, &options)?;
    let unit = minimize_gp(trap, &grid, 1.0, particle_number * coupling, &options)?;
    Ok(((full.energy - particle_number * unit.energy) / full.energy).abs())
}

/// Largest relative deviation of the rescaled density-functional profiles
/// from their common shape: rho_gamma(lambda r) lambda^D against the unit
/// profile, lambda = gamma^(1/(s+D)). Exact up to root-finding tolerance
/// for homogeneous traps.
pub fn tf_collapse_check(
    trap: &TrapPotential,
    dimension: usize,
    gammas: &[f64],
) -> Result<f64, AsymptoticsError> {
    let unit = rescaled_tf_profile(trap, dimension)?;
    let exponent = trap
        .exponent()
        .expect("homogeneity already checked by the unit profile");
    let central = unit.density(0.0);
    let mut worst = 0.0_f64;
    let samples = 64;
    for &gamma in gammas {
        check_positive("gamma", gamma)?;
        let full = solve_tf(trap, dimension, 1.0, gamma)?;
        let lambda = gamma.powf(1.0 / (exponent + dimension as f64));
        for i in 0..samples {
            let r = unit.support_radius * i as f64 / samples as f64;
            let collapsed = full.density(lambda * r) * lambda.powi(dimension as i32);
            worst = worst.max((collapsed - unit.density(r)).abs() / central);
        }
    }
    Ok(worst)
}

fn check_positive(name: &'static str, value: f64) -> Result<(), AsymptoticsError> {
    if value <= 0.0 || !value.is_finite() {
        return Err(AsymptoticsError::BadParameter { name, value });
    }
    Ok(())
}
