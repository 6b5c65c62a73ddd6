//! Thomas-Fermi theory: the large-coupling limit in which the kinetic term
//! is dropped and the density becomes rho(x) = [mu - V(x)]_+ / (8 pi g).
//!
//! The chemical potential is fixed by particle number, N(mu) = integral of
//! rho, which is strictly increasing in mu, so mu is found by bisection. For
//! power-law traps the whole problem has closed forms; they are evaluated as
//! an internal cross-check on the quadrature and root find.

use std::f64::consts::PI;

use thiserror::Error;

use crate::surface_area;
use crate::trap::TrapPotential;

/// Nodes of the internal Simpson rule over the support [0, R(mu)].
const N_QUAD: usize = 8193;
/// Relative half-width at which the bisection on mu stops.
const MU_TOL: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum TfError {
    #[error("dimension must be 2 or 3, got {dimension}")]
    InvalidDimension { dimension: usize },
    #[error("particle number must be positive and finite, got {particle_number}")]
    BadParticleNumber { particle_number: f64 },
    #[error("coupling must be positive and finite, got {coupling}")]
    BadCoupling { coupling: f64 },
    #[error("the cloud fills the tabulated trap: N(mu) stays below the particle number even at the table maximum {table_top}")]
    SupportExceedsTable { table_top: f64 },
    #[error("collapse profile requires a power-law trap")]
    NotHomogeneous,
}

/// Converged Thomas-Fermi state for one trap, dimension, N and g.
#[derive(Debug, Clone)]
pub struct TfState {
    pub dimension: usize,
    pub particle_number: f64,
    pub coupling: f64,
    /// Chemical potential mu fixed by the particle number.
    pub chemical_potential: f64,
    /// Total energy: integral of V rho + 4 pi g rho^2.
    pub energy: f64,
    /// Radius where the density reaches zero, V(R) = mu.
    pub support_radius: f64,
    /// Density-weighted mean density, (1/N) integral of rho^2.
    pub mean_density: f64,
    trap: TrapPotential,
}

impl TfState {
    pub fn trap(&self) -> &TrapPotential {
        &self.trap
    }

    /// The density profile [mu - V(r)]_+ / (8 pi g).
    pub fn density(&self, r: f64) -> f64 {
        let v = self.trap.eval_at(r);
        (self.chemical_potential - v).max(0.0) / (8.0 * PI * self.coupling)
    }
}

/// Solves the Thomas-Fermi problem for a confining trap.
pub fn solve_tf(
    trap: &TrapPotential,
    dimension: usize,
    particle_number: f64,
    coupling: f64,
) -> Result<TfState, TfError> {
    if dimension != 2 && dimension != 3 {
        return Err(TfError::InvalidDimension { dimension });
    }
    if particle_number <= 0.0 || !particle_number.is_finite() {
        return Err(TfError::BadParticleNumber { particle_number });
    }
    if coupling <= 0.0 || !coupling.is_finite() {
        return Err(TfError::BadCoupling { coupling });
    }

    let number_at = |mu: f64| {
        let r_s = support_radius(trap, mu);
        quad(dimension, r_s, |r| {
            (mu - trap.eval_at(r)).max(0.0) / (8.0 * PI * coupling)
        })
    };

    // Bracket the root of N(mu) = N by doubling, then bisect. N(mu) is
    // strictly increasing once the support is nonempty.
    let mu_cap = table_top(trap);
    let mut hi = match power_trap_mu(trap, dimension, particle_number, coupling) {
        Some(mu) => 2.0 * mu,
        None => 1.0,
    };
    loop {
        if let Some(cap) = mu_cap {
            if hi >= cap {
                hi = cap;
                if number_at(hi) < particle_number {
                    return Err(TfError::SupportExceedsTable { table_top: cap });
                }
                break;
            }
        }
        if number_at(hi) >= particle_number {
            break;
        }
        hi *= 2.0;
        assert!(hi.is_finite(), "chemical potential bracket overflowed");
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if number_at(mid) < particle_number {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= MU_TOL * hi {
            break;
        }
    }
    let mu = 0.5 * (lo + hi);

    if let Some(mu_exact) = power_trap_mu(trap, dimension, particle_number, coupling) {
        let defect = (mu - mu_exact).abs() / mu_exact;
        assert!(
            defect < 1e-8,
            "chemical potential disagrees with the power-trap closed form by {defect:e}"
        );
    }

    let r_s = support_radius(trap, mu);
    let rho = |r: f64| (mu - trap.eval_at(r)).max(0.0) / (8.0 * PI * coupling);
    let interaction = 4.0 * PI * coupling * quad(dimension, r_s, |r| rho(r) * rho(r));
    let energy = mu * particle_number - interaction;
    let mean_density = quad(dimension, r_s, |r| rho(r) * rho(r)) / particle_number;

    Ok(TfState {
        dimension,
        particle_number,
        coupling,
        chemical_potential: mu,
        energy,
        support_radius: r_s,
        mean_density,
        trap: trap.clone(),
    })
}

/// The unit-coupling unit-number state whose density every Thomas-Fermi
/// cloud in the same power trap collapses onto after rescaling lengths by
/// (N g)^(1/(s+D)).
pub fn rescaled_tf_profile(trap: &TrapPotential, dimension: usize) -> Result<TfState, TfError> {
    if trap.exponent().is_none() {
        return Err(TfError::NotHomogeneous);
    }
    solve_tf(trap, dimension, 1.0, 1.0)
}

/// Radius where V first reaches mu; for tabulated traps that never reach mu
/// this returns the table end (the integrand is clipped to zero there anyway).
fn support_radius(trap: &TrapPotential, mu: f64) -> f64 {
    if let (Some(s), Some(c)) = (trap.exponent(), trap.coefficient()) {
        return (mu / c).powf(1.0 / s);
    }
    let top = table_top(trap).expect("tabulated trap has a table maximum");
    let r_top = table_end(trap);
    if top <= mu {
        return r_top;
    }
    let mut lo = 0.0;
    let mut hi = r_top;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if trap.eval_at(mid) < mu {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * r_top {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn table_top(trap: &TrapPotential) -> Option<f64> {
    match trap {
        TrapPotential::Tabulated { values, .. } => values.last().copied(),
        _ => None,
    }
}

fn table_end(trap: &TrapPotential) -> f64 {
    match trap {
        TrapPotential::Tabulated { radii, .. } => *radii.last().unwrap(),
        _ => f64::INFINITY,
    }
}

/// Closed-form chemical potential for power traps V = c r^s:
/// mu = [8 pi g D (s+D) N c^(D/s) / (S_D s)]^(s/(s+D)).
fn power_trap_mu(trap: &TrapPotential, dimension: usize, n: f64, g: f64) -> Option<f64> {
    let s = trap.exponent()?;
    let c = trap.coefficient()?;
    let d = dimension as f64;
    let base = 8.0 * PI * g * d * (s + d) * n * c.powf(d / s) / (surface_area(dimension) * s);
    Some(base.powf(s / (s + d)))
}

/// S_D * integral of f(r) r^(D-1) dr over [0, r_end] by composite Simpson.
fn quad(dimension: usize, r_end: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = r_end / (N_QUAD - 1) as f64;
    let mut sum = 0.0;
    for k in 0..N_QUAD {
        let r = if k == N_QUAD - 1 { r_end } else { k as f64 * h };
        let q = if k == 0 || k == N_QUAD - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += q * f(r) * r.powi(dimension as i32 - 1);
    }
    surface_area(dimension) * sum * h / 3.0
}
