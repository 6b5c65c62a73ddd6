//! External trapping potentials.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrapError {
    #[error("trap exponent must be positive, got s = {exponent}")]
    NonPositiveExponent { exponent: f64 },
    #[error("trap coefficient must be positive, got c = {coefficient}")]
    NonPositiveCoefficient { coefficient: f64 },
    #[error("potential is only defined for r >= 0, got r = {r}")]
    NegativeRadius { r: f64 },
    #[error("tabulated trap needs at least 2 samples starting at r = 0, nondecreasing and nonnegative")]
    InvalidTable,
    #[error("radius {r} is beyond the tabulated range {r_table}")]
    BeyondTable { r: f64, r_table: f64 },
}

/// Radial trap potential V(|x|).
///
/// The primary family is the homogeneous power law V = c·r^s (harmonic s = 2,
/// quartic s = 4, ...); a tabulated radial profile is accepted for
/// extensibility, at the price of losing every closed form downstream.
#[derive(Debug, Clone, PartialEq)]
pub enum TrapPotential {
    Power { exponent: f64, coefficient: f64 },
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl TrapPotential {
    /// V = c·r^s with s > 0, c > 0.
    pub fn power(exponent: f64, coefficient: f64) -> Result<Self, TrapError> {
        if exponent <= 0.0 || !exponent.is_finite() {
            return Err(TrapError::NonPositiveExponent { exponent });
        }
        if coefficient <= 0.0 || !coefficient.is_finite() {
            return Err(TrapError::NonPositiveCoefficient { coefficient });
        }
        Ok(Self::Power { exponent, coefficient })
    }

    /// The isotropic harmonic trap V = r^2.
    pub fn harmonic() -> Self {
        Self::Power { exponent: 2.0, coefficient: 1.0 }
    }

    /// Piecewise-linear radial table. Samples must start at r = 0, be strictly
    /// increasing in r, nonnegative and nondecreasing in V (a confining well).
    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self, TrapError> {
        let ok = radii.len() >= 2
            && radii.len() == values.len()
            && radii[0] == 0.0
            && radii.windows(2).all(|w| w[1] > w[0] && w[1].is_finite())
            && values.windows(2).all(|w| w[1] >= w[0])
            && values.iter().all(|v| v.is_finite() && *v >= 0.0);
        if !ok {
            return Err(TrapError::InvalidTable);
        }
        Ok(Self::Tabulated { radii, values })
    }

    /// Power-law exponent s, if this is a power trap.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Self::Power { exponent, .. } => Some(*exponent),
            Self::Tabulated { .. } => None,
        }
    }

    /// Power-law coefficient c, if this is a power trap.
    pub fn coefficient(&self) -> Option<f64> {
        match self {
            Self::Power { coefficient, .. } => Some(*coefficient),
            Self::Tabulated { .. } => None,
        }
    }

    /// V(r) for r >= 0.
    pub fn eval(&self, r: f64) -> Result<f64, TrapError> {
        if r < 0.0 {
            return Err(TrapError::NegativeRadius { r });
        }
        match self {
            Self::Power { exponent, coefficient } => Ok(coefficient * r.powf(*exponent)),
            Self::Tabulated { radii, values } => {
                let r_table = *radii.last().unwrap();
                if r > r_table {
                    return Err(TrapError::BeyondTable { r, r_table });
                }
                Ok(interp_linear(radii, values, r))
            }
        }
    }

    /// Internal fast path for radii already known to be valid.
    pub(crate) fn eval_at(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match self {
            Self::Power { exponent, coefficient } => coefficient * r.powf(*exponent),
            Self::Tabulated { radii, values } => interp_linear(radii, values, r.min(*radii.last().unwrap())),
        }
    }
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    // x lies strictly between xs[i-1] and xs[i]; callers guarantee in-range.
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Evaluates the trap at radius r. Fails on negative radius or, for tabulated
/// traps, beyond the table.
pub fn eval_trap(trap: &TrapPotential, r: f64) -> Result<f64, TrapError> {
    trap.eval(r)
}
