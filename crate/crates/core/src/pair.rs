//! Repulsive, finite-range pair potentials and their scattering-length-
//! preserving rescaling.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PairError {
    #[error("length scale must be positive and finite, got {value}")]
    NonPositiveLength { value: f64 },
    #[error("soft-sphere height must be positive and finite, got {value}")]
    NonPositiveHeight { value: f64 },
    #[error("tabulated pair potential needs >= 2 samples, strictly increasing radii, nonnegative finite values, and value 0 at the last sample")]
    InvalidTable,
}

/// Radial two-body potential v(|x_i - x_j|) >= 0 with finite range.
#[derive(Debug, Clone, PartialEq)]
pub enum PairPotential {
    /// Infinite wall for r <= core_radius, zero beyond.
    HardCore { core_radius: f64 },
    /// Constant barrier of the given height for r <= radius, zero beyond.
    SoftSphere { height: f64, radius: f64 },
    /// Piecewise-linear table on [radii[0], radii.last()]; zero outside.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl PairPotential {
    pub fn hard_core(core_radius: f64) -> Result<Self, PairError> {
        check_length(core_radius)?;
        Ok(Self::HardCore { core_radius })
    }

    pub fn soft_sphere(height: f64, radius: f64) -> Result<Self, PairError> {
        check_length(radius)?;
        if height <= 0.0 || !height.is_finite() {
            return Err(PairError::NonPositiveHeight { value: height });
        }
        Ok(Self::SoftSphere { height, radius })
    }

    /// Tabulated repulsive potential. The last sample must be 0 so the range
    /// is unambiguous; values are linearly interpolated between samples and
    /// zero beyond the table.
    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self, PairError> {
        let ok = radii.len() >= 2
            && radii.len() == values.len()
            && radii[0] >= 0.0
            && radii.windows(2).all(|w| w[1] > w[0] && w[1].is_finite())
            && values.iter().all(|v| v.is_finite() && *v >= 0.0)
            && *values.last().unwrap() == 0.0;
        if !ok {
            return Err(PairError::InvalidTable);
        }
        Ok(Self::Tabulated { radii, values })
    }

    /// v(r). Inside a hard core this is positive infinity.
    pub fn eval(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "pair potential evaluated at negative separation {r}");
        match self {
            Self::HardCore { core_radius } => {
                if r <= *core_radius {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Self::SoftSphere { height, radius } => {
                if r <= *radius {
                    *height
                } else {
                    0.0
                }
            }
            Self::Tabulated { radii, values } => {
                if r <= radii[0] {
                    values[0]
                } else if r >= *radii.last().unwrap() {
                    0.0
                } else {
                    let i = radii.partition_point(|p| *p < r);
                    let t = (r - radii[i - 1]) / (radii[i] - radii[i - 1]);
                    values[i - 1] + t * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// Radius beyond which v vanishes identically.
    pub fn range(&self) -> f64 {
        match self {
            Self::HardCore { core_radius } => *core_radius,
            Self::SoftSphere { radius, .. } => *radius,
            Self::Tabulated { radii, .. } => radii.last().copied().unwrap(),
        }
    }

    pub fn is_hard_core(&self) -> bool {
        matches!(self, Self::HardCore { .. })
    }

    /// Core radius for hard-core potentials, otherwise None.
    pub fn core_radius(&self) -> Option<f64> {
        match self {
            Self::HardCore { core_radius } => Some(*core_radius),
            _ => None,
        }
    }
}

fn check_length(value: f64) -> Result<(), PairError> {
    if value <= 0.0 || !value.is_finite() {
        return Err(PairError::NonPositiveLength { value });
    }
    Ok(())
}

/// Rescales a pair potential so its scattering length becomes `a_target`,
/// keeping the dimensionless shape fixed: v(r) = (a1/a)^2 v1(a1 r / a) with
/// a1 = `a_current` (the measured scattering length of `v`).
///
/// Lengths scale by a/a1 and energies by (a1/a)^2, so hard cores map to hard
/// cores and soft spheres to soft spheres.
pub fn scale_pair_potential(
    v: &PairPotential,
    a_current: f64,
    a_target: f64,
) -> Result<PairPotential, PairError> {
    check_length(a_current)?;
    check_length(a_target)?;
    let length_ratio = a_target / a_current;
    let energy_ratio = (a_current / a_target).powi(2);
    Ok(match v {
        PairPotential::HardCore { core_radius } => PairPotential::HardCore {
            core_radius: core_radius * length_ratio,
        },
        PairPotential::SoftSphere { height, radius } => PairPotential::SoftSphere {
            height: height * energy_ratio,
            radius: radius * length_ratio,
        },
        PairPotential::Tabulated { radii, values } => PairPotential::Tabulated {
            radii: radii.iter().map(|r| r * length_ratio).collect(),
            values: values.iter().map(|v| v * energy_ratio).collect(),
        },
    })
}
