//! Uniform radial grids and quadrature with the S_D r^(D-1) surface measure.

use thiserror::Error;

use crate::surface_area;

/// Fewest nodes a grid may have; below this quadrature and finite differences
/// are meaningless.
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("unsupported dimension {dimension}: only D = 2 and D = 3 are implemented")]
    InvalidDimension { dimension: usize },
    #[error("grid extent must be positive and finite, got r_max = {r_max}")]
    NonPositiveExtent { r_max: f64 },
    #[error("grid needs at least {minimum} points, got {n_points}")]
    TooFewPoints { n_points: usize, minimum: usize },
    #[error("profile has {actual} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Uniform grid on [0, r_max] with nodes r_k = k·h, h = r_max/(n_points - 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dimension: usize,
    r_max: f64,
    n_points: usize,
    spacing: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dimension: usize, r_max: f64, n_points: usize) -> Result<Self, GridError> {
        if dimension != 2 && dimension != 3 {
            return Err(GridError::InvalidDimension { dimension });
        }
        if r_max <= 0.0 || !r_max.is_finite() {
            return Err(GridError::NonPositiveExtent { r_max });
        }
        if n_points < MIN_POINTS {
            return Err(GridError::TooFewPoints {
                n_points,
                minimum: MIN_POINTS,
            });
        }
        let spacing = r_max / (n_points - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_points).map(|k| k as f64 * spacing).collect();
        // k·h can land one ulp off r_max; the last node is r_max by contract.
        nodes[n_points - 1] = r_max;
        Ok(Self {
            dimension,
            r_max,
            n_points,
            spacing,
            nodes,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Checks that `values` is one value per node.
    pub fn check_len(&self, values: &[f64]) -> Result<(), GridError> {
        if values.len() != self.n_points {
            return Err(GridError::LengthMismatch {
                expected: self.n_points,
                actual: values.len(),
            });
        }
        Ok(())
    }
}

/// Builds a uniform radial grid for dimension D on [0, r_max].
pub fn build_radial_grid(
    dimension: usize,
    r_max: f64,
    n_points: usize,
) -> Result<RadialGrid, GridError> {
    RadialGrid::new(dimension, r_max, n_points)
}

/// Node weights m_k such that ∫ f r^(D-1) dr ≈ Σ m_k f(r_k), without the
/// surface factor S_D. Composite Simpson when the interval count is even,
/// trapezoid otherwise.
pub(crate) fn measure_weights(grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n_points();
    let h = grid.spacing();
    let d = grid.dimension() as i32;
    let simpson = (n - 1).is_multiple_of(2);
    (0..n)
        .map(|k| {
            let q = if simpson {
                if k == 0 || k == n - 1 {
                    h / 3.0
                } else if k % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                }
            } else if k == 0 || k == n - 1 {
                h / 2.0
            } else {
                h
            };
            q * grid.nodes()[k].powi(d - 1)
        })
        .collect()
}

/// Radial integral ∫ f(|x|) dx = S_D ∫ f(r) r^(D-1) dr over the grid extent.
///
/// Composite Simpson on the uniform grid; falls back to the trapezoid rule
/// when the interval count is odd (even n_points).
pub fn radial_integral(grid: &RadialGrid, values: &[f64]) -> Result<f64, GridError> {
    grid.check_len(values)?;
    let weights = measure_weights(grid);
    let sum: f64 = weights.iter().zip(values).map(|(w, v)| w * v).sum();
    Ok(surface_area(grid.dimension()) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volume_3d() {
        let grid = build_radial_grid(3, 1.0, 101).unwrap();
        let ones = vec![1.0; grid.n_points()];
        let volume = radial_integral(&grid, &ones).unwrap();
        // Simpson is exact for r^2, so this is exact up to rounding.
        assert_relative_eq!(volume, 4.0 * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn unit_disk_area_2d() {
        let grid = build_radial_grid(2, 1.0, 101).unwrap();
        let ones = vec![1.0; grid.n_points()];
        assert_relative_eq!(radial_integral(&grid, &ones).unwrap(), PI, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_integral_3d() {
        // ∫ exp(-r^2) d^3x = π^(3/2); the tail beyond r_max = 12 is ~1e-63.
        let grid = build_radial_grid(3, 12.0, 2001).unwrap();
        let values: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
        let integral = radial_integral(&grid, &values).unwrap();
        assert_relative_eq!(integral, PI.powf(1.5), max_relative = 1e-12);
    }

    #[test]
    fn gaussian_integral_2d() {
        // ∫ exp(-r^2) d^2x = π. The integrand r·exp(-r^2) has a nonzero third
        // derivative at r = 0, so the Simpson boundary term needs a finer grid
        // than the 3D case to reach the same tolerance.
        let grid = build_radial_grid(2, 12.0, 8001).unwrap();
        let values: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
        assert_relative_eq!(radial_integral(&grid, &values).unwrap(), PI, max_relative = 1e-12);
    }

    #[test]
    fn integral_is_linear() {
        let grid = build_radial_grid(3, 5.0, 201).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|r| (1.0 + r).ln()).collect();
        let g: Vec<f64> = grid.nodes().iter().map(|r| (-0.3 * r).exp()).collect();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.5 * a - 0.7 * b).collect();
        let lhs = radial_integral(&grid, &combo).unwrap();
        let rhs = 2.5 * radial_integral(&grid, &f).unwrap() - 0.7 * radial_integral(&grid, &g).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
    }

    /// ∫_0^R r^2 cos r dr = (R^2 - 2) sin R + 2 R cos R, used to measure the
    /// convergence order on a non-polynomial integrand.
    fn cos_moment_exact(r_max: f64) -> f64 {
        4.0 * PI * ((r_max * r_max - 2.0) * r_max.sin() + 2.0 * r_max * r_max.cos())
    }

    fn cos_moment_error(n_points: usize) -> f64 {
        let r_max = 3.0;
        let grid = build_radial_grid(3, r_max, n_points).unwrap();
        let values: Vec<f64> = grid.nodes().iter().map(|r| r.cos()).collect();
        (radial_integral(&grid, &values).unwrap() - cos_moment_exact(r_max)).abs()
    }

    #[test]
    fn simpson_converges_at_least_second_order() {
        // Odd point counts keep the interval count even, so Simpson applies;
        // the observed order is ~4 but the contract only promises >= 2.
        let coarse = cos_moment_error(101);
        let fine = cos_moment_error(201);
        let order = (coarse / fine).log2();
        assert!(order >= 2.0, "observed order {order}, errors {coarse} -> {fine}");
    }

    #[test]
    fn trapezoid_fallback_converges_at_least_second_order() {
        // Even point counts mean an odd interval count: the trapezoid branch.
        let coarse = cos_moment_error(100);
        let fine = cos_moment_error(200);
        let order = (coarse / fine).log2();
        assert!(
            (1.9..3.0).contains(&order),
            "trapezoid branch should be close to second order, observed {order}"
        );
    }

    #[test]
    fn grid_validation_errors() {
        assert_eq!(
            build_radial_grid(4, 1.0, 64).unwrap_err(),
            GridError::InvalidDimension { dimension: 4 }
        );
        assert_eq!(
            build_radial_grid(3, 0.0, 64).unwrap_err(),
            GridError::NonPositiveExtent { r_max: 0.0 }
        );
        assert_eq!(
            build_radial_grid(3, 1.0, 8).unwrap_err(),
            GridError::TooFewPoints { n_points: 8, minimum: MIN_POINTS }
        );
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let grid = build_radial_grid(3, 1.0, 64).unwrap();
        let err = radial_integral(&grid, &[1.0; 63]).unwrap_err();
        assert_eq!(err, GridError::LengthMismatch { expected: 64, actual: 63 });
    }

    #[test]
    fn nodes_start_at_zero_and_end_at_r_max() {
        let grid = build_radial_grid(2, 7.3, 97).unwrap();
        assert_eq!(grid.nodes()[0], 0.0);
        assert_eq!(grid.nodes()[96], 7.3);
        let h = grid.spacing();
        for (k, r) in grid.nodes().iter().enumerate().take(96) {
            assert_relative_eq!(*r, k as f64 * h, max_relative = 1e-15);
        }
    }
}
