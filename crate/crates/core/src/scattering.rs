//! Zero-energy two-body scattering: radial profile and scattering length.
//!
//! The relative-motion equation at zero energy, with the pair reduced mass in
//! hbar = 2m = 1 units, is
//!
//! ```text
//! -2 f0'' - 2 (D-1)/r f0' + v(r) f0 = 0
//! ```
//!
//! Outside the range of v the solution is exactly A(1 - a/r) in 3D and
//! A·ln(r/a) in 2D; the scattering length a is read off a least-squares fit of
//! that form over the outer quarter of the grid. Profiles are normalized so
//! the fitted amplitude A is 1.

use thiserror::Error;

use crate::grid::{GridError, RadialGrid};
use crate::interp::CubicHermite;
use crate::pair::PairPotential;

/// Required ratio r_max / range(v): the fit window must sit far outside the
/// potential.
const MIN_EXTENT_RATIO: f64 = 4.0;
/// Required ratio range(v) / step for the RK4 march to resolve the potential.
const MIN_STEPS_PER_RANGE: f64 = 200.0;

#[derive(Debug, Error, PartialEq)]
pub enum ScatteringError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("potential range {range} exceeds r_max/{MIN_EXTENT_RATIO} = {max_range}: enlarge the grid")]
    RangeExceedsGrid { range: f64, max_range: f64 },
    #[error("grid step {step} too coarse to integrate across the potential: need step <= {max_step}")]
    StepTooCoarse { step: f64, max_step: f64 },
    #[error("tail fit produced a non-positive amplitude; the profile is not in the asymptotic regime")]
    FitFailed,
}

/// Zero-energy scattering solution for one pair potential.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    dimension: usize,
    potential: PairPotential,
    grid: RadialGrid,
    profile: Vec<f64>,
    scattering_length: f64,
    match_radius: f64,
    fit_residual: f64,
    /// f0 and f0' on the integration nodes, normalized to unit amplitude.
    hermite: CubicHermite,
    /// Radius below which f0 vanishes (hard core), else 0.
    zero_below: f64,
}

impl ScatteringSolution {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn potential(&self) -> &PairPotential {
        &self.potential
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// f0 sampled on the grid nodes, unit asymptotic amplitude.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// The scattering length a.
    pub fn scattering_length(&self) -> f64 {
        self.scattering_length
    }

    /// Start of the asymptotic fit window (outer quarter of the grid).
    pub fn match_radius(&self) -> f64 {
        self.match_radius
    }

    /// RMS deviation of f0 from the fitted asymptote over the fit window,
    /// in units of the (unit) amplitude.
    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    /// Evaluates f0 at any radius r >= 0.
    ///
    /// Inside a hard core this is 0; across the integrated band it is a C^1
    /// cubic through the integrator's values and derivatives; beyond the grid
    /// it continues with the exact free-space form 1 - a/r (3D) or ln(r/a)
    /// (2D), which matches the profile because that is what the profile decays
    /// into.
    pub fn eval(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "scattering profile evaluated at negative radius {r}");
        if r <= self.zero_below {
            return 0.0;
        }
        if r <= self.hermite.x_max() {
            return self.hermite.eval(r);
        }
        match self.dimension {
            3 => 1.0 - self.scattering_length / r,
            _ => (r / self.scattering_length).ln(),
        }
    }
}

/// Integrates the zero-energy equation outward and extracts the scattering
/// length from the asymptotic tail.
///
/// Requires r_max >= 4·range(v) and a grid step no coarser than range/200.
pub fn zero_energy_profile(
    v: &PairPotential,
    dimension: usize,
    r_max: f64,
    n_points: usize,
) -> Result<ScatteringSolution, ScatteringError> {
    let grid = RadialGrid::new(dimension, r_max, n_points)?;
    let range = v.range();
    if r_max < MIN_EXTENT_RATIO * range {
        return Err(ScatteringError::RangeExceedsGrid {
            range,
            max_range: r_max / MIN_EXTENT_RATIO,
        });
    }
    let h = grid.spacing();
    if range / h < MIN_STEPS_PER_RANGE {
        return Err(ScatteringError::StepTooCoarse {
            step: h,
            max_step: range / MIN_STEPS_PER_RANGE,
        });
    }

    let (x0, values, derivs) = integrate_outward(v, dimension, r_max, h);
    let mut hermite = CubicHermite::new(x0, h, values, derivs);
    let zero_below = if v.is_hard_core() { range } else { 0.0 };

    let raw_profile: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| if r < zero_below { 0.0 } else { hermite.eval(r) })
        .collect();

    // Least-squares tail fit over the outer quarter of the grid.
    let window: Vec<usize> = (0..n_points)
        .filter(|&k| grid.nodes()[k] >= 0.75 * r_max)
        .collect();
    let (amplitude, scattering_length) = fit_tail(dimension, &grid, &raw_profile, &window)?;

    let profile: Vec<f64> = raw_profile.iter().map(|f| f / amplitude).collect();
    hermite.scale(1.0 / amplitude);

    let asymptote = |r: f64| match dimension {
        3 => 1.0 - scattering_length / r,
        _ => (r / scattering_length).ln(),
    };
    let fit_residual = (window
        .iter()
        .map(|&k| (profile[k] - asymptote(grid.nodes()[k])).powi(2))
        .sum::<f64>()
        / window.len() as f64)
        .sqrt();
    let match_radius = grid.nodes()[window[0]];

    Ok(ScatteringSolution {
        dimension,
        potential: v.clone(),
        grid,
        profile,
        scattering_length,
        match_radius,
        fit_residual,
        hermite,
        zero_below,
    })
}

/// A sensible default grid for a potential: r_max = 8·range, step = range/400.
pub fn default_scattering_grid(v: &PairPotential) -> (f64, usize) {
    let r_max = 8.0 * v.range();
    (r_max, 3201)
}

/// RK4 march of the zero-energy equation from the innermost regular point,
/// on uniform nodes x0 + k·h extending one step past r_max.
/// Returns (x0, f0 values, f0 derivatives).
fn integrate_outward(v: &PairPotential, dimension: usize, r_max: f64, h: f64) -> (f64, Vec<f64>, Vec<f64>) {
    // Inside a hard core the equation is replaced by f0 = 0 and the march
    // starts on the core surface, where v is identically zero outside.
    let hard = v.is_hard_core();

    match (dimension, hard) {
        (3, _) => {
            // u = r f0 turns the equation into u'' = v u / 2, regular at 0.
            let start = if hard { v.range() } else { 0.0 };
            let rhs = |_r: f64, y: [f64; 2], g: f64| [y[1], 0.5 * g * y[0]];
            let steps = ((r_max - start) / h).ceil() as usize + 1;
            let ys = march(v, start, h, [0.0, 1.0], steps, rhs);
            let mut values = Vec::with_capacity(ys.len());
            let mut derivs = Vec::with_capacity(ys.len());
            for (j, [u, du]) in ys.into_iter().enumerate() {
                let r = start + j as f64 * h;
                if r == 0.0 {
                    // f0(0) = u'(0), f0'(0) = 0 for the regular solution.
                    values.push(du);
                    derivs.push(0.0);
                } else {
                    let f = u / r;
                    values.push(f);
                    derivs.push((du - f) / r);
                }
            }
            (start, values, derivs)
        }
        (_, true) => {
            // 2D hard disk: march (f0, p = r f0') from the core surface.
            let start = v.range();
            let rhs = |r: f64, y: [f64; 2], g: f64| [y[1] / r, 0.5 * g * r * y[0]];
            let steps = ((r_max - start) / h).ceil() as usize + 1;
            let ys = march(v, start, h, [0.0, start], steps, rhs);
            split_2d(start, h, ys, false)
        }
        _ => {
            // 2D regular potential: series start one step out,
            // f0(ε) = 1 + v(0)ε²/8, p(ε) = v(0)ε²/4.
            let eps = h;
            let v0 = v.eval(0.0);
            let rhs = |r: f64, y: [f64; 2], g: f64| [y[1] / r, 0.5 * g * r * y[0]];
            let steps = ((r_max - eps) / h).ceil() as usize + 1;
            let ys = march(v, eps, h, [1.0 + v0 * eps * eps / 8.0, v0 * eps * eps / 4.0], steps, rhs);
            split_2d(eps, h, ys, true)
        }
    }
}

/// Unpacks 2D (f0, p) states into values/derivatives, optionally prepending
/// the exact regular-origin node (f0 = 1, f0' = 0).
fn split_2d(start: f64, h: f64, ys: Vec<[f64; 2]>, prepend_origin: bool) -> (f64, Vec<f64>, Vec<f64>) {
    let mut values = Vec::with_capacity(ys.len() + 1);
    let mut derivs = Vec::with_capacity(ys.len() + 1);
    if prepend_origin {
        values.push(1.0);
        derivs.push(0.0);
    }
    for (j, [f, p]) in ys.into_iter().enumerate() {
        let r = start + j as f64 * h;
        values.push(f);
        derivs.push(p / r);
    }
    let x0 = if prepend_origin { 0.0 } else { start };
    (x0, values, derivs)
}

/// Fixed-node RK4 march; returns the state at every node including the start.
///
/// The rhs takes (r, state, v(r)) so the potential value at each stage can be
/// supplied one-sided. A soft sphere is discontinuous at its edge, and letting
/// a stage straddle or touch the jump with the wrong side's value drops the
/// integrator to first order; steps there are split at the edge and each piece
/// uses the constant value of its own side.
fn march(
    v: &PairPotential,
    start: f64,
    h: f64,
    y0: [f64; 2],
    steps: usize,
    rhs: impl Fn(f64, [f64; 2], f64) -> [f64; 2],
) -> Vec<[f64; 2]> {
    let sphere = match v {
        PairPotential::SoftSphere { height, radius } => Some((*height, *radius)),
        _ => None,
    };
    let hard = v.is_hard_core();
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    for j in 0..steps {
        let a = start + j as f64 * h;
        let b = a + h;
        y = match sphere {
            Some((v0, d)) if b <= d => rk4_step(&rhs, |_| v0, a, h, y),
            Some((_, d)) if a >= d => rk4_step(&rhs, |_| 0.0, a, h, y),
            Some((v0, d)) => {
                let at_edge = rk4_step(&rhs, |_| v0, a, d - a, y);
                rk4_step(&rhs, |_| 0.0, d, b - d, at_edge)
            }
            None if hard => rk4_step(&rhs, |_| 0.0, a, h, y),
            None => rk4_step(&rhs, |r| v.eval(r), a, h, y),
        };
        out.push(y);
    }
    out
}

/// One classic RK4 step of size h from r, with v supplied by `vf`.
fn rk4_step(
    rhs: &impl Fn(f64, [f64; 2], f64) -> [f64; 2],
    vf: impl Fn(f64) -> f64,
    r: f64,
    h: f64,
    y: [f64; 2],
) -> [f64; 2] {
    let k1 = rhs(r, y, vf(r));
    let rm = r + 0.5 * h;
    let k2 = rhs(rm, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]], vf(rm));
    let k3 = rhs(rm, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]], vf(rm));
    let re = r + h;
    let k4 = rhs(re, [y[0] + h * k3[0], y[1] + h * k3[1]], vf(re));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Linear least squares of the free-space form over the window nodes.
/// 3D: r·f0 = A·r - A·a.  2D: f0 = A·ln r - A·ln a.
/// Returns (A, a).
fn fit_tail(
    dimension: usize,
    grid: &RadialGrid,
    profile: &[f64],
    window: &[usize],
) -> Result<(f64, f64), ScatteringError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = window
        .iter()
        .map(|&k| {
            let r = grid.nodes()[k];
            match dimension {
                3 => (r, r * profile[k]),
                _ => (r.ln(), profile[k]),
            }
        })
        .unzip();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    if slope <= 0.0 || !slope.is_finite() {
        return Err(ScatteringError::FitFailed);
    }
    let a = match dimension {
        3 => -intercept / slope,
        _ => (-intercept / slope).exp(),
    };
    Ok((slope, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Soft-sphere scattering length in 3D: matching sinh(κr) inside to the
    /// linear free solution at the sphere edge gives
    /// a = r0 (1 - tanh(κ r0)/(κ r0)), κ = sqrt(v0/2).
    fn soft_sphere_length_3d(v0: f64, r0: f64) -> f64 {
        let kappa = (v0 / 2.0).sqrt();
        r0 * (1.0 - (kappa * r0).tanh() / (kappa * r0))
    }

    /// Modified Bessel I0 by its power series (fine for x <= 15).
    fn bessel_i0(x: f64) -> f64 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= q / ((k * k) as f64);
            sum += term;
        }
        sum
    }

    /// Modified Bessel I1 by its power series.
    fn bessel_i1(x: f64) -> f64 {
        let q = x * x / 4.0;
        let mut term = x / 2.0;
        let mut sum = term;
        for k in 1..60 {
            term *= q / ((k * (k + 1)) as f64);
            sum += term;
        }
        sum
    }

    /// Soft-disk scattering length in 2D: matching I0(κr) inside to
    /// A·ln(r/a) at the edge gives a = r0 exp(-I0(κr0)/(κ r0 I1(κr0))).
    fn soft_disk_length_2d(v0: f64, r0: f64) -> f64 {
        let kappa = (v0 / 2.0).sqrt();
        let x = kappa * r0;
        r0 * (-bessel_i0(x) / (x * bessel_i1(x))).exp()
    }

    #[test]
    fn hard_core_3d_scattering_length_is_the_core_radius() {
        let v = PairPotential::hard_core(0.1).unwrap();
        let sol = zero_energy_profile(&v, 3, 0.8, 3201).unwrap();
        // Outside the core the marched solution is exactly linear, so the
        // extraction is exact to rounding.
        assert_relative_eq!(sol.scattering_length(), 0.1, max_relative = 1e-12);
        assert!(sol.fit_residual() < 1e-12);
    }

    #[test]
    fn hard_disk_2d_scattering_length_is_the_core_radius() {
        let v = PairPotential::hard_core(0.1).unwrap();
        let sol = zero_energy_profile(&v, 2, 0.8, 3201).unwrap();
        assert_relative_eq!(sol.scattering_length(), 0.1, max_relative = 1e-9);
        assert!(sol.fit_residual() < 1e-8);
    }

    #[test]
    fn soft_sphere_3d_matches_the_closed_form() {
        let r0 = 0.2;
        for kappa_r0 in [0.5, 2.0, 10.0] {
            let kappa = kappa_r0 / r0;
            let v0 = 2.0 * kappa * kappa;
            let v = PairPotential::soft_sphere(v0, r0).unwrap();
            let sol = zero_energy_profile(&v, 3, 1.6, 3201).unwrap();
            let exact = soft_sphere_length_3d(v0, r0);
            assert_relative_eq!(sol.scattering_length(), exact, max_relative = 1e-7);
        }
    }

    #[test]
    fn soft_disk_2d_matches_the_closed_form() {
        let r0 = 0.2;
        for kappa_r0 in [0.5, 2.0, 10.0] {
            let kappa: f64 = kappa_r0 / r0;
            let v0 = 2.0 * kappa * kappa;
            let v = PairPotential::soft_sphere(v0, r0).unwrap();
            let sol = zero_energy_profile(&v, 2, 1.6, 6401).unwrap();
            let exact = soft_disk_length_2d(v0, r0);
            assert_relative_eq!(sol.scattering_length(), exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn repulsive_length_is_positive_and_at_most_the_range() {
        for (v, dim) in [
            (PairPotential::hard_core(0.05).unwrap(), 3),
            (PairPotential::soft_sphere(500.0, 0.1).unwrap(), 3),
            (PairPotential::soft_sphere(500.0, 0.1).unwrap(), 2),
        ] {
            let (r_max, n) = default_scattering_grid(&v);
            let sol = zero_energy_profile(&v, dim, r_max, n).unwrap();
            assert!(sol.scattering_length() > 0.0);
            assert!(sol.scattering_length() <= v.range());
        }
    }

    #[test]
    fn profile_is_nonnegative_and_nondecreasing_outside_the_range() {
        let v = PairPotential::soft_sphere(200.0, 0.2).unwrap();
        let sol = zero_energy_profile(&v, 3, 1.6, 3201).unwrap();
        let nodes = sol.grid().nodes();
        let mut last = -1.0;
        for (k, &r) in nodes.iter().enumerate() {
            assert!(sol.profile()[k] >= 0.0, "negative profile at r = {r}");
            if r > v.range() {
                assert!(sol.profile()[k] >= last, "profile decreased at r = {r}");
                last = sol.profile()[k];
            }
        }
    }

    #[test]
    fn scaled_potential_reproduces_the_target_length() {
        // The scaling family stretches lengths by a/a1 and heights by
        // (a1/a)^2, which maps zero-energy solutions onto each other exactly.
        let v1 = PairPotential::soft_sphere(200.0, 0.2).unwrap();
        let (r_max, n) = default_scattering_grid(&v1);
        let a1 = zero_energy_profile(&v1, 3, r_max, n).unwrap().scattering_length();
        for factor in [0.1, 1.0, 10.0] {
            let target = factor * a1;
            let v = crate::pair::scale_pair_potential(&v1, a1, target).unwrap();
            let (r_max, n) = default_scattering_grid(&v);
            let sol = zero_energy_profile(&v, 3, r_max, n).unwrap();
            assert_relative_eq!(sol.scattering_length(), target, max_relative = 1e-9);
        }
    }

    #[test]
    fn tabulated_staircase_approaches_its_soft_sphere() {
        // A finely tabulated soft sphere (sharp edge replaced by a ramp one
        // table cell wide) should land near the closed form.
        let (v0, r0) = (200.0, 0.2);
        let m = 2000;
        let radii: Vec<f64> = (0..=m).map(|j| r0 * j as f64 / (m - 1) as f64).collect();
        let values: Vec<f64> = (0..=m).map(|j| if j < m { v0 } else { 0.0 }).collect();
        let v = PairPotential::tabulated(radii, values).unwrap();
        let (r_max, n) = default_scattering_grid(&v);
        let sol = zero_energy_profile(&v, 3, r_max, n).unwrap();
        let exact = soft_sphere_length_3d(v0, r0);
        assert_relative_eq!(sol.scattering_length(), exact, max_relative = 2e-2);
    }

    #[test]
    fn eval_continues_smoothly_past_the_grid() {
        let v = PairPotential::soft_sphere(200.0, 0.2).unwrap();
        let sol = zero_energy_profile(&v, 3, 1.6, 3201).unwrap();
        let a = sol.scattering_length();
        // At the asymptote the profile equals 1 - a/r on and beyond the grid.
        assert_relative_eq!(sol.eval(1.5), 1.0 - a / 1.5, epsilon = 1e-9);
        assert_relative_eq!(sol.eval(5.0), 1.0 - a / 5.0, epsilon = 1e-12);
        // And inside a hard core the profile vanishes.
        let wall = PairPotential::hard_core(0.1).unwrap();
        let sol = zero_energy_profile(&wall, 3, 0.8, 3201).unwrap();
        assert_eq!(sol.eval(0.05), 0.0);
    }

    #[test]
    fn grid_preconditions_are_enforced() {
        let v = PairPotential::soft_sphere(200.0, 0.5).unwrap();
        assert!(matches!(
            zero_energy_profile(&v, 3, 1.0, 3201),
            Err(ScatteringError::RangeExceedsGrid { .. })
        ));
        assert!(matches!(
            zero_energy_profile(&v, 3, 4.0, 1001),
            Err(ScatteringError::StepTooCoarse { .. })
        ));
        assert!(matches!(
            zero_energy_profile(&v, 5, 4.0, 3201),
            Err(ScatteringError::Grid(GridError::InvalidDimension { dimension: 5 }))
        ));
    }
}
