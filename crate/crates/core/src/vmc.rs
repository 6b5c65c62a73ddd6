//! Variational Monte Carlo upper bound for small particle numbers.
//!
//! The trial state is a pair-correlated product
//!
//! ```text
//! Psi(x_1..x_N) = prod_i Phi(|x_i|) * prod_{i>=2} f(t_i),
//! t_i = min_{j<i} |x_i - x_j|
//! ```
//!
//! where Phi is a converged mean-field orbital and f is the zero-energy pair
//! profile cut off at a healing distance b and clamped to 1 beyond, so each
//! particle correlates only with its nearest predecessor. The expectation of
//! the local energy
//!
//! ```text
//! E_L = -sum_i [lap_i ln Psi + |grad_i ln Psi|^2] + sum_i V + sum_{i<j} v
//! ```
//!
//! over |Psi|^2 is an upper bound on the ground-state energy for any trial
//! state, symmetric or not. Derivatives are taken by central finite
//! differences of ln Psi, and |Psi|^2 is sampled by a single-particle
//! Metropolis walk with a step size tuned during burn-in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::coupling::mean_gp_density;
use crate::gp::GpState;
use crate::grid::radial_integral;
use crate::interp::CubicSpline;
use crate::pair::PairPotential;
use crate::scattering::ScatteringSolution;
use crate::surface_area;
use crate::trap::TrapPotential;

#[derive(Debug, Error, PartialEq)]
pub enum VmcError {
    #[error("orbit and pair profile live in different dimensions: {trial} vs {other}")]
    DimensionMismatch { trial: usize, other: usize },
    #[error("orbital is not positive at node {node}; cannot take its logarithm")]
    NonPositiveProfile { node: usize },
    #[error("pair cutoff {cutoff} does not exceed the scattering length {scattering_length}; the gas is not dilute")]
    CutoffNotAboveLength { cutoff: f64, scattering_length: f64 },
    #[error("cutoff multiplier must be positive and finite, got {multiplier}")]
    BadCutoffMultiplier { multiplier: f64 },
    #[error("bad sampler options: {reason}")]
    BadOptions { reason: String },
    #[error("could not seed a configuration with nonzero weight after {attempts} attempts")]
    InitFailed { attempts: usize },
}

/// Positions of N particles, flattened as n_particles * dimension coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub dimension: usize,
    pub coords: Vec<f64>,
}

impl Configuration {
    pub fn zeros(dimension: usize, n_particles: usize) -> Self {
        Self {
            dimension,
            coords: vec![0.0; dimension * n_particles],
        }
    }

    pub fn n_particles(&self) -> usize {
        self.coords.len() / self.dimension
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.position(i).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.position(i)
            .iter()
            .zip(self.position(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

struct PairFactor {
    profile: ScatteringSolution,
    cutoff: f64,
    ln_at_cutoff: f64,
}

/// The pair-correlated trial state built from a mean-field orbital and,
/// optionally, a zero-energy pair profile.
pub struct TrialFunction {
    dimension: usize,
    log_orbital: CubicSpline,
    pair: Option<PairFactor>,
    /// Density-weighted mean radius of the orbital, used to seed walkers.
    typical_radius: f64,
}

impl TrialFunction {
    /// Pair-correlated trial with the cutoff at the mean interparticle
    /// distance rho_bar^(-1/D).
    pub fn new(orbital: &GpState, pair_profile: &ScatteringSolution) -> Result<Self, VmcError> {
        Self::with_cutoff_multiplier(orbital, pair_profile, 1.0)
    }

    /// Same, with the cutoff at multiplier * rho_bar^(-1/D).
    pub fn with_cutoff_multiplier(
        orbital: &GpState,
        pair_profile: &ScatteringSolution,
        multiplier: f64,
    ) -> Result<Self, VmcError> {
        if multiplier <= 0.0 || !multiplier.is_finite() {
            return Err(VmcError::BadCutoffMultiplier { multiplier });
        }
        let dimension = orbital.grid.dimension();
        if pair_profile.dimension() != dimension {
            return Err(VmcError::DimensionMismatch {
                trial: dimension,
                other: pair_profile.dimension(),
            });
        }
        let rho_bar = mean_gp_density(orbital);
        let cutoff = multiplier * rho_bar.powf(-1.0 / dimension as f64);
        let value_at_cutoff = pair_profile.eval(cutoff);
        if value_at_cutoff <= 0.0 {
            return Err(VmcError::CutoffNotAboveLength {
                cutoff,
                scattering_length: pair_profile.scattering_length(),
            });
        }
        let mut trial = Self::without_pair_factor(orbital)?;
        trial.pair = Some(PairFactor {
            profile: pair_profile.clone(),
            cutoff,
            ln_at_cutoff: value_at_cutoff.ln(),
        });
        Ok(trial)
    }

    /// Bare product of orbitals, exact for the noninteracting gas.
    pub fn without_pair_factor(orbital: &GpState) -> Result<Self, VmcError> {
        let n = orbital.grid.n_points();
        // The last node is pinned to zero by the solver; the logarithm runs
        // over the free nodes and anything beyond is rejected outright.
        let mut ln_values = Vec::with_capacity(n - 1);
        for (node, &p) in orbital.phi[..n - 1].iter().enumerate() {
            if p <= 0.0 || !p.is_finite() {
                return Err(VmcError::NonPositiveProfile { node });
            }
            ln_values.push(p.ln());
        }
        let log_orbital = CubicSpline::new(0.0, orbital.grid.spacing(), ln_values, 0.0);
        let weighted_radius: Vec<f64> = orbital
            .grid
            .nodes()
            .iter()
            .zip(&orbital.phi)
            .map(|(&r, &p)| r * p * p)
            .collect();
        let typical_radius = radial_integral(&orbital.grid, &weighted_radius)
            .expect("state arrays are grid-sized")
            / orbital.particle_number;
        Ok(Self {
            dimension: orbital.grid.dimension(),
            log_orbital,
            pair: None,
            typical_radius,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Healing cutoff b of the pair factor (0 without one).
    pub fn cutoff(&self) -> f64 {
        self.pair.as_ref().map_or(0.0, |p| p.cutoff)
    }

    /// ln Phi(r); minus infinity beyond the orbital grid.
    pub fn log_orbital(&self, r: f64) -> f64 {
        if r > self.log_orbital.x_max() {
            return f64::NEG_INFINITY;
        }
        self.log_orbital.eval(r)
    }

    /// ln f(t) of the cutoff pair factor; 0 beyond the cutoff, minus
    /// infinity inside a hard core.
    pub fn log_pair_factor(&self, t: f64) -> f64 {
        match &self.pair {
            None => 0.0,
            Some(pair) => {
                if t >= pair.cutoff {
                    0.0
                } else {
                    let f = pair.profile.eval(t);
                    if f > 0.0 {
                        f.ln() - pair.ln_at_cutoff
                    } else {
                        f64::NEG_INFINITY
                    }
                }
            }
        }
    }
}

/// ln |Psi| of a configuration: orbital terms for every particle plus one
/// pair term per particle from its nearest predecessor in input order.
pub fn trial_log_psi(trial: &TrialFunction, config: &Configuration) -> f64 {
    debug_assert_eq!(trial.dimension, config.dimension);
    let n = config.n_particles();
    let mut sum = 0.0;
    for i in 0..n {
        sum += trial.log_orbital(config.radius(i));
        if i > 0 {
            let mut t = f64::INFINITY;
            for j in 0..i {
                t = t.min(config.distance(i, j));
            }
            sum += trial.log_pair_factor(t);
        }
    }
    sum
}

/// Quantities cached at a configuration so that ln Psi of a single-coordinate
/// shift costs only the terms the shift touches: one orbital factor plus the
/// nearest-predecessor terms the moved particle takes part in.
struct ProbeState<'a> {
    trial: &'a TrialFunction,
    config: &'a Configuration,
    radius: Vec<f64>,
    orbital: Vec<f64>,
    /// Pairwise distances, full n by n with zero diagonal; empty when the
    /// trial carries no pair factor.
    dist: Vec<f64>,
    /// Nearest-predecessor distance per particle; entry 0 unused.
    t: Vec<f64>,
    /// Predecessor index realizing t; entry 0 unused.
    nearest: Vec<usize>,
    /// ln f(t_i); zero for particle 0.
    pair_term: Vec<f64>,
    log_psi: f64,
}

impl<'a> ProbeState<'a> {
    fn new(trial: &'a TrialFunction, config: &'a Configuration) -> Self {
        let n = config.n_particles();
        let radius: Vec<f64> = (0..n).map(|i| config.radius(i)).collect();
        let orbital: Vec<f64> = radius.iter().map(|&r| trial.log_orbital(r)).collect();
        let mut log_psi: f64 = orbital.iter().sum();
        let mut dist = Vec::new();
        let mut t = Vec::new();
        let mut nearest = Vec::new();
        let mut pair_term = Vec::new();
        if trial.pair.is_some() {
            dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..i {
                    let v = config.distance(i, j);
                    dist[i * n + j] = v;
                    dist[j * n + i] = v;
                }
            }
            t = vec![f64::INFINITY; n];
            nearest = vec![usize::MAX; n];
            pair_term = vec![0.0; n];
            for i in 1..n {
                for j in 0..i {
                    if dist[i * n + j] < t[i] {
                        t[i] = dist[i * n + j];
                        nearest[i] = j;
                    }
                }
                pair_term[i] = trial.log_pair_factor(t[i]);
                log_psi += pair_term[i];
            }
        }
        Self {
            trial,
            config,
            radius,
            orbital,
            dist,
            t,
            nearest,
            pair_term,
            log_psi,
        }
    }

    /// Distance between particles p and k after shifting coordinate c of p.
    fn shifted_distance(&self, p: usize, k: usize, c: usize, delta: f64) -> f64 {
        let d = self.config.dimension;
        let mut s = 0.0;
        for m in 0..d {
            let mut diff = self.config.coords[p * d + m] - self.config.coords[k * d + m];
            if m == c {
                diff += delta;
            }
            s += diff * diff;
        }
        s.sqrt()
    }

    /// ln Psi after shifting coordinate c of particle p, minus ln Psi at the
    /// center. Pair terms are re-evaluated only where the shifted distance
    /// actually displaces a nearest-predecessor minimum.
    fn delta_log_psi(&self, p: usize, c: usize, delta: f64) -> f64 {
        let d = self.config.dimension;
        let n = self.config.n_particles();
        let mut s = 0.0;
        for m in 0..d {
            let mut x = self.config.coords[p * d + m];
            if m == c {
                x += delta;
            }
            s += x * x;
        }
        let mut acc = self.trial.log_orbital(s.sqrt()) - self.orbital[p];
        if self.trial.pair.is_none() {
            return acc;
        }
        if p > 0 {
            let mut tp = f64::INFINITY;
            for j in 0..p {
                tp = tp.min(self.shifted_distance(p, j, c, delta));
            }
            if tp != self.t[p] {
                acc += self.trial.log_pair_factor(tp) - self.pair_term[p];
            }
        }
        for k in (p + 1)..n {
            let moved = self.shifted_distance(p, k, c, delta);
            let new_tk = if self.nearest[k] == p {
                if moved <= self.t[k] {
                    moved
                } else {
                    // The moved particle was the minimum and receded; any
                    // other predecessor may take over.
                    let mut tk = moved;
                    for j in 0..k {
                        if j != p {
                            tk = tk.min(self.dist[k * n + j]);
                        }
                    }
                    tk
                }
            } else {
                self.t[k].min(moved)
            };
            if new_tk != self.t[k] {
                acc += self.trial.log_pair_factor(new_tk) - self.pair_term[k];
            }
        }
        acc
    }
}

/// The local energy of one configuration, with ln Psi differentiated by
/// central differences of step `fd_step` in each Cartesian coordinate. The
/// differences are formed from shift deltas rather than full re-evaluations,
/// which keeps them exact to machine precision even when ln Psi itself is
/// large.
pub fn local_energy(
    trial: &TrialFunction,
    config: &Configuration,
    trap: &TrapPotential,
    pair_potential: Option<&PairPotential>,
    fd_step: f64,
) -> f64 {
    let n = config.n_particles();
    let d = config.dimension;
    let state = ProbeState::new(trial, config);
    if !state.log_psi.is_finite() {
        return f64::NAN;
    }
    let mut derivative_terms = 0.0;
    for c in 0..n * d {
        let plus = state.delta_log_psi(c / d, c % d, fd_step);
        let minus = state.delta_log_psi(c / d, c % d, -fd_step);
        let lap = (plus + minus) / (fd_step * fd_step);
        let grad = (plus - minus) / (2.0 * fd_step);
        derivative_terms += lap + grad * grad;
    }
    let mut potential = 0.0;
    for i in 0..n {
        potential += trap.eval_at(state.radius[i]);
    }
    if let Some(v) = pair_potential {
        for i in 0..n {
            for j in 0..i {
                potential += v.eval(config.distance(i, j));
            }
        }
    }
    -derivative_terms + potential
}

#[derive(Debug, Clone)]
pub struct VmcOptions {
    pub n_particles: usize,
    /// Total Metropolis attempts; the first tenth is burn-in.
    pub n_steps: usize,
    pub seed: u64,
    /// Starting proposal width; 0 picks half the orbital's mean radius.
    pub initial_step: f64,
    /// Finite-difference step for the local energy.
    pub fd_step: f64,
    pub n_blocks: usize,
    /// Bins of the sampled radial density; 0 disables the histogram.
    pub histogram_bins: usize,
    /// Outer edge of the histogram; 0 picks the orbital grid's extent.
    pub histogram_r_max: f64,
}

impl Default for VmcOptions {
    fn default() -> Self {
        Self {
            n_particles: 1,
            n_steps: 100_000,
            seed: 0,
            initial_step: 0.0,
            fd_step: 1e-3,
            n_blocks: 32,
            histogram_bins: 0,
            histogram_r_max: 0.0,
        }
    }
}

/// Sampled radial density with per-bin statistical errors from block
/// averages. The density integrates to the particle number.
#[derive(Debug, Clone)]
pub struct DensityHistogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl DensityHistogram {
    /// Integral of the density over all bins.
    pub fn total_number(&self, dimension: usize) -> f64 {
        let s_d = surface_area(dimension);
        let d = dimension as i32;
        self.density
            .iter()
            .enumerate()
            .map(|(b, rho)| {
                let shell = s_d * (self.edges[b + 1].powi(d) - self.edges[b].powi(d)) / d as f64;
                rho * shell
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct VmcResult {
    pub energy: f64,
    /// Standard error of the energy from block averages.
    pub sigma: f64,
    pub energy_per_particle: f64,
    pub sigma_per_particle: f64,
    pub acceptance_rate: f64,
    /// Proposal width after burn-in tuning.
    pub tuned_step: f64,
    /// Finite local-energy samples collected.
    pub n_samples: usize,
    /// Samples dropped because the local energy was not finite.
    pub skipped_samples: usize,
    pub block_means: Vec<f64>,
    pub histogram: Option<DensityHistogram>,
    pub seed: u64,
}

/// Runs one Metropolis chain and returns the blocked energy estimate.
pub fn run_vmc(
    trial: &TrialFunction,
    trap: &TrapPotential,
    pair_potential: Option<&PairPotential>,
    options: &VmcOptions,
) -> Result<VmcResult, VmcError> {
    check_options(options)?;
    let n = options.n_particles;
    let d = trial.dimension;
    let burn_in = options.n_steps / 10;
    let sampling_steps = options.n_steps - burn_in;
    let block_len = sampling_steps / options.n_blocks;

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut config = seed_configuration(trial, n, &mut rng)?;
    let mut log_psi = trial_log_psi(trial, &config);
    let mut step_size = if options.initial_step > 0.0 {
        options.initial_step
    } else {
        (0.5 * trial.typical_radius).max(1e-3)
    };

    let hist_r_max = if options.histogram_r_max > 0.0 {
        options.histogram_r_max
    } else {
        trial.log_orbital.x_max()
    };
    let mut hist_counts = vec![0u64; options.histogram_bins];
    let mut hist_block_density: Vec<Vec<f64>> = Vec::new();
    let mut hist_steps_in_block = 0u64;

    let mut accepted = 0usize;
    let mut attempts_after_burn_in = 0usize;
    let mut window_attempts = 0usize;
    let mut window_accepts = 0usize;

    let mut block_means = Vec::with_capacity(options.n_blocks);
    let mut block_sum = 0.0;
    let mut block_count = 0usize;
    let mut n_samples = 0usize;
    let mut skipped = 0usize;

    for step in 0..options.n_steps {
        let i = step % n;
        let mut proposal = config.clone();
        for c in i * d..(i + 1) * d {
            let kick: f64 = rng.sample(StandardNormal);
            proposal.coords[c] += step_size * kick;
        }
        let log_new = trial_log_psi(trial, &proposal);
        let accept = if log_new.is_finite() {
            let ratio = 2.0 * (log_new - log_psi);
            ratio >= 0.0 || rng.random::<f64>() < ratio.exp()
        } else {
            false
        };
        if accept {
            config = proposal;
            log_psi = log_new;
        }

        if step < burn_in {
            window_attempts += 1;
            if accept {
                window_accepts += 1;
            }
            if window_attempts == 200 {
                let rate = window_accepts as f64 / window_attempts as f64;
                if rate > 0.55 {
                    step_size *= 1.1;
                } else if rate < 0.45 {
                    step_size /= 1.1;
                }
                window_attempts = 0;
                window_accepts = 0;
            }
            continue;
        }

        attempts_after_burn_in += 1;
        if accept {
            accepted += 1;
        }

        let e = local_energy(trial, &config, trap, pair_potential, options.fd_step);
        if e.is_finite() {
            block_sum += e;
            block_count += 1;
            n_samples += 1;
        } else {
            skipped += 1;
        }

        if options.histogram_bins > 0 {
            for p in 0..n {
                let r = config.radius(p);
                let bin = (r / hist_r_max * options.histogram_bins as f64) as usize;
                if bin < options.histogram_bins {
                    hist_counts[bin] += 1;
                }
            }
            hist_steps_in_block += 1;
        }

        let sampled = attempts_after_burn_in;
        if sampled.is_multiple_of(block_len) && block_means.len() < options.n_blocks {
            block_means.push(if block_count > 0 {
                block_sum / block_count as f64
            } else {
                f64::NAN
            });
            block_sum = 0.0;
            block_count = 0;
            if options.histogram_bins > 0 {
                hist_block_density.push(bin_density(
                    &hist_counts,
                    hist_steps_in_block,
                    hist_r_max,
                    d,
                ));
                hist_counts.iter_mut().for_each(|c| *c = 0);
                hist_steps_in_block = 0;
            }
        }
    }

    let (energy, sigma) = blocked_mean(&block_means);
    let histogram = if options.histogram_bins > 0 {
        Some(merge_histogram_blocks(
            &hist_block_density,
            options.histogram_bins,
            hist_r_max,
        ))
    } else {
        None
    };
    Ok(VmcResult {
        energy,
        sigma,
        energy_per_particle: energy / n as f64,
        sigma_per_particle: sigma / n as f64,
        acceptance_rate: accepted as f64 / attempts_after_burn_in as f64,
        tuned_step: step_size,
        n_samples,
        skipped_samples: skipped,
        block_means,
        histogram,
        seed: options.seed,
    })
}

/// Runs independent chains with decorrelated seeds and merges them by
/// inverse variance, using at most `max_threads` worker threads.
pub fn run_vmc_parallel(
    trial: &TrialFunction,
    trap: &TrapPotential,
    pair_potential: Option<&PairPotential>,
    options: &VmcOptions,
    n_chains: usize,
    max_threads: usize,
) -> Result<VmcResult, VmcError> {
    if n_chains == 0 {
        return Err(VmcError::BadOptions {
            reason: "n_chains must be at least 1".into(),
        });
    }
    let workers = max_threads.max(1).min(n_chains);
    let chain_options: Vec<VmcOptions> = (0..n_chains)
        .map(|i| VmcOptions {
            seed: options.seed.wrapping_add((i as u64).wrapping_mul(0x9E3779B97F4A7C15)),
            ..options.clone()
        })
        .collect();

    let mut results: Vec<Option<Result<VmcResult, VmcError>>> = Vec::new();
    results.resize_with(n_chains, || None);
    let chunk = n_chains.div_ceil(workers);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (w, slot) in results.chunks_mut(chunk).enumerate() {
            let opts = &chain_options;
            handles.push(scope.spawn(move || {
                for (k, out) in slot.iter_mut().enumerate() {
                    let idx = w * chunk + k;
                    *out = Some(run_vmc(trial, trap, pair_potential, &opts[idx]));
                }
            }));
        }
        for h in handles {
            h.join().expect("chain worker panicked");
        }
    });
    let chains: Vec<VmcResult> = results
        .into_iter()
        .map(|r| r.expect("every chain slot filled"))
        .collect::<Result<_, _>>()?;

    // Inverse-variance merge in chain order.
    let mut weight_sum = 0.0;
    let mut weighted_energy = 0.0;
    for c in &chains {
        let w = 1.0 / (c.sigma * c.sigma + 1e-300);
        weight_sum += w;
        weighted_energy += w * c.energy;
    }
    let energy = weighted_energy / weight_sum;
    let sigma = (1.0 / weight_sum).sqrt();
    let n = options.n_particles as f64;
    let histogram = merge_chain_histograms(&chains);
    Ok(VmcResult {
        energy,
        sigma,
        energy_per_particle: energy / n,
        sigma_per_particle: sigma / n,
        acceptance_rate: chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / n_chains as f64,
        tuned_step: chains.iter().map(|c| c.tuned_step).sum::<f64>() / n_chains as f64,
        n_samples: chains.iter().map(|c| c.n_samples).sum(),
        skipped_samples: chains.iter().map(|c| c.skipped_samples).sum(),
        block_means: chains.iter().flat_map(|c| c.block_means.clone()).collect(),
        histogram,
        seed: options.seed,
    })
}

fn check_options(options: &VmcOptions) -> Result<(), VmcError> {
    let fail = |reason: &str| {
        Err(VmcError::BadOptions {
            reason: reason.into(),
        })
    };
    if options.n_particles == 0 {
        return fail("n_particles must be at least 1");
    }
    if options.n_blocks < 2 {
        return fail("n_blocks must be at least 2");
    }
    let sampling = options.n_steps - options.n_steps / 10;
    if options.n_steps < 10 || sampling / options.n_blocks == 0 {
        return fail("n_steps too small for the requested number of blocks");
    }
    if options.fd_step <= 0.0 || !options.fd_step.is_finite() {
        return fail("fd_step must be positive and finite");
    }
    Ok(())
}

fn seed_configuration(
    trial: &TrialFunction,
    n_particles: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Configuration, VmcError> {
    let d = trial.dimension;
    let attempts = 1000;
    for _ in 0..attempts {
        let mut config = Configuration::zeros(d, n_particles);
        for i in 0..n_particles {
            let mut direction = vec![0.0; d];
            let mut norm = 0.0_f64;
            for x in direction.iter_mut() {
                *x = rng.sample(StandardNormal);
                norm += *x * *x;
            }
            let norm = norm.sqrt().max(1e-12);
            let radius = trial.typical_radius * (0.3 + 0.7 * rng.random::<f64>());
            for (c, x) in config.coords[i * d..(i + 1) * d].iter_mut().zip(&direction) {
                *c = radius * x / norm;
            }
        }
        if trial_log_psi(trial, &config).is_finite() {
            return Ok(config);
        }
    }
    Err(VmcError::InitFailed { attempts })
}

fn bin_density(counts: &[u64], steps: u64, r_max: f64, dimension: usize) -> Vec<f64> {
    let bins = counts.len();
    let s_d = surface_area(dimension);
    let d = dimension as i32;
    let width = r_max / bins as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let r0 = b as f64 * width;
            let r1 = r0 + width;
            let shell = s_d * (r1.powi(d) - r0.powi(d)) / d as f64;
            c as f64 / (steps.max(1) as f64 * shell)
        })
        .collect()
}

fn blocked_mean(block_means: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = block_means.iter().copied().filter(|e| e.is_finite()).collect();
    let k = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / k;
    let var = finite.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn merge_histogram_blocks(blocks: &[Vec<f64>], bins: usize, r_max: f64) -> DensityHistogram {
    let k = blocks.len() as f64;
    let width = r_max / bins as f64;
    let edges = (0..=bins).map(|b| b as f64 * width).collect();
    let mut density = vec![0.0; bins];
    let mut sigma = vec![0.0; bins];
    for b in 0..bins {
        let mean = blocks.iter().map(|blk| blk[b]).sum::<f64>() / k;
        let var = blocks
            .iter()
            .map(|blk| (blk[b] - mean) * (blk[b] - mean))
            .sum::<f64>()
            / (k - 1.0);
        density[b] = mean;
        sigma[b] = (var / k).sqrt();
    }
    DensityHistogram {
        edges,
        density,
        sigma,
    }
}

fn merge_chain_histograms(chains: &[VmcResult]) -> Option<DensityHistogram> {
    let histograms: Vec<&DensityHistogram> =
        chains.iter().filter_map(|c| c.histogram.as_ref()).collect();
    if histograms.is_empty() {
        return None;
    }
    let k = histograms.len() as f64;
    let bins = histograms[0].density.len();
    let mut density = vec![0.0; bins];
    let mut sigma = vec![0.0; bins];
    for b in 0..bins {
        density[b] = histograms.iter().map(|h| h.density[b]).sum::<f64>() / k;
        sigma[b] = histograms
            .iter()
            .map(|h| h.sigma[b] * h.sigma[b])
            .sum::<f64>()
            .sqrt()
            / k;
    }
    Some(DensityHistogram {
        edges: histograms[0].edges.clone(),
        density,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{minimize_gp, GpSolverOptions};
    use crate::grid::build_radial_grid;
    use crate::scattering::zero_energy_profile;
    use approx::assert_relative_eq;

    fn oscillator_orbital(dimension: usize, n_points: usize) -> GpState {
        let trap = TrapPotential::harmonic();
        let grid = build_radial_grid(dimension, 8.0, n_points).unwrap();
        minimize_gp(&trap, &grid, 1.0, 0.0, &GpSolverOptions::default()).unwrap()
    }

    fn soft_sphere_profile(dimension: usize) -> (PairPotential, ScatteringSolution) {
        let v = PairPotential::soft_sphere(200.0, 0.2).unwrap();
        let sol = zero_energy_profile(&v, dimension, 1.6, 3201).unwrap();
        (v, sol)
    }

    #[test]
    fn log_psi_takes_the_nearest_predecessor_distance() {
        let orbital = oscillator_orbital(3, 2001);
        let (_, sol) = soft_sphere_profile(3);
        let trial = TrialFunction::new(&orbital, &sol).unwrap();
        let d = 0.3;
        let config = Configuration {
            dimension: 3,
            coords: vec![0.0, 0.0, 0.0, d, 0.0, 0.0, 2.5 * d, 0.0, 0.0],
        };
        // Particle 1 pairs with particle 0 at distance d; particle 2 with
        // particle 1 at distance 1.5 d.
        let expected = trial.log_orbital(0.0)
            + trial.log_orbital(d)
            + trial.log_orbital(2.5 * d)
            + trial.log_pair_factor(d)
            + trial.log_pair_factor(1.5 * d);
        assert_relative_eq!(trial_log_psi(&trial, &config), expected, max_relative = 1e-14);
        assert!(trial.log_pair_factor(d) < 0.0);
        assert_eq!(trial.log_pair_factor(trial.cutoff() + 0.1), 0.0);
    }

    #[test]
    fn shift_deltas_match_full_reevaluation() {
        use rand::Rng;
        use rand::SeedableRng;
        let orbital = oscillator_orbital(3, 2001);
        let (v, sol) = soft_sphere_profile(3);
        let soft = TrialFunction::new(&orbital, &sol).unwrap();
        let hard_v = PairPotential::hard_core(0.3).unwrap();
        let hard_sol = zero_energy_profile(&hard_v, 3, 2.4, 3201).unwrap();
        let hard = TrialFunction::new(&orbital, &hard_sol).unwrap();
        let bare = TrialFunction::without_pair_factor(&orbital).unwrap();
        let trap = TrapPotential::harmonic();

        let reference_local_energy = |trial: &TrialFunction, config: &Configuration,
                                      pot: Option<&PairPotential>, h: f64| {
            let center = trial_log_psi(trial, config);
            if !center.is_finite() {
                return f64::NAN;
            }
            let mut probe = config.clone();
            let mut derivative_terms = 0.0;
            for c in 0..config.coords.len() {
                let x = config.coords[c];
                probe.coords[c] = x + h;
                let plus = trial_log_psi(trial, &probe);
                probe.coords[c] = x - h;
                let minus = trial_log_psi(trial, &probe);
                probe.coords[c] = x;
                derivative_terms += (plus - 2.0 * center + minus) / (h * h)
                    + ((plus - minus) / (2.0 * h)).powi(2);
            }
            let mut potential = 0.0;
            for i in 0..config.n_particles() {
                potential += trap.eval_at(config.radius(i));
            }
            if let Some(v) = pot {
                for i in 0..config.n_particles() {
                    for j in 0..i {
                        potential += v.eval(config.distance(i, j));
                    }
                }
            }
            -derivative_terms + potential
        };

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = 1e-3;
        for case in 0..240 {
            // Alternate between spread-out and tightly clustered clouds so
            // the probes cross nearest-predecessor switches and pair-factor
            // cutoffs, not only smooth regions.
            let n = 2 + case % 6;
            let scale = if case % 2 == 0 { 1.5 } else { 0.25 };
            let mut config = Configuration::zeros(3, n);
            for x in config.coords.iter_mut() {
                *x = scale * (rng.random::<f64>() - 0.5) * 2.0;
            }
            for (trial, pot) in [(&soft, Some(&v)), (&hard, None), (&bare, None)] {
                let state = ProbeState::new(trial, &config);
                let mut probe = config.clone();
                for c in 0..config.coords.len() {
                    if !state.log_psi.is_finite() {
                        break;
                    }
                    for delta in [h, -h] {
                        probe.coords[c] = config.coords[c] + delta;
                        let want = trial_log_psi(trial, &probe) - state.log_psi;
                        let got = state.delta_log_psi(c / 3, c % 3, delta);
                        probe.coords[c] = config.coords[c];
                        if want.is_finite() {
                            assert!(
                                (got - want).abs() < 1e-11,
                                "case {case} coord {c} delta {delta}: {got} vs {want}"
                            );
                        } else {
                            assert!(
                                got == want || (got.is_nan() && want.is_nan()),
                                "case {case} coord {c}: {got} vs {want}"
                            );
                        }
                    }
                }
                let fast = local_energy(trial, &config, &trap, pot, h);
                let slow = reference_local_energy(trial, &config, pot, h);
                if slow.is_finite() {
                    assert!(
                        (fast - slow).abs() < 1e-5 * (1.0 + slow.abs()),
                        "case {case}: {fast} vs {slow}"
                    );
                } else {
                    assert!(!fast.is_finite(), "case {case}");
                }
            }
        }

        // A probe that straddles an exact predecessor tie: particle 2 sits
        // equidistant from 0 and 1, so shifting its first coordinate swaps
        // the minimizing predecessor between the two half-steps.
        let tie = Configuration {
            dimension: 3,
            coords: vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.21, 0.0],
        };
        let state = ProbeState::new(&soft, &tie);
        for delta in [h, -h] {
            let mut probe = tie.clone();
            probe.coords[6] += delta;
            let want = trial_log_psi(&soft, &probe) - state.log_psi;
            let got = state.delta_log_psi(2, 0, delta);
            assert!((got - want).abs() < 1e-11, "{got} vs {want}");
        }
    }

    #[test]
    fn single_particle_oscillator_energy_is_recovered_sharply() {
        // With g = 0 the orbital log is quadratic, the spline reproduces it
        // exactly away from the far boundary, and central differences are
        // exact on quadratics, so every local energy sample equals D up to
        // rounding.
        let orbital = oscillator_orbital(3, 80001);
        let trial = TrialFunction::without_pair_factor(&orbital).unwrap();
        let trap = TrapPotential::harmonic();
        let options = VmcOptions {
            n_particles: 1,
            n_steps: 20_000,
            seed: 7,
            ..VmcOptions::default()
        };
        let result = run_vmc(&trial, &trap, None, &options).unwrap();
        assert!(result.skipped_samples == 0);
        assert!(
            (result.energy - 3.0).abs() < 1e-6,
            "energy {} sigma {}",
            result.energy,
            result.sigma
        );
        assert!(result.sigma < 1e-6, "sigma {}", result.sigma);
    }

    #[test]
    fn same_seed_reproduces_the_run_bit_for_bit() {
        let orbital = oscillator_orbital(3, 2001);
        let (v, sol) = soft_sphere_profile(3);
        let trial = TrialFunction::new(&orbital, &sol).unwrap();
        let trap = TrapPotential::harmonic();
        let options = VmcOptions {
            n_particles: 3,
            n_steps: 5_000,
            seed: 42,
            histogram_bins: 20,
            ..VmcOptions::default()
        };
        let a = run_vmc(&trial, &trap, Some(&v), &options).unwrap();
        let b = run_vmc(&trial, &trap, Some(&v), &options).unwrap();
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.sigma.to_bits(), b.sigma.to_bits());
        assert_eq!(a.block_means, b.block_means);
        let (ha, hb) = (a.histogram.unwrap(), b.histogram.unwrap());
        assert_eq!(ha.density, hb.density);
    }

    #[test]
    fn independent_seeds_agree_within_error_bars() {
        let orbital = oscillator_orbital(3, 2001);
        let (v, sol) = soft_sphere_profile(3);
        let trial = TrialFunction::new(&orbital, &sol).unwrap();
        let trap = TrapPotential::harmonic();
        let base = VmcOptions {
            n_particles: 3,
            n_steps: 40_000,
            ..VmcOptions::default()
        };
        let a = run_vmc(&trial, &trap, Some(&v), &VmcOptions { seed: 11, ..base.clone() }).unwrap();
        let b = run_vmc(&trial, &trap, Some(&v), &VmcOptions { seed: 2222, ..base }).unwrap();
        let gap = (a.energy - b.energy).abs();
        let spread = (a.sigma * a.sigma + b.sigma * b.sigma).sqrt();
        assert!(gap < 4.0 * spread, "gap {gap} vs spread {spread}");
    }

    #[test]
    fn histogram_integrates_to_the_particle_number() {
        let orbital = oscillator_orbital(3, 2001);
        let trial = TrialFunction::without_pair_factor(&orbital).unwrap();
        let trap = TrapPotential::harmonic();
        let options = VmcOptions {
            n_particles: 4,
            n_steps: 20_000,
            seed: 3,
            histogram_bins: 64,
            ..VmcOptions::default()
        };
        let result = run_vmc(&trial, &trap, None, &options).unwrap();
        let hist = result.histogram.unwrap();
        assert_relative_eq!(hist.total_number(3), 4.0, max_relative = 1e-9);
        assert!(hist.sigma.iter().all(|s| s.is_finite()));
    }

    #[test]
    fn parallel_chains_merge_deterministically_and_tighten_the_error() {
        let orbital = oscillator_orbital(3, 2001);
        let (v, sol) = soft_sphere_profile(3);
        let trial = TrialFunction::new(&orbital, &sol).unwrap();
        let trap = TrapPotential::harmonic();
        let options = VmcOptions {
            n_particles: 3,
            n_steps: 20_000,
            seed: 9,
            ..VmcOptions::default()
        };
        let single = run_vmc(&trial, &trap, Some(&v), &options).unwrap();
        let merged_a = run_vmc_parallel(&trial, &trap, Some(&v), &options, 4, 4).unwrap();
        let merged_b = run_vmc_parallel(&trial, &trap, Some(&v), &options, 4, 2).unwrap();
        assert_eq!(merged_a.energy.to_bits(), merged_b.energy.to_bits());
        assert!(merged_a.sigma < 0.8 * single.sigma);
        assert_eq!(merged_a.n_samples, 4 * single.n_samples);
    }

    #[test]
    fn interacting_bound_stays_consistent_with_the_mean_field_scale() {
        let trap = TrapPotential::harmonic();
        let grid = build_radial_grid(3, 8.0, 2001).unwrap();
        let n_particles = 4;
        let a = 0.05;
        let (v, sol) = {
            let x = 1.9150080053267877_f64;
            let r0 = 2.0 * a;
            let v0 = 2.0 * (x / r0) * (x / r0);
            let v = PairPotential::soft_sphere(v0, r0).unwrap();
            let sol = zero_energy_profile(&v, 3, 8.0 * r0, 3201).unwrap();
            (v, sol)
        };
        assert_relative_eq!(sol.scattering_length(), a, max_relative = 1e-4);
        let orbital = minimize_gp(
            &trap,
            &grid,
            n_particles as f64,
            a,
            &GpSolverOptions::default(),
        )
        .unwrap();
        let trial = TrialFunction::new(&orbital, &sol).unwrap();
        let options = VmcOptions {
            n_particles,
            n_steps: 40_000,
            seed: 17,
            ..VmcOptions::default()
        };
        let result = run_vmc(&trial, &trap, Some(&v), &options).unwrap();
        // The bound must sit near the mean-field energy for a dilute gas:
        // above the ideal value, below a generous multiple of the
        // mean-field prediction.
        assert!(result.energy > 3.0 * n_particles as f64);
        assert!(result.energy < 1.5 * orbital.energy);
        assert!(result.sigma < 0.5);
        assert!(result.acceptance_rate > 0.2 && result.acceptance_rate < 0.8);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let orbital = oscillator_orbital(3, 2001);
        let (_, sol2) = soft_sphere_profile(2);
        assert!(matches!(
            TrialFunction::new(&orbital, &sol2),
            Err(VmcError::DimensionMismatch { trial: 3, other: 2 })
        ));
        let (_, sol) = soft_sphere_profile(3);
        assert!(matches!(
            TrialFunction::with_cutoff_multiplier(&orbital, &sol, 0.0),
            Err(VmcError::BadCutoffMultiplier { .. })
        ));
        // A cloud so dense that the mean spacing falls inside a hard core
        // leaves no room for the pair factor.
        let trap = TrapPotential::harmonic();
        let grid = build_radial_grid(3, 8.0, 2001).unwrap();
        let dense = minimize_gp(&trap, &grid, 1000.0, 0.0, &GpSolverOptions::default()).unwrap();
        let core = PairPotential::hard_core(1.0).unwrap();
        let core_sol = zero_energy_profile(&core, 3, 8.0, 3201).unwrap();
        assert!(matches!(
            TrialFunction::new(&dense, &core_sol),
            Err(VmcError::CutoffNotAboveLength { .. })
        ));
        let trial = TrialFunction::without_pair_factor(&orbital).unwrap();
        assert!(matches!(
            run_vmc(
                &trial,
                &trap,
                None,
                &VmcOptions {
                    n_particles: 0,
                    ..VmcOptions::default()
                }
            ),
            Err(VmcError::BadOptions { .. })
        ));
    }
}
