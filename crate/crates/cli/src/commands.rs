//! Turns resolved parameters into solver calls and rendered documents.

use gptrap::asymptotics::AsymptoticsError;
use gptrap::{
    build_radial_grid, coupling_constant, default_scattering_grid, gp_tf_sweep, minimize_gp,
    run_vmc, run_vmc_parallel, solve_tf, suggest_grid, zero_energy_profile, GpSolverOptions,
    GridPolicy, PairPotential, RadialGrid, RhoBarSource, TrapPotential, TrialFunction, VmcOptions,
    VmcResult,
};

use crate::config::{
    CouplingParams, ScatteringParams, SolveGpParams, SolveTfParams, SweepParams, VmcParams,
};
use crate::error::CliError;
use crate::output::{csv_document, fmt_float as f, json_document, Json};
use crate::Format;

fn build_trap(exponent: f64, coefficient: f64) -> Result<TrapPotential, CliError> {
    TrapPotential::power(exponent, coefficient).map_err(|e| CliError::config(e.to_string()))
}

fn build_pair(kind: &str, height: f64, radius: f64) -> Result<PairPotential, CliError> {
    match kind {
        "hard_core" => PairPotential::hard_core(radius).map_err(|e| CliError::config(e.to_string())),
        "soft_sphere" => {
            PairPotential::soft_sphere(height, radius).map_err(|e| CliError::config(e.to_string()))
        }
        other => Err(CliError::config_key(
            "pair_kind",
            format!("expected \"hard_core\" or \"soft_sphere\", got \"{other}\""),
        )),
    }
}

/// Picks the radial grid: both `r_max` and `n_points` set uses them
/// directly, both zero sizes the grid from the cloud parameters.
fn resolve_grid(
    trap: &TrapPotential,
    dimension: usize,
    particle_number: f64,
    coupling: f64,
    r_max: f64,
    n_points: usize,
    points_per_unit: f64,
) -> Result<RadialGrid, CliError> {
    if r_max > 0.0 && n_points > 0 {
        return build_radial_grid(dimension, r_max, n_points)
            .map_err(|e| CliError::config(e.to_string()));
    }
    if r_max == 0.0 && n_points == 0 {
        let policy = GridPolicy {
            points_per_unit,
            ..GridPolicy::default()
        };
        return suggest_grid(trap, dimension, particle_number, coupling, &policy).map_err(
            |e| match e {
                AsymptoticsError::BadParameter { .. }
                | AsymptoticsError::BadPolicy { .. }
                | AsymptoticsError::Grid(_) => CliError::config(e.to_string()),
                other => CliError::solver(other),
            },
        );
    }
    Err(CliError::config(
        "r_max and n_points must be set together; leave both at zero for automatic sizing",
    ))
}

pub fn run_solve_gp(p: &SolveGpParams, format: Format) -> Result<String, CliError> {
    let trap = build_trap(p.trap_exponent, p.trap_coefficient)?;
    let grid = resolve_grid(
        &trap,
        p.dimension,
        p.particle_number,
        p.coupling,
        p.r_max,
        p.n_points,
        p.points_per_unit,
    )?;
    let options = GpSolverOptions {
        energy_tol: p.energy_tol,
        max_iters: p.max_iters,
        ..GpSolverOptions::default()
    };
    let state = minimize_gp(&trap, &grid, p.particle_number, p.coupling, &options)
        .map_err(CliError::solver)?;
    let config = p.echo();
    match format {
        Format::Json => {
            let result = Json::Obj(vec![
                ("energy", Json::Num(state.energy)),
                (
                    "energy_per_particle",
                    Json::Num(state.energy / state.particle_number),
                ),
                ("kinetic_energy", Json::Num(state.kinetic_energy)),
                ("trap_energy", Json::Num(state.trap_energy)),
                ("interaction_energy", Json::Num(state.interaction_energy)),
                ("chemical_potential", Json::Num(state.chemical_potential)),
                ("residual", Json::Num(state.residual)),
                ("iterations", Json::UInt(state.iterations as u64)),
                ("r_max", Json::Num(grid.r_max())),
                ("n_points", Json::UInt(grid.n_points() as u64)),
            ]);
            Ok(json_document("solve-gp", &config, result))
        }
        Format::Csv => {
            let rows: Vec<String> = grid
                .nodes()
                .iter()
                .zip(&state.phi)
                .map(|(&r, &phi)| format!("{},{},{}", f(r), f(phi), f(phi * phi)))
                .collect();
            Ok(csv_document("solve-gp", &config, "r,phi,density", &rows))
        }
    }
}

pub fn run_solve_tf(p: &SolveTfParams, format: Format) -> Result<String, CliError> {
    let trap = build_trap(p.trap_exponent, p.trap_coefficient)?;
    let state = solve_tf(&trap, p.dimension, p.particle_number, p.coupling)
        .map_err(CliError::solver)?;
    let config = p.echo();
    match format {
        Format::Json => {
            let result = Json::Obj(vec![
                ("chemical_potential", Json::Num(state.chemical_potential)),
                ("energy", Json::Num(state.energy)),
                (
                    "energy_per_particle",
                    Json::Num(state.energy / state.particle_number),
                ),
                ("support_radius", Json::Num(state.support_radius)),
                ("mean_density", Json::Num(state.mean_density)),
            ]);
            Ok(json_document("solve-tf", &config, result))
        }
        Format::Csv => {
            if p.profile_points < 2 {
                return Err(CliError::config_key(
                    "profile_points",
                    "need at least two sample points",
                ));
            }
            let top = 1.05 * state.support_radius;
            let rows: Vec<String> = (0..p.profile_points)
                .map(|i| {
                    let r = top * i as f64 / (p.profile_points - 1) as f64;
                    format!("{},{}", f(r), f(state.density(r)))
                })
                .collect();
            Ok(csv_document("solve-tf", &config, "r,density", &rows))
        }
    }
}

pub fn run_scattering(p: &ScatteringParams, format: Format) -> Result<String, CliError> {
    let pair = build_pair(&p.pair_kind, p.pair_height, p.pair_radius)?;
    let (r_max, n_points) = if p.r_max > 0.0 && p.n_points > 0 {
        (p.r_max, p.n_points)
    } else if p.r_max == 0.0 && p.n_points == 0 {
        default_scattering_grid(&pair)
    } else {
        return Err(CliError::config(
            "r_max and n_points must be set together; leave both at zero for automatic sizing",
        ));
    };
    let solution =
        zero_energy_profile(&pair, p.dimension, r_max, n_points).map_err(CliError::solver)?;
    let config = p.echo();
    match format {
        Format::Json => {
            let result = Json::Obj(vec![
                ("scattering_length", Json::Num(solution.scattering_length())),
                ("match_radius", Json::Num(solution.match_radius())),
                ("fit_residual", Json::Num(solution.fit_residual())),
                ("potential_range", Json::Num(pair.range())),
                ("r_max", Json::Num(solution.grid().r_max())),
                ("n_points", Json::UInt(solution.grid().n_points() as u64)),
            ]);
            Ok(json_document("scattering", &config, result))
        }
        Format::Csv => {
            let rows: Vec<String> = solution
                .grid()
                .nodes()
                .iter()
                .zip(solution.profile())
                .map(|(&r, &f0)| format!("{},{}", f(r), f(f0)))
                .collect();
            Ok(csv_document("scattering", &config, "r,f0", &rows))
        }
    }
}

pub fn run_coupling(p: &CouplingParams, format: Format) -> Result<String, CliError> {
    let trap = build_trap(p.trap_exponent, p.trap_coefficient)?;
    let source = match p.source.as_str() {
        "gp" => RhoBarSource::Gp,
        "tf" => RhoBarSource::ThomasFermi,
        other => {
            return Err(CliError::config_key(
                "source",
                format!("expected \"gp\" or \"tf\", got \"{other}\""),
            ))
        }
    };
    // Grid sizing needs a coupling scale before the coupling is known: the
    // scattering length is the coupling in three dimensions, and unity is a
    // safe upper bound for the logarithmic coupling in two.
    let sizing_coupling = if p.dimension == 3 {
        p.scattering_length
    } else {
        1.0
    };
    let grid = resolve_grid(
        &trap,
        p.dimension,
        p.particle_number,
        sizing_coupling,
        p.r_max,
        p.n_points,
        p.points_per_unit,
    )?;
    let report = coupling_constant(
        p.scattering_length,
        &trap,
        &grid,
        p.particle_number,
        source,
        &GpSolverOptions::default(),
    )
    .map_err(CliError::solver)?;
    let config = p.echo();
    match format {
        Format::Json => {
            let result = Json::Obj(vec![
                ("dimension", Json::UInt(report.dimension as u64)),
                ("scattering_length", Json::Num(report.scattering_length)),
                ("coupling", Json::Num(report.coupling)),
                ("mean_density", Json::Num(report.mean_density)),
                ("diluteness", Json::Num(report.diluteness)),
                ("iterations", Json::UInt(report.iterations as u64)),
                ("residual", Json::Num(report.residual)),
            ]);
            Ok(json_document("coupling", &config, result))
        }
        Format::Csv => {
            let row = format!(
                "{},{},{},{},{},{},{}",
                report.dimension,
                f(report.scattering_length),
                f(report.coupling),
                f(report.mean_density),
                f(report.diluteness),
                report.iterations,
                f(report.residual),
            );
            Ok(csv_document(
                "coupling",
                &config,
                "dimension,scattering_length,coupling,mean_density,diluteness,iterations,residual",
                &[row],
            ))
        }
    }
}

fn max_threads() -> Result<usize, CliError> {
    match std::env::var("GPTRAP_THREADS") {
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        Ok(value) => value.parse().map_err(|_| {
            CliError::config_key(
                "GPTRAP_THREADS",
                format!("cannot parse \"{value}\" as a thread count"),
            )
        }),
    }
}

pub fn run_vmc_command(p: &VmcParams, format: Format) -> Result<String, CliError> {
    let trap = build_trap(p.trap_exponent, p.trap_coefficient)?;
    let n = p.n_particles as f64;
    let (pair, profile, scattering_length, coupling) = if p.pair_kind == "none" {
        (None, None, 0.0, 0.0)
    } else {
        let pair = build_pair(&p.pair_kind, p.pair_height, p.pair_radius)?;
        let (sr, sn) = if p.scattering_r_max > 0.0 && p.scattering_n_points > 0 {
            (p.scattering_r_max, p.scattering_n_points)
        } else {
            default_scattering_grid(&pair)
        };
        let solution =
            zero_energy_profile(&pair, p.dimension, sr, sn).map_err(CliError::solver)?;
        let a = solution.scattering_length();
        let g = if p.dimension == 3 {
            a
        } else {
            let sizing = resolve_grid(&trap, p.dimension, n, 1.0, 0.0, 0, p.points_per_unit)?;
            coupling_constant(a, &trap, &sizing, n, RhoBarSource::Gp, &GpSolverOptions::default())
                .map_err(CliError::solver)?
                .coupling
        };
        (Some(pair), Some(solution), a, g)
    };
    let grid = resolve_grid(
        &trap,
        p.dimension,
        n,
        coupling,
        p.r_max,
        p.n_points,
        p.points_per_unit,
    )?;
    let orbital = minimize_gp(&trap, &grid, n, coupling, &GpSolverOptions::default())
        .map_err(CliError::solver)?;
    let trial = match &profile {
        Some(solution) => TrialFunction::with_cutoff_multiplier(&orbital, solution, p.cutoff_multiplier),
        None => TrialFunction::without_pair_factor(&orbital),
    }
    .map_err(CliError::solver)?;
    let options = VmcOptions {
        n_particles: p.n_particles,
        n_steps: p.n_steps,
        seed: p.seed,
        initial_step: p.initial_step,
        fd_step: p.fd_step,
        n_blocks: p.n_blocks,
        histogram_bins: p.histogram_bins,
        histogram_r_max: p.histogram_r_max,
    };
    let result = if p.n_chains <= 1 {
        run_vmc(&trial, &trap, pair.as_ref(), &options)
    } else {
        run_vmc_parallel(
            &trial,
            &trap,
            pair.as_ref(),
            &options,
            p.n_chains,
            max_threads()?,
        )
    }
    .map_err(CliError::solver)?;
    let config = p.echo();
    match format {
        Format::Json => {
            let mut fields = vec![
                ("energy", Json::Num(result.energy)),
                ("sigma", Json::Num(result.sigma)),
                ("energy_per_particle", Json::Num(result.energy_per_particle)),
                ("sigma_per_particle", Json::Num(result.sigma_per_particle)),
                ("acceptance_rate", Json::Num(result.acceptance_rate)),
                ("tuned_step", Json::Num(result.tuned_step)),
                ("n_samples", Json::UInt(result.n_samples as u64)),
                ("skipped_samples", Json::UInt(result.skipped_samples as u64)),
                ("n_chains", Json::UInt(p.n_chains.max(1) as u64)),
                ("scattering_length", Json::Num(scattering_length)),
                ("coupling", Json::Num(coupling)),
                ("gp_energy", Json::Num(orbital.energy)),
                (
                    "gp_energy_per_particle",
                    Json::Num(orbital.energy / orbital.particle_number),
                ),
            ];
            if let Some(hist) = &result.histogram {
                fields.push((
                    "histogram",
                    Json::Obj(vec![
                        ("edges", Json::Arr(hist.edges.iter().map(|&x| Json::Num(x)).collect())),
                        (
                            "density",
                            Json::Arr(hist.density.iter().map(|&x| Json::Num(x)).collect()),
                        ),
                        ("sigma", Json::Arr(hist.sigma.iter().map(|&x| Json::Num(x)).collect())),
                    ]),
                ));
            }
            Ok(json_document("vmc", &config, Json::Obj(fields)))
        }
        Format::Csv => Ok(vmc_csv(&config, &result)),
    }
}

fn vmc_csv(config: &[(&'static str, String)], result: &VmcResult) -> String {
    match &result.histogram {
        Some(hist) => {
            let rows: Vec<String> = hist
                .density
                .iter()
                .enumerate()
                .map(|(b, &rho)| {
                    format!(
                        "{},{},{},{}",
                        f(hist.edges[b]),
                        f(hist.edges[b + 1]),
                        f(rho),
                        f(hist.sigma[b])
                    )
                })
                .collect();
            csv_document("vmc", config, "r_lo,r_hi,density,sigma", &rows)
        }
        None => {
            let rows: Vec<String> = result
                .block_means
                .iter()
                .enumerate()
                .map(|(b, &mean)| format!("{b},{}", f(mean)))
                .collect();
            csv_document("vmc", config, "block,mean", &rows)
        }
    }
}

pub fn run_sweep(p: &SweepParams, format: Format) -> Result<String, CliError> {
    let trap = build_trap(p.trap_exponent, p.trap_coefficient)?;
    let gammas = p.gamma_list()?;
    let policy = GridPolicy {
        points_per_unit: p.points_per_unit,
        ..GridPolicy::default()
    };
    let records = gp_tf_sweep(&trap, p.dimension, p.particle_number, &gammas, &policy)
        .map_err(CliError::solver)?;
    let config = p.echo();
    match format {
        Format::Json => {
            let items: Vec<Json> = records
                .iter()
                .map(|r| {
                    Json::Obj(vec![
                        ("parameter", Json::Num(r.parameter)),
                        ("e_gp", Json::Num(r.e_gp)),
                        ("e_tf", Json::Num(r.e_tf)),
                        ("ratio", Json::Num(r.ratio)),
                        ("mu_gp", Json::Num(r.mu_gp)),
                        ("mu_tf", Json::Num(r.mu_tf)),
                        ("diluteness", Json::Num(r.diluteness)),
                        ("r_max", Json::Num(r.r_max)),
                        ("n_points", Json::UInt(r.n_points as u64)),
                    ])
                })
                .collect();
            Ok(json_document(
                "sweep",
                &config,
                Json::Obj(vec![("records", Json::Arr(items))]),
            ))
        }
        Format::Csv => {
            let rows: Vec<String> = records
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{},{},{},{}",
                        f(r.parameter),
                        f(r.e_gp),
                        f(r.e_tf),
                        f(r.ratio),
                        f(r.mu_gp),
                        f(r.mu_tf),
                        f(r.diluteness),
                        f(r.r_max),
                        r.n_points,
                    )
                })
                .collect();
            Ok(csv_document(
                "sweep",
                &config,
                "parameter,e_gp,e_tf,ratio,mu_gp,mu_tf,diluteness,r_max,n_points",
                &rows,
            ))
        }
    }
}
