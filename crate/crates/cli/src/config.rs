//! Flat `key = value` configuration, shared between config files and
//! command-line overrides. Every command has a fixed key schema with
//! defaults; unknown keys are rejected so typos cannot silently fall back
//! to a default.

use std::path::Path;

use crate::error::CliError;

/// Parses a config file: one `key = value` per line, `#` comments and blank
/// lines ignored.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!(
                "config line {}: expected key = value, got \"{line}\"",
                index + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Parses one positional `key=value` override.
pub fn parse_override(text: &str) -> Result<(String, String), CliError> {
    let (key, value) = text.split_once('=').ok_or_else(|| {
        CliError::config(format!("override \"{text}\" is not of the form key=value"))
    })?;
    Ok((key.trim().to_string(), value.trim().to_string()))
}

fn f64_value(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse()
        .map_err(|_| CliError::config_key(key, format!("cannot parse \"{value}\" as a number")))
}

fn usize_value(key: &str, value: &str) -> Result<usize, CliError> {
    value.parse().map_err(|_| {
        CliError::config_key(key, format!("cannot parse \"{value}\" as a whole number"))
    })
}

fn u64_value(key: &str, value: &str) -> Result<u64, CliError> {
    value.parse().map_err(|_| {
        CliError::config_key(key, format!("cannot parse \"{value}\" as a whole number"))
    })
}

fn unknown_key(key: &str) -> CliError {
    CliError::config_key(key, "unknown configuration key")
}

macro_rules! params {
    ($name:ident { $($key:ident : $ty:tt = $default:expr),+ $(,)? }) => {
        #[derive(Debug, Clone)]
        pub struct $name {
            $(pub $key: params!(@type $ty),)+
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($key: $default,)+ }
            }
        }

        impl $name {
            pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
                match key {
                    $(stringify!($key) => {
                        self.$key = params!(@parse $ty, key, value);
                    })+
                    _ => return Err(unknown_key(key)),
                }
                Ok(())
            }

            pub fn resolve(pairs: &[(String, String)]) -> Result<Self, CliError> {
                let mut params = Self::default();
                for (key, value) in pairs {
                    params.apply(key, value)?;
                }
                Ok(params)
            }

            /// All keys and their resolved values, in schema order.
            pub fn echo(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($key), self.$key.to_string()),)+]
            }
        }
    };
    (@type f64) => { f64 };
    (@type usize) => { usize };
    (@type u64) => { u64 };
    (@type String) => { String };
    (@parse f64, $key:expr, $value:expr) => { f64_value($key, $value)? };
    (@parse usize, $key:expr, $value:expr) => { usize_value($key, $value)? };
    (@parse u64, $key:expr, $value:expr) => { u64_value($key, $value)? };
    (@parse String, $key:expr, $value:expr) => { $value.to_string() };
}

params!(SolveGpParams {
    dimension: usize = 3,
    particle_number: f64 = 1.0,
    coupling: f64 = 0.0,
    trap_exponent: f64 = 2.0,
    trap_coefficient: f64 = 1.0,
    r_max: f64 = 0.0,
    n_points: usize = 0,
    points_per_unit: f64 = 200.0,
    energy_tol: f64 = 1e-12,
    max_iters: usize = 100_000,
});

params!(SolveTfParams {
    dimension: usize = 3,
    particle_number: f64 = 1.0,
    coupling: f64 = 1.0,
    trap_exponent: f64 = 2.0,
    trap_coefficient: f64 = 1.0,
    profile_points: usize = 513,
});

params!(ScatteringParams {
    dimension: usize = 3,
    pair_kind: String = "hard_core".to_string(),
    pair_radius: f64 = 1.0,
    pair_height: f64 = 0.0,
    r_max: f64 = 0.0,
    n_points: usize = 0,
});

params!(CouplingParams {
    dimension: usize = 3,
    scattering_length: f64 = 0.01,
    particle_number: f64 = 100.0,
    trap_exponent: f64 = 2.0,
    trap_coefficient: f64 = 1.0,
    source: String = "gp".to_string(),
    r_max: f64 = 0.0,
    n_points: usize = 0,
    points_per_unit: f64 = 200.0,
});

params!(VmcParams {
    dimension: usize = 3,
    n_particles: usize = 4,
    pair_kind: String = "none".to_string(),
    pair_radius: f64 = 0.0,
    pair_height: f64 = 0.0,
    cutoff_multiplier: f64 = 1.0,
    n_steps: usize = 100_000,
    seed: u64 = 0,
    n_chains: usize = 1,
    n_blocks: usize = 32,
    fd_step: f64 = 1e-3,
    initial_step: f64 = 0.0,
    histogram_bins: usize = 0,
    histogram_r_max: f64 = 0.0,
    trap_exponent: f64 = 2.0,
    trap_coefficient: f64 = 1.0,
    r_max: f64 = 0.0,
    n_points: usize = 0,
    points_per_unit: f64 = 200.0,
    scattering_r_max: f64 = 0.0,
    scattering_n_points: usize = 0,
});

params!(SweepParams {
    dimension: usize = 3,
    particle_number: f64 = 1e4,
    gammas: String = "100,1000,10000".to_string(),
    trap_exponent: f64 = 2.0,
    trap_coefficient: f64 = 1.0,
    points_per_unit: f64 = 200.0,
});

impl SweepParams {
    pub fn gamma_list(&self) -> Result<Vec<f64>, CliError> {
        let mut gammas = Vec::new();
        for piece in self.gammas.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            gammas.push(f64_value("gammas", piece)?);
        }
        if gammas.is_empty() {
            return Err(CliError::config_key(
                "gammas",
                "expected a comma-separated list of couplings",
            ));
        }
        Ok(gammas)
    }
}
