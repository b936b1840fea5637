use std::fs;
use std::path::{Path, PathBuf};

use randrec::spectral::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Optional settings file passed with `--config`. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub tol_spectral: Option<f64>,
    pub tol_root: Option<f64>,
    pub tol_residual: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| CliError::Config {
            path: path.to_path_buf(),
            at: match err.path().to_string().as_str() {
                "." => "<root>".into(),
                p => p.into(),
            },
            message: err.into_inner().to_string(),
        })
    }
}

pub const DEFAULT_SEED: u64 = 0;

/// Global settings after merging flags, environment, config file and defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub threads: usize,
    pub tolerances: Tolerances,
}

/// Flag or environment value first, then the config file, then the default.
pub fn resolve(
    seed: Option<u64>,
    threads: Option<usize>,
    tol_spectral: Option<f64>,
    tol_root: Option<f64>,
    file: &ConfigFile,
) -> Result<Resolved, CliError> {
    let defaults = Tolerances::default();
    let tolerances = Tolerances {
        spectral: tol_spectral
            .or(file.tol_spectral)
            .unwrap_or(defaults.spectral),
        root: tol_root.or(file.tol_root).unwrap_or(defaults.root),
        residual: file.tol_residual.unwrap_or(defaults.residual),
    };
    for (name, v) in [
        ("tol-spectral", tolerances.spectral),
        ("tol-root", tolerances.root),
        ("tol-residual", tolerances.residual),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
        }
    }
    let threads = threads.or(file.threads).unwrap_or(0);
    Ok(Resolved {
        seed: seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        threads,
        tolerances,
    })
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Wrapper written around every JSON result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    #[serde(flatten)]
    pub result: T,
}

/// Resolved settings of one subcommand, as embedded in its output.
#[derive(Debug, Serialize)]
pub struct RunConfig<A: Serialize> {
    pub model: Option<PathBuf>,
    #[serde(flatten)]
    pub global: Resolved,
    #[serde(flatten)]
    pub args: A,
}
