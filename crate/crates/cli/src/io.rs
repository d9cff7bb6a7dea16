//! JSON input files: instances, pms and directions.
//!
//! An instance file looks like
//!
//! ```json
//! {
//!   "z": ["00", "01", "10", "11"],
//!   "f": [[0, 0, 1, 1], [0, 1, 0, 1]],
//!   "beta": {"kind": "classical", "nu": [1, 1, 1, 1]},
//!   "tolerances": {"lp_feas": 1e-10}
//! }
//! ```
//!
//! with `beta` alternatively `{"kind": "entropy_quadratic", "alpha": [...]}`.
//! A pm file is `{"weights": [...]}` and a direction file is `{"u": [...]}`,
//! both indexed like `z`. Unknown keys are rejected everywhere.

use std::fs;
use std::path::Path;

use bregmax::beta::BetaSystem;
use bregmax::family::{Instance, Pm};
use bregmax::numerics::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSpec {
    Classical { nu: Vec<f64> },
    EntropyQuadratic { alpha: Vec<f64> },
}

impl BetaSpec {
    fn len(&self) -> usize {
        match self {
            BetaSpec::Classical { nu } => nu.len(),
            BetaSpec::EntropyQuadratic { alpha } => alpha.len(),
        }
    }

    fn field(&self) -> &'static str {
        match self {
            BetaSpec::Classical { .. } => "beta.nu",
            BetaSpec::EntropyQuadratic { .. } => "beta.alpha",
        }
    }

    pub fn build(&self) -> bregmax::Result<BetaSystem> {
        match self {
            BetaSpec::Classical { nu } => BetaSystem::make_classical(nu),
            BetaSpec::EntropyQuadratic { alpha } => BetaSystem::make_entropy_quadratic(alpha),
        }
    }
}

/// Partial [`Tolerances`]; absent keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub root_abs: Option<f64>,
    pub grad_norm: Option<f64>,
    pub lp_feas: Option<f64>,
    pub fd_step: Option<f64>,
    pub cluster_tv: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, mut tol: Tolerances) -> Tolerances {
        let pairs = [
            (&mut tol.root_abs, self.root_abs),
            (&mut tol.grad_norm, self.grad_norm),
            (&mut tol.lp_feas, self.lp_feas),
            (&mut tol.fd_step, self.fd_step),
            (&mut tol.cluster_tv, self.cluster_tv),
        ];
        for (slot, v) in pairs {
            if let Some(v) = v {
                *slot = v;
            }
        }
        tol
    }

    /// Parses `key=value` pairs as given to `--tol`.
    pub fn from_pairs(pairs: &[String]) -> CliResult<Self> {
        let mut o = Self::default();
        for pair in pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--tol expects key=value, got `{pair}`")))?;
            let v: f64 =
                value.trim().parse().map_err(|_| CliError::Usage(format!("--tol {key}: `{value}` is not a number")))?;
            let slot = match key.trim() {
                "root_abs" => &mut o.root_abs,
                "grad_norm" => &mut o.grad_norm,
                "lp_feas" => &mut o.lp_feas,
                "fd_step" => &mut o.fd_step,
                "cluster_tv" => &mut o.cluster_tv,
                other => return Err(CliError::Usage(format!("unknown tolerance `{other}`"))),
            };
            *slot = Some(v);
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub z: Vec<String>,
    pub f: Vec<Vec<f64>>,
    pub beta: BetaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmFile {
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionFile {
    pub u: Vec<f64>,
}

fn parse_error(path: &Path, location: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), location: location.into(), message: message.into() }
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        // serde_json appends " at line L column C"; move it to the location
        let message = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        parse_error(path, format!("line {}, column {}", e.line(), e.column()), message)
    })
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

impl InstanceFile {
    pub fn parse(path: &Path, text: &str) -> CliResult<Self> {
        let file: Self = parse_json(path, text)?;
        let n = file.z.len();
        if n == 0 {
            return Err(parse_error(path, "z", "at least one label is required"));
        }
        for (i, row) in file.f.iter().enumerate() {
            if row.len() != n {
                return Err(parse_error(
                    path,
                    format!("f[{i}]"),
                    format!("expected {n} entries (one per label in z), got {}", row.len()),
                ));
            }
        }
        if file.beta.len() != n {
            return Err(parse_error(
                path,
                file.beta.field(),
                format!("expected {n} entries (one per label in z), got {}", file.beta.len()),
            ));
        }
        Ok(file)
    }

    pub fn to_instance(&self, extra: &ToleranceOverrides) -> CliResult<Instance> {
        let beta = self.beta.build()?;
        let mut tol = Tolerances::default();
        if let Some(t) = &self.tolerances {
            tol = t.apply(tol);
        }
        tol = extra.apply(tol);
        tol.validate()?;
        Ok(Instance::new(self.z.clone(), &self.f, beta)?.with_tolerances(tol))
    }
}

/// Reads and validates an instance file, applying `extra` tolerance
/// overrides on top of those in the file.
pub fn load_instance(path: &Path, extra: &ToleranceOverrides) -> CliResult<Instance> {
    InstanceFile::parse(path, &read(path)?)?.to_instance(extra)
}

fn check_len(path: &Path, field: &str, got: usize, n: usize) -> CliResult<()> {
    if got != n {
        return Err(parse_error(path, field, format!("expected {n} entries (one per label in z), got {got}")));
    }
    Ok(())
}

pub fn load_pm(path: &Path, n: usize) -> CliResult<Pm> {
    let file: PmFile = parse_json(path, &read(path)?)?;
    check_len(path, "weights", file.weights.len(), n)?;
    Ok(Pm::new(file.weights)?)
}

/// Raw (unnormalized) direction entries.
pub fn load_direction(path: &Path, n: usize) -> CliResult<Vec<f64>> {
    let file: DirectionFile = parse_json(path, &read(path)?)?;
    check_len(path, "u", file.u.len(), n)?;
    Ok(file.u)
}
