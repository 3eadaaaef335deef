//! Experiment configuration: one argument struct per subcommand, usable both
//! as clap flags and as a JSON config file.  Flags override the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

/// Published schema for config files.
pub const CONFIG_SCHEMA: &str = include_str!("../schemas/config.schema.json");

#[derive(Debug, Parser)]
#[command(name = "quadflow", version, about = "Curvature-flow laboratory: functionals, symbols, reduced flows and inequality experiments")]
pub struct Cli {
    /// JSON config file; explicit flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the jet identity and first-variation residual suites.
    Identities(IdentitiesArgs),
    /// Classify ellipticity of the gauged symbol.
    Symbol(SymbolArgs),
    /// Evaluate curvature functionals and pinching predicates of a model.
    Functionals(FunctionalsArgs),
    /// Integrate a reduced flow and report monitors.
    Flow(FlowArgs),
    /// Integrate to a blow-up and emit the rescaled sequence.
    Blowup(BlowupArgs),
    /// Run a grid of flows and report the outcome map.
    Sweep(SweepArgs),
    /// Run inequality corpora on periodic grids.
    Estimates(EstimatesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Identities(_) => "identities",
            Command::Symbol(_) => "symbol",
            Command::Functionals(_) => "functionals",
            Command::Flow(_) => "flow",
            Command::Blowup(_) => "blowup",
            Command::Sweep(_) => "sweep",
            Command::Estimates(_) => "estimates",
        }
    }
}

/// Fills every unset field of `self` from `other`.
pub trait Merge: Sized {
    fn merge(self, other: Self) -> Self;
}

macro_rules! mergeable {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(self, other: Self) -> Self {
                Self { $($field: self.$field.or(other.$field)),* }
            }
        }
    };
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesArgs {
    /// Number of seeds per dimension (seeds 0..N).
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Dimensions to test.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Jet degree (at least 6).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(IdentitiesArgs { seeds, dims, degree, tol, out });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolArgs {
    /// Dimension (with --a; default 4).
    #[arg(long)]
    pub n: Option<usize>,
    /// Coefficient of ΔR·g; omit for the verdict table.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Explicit tolerance around the threshold (overrides the decimal rule).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Dimensions of the verdict table.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(SymbolArgs { n, a, tol, dims, out });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalsArgs {
    /// s3, s4, s2xs2, t3, t4 or milnor.
    #[arg(long)]
    pub model: Option<String>,
    /// Sphere radius (s3, s4).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Model parameters: radii (s2xs2), sides (t3, t4), a,b,c (milnor).
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(FunctionalsArgs { model, radius, params, alpha, out });

/// Family, energy, initial data and integration controls.  Unknown keys in
/// config files are rejected by the schema (serde cannot combine
/// `deny_unknown_fields` with flattening).
#[derive(Debug, Default, Clone, Args, Deserialize)]
pub struct FlowSpec {
    /// s3-round, s4-round, milnor, s2xs2, t3 or t4.
    #[arg(long)]
    pub family: Option<String>,
    /// f_alpha or g_alpha (default: f_alpha in dimension 4, else g_alpha).
    #[arg(long)]
    pub energy: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Initial parameters (default: all ones).
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub blowup_threshold: Option<f64>,
    #[arg(long)]
    pub collapse_threshold: Option<f64>,
    #[arg(long)]
    pub curvature_bound: Option<f64>,
    #[arg(long)]
    pub conv_tol: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stop_on_converged: Option<bool>,
    #[arg(long)]
    pub max_steps: Option<usize>,
}
mergeable!(FlowSpec {
    family,
    energy,
    alpha,
    theta,
    horizon,
    atol,
    rtol,
    blowup_threshold,
    collapse_threshold,
    curvature_bound,
    conv_tol,
    stop_on_converged,
    max_steps,
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
pub struct FlowArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: FlowSpec,
    /// Directory for trajectory.csv and flow.json (summary always on stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Merge for FlowArgs {
    fn merge(self, other: Self) -> Self {
        Self {
            spec: self.spec.merge(other.spec),
            out: self.out.or(other.out),
        }
    }
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
pub struct BlowupArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: FlowSpec,
    /// Number of rescaled models (curvature doublings).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Merge for BlowupArgs {
    fn merge(self, other: Self) -> Self {
        Self {
            spec: self.spec.merge(other.spec),
            count: self.count.or(other.count),
            out: self.out.or(other.out),
        }
    }
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub energy: Option<String>,
    /// α values of the grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
    /// Initial parameter vectors, `;`-separated (e.g. `1,1,1.5;1,1,2`).
    #[arg(long, value_parser = parse_theta_list)]
    pub thetas: Option<ThetaList>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(SweepArgs { family, energy, alphas, thetas, horizon, atol, rtol, out });

/// A list of initial parameter vectors.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct ThetaList(pub Vec<Vec<f64>>);

fn parse_theta_list(s: &str) -> Result<ThetaList, String> {
    s.split(';')
        .map(|v| {
            v.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
                .collect()
        })
        .collect::<Result<_, _>>()
        .map(ThetaList)
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatesArgs {
    /// Run only the named corpus (default: all shipped corpora).
    #[arg(long)]
    pub corpus: Option<String>,
    /// Override the number of seeds.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Override the grid size.
    #[arg(long)]
    pub size: Option<usize>,
    /// Also evaluate at 2× and 4× the grid size and check the ×2 stability band.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
    /// Directory for per-corpus `(seed, ratio)` CSV files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(EstimatesArgs { corpus, seeds, size, refine, out });

/// Reads a config file, validates it against the published schema and
/// checks that it targets `subcommand`.  Returns the remaining fields.
pub fn load_config(path: &Path, subcommand: &str) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    validate_config(&value)?;
    let mut obj = value.as_object().cloned().unwrap_or_default();
    let target = obj.remove("subcommand");
    if target.as_ref().and_then(Value::as_str) != Some(subcommand) {
        return Err(CliError::Schema(format!(
            "config targets {}, but the `{subcommand}` subcommand was invoked",
            target.unwrap_or(Value::Null)
        )));
    }
    Ok(Value::Object(obj))
}

/// Validates a config document against [`CONFIG_SCHEMA`].
pub fn validate_config(value: &Value) -> Result<(), CliError> {
    let schema: Value = serde_json::from_str(CONFIG_SCHEMA).expect("bundled schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schema compiles");
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Schema(errors.join("; ")))
    }
}

/// Merges flags over an optional config file.
pub fn resolve<T>(flags: T, config: Option<&Path>, subcommand: &str) -> Result<T, CliError>
where
    T: Merge + for<'de> Deserialize<'de>,
{
    match config {
        None => Ok(flags),
        Some(path) => {
            let value = load_config(path, subcommand)?;
            let from_file: T =
                serde_json::from_value(value).map_err(|e| CliError::Schema(e.to_string()))?;
            Ok(flags.merge(from_file))
        }
    }
}
