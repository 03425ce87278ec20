//! Command-line flags, the JSON config file, and their merge into fully
//! specified experiments.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;

const SCHEMA_NOTE: &str = "CSV columns are listed in SCHEMA.md; JSON output carries the same fields.";

#[derive(Debug, Parser)]
#[command(
    name = "sections",
    version,
    about = "Gaussian normalization of non-central sections of log-concave densities",
    after_help = "Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 hypothesis check failed under --strict-conditions."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smoothness modulus ξ_g(r, t) along a grid of t.
    ///
    /// CSV columns: t,xi,r_max,bound_power,closed_form,r,argmax_w,argmax_s
    #[command(after_help = SCHEMA_NOTE)]
    Modulus(ModulusArgs),
    /// Apex, whitening frame and Gaussian error of a product-density section.
    ///
    /// CSV columns: T,y_min,lambda,log_alpha,sup_abs,sup_rel,ks_1d,bound_surrogate,bound_valid,proof_bound,grid_points,max_spacing
    #[command(after_help = SCHEMA_NOTE)]
    Product(ProductArgs),
    /// Apex frame of a star body and the convergence sweep in t.
    ///
    /// CSV columns: t,log_alpha,beta,sup_abs,sup_rel,ks_1d,grid_points,max_spacing
    #[command(after_help = SCHEMA_NOTE)]
    Star(StarArgs),
    /// Law of X+2Y given X+Y=T, its distance to normality, and optional Monte Carlo.
    ///
    /// CSV columns: T,mode,mean,variance,ks_normal,delta,samples,draws,acceptance_rate,ks_mc
    #[command(after_help = SCHEMA_NOTE)]
    Conditional(ConditionalArgs),
    /// Both constructions on exp(-‖x‖_p^p) along the diagonal.
    ///
    /// CSV columns: n,T,t,product_sup_abs,product_sup_rel,star_sup_abs,star_sup_rel,mtm_defect
    #[command(after_help = SCHEMA_NOTE)]
    CrossValidate(CrossValidateArgs),
    /// Product-section error over a grid of offsets T and radii r.
    ///
    /// CSV columns: T,r,y_min,sup_abs,sup_rel,bound_surrogate,bound_valid,proof_bound
    #[command(after_help = SCHEMA_NOTE)]
    Sweep(SweepArgs),
}

impl Command {
    pub fn mode(&self) -> Mode {
        match self {
            Command::Modulus(_) => Mode::Modulus,
            Command::Product(_) => Mode::Product,
            Command::Star(_) => Mode::Star,
            Command::Conditional(_) => Mode::Conditional,
            Command::CrossValidate(_) => Mode::CrossValidate,
            Command::Sweep(_) => Mode::Sweep,
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Modulus(a) => &a.common,
            Command::Product(a) => &a.common,
            Command::Star(a) => &a.common,
            Command::Conditional(a) => &a.common,
            Command::CrossValidate(a) => &a.common,
            Command::Sweep(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Modulus,
    Product,
    Star,
    Conditional,
    CrossValidate,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Modulus => "modulus",
            Mode::Product => "product",
            Mode::Star => "star",
            Mode::Conditional => "conditional",
            Mode::CrossValidate => "cross-validate",
            Mode::Sweep => "sweep",
        }
    }

    /// Config-file keys this mode reads.
    fn keys(self) -> &'static [&'static str] {
        const COMMON: &[&str] = &["mode", "out", "format", "seed", "strict_conditions"];
        const CONDITIONS: &[&str] = &["sigma", "b2_omega", "t0"];
        let own: &[&str] = match self {
            Mode::Modulus => &["profile", "r", "t_grid"],
            Mode::Product => &["profiles", "theta", "T", "r", "shells", "directions", "frame"],
            Mode::Star => &["body", "radial", "theta", "theta_axis", "dim", "t_grid", "omega", "points", "frame"],
            Mode::Conditional => &["profile", "T", "delta", "samples", "samples_out"],
            Mode::CrossValidate => &["p", "dim", "T", "omega", "points"],
            Mode::Sweep => &["profiles", "theta", "T", "r_grid", "shells", "directions"],
        };
        let with_conditions = !matches!(self, Mode::Star);
        let keys: Vec<&str> = COMMON
            .iter()
            .chain(own)
            .chain(if with_conditions { CONDITIONS } else { &[] })
            .copied()
            .collect();
        Box::leak(keys.into_boxed_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format (default: csv).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomized steps (Monte Carlo in `conditional`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Check the theorem hypotheses first and exit with code 3 if they fail.
    #[arg(long)]
    pub strict_conditions: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConditionArgs {
    /// σ > 1 in the comparability condition (default 2).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// ω > 0 in the derivative-growth condition (default 0.5).
    #[arg(long = "b2-omega")]
    pub b2_omega: Option<f64>,
    /// Threshold t0 of both conditions (default: half the smallest grid value).
    #[arg(long)]
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ModulusArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub conditions: ConditionArgs,
    /// Profile spec: power:P, cosh or gaussian.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Comma-separated t values.
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ProductArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub conditions: ConditionArgs,
    /// Comma-separated profile specs, one per coordinate.
    #[arg(long)]
    pub profiles: Option<String>,
    /// Comma-separated direction (normalized internally).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Comma-separated offsets T.
    #[arg(long = "T")]
    pub offset: Option<String>,
    /// Radius of the comparison ball.
    #[arg(long)]
    pub r: Option<f64>,
    /// Radial shells of the comparison grid (default 20).
    #[arg(long)]
    pub shells: Option<usize>,
    /// Directions per shell (default 500).
    #[arg(long)]
    pub directions: Option<usize>,
    /// Re-use the frames of an earlier JSON output instead of solving.
    #[arg(long, value_name = "PATH")]
    pub frame: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StarArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Body spec: euclidean, lp:P, orlicz:exp, orlicz:cos, orlicz:power:P, lorentz:p=P:w=W1,...
    #[arg(long)]
    pub body: Option<String>,
    /// Radial spec: power:P, halfsquare or exp.
    #[arg(long)]
    pub radial: Option<String>,
    /// Apex direction, scaled onto the boundary.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Apex on coordinate axis k (1-based).
    #[arg(long = "theta-axis")]
    pub theta_axis: Option<usize>,
    /// Dimension when it is not implied by θ or the body (default 3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated t values.
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    /// Half-width of the cube Ω = [-ω, ω]^{n-1}.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Grid points per axis of Ω (default 21).
    #[arg(long)]
    pub points: Option<usize>,
    /// Re-use the frame of an earlier JSON output instead of building one.
    #[arg(long, value_name = "PATH")]
    pub frame: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConditionalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub conditions: ConditionArgs,
    /// Profile spec: power:P, cosh or gaussian.
    #[arg(long)]
    pub profile: Option<String>,
    /// Comma-separated offsets T.
    #[arg(long = "T", allow_hyphen_values = true)]
    pub offset: Option<String>,
    /// Slab width δ for Monte Carlo (requires --samples).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Accepted Monte Carlo samples per T (default 0: no sampling).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Write the accepted samples, one per line (single T only).
    #[arg(long = "samples-out", value_name = "PATH")]
    pub samples_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CrossValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub conditions: ConditionArgs,
    /// Exponent p of exp(-‖x‖_p^p).
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated dimensions n (default 2,3).
    #[arg(long)]
    pub dim: Option<String>,
    /// Comma-separated offsets T.
    #[arg(long = "T")]
    pub offset: Option<String>,
    /// Half-width of the comparison cube (default 2).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Grid points per axis (default 21).
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub conditions: ConditionArgs,
    /// Comma-separated profile specs, one per coordinate.
    #[arg(long)]
    pub profiles: Option<String>,
    /// Comma-separated direction (normalized internally).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Comma-separated offsets T.
    #[arg(long = "T")]
    pub offset: Option<String>,
    /// Comma-separated radii r.
    #[arg(long = "r-grid")]
    pub r_grid: Option<String>,
    #[arg(long)]
    pub shells: Option<usize>,
    #[arg(long)]
    pub directions: Option<usize>,
}

/// A list given either as a comma-separated string or a JSON array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumList {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl NumList {
    fn resolve(self, key: &str) -> Result<Vec<f64>, CliError> {
        match self {
            NumList::One(v) => Ok(vec![v]),
            NumList::Many(v) => Ok(v),
            NumList::Text(s) => parse_list(&s, key),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StrList {
    Many(Vec<String>),
    Text(String),
}

impl StrList {
    fn resolve(self) -> Vec<String> {
        match self {
            StrList::Many(v) => v,
            StrList::Text(s) => split_specs(&s),
        }
    }
}

/// Contents of a `--config` file. Every key is optional; which keys a mode
/// accepts is checked separately.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub profile: Option<String>,
    pub profiles: Option<StrList>,
    pub body: Option<String>,
    pub radial: Option<String>,
    pub theta: Option<NumList>,
    pub theta_axis: Option<usize>,
    pub dim: Option<NumList>,
    #[serde(rename = "T")]
    pub offset: Option<NumList>,
    pub t_grid: Option<NumList>,
    pub r: Option<f64>,
    pub r_grid: Option<NumList>,
    pub omega: Option<f64>,
    pub points: Option<usize>,
    pub shells: Option<usize>,
    pub directions: Option<usize>,
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub strict_conditions: Option<bool>,
    pub sigma: Option<f64>,
    pub b2_omega: Option<f64>,
    pub t0: Option<f64>,
    pub frame: Option<PathBuf>,
    pub samples_out: Option<PathBuf>,
}

impl FileConfig {
    /// Reads and validates a config file for `mode`.
    pub fn load(path: &Path, mode: Mode) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, mode).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, mode: Mode) -> Result<Self, CliError> {
        let config: FileConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let raw: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let allowed: BTreeSet<&str> = mode.keys().iter().copied().collect();
        for key in raw.keys() {
            if !allowed.contains(key.as_str()) {
                return Err(CliError::Config(format!("field '{key}' is not used by mode '{}'", mode.name())));
            }
        }
        if let Some(m) = &config.mode {
            if m != mode.name() {
                return Err(CliError::Config(format!(
                    "field 'mode': config is for '{m}' but the subcommand is '{}'",
                    mode.name()
                )));
            }
        }
        Ok(config)
    }
}

pub fn parse_list(text: &str, key: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(CliError::Config(format!("field '{key}': expected comma-separated reals, got '{text}'"))),
    }
}

/// Splits a comma-separated list of specs, keeping the weight lists of
/// Lorentz specs (`lorentz:p=4:w=1,2,3`) intact.
pub fn split_specs(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let continues_weights = out.last().is_some_and(|prev| prev.contains("w=")) && part.parse::<f64>().is_ok();
        if continues_weights {
            let last = out.last_mut().expect("checked");
            last.push(',');
            last.push_str(part);
        } else {
            out.push(part.to_string());
        }
    }
    out
}

pub fn need<T>(value: Option<T>, key: &str, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("missing field '{key}' (flag {flag} or config key \"{key}\")")))
}

/// Flag value, else file value.
pub fn pick_list(flag: Option<&String>, file: Option<NumList>, key: &str) -> Result<Option<Vec<f64>>, CliError> {
    match (flag, file) {
        (Some(text), _) => parse_list(text, key).map(Some),
        (None, Some(list)) => list.resolve(key).map(Some),
        (None, None) => Ok(None),
    }
}

pub fn pick_specs(flag: Option<&String>, file: Option<StrList>) -> Option<Vec<String>> {
    flag.map(|s| split_specs(s)).or_else(|| file.map(StrList::resolve))
}

/// Settings shared by every mode after merging.
#[derive(Debug, Clone)]
pub struct Common {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub strict: bool,
}

pub fn load(command: &Command) -> Result<(FileConfig, Common), CliError> {
    let args = command.common();
    let file = match &args.config {
        Some(path) => FileConfig::load(path, command.mode())?,
        None => FileConfig::default(),
    };
    let common = Common {
        out: args.out.clone().or_else(|| file.out.clone()),
        format: args.format.or(file.format).unwrap_or(Format::Csv),
        seed: args.seed.or(file.seed).unwrap_or(1),
        strict: args.strict_conditions || file.strict_conditions.unwrap_or(false),
    };
    Ok((file, common))
}

/// Hypothesis-check parameters for the product conditions.
#[derive(Debug, Clone, Copy)]
pub struct ConditionParams {
    pub sigma: f64,
    pub omega: f64,
    pub t0: Option<f64>,
}

impl ConditionParams {
    pub fn resolve(args: &ConditionArgs, file: &FileConfig) -> Self {
        Self {
            sigma: args.sigma.or(file.sigma).unwrap_or(2.0),
            omega: args.b2_omega.or(file.b2_omega).unwrap_or(0.5),
            t0: args.t0.or(file.t0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_keep_lorentz_weights() {
        assert_eq!(split_specs("power:4, cosh"), vec!["power:4", "cosh"]);
        assert_eq!(split_specs("lorentz:p=4:w=1,2,3"), vec!["lorentz:p=4:w=1,2,3"]);
    }

    #[test]
    fn unknown_and_foreign_keys_rejected() {
        assert!(FileConfig::parse(r#"{"profile": "cosh", "bogus": 1}"#, Mode::Modulus).is_err());
        let err = FileConfig::parse(r#"{"body": "euclidean"}"#, Mode::Modulus).unwrap_err();
        assert!(err.to_string().contains("'body'"));
        assert!(FileConfig::parse(r#"{"mode": "star"}"#, Mode::Modulus).is_err());
        let ok = FileConfig::parse(r#"{"mode": "product", "T": [5, 10], "theta": "0.6,0.8"}"#, Mode::Product).unwrap();
        assert_eq!(ok.offset.unwrap().resolve("T").unwrap(), vec![5.0, 10.0]);
    }

    #[test]
    fn type_errors_carry_a_line() {
        let err = FileConfig::parse("{\n  \"r\": \"one\"\n}", Mode::Modulus).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
