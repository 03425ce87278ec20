//! One runner per subcommand. Each resolves its experiment from flags and
//! the config file, computes, and returns the rendered output.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sections_core::comparison::{GaussComparison, Region};
use sections_core::conditional::{conditional_density, conditional_mc, ks_empirical, ks_normal};
use sections_core::product::{build_frame, frame_residuals, section_error, Direction, ProductDensity, SectionFrame};
use sections_core::profiles::{
    check_product_conditions, check_radial_conditions, modulus_report, Condition, ConditionReport, ConvexProfile,
    RadialProfile,
};
use sections_core::star::{apex_frame, cross_validate_lp, star_convergence_sweep, StarBody, StarFrame};
use serde_json::Value;

use crate::config::{
    self, need, pick_list, pick_specs, Command, Common, ConditionArgs, ConditionParams, ConditionalArgs,
    CrossValidateArgs, FileConfig, Format, ModulusArgs, ProductArgs, StarArgs, SweepArgs,
};
use crate::error::CliError;
use crate::output::{format_float, schema, Cell, Json, Table};

/// Rendered result of one run.
pub struct Output {
    pub common: Common,
    pub table: Table,
    pub json: Json,
    /// Extra text file (Monte Carlo samples).
    pub side_file: Option<(PathBuf, String)>,
}

impl Output {
    pub fn render(&self) -> String {
        match self.common.format {
            Format::Csv => self.table.to_csv(),
            Format::Json => self.json.render(),
        }
    }
}

pub fn run(command: &Command) -> Result<Output, CliError> {
    let (file, common) = config::load(command)?;
    match command {
        Command::Modulus(a) => modulus(a, file, common),
        Command::Product(a) => product(a, file, common),
        Command::Star(a) => star(a, file, common),
        Command::Conditional(a) => conditional(a, file, common),
        Command::CrossValidate(a) => cross_validate(a, file, common),
        Command::Sweep(a) => sweep(a, file, common),
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_profile(spec: &str) -> Result<ConvexProfile, CliError> {
    spec.parse::<ConvexProfile>()
        .map_err(|e| config_err(format!("profile '{spec}': {e}")))
}

fn parse_density(specs: &[String]) -> Result<ProductDensity, CliError> {
    let profiles = specs.iter().map(|s| parse_profile(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(ProductDensity::new(profiles)?)
}

fn labels(density: &ProductDensity) -> Json {
    Json::Arr(density.profiles().iter().map(|g| Json::Str(g.label())).collect())
}

fn require_positive(v: f64, key: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("field '{key}' must be positive, got {v}")))
    }
}

fn require_count(v: usize, key: &str) -> Result<usize, CliError> {
    if v > 0 {
        Ok(v)
    } else {
        Err(config_err(format!("field '{key}' must be at least 1")))
    }
}

/// Runs the (b1)/(b2) diagnostics on `profiles` at the magnitudes in `grid`.
fn enforce_product_conditions(
    common: &Common,
    args: &ConditionArgs,
    file: &FileConfig,
    profiles: &[ConvexProfile],
    grid: &[f64],
) -> Result<(), CliError> {
    if !common.strict {
        return Ok(());
    }
    let params = ConditionParams::resolve(args, file);
    let grid: Vec<f64> = grid.iter().map(|t| t.abs()).collect();
    let smallest = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let t0 = params.t0.unwrap_or(0.5 * smallest);
    let report = check_product_conditions(profiles, params.sigma, params.omega, t0, &grid)?;
    report_conditions(&report)
}

fn report_conditions(report: &ConditionReport) -> Result<(), CliError> {
    match report.first_violation() {
        None => Ok(()),
        Some(c) => {
            let name = match c.condition {
                Condition::B1 => "(b1) comparable derivatives",
                Condition::B2 => "(b2) derivative growth",
                Condition::RadialGrowth => "radial growth of t·ρ'(t)",
                Condition::RadialFlatness => "radial flatness of ρ''/ρ'^2",
            };
            let total = report.checks.iter().filter(|k| !k.passed).count();
            Err(CliError::Conditions(format!(
                "{name} fails at t = {} (profiles {:?}, value {}); {total} failing check(s)",
                c.t, c.indices, c.value
            )))
        }
    }
}

fn comparison_json(c: &GaussComparison) -> Json {
    Json::obj([
        ("sup_abs", Json::Num(c.sup_abs)),
        ("sup_rel", Json::opt(c.sup_rel)),
        ("ks_1d", Json::opt(c.ks_1d)),
        ("bound_surrogate", Json::opt(c.bound_surrogate)),
        ("bound_valid", c.bound_valid.map_or(Json::Null, Json::Bool)),
        ("proof_bound", Json::opt(c.proof_bound)),
        ("grid_points", Json::Int(c.grid.points as i64)),
        ("max_spacing", Json::Num(c.grid.max_spacing)),
    ])
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> Json {
    let (rows, cols) = m.shape();
    let data: Vec<f64> = (0..rows).flat_map(|i| (0..cols).map(move |j| m[(i, j)])).collect();
    Json::matrix(rows, cols, &data)
}

// ----- reading stored frames -----

fn field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Value, CliError> {
    v.get(key).ok_or_else(|| config_err(format!("{at}: missing field '{key}'")))
}

fn as_f64(v: &Value, at: &str) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| config_err(format!("{at}: expected a number")))
}

fn as_vec(v: &Value, at: &str) -> Result<Vec<f64>, CliError> {
    v.as_array()
        .ok_or_else(|| config_err(format!("{at}: expected an array")))?
        .iter()
        .map(|x| as_f64(x, at))
        .collect()
}

fn as_matrix(v: &Value, rows: usize, cols: usize, at: &str) -> Result<Vec<f64>, CliError> {
    let r = field(v, "rows", at)?.as_u64();
    let c = field(v, "cols", at)?.as_u64();
    if r != Some(rows as u64) || c != Some(cols as u64) {
        return Err(config_err(format!("{at}: expected a {rows} x {cols} matrix")));
    }
    let data = as_vec(field(v, "data", at)?, at)?;
    if data.len() != rows * cols {
        return Err(config_err(format!("{at}: data has {} entries, expected {}", data.len(), rows * cols)));
    }
    Ok(data)
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn read_product_frames(path: &Path) -> Result<Vec<SectionFrame>, CliError> {
    let doc = read_json(path)?;
    let records = field(&doc, "records", "frame file")?
        .as_array()
        .ok_or_else(|| config_err("frame file: 'records' must be an array"))?;
    if records.is_empty() {
        return Err(config_err("frame file: no records"));
    }
    records
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let at = format!("records[{k}].frame");
            let f = field(rec, "frame", &format!("records[{k}]"))?;
            let theta = as_vec(field(f, "theta", &at)?, &at)?;
            let n = theta.len();
            if n < 2 {
                return Err(config_err(format!("{at}: theta needs at least 2 entries")));
            }
            let y = as_vec(field(f, "y", &at)?, &at)?;
            let q = as_matrix(field(f, "q", &at)?, n, n - 1, &format!("{at}.q"))?;
            Ok(SectionFrame::from_parts(
                theta,
                y,
                as_f64(field(f, "lambda", &at)?, &at)?,
                &q,
                as_f64(field(f, "log_alpha", &at)?, &at)?,
                as_f64(field(f, "T", &at)?, &at)?,
            )?)
        })
        .collect()
}

fn read_star_frame(path: &Path) -> Result<StarFrame, CliError> {
    let doc = read_json(path)?;
    let f = field(&doc, "frame", "frame file")?;
    let at = "frame";
    let theta = as_vec(field(f, "theta", at)?, at)?;
    let n = theta.len();
    if n < 2 {
        return Err(config_err("frame: theta needs at least 2 entries"));
    }
    let phi = as_vec(field(f, "phi", at)?, at)?;
    let q = as_matrix(field(f, "q", at)?, n, n - 1, "frame.q")?;
    let h = as_matrix(field(f, "hessian", at)?, n - 1, n - 1, "frame.hessian")?;
    let err = as_f64(field(f, "hessian_error", at)?, at)?;
    Ok(StarFrame::from_parts(theta, phi, &q, &h, err)?)
}

// ----- modulus -----

fn modulus(a: &ModulusArgs, file: FileConfig, common: Common) -> Result<Output, CliError> {
    let g = parse_profile(&need(a.profile.clone().or(file.profile.clone()), "profile", "--profile")?)?;
    let r = require_positive(need(a.r.or(file.r), "r", "--r")?, "r")?;
    let t_grid = need(pick_list(a.t_grid.as_ref(), file.t_grid.clone(), "t_grid")?, "t_grid", "--t-grid")?;
    enforce_product_conditions(&common, &a.conditions, &file, std::slice::from_ref(&g), &t_grid)?;

    let reports = t_grid
        .par_iter()
        .map(|&t| modulus_report(&g, r, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(schema::MODULUS);
    for rep in &reports {
        table.push(vec![
            Cell::Num(rep.t),
            Cell::Num(rep.xi),
            Cell::opt(rep.r_max),
            Cell::opt(rep.bound_power),
            Cell::opt(rep.closed_form),
            Cell::Num(rep.r),
            Cell::Num(rep.argmax.0),
            Cell::Num(rep.argmax.1),
        ]);
    }
    let json = Json::obj([
        ("mode", Json::Str("modulus".into())),
        ("profile", Json::Str(g.label())),
        ("r", Json::Num(r)),
        ("records", table.to_json_rows()),
    ]);
    Ok(Output {
        common,
        table,
        json,
        side_file: None,
    })
}

// ----- product -----

fn product(a: &ProductArgs, file: FileConfig, common: Common) -> Result<Output, CliError> {
    let specs = need(pick_specs(a.profiles.as_ref(), file.profiles.clone()), "profiles", "--profiles")?;
    let density = parse_density(&specs)?;
    let r = require_positive(need(a.r.or(file.r), "r", "--r")?, "r")?;
    let shells = require_count(a.shells.or(file.shells).unwrap_or(20), "shells")?;
    let directions = require_count(a.directions.or(file.directions).unwrap_or(500), "directions")?;
    let region = Region::Ball {
        radius: r,
        shells,
        directions,
    };

    let theta = pick_list(a.theta.as_ref(), file.theta.clone(), "theta")?;
    let offsets = pick_list(a.offset.as_ref(), file.offset.clone(), "T")?;
    let frame_path = a.frame.clone().or(file.frame.clone());
    let frames: Vec<SectionFrame> = match frame_path {
        Some(path) => {
            if theta.is_some() || offsets.is_some() {
                return Err(config_err("'frame' replaces 'theta' and 'T'; give one or the other"));
            }
            read_product_frames(&path)?
        }
        None => {
            let theta = need(theta, "theta", "--theta")?;
            let mut offsets = need(offsets, "T", "--T")?;
            offsets.sort_by(f64::total_cmp);
            let dir = Direction::new(&theta)?;
            offsets
                .par_iter()
                .map(|&t| build_frame(&density, &dir, t))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    if frames.iter().any(|f| f.dim() != density.dim()) {
        return Err(config_err(format!("frames must have dimension {}", density.dim())));
    }
    let apex_coords: Vec<f64> = frames.iter().flat_map(|f| f.apex().to_vec()).collect();
    enforce_product_conditions(&common, &a.conditions, &file, density.profiles(), &apex_coords)?;

    let results = frames
        .par_iter()
        .map(|f| Ok((frame_residuals(&density, f)?, section_error(&density, f, r, &region)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = Table::new(schema::PRODUCT);
    let mut records = Vec::new();
    for (f, (res, cmp)) in frames.iter().zip(&results) {
        table.push(vec![
            Cell::Num(f.offset()),
            Cell::Num(f.y_min()),
            Cell::Num(f.lambda()),
            Cell::Num(f.log_alpha()),
            Cell::Num(cmp.sup_abs),
            Cell::opt(cmp.sup_rel),
            Cell::opt(cmp.ks_1d),
            Cell::opt(cmp.bound_surrogate),
            Cell::opt_bool(cmp.bound_valid),
            Cell::opt(cmp.proof_bound),
            Cell::Int(cmp.grid.points as i64),
            Cell::Num(cmp.grid.max_spacing),
        ]);
        let n = f.dim();
        records.push(Json::obj([
            ("T", Json::Num(f.offset())),
            (
                "frame",
                Json::obj([
                    ("theta", Json::nums(f.theta())),
                    ("y", Json::nums(f.apex())),
                    ("lambda", Json::Num(f.lambda())),
                    ("q", Json::matrix(n, n - 1, &f.q_row_major())),
                    ("log_alpha", Json::Num(f.log_alpha())),
                    ("T", Json::Num(f.offset())),
                    ("y_min", Json::Num(f.y_min())),
                ]),
            ),
            (
                "residuals",
                Json::obj([
                    ("stationarity", Json::Num(res.stationarity)),
                    ("whitening", Json::Num(res.whitening)),
                    ("orthogonality", Json::Num(res.orthogonality)),
                    ("offset", Json::Num(res.offset)),
                    ("normalizer", Json::Num(res.normalizer)),
                ]),
            ),
            ("comparison", comparison_json(cmp)),
        ]));
    }
    let json = Json::obj([
        ("mode", Json::Str("product".into())),
        ("profiles", labels(&density)),
        ("r", Json::Num(r)),
        ("shells", Json::Int(shells as i64)),
        ("directions", Json::Int(directions as i64)),
        ("records", Json::Arr(records)),
    ]);
    Ok(Output {
        common,
        table,
        json,
        side_file: None,
    })
}

// ----- star -----

/// Dimension implied by a Lorentz weight list, if the spec has one.
fn lorentz_dim(spec: &str) -> Option<usize> {
    spec.trim()
        .strip_prefix("lorentz:")
        .and_then(|rest| rest.split_once("w="))
        .map(|(_, w)| w.split(',').count())
}

fn star(a: &StarArgs, file: FileConfig, common: Common) -> Result<Output, CliError> {
    let body_spec = need(a.body.clone().or(file.body.clone()), "body", "--body")?;
    let rho_spec = need(a.radial.clone().or(file.radial.clone()), "radial", "--radial")?;
    let rho = rho_spec
        .parse::<RadialProfile>()
        .map_err(|e| config_err(format!("radial '{rho_spec}': {e}")))?;
    let mut t_grid = need(pick_list(a.t_grid.as_ref(), file.t_grid.clone(), "t_grid")?, "t_grid", "--t-grid")?;
    t_grid.sort_by(f64::total_cmp);
    let omega = require_positive(need(a.omega.or(file.omega), "omega", "--omega")?, "omega")?;
    let points = require_count(a.points.or(file.points).unwrap_or(21), "points")?;
    let dim_field = pick_list(None, file.dim.clone(), "dim")?;
    let dim_given = match (a.dim, dim_field) {
        (Some(d), _) => Some(d),
        (None, Some(v)) if v.len() == 1 && v[0] >= 0.0 && v[0].fract() == 0.0 => Some(v[0] as usize),
        (None, Some(_)) => return Err(config_err("field 'dim' must be a single non-negative integer")),
        (None, None) => None,
    };
    let theta_given = pick_list(a.theta.as_ref(), file.theta.clone(), "theta")?;
    let axis = a.theta_axis.or(file.theta_axis);
    let frame_path = a.frame.clone().or(file.frame.clone());

    let stored = match &frame_path {
        Some(path) => {
            if theta_given.is_some() || axis.is_some() {
                return Err(config_err("'frame' replaces 'theta'/'theta_axis'; give one or the other"));
            }
            Some(read_star_frame(path)?)
        }
        None => None,
    };
    let dim = [
        lorentz_dim(&body_spec),
        stored.as_ref().map(StarFrame::dim),
        theta_given.as_ref().map(Vec::len),
        dim_given,
    ]
    .into_iter()
    .flatten()
    .try_fold(None, |acc: Option<usize>, d| match acc {
        Some(prev) if prev != d => Err(config_err(format!("inconsistent dimensions {prev} and {d}"))),
        _ => Ok(Some(d)),
    })?
    .unwrap_or(3);
    let body = StarBody::parse(&body_spec, dim).map_err(|e| config_err(format!("body '{body_spec}': {e}")))?;

    let frame = match stored {
        Some(f) => f,
        None => {
            let direction = match (theta_given, axis) {
                (Some(_), Some(_)) => return Err(config_err("give 'theta' or 'theta_axis', not both")),
                (Some(v), None) => v,
                (None, Some(k)) if (1..=dim).contains(&k) => {
                    let mut v = vec![0.0; dim];
                    v[k - 1] = 1.0;
                    v
                }
                (None, Some(k)) => return Err(config_err(format!("theta_axis {k} is outside 1..={dim}"))),
                (None, None) => return Err(config_err("missing field 'theta' (flag --theta or --theta-axis)")),
            };
            let gauge = body.minkowski(&direction)?;
            let apex: Vec<f64> = direction.iter().map(|c| c / gauge).collect();
            apex_frame(&body, &apex, None)?
        }
    };
    if common.strict {
        let diag = check_radial_conditions(&rho, omega, &t_grid)?;
        report_conditions(&diag.report)?;
    }
    let region = Region::Cube {
        lo: -omega,
        hi: omega,
        points,
    };
    let results = star_convergence_sweep(&body, &rho, &frame, &region, &t_grid)?;

    let mut table = Table::new(schema::STAR);
    for (&t, cmp) in t_grid.iter().zip(&results) {
        table.push(vec![
            Cell::Num(t),
            Cell::Num(frame.log_alpha(&rho, t)?),
            Cell::Num(frame.beta(&rho, t)?),
            Cell::Num(cmp.sup_abs),
            Cell::opt(cmp.sup_rel),
            Cell::opt(cmp.ks_1d),
            Cell::Int(cmp.grid.points as i64),
            Cell::Num(cmp.grid.max_spacing),
        ]);
    }
    let json = Json::obj([
        ("mode", Json::Str("star".into())),
        ("body", Json::Str(body.label())),
        ("radial", Json::Str(rho.label())),
        ("omega", Json::Num(omega)),
        ("points", Json::Int(points as i64)),
        (
            "frame",
            Json::obj([
                ("theta", Json::nums(frame.theta())),
                ("phi", Json::nums(frame.phi())),
                ("q", matrix_json(frame.q())),
                ("hessian", matrix_json(frame.hessian())),
                ("hessian_error", Json::Num(frame.hessian_error())),
                ("lambda", matrix_json(frame.lambda())),
                ("t_map", matrix_json(frame.t_map())),
            ]),
        ),
        ("records", table.to_json_rows()),
    ]);
    Ok(Output {
        common,
        table,
        json,
        side_file: None,
    })
}

// ----- conditional -----

fn conditional(a: &ConditionalArgs, file: FileConfig, common: Common) -> Result<Output, CliError> {
    let g = parse_profile(&need(a.profile.clone().or(file.profile.clone()), "profile", "--profile")?)?;
    let mut offsets = need(pick_list(a.offset.as_ref(), file.offset.clone(), "T")?, "T", "--T")?;
    offsets.sort_by(f64::total_cmp);
    let samples = a.samples.or(file.samples).unwrap_or(0);
    let delta = a.delta.or(file.delta);
    let samples_out = a.samples_out.clone().or(file.samples_out.clone());
    if samples > 0 && delta.is_none() {
        return Err(config_err("'samples' requires 'delta'"));
    }
    if let Some(d) = delta {
        require_positive(d, "delta")?;
    }
    if samples_out.is_some() && (offsets.len() != 1 || samples == 0) {
        return Err(config_err("'samples_out' needs exactly one T and samples > 0"));
    }
    let halves: Vec<f64> = offsets.iter().map(|t| 0.5 * t).collect();
    enforce_product_conditions(&common, &a.conditions, &file, &[g.clone(), g.clone()], &halves)?;

    let mut table = Table::new(schema::CONDITIONAL);
    let mut side_text = None;
    for &t in &offsets {
        let law = conditional_density(&g, t)?;
        let ks = ks_normal(&law)?;
        let mc = match delta {
            Some(d) if samples > 0 => Some(conditional_mc(&g, t, d, samples, common.seed)?),
            _ => None,
        };
        let ks_mc = mc.as_ref().map(|s| ks_empirical(&s.values, &law));
        table.push(vec![
            Cell::Num(t),
            Cell::Num(law.mode()),
            Cell::Num(law.mean()),
            Cell::Num(law.variance()),
            Cell::Num(ks),
            Cell::opt(delta),
            Cell::Int(samples as i64),
            mc.as_ref().map_or(Cell::Missing, |s| Cell::Int(s.draws as i64)),
            Cell::opt(mc.as_ref().map(|s| s.acceptance_rate)),
            Cell::opt(ks_mc),
        ]);
        if let (Some(path), Some(s)) = (&samples_out, &mc) {
            let mut text = String::with_capacity(24 * s.values.len());
            for v in &s.values {
                text.push_str(&format_float(*v));
                text.push('\n');
            }
            side_text = Some((path.clone(), text));
        }
    }
    let json = Json::obj([
        ("mode", Json::Str("conditional".into())),
        ("profile", Json::Str(g.label())),
        ("seed", Json::Int(common.seed as i64)),
        ("records", table.to_json_rows()),
    ]);
    Ok(Output {
        common,
        table,
        json,
        side_file: side_text,
    })
}

// ----- cross-validate -----

fn cross_validate(a: &CrossValidateArgs, file: FileConfig, common: Common) -> Result<Output, CliError> {
    let p = need(a.p.or(file.p), "p", "--p")?;
    let dims_raw = pick_list(a.dim.as_ref(), file.dim.clone(), "dim")?.unwrap_or_else(|| vec![2.0, 3.0]);
    let dims = dims_raw
        .iter()
        .map(|&d| {
            if d >= 2.0 && d.fract() == 0.0 {
                Ok(d as usize)
            } else {
                Err(config_err(format!("field 'dim': {d} is not an integer >= 2")))
            }
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let offsets = need(pick_list(a.offset.as_ref(), file.offset.clone(), "T")?, "T", "--T")?;
    let omega = require_positive(a.omega.or(file.omega).unwrap_or(2.0), "omega")?;
    let points = require_count(a.points.or(file.points).unwrap_or(21), "points")?;
    let g = ConvexProfile::power(p)?;
    for &n in &dims {
        let grid: Vec<f64> = offsets.iter().map(|t| t / (n as f64).sqrt()).collect();
        enforce_product_conditions(&common, &a.conditions, &file, &vec![g.clone(); n], &grid)?;
    }
    let region = Region::Cube {
        lo: -omega,
        hi: omega,
        points,
    };
    let mut keys: Vec<(usize, f64)> = dims.iter().flat_map(|&n| offsets.iter().map(move |&t| (n, t))).collect();
    keys.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let results = keys
        .par_iter()
        .map(|&(n, t)| cross_validate_lp(p, n, t, &region))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(schema::CROSS_VALIDATE);
    let mut records = Vec::new();
    for cv in &results {
        table.push(vec![
            Cell::Int(cv.dim as i64),
            Cell::Num(cv.offset),
            Cell::Num(cv.t),
            Cell::Num(cv.product.sup_abs),
            Cell::opt(cv.product.sup_rel),
            Cell::Num(cv.star.sup_abs),
            Cell::opt(cv.star.sup_rel),
            Cell::Num(cv.orthogonality_defect),
        ]);
        records.push(Json::obj([
            ("n", Json::Int(cv.dim as i64)),
            ("T", Json::Num(cv.offset)),
            ("t", Json::Num(cv.t)),
            ("product", comparison_json(&cv.product)),
            ("star", comparison_json(&cv.star)),
            ("transition", matrix_json(&cv.transition)),
            ("mtm_defect", Json::Num(cv.orthogonality_defect)),
        ]));
    }
    let json = Json::obj([
        ("mode", Json::Str("cross-validate".into())),
        ("p", Json::Num(p)),
        ("omega", Json::Num(omega)),
        ("points", Json::Int(points as i64)),
        ("records", Json::Arr(records)),
    ]);
    Ok(Output {
        common,
        table,
        json,
        side_file: None,
    })
}

// ----- sweep -----

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sweep(a: &SweepArgs, file: FileConfig, common: Common) -> Result<Output, CliError> {
    let specs = need(pick_specs(a.profiles.as_ref(), file.profiles.clone()), "profiles", "--profiles")?;
    let density = parse_density(&specs)?;
    let theta = need(pick_list(a.theta.as_ref(), file.theta.clone(), "theta")?, "theta", "--theta")?;
    let mut offsets = need(pick_list(a.offset.as_ref(), file.offset.clone(), "T")?, "T", "--T")?;
    let mut radii = need(pick_list(a.r_grid.as_ref(), file.r_grid.clone(), "r_grid")?, "r_grid", "--r-grid")?;
    for &r in &radii {
        require_positive(r, "r_grid")?;
    }
    offsets.sort_by(f64::total_cmp);
    radii.sort_by(f64::total_cmp);
    let shells = require_count(a.shells.or(file.shells).unwrap_or(20), "shells")?;
    let directions = require_count(a.directions.or(file.directions).unwrap_or(500), "directions")?;
    let dir = Direction::new(&theta)?;

    let frames = offsets
        .par_iter()
        .map(|&t| build_frame(&density, &dir, t))
        .collect::<Result<Vec<_>, _>>()?;
    let apex_coords: Vec<f64> = frames.iter().flat_map(|f| f.apex().to_vec()).collect();
    enforce_product_conditions(&common, &a.conditions, &file, density.profiles(), &apex_coords)?;

    let jobs: Vec<(usize, f64)> = (0..frames.len()).flat_map(|i| radii.iter().map(move |&r| (i, r))).collect();
    let results = jobs
        .par_iter()
        .map(|&(i, r)| {
            let region = Region::Ball {
                radius: r,
                shells,
                directions,
            };
            section_error(&density, &frames[i], r, &region)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(schema::SWEEP);
    for (&(i, r), cmp) in jobs.iter().zip(&results) {
        table.push(vec![
            Cell::Num(offsets[i]),
            Cell::Num(r),
            Cell::Num(frames[i].y_min()),
            Cell::Num(cmp.sup_abs),
            Cell::opt(cmp.sup_rel),
            Cell::opt(cmp.bound_surrogate),
            Cell::opt_bool(cmp.bound_valid),
            Cell::opt(cmp.proof_bound),
        ]);
    }
    let slopes: Vec<Json> = radii
        .iter()
        .map(|&r| {
            let ys: Vec<f64> = jobs
                .iter()
                .zip(&results)
                .filter(|(j, _)| j.1 == r)
                .map(|(_, c)| c.sup_rel.unwrap_or(f64::NAN))
                .collect();
            Json::obj([("r", Json::Num(r)), ("slope_sup_rel", Json::opt(log_log_slope(&offsets, &ys)))])
        })
        .collect();
    let json = Json::obj([
        ("mode", Json::Str("sweep".into())),
        ("profiles", labels(&density)),
        ("theta", Json::nums(dir.theta())),
        ("shells", Json::Int(shells as i64)),
        ("directions", Json::Int(directions as i64)),
        ("records", table.to_json_rows()),
        ("slopes", Json::Arr(slopes)),
    ]);
    Ok(Output {
        common,
        table,
        json,
        side_file: None,
    })
}
