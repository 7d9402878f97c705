//! Command-line surface of the `det` binary.
//!
//! Dimension indices on the command line are 1-based. Exit codes: 0 on
//! success, 1 on usage errors (bad flags, missing files, out-of-range
//! dimensions), 2 on data or validation errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::build::{build_tree, BuildConfig, FitTest};
use crate::error::DetError;
use crate::io::{read_csv, read_tree, write_csv, write_tree};
use crate::marginal::Order;
use crate::reference::{
    gaussian_conditional, sample_dirichlet, sample_gaussian, DirichletSpec, GaussianSpec,
};
use crate::sample::{find_conditioned_leaves, sample_conditional};
use crate::stats::{grid_ise, ks_test, normal_cdf, sample_moments, Axis, Lattice};
use crate::tree::{Condition, DetTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "det",
    version,
    about = "Distribution element trees: build, evaluate and resample"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a tree from a CSV ensemble.
    Build(BuildArgs),
    /// Draw (conditional) samples from a tree.
    Sample(SampleArgs),
    /// Evaluate the density on a grid, optionally on a slice.
    Density(DensityArgs),
    /// Generate a reference ensemble.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Compare a tree and its samples against a reference distribution.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderArg {
    Constant,
    Linear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitTestArg {
    Ks,
    HalfMass,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "linear")]
    order: OrderArg,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long = "min-leaf", default_value_t = 10)]
    min_leaf: usize,
    #[arg(long = "max-depth", default_value_t = 40)]
    max_depth: usize,
    #[arg(long, default_value_t = 1e-9)]
    padding: f64,
    #[arg(long = "fit-test", value_enum, default_value = "ks")]
    fit_test: FitTestArg,
    /// Disable the pairwise quadrant independence test.
    #[arg(long = "no-pairwise")]
    no_pairwise: bool,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long = "n")]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Prescribed coordinate, `i=v` with 1-based `i`; repeatable.
    #[arg(long = "cond")]
    cond: Vec<String>,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Comma-separated `dim:lo:hi:points` axes (1-based dims).
    #[arg(long)]
    grid: String,
    /// Fixed coordinate `i=v`; repeatable.
    #[arg(long = "fix")]
    fix: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Multivariate Gaussian (defaults to the 3-D validation case).
    Gaussian {
        #[arg(long)]
        mu: Option<String>,
        /// Row-major covariance; rows may be separated by `;`.
        #[arg(long)]
        cov: Option<String>,
        #[arg(long = "n")]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bivariate Dirichlet (defaults to alpha = 1.25,2,0.75).
    Dirichlet {
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long = "n")]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Reference {
    Gaussian,
    Dirichlet,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, value_enum)]
    against: Reference,
    /// `mu=..;cov=..` for gaussian, `alpha=..` for dirichlet.
    #[arg(long)]
    params: Option<String>,
    /// Samples drawn from the tree (e.g. by `det sample`).
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Condition the samples were drawn under; repeatable.
    #[arg(long = "cond")]
    cond: Vec<String>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long = "mean-tol", default_value_t = 0.05)]
    mean_tol: f64,
    #[arg(long = "cov-tol", default_value_t = 0.03)]
    cov_tol: f64,
    #[arg(long = "ks-max", default_value_t = 0.05)]
    ks_max: f64,
    /// Lattice points per axis for the integrated squared error.
    #[arg(long = "grid-points", default_value_t = 41)]
    grid_points: usize,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl From<DetError> for CliError {
    fn from(e: DetError) -> Self {
        match &e {
            DetError::DimensionOutOfRange { .. } => CliError::Usage(e.to_string()),
            DetError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DATA
        }
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Build(a) => cmd_build(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Density(a) => cmd_density(a),
        Command::Gen(g) => cmd_gen(g),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn open_tree(path: &Path) -> CliResult<DetTree> {
    if !path.exists() {
        return Err(usage(format!("tree file not found: {}", path.display())));
    }
    Ok(read_tree(path)?)
}

fn cmd_build(a: BuildArgs) -> CliResult {
    if !a.input.exists() {
        return Err(usage(format!(
            "input file not found: {}",
            a.input.display()
        )));
    }
    let config = BuildConfig {
        order: match a.order {
            OrderArg::Constant => Order::Constant,
            OrderArg::Linear => Order::Linear,
        },
        fit_test: match a.fit_test {
            FitTestArg::Ks => FitTest::Kolmogorov,
            FitTestArg::HalfMass => FitTest::HalfMass,
        },
        pairwise_independence: !a.no_pairwise,
        alpha: a.alpha,
        min_leaf_count: a.min_leaf,
        max_depth: a.max_depth,
        bounds_padding_rel: a.padding,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let data = read_csv(&a.input)?;
    let tree = build_tree(&data, &config)?;
    write_tree(&a.out, &tree)?;
    eprintln!(
        "built tree: n = {}, d = {}, {} leaves, depth {}",
        tree.n(),
        tree.dims(),
        tree.leaf_count(),
        tree.max_depth()
    );
    Ok(())
}

/// Parses `i=v` with 1-based `i` into a 0-based pair.
fn parse_assignment(s: &str) -> CliResult<(usize, f64)> {
    let (i, v) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("expected `i=value`, got `{s}`")))?;
    let i: usize = i
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad dimension index in `{s}`")))?;
    if i == 0 {
        return Err(usage("dimension indices are 1-based"));
    }
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad value in `{s}`")))?;
    if !v.is_finite() {
        return Err(usage(format!("non-finite value in `{s}`")));
    }
    Ok((i - 1, v))
}

fn parse_condition(items: &[String], dims: usize) -> CliResult<Condition> {
    let mut entries = Vec::with_capacity(items.len());
    for s in items {
        let (i, v) = parse_assignment(s)?;
        if i >= dims {
            return Err(usage(format!(
                "dimension out of range: {} (tree has {dims})",
                i + 1
            )));
        }
        if entries.iter().any(|e: &(usize, f64)| e.0 == i) {
            return Err(usage(format!(
                "dimension {} conditioned more than once",
                i + 1
            )));
        }
        entries.push((i, v));
    }
    Condition::new(entries, dims).map_err(|e| usage(e.to_string()))
}

fn cmd_sample(a: SampleArgs) -> CliResult {
    let tree = open_tree(&a.tree)?;
    let cond = parse_condition(&a.cond, tree.dims())?;
    if cond.len() == tree.dims() {
        return Err(usage("condition fixes every dimension"));
    }
    let samples = sample_conditional(&tree, &cond, a.seed, a.count)?;
    write_csv(&a.out, &samples)?;
    Ok(())
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split([',', ';'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| usage(format!("bad number `{t}`")))
        })
        .collect()
}

fn cmd_density(a: DensityArgs) -> CliResult {
    let tree = open_tree(&a.tree)?;
    let d = tree.dims();
    let fixed = parse_condition(&a.fix, d)?;
    let mut grid_dims = Vec::new();
    let mut axes = Vec::new();
    for part in a.grid.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let f: Vec<&str> = part.split(':').collect();
        if f.len() != 4 {
            return Err(usage(format!("grid axis `{part}` is not dim:lo:hi:points")));
        }
        let dim: usize = f[0]
            .parse()
            .map_err(|_| usage(format!("bad dimension in `{part}`")))?;
        if dim == 0 || dim > d {
            return Err(usage(format!(
                "dimension out of range: {dim} (tree has {d})"
            )));
        }
        let lo: f64 = f[1]
            .parse()
            .map_err(|_| usage(format!("bad lower bound in `{part}`")))?;
        let hi: f64 = f[2]
            .parse()
            .map_err(|_| usage(format!("bad upper bound in `{part}`")))?;
        let n: usize = f[3]
            .parse()
            .map_err(|_| usage(format!("bad point count in `{part}`")))?;
        let axis = if n == 1 && lo == hi {
            Axis { lo, hi, points: 1 }
        } else {
            Axis::new(lo, hi, n).map_err(|e| usage(e.to_string()))?
        };
        if grid_dims.contains(&(dim - 1)) || fixed.value(dim - 1).is_some() {
            return Err(usage(format!("dimension {dim} given more than once")));
        }
        grid_dims.push(dim - 1);
        axes.push(axis);
    }
    if grid_dims.len() + fixed.len() != d {
        return Err(usage(format!(
            "grid and fixed dimensions must cover all {d} dimensions exactly once"
        )));
    }
    let marginal = if fixed.is_empty() {
        None
    } else {
        let set = find_conditioned_leaves(&tree, &fixed)?;
        if set.total <= 0.0 {
            return Err(DetError::ZeroDensity.into());
        }
        Some(set.total)
    };

    let mut names: Vec<String> = tree.column_names().to_vec();
    names.push("density".into());
    if marginal.is_some() {
        names.push("conditional_density".into());
    }
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push('\n');
    let lattice = Lattice::new(axes);
    let mut x = vec![0.0; d];
    for &(i, v) in fixed.entries() {
        x[i] = v;
    }
    let mut failure = None;
    lattice.for_each(|p, _| {
        for (k, &dim) in grid_dims.iter().enumerate() {
            x[dim] = p[k];
        }
        let rho = match tree.density(&x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        for v in &x {
            let _ = write!(out, "{v},");
        }
        let _ = write!(out, "{rho}");
        if let Some(m) = marginal {
            let _ = write!(out, ",{}", rho / m);
        }
        out.push('\n');
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    std::fs::write(&a.out, out).map_err(DetError::from)?;
    Ok(())
}

fn gaussian_from_strings(mu: Option<&str>, cov: Option<&str>) -> CliResult<GaussianSpec> {
    match (mu, cov) {
        (None, None) => Ok(GaussianSpec::validation_case()),
        (mu, Some(cov)) => {
            let cov = parse_list(cov)?;
            let d = (cov.len() as f64).sqrt().round() as usize;
            if d * d != cov.len() || d == 0 {
                return Err(usage(format!(
                    "covariance has {} entries, not a square",
                    cov.len()
                )));
            }
            let mu = match mu {
                Some(m) => parse_list(m)?,
                None => vec![0.0; d],
            };
            if mu.len() != d {
                return Err(usage(format!(
                    "mean has {} entries, covariance is {d}x{d}",
                    mu.len()
                )));
            }
            let rows = cov.chunks(d).map(|r| r.to_vec()).collect();
            GaussianSpec::new(mu, rows).map_err(|e| usage(e.to_string()))
        }
        (Some(mu), None) => {
            let mu = parse_list(mu)?;
            if mu.len() != 3 {
                return Err(usage(
                    "--mu without --cov needs 3 entries (validation covariance)",
                ));
            }
            let g = GaussianSpec::validation_case();
            GaussianSpec::from_matrix(nalgebra::DVector::from_vec(mu), g.cov().clone())
                .map_err(|e| usage(e.to_string()))
        }
    }
}

fn dirichlet_from_string(alpha: Option<&str>) -> CliResult<DirichletSpec> {
    match alpha {
        None => Ok(DirichletSpec::validation_case()),
        Some(s) => {
            let a = parse_list(s)?;
            let a: [f64; 3] = a
                .try_into()
                .map_err(|_| usage("Dirichlet needs exactly 3 parameters"))?;
            DirichletSpec::new(a).map_err(|e| usage(e.to_string()))
        }
    }
}

fn cmd_gen(g: GenCommand) -> CliResult {
    let (data, out) = match g {
        GenCommand::Gaussian {
            mu,
            cov,
            count,
            seed,
            out,
        } => {
            let spec = gaussian_from_strings(mu.as_deref(), cov.as_deref())?;
            (sample_gaussian(&spec, seed, count), out)
        }
        GenCommand::Dirichlet {
            alpha,
            count,
            seed,
            out,
        } => {
            let spec = dirichlet_from_string(alpha.as_deref())?;
            (sample_dirichlet(&spec, seed, count), out)
        }
    };
    write_csv(&out, &data)?;
    Ok(())
}

/// `key=value` pairs separated by `;`, where a value may itself contain `;`
/// separated rows (cov).
fn parse_params(s: &str) -> CliResult<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_ascii_lowercase(), v.trim().to_owned())),
            None => match out.last_mut() {
                Some((_, v)) => {
                    v.push(';');
                    v.push_str(part);
                }
                None => return Err(usage(format!("bad parameter `{part}`"))),
            },
        }
    }
    Ok(out)
}

struct Report {
    text: String,
    failures: usize,
}

impl Report {
    fn info(&mut self, name: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{name:<28} {value}");
    }

    fn check(&mut self, name: &str, value: f64, limit: f64) {
        let pass = value <= limit;
        if !pass {
            self.failures += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        let limit = if limit != 0.0 && limit.abs() < 1e-3 {
            format!("{limit:e}")
        } else {
            limit.to_string()
        };
        let _ = writeln!(
            self.text,
            "{name:<28} {value:<24.6e} <= {limit:<10} {verdict}"
        );
    }
}

/// Reference model of the free coordinates: per-dim marginal CDFs, mean,
/// covariance and joint density of the free coordinates.
struct FreeReference {
    cdfs: Vec<Box<dyn Fn(f64) -> f64>>,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    pdf: JointPdf,
}

type JointPdf = Box<dyn Fn(&[f64]) -> f64>;

fn gaussian_free_reference(spec: &GaussianSpec, cond: &Condition) -> CliResult<FreeReference> {
    let c = gaussian_conditional(spec, cond).map_err(|e| usage(e.to_string()))?;
    let k = c.dims();
    let cdfs = (0..k)
        .map(|i| {
            let (m, s) = c.marginal(i);
            Box::new(move |x: f64| normal_cdf((x - m) / s)) as Box<dyn Fn(f64) -> f64>
        })
        .collect();
    let mean = c.mean().iter().copied().collect();
    let cov = (0..k)
        .map(|i| (0..k).map(|j| c.cov()[(i, j)]).collect())
        .collect();
    Ok(FreeReference {
        cdfs,
        mean,
        cov,
        pdf: Box::new(move |x| c.pdf(x).unwrap_or(0.0)),
    })
}

fn dirichlet_free_reference(spec: &DirichletSpec, cond: &Condition) -> CliResult<FreeReference> {
    let [a1, a2, a3] = spec.alpha();
    match cond.entries() {
        [] => {
            let a0 = a1 + a2 + a3;
            let al = [a1, a2];
            let mean = al.iter().map(|a| a / a0).collect();
            let cov = (0..2)
                .map(|i| {
                    (0..2)
                        .map(|j| {
                            let delta = if i == j { al[i] * a0 } else { 0.0 };
                            (delta - al[i] * al[j]) / (a0 * a0 * (a0 + 1.0))
                        })
                        .collect()
                })
                .collect();
            let s = *spec;
            let cdfs: Vec<Box<dyn Fn(f64) -> f64>> = vec![
                Box::new(move |x| s.marginal_cdf(0, x)),
                Box::new(move |x| s.marginal_cdf(1, x)),
            ];
            Ok(FreeReference {
                cdfs,
                mean,
                cov,
                pdf: Box::new(move |x| s.pdf(x[0], x[1])),
            })
        }
        &[(dim, v)] => {
            // x_free | x_fixed is Beta(a_free, a3) stretched to [0, 1 - v]
            let s = if dim == 1 {
                *spec
            } else {
                DirichletSpec::new([a2, a1, a3]).expect("valid parameters")
            };
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::Data(format!(
                    "condition value {v} outside (0, 1)"
                )));
            }
            let [b1, _, b3] = s.alpha();
            let w = 1.0 - v;
            let m = b1 / (b1 + b3);
            let var = b1 * b3 / ((b1 + b3).powi(2) * (b1 + b3 + 1.0));
            let cdfs: Vec<Box<dyn Fn(f64) -> f64>> = vec![Box::new(move |x| {
                s.conditional_cdf(v, x).unwrap_or(f64::NAN)
            })];
            Ok(FreeReference {
                cdfs,
                mean: vec![w * m],
                cov: vec![vec![w * w * var]],
                pdf: Box::new(move |x| s.conditional_pdf(v, x[0]).unwrap_or(0.0)),
            })
        }
        _ => Err(usage(
            "the Dirichlet case is bivariate; condition on at most one dimension",
        )),
    }
}

fn cmd_validate(a: ValidateArgs) -> CliResult {
    let tree = open_tree(&a.tree)?;
    let d = tree.dims();
    let cond = parse_condition(&a.cond, d)?;
    let params = match &a.params {
        Some(p) => parse_params(p)?,
        None => Vec::new(),
    };
    let param = |key: &str| {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };
    let reference = match a.against {
        Reference::Gaussian => {
            let spec = gaussian_from_strings(param("mu"), param("cov"))?;
            if spec.dims() != d {
                return Err(usage(format!(
                    "reference has {} dimensions, tree has {d}",
                    spec.dims()
                )));
            }
            gaussian_free_reference(&spec, &cond)?
        }
        Reference::Dirichlet => {
            if d != 2 {
                return Err(usage(format!(
                    "Dirichlet reference is bivariate, tree has {d} dimensions"
                )));
            }
            dirichlet_free_reference(&dirichlet_from_string(param("alpha"))?, &cond)?
        }
    };
    let free = cond.free_dims(d);

    let mut report = Report {
        text: String::new(),
        failures: 0,
    };
    report.info("tree", a.tree.display());
    report.info("samples in tree", tree.n());
    report.info("leaves", tree.leaf_count());
    report.info("depth", tree.max_depth());
    let mass: f64 = (0..tree.leaf_count()).map(|l| tree.leaf_mass(l)).sum();
    report.check("|leaf mass sum - 1|", (mass - 1.0).abs(), 1e-12);

    // integrated squared error of the (conditional) tree density on the free dims
    let root = tree.root_cuboid();
    let lo: Vec<f64> = free.iter().map(|&i| root.lower()[i]).collect();
    let hi: Vec<f64> = free.iter().map(|&i| root.upper()[i]).collect();
    let lattice =
        Lattice::over_box(&lo, &hi, a.grid_points.max(2)).map_err(|e| usage(e.to_string()))?;
    let marginal = if cond.is_empty() {
        1.0
    } else {
        find_conditioned_leaves(&tree, &cond)?.total
    };
    if marginal > 0.0 {
        let dense = |xf: &[f64]| {
            let mut x = vec![0.0; d];
            for &(i, v) in cond.entries() {
                x[i] = v;
            }
            for (k, &i) in free.iter().enumerate() {
                x[i] = xf[k];
            }
            tree.density(&x).unwrap_or(0.0) / marginal
        };
        report.info(
            "grid ISE (tree vs reference)",
            grid_ise(dense, &reference.pdf, &lattice),
        );
    } else {
        report.info(
            "grid ISE (tree vs reference)",
            "undefined: zero density at condition",
        );
    }

    if let Some(path) = &a.samples {
        if !path.exists() {
            return Err(usage(format!("samples file not found: {}", path.display())));
        }
        let samples = read_csv(path)?;
        if samples.dims() != d {
            return Err(CliError::Data(format!(
                "samples have {} columns, tree has {d}",
                samples.dims()
            )));
        }
        report.info("samples", samples.len());
        let offenders = samples
            .rows()
            .filter(|r| {
                cond.entries()
                    .iter()
                    .any(|&(i, v)| r[i].to_bits() != v.to_bits())
            })
            .count();
        report.check("rows violating condition", offenders as f64, 0.0);
        let selected = samples.select_columns(&free)?;
        let (mean, cov) = sample_moments(&selected)?;
        for (k, &i) in free.iter().enumerate() {
            let name = &tree.column_names()[i];
            report.check(
                &format!("|mean - ref| {name}"),
                (mean[k] - reference.mean[k]).abs(),
                a.mean_tol,
            );
        }
        for (k, &i) in free.iter().enumerate() {
            for (l, &j) in free.iter().enumerate().skip(k) {
                let names = format!("{},{}", tree.column_names()[i], tree.column_names()[j]);
                report.check(
                    &format!("|cov - ref| {names}"),
                    (cov[k][l] - reference.cov[k][l]).abs(),
                    a.cov_tol,
                );
            }
        }
        for (k, &i) in free.iter().enumerate() {
            let col: Vec<f64> = samples.column(i).collect();
            let ks = ks_test(&col, &reference.cdfs[k])?;
            report.check(
                &format!("KS distance {}", tree.column_names()[i]),
                ks.statistic,
                a.ks_max,
            );
        }
    }
    let verdict = if report.failures == 0 { "PASS" } else { "FAIL" };
    report.info(
        "result",
        format!("{verdict} ({} failed checks)", report.failures),
    );

    match &a.report {
        Some(path) => std::fs::write(path, &report.text).map_err(DetError::from)?,
        None => {
            let _ = std::io::stdout().write_all(report.text.as_bytes());
        }
    }
    if report.failures > 0 {
        return Err(CliError::Data(format!(
            "validation failed ({} checks)",
            report.failures
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("3=0").unwrap(), (2, 0.0));
        assert_eq!(parse_assignment(" 1 = -1.5 ").unwrap(), (0, -1.5));
        assert!(matches!(parse_assignment("0=1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_assignment("x=1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_assignment("1"), Err(CliError::Usage(_))));
        let items = vec!["2=1".to_string(), "2=3".to_string()];
        assert!(matches!(
            parse_condition(&items, 3),
            Err(CliError::Usage(_))
        ));
        let items = vec!["5=0".to_string()];
        let Err(CliError::Usage(msg)) = parse_condition(&items, 3) else {
            panic!()
        };
        assert!(msg.contains("dimension out of range"));
    }

    #[test]
    fn params() {
        let p = parse_params("mu=0,0;cov=1,0;0,1").unwrap();
        assert_eq!(
            p,
            vec![
                ("mu".into(), "0,0".into()),
                ("cov".into(), "1,0;0,1".into())
            ]
        );
        let g = gaussian_from_strings(Some("1,2"), Some("1,0;0,1")).unwrap();
        assert_eq!(g.dims(), 2);
        assert!(gaussian_from_strings(None, Some("1,0,0")).is_err());
        assert_eq!(
            dirichlet_from_string(Some("1,2,3")).unwrap().alpha(),
            [1.0, 2.0, 3.0]
        );
        assert!(dirichlet_from_string(Some("1,2")).is_err());
    }

    #[test]
    fn dirichlet_reference_moments() {
        let spec = DirichletSpec::new([2.0, 3.0, 5.0]).unwrap();
        let r = dirichlet_free_reference(&spec, &Condition::none()).unwrap();
        assert!((r.mean[0] - 0.2).abs() < 1e-15);
        // var = a1 (a0 - a1) / (a0^2 (a0 + 1)) = 2 * 8 / (100 * 11)
        assert!((r.cov[0][0] - 16.0 / 1100.0).abs() < 1e-15);
        assert!((r.cov[0][1] + 6.0 / 1100.0).abs() < 1e-15);
    }
}
