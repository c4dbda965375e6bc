//! `hciz`: sample HCIZ orbit densities, Gelfand–Tsetlin triangles and
//! private rank-k projections, and run the validation suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use hciz::dp::{dp_rank_k_projection_batch, DpConfig};
use hciz::fiber::sample_fiber;
use hciz::io::{
    matrices_to_csv, matrices_to_json, parse_matrix, parse_triangle, triangles_to_csv,
    triangles_to_json,
};
use hciz::orbit::{
    expected_inner_product, log_partition, sample_orbit_batch, OrbitPlan, OrbitProblem,
};
use hciz::sampler::{sample_chains, Mode, SamplerConfig};
use hciz::validate::{run_suite, Suite, ValidationOptions};
use hciz::{HermitianMatrix, RayleighTriangle};

#[derive(Parser)]
#[command(
    name = "hciz",
    version,
    about = "Exact and MCMC sampling on unitary orbits with HCIZ weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample X on the orbit of diag(lambda) with density exp(<Y, X>).
    SampleOrbit(Opts),
    /// Sample Rayleigh triangles from the reduced density on GT(lambda).
    SampleGt(Opts),
    /// Sample matrices uniformly from the fiber over a triangle.
    SampleFiber(Opts),
    /// Private rank-k projections of a PSD matrix.
    DpLowrank(Opts),
    /// Run a validation suite and write a report.
    Validate(Opts),
    /// Print log Z(y, lambda) and its derivative along y.
    Partition(Opts),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

/// Every option can also come from `--config`; flags take precedence.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
struct Opts {
    /// JSON file with any of these options (kebab-case keys).
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Orbit spectrum, comma separated, non-increasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    /// Diagonal coupling y, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    /// Coupling matrix Y as a JSON matrix.
    #[arg(long = "Y-file")]
    #[serde(rename = "Y-file")]
    y_file: Option<PathBuf>,
    /// PSD input A as a JSON matrix.
    #[arg(long = "A-file")]
    #[serde(rename = "A-file")]
    a_file: Option<PathBuf>,
    /// Triangle as JSON, for sample-fiber.
    #[arg(long)]
    triangle_file: Option<PathBuf>,
    /// Target rank.
    #[arg(long)]
    k: Option<usize>,
    /// Privacy parameter.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sampler error notion.
    #[arg(long)]
    mode: Option<String>,
    /// Sampler error target.
    #[arg(long)]
    xi: Option<f64>,
    /// Number of samples.
    #[arg(long)]
    num: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    /// Lattice pitch for the grid walk.
    #[arg(long)]
    grid_resolution: Option<f64>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Validation suite name.
    #[arg(long)]
    suite: Option<String>,
    /// Sample-size multiplier for validation.
    #[arg(long)]
    scale: Option<f64>,
    /// Directory for CSV series from validation.
    #[arg(long)]
    series_dir: Option<PathBuf>,
}

impl Opts {
    /// Fills unset options from the `--config` file, if any.
    fn resolve(self) -> Result<Self> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let text = read(path)?;
        let file: Opts = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(Opts {
            config: self.config,
            lambda: self.lambda.or(file.lambda),
            y: self.y.or(file.y),
            y_file: self.y_file.or(file.y_file),
            a_file: self.a_file.or(file.a_file),
            triangle_file: self.triangle_file.or(file.triangle_file),
            k: self.k.or(file.k),
            epsilon: self.epsilon.or(file.epsilon),
            mode: self.mode.or(file.mode),
            xi: self.xi.or(file.xi),
            num: self.num.or(file.num),
            seed: self.seed.or(file.seed),
            burn_in: self.burn_in.or(file.burn_in),
            thin: self.thin.or(file.thin),
            chains: self.chains.or(file.chains),
            grid_resolution: self.grid_resolution.or(file.grid_resolution),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            suite: self.suite.or(file.suite),
            scale: self.scale.or(file.scale),
            series_dir: self.series_dir.or(file.series_dir),
        })
    }

    fn lambda(&self) -> Result<Vec<f64>> {
        self.lambda.clone().context("--lambda is required")
    }

    fn num(&self) -> usize {
        self.num.unwrap_or(1)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }

    fn sampler(&self) -> Result<SamplerConfig> {
        let mode: Mode = self.mode.as_deref().unwrap_or("tv").parse()?;
        let mut cfg =
            SamplerConfig::new(mode, self.xi.unwrap_or(0.1)).with_seed(self.seed.unwrap_or(0));
        cfg.burn_in = self.burn_in;
        cfg.thinning = self.thin;
        cfg.grid_resolution = self.grid_resolution;
        if let Some(c) = self.chains {
            cfg.chains = c;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn problem(&self) -> Result<OrbitProblem> {
        let lambda = self.lambda()?;
        Ok(match (&self.y, &self.y_file) {
            (Some(_), Some(_)) => bail!("give either --y or --Y-file, not both"),
            (Some(y), None) => OrbitProblem::diagonal(lambda, y.clone())?,
            (None, Some(path)) => OrbitProblem::with_matrix(lambda, read_matrix(path)?)?,
            (None, None) => {
                let n = lambda.len();
                OrbitProblem::diagonal(lambda, vec![0.0; n])?
            }
        })
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_matrix(path: &Path) -> Result<HermitianMatrix> {
    parse_matrix(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn render_matrices(xs: &[HermitianMatrix], format: Format) -> String {
    match format {
        Format::Json => matrices_to_json(xs) + "\n",
        Format::Csv => matrices_to_csv(xs),
    }
}

fn render_triangles(ps: &[RayleighTriangle], format: Format) -> String {
    match format {
        Format::Json => triangles_to_json(ps) + "\n",
        Format::Csv => triangles_to_csv(ps),
    }
}

fn sample_orbit_cmd(opts: &Opts) -> Result<()> {
    let batch = sample_orbit_batch(&opts.problem()?, &opts.sampler()?, opts.num())?;
    let xs: Vec<HermitianMatrix> = batch.flattened().cloned().collect();
    opts.emit(&render_matrices(&xs, opts.format()))
}

fn sample_gt_cmd(opts: &Opts) -> Result<()> {
    let plan = OrbitPlan::new(&opts.problem()?)?;
    if plan.basis.is_some() {
        bail!("sample-gt needs a diagonal coupling sorted non-increasing");
    }
    let run = sample_chains(&plan.poly, &plan.spec, &opts.sampler()?, opts.num())?;
    let ps: Vec<RayleighTriangle> = run.flattened().cloned().collect();
    opts.emit(&render_triangles(&ps, opts.format()))
}

fn sample_fiber_cmd(opts: &Opts) -> Result<()> {
    let path = opts
        .triangle_file
        .as_ref()
        .context("--triangle-file is required")?;
    let p = parse_triangle(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.unwrap_or(0));
    let xs = (0..opts.num())
        .map(|_| sample_fiber(&p, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    opts.emit(&render_matrices(&xs, opts.format()))
}

fn dp_lowrank_cmd(opts: &Opts) -> Result<()> {
    let path = opts.a_file.as_ref().context("--A-file is required")?;
    let a = read_matrix(path)?;
    let cfg = DpConfig::new(
        opts.epsilon.context("--epsilon is required")?,
        opts.k.context("--k is required")?,
    );
    let mut template = opts.sampler()?;
    template.mode = Mode::Inf;
    let xs: Vec<HermitianMatrix> = dp_rank_k_projection_batch(&a, &cfg, &template, opts.num())?
        .into_iter()
        .map(|s| s.p)
        .collect();
    opts.emit(&render_matrices(&xs, opts.format()))
}

fn partition_cmd(opts: &Opts) -> Result<()> {
    let lambda = opts.lambda()?;
    let y = opts.y.clone().context("--y is required")?;
    let log_z = log_partition(&y, &lambda)?;
    let slope = expected_inner_product(&y, &lambda, 1e-4)?;
    opts.emit(&format!("log Z = {log_z}\nE<Y,X> = {slope}\n"))
}

/// Returns whether every check passed.
fn validate_cmd(opts: &Opts) -> Result<bool> {
    let suite: Suite = opts.suite.as_deref().unwrap_or("all").parse()?;
    let mut vopts = ValidationOptions::default();
    if let Some(seed) = opts.seed {
        vopts.seed = seed;
    }
    if let Some(scale) = opts.scale {
        if scale.is_nan() || scale <= 0.0 {
            bail!("--scale must be positive");
        }
        vopts.sample_scale = scale;
    }
    let report = run_suite(suite, &vopts)?;
    for check in &report.checks {
        eprintln!("{}", check.summary());
    }
    if let Some(dir) = &opts.series_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for series in report.checks.iter().flat_map(|c| &c.series) {
            let path = dir.join(format!("{}.csv", series.name));
            fs::write(&path, series.to_csv())
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    opts.emit(&(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(report.passed())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SampleOrbit(o) => sample_orbit_cmd(&o.resolve()?).map(|_| true),
        Command::SampleGt(o) => sample_gt_cmd(&o.resolve()?).map(|_| true),
        Command::SampleFiber(o) => sample_fiber_cmd(&o.resolve()?).map(|_| true),
        Command::DpLowrank(o) => dp_lowrank_cmd(&o.resolve()?).map(|_| true),
        Command::Partition(o) => partition_cmd(&o.resolve()?).map(|_| true),
        Command::Validate(o) => validate_cmd(&o.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
