//! Command-line front end: simulate dyadic designs, estimate homophily
//! coefficients, export pseudo-distance matrices, run Monte Carlo sweeps,
//! and validate input files.
//!
//! Machine-readable results go to `--out` (or stdout) as JSON; progress and
//! warnings go to stderr via the logger.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dyadnet_core::denoise::{denoise_row_average, denoise_unique_pairs, DenoisedMatrix};
use dyadnet_core::distance::{
    d2_heteroskedastic, d2_homoskedastic, d_infty_matrix, DInfConfig, HeteroConfig, Q2Config,
};
use dyadnet_core::estimators::{
    fe_additive_beta, g_hat, kernel_beta, kernel_beta_denoised, logit_mle_beta, nn1_beta,
    partial_effects, single_index_beta, BandwidthRule, ClampStats, EstimateReport, EstimatorKind,
    SingleIndexConfig,
};
use dyadnet_core::impute::{impute_sequential_with, ImputeConfig};
use dyadnet_core::io::{
    ingest, write_edges, write_mask, write_nodes, write_pair_matrix, write_per_rep_csv,
    write_sym_matrix, write_truth_json, IngestOptions,
};
use dyadnet_core::kernel::{KernelKind, KernelSpec};
use dyadnet_core::link::{LinkKind, LinkSpec};
use dyadnet_core::mc::{format_table, preset_table1, preset_table2, run_mc, McSummary, TableLayout};
use dyadnet_core::model::{
    build_covariates, validate_dataset, CoordMap, CovariateMap, XProfile,
};
use dyadnet_core::neighbors::{build_neighborhoods, NiRule, XRule};
use dyadnet_core::sim::{simulate, DgpSpec};
use dyadnet_core::DyadicDataset;

#[derive(Parser)]
#[command(name = "dyadnet", version, about = "Dyadic-network regression with nonparametric unobserved heterogeneity")]
struct Cli {
    /// Master seed for anything stochastic (simulation, Monte Carlo).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (JSON for most commands, CSV for `distances`,
    /// path prefix for `simulate`). Stdout when omitted where sensible.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// error | warn | info | debug | trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic network and write nodes/edges/mask CSVs plus the
    /// ground truth as JSON, all under the `--out` path prefix.
    Simulate(SimulateArgs),
    /// Estimate homophily coefficients from node/edge files.
    Estimate(EstimateArgs),
    /// Compute pairwise pseudo-distances and write them as a long CSV.
    Distances(DistancesArgs),
    /// Monte Carlo sweeps over the built-in simulation designs.
    Mc(McArgs),
    /// Check input files for structural problems without estimating.
    Validate(ValidateArgs),
}

/// Node/edge input shared by estimate, distances, and validate.
#[derive(Args)]
struct InputArgs {
    /// Node CSV: header `id,x1,...,xk`.
    #[arg(long)]
    nodes: PathBuf,

    /// Edge CSV: header `i,j,y` with ids from the node file.
    #[arg(long)]
    edges: PathBuf,

    /// Optional mask CSV (`i,j,observed` with 0/1); pairs absent from the
    /// file count as unobserved.
    #[arg(long)]
    mask: Option<PathBuf>,

    /// Without a mask file, treat pairs absent from the edge file as
    /// unobserved instead of requiring full coverage.
    #[arg(long)]
    missing_implicit: bool,
}

impl InputArgs {
    fn load(&self) -> Result<DyadicDataset> {
        let opts = IngestOptions { missing_implicit: self.missing_implicit, discrete: None };
        ingest(&self.nodes, &self.edges, self.mask.as_deref(), &opts)
            .with_context(|| format!("reading {}", self.nodes.display()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DgpArg {
    /// Continuous outcomes, Gaussian types.
    Gauss,
    /// Binary outcomes, logistic link.
    Logit,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "gauss")]
    dgp: DgpArg,

    #[arg(long, default_value_t = 100)]
    n: usize,

    /// Correlation between observables and latent types (gauss only).
    #[arg(long, default_value_t = 0.5)]
    rho: f64,

    /// Override the design's homophily coefficient.
    #[arg(long)]
    beta0: Option<f64>,

    /// Override the dyad noise standard deviation (gauss only).
    #[arg(long)]
    noise_sd: Option<f64>,

    /// Fraction of dyads dropped completely at random.
    #[arg(long, default_value_t = 0.0)]
    missing_rate: f64,

    /// Replication stream; distinct streams give independent draws at the
    /// same seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistanceArg {
    /// Homoskedastic route: raw profile regressions minus the noise floor.
    Homo,
    /// Heteroskedasticity-robust route: profile regressions on a denoised
    /// outcome matrix.
    Hetero,
}

impl DistanceArg {
    fn name(self) -> &'static str {
        match self {
            DistanceArg::Homo => "homo",
            DistanceArg::Hetero => "hetero",
        }
    }
}

/// `auto` resolves from the data: exact matching when every covariate is
/// discrete, no matching otherwise.
#[derive(Clone, Copy, Debug)]
enum XRuleArg {
    Auto,
    Fixed(XRule),
}

impl FromStr for XRuleArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(XRuleArg::Auto),
            "exact" => Ok(XRuleArg::Fixed(XRule::ExactDiscrete)),
            "ignore" => Ok(XRuleArg::Fixed(XRule::IgnoreX)),
            other => {
                let delta = other
                    .strip_prefix("ball=")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|d| d.is_finite() && *d >= 0.0)
                    .ok_or_else(|| {
                        format!("unknown x-rule `{other}` (try auto, exact, ignore, ball=<delta>)")
                    })?;
                Ok(XRuleArg::Fixed(XRule::Ball { delta }))
            }
        }
    }
}

impl XRuleArg {
    fn resolve(self, x: &XProfile) -> XRule {
        match self {
            XRuleArg::Fixed(rule) => rule,
            XRuleArg::Auto => {
                if x.discrete.iter().all(|&d| d) {
                    XRule::ExactDiscrete
                } else {
                    XRule::IgnoreX
                }
            }
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,

    /// kernel | nn1 | fe | logit-mle | single-index
    #[arg(long, default_value = "kernel")]
    estimator: EstimatorKind,

    /// Pseudo-distance route for kernel and nn1.
    #[arg(long, value_enum, default_value = "homo")]
    distance: DistanceArg,

    /// Outcome link: identity | logit | exp (single-index and `--with-g`).
    #[arg(long, default_value = "identity")]
    link: LinkKind,

    /// epa | uniform | triangular
    #[arg(long, default_value = "epa")]
    kernel: KernelKind,

    /// `rot` or a fixed squared bandwidth.
    #[arg(long, default_value = "rot")]
    bandwidth: BandwidthRule,

    /// Constant c in the neighborhood size c * sqrt(n log n).
    #[arg(long, default_value_t = 1.0)]
    ni_const: f64,

    /// Covariate matching for denoising: auto | exact | ignore | ball=<delta>.
    #[arg(long, default_value = "auto")]
    x_rule: XRuleArg,

    /// Minimum common observed partners before a pair statistic is defined.
    #[arg(long, default_value_t = 5)]
    overlap_floor: usize,

    /// Covariate map: `sqdiff` | `eq` | `absdiff` for all columns, or
    /// per-column like `sqdiff(x1),eq(x2)`. Default: `eq` on discrete
    /// columns, `sqdiff` on continuous ones.
    #[arg(long)]
    map: Option<String>,

    /// Also recover the pair-specific heterogeneity surface and the average
    /// partial effects of the covariates.
    #[arg(long)]
    with_g: bool,
}

#[derive(Args)]
struct DistancesArgs {
    #[command(flatten)]
    input: InputArgs,

    #[arg(long, value_enum, default_value = "homo")]
    method: DistanceArg,

    /// Covariate map (see `estimate --help`).
    #[arg(long)]
    map: Option<String>,

    #[arg(long, default_value = "auto")]
    x_rule: XRuleArg,

    #[arg(long, default_value_t = 1.0)]
    ni_const: f64,

    #[arg(long, default_value_t = 5)]
    overlap_floor: usize,

    /// Also write the similarity distances d_inf^2 used for neighborhoods.
    #[arg(long)]
    dump_dinf: Option<PathBuf>,

    /// Also write the denoised outcome matrix.
    #[arg(long)]
    dump_ystar: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    /// Continuous designs: n in {30, 50, 100} x rho in {0, .3, .5, .7};
    /// fixed effects vs kernel vs nearest neighbor.
    Table1,
    /// Binary design at n = 550: naive logit MLE vs the single-index
    /// pipeline.
    Table2,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,

    /// Replications per design.
    #[arg(long, default_value_t = 10_000)]
    reps: usize,

    /// Shrink the sweep: table1 keeps only n = 30, table2 runs at n = 200.
    #[arg(long)]
    fast: bool,

    /// Restrict to one network size (table1) or override it (table2).
    #[arg(long)]
    n: Option<usize>,

    /// Write per-replication estimates as CSV; sweeps with several designs
    /// get an `_n{n}_rho{rho}` suffix per design.
    #[arg(long)]
    per_rep: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_logging(&cli.log_level)?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("setting up the thread pool")?;
    }
    match &cli.command {
        Command::Simulate(args) => run_simulate(&cli, args),
        Command::Estimate(args) => run_estimate(&cli, args),
        Command::Distances(args) => run_distances(&cli, args),
        Command::Mc(args) => run_mc_cmd(&cli, args),
        Command::Validate(args) => run_validate(&cli, args),
    }
}

fn init_logging(level: &str) -> Result<()> {
    let filter = log::LevelFilter::from_str(level)
        .map_err(|_| anyhow!("unknown log level `{level}` (try error, warn, info, debug, trace)"))?;
    env_logger::Builder::new().filter_level(filter).try_init().ok();
    Ok(())
}

/// `--map` string when given, otherwise `eq` for discrete columns and
/// `sqdiff` for continuous ones.
fn covariate_map(arg: &Option<String>, x: &XProfile) -> Result<CovariateMap> {
    match arg {
        Some(s) => Ok(CovariateMap::parse(s, x.k())?),
        None => {
            let terms = x
                .discrete
                .iter()
                .enumerate()
                .map(|(c, &d)| {
                    let kind = if d { CoordMap::EqualityIndicator } else { CoordMap::SquaredDifference };
                    (kind, c)
                })
                .collect();
            Ok(CovariateMap { terms })
        }
    }
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Append a suffix to a path before any extension handling (the prefix is
/// treated as an opaque stem).
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct SimulateOutput {
    n: usize,
    seed: u64,
    stream: u64,
    beta0: f64,
    observed_dyads: usize,
    nodes: PathBuf,
    edges: PathBuf,
    mask: PathBuf,
    truth: PathBuf,
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let prefix = cli
        .out
        .as_ref()
        .ok_or_else(|| anyhow!("simulate needs --out <prefix> for the generated files"))?;
    let mut spec = match args.dgp {
        DgpArg::Gauss => DgpSpec::gaussian(args.n, args.rho, cli.seed),
        DgpArg::Logit => DgpSpec::logistic(args.n, cli.seed),
    };
    if let Some(b) = args.beta0 {
        spec.beta0 = b;
    }
    if let Some(s) = args.noise_sd {
        spec.noise_sd = s;
    }
    spec.missing_rate = args.missing_rate;
    spec.stream = args.stream;
    spec.validate()?;

    let (ds, truth) = simulate(&spec)?;
    let paths = SimulateOutput {
        n: ds.n(),
        seed: spec.seed,
        stream: spec.stream,
        beta0: spec.beta0,
        observed_dyads: validate_dataset(&ds).observed_dyads,
        nodes: with_suffix(prefix, "_nodes.csv"),
        edges: with_suffix(prefix, "_edges.csv"),
        mask: with_suffix(prefix, "_mask.csv"),
        truth: with_suffix(prefix, "_truth.json"),
    };
    write_nodes(&paths.nodes, &ds.x, &ds.ids)?;
    write_edges(&paths.edges, &ds)?;
    write_mask(&paths.mask, &ds)?;
    write_truth_json(&paths.truth, &truth)?;
    log::info!("simulated n = {} ({} observed dyads)", ds.n(), paths.observed_dyads);
    // The prefix is consumed by the generated files; the manifest goes to
    // stdout.
    write_json(&None, &paths)
}

/// Denoise the outcome matrix, imputing under missing data.
fn denoised_surface(
    ds: &DyadicDataset,
    x_rule: XRule,
    ni_rule: NiRule,
    d_inf_cfg: &DInfConfig,
    unique_pairs: bool,
) -> Result<DenoisedMatrix> {
    let d_inf = d_infty_matrix(ds, &x_rule, d_inf_cfg)?;
    let nbhd = build_neighborhoods(&ds.x, &d_inf, &x_rule, &ni_rule)?;
    if ds.is_complete() {
        if unique_pairs {
            Ok(denoise_unique_pairs(ds, &nbhd)?)
        } else {
            Ok(denoise_row_average(ds, &nbhd)?)
        }
    } else {
        let cfg = ImputeConfig { x_rule, ni_rule, d_inf: *d_inf_cfg, ..ImputeConfig::default() };
        Ok(impute_sequential_with(ds, &nbhd, &cfg)?.denoised)
    }
}

/// Clamp produced entries into the link range and invert; identity passes
/// through untouched.
fn invert_link(den: &DenoisedMatrix, link: &LinkSpec) -> (DenoisedMatrix, ClampStats) {
    let n = den.ystar.n();
    let mut clamped = 0;
    let mut total = 0;
    let mut out = den.clone();
    if link.kind == LinkKind::Identity {
        return (out, ClampStats { clamped: 0, dropped: 0, total: 0 });
    }
    for i in 0..n {
        for j in i..n {
            if !den.imputed.get(i, j) || !den.ystar.get(i, j).is_finite() {
                continue;
            }
            total += 1;
            let (v, was_clamped) = link.clamp_into_range(den.ystar.get(i, j));
            if was_clamped {
                clamped += 1;
            }
            out.ystar.set(i, j, link.inverse(v));
        }
    }
    // a fully recovered surface is worth more than a hole here, so boundary
    // entries are pegged (and counted) rather than excluded
    (out, ClampStats { clamped, dropped: 0, total })
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    command: &'static str,
    estimator: String,
    distance: &'static str,
    nodes: &'a Path,
    n: usize,
    covariate_map: &'a CovariateMap,
    ids: &'a [String],
    report: &'a EstimateReport,
}

fn run_estimate(cli: &Cli, args: &EstimateArgs) -> Result<()> {
    let ds = args.input.load()?;
    let map = covariate_map(&args.map, &ds.x)?;
    let w = build_covariates(&ds.x, &map)?;
    let x_rule = args.x_rule.resolve(&ds.x);
    let ni_rule = NiRule::SqrtNLogN { c: args.ni_const };
    let d_inf_cfg = DInfConfig { overlap_floor: args.overlap_floor };
    let q2_cfg = Q2Config { overlap_floor: args.overlap_floor, keep_beta: false };
    let kernel = KernelSpec { kind: args.kernel };
    let link = LinkSpec::new(args.link);

    let mut report = match args.estimator {
        EstimatorKind::Kernel => match args.distance {
            DistanceArg::Homo => {
                let d2 = d2_homoskedastic(&ds, &w, &q2_cfg)?;
                kernel_beta(&ds, &w, &d2, &kernel, &args.bandwidth)?
            }
            DistanceArg::Hetero => {
                let den = denoised_surface(&ds, x_rule, ni_rule, &d_inf_cfg, false)?;
                let d2 = d2_heteroskedastic(&den.ystar, &w, &HeteroConfig::default())?;
                kernel_beta_denoised(&den.ystar, &w, &d2, &kernel, &args.bandwidth)?
            }
        },
        EstimatorKind::Nn1 => {
            let d2 = match args.distance {
                DistanceArg::Homo => d2_homoskedastic(&ds, &w, &q2_cfg)?,
                DistanceArg::Hetero => {
                    let den = denoised_surface(&ds, x_rule, ni_rule, &d_inf_cfg, false)?;
                    d2_heteroskedastic(&den.ystar, &w, &HeteroConfig::default())?
                }
            };
            nn1_beta(&ds, &w, &d2)?
        }
        EstimatorKind::FeAdditive => fe_additive_beta(&ds, &w)?,
        EstimatorKind::LogitMle => logit_mle_beta(&ds, &w)?,
        EstimatorKind::SingleIndexKernel => {
            let cfg = SingleIndexConfig {
                link,
                x_rule,
                ni_rule,
                d_inf: d_inf_cfg,
                kernel,
                bandwidth: args.bandwidth,
                ..SingleIndexConfig::default()
            };
            single_index_beta(&ds, &w, &cfg)?
        }
    };

    if args.with_g {
        let den = denoised_surface(&ds, x_rule, ni_rule, &d_inf_cfg, true)?;
        let (surface, clamp) = invert_link(&den, &link);
        let g = g_hat(&surface, &w, &report.beta)?;
        report.partial_effects = Some(partial_effects(&w, &g, &report.beta, &link)?);
        report.g_hat = Some(g);
        if report.clamp.is_none() && clamp.total > 0 {
            report.clamp = Some(clamp);
        }
    }

    let output = EstimateOutput {
        command: "estimate",
        estimator: report.estimator.to_string(),
        distance: args.distance.name(),
        nodes: &args.input.nodes,
        n: ds.n(),
        covariate_map: &map,
        ids: &ds.ids,
        report: &report,
    };
    write_json(&cli.out, &output)
}

#[derive(Serialize)]
struct DistancesOutput {
    command: &'static str,
    method: &'static str,
    n: usize,
    defined_pairs: usize,
    sigma2_hat: Option<f64>,
    d2: PathBuf,
    dinf: Option<PathBuf>,
    ystar: Option<PathBuf>,
}

fn run_distances(cli: &Cli, args: &DistancesArgs) -> Result<()> {
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| anyhow!("distances needs --out <csv> for the distance matrix"))?;
    let ds = args.input.load()?;
    let map = covariate_map(&args.map, &ds.x)?;
    let w = build_covariates(&ds.x, &map)?;
    let x_rule = args.x_rule.resolve(&ds.x);
    let ni_rule = NiRule::SqrtNLogN { c: args.ni_const };
    let d_inf_cfg = DInfConfig { overlap_floor: args.overlap_floor };
    let q2_cfg = Q2Config { overlap_floor: args.overlap_floor, keep_beta: false };

    // The hetero route and the intermediate dumps share the denoised surface.
    let need_surface = args.method == DistanceArg::Hetero
        || args.dump_dinf.is_some()
        || args.dump_ystar.is_some();
    let mut d_inf = None;
    let mut surface: Option<DenoisedMatrix> = None;
    if need_surface {
        let m = d_infty_matrix(&ds, &x_rule, &d_inf_cfg)?;
        let nbhd = build_neighborhoods(&ds.x, &m, &x_rule, &ni_rule)?;
        let den = if ds.is_complete() {
            denoise_row_average(&ds, &nbhd)?
        } else {
            let cfg = ImputeConfig { x_rule, ni_rule, d_inf: d_inf_cfg, ..ImputeConfig::default() };
            impute_sequential_with(&ds, &nbhd, &cfg)?.denoised
        };
        d_inf = Some(m);
        surface = Some(den);
    }

    let d2 = match args.method {
        DistanceArg::Homo => d2_homoskedastic(&ds, &w, &q2_cfg)?,
        DistanceArg::Hetero => {
            d2_heteroskedastic(&surface.as_ref().unwrap().ystar, &w, &HeteroConfig::default())?
        }
    };
    write_pair_matrix(out, &d2.d2, &ds.ids, "d2")?;
    if let Some(path) = &args.dump_dinf {
        write_pair_matrix(path, d_inf.as_ref().unwrap(), &ds.ids, "dinf2")?;
    }
    if let Some(path) = &args.dump_ystar {
        write_sym_matrix(path, &surface.as_ref().unwrap().ystar, &ds.ids, "ystar")?;
    }

    let summary = DistancesOutput {
        command: "distances",
        method: args.method.name(),
        n: ds.n(),
        defined_pairs: d2.defined.count_true(),
        sigma2_hat: d2.sigma2_hat,
        d2: out.clone(),
        dinf: args.dump_dinf.clone(),
        ystar: args.dump_ystar.clone(),
    };
    write_json(&None, &summary)
}

fn run_mc_cmd(cli: &Cli, args: &McArgs) -> Result<()> {
    let mut configs = match args.preset {
        PresetArg::Table1 => {
            let mut cs = preset_table1(args.reps, cli.seed);
            if args.fast {
                cs.retain(|c| c.dgp.n == 30);
            }
            if let Some(n) = args.n {
                cs.retain(|c| c.dgp.n == n);
            }
            if cs.is_empty() {
                bail!("no table1 design matches n = {:?} (sizes are 30, 50, 100)", args.n);
            }
            cs
        }
        PresetArg::Table2 => {
            let n_override = args.n.or(if args.fast { Some(200) } else { None });
            vec![preset_table2(args.reps, cli.seed, n_override)]
        }
    };
    let keep = args.per_rep.is_some();
    for c in &mut configs {
        c.keep_reps = keep;
    }

    let multi = configs.len() > 1;
    let mut summaries: Vec<McSummary> = Vec::with_capacity(configs.len());
    for cfg in &configs {
        log::info!("running n = {}, rho = {}, reps = {}", cfg.dgp.n, cfg.dgp.rho, cfg.reps);
        let summary = run_mc(cfg)?;
        if let (Some(base), Some(recs)) = (&args.per_rep, &summary.per_rep) {
            let path = if multi {
                with_suffix(base, &format!("_n{}_rho{}", cfg.dgp.n, cfg.dgp.rho))
            } else {
                base.clone()
            };
            write_per_rep_csv(&path, recs)?;
        }
        summaries.push(summary);
    }

    let layout = match args.preset {
        PresetArg::Table1 => TableLayout::Table1,
        PresetArg::Table2 => TableLayout::Table2,
    };
    print!("{}", format_table(&summaries, layout));
    if cli.out.is_some() {
        // Strip the per-rep payload from the JSON; the CSV carries it.
        for s in &mut summaries {
            s.per_rep = None;
        }
        write_json(&cli.out, &summaries)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateOutput {
    command: &'static str,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<dyadnet_core::ValidationReport>,
}

fn run_validate(cli: &Cli, args: &ValidateArgs) -> Result<()> {
    let output = match args.input.load() {
        Ok(ds) => {
            let report = validate_dataset(&ds);
            ValidateOutput {
                command: "validate",
                ok: report.is_clean(),
                error: None,
                report: Some(report),
            }
        }
        Err(e) => ValidateOutput {
            command: "validate",
            ok: false,
            error: Some(format!("{e:#}")),
            report: None,
        },
    };
    let ok = output.ok;
    write_json(&cli.out, &output)?;
    if !ok {
        std::process::exit(1);
    }
    Ok(())
}
