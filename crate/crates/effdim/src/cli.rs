//! Command-line front end. Every subcommand is deterministic given its
//! flags: fixed default seed, fixed reduction orders, and float formatting
//! via the shortest round-trip representation. Unbounded dimension values
//! serialize as the string `inf` in both CSV and JSON.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bounds::{
    critical_radius, effective_dimension_table, important_subsets, lambert_w0,
    superposition_asymptote, superposition_dimension_bound, tractability_class,
    truncation_dimension_bound, ComparisonMode, EffDimReport, Extent, RhoStarRoute,
};
use crate::decompose::{
    anova_variances, effective_dimension, mean_dimension, norm_anova_gap, poincare_ratio,
    weighted_norm, DerivativeMode, FunctionSense,
};
use crate::error::Error;
use crate::estimators::{mean_dimension_mc, total_index_estimates};
use crate::integrand::{poincare_suite, registry, Integrand};
use crate::quadrature::{mc_qmc_rmse, QuadSpec};
use crate::weights::{FactorSeq, WeightScheme};

#[derive(Parser)]
#[command(
    name = "effdim",
    about = "Effective-dimension bounds for weighted function spaces and \
             ANOVA measurements of concrete integrands",
    after_help = "The environment variable EFFDIM_THREADS caps internal parallelism; \
                  results are identical for any thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Strict,
    Nonstrict,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate truncation/superposition bounds for product weights j^-eta.
    Table1(Table1Args),
    /// Critical radius, dimension bounds, and tractability for one scheme.
    Bounds(BoundsArgs),
    /// Subsets whose variance-component bound reaches the threshold.
    Interactions(InteractionsArgs),
    /// ANOVA decomposition and per-function dimensions of an integrand.
    Anova(AnovaArgs),
    /// Weighted norm and its gap over the component lower bound.
    Norm(NormArgs),
    /// Derivative-to-variance ratio of a one-dimensional test function.
    Poincare(PoincareArgs),
    /// Monte Carlo mean dimension.
    Meandim(MeandimArgs),
    /// Jansen pick-freeze total Sobol' indices.
    Sobol(SobolArgs),
    /// RMSE of plain MC vs randomly shifted Halton at equal budget.
    Mcqmc(McqmcArgs),
    /// Superposition-dimension asymptote log(A)/W0(A).
    Asymptote(AsymptoteArgs),
}

#[derive(Args)]
struct Table1Args {
    /// Comma-separated decay exponents.
    #[arg(long, default_value = "2,1,0")]
    etas: String,
    /// Comma-separated variance levels.
    #[arg(long, default_value = "0.1,0.01,0.001,0.0001")]
    epsilons: String,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
}

#[derive(Args)]
struct BoundsArgs {
    /// Weight scheme as JSON, e.g. '{"kind":"product","eta":2}'.
    #[arg(long)]
    weights: String,
    #[arg(long)]
    eps: f64,
    /// Nominal dimension (a number or "inf").
    #[arg(long, default_value = "inf")]
    d: String,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
}

#[derive(Args)]
struct InteractionsArgs {
    #[arg(long)]
    weights: String,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 3)]
    max_order: usize,
}

#[derive(Args)]
struct AnovaArgs {
    #[command(flatten)]
    function: FunctionArgs,
    /// Quadrature: gauss | midpoint | mc | rhalton (default picks by dimension).
    #[arg(long, default_value = "auto")]
    method: String,
    /// Points per axis (tensor rules) or samples (randomized rules).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 16)]
    replicates: usize,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long)]
    weights: String,
    /// Gauss points per axis.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Use nested finite differences instead of exact derivatives.
    #[arg(long, default_value_t = false)]
    fd: bool,
}

#[derive(Args)]
struct PoincareArgs {
    /// Name from the one-dimensional suite, or "all".
    #[arg(long, default_value = "all")]
    r#fn: String,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 64)]
    n: usize,
}

#[derive(Args)]
struct MeandimArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long, default_value_t = 1 << 14)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SobolArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long, default_value_t = 1 << 14)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct McqmcArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AsymptoteArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.9)]
    lambda: f64,
}

#[derive(Args)]
struct FunctionArgs {
    /// Registry name: linear_sum, prod_centered, sine_extremal,
    /// additive_sine, gfunction.
    #[arg(long)]
    r#fn: String,
    #[arg(long)]
    d: Option<usize>,
    /// g-function shape parameters, comma-separated.
    #[arg(long)]
    a: Option<String>,
}

impl FunctionArgs {
    fn resolve(&self) -> Result<Integrand, Error> {
        let a = match &self.a {
            Some(list) => Some(parse_f64_list(list)?),
            None => None,
        };
        registry::by_name(&self.r#fn, self.d, a.as_deref())
    }
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number `{p}` in list")))
        })
        .collect()
}

/// Run with explicit argv; returns the process exit code
/// (0 success, 1 numerical failure, 2 usage error).
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version on stdout with success
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let format = cli.format;
    let rendered = match execute(&cli.command, format) {
        Ok(text) => text,
        Err(e @ Error::InvalidInput(_)) => {
            eprintln!("error: {e}");
            eprintln!("run `effdim --help` for usage");
            return 2;
        }
        Err(e) => {
            let payload = json!({"error": {"kind": error_kind(&e), "message": e.to_string()}});
            eprintln!("{payload}");
            return 1;
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{rendered}"),
    }
    0
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::MissingWeight(_) => "MissingWeight",
        Error::CapExceeded(_) => "CapExceeded",
        Error::ConditionViolated { .. } => "ConditionViolated",
        Error::EmptySubset => "EmptySubset",
        Error::OutOfDomain(_) => "OutOfDomain",
        Error::DomainTooLarge(_) => "DomainTooLarge",
        Error::EvaluationError { .. } => "EvaluationError",
        Error::NumericalInconsistency(_) => "NumericalInconsistency",
        Error::ConstantFunction => "ConstantFunction",
        Error::ZeroMeanUndefined => "ZeroMeanUndefined",
        Error::MeanNotZero(_, _) => "MeanNotZero",
        Error::ZeroFunction => "ZeroFunction",
        Error::MissingDerivatives => "MissingDerivatives",
        Error::InvalidInput(_) => "InvalidInput",
    }
}

fn execute(command: &Command, format: Format) -> Result<String, Error> {
    match command {
        Command::Table1(args) => table1(args, format),
        Command::Bounds(args) => bounds(args, format),
        Command::Interactions(args) => interactions(args, format),
        Command::Anova(args) => anova(args, format),
        Command::Norm(args) => norm(args, format),
        Command::Poincare(args) => poincare(args, format),
        Command::Meandim(args) => meandim(args, format),
        Command::Sobol(args) => sobol(args, format),
        Command::Mcqmc(args) => mcqmc(args, format),
        Command::Asymptote(args) => asymptote(args, format),
    }
}

fn table1(args: &Table1Args, format: Format) -> Result<String, Error> {
    let etas = parse_f64_list(&args.etas)?;
    let epsilons = parse_f64_list(&args.epsilons)?;
    let run_mode = |mode| effective_dimension_table(&etas, &epsilons, mode);
    let (rows_ns, rows_s) = match args.mode {
        Mode::Nonstrict => (Some(run_mode(ComparisonMode::NonStrict)?), None),
        Mode::Strict => (None, Some(run_mode(ComparisonMode::Strict)?)),
        Mode::Both => (
            Some(run_mode(ComparisonMode::NonStrict)?),
            Some(run_mode(ComparisonMode::Strict)?),
        ),
    };
    let count = rows_ns.as_ref().or(rows_s.as_ref()).unwrap().len();

    match format {
        Format::Csv => {
            let mut out = String::new();
            match (&rows_ns, &rows_s) {
                (Some(ns), Some(s)) => {
                    out.push_str(
                        "epsilon,eta,trunc_nonstrict,super_nonstrict,trunc_strict,super_strict,\
                         trunc_boundary,super_boundary\n",
                    );
                    for (a, b) in ns.iter().zip(s) {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            a.epsilon,
                            a.eta,
                            a.truncation.value,
                            a.superposition.value,
                            b.truncation.value,
                            b.superposition.value,
                            a.truncation.boundary,
                            a.superposition.boundary
                        ));
                    }
                }
                _ => {
                    let rows = rows_ns.as_ref().or(rows_s.as_ref()).unwrap();
                    out.push_str("epsilon,eta,trunc,super,trunc_boundary,super_boundary\n");
                    for r in rows {
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            r.epsilon,
                            r.eta,
                            r.truncation.value,
                            r.superposition.value,
                            r.truncation.boundary,
                            r.superposition.boundary
                        ));
                    }
                }
            }
            Ok(out)
        }
        Format::Json => {
            let mut rows = Vec::with_capacity(count);
            for i in 0..count {
                let probe = rows_ns.as_ref().or(rows_s.as_ref()).unwrap();
                let mut row = json!({
                    "epsilon": probe[i].epsilon,
                    "eta": probe[i].eta,
                });
                let obj = row.as_object_mut().unwrap();
                if let Some(ns) = &rows_ns {
                    obj.insert("trunc_nonstrict".into(), dim_json(&ns[i].truncation));
                    obj.insert("super_nonstrict".into(), dim_json(&ns[i].superposition));
                    obj.insert("trunc_boundary".into(), json!(ns[i].truncation.boundary));
                    obj.insert("super_boundary".into(), json!(ns[i].superposition.boundary));
                }
                if let Some(s) = &rows_s {
                    obj.insert("trunc_strict".into(), dim_json(&s[i].truncation));
                    obj.insert("super_strict".into(), dim_json(&s[i].superposition));
                    if rows_ns.is_none() {
                        obj.insert("trunc_boundary".into(), json!(s[i].truncation.boundary));
                        obj.insert("super_boundary".into(), json!(s[i].superposition.boundary));
                    }
                }
                rows.push(row);
            }
            Ok(format!("{}\n", json!({ "rows": rows })))
        }
    }
}

fn dim_json(report: &EffDimReport) -> Value {
    json!(report.value.to_string())
}

fn bounds(args: &BoundsArgs, format: Format) -> Result<String, Error> {
    let scheme = WeightScheme::from_json(&args.weights)?;
    let extent = match args.d.trim() {
        "inf" => Extent::Infinite,
        text => Extent::Finite(text.parse::<u64>().map_err(|_| {
            Error::InvalidInput(format!("dimension `{text}` is neither a number nor \"inf\""))
        })?),
    };
    if matches!(extent, Extent::Infinite) && !scheme.supports_unbounded_dimension() {
        return Err(Error::InvalidInput(
            "this scheme needs a finite --d (no weights beyond its table)".into(),
        ));
    }
    let rho_dim = match extent {
        Extent::Finite(d) => (d as usize).min(crate::subset::MAX_DIM),
        Extent::Infinite => 64,
    };
    let rho = critical_radius(&scheme, rho_dim)?;
    let class = match &scheme {
        WeightScheme::Product { factors: FactorSeq::PowerLaw { eta }, .. } => {
            Some(tractability_class(*eta))
        }
        _ => None,
    };
    let run_pair = |mode| -> Result<(EffDimReport, EffDimReport), Error> {
        Ok((
            truncation_dimension_bound(&scheme, extent, args.eps, mode)?,
            superposition_dimension_bound(&scheme, extent, args.eps, mode)?,
        ))
    };
    let nonstrict = match args.mode {
        Mode::Strict => None,
        _ => Some(run_pair(ComparisonMode::NonStrict)?),
    };
    let strict = match args.mode {
        Mode::Nonstrict => None,
        _ => Some(run_pair(ComparisonMode::Strict)?),
    };

    let mut payload = json!({
        "epsilon": args.eps,
        "rho_star": rho.rho,
        "argmin": rho.argmin_subset.to_string(),
        "via": match rho.via {
            RhoStarRoute::Proposition => "Proposition",
            RhoStarRoute::GeneralSearch => "GeneralSearch",
        },
        "class": class.map(|c| c.to_string()),
    });
    let obj = payload.as_object_mut().unwrap();
    let pack = |t: &EffDimReport, s: &EffDimReport| {
        json!({
            "trunc": t.value.to_string(),
            "super": s.value.to_string(),
            "trunc_boundary": t.boundary,
            "super_boundary": s.boundary,
            "warning": t.condition_warning.clone().or_else(|| s.condition_warning.clone()),
        })
    };
    if let Some((t, s)) = &nonstrict {
        obj.insert("nonstrict".into(), pack(t, s));
    }
    if let Some((t, s)) = &strict {
        obj.insert("strict".into(), pack(t, s));
    }

    match format {
        Format::Json => Ok(format!("{payload}\n")),
        Format::Csv => {
            let mut out = String::from("key,value\n");
            out.push_str(&format!("rho_star,{}\n", rho.rho));
            out.push_str(&format!("argmin,\"{}\"\n", rho.argmin_subset));
            if let Some(c) = class {
                out.push_str(&format!("class,{c}\n"));
            }
            if let Some((t, s)) = &nonstrict {
                out.push_str(&format!("trunc_nonstrict,{}\n", t.value));
                out.push_str(&format!("super_nonstrict,{}\n", s.value));
                out.push_str(&format!("trunc_boundary,{}\n", t.boundary));
                out.push_str(&format!("super_boundary,{}\n", s.boundary));
            }
            if let Some((t, s)) = &strict {
                out.push_str(&format!("trunc_strict,{}\n", t.value));
                out.push_str(&format!("super_strict,{}\n", s.value));
            }
            Ok(out)
        }
    }
}

fn interactions(args: &InteractionsArgs, format: Format) -> Result<String, Error> {
    let scheme = WeightScheme::from_json(&args.weights)?;
    let hits = important_subsets(&scheme, args.d, args.eps, args.max_order)?;
    match format {
        Format::Csv => {
            let mut out = String::from("subset,bound\n");
            for (u, b) in &hits {
                out.push_str(&format!("\"{u}\",{b}\n"));
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = hits
                .iter()
                .map(|(u, b)| json!({"subset": u.to_string(), "bound": b}))
                .collect();
            Ok(format!("{}\n", json!({ "subsets": rows })))
        }
    }
}

fn quad_spec(method: &str, n: Option<usize>, replicates: usize, seed: u64, d: usize) -> Result<QuadSpec, Error> {
    Ok(match method {
        "auto" => match n {
            None => QuadSpec::default_for(d),
            Some(n) => {
                if d <= 6 {
                    QuadSpec::gauss(n)
                } else {
                    QuadSpec::randomized_halton(n, replicates, seed)
                }
            }
        },
        "gauss" => QuadSpec::gauss(n.unwrap_or(16)),
        "midpoint" => QuadSpec::midpoint(n.unwrap_or(1024)),
        "mc" => QuadSpec::monte_carlo(n.unwrap_or(1 << 14), seed),
        "rhalton" => QuadSpec::randomized_halton(n.unwrap_or(1 << 14), replicates, seed),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown method `{other}` (gauss, midpoint, mc, rhalton, auto)"
            )))
        }
    })
}

fn anova(args: &AnovaArgs, format: Format) -> Result<String, Error> {
    let f = args.function.resolve()?;
    let spec = quad_spec(&args.method, args.n, args.replicates, args.seed, f.dim())?;
    let vd = anova_variances(&f, &spec)?;
    let trunc = effective_dimension(&vd, args.eps, &FunctionSense::Truncation)?;
    let sup = effective_dimension(&vd, args.eps, &FunctionSense::Superposition)?;
    let md = mean_dimension(&vd)?;

    match format {
        Format::Csv => {
            let mut out = String::from("subset,sigma2\n");
            for (u, v) in &vd.components {
                if !u.is_empty() {
                    out.push_str(&format!("\"{u}\",{v}\n"));
                }
            }
            Ok(out)
        }
        Format::Json => {
            let mut comps = serde_json::Map::new();
            for (u, v) in &vd.components {
                if !u.is_empty() {
                    comps.insert(u.to_string(), json!(v));
                }
            }
            let payload = json!({
                "mu": vd.mu,
                "sigma2": vd.sigma2,
                "components": Value::Object(comps),
                "method": vd.method,
                "epsilon": args.eps,
                "truncation_dimension": trunc,
                "superposition_dimension": sup,
                "mean_dimension": md,
            });
            Ok(format!("{payload}\n"))
        }
    }
}

fn norm(args: &NormArgs, format: Format) -> Result<String, Error> {
    let f = args.function.resolve()?;
    let scheme = WeightScheme::from_json(&args.weights)?;
    let spec = QuadSpec::gauss(args.n);
    let mode = if args.fd {
        DerivativeMode::FiniteDifference { h: None }
    } else {
        DerivativeMode::Exact
    };
    let norm = weighted_norm(&f, &scheme, &spec, mode)?;
    let gap = norm_anova_gap(&f, &scheme, &spec, mode)?;
    match format {
        Format::Json => Ok(format!("{}\n", json!({"norm": norm, "gap": gap}))),
        Format::Csv => Ok(format!("key,value\nnorm,{norm}\ngap,{gap}\n")),
    }
}

fn poincare(args: &PoincareArgs, format: Format) -> Result<String, Error> {
    let suite = poincare_suite();
    let spec = QuadSpec::gauss(args.n);
    let selected: Vec<_> = if args.r#fn == "all" {
        suite.iter().collect()
    } else {
        let one = suite
            .iter()
            .find(|g| g.name == args.r#fn)
            .ok_or_else(|| Error::InvalidInput(format!("unknown test function `{}`", args.r#fn)))?;
        vec![one]
    };
    let floor = (std::f64::consts::PI / (args.b - args.a)).powi(2);
    let mut rows = Vec::with_capacity(selected.len());
    for g in selected {
        let ratio = poincare_ratio(g, (args.a, args.b), &spec)?;
        rows.push((g.name, ratio));
    }
    match format {
        Format::Csv => {
            let mut out = String::from("name,ratio,lower_bound\n");
            for (name, ratio) in &rows {
                out.push_str(&format!("{name},{ratio},{floor}\n"));
            }
            Ok(out)
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|(name, ratio)| json!({"name": name, "ratio": ratio}))
                .collect();
            Ok(format!(
                "{}\n",
                json!({"lower_bound": floor, "ratios": items})
            ))
        }
    }
}

fn meandim(args: &MeandimArgs, format: Format) -> Result<String, Error> {
    let f = args.function.resolve()?;
    let (md, se) = mean_dimension_mc(&f, args.n, args.seed)?;
    match format {
        Format::Json => Ok(format!(
            "{}\n",
            json!({"mean_dimension": md, "se": se, "n": args.n, "seed": args.seed})
        )),
        Format::Csv => Ok(format!("key,value\nmean_dimension,{md}\nse,{se}\n")),
    }
}

fn sobol(args: &SobolArgs, format: Format) -> Result<String, Error> {
    let f = args.function.resolve()?;
    let est = total_index_estimates(&f, args.n, args.seed)?;
    match format {
        Format::Json => Ok(format!(
            "{}\n",
            json!({
                "tau2": est.tau2,
                "tau2_se": est.tau2_se,
                "sigma2": est.sigma2,
                "mean_dimension": est.mean_dimension,
                "se": est.mean_dimension_se,
                "n": est.n,
                "seed": est.seed,
            })
        )),
        Format::Csv => {
            let mut out = String::from("index,tau2,se\n");
            for (j, (t, se)) in est.tau2.iter().zip(&est.tau2_se).enumerate() {
                out.push_str(&format!("{},{t},{se}\n", j + 1));
            }
            Ok(out)
        }
    }
}

fn mcqmc(args: &McqmcArgs, format: Format) -> Result<String, Error> {
    let f = args.function.resolve()?;
    let (mc, qmc) = mc_qmc_rmse(&f, args.n, args.replicates, args.seed)?;
    match format {
        Format::Json => Ok(format!(
            "{}\n",
            json!({"rmse_mc": mc, "rmse_qmc": qmc, "n": args.n, "replicates": args.replicates})
        )),
        Format::Csv => Ok(format!("key,value\nrmse_mc,{mc}\nrmse_qmc,{qmc}\n")),
    }
}

fn asymptote(args: &AsymptoteArgs, format: Format) -> Result<String, Error> {
    let value = superposition_asymptote(args.eps, args.eta, args.lambda)?;
    let a = (1.0 / args.eps).ln() / (args.lambda * args.eta);
    let w = lambert_w0(a)?;
    match format {
        Format::Json => Ok(format!(
            "{}\n",
            json!({"a": a, "w0": w, "value": value, "lambda": args.lambda})
        )),
        Format::Csv => Ok(format!("key,value\na,{a}\nw0,{w}\nvalue,{value}\n")),
    }
}
