use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use objprior::analysis::{emit_loglog, parse_exponent_tuple, run_analysis, AnalysisConfig, PriorChoice};
use objprior::priors::{catalog_json, BoundKind, PriorId, PriorSpec, Scope, ScopeKind};
use objprior::propriety::Status;

#[derive(Parser, Debug)]
#[command(name = "objprior", version)]
#[command(about = "Posterior propriety checks for objective priors of the Stacy distribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide propriety for a dataset and prior, optionally with numerical checks
    Analyze(AnalyzeArgs),
    /// Inspect the prior catalog
    Priors {
        #[command(subcommand)]
        action: PriorsAction,
    },
    /// Write (phi, pi(phi)) over [1e-7, 1e7] and the fitted endpoint exponents
    Loglog {
        #[arg(long)]
        prior: PriorId,
        /// CSV path; the exponent fit goes next to it with a .json extension
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum PriorsAction {
    /// Print the catalog table
    List {
        /// Print the catalog as JSON instead
        #[arg(long)]
        json: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScopeArg {
    General,
    AlphaKnown,
    PhiKnown,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BoundArg {
    TwoSided,
    Upper,
    Lower,
}

impl From<BoundArg> for BoundKind {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::TwoSided => BoundKind::TwoSided,
            BoundArg::Upper => BoundKind::Upper,
            BoundArg::Lower => BoundKind::Lower,
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// CSV (one value per line, optional header "x") or JSON array
    #[arg(long)]
    data: PathBuf,

    /// Catalog id (J1, J3, J4a, J4b, J5, J6, R7..R10) or "custom"
    #[arg(long)]
    prior: String,

    /// Custom exponents "k,q0,q_inf,r0,r_inf"; use "none" for unknown entries
    #[arg(long, allow_hyphen_values = true)]
    exponents: Option<String>,

    /// Whether custom exponents are exact rates or one-sided bounds
    #[arg(long, value_enum)]
    bound: Option<BoundArg>,

    /// Defaults to alpha-known or phi-known when --alpha or --phi is given
    #[arg(long, value_enum)]
    scope: Option<ScopeArg>,

    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,

    /// Run the truncation-ladder quadrature
    #[arg(long)]
    oracle: bool,

    /// Run the Metropolis sampler (only for proper posteriors)
    #[arg(long)]
    mcmc: bool,

    /// Also write loglog.csv for the prior's phi factor
    #[arg(long)]
    loglog: bool,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Kept draws of the sampler
    #[arg(long, default_value_t = 20_000)]
    steps: usize,

    #[arg(long, default_value_t = 5_000)]
    burn_in: usize,

    /// Output directory for report.json and side files
    #[arg(long)]
    out: Option<PathBuf>,
}

fn scope_of(a: &AnalyzeArgs) -> anyhow::Result<Scope> {
    let kind = match (a.scope, a.alpha, a.phi) {
        (Some(s), _, _) => s,
        (None, Some(_), None) => ScopeArg::AlphaKnown,
        (None, None, Some(_)) => ScopeArg::PhiKnown,
        (None, None, None) => ScopeArg::General,
        (None, Some(_), Some(_)) => bail!("give --scope when both --alpha and --phi are set"),
    };
    let scope = match kind {
        ScopeArg::General => Scope::General,
        ScopeArg::AlphaKnown => Scope::AlphaKnown(a.alpha.context("--scope alpha-known needs --alpha")?),
        ScopeArg::PhiKnown => Scope::PhiKnown(a.phi.context("--scope phi-known needs --phi")?),
    };
    Ok(scope)
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let scope = scope_of(&a)?;
    let prior = if a.prior.eq_ignore_ascii_case("custom") {
        let tuple = a.exponents.as_deref().context("--prior custom needs --exponents")?;
        PriorChoice::Custom {
            exponents: parse_exponent_tuple(tuple)?,
            bound: a.bound.map(Into::into),
        }
    } else {
        if a.exponents.is_some() {
            bail!("--exponents only applies to --prior custom");
        }
        PriorChoice::Catalog(a.prior.parse()?)
    };
    let mut cfg = AnalysisConfig::new(&a.data, prior, scope);
    cfg.run_oracle = a.oracle;
    cfg.run_mcmc = a.mcmc;
    cfg.emit_loglog = a.loglog;
    cfg.seed = a.seed;
    cfg.out_dir = a.out.clone();
    cfg.chain.steps = a.steps;
    cfg.chain.burn_in = a.burn_in;

    let report = run_analysis(&cfg).with_context(|| format!("analyzing {}", a.data.display()))?;
    print!("{}", report.to_canonical_string()?);
    Ok(match report.verdict.status {
        Status::Proper | Status::Improper => ExitCode::SUCCESS,
        Status::Undetermined => ExitCode::from(2),
    })
}

fn list_priors(json: bool) -> anyhow::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(&catalog_json())?);
        return Ok(());
    }
    println!("{:<5} {:<34} {:<26} {}", "id", "origin", "scopes", "phi factor");
    for id in PriorId::CATALOG {
        let scopes: Vec<&str> = [ScopeKind::General, ScopeKind::AlphaKnown, ScopeKind::PhiKnown]
            .into_iter()
            .filter(|s| id.supports(*s))
            .map(|s| s.as_str())
            .collect();
        println!("{:<5} {:<34} {:<26} {}", id.as_str(), id.origin(), scopes.join(","), id.formula());
    }
    Ok(())
}

fn loglog(prior: PriorId, out: PathBuf) -> anyhow::Result<()> {
    let scope = [ScopeKind::General, ScopeKind::AlphaKnown]
        .into_iter()
        .find(|s| prior.supports(*s))
        .context("prior has no phi factor")?;
    let spec = PriorSpec::catalog(prior, scope)?;
    let sidecar = emit_loglog(&spec, &out)?;
    eprintln!("wrote {} and {}", out.display(), sidecar.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Priors {
            action: PriorsAction::List { json },
        } => list_priors(json).map(|_| ExitCode::SUCCESS),
        Command::Loglog { prior, out } => loglog(prior, out).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors exit with 1: code 2 is reserved for undetermined verdicts.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
