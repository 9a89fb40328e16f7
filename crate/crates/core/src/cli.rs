//! Command-line driver: parse flags, merge them over the JSON config, run the
//! selected suites on a worker pool and write one report per suite.

use crate::config::{ParamRecord, RunConfig};
use crate::error::{Error, Result};
use crate::hierarchy::BoundaryParams;
use crate::qcore::{C64, ZERO};
use crate::report::{write_json, SuiteReport};
use crate::suites::{default_modules, run_suite, Context, Suite, DEFAULT_BETA, DEFAULT_BETA_STAR};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qonsager", version, about = "Verify Gasper-Rahman polynomial and q-Onsager module identities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Eigen equations of both operator families, operator forms, coefficient tables, duality.
    VerifyBispectral,
    /// q-Onsager relations, spectra and truncation on finite modules.
    VerifyOnsager,
    /// Dump module matrices, bases and spectra as JSON.
    BuildModule,
    /// Hierarchy charges: commutation, joint diagonalization, primal/dual spectra.
    Spectrum,
    /// Invariant windows under the boundary relations, scanned over the cutoff.
    NepomechieScan,
    /// Raising and lowering identities.
    LadderCheck,
    /// Quadrature Gram matrices against the closed-form norms.
    OrthoCheck,
    /// Krawtchouk and Racah identities at q = 1.
    ClassicalCheck,
    /// Every suite, or those chosen with --suite or the config.
    All,
}

impl Command {
    fn suite(self) -> Option<Suite> {
        Some(match self {
            Command::VerifyBispectral => Suite::VerifyBispectral,
            Command::VerifyOnsager => Suite::VerifyOnsager,
            Command::BuildModule => Suite::BuildModule,
            Command::Spectrum => Suite::Spectrum,
            Command::NepomechieScan => Suite::NepomechieScan,
            Command::LadderCheck => Suite::LadderCheck,
            Command::OrthoCheck => Suite::OrthoCheck,
            Command::ClassicalCheck => Suite::ClassicalCheck,
            Command::All => return None,
        })
    }
}

fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    s.trim().parse::<C64>().map_err(|e| format!("'{s}' is not a complex number: {e}"))
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Suites for `all`, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub suite: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "QONSAGER_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory for reports and CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,
    /// Leave wall times out of the reports.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[arg(long, global = true)]
    pub no_csv: bool,

    /// Spins j_1..j_N of a module, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub spins: Vec<f64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    pub beta: Option<C64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    pub beta_star: Option<C64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    pub q: Option<C64>,
    /// alpha_0..alpha_{N+2}, comma separated, each like 1.2 or 0.3+0.1i.
    #[arg(long, global = true, allow_hyphen_values = true, value_delimiter = ',', value_parser = parse_complex)]
    pub alpha: Vec<C64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    pub omega0: Option<C64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    pub omega1: Option<C64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    pub g_plus: Option<C64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    pub g_minus: Option<C64>,
}

/// The config file (or defaults) with the flags applied on top, validated.
pub fn resolve_config(opts: &Opts) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.policy.rng_seed = s;
    }
    if opts.workers.is_some() {
        cfg.workers = opts.workers;
    }
    if let Some(d) = &opts.out {
        cfg.output.dir = d.clone();
    }
    if opts.tol_rel.is_some() {
        cfg.tol_rel = opts.tol_rel;
    }
    if opts.tol_abs.is_some() {
        cfg.tol_abs = opts.tol_abs;
    }
    if opts.no_timing {
        cfg.output.timing = false;
    }
    if opts.no_csv {
        cfg.output.csv = false;
    }

    let touches_module = !opts.spins.is_empty() || opts.beta.is_some() || opts.beta_star.is_some();
    if touches_module || (opts.q.is_some() && opts.alpha.is_empty()) {
        let mut base = cfg.modules();
        if base.is_empty() || !opts.spins.is_empty() {
            base = if opts.spins.is_empty() {
                default_modules().into_iter().map(|m| (m.spins, m.beta, m.beta_star, m.q)).collect()
            } else {
                vec![(opts.spins.clone(), DEFAULT_BETA, DEFAULT_BETA_STAR, C64::new(0.7, 0.0))]
            };
        }
        cfg.params.retain(|p| !matches!(p, ParamRecord::Module { .. }));
        for (spins, beta, beta_star, q) in base {
            cfg.params.push(ParamRecord::Module {
                spins,
                beta: opts.beta.unwrap_or(beta),
                beta_star: opts.beta_star.unwrap_or(beta_star),
                q: opts.q.unwrap_or(q),
            });
        }
    }
    if !opts.alpha.is_empty() {
        cfg.params.retain(|p| !matches!(p, ParamRecord::Alpha { .. }));
        cfg.params.push(ParamRecord::Alpha { alphas: opts.alpha.clone(), q: opts.q.unwrap_or(C64::new(0.7, 0.0)) });
    }
    let b = [opts.omega0, opts.omega1, opts.g_plus, opts.g_minus];
    if b.iter().any(Option::is_some) {
        let base = cfg.boundary().unwrap_or(BoundaryParams { omega0: ZERO, omega1: ZERO, g_plus: ZERO, g_minus: ZERO });
        cfg.params.retain(|p| !matches!(p, ParamRecord::Boundary { .. }));
        cfg.params.push(ParamRecord::Boundary {
            omega0: b[0].unwrap_or(base.omega0),
            omega1: b[1].unwrap_or(base.omega1),
            g_plus: b[2].unwrap_or(base.g_plus),
            g_minus: b[3].unwrap_or(base.g_minus),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Suites to run for a command; `all` honors --suite, then the config.
pub fn select(command: Command, opts: &Opts, cfg: &RunConfig) -> Result<Vec<Suite>> {
    if let Some(s) = command.suite() {
        return Ok(vec![s]);
    }
    let names: Vec<String> = if !opts.suite.is_empty() {
        opts.suite.clone()
    } else if let Some(s) = &cfg.suites {
        s.clone()
    } else {
        return Ok(Suite::ALL.to_vec());
    };
    let mut out: Vec<Suite> = names
        .iter()
        .map(|n| n.trim())
        .filter(|n| !n.is_empty())
        .map(Suite::parse)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        return Err(Error::Config(format!(
            "empty suite selection\nusage: qonsager all --suite NAME[,NAME...]\nsuites: {}",
            known.join(", ")
        )));
    }
    Ok(out)
}

fn print_report(r: &SuiteReport) {
    let status = if r.passed { "PASS" } else { "FAIL" };
    println!("{status} {} ({} checks)", r.suite, r.checks.len());
    for c in r.failed() {
        let w = c.witness.as_ref().map(|w| w.to_string()).unwrap_or_default();
        println!("  failed {}: residual {:e} vs {:e} {w}", c.name, c.residual, c.tolerance);
    }
}

/// Run a parsed command line; returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_inner(cli: &Cli) -> Result<bool> {
    let cfg = resolve_config(&cli.opts)?;
    let suites = select(cli.command, &cli.opts, &cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    let ctx = Context::new(cfg);
    let results: Vec<Result<SuiteReport>> = pool.install(|| suites.par_iter().map(|&s| run_suite(s, &ctx)).collect());
    let mut reports = Vec::with_capacity(results.len());
    for (s, r) in suites.iter().zip(results) {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("suite {} stopped", s.name());
                return Err(e);
            }
        }
    }
    for r in &reports {
        write_json(&ctx.cfg.output.dir.join(format!("{}.json", r.suite)), r)?;
        print_report(r);
    }
    let passed = reports.iter().all(|r| r.passed);
    if matches!(cli.command, Command::All) {
        let summary = json!({
            "passed": passed,
            "suites": reports.iter().map(|r| json!({ "suite": r.suite, "passed": r.passed })).collect::<Vec<_>>(),
        });
        write_json(&ctx.cfg.output.dir.join("summary.json"), &summary)?;
    }
    Ok(passed)
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}
