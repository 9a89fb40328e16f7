//! The verification suites behind the command-line subcommands. Each returns
//! a report whose checks carry the worst residual together with the input
//! that produced it.

use crate::classical_q1::{
    apply_di_dual, apply_distar, build_onsager_module_q1, krawtchouk_khat, racah_gram_and_td_check, KrawtchoukParams,
    RacahParams,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::gr_poly::{dual_alphas, normalized_qhat, normalized_qhat_signed, restricted_qtilde, AlphaParams};
use crate::hierarchy::{
    hierarchy_report, nepomechie_check, solve_nepomechie, window_report, BoundaryParams, HamiltonianSpec,
    InvariantWindow, WindowSide,
};
use crate::ladder::verify_ladder;
use crate::linalg::{cluster, eigenvalues, spectrum_distance};
use crate::onsager_modules::{
    build_dual_pair, build_w0_blocktri, build_w1_diag, classify_spectrum, dual_basis, dual_truncation_leak,
    primal_basis, truncation_leak, truncation_zeros, verify_overlap, verify_qdg, verify_td_pair, GradedBasis,
    ModuleSpec, SpectrumCase, TdOptions,
};
use crate::ortho::{gram_matrix, GramReport};
use crate::qcore::{c, C64, ONE};
use crate::qdiff_ops::{
    apply_dn, apply_dstar, dn_eigenvalue, dstar_eigenvalue, recurrence_table, reference_coefficients, DstarForm,
};
use crate::report::{
    matrix_value, write_coefficients_csv, write_gram_csv, write_json, write_nepomechie_csv, Check, NepomechieRow,
    SuiteReport, Worst,
};
use crate::sample::Sampler;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    VerifyBispectral,
    VerifyOnsager,
    BuildModule,
    Spectrum,
    NepomechieScan,
    LadderCheck,
    OrthoCheck,
    ClassicalCheck,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::VerifyBispectral,
        Suite::VerifyOnsager,
        Suite::BuildModule,
        Suite::Spectrum,
        Suite::NepomechieScan,
        Suite::LadderCheck,
        Suite::OrthoCheck,
        Suite::ClassicalCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::VerifyBispectral => "verify-bispectral",
            Suite::VerifyOnsager => "verify-onsager",
            Suite::BuildModule => "build-module",
            Suite::Spectrum => "spectrum",
            Suite::NepomechieScan => "nepomechie-scan",
            Suite::LadderCheck => "ladder-check",
            Suite::OrthoCheck => "ortho-check",
            Suite::ClassicalCheck => "classical-check",
        }
    }

    pub fn parse(name: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown suite '{name}'")))
    }
}

/// Everything a suite needs: the validated configuration and the seed.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Self {
        let seed = cfg.policy.rng_seed;
        Context { cfg, seed }
    }

    /// Independent stream per suite so that suites can run in any order.
    fn sampler(&self, stream: u64) -> Sampler {
        Sampler::new(self.seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }

    fn path(&self, file: &str) -> PathBuf {
        self.cfg.output.dir.join(file)
    }

    fn rel(&self, pinned: f64) -> f64 {
        self.cfg.rel(pinned)
    }

    fn abs(&self, pinned: f64) -> f64 {
        self.cfg.abs(pinned)
    }
}

pub fn run_suite(suite: Suite, ctx: &Context) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut r = match suite {
        Suite::VerifyBispectral => verify_bispectral(ctx),
        Suite::VerifyOnsager => verify_onsager(ctx),
        Suite::BuildModule => build_module(ctx),
        Suite::Spectrum => spectrum(ctx),
        Suite::NepomechieScan => nepomechie_scan(ctx),
        Suite::LadderCheck => ladder_check(ctx),
        Suite::OrthoCheck => ortho_check(ctx),
        Suite::ClassicalCheck => classical_check(ctx),
    }?;
    if ctx.cfg.output.timing {
        r.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(r)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn nan() -> C64 {
    C64::new(f64::NAN, 0.0)
}

fn to_i64(n: &[usize]) -> Vec<i64> {
    n.iter().map(|&v| v as i64).collect()
}

/// Multi-indices of length n with total degree at most `max_total`, graded.
fn simplex(n: usize, max_total: usize) -> Vec<Vec<usize>> {
    GradedBasis::new(&vec![max_total; n]).restrict_total(max_total).indices
}

pub const DEFAULT_BETA: C64 = C64::new(0.3, 0.2);
pub const DEFAULT_BETA_STAR: C64 = C64::new(0.7, -0.1);

/// j = 3/2, (1, 1/2) and three spins 1/2.
pub fn default_modules() -> Vec<ModuleSpec> {
    [vec![1.5], vec![1.0, 0.5], vec![0.5, 0.5, 0.5]]
        .into_iter()
        .map(|js| ModuleSpec::new(js, DEFAULT_BETA, DEFAULT_BETA_STAR, c(0.7)).expect("default module"))
        .collect()
}

fn modules(ctx: &Context) -> Result<Vec<ModuleSpec>> {
    let given = ctx.cfg.modules();
    if given.is_empty() {
        return Ok(default_modules());
    }
    given
        .into_iter()
        .map(|(js, b, bs, q)| ModuleSpec::with_policy(js, b, bs, q, ctx.cfg.policy))
        .collect()
}

pub fn module_label(spec: &ModuleSpec) -> String {
    spec.spins.iter().map(|j| j.to_string()).collect::<Vec<_>>().join("_")
}

fn module_params(specs: &[ModuleSpec]) -> Value {
    Value::Array(
        specs
            .iter()
            .map(|s| json!({ "spins": s.spins, "beta": s.beta, "beta_star": s.beta_star, "q": s.q }))
            .collect(),
    )
}

fn boundary(ctx: &Context, s: &mut Sampler) -> Result<BoundaryParams> {
    match ctx.cfg.boundary() {
        Some(bp) => Ok(bp),
        None => BoundaryParams::new(s.complex(1.0), s.complex(1.0), s.complex(1.0), s.complex(1.0)),
    }
}

fn with_policy(mut al: AlphaParams, ctx: &Context) -> AlphaParams {
    al.policy = ctx.cfg.policy;
    al
}

// Bispectrality, operator forms, coefficient tables, duality.

fn eigen_residuals(set: usize, n: &[usize], al: &AlphaParams, pts: &[Vec<C64>]) -> Result<(Worst, Worst)> {
    let nn = al.n();
    let ni = to_i64(n);
    let mut ds = Worst::default();
    let mut dn = Worst::default();
    for z in pts {
        let f = |w: &[C64]| normalized_qhat(n, w, al).unwrap_or_else(|_| nan());
        let g = |m: &[i64]| normalized_qhat_signed(m, z, al).unwrap_or_else(|_| nan());
        for k in 1..=nn {
            let lhs = apply_dstar(k, &f, z, al, DstarForm::Cbar)?;
            let r = rel(lhs, dstar_eigenvalue(k, n, al) * f(z));
            ds.update(r, || json!({ "set": set, "k": k, "n": n, "point": z }));
            let lhs = apply_dn(k, &g, &ni, al)?;
            let r = rel(lhs, dn_eigenvalue(k, z) * g(&ni));
            dn.update(r, || json!({ "set": set, "k": k, "n": n, "point": z }));
        }
    }
    Ok((ds, dn))
}

fn verify_bispectral(ctx: &Context) -> Result<SuiteReport> {
    let smp = &ctx.cfg.samples;
    let mut s = ctx.sampler(1);
    let qs = [0.7, 0.9];
    let mut sets: Vec<AlphaParams> = ctx.cfg.alphas();
    if sets.is_empty() {
        for nn in 1..=3 {
            for q in qs {
                sets.push(with_policy(s.alphas(nn, c(q)), ctx));
            }
        }
    }
    let mut rep = SuiteReport::new(
        "verify-bispectral",
        json!({
            "alpha_sets": sets.iter().map(|a| json!({ "alphas": a.alphas, "q": a.q })).collect::<Vec<_>>(),
            "points": smp.points,
            "max_total": smp.max_total,
            "coefficient_draws": smp.coefficient_draws,
            "duality_draws": smp.duality_draws,
            "seed": ctx.seed,
        }),
    );

    let mut ds = Worst::default();
    let mut dn = Worst::default();
    for (set, al) in sets.iter().enumerate() {
        let nn = al.n();
        let pts: Vec<Vec<C64>> = (0..smp.points).map(|_| s.points(nn)).collect();
        let parts = simplex(nn, smp.max_total)
            .par_iter()
            .map(|n| eigen_residuals(set, n, al, &pts))
            .collect::<Result<Vec<_>>>()?;
        for (a, b) in parts {
            ds.merge(a);
            dn.merge(b);
        }
    }
    rep.push(ds.below("dstar_eigen", ctx.rel(1e-9)));
    rep.push(dn.below("dn_eigen", ctx.rel(1e-9)));

    // The two expressions of D*: shifted differences against the direct stencil.
    let mut forms = Worst::default();
    for draw in 0..smp.coefficient_draws {
        let nn = 1 + draw % 3;
        let al = with_policy(s.alphas(nn, c(qs[draw / 3 % 2])), ctx);
        let n = s.multi_index(nn, smp.max_total);
        let z = s.points(nn);
        let k = 1 + s.index(nn);
        let w: Vec<C64> = (0..nn).map(|_| s.complex(0.5)).collect();
        let f = |p: &[C64]| {
            let e: C64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
            normalized_qhat(&n, p, &al).unwrap_or_else(|_| nan()) * e.exp()
        };
        let a = apply_dstar(k, &f, &z, &al, DstarForm::Phi)?;
        let b = apply_dstar(k, &f, &z, &al, DstarForm::Cbar)?;
        forms.update(rel(a, b), || json!({ "draw": draw, "k": k, "n": n, "point": z, "alphas": al.alphas }));
    }
    rep.push(forms.below("dstar_two_forms", ctx.rel(1e-10)));

    // Generic recurrence coefficients against the explicit N = 1, 2 tables,
    // relative to the largest coefficient of the table.
    let mut tables = Worst::default();
    for draw in 0..smp.coefficient_draws {
        let nn = 1 + draw % 2;
        let al = with_policy(s.alphas(nn, c(qs[draw / 2 % 2])), ctx);
        let n = s.multi_index(nn, smp.max_total);
        let gen = recurrence_table(nn, &to_i64(&n), &al)?;
        let scale = gen.iter().map(|c| c.value.norm()).fold(1e-300, f64::max);
        for r in reference_coefficients(&n, &al)? {
            let d = match gen.iter().find(|g| g.shift == r.shift && g.kind == r.kind) {
                Some(g) => (g.value - r.value).norm() / scale,
                None => f64::INFINITY,
            };
            tables.update(d, || json!({ "draw": draw, "n": n, "nu": r.nu, "shift": r.shift, "alphas": al.alphas }));
        }
    }
    rep.push(tables.below("coefficient_tables", ctx.rel(1e-10)));

    // Q~(n, n~; alpha) = Q~(n~, n; alpha~) on the discrete support.
    let mut dual = Worst::default();
    for draw in 0..smp.duality_draws {
        let nn = 1 + draw % 3;
        let al = with_policy(s.alphas(nn, c(qs[draw / 3 % 2])), ctx);
        let n = s.multi_index(nn, 3);
        let nt = s.multi_index(nn, 3);
        let a = restricted_qtilde(&n, &nt, &al)?;
        let b = restricted_qtilde(&nt, &n, &dual_alphas(&al))?;
        dual.update(rel(a, b), || json!({ "draw": draw, "n": n, "n_dual": nt, "alphas": al.alphas, "q": al.q }));
    }
    rep.push(dual.below("duality", ctx.rel(1e-10)));

    if ctx.cfg.output.csv {
        for (set, al) in sets.iter().enumerate() {
            let nn = al.n();
            let mut rows = Vec::new();
            for n in simplex(nn, smp.max_total) {
                for coef in recurrence_table(nn, &to_i64(&n), al)? {
                    rows.push((n.clone(), coef));
                }
            }
            let file = format!("coefficients_set{set}.csv");
            write_coefficients_csv(&ctx.path(&file), &rows)?;
            rep.artifacts.push(file);
        }
    }
    Ok(rep)
}

// Finite modules.

/// (q^e + q^-e)/2 for a complex exponent.
fn half_cosh(q: C64, e: C64) -> C64 {
    let p = q.powc(e);
    (p + p.inv()) * 0.5
}

fn module_checks(rep: &mut SuiteReport, spec: &ModuleSpec, ctx: &Context) -> Result<()> {
    let label = module_label(spec);
    let tag = |name: &str| format!("{name}[{label}]");
    let q = spec.q;
    let d = spec.diameter();
    let w0 = build_w0_blocktri(spec)?;
    let w1 = build_w1_diag(spec);
    let (v0, v1) = build_dual_pair(spec)?;
    let want_dim: usize = spec.twice_spins().iter().map(|t| t + 1).product();
    rep.push(Check::equal(tag("dimension"), w0.dim(), want_dim));

    let r = verify_qdg(&w0.entries, &w1.entries, q, spec.rho())?;
    rep.push(Check::below(tag("qdg"), r.max(), ctx.rel(1e-8)).with_witness(r));
    let r = verify_qdg(&v0.entries, &v1.entries, q, spec.rho())?;
    rep.push(Check::below(tag("qdg_dual"), r.max(), ctx.rel(1e-8)).with_witness(r));

    // Diagonal entries against (q^{beta*+d-2N} + q^{-beta*-d+2N})/2 and its partner.
    let dd = C64::new(d as f64, 0.0);
    let mut ts = Worst::default();
    let pb = primal_basis(spec);
    for (i, n) in pb.indices.iter().enumerate() {
        let want = half_cosh(q, spec.beta_star + dd - 2.0 * pb.grade(i) as f64);
        ts.update(rel(w1.entries[(i, i)], want), || json!({ "n": n }));
    }
    rep.push(ts.below(tag("theta_star"), ctx.rel(1e-10)));
    let mut th = Worst::default();
    let db = dual_basis(spec);
    for (i, n) in db.indices.iter().enumerate() {
        let want = half_cosh(q, spec.beta + dd - 2.0 * db.grade(i) as f64);
        th.update(rel(v0.entries[(i, i)], want), || json!({ "n_dual": n }));
    }
    rep.push(th.below(tag("theta"), ctx.rel(1e-10)));

    let diag1: Vec<C64> = (0..w1.dim()).map(|i| w1.entries[(i, i)]).collect();
    let diag0: Vec<C64> = (0..v0.dim()).map(|i| v0.entries[(i, i)]).collect();
    let r = spectrum_distance(&eigenvalues(&w0.entries)?, &diag0);
    rep.push(Check::below(tag("w0_spectrum"), r, ctx.rel(1e-8)));

    // Distinct W1 eigenvalues in grade order with composition-count multiplicities.
    let radius = diag1.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let levels = cluster(&diag1, 1e-9 * radius);
    rep.push(Check::equal(tag("distinct_w1_eigenvalues"), levels.len(), d + 1));
    let got: Vec<usize> = levels.iter().map(|l| l.1).collect();
    let want: Vec<usize> = (0..=d).map(|p| pb.grade_size(p)).collect();
    let mut sorted_got = got.clone();
    let mut sorted_want = want.clone();
    sorted_got.sort_unstable();
    sorted_want.sort_unstable();
    rep.push(
        Check::flag(tag("w1_multiplicities"), sorted_got == sorted_want)
            .with_witness(json!({ "got": got, "expected": want })),
    );
    if levels.len() >= 4 {
        let seq: Vec<C64> = (0..=d).map(|p| crate::onsager_modules::theta_star(p, &spec.alpha)).collect();
        let fit = classify_spectrum(&seq, q, ctx.rel(1e-8))?;
        rep.push(
            Check::below(tag("theta_star_case"), fit.fit_residual, ctx.rel(1e-8))
                .with_witness(json!({ "case": fit.case })),
        );
        rep.push(Check::flag(tag("theta_star_is_q_racah"), fit.case == SpectrumCase::QRacah));
    }

    let mut zeros = Worst::default();
    for z in truncation_zeros(spec)? {
        zeros.update(z.modulus, || json!({ "label": z.label, "n": z.n }));
    }
    if zeros.witness.is_some() {
        rep.push(zeros.below(tag("truncation_zeros"), ctx.abs(1e-12)));
    }
    rep.push(Check::below(tag("truncation_leak"), truncation_leak(spec)?, ctx.abs(1e-12)));
    rep.push(Check::below(tag("dual_truncation_leak"), dual_truncation_leak(spec)?, ctx.abs(1e-12)));
    rep.push(Check::below(tag("w0_block_tridiagonal"), w0.out_of_band(), ctx.abs(1e-12)));

    let ov = verify_overlap(spec)?;
    rep.push(Check::below(tag("overlap_intertwines"), ov.w0.max(ov.w1), ctx.rel(1e-8)).with_witness(&ov));
    let td = verify_td_pair(&w0.entries, &w1.entries, &TdOptions::default())?;
    rep.push(
        Check::flag(tag("td_pair"), td.passed && td.d == d)
            .with_witness(json!({ "d": td.d, "delta": td.delta, "a_multiplicities": td.a.multiplicities,
                                  "a_star_multiplicities": td.a_star.multiplicities })),
    );
    Ok(())
}

fn verify_onsager(ctx: &Context) -> Result<SuiteReport> {
    let specs = modules(ctx)?;
    let mut rep = SuiteReport::new("verify-onsager", json!({ "modules": module_params(&specs) }));
    for spec in &specs {
        module_checks(&mut rep, spec, ctx)?;
    }
    Ok(rep)
}

fn build_module(ctx: &Context) -> Result<SuiteReport> {
    let specs = modules(ctx)?;
    let mut rep = SuiteReport::new("build-module", json!({ "modules": module_params(&specs) }));
    for spec in &specs {
        let label = module_label(spec);
        let w0 = build_w0_blocktri(spec)?;
        let w1 = build_w1_diag(spec);
        let (v0, v1) = build_dual_pair(spec)?;
        let qdg = verify_qdg(&w0.entries, &w1.entries, spec.q, spec.rho())?;
        let qdg_dual = verify_qdg(&v0.entries, &v1.entries, spec.q, spec.rho())?;
        let ov = verify_overlap(spec)?;
        let leak = truncation_leak(spec)?;
        let d = spec.diameter();
        let dump = json!({
            "spins": spec.spins,
            "beta": spec.beta,
            "beta_star": spec.beta_star,
            "q": spec.q,
            "alphas": spec.alpha.alphas,
            "rho": spec.rho(),
            "basis_order": primal_basis(spec).indices,
            "dual_basis_order": dual_basis(spec).indices,
            "matrices": {
                "w0": matrix_value(&w0.entries),
                "w1": matrix_value(&w1.entries),
                "dual_w0": matrix_value(&v0.entries),
                "dual_w1": matrix_value(&v1.entries),
            },
            "spectra": {
                "theta": (0..=d).map(|p| crate::onsager_modules::theta(p, &spec.alpha)).collect::<Vec<_>>(),
                "theta_star": (0..=d).map(|p| crate::onsager_modules::theta_star(p, &spec.alpha)).collect::<Vec<_>>(),
            },
            "residual_report": {
                "qdg": qdg,
                "qdg_dual": qdg_dual,
                "overlap": ov,
                "truncation_leak": leak,
            },
        });
        let file = format!("module_{label}.json");
        write_json(&ctx.path(&file), &dump)?;
        rep.artifacts.push(file);
        let tag = |name: &str| format!("{name}[{label}]");
        rep.push(Check::below(tag("qdg"), qdg.max(), ctx.rel(1e-8)));
        rep.push(Check::below(tag("qdg_dual"), qdg_dual.max(), ctx.rel(1e-8)));
        rep.push(Check::below(tag("truncation_leak"), leak, ctx.abs(1e-12)));
    }
    Ok(rep)
}

// Hierarchy.

fn spectrum(ctx: &Context) -> Result<SuiteReport> {
    let specs = modules(ctx)?;
    let mut s = ctx.sampler(4);
    let bp = boundary(ctx, &mut s)?;
    let h = ctx.cfg.hamiltonian().unwrap_or(HamiltonianSpec { h0: ONE, h_minus1: c(0.5), offset: c(0.0) });
    let mut rep = SuiteReport::new(
        "spectrum",
        json!({ "modules": module_params(&specs), "boundary": bp, "hamiltonian": h }),
    );
    let mut data = serde_json::Map::new();
    for spec in &specs {
        let label = module_label(spec);
        let tag = |name: &str| format!("{name}[{label}]");
        let r = hierarchy_report(spec, &bp, &h)?;
        rep.push(Check::below(tag("i1_i3_commute"), r.commutator, ctx.rel(1e-8)));
        rep.push(Check::below(tag("h_commutes"), r.h_commutator, ctx.rel(1e-8)));
        rep.push(Check::below(tag("i3_leakage"), r.leak_i3, ctx.rel(1e-7)));
        rep.push(Check::below(tag("h_leakage"), r.leak_h, ctx.rel(1e-7)));
        rep.push(Check::below(tag("primal_dual_isospectral"), r.isospectral, ctx.rel(1e-8)));
        rep.push(Check::below(tag("two_expansions"), r.two_path, ctx.rel(1e-10)));
        rep.push(Check::below(tag("eigenpair_defect"), r.max_eigen_residual, ctx.rel(1e-8)));
        data.insert(label, json!({ "i1_spectrum": r.spectrum }));
    }
    rep.data = Some(Value::Object(data));
    Ok(rep)
}

fn nepomechie_scan(ctx: &Context) -> Result<SuiteReport> {
    let specs = modules(ctx)?;
    let mut s = ctx.sampler(5);
    let base = boundary(ctx, &mut s)?;
    let mut rep = SuiteReport::new("nepomechie-scan", json!({ "modules": module_params(&specs), "boundary": base }));
    let mut rows = Vec::new();
    let mut coupling = Worst::default();
    let mut support = Worst::default();
    let mut relation = Worst::default();
    let mut control: Option<(f64, Value)> = None;
    for spec in &specs {
        let label = module_label(spec);
        let d = spec.diameter();
        for side in WindowSide::ALL {
            for solved in 0..=d {
                let w = InvariantWindow { side, cutoff: solved };
                let bp = solve_nepomechie(w, &spec.alpha, &base);
                let chk = nepomechie_check(w, &spec.alpha, &bp);
                relation.update(chk.defect, || json!({ "module": label, "side": side.label(), "P": solved }));
                for p in 0..=d {
                    let r = window_report(spec, InvariantWindow { side, cutoff: p }, &bp)?;
                    rows.push(NepomechieRow {
                        module: label.clone(),
                        side: side.label().to_string(),
                        solved,
                        p,
                        relation: r.relation,
                        coupling: r.coupling,
                    });
                    if p == solved {
                        let wit = || json!({ "module": label, "side": side.label(), "P": p, "boundary": bp });
                        coupling.update(r.coupling, wit);
                        support.update(r.outside_support, wit);
                    }
                }
            }
            // Cutoffs below d give windows that are neither empty nor everything.
            for p in 0..d {
                let r = window_report(spec, InvariantWindow { side, cutoff: p }, &base)?;
                if control.as_ref().is_none_or(|c| r.coupling < c.0) {
                    control = Some((r.coupling, json!({ "module": label, "side": side.label(), "P": p })));
                }
            }
        }
    }
    rep.push(relation.below("relation_solved", ctx.abs(ctx.cfg.policy.abs_tol.max(1e-12))));
    rep.push(coupling.below("coupling_at_solved", ctx.abs(1e-10)));
    rep.push(support.below("window_eigenvector_support", ctx.rel(1e-8)));
    if let Some((v, w)) = control {
        rep.push(Check::above("unsolved_coupling", v, 1e-3).with_witness(w));
    }
    if ctx.cfg.output.csv {
        let file = "nepomechie.csv".to_string();
        write_nepomechie_csv(&ctx.path(&file), &rows)?;
        rep.artifacts.push(file);
    }
    Ok(rep)
}

// Ladder operators.

fn ladder_check(ctx: &Context) -> Result<SuiteReport> {
    let smp = &ctx.cfg.samples;
    let mut s = ctx.sampler(6);
    let mut sets: Vec<AlphaParams> = ctx.cfg.alphas();
    if sets.is_empty() {
        sets = (1..=3).map(|nn| with_policy(s.alphas_near_unit(nn, c(0.7)), ctx)).collect();
    }
    let mut rep = SuiteReport::new(
        "ladder-check",
        json!({
            "alpha_sets": sets.iter().map(|a| json!({ "alphas": a.alphas, "q": a.q })).collect::<Vec<_>>(),
            "max_total": smp.ladder_max_total,
            "points": smp.ladder_points,
            "seed": ctx.seed,
        }),
    );
    let mut raise = Worst::default();
    let mut lower = Worst::default();
    for (set, al) in sets.iter().enumerate() {
        let nn = al.n();
        let pts: Vec<Vec<C64>> = (0..smp.ladder_points).map(|_| s.arc_points(nn, 0.5, 2.6)).collect();
        let jobs: Vec<(Vec<usize>, usize)> = simplex(nn, smp.ladder_max_total)
            .into_iter()
            .flat_map(|n| (1..=nn).map(move |k| (n.clone(), k)))
            .collect();
        let out = jobs
            .par_iter()
            .map(|(n, k)| verify_ladder(*k, n, al, &pts))
            .collect::<Result<Vec<_>>>()?;
        for r in out {
            let wit = || json!({ "set": set, "k": r.k, "n": r.n, "points": pts });
            raise.update(r.raise, wit);
            lower.update(r.lower, wit);
        }
    }
    rep.push(raise.below("raising", ctx.rel(1e-8)));
    rep.push(lower.below("lowering", ctx.rel(1e-8)));
    Ok(rep)
}

// Continuous orthogonality.

pub fn ortho_alphas_n1() -> AlphaParams {
    AlphaParams::new([1.3, 0.7, 0.4, 0.8].map(c).to_vec(), c(0.6)).expect("fixed parameters")
}

pub fn ortho_alphas_n2() -> AlphaParams {
    AlphaParams::new([1.3, 0.8, 0.6, 0.45, 0.9].map(c).to_vec(), c(0.6)).expect("fixed parameters")
}

fn gram_labels(g: &GramReport) -> Vec<String> {
    g.indices.iter().map(|n| n.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")).collect()
}

fn ortho_check(ctx: &Context) -> Result<SuiteReport> {
    let smp = &ctx.cfg.samples;
    let given = ctx.cfg.alphas();
    let pick = |nn: usize, fallback: AlphaParams| {
        given.iter().find(|a| a.n() == nn).cloned().unwrap_or_else(|| with_policy(fallback, ctx))
    };
    let a1 = pick(1, ortho_alphas_n1());
    let a2 = pick(2, ortho_alphas_n2());
    let mut rep = SuiteReport::new(
        "ortho-check",
        json!({
            "n1": { "alphas": a1.alphas, "q": a1.q, "nodes": smp.ortho_nodes_n1, "max_degree": 5 },
            "n2": { "alphas": a2.alphas, "q": a2.q, "nodes": smp.ortho_nodes_n2, "max_total": 2 },
        }),
    );
    let idx1 = simplex(1, 5);
    let g = gram_matrix(&idx1, &a1, smp.ortho_nodes_n1)?;
    rep.push(Check::below("gram_offdiag_n1", g.max_offdiag, ctx.rel(1e-6)));
    rep.push(Check::below("gram_norms_n1", g.max_diag_dev, ctx.rel(1e-6)));
    let half = gram_matrix(&idx1, &a1, (smp.ortho_nodes_n1 / 2).max(1))?;
    let drift = crate::linalg::rel_diff(&g.gram, &half.gram);
    rep.push(Check::below("node_doubling_n1", drift, ctx.rel(1e-6)));
    if ctx.cfg.output.csv {
        write_gram_csv(&ctx.path("gram_n1.csv"), &gram_labels(&g), &g.gram)?;
        rep.artifacts.push("gram_n1.csv".into());
    }
    if smp.ortho_nodes_n2 > 0 {
        let g = gram_matrix(&simplex(2, 2), &a2, smp.ortho_nodes_n2)?;
        rep.push(Check::below("gram_offdiag_n2", g.max_offdiag, ctx.rel(1e-4)));
        rep.push(Check::below("gram_norms_n2", g.max_diag_dev, ctx.rel(1e-4)));
        if ctx.cfg.output.csv {
            write_gram_csv(&ctx.path("gram_n2.csv"), &gram_labels(&g), &g.gram)?;
            rep.artifacts.push("gram_n2.csv".into());
        }
    }
    Ok(rep)
}

// q = 1.

fn as_f(x: &[i64]) -> Vec<f64> {
    x.iter().map(|&v| v as f64).collect()
}

fn as_u(x: &[i64]) -> Vec<usize> {
    x.iter().map(|&v| v as usize).collect()
}

fn lattice(n: usize, max_total: usize) -> Vec<Vec<i64>> {
    simplex(n, max_total).into_iter().map(|v| to_i64(&v)).collect()
}

/// |lhs - ev v| / max(|v|, 1) for both eigen equations at one (n, x).
fn krawtchouk_residuals(n: &[i64], x: &[i64], kp: &KrawtchoukParams) -> Result<(f64, f64, usize)> {
    let nn = kp.n();
    let nu = as_u(n);
    let v = krawtchouk_khat(&nu, &as_f(x), kp)?;
    let scale = v.abs().max(1.0);
    let (mut a, mut b, mut at) = (0.0f64, 0.0f64, 1);
    for l in 1..=nn {
        let f = |y: &[i64]| krawtchouk_khat(&nu, &as_f(y), kp).unwrap_or(f64::NAN);
        let ev = n[nn - l..].iter().sum::<i64>() as f64;
        let r = (apply_distar(l, &f, x, kp)? - ev * v).abs() / scale;
        let g = |m: &[i64]| krawtchouk_khat(&as_u(m), &as_f(x), kp).unwrap_or(f64::NAN);
        let ev = x[..l].iter().sum::<i64>() as f64;
        let s = (apply_di_dual(l, &g, n, kp)? - ev * v).abs() / scale;
        if r.max(s).is_nan() || r.max(s) > a.max(b) {
            at = l;
        }
        a = if r.is_nan() { f64::NAN } else { a.max(r) };
        b = if s.is_nan() { f64::NAN } else { b.max(s) };
    }
    Ok((a, b, at))
}

pub fn default_racah() -> Vec<RacahParams> {
    vec![
        RacahParams::new(vec![0.3, 1.7, 2.9], 5).expect("fixed parameters"),
        RacahParams::new(vec![0.3, 1.7, 2.9, 4.3], 5).expect("fixed parameters"),
    ]
}

fn classical_check(ctx: &Context) -> Result<SuiteReport> {
    let smp = &ctx.cfg.samples;
    let mut s = ctx.sampler(8);
    let mut kps: Vec<KrawtchoukParams> = ctx
        .cfg
        .krawtchouk()
        .into_iter()
        .map(|(a, m)| KrawtchoukParams::new(a, m))
        .collect::<Result<_>>()?;
    if kps.is_empty() {
        for nn in 1..=3 {
            for m in [5.0, 8.0] {
                kps.push(KrawtchoukParams::new((0..nn).map(|_| s.uniform(0.05, 0.3)).collect(), m)?);
            }
        }
    }
    let racahs: Vec<RacahParams> = {
        let given = ctx.cfg.racah();
        if given.is_empty() {
            default_racah()
        } else {
            given.into_iter().map(|(z, m)| RacahParams::new(z, m)).collect::<Result<_>>()?
        }
    };
    let mut rep = SuiteReport::new(
        "classical-check",
        json!({
            "krawtchouk": kps.iter().map(|k| json!({ "alphas": k.alphas, "m": k.m })).collect::<Vec<_>>(),
            "racah": racahs.iter().map(|r| json!({ "zeta": r.zeta, "m": r.m })).collect::<Vec<_>>(),
            "max_total": smp.max_total,
            "duality_draws": smp.duality_draws,
            "seed": ctx.seed,
        }),
    );

    let mut primal = Worst::default();
    let mut dual = Worst::default();
    for (set, kp) in kps.iter().enumerate() {
        let top = smp.max_total.min(kp.m.max(0.0) as usize);
        let grid = lattice(kp.n(), top);
        let jobs: Vec<(&Vec<i64>, &Vec<i64>)> = grid.iter().flat_map(|n| grid.iter().map(move |x| (n, x))).collect();
        let out = jobs
            .par_iter()
            .map(|(n, x)| krawtchouk_residuals(n, x, kp).map(|r| (r, *n, *x)))
            .collect::<Result<Vec<_>>>()?;
        for ((a, b, l), n, x) in out {
            primal.update(a, || json!({ "set": set, "l": l, "n": n, "point": x }));
            dual.update(b, || json!({ "set": set, "l": l, "n": n, "point": x }));
        }
    }
    rep.push(primal.below("krawtchouk_difference", ctx.rel(1e-10)));
    rep.push(dual.below("krawtchouk_recurrence", ctx.rel(1e-10)));

    let mx = KrawtchoukParams::meixner(&[0.3, 0.4], 2.5)?;
    let mut meixner = Worst::default();
    for n in lattice(2, 3) {
        for x in lattice(2, 3) {
            let (a, b, l) = krawtchouk_residuals(&n, &x, &mx)?;
            meixner.update(a.max(b), || json!({ "l": l, "n": n, "point": x }));
        }
    }
    rep.push(meixner.below("meixner_bispectral", ctx.rel(1e-10)));

    let mut duality = Worst::default();
    for draw in 0..smp.duality_draws {
        let nn = 1 + draw % 3;
        let kp = KrawtchoukParams::new((0..nn).map(|_| s.uniform(0.05, 0.3)).collect(), 8.0)?;
        let dk = kp.dual()?;
        let n = to_i64(&s.multi_index(nn, 4));
        let x = to_i64(&s.multi_index(nn, 4));
        let v = krawtchouk_khat(&as_u(&n), &as_f(&x), &kp)?;
        let xr: Vec<i64> = x.iter().rev().copied().collect();
        let nr: Vec<i64> = n.iter().rev().copied().collect();
        let w = krawtchouk_khat(&as_u(&xr), &as_f(&nr), &dk)?;
        duality.update((v - w).abs() / v.abs().max(1.0), || json!({ "draw": draw, "n": n, "point": x, "alphas": kp.alphas }));
    }
    rep.push(duality.below("krawtchouk_duality", ctx.rel(1e-10)));

    for (nn, j) in [(2usize, 4.0), (3, 3.0)] {
        let kp = KrawtchoukParams::new((0..nn).map(|_| s.uniform(0.05, 0.3)).collect(), j)?;
        for l in 1..=nn {
            let m = build_onsager_module_q1(l, &kp)?;
            let tag = |name: &str| format!("{name}[N={nn},J={j},l={l}]");
            rep.push(Check::below(tag("dolan_grady"), m.dolan_grady.max(), ctx.rel(1e-9)).with_witness(m.dolan_grady));
            rep.push(Check::below(tag("module_leak"), m.leak, ctx.abs(1e-12)));
            rep.push(Check::below(tag("w1_spectrum"), m.spectrum_residual, ctx.rel(1e-9)));
            rep.push(
                Check::flag(tag("w1_multiplicities"), m.multiplicities == m.expected_multiplicities)
                    .with_witness(json!({ "got": m.multiplicities, "expected": m.expected_multiplicities })),
            );
            let fit = &m.w1_fit;
            let ok = fit.case == SpectrumCase::Racah
                && fit.a.norm() < ctx.rel(1e-8)
                && (fit.b - ONE).norm() < ctx.rel(1e-8)
                && fit.c.norm() < ctx.rel(1e-8);
            rep.push(Check::below(tag("case_ii_fit"), fit.fit_residual, ctx.rel(1e-8)).with_witness(fit));
            rep.push(Check::flag(tag("case_ii_parameters"), ok).with_witness(fit));
        }
    }

    for rp in &racahs {
        for l in 1..=rp.n() {
            let r = racah_gram_and_td_check(rp, l)?;
            let tag = |name: &str| format!("{name}[N={},M={},l={l}]", rp.n(), rp.m);
            rep.push(Check::flag(tag("racah_weight_positive"), r.weight_positive));
            rep.push(Check::below(tag("racah_gram_offdiag"), r.gram_offdiag, ctx.rel(1e-8)));
            rep.push(Check::below(tag("racah_td"), r.td.max(), ctx.rel(1e-8)).with_witness(r.td));
            rep.push(Check::below(tag("racah_block_tridiagonal"), r.block_leak, ctx.rel(1e-8)));
            rep.push(Check::below(tag("racah_spectrum"), r.spectrum_residual, ctx.rel(1e-8)));
        }
    }
    Ok(rep)
}
