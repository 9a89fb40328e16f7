//! The q-Dolan-Grady hierarchy on finite modules: descendants, the
//! conserved charges I_1 and I_3, the Hamiltonian, their spectra and the
//! invariant windows selected by Nepomechie's relations.

use crate::error::{Error, Result};
use crate::gr_poly::{dual_alphas, AlphaParams};
use crate::linalg::{
    check_square_pair, cluster, commutator, eigenspace, eigenvalues, max_abs,
    normalize_first_nonzero, q_commutator, rel_diff, sort_spectrum, spectrum_distance, CMat,
};
use crate::onsager_modules::{
    build_dual_pair, build_w0_blocktri, build_w1_diag, theta, theta_star, GradedBasis, ModuleSpec,
};
use crate::qcore::{qpow, C64, ONE, ZERO};
use crate::qdiff_ops::{recurrence_table, Coefficient, Kind};
use serde::{Deserialize, Serialize};

/// omega_0, omega_1, g_+, g_-.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryParams {
    pub omega0: C64,
    pub omega1: C64,
    pub g_plus: C64,
    pub g_minus: C64,
}

impl BoundaryParams {
    pub fn new(omega0: C64, omega1: C64, g_plus: C64, g_minus: C64) -> Result<Self> {
        let bp = BoundaryParams { omega0, omega1, g_plus, g_minus };
        bp.validate()?;
        Ok(bp)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.omega0, self.omega1, self.g_plus, self.g_minus].iter().all(|v| *v == ZERO) {
            return Err(Error::DegenerateParameter("all boundary parameters vanish".into()));
        }
        Ok(())
    }
}

/// H = h_0 I_1 + h_{-1} I_3 + h'_0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub h0: C64,
    pub h_minus1: C64,
    pub offset: C64,
}

#[derive(Debug, Clone)]
pub struct Descendants {
    pub g1: CMat,
    pub gt1: CMat,
    pub wm1: CMat,
    pub w2: CMat,
    pub g2: CMat,
    pub gt2: CMat,
}

fn lower(w0: &CMat, w1: &CMat, q: C64, rho: C64) -> (CMat, CMat, CMat) {
    let q2 = q * q;
    let g1 = q_commutator(w1, w0, q);
    let w00 = w0 * w0;
    let w11 = w1 * w1;
    let wm1 = (w0 * w1 * w0 * (q2 + ONE / q2) - &w00 * w1 - w1 * &w00) / rho + w1;
    let p = |e: i32| q.powi(e);
    let g2 = (&w00 * &w11 * (p(-3) + p(-1)) - &w11 * &w00 * (p(3) + p(1))
        + (w0 * &w11 * w0 + w1 * &w00 * w1) * (p(-3) - p(3))
        - w0 * w1 * w0 * w1 * (p(-5) + p(-3) + p(-1) * 2.0)
        + w1 * w0 * w1 * w0 * (p(5) + p(3) + p(1) * 2.0)
        + (&w00 + &w11) * (rho * (q - ONE / q)))
        / (rho * (q2 + ONE / q2));
    (g1, wm1, g2)
}

/// G_1, W_{-1}, G_2 and their partners with W_0 and W_1 exchanged.
pub fn build_descendants(w0: &CMat, w1: &CMat, q: C64, rho: C64) -> Result<Descendants> {
    check_square_pair(w0, w1)?;
    if rho == ZERO {
        return Err(Error::ZeroRho);
    }
    let (g1, wm1, g2) = lower(w0, w1, q, rho);
    let (gt1, w2, gt2) = lower(w1, w0, q, rho);
    Ok(Descendants { g1, gt1, wm1, w2, g2, gt2 })
}

/// I_1 = omega_0 W_0 + omega_1 W_1 + g_+ G_1 + g_- G~_1.
pub fn build_i1(w0: &CMat, w1: &CMat, bp: &BoundaryParams, q: C64) -> Result<CMat> {
    check_square_pair(w0, w1)?;
    Ok(w0 * bp.omega0 + w1 * bp.omega1 + q_commutator(w1, w0, q) * bp.g_plus + q_commutator(w0, w1, q) * bp.g_minus)
}

/// I_1 (level 1) or I_3 (level 3).
pub fn build_i(level: u8, w0: &CMat, w1: &CMat, bp: &BoundaryParams, q: C64, rho: C64) -> Result<CMat> {
    match level {
        1 => build_i1(w0, w1, bp, q),
        3 => {
            let d = build_descendants(w0, w1, q, rho)?;
            Ok(&d.wm1 * bp.omega0 + &d.w2 * bp.omega1 + &d.g2 * bp.g_plus + &d.gt2 * bp.g_minus)
        }
        other => Err(Error::DegenerateParameter(format!("hierarchy level {other} not in {{1, 3}}"))),
    }
}

pub fn build_h(i1: &CMat, i3: &CMat, h: &HamiltonianSpec) -> Result<CMat> {
    check_square_pair(i1, i3)?;
    let n = i1.nrows();
    Ok(i1 * h.h0 + i3 * h.h_minus1 + CMat::identity(n, n) * h.offset)
}

fn kappa(q: C64) -> C64 {
    (q * q - ONE / (q * q)) * 0.5
}

/// Factor multiplying b (dir = +1) or c (dir = -1) at source degree `total`
/// in the primal expansion.
pub fn i1_factor(dir: i32, total: usize, al: &AlphaParams, bp: &BoundaryParams) -> C64 {
    let q = al.q;
    let nn = al.n();
    let a = al.a(0) * q / al.a(nn + 1);
    let t = total as i64;
    match dir {
        1 => bp.omega0 + kappa(q) * (bp.g_minus * a * qpow(q, -2 * t - 1) + bp.g_plus / a * qpow(q, 2 * t + 1)),
        -1 => bp.omega0 + kappa(q) * (bp.g_minus / a * qpow(q, 2 * t - 1) + bp.g_plus * a * qpow(q, -2 * t + 1)),
        _ => bp.omega0 + (bp.g_plus + bp.g_minus) * (q - ONE / q) * theta_star(total, al),
    }
}

/// Same for the dual expansion, B = alpha_{N+1} alpha_{N+2}/alpha_1.
pub fn i1_dual_factor(dir: i32, total: usize, al: &AlphaParams, bp: &BoundaryParams) -> C64 {
    let q = al.q;
    let nn = al.n();
    let b = al.a(nn + 1) * al.a(nn + 2) / al.a(1);
    let t = total as i64;
    match dir {
        1 => bp.omega1 + kappa(q) * (bp.g_plus * b * qpow(q, 2 * t + 1) + bp.g_minus / b * qpow(q, -2 * t - 1)),
        -1 => bp.omega1 + kappa(q) * (bp.g_plus / b * qpow(q, -2 * t + 1) + bp.g_minus * b * qpow(q, 2 * t - 1)),
        _ => bp.omega1 + (bp.g_plus + bp.g_minus) * (q - ONE / q) * theta(total, al),
    }
}

fn dir_of(kind: Kind) -> i32 {
    match kind {
        Kind::B => 1,
        Kind::C => -1,
        Kind::A => 0,
    }
}

/// Coefficients of I_1 on the primal basis at source n.
pub fn i1_coefficients(n: &[usize], al: &AlphaParams, bp: &BoundaryParams) -> Result<Vec<Coefficient>> {
    let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
    let total: usize = n.iter().sum();
    let mut t = recurrence_table(al.n(), &ni, al)?;
    for c in t.iter_mut() {
        c.value *= i1_factor(dir_of(c.kind), total, al, bp);
        if c.shift.iter().all(|&s| s == 0) {
            c.value += bp.omega1 * theta_star(total, al);
        }
    }
    Ok(t)
}

/// Coefficients of I_1 on the dual basis at source n~.
pub fn i1_dual_coefficients(nt: &[usize], al: &AlphaParams, bp: &BoundaryParams) -> Result<Vec<Coefficient>> {
    let ni: Vec<i64> = nt.iter().map(|&v| v as i64).collect();
    let total: usize = nt.iter().sum();
    let mut t = recurrence_table(al.n(), &ni, &dual_alphas(al))?;
    for c in t.iter_mut() {
        c.value *= i1_dual_factor(dir_of(c.kind), total, al, bp);
        if c.shift.iter().all(|&s| s == 0) {
            c.value += bp.omega0 * theta(total, al);
        }
    }
    Ok(t)
}

fn assemble(basis: &GradedBasis, coeffs: impl Fn(&[usize]) -> Result<Vec<Coefficient>>) -> Result<CMat> {
    let dim = basis.len();
    let mut m = CMat::zeros(dim, dim);
    for (col, n) in basis.indices.iter().enumerate() {
        for c in coeffs(n)? {
            let t: Vec<i64> = n.iter().zip(&c.shift).map(|(&a, &b)| a as i64 + b).collect();
            if let Some(row) = basis.position_signed(&t) {
                m[(row, col)] += c.value;
            }
        }
    }
    Ok(m)
}

/// I_1 assembled from `i1_coefficients`, entry [m, n] moving n to m.
pub fn i1_from_coefficients(spec: &ModuleSpec, bp: &BoundaryParams) -> Result<CMat> {
    let basis = GradedBasis::new(&spec.twice_spins());
    assemble(&basis, |n| i1_coefficients(n, &spec.alpha, bp))
}

/// The dual-basis matrix of I_1, entry [m~, n~] moving n~ to m~.
pub fn i1_dual_matrix(spec: &ModuleSpec, bp: &BoundaryParams) -> Result<CMat> {
    let mut b = spec.twice_spins();
    b.reverse();
    let basis = GradedBasis::new(&b);
    assemble(&basis, |n| i1_dual_coefficients(n, &spec.alpha, bp))
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub value: C64,
    /// Expansion coefficients, first nonzero entry equal to 1.
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Dense eigendecomposition with eigenvectors normalized at the first
/// nonzero slot; eigenvalues sorted by real then imaginary part.
pub fn solve_finite_spectrum(m: &CMat) -> Result<Vec<EigenPair>> {
    let dim = m.nrows();
    if dim > 512 {
        return Err(Error::EigensolverFailure(format!("dimension {dim} exceeds 512")));
    }
    let mut eigs = eigenvalues(m)?;
    sort_spectrum(&mut eigs);
    let radius = eigs.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let scale = max_abs(m).max(1e-300);
    let mut out = Vec::with_capacity(dim);
    for (lambda, mult) in cluster(&eigs, 1e-9 * radius) {
        for mut v in eigenspace(m, lambda, mult)? {
            normalize_first_nonzero(&mut v, 1e-12);
            let r = (m * &v - &v * lambda).norm() / (v.norm() * scale);
            if !(r < 1e-6) {
                return Err(Error::EigensolverFailure(format!("eigenpair defect {r:.3e} at {lambda}")));
            }
            out.push(EigenPair { value: lambda, vector: v.iter().cloned().collect(), residual: r });
        }
    }
    out.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    Ok(out)
}

/// Largest off-diagonal entry of V^{-1} X V relative to the largest diagonal one.
pub fn diagonalization_leak(eigvecs: &CMat, x: &CMat) -> Result<f64> {
    let inv = eigvecs
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EigensolverFailure("eigenvector matrix singular".into()))?;
    let d = inv * x * eigvecs;
    let n = d.nrows();
    let diag = (0..n).map(|i| d[(i, i)].norm()).fold(0.0, f64::max).max(1e-300);
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(d[(i, j)].norm());
            }
        }
    }
    Ok(off / diag)
}

pub fn eigenvector_matrix(pairs: &[EigenPair]) -> CMat {
    let n = pairs.len();
    CMat::from_fn(n, n, |i, j| pairs[j].vector[i])
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyReport {
    pub dimension: usize,
    /// |[I_1, I_3]| / (|I_1| |I_3|).
    pub commutator: f64,
    pub h_commutator: f64,
    /// Entrywise deviation of I_1 from its coefficient assembly.
    pub two_path: f64,
    pub leak_i3: f64,
    pub leak_h: f64,
    /// Primal against dual I_1 spectrum.
    pub isospectral: f64,
    pub max_eigen_residual: f64,
    pub spectrum: Vec<C64>,
}

/// All hierarchy checks on one module.
pub fn hierarchy_report(spec: &ModuleSpec, bp: &BoundaryParams, h: &HamiltonianSpec) -> Result<HierarchyReport> {
    let q = spec.q;
    let rho = spec.rho();
    let w0 = build_w0_blocktri(spec)?.entries;
    let w1 = build_w1_diag(spec).entries;
    let i1 = build_i(1, &w0, &w1, bp, q, rho)?;
    let i3 = build_i(3, &w0, &w1, bp, q, rho)?;
    let hm = build_h(&i1, &i3, h)?;
    let norm = |a: &CMat, b: &CMat| max_abs(&commutator(a, b)) / (max_abs(a) * max_abs(b)).max(1e-300);
    let pairs = solve_finite_spectrum(&i1)?;
    let v = eigenvector_matrix(&pairs);
    let dual = i1_dual_matrix(spec, bp)?;
    let e1: Vec<C64> = pairs.iter().map(|p| p.value).collect();
    let e2 = eigenvalues(&dual)?;
    let i1c = i1_from_coefficients(spec, bp)?;
    Ok(HierarchyReport {
        dimension: spec.dimension(),
        commutator: norm(&i1, &i3),
        h_commutator: norm(&hm, &i1).max(norm(&hm, &i3)),
        two_path: rel_diff(&i1, &i1c),
        leak_i3: diagonalization_leak(&v, &i3)?,
        leak_h: diagonalization_leak(&v, &hm)?,
        isospectral: spectrum_distance(&e1, &e2),
        max_eigen_residual: pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
        spectrum: e1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MarchResult {
    pub f: Vec<C64>,
    /// Defect of the first equation beyond the cutoff, relative; small when the
    /// sequence terminates there.
    pub closing_defect: f64,
}

/// N = 1 three-term recurrence B_{n-1} f_{n-1} + C_{n+1} f_{n+1} + (A_n - L) f_n = 0
/// with f_{-1} = 0, f_0 = 1, marched up to f_cutoff.
pub fn recurrence_march_n1(lambda: C64, al: &AlphaParams, bp: &BoundaryParams, cutoff: usize) -> Result<MarchResult> {
    if al.n() != 1 {
        return Err(Error::DimensionMismatch(al.n(), 1));
    }
    let coef = |n: usize, kind: Kind| -> Result<C64> {
        Ok(i1_coefficients(&[n], al, bp)?.into_iter().find(|c| c.kind == kind).unwrap().value)
    };
    let mut f = vec![ONE];
    let mut prev = ZERO;
    for n in 0..cutoff {
        let b_prev = if n == 0 { ZERO } else { coef(n - 1, Kind::B)? };
        let a = coef(n, Kind::A)?;
        let c_next = coef(n + 1, Kind::C)?;
        if c_next.norm() < al.policy.degeneracy_threshold {
            return Err(Error::BreakdownAtStep(n));
        }
        let next = -(b_prev * prev + (a - lambda) * f[n]) / c_next;
        prev = f[n];
        f.push(next);
    }
    let n = cutoff;
    let b_prev = if n == 0 { ZERO } else { coef(n - 1, Kind::B)? };
    let a = coef(n, Kind::A)?;
    let d = b_prev * prev + (a - lambda) * f[n];
    let scale = (b_prev.norm() * prev.norm()).max((a - lambda).norm() * f[n].norm()).max(1e-300);
    Ok(MarchResult { f, closing_defect: d.norm() / scale })
}

/// I_1 on the truncated infinite basis {total degree <= p_max} at generic
/// parameters, with the eigenvalue drift to p_max + 2.
#[derive(Debug, Clone, Serialize)]
pub struct GalerkinResult {
    pub p_max: usize,
    pub eigenvalues: Vec<C64>,
    pub drift: f64,
}

fn simplex_basis(n: usize, p_max: usize) -> GradedBasis {
    GradedBasis::new(&vec![p_max; n]).restrict_total(p_max)
}

fn galerkin_matrix(al: &AlphaParams, bp: &BoundaryParams, p_max: usize) -> Result<CMat> {
    let basis = simplex_basis(al.n(), p_max);
    assemble(&basis, |n| i1_coefficients(n, al, bp))
}

pub fn galerkin_spectrum(al: &AlphaParams, bp: &BoundaryParams, p_max: usize) -> Result<GalerkinResult> {
    let mut e = eigenvalues(&galerkin_matrix(al, bp, p_max)?)?;
    let e2 = eigenvalues(&galerkin_matrix(al, bp, p_max + 2)?)?;
    e.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let keep = (e.len() / 2).max(1);
    let scale = e.iter().map(|v| v.norm()).fold(1e-300, f64::max);
    let drift = e[..keep]
        .iter()
        .map(|x| e2.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
        / scale;
    sort_spectrum(&mut e);
    Ok(GalerkinResult { p_max, eigenvalues: e, drift })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowSide {
    /// Primal degrees <= P.
    WPlus,
    /// Dual degrees <= P*.
    WMinus,
    /// Primal degrees >= P + 1.
    WPlusBar,
    /// Dual degrees >= P* + 1.
    WMinusBar,
}

impl WindowSide {
    pub const ALL: [WindowSide; 4] = [WindowSide::WPlus, WindowSide::WMinus, WindowSide::WPlusBar, WindowSide::WMinusBar];

    pub fn is_dual(self) -> bool {
        matches!(self, WindowSide::WMinus | WindowSide::WMinusBar)
    }

    pub fn label(self) -> &'static str {
        match self {
            WindowSide::WPlus => "W+",
            WindowSide::WMinus => "W-",
            WindowSide::WPlusBar => "W+bar",
            WindowSide::WMinusBar => "W-bar",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvariantWindow {
    pub side: WindowSide,
    pub cutoff: usize,
}

/// Value of the scalar relation for the window; zero when it holds.
pub fn nepomechie_relation(w: InvariantWindow, al: &AlphaParams, bp: &BoundaryParams) -> C64 {
    match w.side {
        WindowSide::WPlus => i1_factor(1, w.cutoff, al, bp),
        WindowSide::WPlusBar => i1_factor(-1, w.cutoff + 1, al, bp),
        WindowSide::WMinus => i1_dual_factor(1, w.cutoff, al, bp),
        WindowSide::WMinusBar => i1_dual_factor(-1, w.cutoff + 1, al, bp),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NepomechieCheck {
    pub holds: bool,
    pub defect: f64,
}

pub fn nepomechie_check(w: InvariantWindow, al: &AlphaParams, bp: &BoundaryParams) -> NepomechieCheck {
    let d = nepomechie_relation(w, al, bp).norm();
    NepomechieCheck { holds: d < al.policy.abs_tol, defect: d }
}

/// Solve the relation for omega_0 (primal sides) or omega_1 (dual sides).
pub fn solve_nepomechie(w: InvariantWindow, al: &AlphaParams, bp: &BoundaryParams) -> BoundaryParams {
    let mut out = *bp;
    if w.side.is_dual() {
        out.omega1 = ZERO;
        out.omega1 = -nepomechie_relation(w, al, &out);
    } else {
        out.omega0 = ZERO;
        out.omega0 = -nepomechie_relation(w, al, &out);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub side: WindowSide,
    pub cutoff: usize,
    pub relation: f64,
    /// Largest entry of I_1 leading out of the window.
    pub coupling: f64,
    /// Largest component outside the window of eigenvectors whose eigenvalue
    /// belongs to the window block, relative to the largest component.
    pub outside_support: f64,
}

/// Build I_1 in the basis matching the window and measure its invariance.
pub fn window_report(spec: &ModuleSpec, w: InvariantWindow, bp: &BoundaryParams) -> Result<WindowReport> {
    let (m, basis) = if w.side.is_dual() {
        let mut b = spec.twice_spins();
        b.reverse();
        (i1_dual_matrix(spec, bp)?, GradedBasis::new(&b))
    } else {
        let w0 = build_w0_blocktri(spec)?.entries;
        let w1 = build_w1_diag(spec).entries;
        (build_i1(&w0, &w1, bp, spec.q)?, GradedBasis::new(&spec.twice_spins()))
    };
    let lower_window = matches!(w.side, WindowSide::WPlus | WindowSide::WMinus);
    let inside = |i: usize| (basis.grade(i) <= w.cutoff) == lower_window;
    let dim = m.nrows();
    let mut coupling: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            if inside(c) && !inside(r) {
                coupling = coupling.max(m[(r, c)].norm());
            }
        }
    }
    let idx: Vec<usize> = (0..dim).filter(|&i| inside(i)).collect();
    let block = CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
    let mut outside: f64 = 0.0;
    if !idx.is_empty() {
        let radius = max_abs(&m).max(1e-300);
        for (lambda, mult) in cluster(&eigenvalues(&block)?, 1e-9 * radius) {
            for v in eigenspace(&m, lambda, mult)? {
                let big = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
                let out = (0..dim).filter(|&i| !inside(i)).map(|i| v[i].norm()).fold(0.0, f64::max);
                outside = outside.max(out / big);
            }
        }
    }
    Ok(WindowReport {
        side: w.side,
        cutoff: w.cutoff,
        relation: nepomechie_relation(w, &spec.alpha, bp).norm(),
        coupling,
        outside_support: outside,
    })
}

/// Primal and dual module matrices for the hierarchy, W_0 and W_1 in the dual basis.
pub fn dual_generators(spec: &ModuleSpec) -> Result<(CMat, CMat)> {
    let (v0, v1) = build_dual_pair(spec)?;
    Ok((v0.entries, v1.entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::c;
    use crate::sample::Sampler;

    fn spec(js: &[f64]) -> ModuleSpec {
        ModuleSpec::new(js.to_vec(), C64::new(0.3, 0.2), C64::new(0.7, -0.1), c(0.7)).unwrap()
    }

    fn random_bp(s: &mut Sampler) -> BoundaryParams {
        BoundaryParams::new(s.complex(1.0), s.complex(1.0), s.complex(1.0), s.complex(1.0)).unwrap()
    }

    fn gens(sp: &ModuleSpec) -> (CMat, CMat) {
        (build_w0_blocktri(sp).unwrap().entries, build_w1_diag(sp).entries)
    }

    #[test]
    fn equal_generators() {
        let sp = spec(&[1.0]);
        let (w0, _) = gens(&sp);
        let q = sp.q;
        let d = build_descendants(&w0, &w0, q, sp.rho()).unwrap();
        assert!(rel_diff(&d.g1, &(&w0 * &w0 * (q - ONE / q))) < 1e-14);
        assert!(matches!(build_descendants(&w0, &w0, q, ZERO), Err(Error::ZeroRho)));
    }

    #[test]
    fn swap_symmetry_and_band() {
        let sp = spec(&[1.0, 0.5]);
        let (w0, w1) = gens(&sp);
        let d = build_descendants(&w0, &w1, sp.q, sp.rho()).unwrap();
        let e = build_descendants(&w1, &w0, sp.q, sp.rho()).unwrap();
        assert!(rel_diff(&d.gt1, &e.g1) < 1e-14);
        let basis = GradedBasis::new(&sp.twice_spins());
        let scale = max_abs(&d.wm1);
        assert!(crate::onsager_modules::grade_leak(&d.wm1, &basis, 1) < 1e-10 * scale);
    }

    #[test]
    fn charges_commute() {
        let mut s = Sampler::new(4);
        for js in [vec![1.0], vec![0.5, 0.5], vec![1.0, 0.5]] {
            let sp = spec(&js);
            let bp = random_bp(&mut s);
            let h = HamiltonianSpec { h0: s.complex(1.0), h_minus1: s.complex(1.0), offset: s.complex(1.0) };
            let r = hierarchy_report(&sp, &bp, &h).unwrap();
            assert!(r.commutator < 1e-8, "{js:?} {r:?}");
            assert!(r.h_commutator < 1e-8);
            assert!(r.two_path < 1e-10);
            assert!(r.leak_i3 < 1e-7 && r.leak_h < 1e-7, "{r:?}");
            assert!(r.isospectral < 1e-8, "{r:?}");
            assert!(r.max_eigen_residual < 1e-9);
        }
    }

    #[test]
    fn trivial_boundary() {
        let sp = spec(&[1.0]);
        let (w0, w1) = gens(&sp);
        let bp = BoundaryParams::new(ONE, ZERO, ZERO, ZERO).unwrap();
        assert_eq!(build_i1(&w0, &w1, &bp, sp.q).unwrap(), w0);
        let c = i1_coefficients(&[1], &sp.alpha, &bp).unwrap();
        let ni = [1i64];
        let raw = recurrence_table(1, &ni, &sp.alpha).unwrap();
        for (x, y) in c.iter().zip(&raw) {
            assert_eq!(x.value, y.value);
        }
        assert!(BoundaryParams::new(ZERO, ZERO, ZERO, ZERO).is_err());
        let h = HamiltonianSpec { h0: c_(2.0), h_minus1: ZERO, offset: ZERO };
        assert_eq!(build_h(&w0, &w1, &h).unwrap(), &w0 * c_(2.0));
    }

    fn c_(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn dual_matrix_without_g() {
        let sp = spec(&[1.0, 0.5]);
        let bp = BoundaryParams::new(ZERO, ONE, ZERO, ZERO).unwrap();
        let (_, v1) = dual_generators(&sp).unwrap();
        let m = i1_dual_matrix(&sp, &bp).unwrap();
        assert!(rel_diff(&m, &v1.transpose()) < 1e-13);
    }

    #[test]
    fn spectrum_solver() {
        let d = crate::linalg::diag(&[c_(3.0), c_(1.0), c_(2.0)]);
        let p = solve_finite_spectrum(&d).unwrap();
        let v: Vec<f64> = p.iter().map(|x| x.value.re).collect();
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
        assert_eq!(p[0].vector, vec![ZERO, ONE, ZERO]);
    }

    #[test]
    fn march_matches_eigenvector() {
        let mut s = Sampler::new(5);
        let sp = spec(&[1.5]);
        let bp = random_bp(&mut s);
        let m = i1_from_coefficients(&sp, &bp).unwrap();
        let a0 = i1_coefficients(&[0], &sp.alpha, &bp).unwrap().into_iter().find(|c| c.kind == Kind::A).unwrap().value;
        let r = recurrence_march_n1(a0, &sp.alpha, &bp, 1).unwrap();
        assert!(r.f[1].norm() < 1e-15);
        for p in solve_finite_spectrum(&m).unwrap() {
            let r = recurrence_march_n1(p.value, &sp.alpha, &bp, 3).unwrap();
            let scale = p.vector.iter().map(|x| x.norm()).fold(0.0, f64::max);
            for n in 0..4 {
                assert!((r.f[n] - p.vector[n]).norm() < 1e-7 * scale, "n = {n}");
            }
            assert!(r.closing_defect < 1e-8);
        }
        let r = recurrence_march_n1(C64::new(0.123, 0.456), &sp.alpha, &bp, 3).unwrap();
        assert!(r.closing_defect > 1e-6);
    }

    #[test]
    fn galerkin_runs() {
        let mut s = Sampler::new(6);
        let al = s.alphas(2, c(0.5));
        let bp = random_bp(&mut s);
        let g = galerkin_spectrum(&al, &bp, 3).unwrap();
        assert_eq!(g.eigenvalues.len(), 10);
        assert!(g.drift.is_finite());
    }

    #[test]
    fn windows() {
        let mut s = Sampler::new(7);
        let sp = spec(&[1.0, 0.5]);
        for side in WindowSide::ALL {
            for cutoff in 0..sp.diameter() {
                let w = InvariantWindow { side, cutoff };
                let bp = solve_nepomechie(w, &sp.alpha, &random_bp(&mut s));
                assert!(nepomechie_check(w, &sp.alpha, &bp).holds);
                let r = window_report(&sp, w, &bp).unwrap();
                assert!(r.coupling < 1e-10, "{r:?}");
                assert!(r.outside_support < 1e-8, "{r:?}");
            }
        }
        let bp = BoundaryParams::new(ONE, ONE, ZERO, ZERO).unwrap();
        let w = InvariantWindow { side: WindowSide::WPlus, cutoff: 1 };
        assert!(!nepomechie_check(w, &sp.alpha, &bp).holds);
        assert!(window_report(&sp, w, &bp).unwrap().coupling > 1e-3);
    }
}
