//! Finite-dimensional q-Onsager modules: parameters from spins, graded
//! bases, the generator matrices in both eigenbases, overlaps, and the
//! relation, tridiagonal-pair and spectrum checks.

use crate::error::{Error, Result};
use crate::gr_poly::{dual_alphas, restricted_qtilde, AlphaParams};
use crate::linalg::{
    check_square_pair, cluster, commutator, eigenvalues, lagrange_projector, max_abs,
    minimal_polynomial_defect, q_commutator, CMat,
};
use crate::qcore::{qpow, NumericPolicy, C64, ONE};
use crate::qdiff_ops::{recurrence_table, Coefficient};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpinFamily {
    N1,
    N2,
    SpinHalf,
    Generic,
}

/// Spins j_1..j_N with the scalars beta, beta* and the derived parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ModuleSpec {
    pub spins: Vec<f64>,
    pub beta: C64,
    pub beta_star: C64,
    pub q: C64,
    pub alpha: AlphaParams,
}

/// 2j as an integer, rejecting anything that is not a nonnegative half-integer.
pub fn twice_spin(j: f64) -> Result<usize> {
    let t = 2.0 * j;
    if !(t >= 0.0) || (t - t.round()).abs() > 1e-12 {
        return Err(Error::InvalidSpins(format!("j = {j} is not a nonnegative half-integer")));
    }
    Ok(t.round() as usize)
}

/// alpha_0 = q^(beta*-beta-1), alpha_1 = q^(-beta), alpha_{k+1} = q^(-2(j_1+..+j_k)-beta),
/// alpha_{N+2} = q^(-beta).
pub fn alpha_from_spins(
    spins: &[f64],
    beta: C64,
    beta_star: C64,
    q: C64,
    family: SpinFamily,
) -> Result<AlphaParams> {
    let nn = spins.len();
    match family {
        SpinFamily::N1 if nn != 1 => return Err(Error::InvalidSpins(format!("family N1 with {nn} spins"))),
        SpinFamily::N2 if nn != 2 => return Err(Error::InvalidSpins(format!("family N2 with {nn} spins"))),
        SpinFamily::SpinHalf if spins.iter().any(|&j| j != 0.5) => {
            return Err(Error::InvalidSpins("spin-half family needs every j = 1/2".into()))
        }
        _ => {}
    }
    if nn == 0 {
        return Err(Error::InvalidSpins("need at least one spin".into()));
    }
    let mut al = vec![q.powc(beta_star - beta - 1.0), q.powc(-beta)];
    let mut s = 0usize;
    for &j in spins {
        s += twice_spin(j)?;
        al.push(q.powc(-beta - s as f64));
    }
    al.push(q.powc(-beta));
    AlphaParams::new(al, q)
}

/// Check alpha_{k+1}/alpha_k = q^(-2 j_k).
pub fn check_spin_ratios(spins: &[f64], al: &AlphaParams, tol: f64) -> Result<()> {
    if spins.len() != al.n() {
        return Err(Error::DimensionMismatch(spins.len(), al.n()));
    }
    for (k0, &j) in spins.iter().enumerate() {
        let k = k0 + 1;
        let want = qpow(al.q, -(twice_spin(j)? as i64));
        let got = al.a(k + 1) / al.a(k);
        if (got - want).norm() > tol * want.norm() {
            return Err(Error::InvalidSpins(format!(
                "alpha_{}/alpha_{k} = {got}, expected q^(-2j_{k}) = {want}",
                k + 1
            )));
        }
    }
    Ok(())
}

impl ModuleSpec {
    pub fn new(spins: Vec<f64>, beta: C64, beta_star: C64, q: C64) -> Result<Self> {
        Self::with_policy(spins, beta, beta_star, q, NumericPolicy::default())
    }

    pub fn with_policy(
        spins: Vec<f64>,
        beta: C64,
        beta_star: C64,
        q: C64,
        policy: NumericPolicy,
    ) -> Result<Self> {
        let mut alpha = alpha_from_spins(&spins, beta, beta_star, q, SpinFamily::Generic)?;
        alpha.policy = policy;
        Ok(ModuleSpec { spins, beta, beta_star, q, alpha })
    }

    /// User-supplied alphas; they must satisfy the spin ratios.
    pub fn from_alphas(spins: Vec<f64>, alpha: AlphaParams) -> Result<Self> {
        check_spin_ratios(&spins, &alpha, 1e-10)?;
        let q = alpha.q;
        let lq = q.ln();
        let beta = -alpha.a(1).ln() / lq;
        let beta_star = (alpha.a(0) * q).ln() / lq + beta;
        Ok(ModuleSpec { spins, beta, beta_star, q, alpha })
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn twice_spins(&self) -> Vec<usize> {
        self.spins.iter().map(|&j| twice_spin(j).unwrap()).collect()
    }

    /// d_N = 2(j_1 + .. + j_N).
    pub fn diameter(&self) -> usize {
        self.twice_spins().iter().sum()
    }

    pub fn dimension(&self) -> usize {
        self.twice_spins().iter().map(|t| t + 1).product()
    }

    pub fn rho(&self) -> C64 {
        module_rho(self.q)
    }
}

/// rho = -(q^2 - q^-2)^2 / 4.
pub fn module_rho(q: C64) -> C64 {
    let d = q * q - (q * q).inv();
    -d * d / 4.0
}

/// Multi-indices of a box ordered by total degree, then lexicographically.
#[derive(Debug, Clone, Serialize)]
pub struct GradedBasis {
    pub bounds: Vec<usize>,
    pub indices: Vec<Vec<usize>>,
    /// grade_starts[p] is the position of the first index of total degree p;
    /// the last entry is the dimension.
    pub grade_starts: Vec<usize>,
    #[serde(skip)]
    lookup: HashMap<Vec<usize>, usize>,
}

impl GradedBasis {
    pub fn new(bounds: &[usize]) -> Self {
        let mut indices: Vec<Vec<usize>> = vec![vec![]];
        for &b in bounds {
            indices = indices
                .into_iter()
                .flat_map(|v| {
                    (0..=b).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        indices.sort_by(|a, b| {
            let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
            sa.cmp(&sb).then(a.cmp(b))
        });
        let top: usize = bounds.iter().sum();
        let mut grade_starts = vec![0; top + 2];
        let mut p = 0;
        for (i, n) in indices.iter().enumerate() {
            let g: usize = n.iter().sum();
            while p < g {
                p += 1;
                grade_starts[p] = i;
            }
        }
        while p <= top {
            p += 1;
            grade_starts[p] = indices.len();
        }
        let lookup = indices.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        GradedBasis { bounds: bounds.to_vec(), indices, grade_starts, lookup }
    }

    /// Keep the indices of total degree <= max_total.
    pub fn restrict_total(&self, max_total: usize) -> Self {
        let indices: Vec<Vec<usize>> =
            self.indices.iter().filter(|n| n.iter().sum::<usize>() <= max_total).cloned().collect();
        let grade_starts = self.grade_starts[..=max_total.min(self.grades() - 1) + 1].to_vec();
        let lookup = indices.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        GradedBasis { bounds: self.bounds.clone(), indices, grade_starts, lookup }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, n: &[usize]) -> Option<usize> {
        self.lookup.get(n).copied()
    }

    pub fn position_signed(&self, n: &[i64]) -> Option<usize> {
        if n.iter().any(|&v| v < 0) {
            return None;
        }
        let u: Vec<usize> = n.iter().map(|&v| v as usize).collect();
        self.position(&u)
    }

    pub fn grade(&self, i: usize) -> usize {
        self.indices[i].iter().sum()
    }

    pub fn grades(&self) -> usize {
        self.grade_starts.len() - 1
    }

    pub fn grade_size(&self, p: usize) -> usize {
        self.grade_starts[p + 1] - self.grade_starts[p]
    }
}

/// A dense matrix on a graded basis with its declared grade bandwidth.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: CMat,
    pub basis: GradedBasis,
    pub bandwidth: usize,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Largest entry coupling grades further apart than the bandwidth.
    pub fn out_of_band(&self) -> f64 {
        grade_leak(&self.entries, &self.basis, self.bandwidth)
    }
}

pub fn grade_leak(m: &CMat, basis: &GradedBasis, bandwidth: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if basis.grade(i).abs_diff(basis.grade(j)) > bandwidth {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// theta*_n = (alpha_0 q q^{-2N}/alpha_{N+1} + alpha_{N+1} q^{2N}/(alpha_0 q))/2.
pub fn theta_star(total: usize, al: &AlphaParams) -> C64 {
    let nn = al.n();
    let a = al.a(0) * al.q / al.a(nn + 1);
    let p = qpow(al.q, 2 * total as i64);
    (a / p + p / a) * 0.5
}

/// theta_n~ = (B^{-1} q^{-2N~} + B q^{2N~})/2 with B = alpha_{N+1} alpha_{N+2}/alpha_1.
pub fn theta(total: usize, al: &AlphaParams) -> C64 {
    let nn = al.n();
    let b = al.a(nn + 1) * al.a(nn + 2) / al.a(1);
    let p = qpow(al.q, 2 * total as i64);
    (ONE / (b * p) + b * p) * 0.5
}

fn assemble(basis: &GradedBasis, al: &AlphaParams) -> Result<(CMat, f64)> {
    let nn = al.n();
    let dim = basis.len();
    let mut w = CMat::zeros(dim, dim);
    let mut leak: f64 = 0.0;
    for (col, n) in basis.indices.iter().enumerate() {
        let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
        for c in recurrence_table(nn, &ni, al)? {
            let m: Vec<i64> = ni.iter().zip(&c.shift).map(|(a, b)| a + b).collect();
            match basis.position_signed(&m) {
                Some(row) => w[(row, col)] += c.value,
                None => leak = leak.max(c.value.norm()),
            }
        }
    }
    Ok((w, leak))
}

pub fn primal_basis(spec: &ModuleSpec) -> GradedBasis {
    GradedBasis::new(&spec.twice_spins())
}

/// Dual box: n~_m <= 2 j_{N+1-m}.
pub fn dual_basis(spec: &ModuleSpec) -> GradedBasis {
    let mut b = spec.twice_spins();
    b.reverse();
    GradedBasis::new(&b)
}

pub fn build_w1_diag(spec: &ModuleSpec) -> OperatorMatrix {
    let basis = primal_basis(spec);
    let d: Vec<C64> = (0..basis.len()).map(|i| theta_star(basis.grade(i), &spec.alpha)).collect();
    OperatorMatrix { entries: crate::linalg::diag(&d), basis, bandwidth: 0 }
}

/// W_0 on the primal basis: entry [m, n] is the coefficient moving n to m.
pub fn build_w0_blocktri(spec: &ModuleSpec) -> Result<OperatorMatrix> {
    let basis = primal_basis(spec);
    let (w, _) = assemble(&basis, &spec.alpha)?;
    Ok(OperatorMatrix { entries: w, basis, bandwidth: 1 })
}

/// Largest coefficient that would move a primal basis vector out of the box.
pub fn truncation_leak(spec: &ModuleSpec) -> Result<f64> {
    Ok(assemble(&primal_basis(spec), &spec.alpha)?.1)
}

/// Same for the dual basis.
pub fn dual_truncation_leak(spec: &ModuleSpec) -> Result<f64> {
    Ok(assemble(&dual_basis(spec), &dual_alphas(&spec.alpha))?.1)
}

/// (W_0, W_1) on the dual eigenbasis: W_0 diagonal with theta, W_1 the
/// transpose of the substituted recurrence matrix.
pub fn build_dual_pair(spec: &ModuleSpec) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let basis = dual_basis(spec);
    let (v1, _) = assemble(&basis, &dual_alphas(&spec.alpha))?;
    let d: Vec<C64> = (0..basis.len()).map(|i| theta(basis.grade(i), &spec.alpha)).collect();
    Ok((
        OperatorMatrix { entries: crate::linalg::diag(&d), basis: basis.clone(), bandwidth: 0 },
        OperatorMatrix { entries: v1.transpose(), basis, bandwidth: 1 },
    ))
}

/// S[n~, n] = Q-tilde(n, n~).
pub fn overlap_matrix(spec: &ModuleSpec) -> Result<CMat> {
    let pb = primal_basis(spec);
    let db = dual_basis(spec);
    let mut s = CMat::zeros(db.len(), pb.len());
    for (r, nt) in db.indices.iter().enumerate() {
        for (c, n) in pb.indices.iter().enumerate() {
            s[(r, c)] = restricted_qtilde(n, nt, &spec.alpha)?;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct IntertwiningReport {
    /// |S W_0 - W_0~ S| relative.
    pub w0: f64,
    /// |S W_1 - W_1~ S| relative.
    pub w1: f64,
    pub condition_number: f64,
}

pub fn verify_overlap(spec: &ModuleSpec) -> Result<IntertwiningReport> {
    let s = overlap_matrix(spec)?;
    let w0 = build_w0_blocktri(spec)?.entries;
    let w1 = build_w1_diag(spec).entries;
    let (v0, v1) = build_dual_pair(spec)?;
    let rel = |a: CMat, b: CMat| max_abs(&(&a - &b)) / (max_abs(&a).max(max_abs(&b)));
    Ok(IntertwiningReport {
        w0: rel(&s * &w0, &v0.entries * &s),
        w1: rel(&s * &w1, &v1.entries * &s),
        condition_number: crate::linalg::condition_number(&s),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QdgResidual {
    /// Relation cubic in A.
    pub forward: f64,
    /// Relation cubic in A*.
    pub backward: f64,
}

impl QdgResidual {
    pub fn max(&self) -> f64 {
        self.forward.max(self.backward)
    }
}

fn qdg_one(a: &CMat, b: &CMat, q: C64, rho: C64) -> f64 {
    let x = q_commutator(a, &q_commutator(a, b, q), q.inv());
    let l = commutator(a, &x) - commutator(a, b) * rho;
    let scale = max_abs(a).powi(3) * max_abs(b);
    if scale == 0.0 {
        0.0
    } else {
        max_abs(&l) / scale
    }
}

/// Relative residuals of [A,[A,[A,A*]_q]_{q^-1}] = rho [A,A*] and its partner.
pub fn verify_qdg(a: &CMat, a_star: &CMat, q: C64, rho: C64) -> Result<QdgResidual> {
    check_square_pair(a, a_star)?;
    Ok(QdgResidual { forward: qdg_one(a, a_star, q, rho), backward: qdg_one(a_star, a, q, rho) })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TdOptions {
    /// Eigenvalue clustering tolerance relative to the spectral radius.
    pub cluster_rel: f64,
    /// Blocks below this fraction of max|A| count as zero.
    pub zero_rel: f64,
    /// Largest admissible defect of prod (A - theta_p).
    pub diag_tol: f64,
}

impl Default for TdOptions {
    fn default() -> Self {
        TdOptions { cluster_rel: 1e-7, zero_rel: 1e-8, diag_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenOrdering {
    pub eigenvalues: Vec<C64>,
    pub multiplicities: Vec<usize>,
    /// Largest block coupling eigenspaces further than one step apart in the ordering.
    pub off_band: f64,
    /// Some ordering puts every coupling on the first off-diagonal.
    pub is_path: bool,
    pub connected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TdReport {
    pub a: EigenOrdering,
    pub a_star: EigenOrdering,
    pub d: usize,
    pub delta: usize,
    pub passed: bool,
    pub irreducibility: &'static str,
}

fn ordering(a: &CMat, other: &CMat, opt: &TdOptions) -> Result<EigenOrdering> {
    let eigs = eigenvalues(a)?;
    let radius = eigs.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let cl = cluster(&eigs, opt.cluster_rel * radius);
    let th: Vec<C64> = cl.iter().map(|c| c.0).collect();
    let defect = minimal_polynomial_defect(a, &th);
    if defect > opt.diag_tol {
        return Err(Error::NotDiagonalizable(defect));
    }
    let np = th.len();
    let proj: Vec<CMat> = (0..np).map(|p| lagrange_projector(a, &th, p)).collect();
    let scale = max_abs(other).max(1e-300);
    let mut w = DMatrix::<f64>::zeros(np, np);
    for p in 0..np {
        let left = &proj[p] * other;
        for r in 0..np {
            if p != r {
                w[(p, r)] = max_abs(&(&left * &proj[r])) / scale;
            }
        }
    }
    let adj = |p: usize, r: usize| w[(p, r)].max(w[(r, p)]) > opt.zero_rel;
    // Walk each component from an endpoint; a component without one is a cycle.
    let deg: Vec<usize> = (0..np).map(|p| (0..np).filter(|&r| r != p && adj(p, r)).count()).collect();
    let mut order: Vec<usize> = Vec::with_capacity(np);
    let mut is_path = deg.iter().all(|&d| d <= 2);
    let mut components = 0;
    while order.len() < np {
        let start = match (0..np).find(|&p| !order.contains(&p) && deg[p] <= 1) {
            Some(p) => p,
            None => {
                is_path = false;
                (0..np).find(|p| !order.contains(p)).unwrap()
            }
        };
        components += 1;
        order.push(start);
        let mut last = start;
        while let Some(r) = (0..np).find(|&r| !order.contains(&r) && adj(last, r)) {
            order.push(r);
            last = r;
        }
    }
    let mut off_band: f64 = 0.0;
    for i in 0..np {
        for j in 0..np {
            if i.abs_diff(j) > 1 {
                off_band = off_band.max(w[(order[i], order[j])]);
            }
        }
    }
    Ok(EigenOrdering {
        eigenvalues: order.iter().map(|&p| th[p]).collect(),
        multiplicities: order.iter().map(|&p| cl[p].1).collect(),
        off_band,
        is_path,
        connected: components == 1,
    })
}

/// Conditions (i)-(iii) of a tridiagonal pair; irreducibility is not checked.
pub fn verify_td_pair(a: &CMat, a_star: &CMat, opt: &TdOptions) -> Result<TdReport> {
    check_square_pair(a, a_star)?;
    let oa = ordering(a, a_star, opt)?;
    let ob = ordering(a_star, a, opt)?;
    let d = oa.eigenvalues.len() - 1;
    let delta = ob.eigenvalues.len() - 1;
    let passed = oa.is_path && ob.is_path && d == delta;
    Ok(TdReport { a: oa, a_star: ob, d, delta, passed, irreducibility: "not checked" })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectrumCase {
    /// a + b q^{2p-d} + c q^{d-2p}
    QRacah,
    /// a + b p + c p(p-1)/2
    Racah,
    /// a + b (-1)^p + c p (-1)^p
    BannaiIto,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumFit {
    pub case: SpectrumCase,
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub fit_residual: f64,
}

fn fit_case(eigs: &[C64], q: C64, case: SpectrumCase) -> SpectrumFit {
    let d = eigs.len() as i64 - 1;
    let basis = |p: i64| -> [C64; 3] {
        let sgn = if p % 2 == 0 { 1.0 } else { -1.0 };
        match case {
            SpectrumCase::QRacah => [ONE, qpow(q, 2 * p - d), qpow(q, d - 2 * p)],
            SpectrumCase::Racah => [ONE, C64::new(p as f64, 0.0), C64::new((p * (p - 1)) as f64 / 2.0, 0.0)],
            SpectrumCase::BannaiIto => [ONE, C64::new(sgn, 0.0), C64::new(sgn * p as f64, 0.0)],
        }
    };
    let m = DMatrix::from_fn(eigs.len(), 3, |p, j| basis(p as i64)[j]);
    let rhs = DVector::from_column_slice(eigs);
    let svd = m.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(3));
    let fitted = &m * &sol;
    let scale = eigs.iter().map(|v| v.norm()).fold(1e-300, f64::max);
    let res = (0..eigs.len()).map(|i| (fitted[i] - eigs[i]).norm()).fold(0.0, f64::max) / scale;
    SpectrumFit { case, a: sol[0], b: sol[1], c: sol[2], fit_residual: res }
}

/// Least-squares fit of an ordered eigenvalue sequence to the three cases.
/// The unique case fitting within `tol` wins; two fitting cases are ambiguous;
/// with no fit the smallest residual is returned.
pub fn classify_spectrum(eigs: &[C64], q: C64, tol: f64) -> Result<SpectrumFit> {
    if eigs.len() < 4 {
        return Err(Error::AmbiguousFit(format!("{} eigenvalues cannot separate the cases", eigs.len())));
    }
    let fits: Vec<SpectrumFit> = [SpectrumCase::QRacah, SpectrumCase::Racah, SpectrumCase::BannaiIto]
        .into_iter()
        .map(|c| fit_case(eigs, q, c))
        .collect();
    let good: Vec<&SpectrumFit> = fits.iter().filter(|f| f.fit_residual < tol).collect();
    match good.len() {
        0 => Ok(fits.into_iter().min_by(|a, b| a.fit_residual.total_cmp(&b.fit_residual)).unwrap()),
        1 => Ok(good[0].clone()),
        _ => Err(Error::AmbiguousFit(
            good.iter().map(|f| format!("{:?} ({:.1e})", f.case, f.fit_residual)).collect::<Vec<_>>().join(", "),
        )),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TdParams {
    pub beta: C64,
    pub gamma: C64,
    pub gamma_star: C64,
    pub rho: C64,
    pub rho_star: C64,
}

fn reduce_scales(p: &TdParams, target_rho: C64) -> Result<(C64, C64)> {
    let two = C64::new(2.0, 0.0);
    if (p.beta - two).norm() < 1e-14 {
        return Err(Error::NotReducible("beta = 2".into()));
    }
    let n = p.rho + p.gamma * p.gamma / (two - p.beta);
    let ns = p.rho_star + p.gamma_star * p.gamma_star / (two - p.beta);
    if n.norm() < 1e-14 || ns.norm() < 1e-14 {
        return Err(Error::NotReducible("vanishing normalizer".into()));
    }
    let r = target_rho.sqrt();
    Ok((r / n.sqrt(), r / ns.sqrt()))
}

/// Map a tridiagonal pair with parameters (beta, gamma, gamma*, rho~, rho~*)
/// onto one obeying the q-Dolan-Grady relations with `target_rho`.
pub fn reduce_sequence(at: &CMat, ats: &CMat, p: &TdParams, target_rho: C64) -> Result<(CMat, CMat)> {
    check_square_pair(at, ats)?;
    let (s, ss) = reduce_scales(p, target_rho)?;
    let n = at.nrows();
    let id = CMat::identity(n, n);
    let shift = p.gamma / (p.beta - 2.0);
    let shift_s = p.gamma_star / (p.beta - 2.0);
    Ok(((at + &id * shift) * s, (ats + &id * shift_s) * ss))
}

/// Inverse of `reduce_sequence`.
pub fn unreduce_sequence(a: &CMat, a_star: &CMat, p: &TdParams, target_rho: C64) -> Result<(CMat, CMat)> {
    check_square_pair(a, a_star)?;
    let (s, ss) = reduce_scales(p, target_rho)?;
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let shift = p.gamma / (p.beta - 2.0);
    let shift_s = p.gamma_star / (p.beta - 2.0);
    Ok((a / s - &id * shift, a_star / ss - &id * shift_s))
}

/// Residual of the general tridiagonal relations
/// [A, A^2 A* - beta A A* A + A* A^2 - gamma(A A* + A* A) - rho A*] = 0 and partner.
pub fn verify_td_relations(a: &CMat, a_star: &CMat, p: &TdParams) -> Result<QdgResidual> {
    check_square_pair(a, a_star)?;
    let one = |a: &CMat, b: &CMat, g: C64, r: C64| {
        let x = a * a * b - a * b * a * p.beta + b * a * a - (a * b + b * a) * g - b * r;
        let scale = max_abs(a).powi(3) * max_abs(b);
        if scale == 0.0 {
            0.0
        } else {
            max_abs(&commutator(a, &x)) / scale
        }
    };
    Ok(QdgResidual {
        forward: one(a, a_star, p.gamma, p.rho),
        backward: one(a_star, a, p.gamma_star, p.rho_star),
    })
}

/// A truncation coefficient expected to vanish on the module box.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationZero {
    pub label: String,
    pub n: Vec<usize>,
    pub modulus: f64,
}

/// The listed vanishing coefficients: b at n_1 = 2j and c at n_1 = 0 for
/// N = 1, the fourteen boundary zeros for N = 2; for other N, every
/// coefficient leaving the box.
pub fn truncation_zeros(spec: &ModuleSpec) -> Result<Vec<TruncationZero>> {
    let basis = primal_basis(spec);
    let al = &spec.alpha;
    let nn = spec.n();
    let tj = spec.twice_spins();
    let mut out = Vec::new();
    let table = |n: &[usize]| -> Result<Vec<Coefficient>> {
        let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
        recurrence_table(nn, &ni, al)
    };
    let listed: Vec<(Vec<i64>, usize, usize)> = match nn {
        1 => vec![(vec![1], 0, tj[0]), (vec![-1], 0, 0)],
        2 => {
            let (j1, j2) = (tj[0], tj[1]);
            vec![
                (vec![-1, 0], 0, 0),
                (vec![0, -1], 1, 0),
                (vec![1, -2], 1, 0),
                (vec![1, -2], 1, 1),
                (vec![1, -2], 0, j1),
                (vec![1, 0], 0, j1),
                (vec![0, 1], 1, j2),
                (vec![-1, 2], 1, j2),
                (vec![-1, 2], 1, j2.wrapping_sub(1)),
                (vec![-1, 2], 0, 0),
                (vec![1, -1], 1, 0),
                (vec![-1, 1], 0, 0),
                (vec![1, -1], 0, j1),
                (vec![-1, 1], 1, j2),
            ]
        }
        _ => vec![],
    };
    if listed.is_empty() {
        for n in &basis.indices {
            let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
            for c in table(n)? {
                let m: Vec<i64> = ni.iter().zip(&c.shift).map(|(a, b)| a + b).collect();
                if basis.position_signed(&m).is_none() {
                    out.push(TruncationZero {
                        label: format!("{}{:?}", c.kind.label(), c.shift),
                        n: n.clone(),
                        modulus: c.value.norm(),
                    });
                }
            }
        }
        return Ok(out);
    }
    for (shift, slot, val) in listed {
        for n in basis.indices.iter().filter(|n| n[slot] == val) {
            if let Some(c) = table(n)?.into_iter().find(|c| c.shift == shift) {
                out.push(TruncationZero {
                    label: format!("{}{:?}@n{}={}", c.kind.label(), shift, slot + 1, val),
                    n: n.clone(),
                    modulus: c.value.norm(),
                });
            }
        }
    }
    Ok(out)
}
