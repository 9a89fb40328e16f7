//! The q = 1 track: multivariable Krawtchouk and Meixner polynomials with
//! their bispectral difference operators, the Onsager modules they carry,
//! and multivariable Racah polynomials with their tridiagonal pairs.

use crate::error::{Error, Result};
use crate::linalg::{condition_number, max_abs, minimal_polynomial_defect, nullity, CMat};
use crate::onsager_modules::{
    classify_spectrum, verify_qdg, verify_td_relations, GradedBasis, QdgResidual, SpectrumFit, TdParams,
};
use crate::qcore::{pochhammer_f64, C64};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

#[derive(Debug, Clone, Serialize)]
pub struct KrawtchoukParams {
    pub alphas: Vec<f64>,
    pub m: f64,
}

impl KrawtchoukParams {
    pub fn new(alphas: Vec<f64>, m: f64) -> Result<Self> {
        if alphas.is_empty() || alphas.iter().any(|&a| a == 0.0 || !a.is_finite()) {
            return Err(Error::DegenerateParameter(format!("Krawtchouk alphas {alphas:?}")));
        }
        let kp = KrawtchoukParams { alphas, m };
        if (0..kp.n()).any(|j| (1.0 - kp.partial(j)).abs() < 1e-14) {
            return Err(Error::DegenerateParameter("partial sum of alphas equals 1".into()));
        }
        Ok(kp)
    }

    /// Meixner substitution alpha_k = c_k/(c_1+..+c_N-1), M = -s.
    pub fn meixner(c: &[f64], s: f64) -> Result<Self> {
        let d = c.iter().sum::<f64>() - 1.0;
        if d.abs() < 1e-14 {
            return Err(Error::DegenerateParameter("c_1+..+c_N = 1".into()));
        }
        Self::new(c.iter().map(|v| v / d).collect(), -s)
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    /// A_j = alpha_1 + .. + alpha_j.
    pub fn partial(&self, j: usize) -> f64 {
        self.alphas[..j].iter().sum()
    }

    /// The dual parameters under b_1, with the same M.
    pub fn dual(&self) -> Result<Self> {
        Self::new(b1_map(&self.alphas), self.m)
    }
}

/// (-b)_n 2F1(-n, -x; -b; 1/a), summed without dividing by (-b)_k.
pub fn krawtchouk_k(n: usize, x: f64, a: f64, b: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::DegenerateDenominator { term: 0, modulus: 0.0 });
    }
    let mut s = 0.0;
    let mut t = 1.0;
    for k in 0..=n {
        s += t * pochhammer_f64(-b + k as f64, n - k);
        t *= (k as f64 - n as f64) * (k as f64 - x) / ((k + 1) as f64 * a);
    }
    Ok(s)
}

/// Normalized multivariable Krawtchouk polynomial.
pub fn krawtchouk_khat(n: &[usize], x: &[f64], kp: &KrawtchoukParams) -> Result<f64> {
    let nn = kp.n();
    if n.len() != nn || x.len() != nn {
        return Err(Error::DimensionMismatch(n.len(), nn));
    }
    let total: usize = n.iter().sum();
    let pre = pochhammer_f64(-kp.m, total);
    if pre.abs() < 1e-300 {
        return Err(Error::DegeneratePrefactor(format!("(-M)_{total} = 0 for M = {}", kp.m)));
    }
    let mut r = 1.0 / pre;
    let mut sn = 0usize;
    let mut sx = 0.0;
    for j in 0..nn {
        sn += n[j];
        let a = kp.alphas[j] / (1.0 - kp.partial(j));
        let b = kp.m - total as f64 + sn as f64 - sx;
        r *= krawtchouk_k(n[j], x[j], a, b)?;
        sx += x[j];
    }
    Ok(r)
}

/// b_1: alpha_j -> alpha_{N+1-j}(1-A_N)/((1-A_{N+2-j})(1-A_{N+1-j})); an involution.
pub fn b1_map(al: &[f64]) -> Vec<f64> {
    let nn = al.len();
    let a = |j: usize| al[..j].iter().sum::<f64>();
    (1..=nn)
        .map(|j| al[nn - j] * (1.0 - a(nn)) / ((1.0 - a(nn + 1 - j)) * (1.0 - a(nn - j))))
        .collect()
}

/// Stencil of L_N on variables y with parameters a and M: (shift, coefficient).
fn ln_stencil(y: &[i64], a: &[f64], m: f64) -> Vec<(Vec<i64>, f64)> {
    let n = y.len();
    let ys: f64 = y.iter().sum::<i64>() as f64;
    let as_: f64 = a.iter().sum();
    let mut out = Vec::with_capacity(n * n + 1);
    let unit = |i: usize, s: i64| {
        let mut v = vec![0; n];
        v[i] += s;
        v
    };
    for i in 0..n {
        out.push((unit(i, 1), (ys - m) * a[i]));
        out.push((unit(i, -1), (as_ - 1.0) * y[i] as f64));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut v = vec![0; n];
                v[i] += 1;
                v[j] -= 1;
                out.push((v, -a[i] * y[j] as f64));
            }
        }
    }
    let lin: f64 = (0..n).map(|i| a[i] * y[i] as f64).sum();
    out.push((vec![0; n], -lin + ys + as_ * (m - ys)));
    out
}

/// Stencil of dI*^(l) at the integer point x, shifts in all N variables.
pub fn distar_stencil(l: usize, x: &[i64], kp: &KrawtchoukParams) -> Result<Vec<(Vec<i64>, f64)>> {
    let nn = kp.n();
    if l == 0 || l > nn || x.len() != nn {
        return Err(Error::DegenerateParameter(format!("operator level {l} with N = {nn}")));
    }
    let cut = nn - l;
    let scale = 1.0 - kp.partial(cut);
    let a: Vec<f64> = kp.alphas[cut..].iter().map(|v| v / scale).collect();
    let m = kp.m - x[..cut].iter().sum::<i64>() as f64;
    Ok(ln_stencil(&x[cut..], &a, m)
        .into_iter()
        .map(|(s, w)| {
            let mut full = vec![0; cut];
            full.extend(s);
            (full, w)
        })
        .collect())
}

fn shifted(x: &[i64], s: &[i64]) -> Vec<i64> {
    x.iter().zip(s).map(|(a, b)| a + b).collect()
}

/// (dI*^(l) f)(x); eigenvalue N_N - N_{N-l} on K-hat(n, .). Shifts with an
/// exactly vanishing coefficient, such as x_i -> x_i - 1 at x_i = 0, are not evaluated.
pub fn apply_distar<F: Fn(&[i64]) -> f64>(l: usize, f: &F, x: &[i64], kp: &KrawtchoukParams) -> Result<f64> {
    Ok(distar_stencil(l, x, kp)?
        .iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(s, w)| w * f(&shifted(x, s)))
        .sum())
}

/// The b_1-image of dI*^(l), acting on functions of n; eigenvalue X_l on K-hat(., x).
pub fn apply_di_dual<F: Fn(&[i64]) -> f64>(l: usize, g: &F, n: &[i64], kp: &KrawtchoukParams) -> Result<f64> {
    let dual = kp.dual()?;
    let rev = |v: &[i64]| v.iter().rev().copied().collect::<Vec<_>>();
    let h = |y: &[i64]| g(&rev(y));
    apply_distar(l, &h, &rev(n), &dual)
}

/// Discrete weight (M - X)!^{-1} prod (alpha_k/(1-A_N))^{x_k}/x_k! for integer M.
pub fn krawtchouk_weight(x: &[i64], kp: &KrawtchoukParams) -> f64 {
    let xs: i64 = x.iter().sum();
    let rest = kp.m - xs as f64;
    if rest < 0.0 {
        return 0.0;
    }
    let an = kp.partial(kp.n());
    let mut r = 1.0 / gamma(rest + 1.0);
    for (k, &xk) in x.iter().enumerate() {
        r *= (kp.alphas[k] / (1.0 - an)).powi(xk as i32) / gamma(xk as f64 + 1.0);
    }
    r
}

/// {x in N^N : x_1+..+x_N <= j} in graded-lex order.
pub fn simplex_grid(n: usize, j: usize) -> Vec<Vec<i64>> {
    GradedBasis::new(&vec![j; n])
        .restrict_total(j)
        .indices
        .into_iter()
        .map(|v| v.into_iter().map(|c| c as i64).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Q1Module {
    pub l: usize,
    pub j: usize,
    pub grid: Vec<Vec<i64>>,
    /// Multiplication by X_{N+1-l}.
    #[serde(skip)]
    pub w0: CMat,
    /// Matrix of dI*^(l): (W1 f)(x) = sum_y W1[x, y] f(y).
    #[serde(skip)]
    pub w1: CMat,
    /// Largest coefficient pointing outside the grid.
    pub leak: f64,
    pub dolan_grady: QdgResidual,
    /// Defect of prod (W1 - v) over v = 0..J.
    pub spectrum_residual: f64,
    /// Nullity of W1 - v for v = 0..J, and the simplex counts of N_N - N_{N-l} = v.
    pub multiplicities: Vec<usize>,
    pub expected_multiplicities: Vec<usize>,
    pub w0_fit: SpectrumFit,
    pub w1_fit: SpectrumFit,
}

fn integer_m(kp: &KrawtchoukParams) -> Result<usize> {
    let m = kp.m.round();
    if (kp.m - m).abs() > 1e-12 || m < 1.0 {
        return Err(Error::DegenerateParameter(format!("module needs a positive integer M, got {}", kp.m)));
    }
    Ok(m as usize)
}

fn distinct_levels(j: usize) -> Vec<C64> {
    (0..=j).map(|v| C64::new(v as f64, 0.0)).collect()
}

/// Onsager module on the simplex {X_N <= J} with J = M.
pub fn build_onsager_module_q1(l: usize, kp: &KrawtchoukParams) -> Result<Q1Module> {
    let j = integer_m(kp)?;
    let nn = kp.n();
    if l == 0 || l > nn {
        return Err(Error::DegenerateParameter(format!("operator level {l} with N = {nn}")));
    }
    let basis = GradedBasis::new(&vec![j; nn]).restrict_total(j);
    let grid = simplex_grid(nn, j);
    let d = grid.len();
    let rows: Vec<(Vec<(usize, f64)>, f64)> = grid
        .par_iter()
        .map(|x| -> Result<_> {
            let mut row = Vec::new();
            let mut leak: f64 = 0.0;
            for (s, w) in distar_stencil(l, x, kp)? {
                match basis.position_signed(&shifted(x, &s)) {
                    Some(c) => row.push((c, w)),
                    None => leak = leak.max(w.abs()),
                }
            }
            Ok((row, leak))
        })
        .collect::<Result<_>>()?;
    let mut w1 = CMat::zeros(d, d);
    let mut leak: f64 = 0.0;
    for (r, (row, lk)) in rows.into_iter().enumerate() {
        for (c, w) in row {
            w1[(r, c)] += C64::new(w, 0.0);
        }
        leak = leak.max(lk);
    }
    let w0 = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        grid.iter().map(|x| C64::new(x[..nn + 1 - l].iter().sum::<i64>() as f64, 0.0)),
    ));
    let one = C64::new(1.0, 0.0);
    let dolan_grady = verify_qdg(&w0, &w1, one, one)?;

    let levels = distinct_levels(j);
    let spectrum_residual = minimal_polynomial_defect(&w1, &levels);
    let id = CMat::identity(d, d);
    let multiplicities: Vec<usize> = levels.iter().map(|&v| nullity(&(&w1 - &id * v), 1e-9)).collect();
    let mut expected_multiplicities = vec![0; j + 1];
    for n in &grid {
        expected_multiplicities[n[nn - l..].iter().sum::<i64>() as usize] += 1;
    }
    let fit_tol = 1e-9;
    let present: Vec<C64> = levels.iter().zip(&multiplicities).filter(|(_, &m)| m > 0).map(|(v, _)| *v).collect();
    Ok(Q1Module {
        l,
        j,
        grid,
        w0,
        w1,
        leak,
        dolan_grady,
        spectrum_residual,
        multiplicities,
        expected_multiplicities,
        w0_fit: classify_spectrum(&levels, one, fit_tol)?,
        w1_fit: classify_spectrum(&present, one, fit_tol)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RacahParams {
    pub zeta: Vec<f64>,
    pub m: usize,
}

impl RacahParams {
    pub fn new(zeta: Vec<f64>, m: usize) -> Result<Self> {
        if zeta.len() < 3 || zeta.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateParameter(format!("Racah zetas {zeta:?}")));
        }
        Ok(RacahParams { zeta, m })
    }

    pub fn n(&self) -> usize {
        self.zeta.len() - 2
    }
}

/// (a+1)_n (b+d+1)_n (c+1)_n 4F3(-n, n+a+b+1, -x, x+c+d+1; a+1, b+d+1, c+1; 1).
pub fn racah_r(n: usize, x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    let p = pochhammer_f64;
    (0..=n)
        .map(|k| {
            let t = p(-(n as f64), k) * p(n as f64 + a + b + 1.0, k) * p(-x, k) * p(x + c + d + 1.0, k)
                / gamma(k as f64 + 1.0);
            t * p(a + 1.0 + k as f64, n - k) * p(b + d + 1.0 + k as f64, n - k) * p(c + 1.0 + k as f64, n - k)
        })
        .sum()
}

/// Normalized multivariable Racah polynomial at 0 <= x_1 <= .. <= x_N <= M.
pub fn racah_eval(n: &[usize], x: &[i64], rp: &RacahParams) -> Result<f64> {
    let nn = rp.n();
    if n.len() != nn || x.len() != nn {
        return Err(Error::DimensionMismatch(n.len(), nn));
    }
    let z = &rp.zeta;
    let mut xx: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    xx.push(rp.m as f64);
    let total: usize = n.iter().sum();
    let mut den = pochhammer_f64(-(rp.m as f64), total) * pochhammer_f64(-(rp.m as f64) - z[0], total);
    let mut r = 1.0;
    let mut s = 0.0;
    for k in 1..=nn {
        r *= racah_r(
            n[k - 1],
            -s + xx[k - 1],
            2.0 * s + z[k] - z[0] - 1.0,
            z[k + 1] - z[k] - 1.0,
            s - xx[k] - 1.0,
            s + z[k] + xx[k],
        );
        den *= pochhammer_f64(z[k + 1] - z[k], n[k - 1]);
        s += n[k - 1] as f64;
    }
    if den.abs() < 1e-300 {
        return Err(Error::DegeneratePrefactor(format!("Racah normalization vanishes at n = {n:?}")));
    }
    Ok(r / den)
}

/// Discrete Racah weight with x_0 = 0, x_{N+1} = M.
pub fn racah_weight(x: &[i64], rp: &RacahParams) -> f64 {
    let nn = rp.n();
    let z = &rp.zeta;
    let mut xx = vec![0.0];
    xx.extend(x.iter().map(|&v| v as f64));
    xx.push(rp.m as f64);
    let mut r = 1.0;
    for k in 0..=nn {
        let (a, b) = (xx[k], xx[k + 1]);
        r *= gamma(z[k + 1] - z[k] + b - a) * gamma(z[k + 1] + b + a) / (gamma(b - a + 1.0) * gamma(z[k] + 1.0 + b + a));
    }
    for k in 1..=nn {
        r *= z[k] + 2.0 * xx[k];
    }
    r
}

/// 0 <= x_1 <= .. <= x_N <= M in lexicographic order.
pub fn ordered_simplex(n: usize, m: usize) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                let lo = v.last().copied().unwrap_or(0);
                (lo..=m as i64).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

/// lambda*^(l)_n = -(zeta_{l+1} - zeta_0) N_l - N_l(N_l - 1).
pub fn racah_lambda_star(l: usize, n: &[usize], rp: &RacahParams) -> f64 {
    let s = n[..l].iter().sum::<usize>() as f64;
    -(rp.zeta[l + 1] - rp.zeta[0]) * s - s * (s - 1.0)
}

/// lambda^(l)_x = -(1 + zeta_{N+1-l}) x_{N+1-l} - x_{N+1-l}(x_{N+1-l} - 1).
pub fn racah_lambda(l: usize, x: &[i64], rp: &RacahParams) -> f64 {
    let nn = rp.n();
    let v = x[nn - l] as f64;
    -(1.0 + rp.zeta[nn + 1 - l]) * v - v * (v - 1.0)
}

/// The parameters (2, -2, -2, rho, rho*) of the level-l pair.
pub fn racah_td_params(l: usize, rp: &RacahParams) -> TdParams {
    let nn = rp.n();
    let z = &rp.zeta;
    let r = |v: f64| C64::new(v, 0.0);
    TdParams {
        beta: r(2.0),
        gamma: r(-2.0),
        gamma_star: r(-2.0),
        rho: r(z[nn + 1 - l].powi(2) - 1.0),
        rho_star: r((z[0] - z[l + 1] + 1.0).powi(2) - 1.0),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RacahReport {
    pub l: usize,
    pub dimension: usize,
    pub weight_positive: bool,
    /// max |G[m,n]| / sqrt(|G[m,m] G[n,n]|) over m != n.
    pub gram_offdiag: f64,
    pub gram_condition: f64,
    pub td: QdgResidual,
    /// Largest |A[m,n]| with |N_l(m) - N_l(n)| > 1, relative to max |A|.
    pub block_leak: f64,
    /// Defect of prod (A - lambda) over the distinct lambda^(l)_x values.
    pub spectrum_residual: f64,
    #[serde(skip)]
    pub a: CMat,
    #[serde(skip)]
    pub a_star: CMat,
}

/// Discrete Gram matrix of the R-hat over the ordered simplex and the
/// n-space realization of the level-l tridiagonal pair.
pub fn racah_gram_and_td_check(rp: &RacahParams, l: usize) -> Result<RacahReport> {
    let nn = rp.n();
    if l == 0 || l > nn {
        return Err(Error::DegenerateParameter(format!("operator level {l} with N = {nn}")));
    }
    let xs = ordered_simplex(nn, rp.m);
    let ns = GradedBasis::new(&vec![rp.m; nn]).restrict_total(rp.m).indices;
    let w: Vec<f64> = xs.iter().map(|x| racah_weight(x, rp)).collect();
    let rows: Vec<Vec<f64>> = ns
        .par_iter()
        .map(|n| xs.iter().map(|x| racah_eval(n, x, rp)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let d = ns.len();
    let r = CMat::from_fn(d, xs.len(), |i, k| C64::new(rows[i][k], 0.0));
    let rw = CMat::from_fn(d, xs.len(), |i, k| C64::new(rows[i][k] * w[k], 0.0));
    let g = &rw * r.transpose();
    let mut off: f64 = 0.0;
    for i in 0..d {
        for k in 0..d {
            if i != k {
                off = off.max(g[(i, k)].norm() / (g[(i, i)].norm() * g[(k, k)].norm()).sqrt());
            }
        }
    }
    let cond = condition_number(&g);
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::IllConditionedGram(format!("condition number {cond:e}")));
    }
    let lam: Vec<f64> = xs.iter().map(|x| racah_lambda(l, x, rp)).collect();
    let rwl = CMat::from_fn(d, xs.len(), |i, k| rw[(i, k)] * lam[k]);
    let a = g
        .clone()
        .lu()
        .solve(&(&rwl * r.transpose()))
        .ok_or_else(|| Error::IllConditionedGram("singular Gram matrix".into()))?;
    let a_star = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        ns.iter().map(|n| C64::new(racah_lambda_star(l, n, rp), 0.0)),
    ));
    let td = verify_td_relations(&a, &a_star, &racah_td_params(l, rp))?;
    let grade = |n: &[usize]| n[..l].iter().sum::<usize>() as i64;
    let scale = max_abs(&a).max(1e-300);
    let mut block_leak: f64 = 0.0;
    for i in 0..d {
        for k in 0..d {
            if (grade(&ns[i]) - grade(&ns[k])).abs() > 1 {
                block_leak = block_leak.max(a[(i, k)].norm() / scale);
            }
        }
    }
    let mut levels: Vec<f64> = lam.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|u, v| (*u - *v).abs() < 1e-9);
    let levels: Vec<C64> = levels.into_iter().map(|v| C64::new(v, 0.0)).collect();
    let spectrum_residual = minimal_polynomial_defect(&a, &levels);
    Ok(RacahReport {
        l,
        dimension: d,
        weight_positive: w.iter().all(|&v| v > 0.0),
        gram_offdiag: off,
        gram_condition: cond,
        td,
        block_leak,
        spectrum_residual,
        a,
        a_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onsager_modules::SpectrumCase;
    use crate::sample::Sampler;
    use proptest::prelude::*;

    fn params(s: &mut Sampler, n: usize, m: f64) -> KrawtchoukParams {
        KrawtchoukParams::new((0..n).map(|_| s.uniform(0.05, 0.3)).collect(), m).unwrap()
    }

    fn cube(n: usize, hi: i64) -> Vec<Vec<i64>> {
        let mut out: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..=hi).map(move |c| {
                        let mut w = v.clone();
                        w.push(c);
                        w
                    })
                })
                .collect();
        }
        out
    }

    fn as_f(x: &[i64]) -> Vec<f64> {
        x.iter().map(|&v| v as f64).collect()
    }

    fn as_u(x: &[i64]) -> Vec<usize> {
        x.iter().map(|&v| v as usize).collect()
    }

    #[test]
    fn one_term_values() {
        assert_eq!(krawtchouk_k(0, 2.5, 0.3, 4.0).unwrap(), 1.0);
        let (x, a, b) = (2.0, 0.4, 5.0);
        let direct = -b * (1.0 - x / (b * a));
        assert!((krawtchouk_k(1, x, a, b).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn one_variable_reduces() {
        let kp = KrawtchoukParams::new(vec![0.2], 6.0).unwrap();
        for n in 0..5 {
            for x in 0..5 {
                let want = krawtchouk_k(n, x as f64, 0.2, 6.0).unwrap() / pochhammer_f64(-6.0, n);
                let got = krawtchouk_khat(&[n], &[x as f64], &kp).unwrap();
                assert!((got - want).abs() < 1e-13 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_is_annihilated() {
        let mut s = Sampler::new(40);
        for nn in 1..=3 {
            let kp = params(&mut s, nn, 7.0);
            for x in cube(nn, 3) {
                for l in 1..=nn {
                    assert!(apply_distar(l, &|_: &[i64]| 1.0, &x, &kp).unwrap().abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn bispectral_pair() {
        let mut s = Sampler::new(41);
        for nn in 1..=3 {
            let kp = params(&mut s, nn, 7.0);
            for n in cube(nn, 2) {
                for x in cube(nn, 2) {
                    let nu = as_u(&n);
                    let v = krawtchouk_khat(&nu, &as_f(&x), &kp).unwrap();
                    for l in 1..=nn {
                        let f = |y: &[i64]| krawtchouk_khat(&nu, &as_f(y), &kp).unwrap();
                        let lhs = apply_distar(l, &f, &x, &kp).unwrap();
                        let ev = (n[nn - l..].iter().sum::<i64>()) as f64;
                        assert!((lhs - ev * v).abs() < 1e-10 * v.abs().max(1.0));
                        let g = |m: &[i64]| krawtchouk_khat(&as_u(m), &as_f(&x), &kp).unwrap();
                        let rhs = apply_di_dual(l, &g, &n, &kp).unwrap();
                        let ev = (x[..l].iter().sum::<i64>()) as f64;
                        assert!((rhs - ev * v).abs() < 1e-10 * v.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn duality() {
        let mut s = Sampler::new(42);
        for nn in 1..=3 {
            let kp = params(&mut s, nn, 7.0);
            let dual = kp.dual().unwrap();
            for n in cube(nn, 2) {
                for x in cube(nn, 2) {
                    let v = krawtchouk_khat(&as_u(&n), &as_f(&x), &kp).unwrap();
                    let xr: Vec<i64> = x.iter().rev().copied().collect();
                    let nr: Vec<i64> = n.iter().rev().copied().collect();
                    let w = krawtchouk_khat(&as_u(&xr), &as_f(&nr), &dual).unwrap();
                    assert!((v - w).abs() < 1e-10 * v.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn discrete_orthogonality() {
        let kp = KrawtchoukParams::new(vec![0.1, 0.2], 4.0).unwrap();
        let g = simplex_grid(2, 4);
        for a in &g {
            for b in &g {
                if a == b {
                    continue;
                }
                let ip: f64 = g
                    .iter()
                    .map(|x| {
                        krawtchouk_weight(x, &kp)
                            * krawtchouk_khat(&as_u(a), &as_f(x), &kp).unwrap()
                            * krawtchouk_khat(&as_u(b), &as_f(x), &kp).unwrap()
                    })
                    .sum();
                assert!(ip.abs() < 1e-12, "{a:?} {b:?} {ip}");
            }
        }
    }

    #[test]
    fn meixner_substitution() {
        let kp = KrawtchoukParams::meixner(&[0.3, 0.4], 2.5).unwrap();
        assert!((kp.alphas[0] - 0.3 / -0.3).abs() < 1e-15);
        assert_eq!(kp.m, -2.5);
        let f = |y: &[i64]| krawtchouk_khat(&[1, 2], &as_f(y), &kp).unwrap();
        let x = [2i64, 3];
        let lhs = apply_distar(2, &f, &x, &kp).unwrap();
        assert!((lhs - 3.0 * f(&x)).abs() < 1e-10 * f(&x).abs());
    }

    #[test]
    fn prefactor_vanishes() {
        let kp = KrawtchoukParams::new(vec![0.2], 2.0).unwrap();
        assert!(matches!(krawtchouk_khat(&[3], &[1.0], &kp), Err(Error::DegeneratePrefactor(_))));
    }

    #[test]
    fn modules() {
        let kp = KrawtchoukParams::new(vec![0.13, 0.21], 4.0).unwrap();
        for l in 1..=2 {
            let m = build_onsager_module_q1(l, &kp).unwrap();
            assert_eq!(m.grid.len(), 15);
            assert!(m.leak < 1e-14);
            assert!(m.dolan_grady.max() < 1e-9, "{:?}", m.dolan_grady);
            assert!(m.spectrum_residual < 1e-9);
            assert_eq!(m.multiplicities, m.expected_multiplicities);
            assert_eq!(m.w1_fit.case, SpectrumCase::Racah);
            assert!(m.w1_fit.a.norm() < 1e-9 && (m.w1_fit.b.re - 1.0).abs() < 1e-9 && m.w1_fit.c.norm() < 1e-9);
        }
    }

    #[test]
    fn scalar_identity() {
        for x in -5..5i64 {
            for s in [-1, 1] {
                assert_eq!(x * x - 2 * x * (x + s) + (x + s) * (x + s) - 1, 0);
            }
        }
    }

    #[test]
    fn racah_one_variable() {
        let rp = RacahParams::new(vec![0.3, 1.7, 2.9], 5).unwrap();
        let z = &rp.zeta;
        let m = 5.0;
        let (a, b, c, d) = (z[1] - z[0] - 1.0, z[2] - z[1] - 1.0, -m - 1.0, z[1] + m);
        let pol = crate::qcore::NumericPolicy::default();
        let r = |v: f64| C64::new(v, 0.0);
        for n in 0..4usize {
            for x in 0..5i64 {
                let xf = x as f64;
                let nf = n as f64;
                let f = crate::qcore::hypergeometric_terminating(
                    &[r(-nf), r(nf + a + b + 1.0), r(-xf), r(xf + c + d + 1.0)],
                    &[r(a + 1.0), r(b + d + 1.0), r(c + 1.0)],
                    r(1.0),
                    n,
                    &pol,
                )
                .unwrap()
                .re;
                let direct = f * pochhammer_f64(a + 1.0, n) * pochhammer_f64(b + d + 1.0, n) * pochhammer_f64(c + 1.0, n)
                    / (pochhammer_f64(-m, n) * pochhammer_f64(-m - z[0], n) * pochhammer_f64(z[2] - z[1], n));
                let v = racah_eval(&[n], &[x], &rp).unwrap();
                assert!((v - direct).abs() < 1e-12 * direct.abs().max(1.0), "{n} {x} {v} {direct}");
            }
        }
        assert!((racah_eval(&[0], &[3], &rp).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn racah_pairs() {
        for zeta in [vec![0.3, 1.7, 2.9], vec![0.3, 1.7, 2.9, 4.3]] {
            let rp = RacahParams::new(zeta, 5).unwrap();
            for l in 1..=rp.n() {
                let r = racah_gram_and_td_check(&rp, l).unwrap();
                assert!(r.weight_positive);
                assert!(r.gram_offdiag < 1e-8, "{r:?}");
                assert!(r.td.max() < 1e-8, "{:?}", r.td);
                assert!(r.block_leak < 1e-8);
                assert!(r.spectrum_residual < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn b1_is_involution(a in proptest::collection::vec(0.01f64..0.3, 1..4)) {
            let back = b1_map(&b1_map(&a));
            for (u, v) in a.iter().zip(&back) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
