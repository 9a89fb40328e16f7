//! Continuous orthogonality of the normalized polynomials: the measure
//! density, Gauss-Chebyshev quadrature on the unit circle and the closed-form
//! norms.

use crate::error::{Error, Result};
use crate::gr_poly::{normalized_qhat, partial_sums, qhat_prefactor, AlphaParams};
use crate::linalg::CMat;
use crate::qcore::{qpochhammer, qpochhammer_inf, qpow, C64, ZERO};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Modulus ordering required for the measure to be positive and the
/// contour to be the unit circle.
pub fn check_conditions(al: &AlphaParams) -> Result<()> {
    let nn = al.n();
    let m = |j: usize| al.a(j).norm();
    if al.q.norm() >= 1.0 {
        return Err(Error::ConditionViolation(format!("|q| = {} >= 1", al.q.norm())));
    }
    for j in 1..=nn {
        if m(j + 1) >= m(j) {
            return Err(Error::ConditionViolation(format!("|alpha_{}| >= |alpha_{j}|", j + 1)));
        }
    }
    if m(1) >= 1.0f64.min(m(0) * m(0)) {
        return Err(Error::ConditionViolation("|alpha_1| >= min(1, |alpha_0|^2)".into()));
    }
    let r = m(nn + 1) / m(nn);
    if !(r < m(nn + 2) && m(nn + 2) < 1.0 / r) {
        return Err(Error::ConditionViolation(format!(
            "|alpha_{}| outside ({r}, {})",
            nn + 2,
            1.0 / r
        )));
    }
    Ok(())
}

/// Density of the orthogonality measure at z on the unit torus, with the
/// Chebyshev factor absorbed into the angular quadrature weight.
pub fn aw_measure_density(z: &[C64], al: &AlphaParams) -> Result<f64> {
    check_conditions(al)?;
    measure_density(z, al).map(|v| v.re)
}

fn measure_density(z: &[C64], al: &AlphaParams) -> Result<C64> {
    let nn = al.n();
    if z.len() != nn {
        return Err(Error::DimensionMismatch(z.len(), nn));
    }
    let q2 = al.q * al.q;
    let p = &al.policy;
    let mut zz = vec![al.a(0)];
    zz.extend_from_slice(z);
    zz.push(al.a(nn + 2));
    let mut r = C64::new(1.0, 0.0);
    for &zj in z {
        r *= qpochhammer_inf(zj * zj, q2, p)? * qpochhammer_inf((zj * zj).inv(), q2, p)?;
    }
    for j in 0..=nn {
        let ratio = al.a(j + 1) / al.a(j);
        for e1 in [1, -1] {
            for e2 in [1, -1] {
                r /= qpochhammer_inf(ratio * zz[j + 1].powi(e1) * zz[j].powi(e2), q2, p)?;
            }
        }
    }
    Ok(r / (2.0 * PI).powi(nn as i32))
}

/// Angular nodes pi(i + 1/2)/K on the upper half circle.
pub fn chebyshev_nodes(k: usize) -> Vec<C64> {
    (0..k).map(|i| C64::from_polar(1.0, PI * (i as f64 + 0.5) / k as f64)).collect()
}

/// Node tuples in row-major order, the first variable slowest.
fn tensor_nodes(nodes: &[C64], n: usize) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                nodes.iter().map(move |&z| {
                    let mut w = v.clone();
                    w.push(z);
                    w
                })
            })
            .collect();
    }
    out
}

/// Sum of per-chunk partial sums, computed in parallel and added in order.
fn ordered_sum<F: Fn(usize) -> Result<C64> + Sync>(len: usize, term: F) -> Result<C64> {
    const CHUNK: usize = 1024;
    let parts: Vec<C64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).try_fold(ZERO, |acc, i| Ok(acc + term(i)?)))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(ZERO, |a, b| a + b))
}

/// Bilinear pairing int f g dmu (no conjugation), tensor Gauss-Chebyshev with
/// `nodes` points per variable.
pub fn inner_product_quadrature<F, G>(f: F, g: G, al: &AlphaParams, nodes: usize) -> Result<C64>
where
    F: Fn(&[C64]) -> Result<C64> + Sync,
    G: Fn(&[C64]) -> Result<C64> + Sync,
{
    check_conditions(al)?;
    let nn = al.n();
    let pts = tensor_nodes(&chebyshev_nodes(nodes), nn);
    let w = (PI / nodes as f64).powi(nn as i32);
    let s = ordered_sum(pts.len(), |i| {
        let z = &pts[i];
        Ok(f(z)? * g(z)? * measure_density(z, al)?)
    })?;
    Ok(s * w)
}

/// Closed-form squared norm of the unnormalized polynomial Q_n.
pub fn norm_hbar(n: &[usize], al: &AlphaParams) -> Result<C64> {
    let nn = al.n();
    if n.len() != nn {
        return Err(Error::DimensionMismatch(n.len(), nn));
    }
    let q2 = al.q * al.q;
    let p = &al.policy;
    let s = partial_sums(n);
    let a0sq = al.a(0) * al.a(0);
    let qq = |e: i64| qpow(al.q, 2 * e);
    let inf = |a: C64| qpochhammer_inf(a, q2, p);
    let mut r = C64::new(1.0, 0.0);
    for k in 1..=nn {
        let (s0, s1) = (s[k - 1] as i64, s[k] as i64);
        let a1 = al.a(k + 1) * al.a(k + 1) / a0sq;
        let ak = al.a(k) * al.a(k) / a0sq;
        let ratio = al.a(k + 1) / al.a(k);
        r *= qpochhammer(a1 * qq(s0 + s1 - 1), q2, n[k - 1]) * inf(a1 * qq(2 * s1))?;
        r /= inf(qq(n[k - 1] as i64 + 1))? * inf(ak * qq(s0 + s1))? * inf(ratio * ratio * qq(n[k - 1] as i64))?;
    }
    let sn = s[nn] as i64;
    for e in [1, -1] {
        let b = al.a(nn + 2).powi(e);
        r /= inf(al.a(nn + 1) * b * qq(sn))? * inf(al.a(nn + 1) / a0sq * b * qq(sn))?;
    }
    Ok(r)
}

/// Squared norm of the normalized polynomial Q-hat_n.
pub fn norm_qhat(n: &[usize], al: &AlphaParams) -> Result<C64> {
    let c = qhat_prefactor(n, al)?;
    Ok(norm_hbar(n, al)? * c * c)
}

#[derive(Debug, Clone, Serialize)]
pub struct GramReport {
    pub nodes: usize,
    pub indices: Vec<Vec<usize>>,
    #[serde(skip)]
    pub gram: CMat,
    /// max |G[m,n]| / sqrt(|G[m,m] G[n,n]|) over m != n.
    pub max_offdiag: f64,
    /// max |G[n,n] / norm_qhat(n) - 1|.
    pub max_diag_dev: f64,
}

/// Quadrature Gram matrix of the Q-hat over `indices`.
pub fn gram_matrix(indices: &[Vec<usize>], al: &AlphaParams, nodes: usize) -> Result<GramReport> {
    check_conditions(al)?;
    let nn = al.n();
    let pts = tensor_nodes(&chebyshev_nodes(nodes), nn);
    let w = (PI / nodes as f64).powi(nn as i32);
    let d = indices.len();
    let vals: Vec<(Vec<C64>, C64)> = pts
        .par_iter()
        .map(|z| {
            let v = indices.iter().map(|n| normalized_qhat(n, z, al)).collect::<Result<Vec<_>>>()?;
            Ok((v, measure_density(z, al)?))
        })
        .collect::<Result<_>>()?;
    let mut gram = CMat::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let s = ordered_sum(vals.len(), |i| Ok(vals[i].0[a] * vals[i].0[b] * vals[i].1))? * w;
            gram[(a, b)] = s;
            gram[(b, a)] = s;
        }
    }
    let mut max_offdiag: f64 = 0.0;
    let mut max_diag_dev: f64 = 0.0;
    for a in 0..d {
        max_diag_dev = max_diag_dev.max((gram[(a, a)] / norm_qhat(&indices[a], al)? - 1.0).norm());
        for b in 0..d {
            if a != b {
                let s = (gram[(a, a)].norm() * gram[(b, b)].norm()).sqrt();
                max_offdiag = max_offdiag.max(gram[(a, b)].norm() / s);
            }
        }
    }
    Ok(GramReport { nodes, indices: indices.to_vec(), gram, max_offdiag, max_diag_dev })
}
