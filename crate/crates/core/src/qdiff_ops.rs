//! The commuting q-difference operators D*^(k), their C-bar coefficient form,
//! the dual map b, the dual difference operators D_n^(k) and the
//! block-tridiagonal recurrence coefficients.

use crate::error::{Error, Result};
use crate::gr_poly::{dual_alphas, xof, AlphaParams};
use crate::qcore::{qpow, C64, ONE, ZERO};
use crate::sample::Sampler;
use serde::Serialize;

/// All nu in {-1, 0, 1}^n, first component varying slowest.
pub fn signed_indices(n: usize) -> Vec<Vec<i8>> {
    let total = 3usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut v = vec![0i8; n];
            for slot in (0..n).rev() {
                v[slot] = (code % 3) as i8 - 1;
                code /= 3;
            }
            v
        })
        .collect()
}

pub fn is_zero(nu: &[i8]) -> bool {
    nu.iter().all(|&v| v == 0)
}

/// z_i q^(2 nu_i).
pub fn shift_point(z: &[C64], nu: &[i8], q: C64) -> Vec<C64> {
    let q2 = q * q;
    z.iter()
        .zip(nu)
        .map(|(&zi, &v)| match v {
            1 => zi * q2,
            -1 => zi / q2,
            _ => zi,
        })
        .collect()
}

fn guard(v: C64, what: &str, al: &AlphaParams) -> Result<C64> {
    if v.norm() < al.policy.degeneracy_threshold {
        Err(Error::DegenerateGridPoint(format!("{what} = {v}")))
    } else {
        Ok(v)
    }
}

/// Phi_nu of the product form, nu nonzero.
pub fn phi_nu(nu: &[i8], z: &[C64], al: &AlphaParams) -> Result<C64> {
    let nn = nu.len();
    let q2 = al.q * al.q;
    let zz: Vec<C64> = z.iter().zip(nu).map(|(&zi, &v)| if v < 0 { zi.inv() } else { zi }).collect();
    let idx: Vec<usize> = (1..=nn).filter(|&i| nu[i - 1] != 0).collect();
    if idx.is_empty() {
        return Err(Error::DegenerateParameter("Phi_nu needs nu != 0".into()));
    }
    let zf = |i: usize| zz[i - 1];
    let a = |j: usize| al.a(j);
    let a0sq = a(0) * a(0);
    let i1 = idx[0];
    let mut r = (ONE - a(i1) * zf(i1)) * (ONE - a(i1) * zf(i1) / a0sq);
    for w in idx.windows(2) {
        let (b, c) = (w[0], w[1]);
        let t = a(c) * zf(c) * zf(b) / a(b);
        r *= (ONE - t) * (ONE - q2 * t);
    }
    for &i in &idx {
        let zi = zf(i);
        r /= guard((ONE - zi * zi) * (ONE - q2 * zi * zi), "(1-z^2)(1-q^2 z^2)", al)?;
    }
    let s = *idx.last().unwrap();
    r *= (ONE - a(nn + 1) * a(nn + 2) * zf(s) / a(s)) * (ONE - a(nn + 1) * zf(s) / (a(s) * a(nn + 2)));
    Ok(r)
}

/// B_j^{a,b} with zz = (z_0 = alpha_0, z_1, .., z_N, z_{N+1} = alpha_{N+2}).
pub fn b_table(j: usize, a: i8, b: i8, zz: &[C64], al: &AlphaParams) -> C64 {
    let q2 = al.q * al.q;
    let r = al.a(j + 1) / al.a(j);
    let mut zj = zz[j];
    let mut zj1 = zz[j + 1];
    if a == -1 {
        zj = zj.inv();
    }
    if b == -1 {
        zj1 = zj1.inv();
    }
    match (a.abs(), b.abs()) {
        (0, 0) => ONE + r * r / q2 - r * xof(zz[j]) * xof(zz[j + 1]) * 4.0 / (q2 + 1.0),
        (1, 1) => (ONE - r * zj * zj1) * (ONE - q2 * r * zj * zj1),
        (0, 1) => (ONE - r * zj * zj1) * (ONE - r * zj1 / zj),
        _ => (ONE - r * zj * zj1) * (ONE - r * zj / zj1),
    }
}

/// b_j^{nu} denominators.
pub fn b_small(v: i8, z: C64, q: C64) -> C64 {
    let q2 = q * q;
    match v {
        0 => (ONE - q2 * z * z) * (ONE - q2 / (z * z)),
        1 => (ONE - z * z) * (ONE - q2 * z * z),
        _ => {
            let w = z.inv();
            (ONE - w * w) * (ONE - q2 * w * w)
        }
    }
}

/// C-bar_nu, nu may be zero.
pub fn cbar_coefficient(nu: &[i8], z: &[C64], al: &AlphaParams) -> Result<C64> {
    let nn = nu.len();
    let q2 = al.q * al.q;
    let mut zz = Vec::with_capacity(nn + 2);
    zz.push(al.a(0));
    zz.extend_from_slice(z);
    zz.push(al.a(nn + 2));
    let mut ext = vec![0i8; nn + 2];
    ext[1..=nn].copy_from_slice(nu);
    let zeros = nu.iter().filter(|&&v| v == 0).count();
    let mut r = (q2 * (q2 + 1.0)).powu(zeros as u32);
    for k in 0..=nn {
        r *= b_table(k, ext[k], ext[k + 1], &zz, al);
    }
    for k in 1..=nn {
        r /= guard(b_small(ext[k], zz[k], al.q), "b_k", al)?;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DstarForm {
    Phi,
    Cbar,
}

fn dstar_full_phi<F: Fn(&[C64]) -> C64>(f: &F, z: &[C64], al: &AlphaParams) -> Result<C64> {
    let nn = z.len();
    let q = al.q;
    let mut tot = ZERO;
    for nu in signed_indices(nn) {
        if is_zero(&nu) {
            continue;
        }
        let p = phi_nu(&nu, z, al)?;
        let neg = nu.iter().filter(|&&v| v < 0).count();
        let sign = if neg % 2 == 0 { 1.0 } else { -1.0 };
        // Delta^{nu+} nabla^{nu-}: each nonzero slot gives two terms.
        let slots: Vec<usize> = (0..nn).filter(|&i| nu[i] != 0).collect();
        let mut acc = ZERO;
        for mask in 0..(1u32 << slots.len()) {
            let mut mu = vec![0i8; nn];
            let mut coef = 1.0;
            for (b, &i) in slots.iter().enumerate() {
                let take = mask >> b & 1 == 1;
                if nu[i] == 1 {
                    if take {
                        mu[i] = 1;
                    } else {
                        coef = -coef;
                    }
                } else if take {
                    mu[i] = -1;
                    coef = -coef;
                }
            }
            acc += f(&shift_point(z, &mu, q)) * coef;
        }
        tot += p * acc * sign;
    }
    let a0 = al.a(0);
    let an1 = al.a(nn + 1);
    tot += f(z) * (ONE + an1 * an1 / (q * q * a0 * a0));
    Ok(tot * a0 * q / an1)
}

fn dstar_full_cbar<F: Fn(&[C64]) -> C64>(f: &F, z: &[C64], al: &AlphaParams) -> Result<C64> {
    let nn = z.len();
    let q = al.q;
    let mut tot = ZERO;
    for nu in signed_indices(nn) {
        tot += cbar_coefficient(&nu, z, al)? * f(&shift_point(z, &nu, q));
    }
    let a0 = al.a(0);
    let an1 = al.a(nn + 1);
    tot += an1 * 4.0 / (a0 * (q * q + 1.0)) * xof(a0) * xof(al.a(nn + 2)) * f(z);
    Ok(tot * a0 * q / an1)
}

/// Parameters of the k-variable operator: (alpha_0..alpha_{k+1}, z_{k+1}).
pub fn level_params(k: usize, z: &[C64], al: &AlphaParams) -> AlphaParams {
    let nn = al.n();
    let mut a: Vec<C64> = al.alphas[..k + 2].to_vec();
    a.push(if k < nn { z[k] } else { al.a(nn + 2) });
    AlphaParams { alphas: a, q: al.q, policy: al.policy }
}

/// D*^(k) f at z, acting on the first k variables.
pub fn apply_dstar<F: Fn(&[C64]) -> C64>(
    k: usize,
    f: &F,
    z: &[C64],
    al: &AlphaParams,
    form: DstarForm,
) -> Result<C64> {
    let nn = al.n();
    if k == 0 || k > nn {
        return Err(Error::DegenerateParameter(format!("operator level {k} outside 1..={nn}")));
    }
    let alk = level_params(k, z, al);
    let tail = &z[k..];
    let g = |w: &[C64]| {
        let mut full = w.to_vec();
        full.extend_from_slice(tail);
        f(&full)
    };
    match form {
        DstarForm::Phi => dstar_full_phi(&g, &z[..k], &alk),
        DstarForm::Cbar => dstar_full_cbar(&g, &z[..k], &alk),
    }
}

/// Stencil weights of D*^(k) at z: D*^(k) f(z) = sum w_nu f(z q^(2 nu)), nu over
/// the first k variables.
pub fn dstar_stencil(k: usize, z: &[C64], al: &AlphaParams) -> Result<Vec<(Vec<i8>, C64)>> {
    let nn = al.n();
    if k == 0 || k > nn {
        return Err(Error::DegenerateParameter(format!("operator level {k} outside 1..={nn}")));
    }
    let alk = level_params(k, z, al);
    let q = al.q;
    let a0 = alk.a(0);
    let ak1 = alk.a(k + 1);
    let pref = a0 * q / ak1;
    let mut out = Vec::with_capacity(3usize.pow(k as u32));
    for nu in signed_indices(k) {
        let mut w = cbar_coefficient(&nu, &z[..k], &alk)?;
        if is_zero(&nu) {
            w += ak1 * 4.0 / (a0 * (q * q + 1.0)) * xof(a0) * xof(alk.a(k + 2));
        }
        out.push((nu, w * pref));
    }
    Ok(out)
}

/// Eigenvalue of D*^(k) on Q-hat(n).
pub fn dstar_eigenvalue(k: usize, n: &[usize], al: &AlphaParams) -> C64 {
    let s: usize = n[..k].iter().sum();
    let q = al.q;
    let a = al.a(0) * q / al.a(k + 1);
    let p = (q * q).powu(s as u32);
    p / a + a / p
}

/// b-image of z: alpha_{N+2-j}/(alpha_0 q) q^(2 N_{N+1-j}), degrees possibly negative.
pub fn dual_map_z(n: &[i64], al: &AlphaParams) -> Vec<C64> {
    let nn = al.n();
    let q = al.q;
    let mut s = vec![0i64; nn + 1];
    for i in 0..nn {
        s[i + 1] = s[i] + n[i];
    }
    (1..=nn).map(|j| al.a(nn + 2 - j) / (al.a(0) * q) * qpow(q, 2 * s[nn + 1 - j])).collect()
}

/// b-image of the shift z^nu: E_{n_{N+1-j}} E^{-1}_{n_{N+2-j}} per unit of nu_j.
pub fn dual_map_shift(nu: &[i8], n_vars: usize) -> Vec<i64> {
    let mut full = vec![0i64; n_vars];
    for (j0, &v) in nu.iter().enumerate() {
        let j = j0 + 1;
        full[n_vars - j] += v as i64;
        if j >= 2 {
            full[n_vars + 1 - j] -= v as i64;
        }
    }
    full
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    B,
    C,
    A,
}

impl Kind {
    pub fn of(nu: &[i8]) -> Kind {
        match nu.first() {
            Some(1) => Kind::B,
            Some(-1) => Kind::C,
            _ => Kind::A,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Kind::B => "b",
            Kind::C => "c",
            Kind::A => "a",
        }
    }
}

/// A recurrence coefficient with its shift pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub kind: Kind,
    pub nu: Vec<i8>,
    pub shift: Vec<i64>,
    pub value: C64,
}

/// Coefficients of D_n^(k) / 2 at n: D_n^(k) g = sum 2 c g(n + shift).
/// The constant term comes from the sum rule.
pub fn recurrence_table(k: usize, n: &[i64], al: &AlphaParams) -> Result<Vec<Coefficient>> {
    let nn = al.n();
    if n.len() != nn {
        return Err(Error::DimensionMismatch(n.len(), nn));
    }
    if k == 0 || k > nn {
        return Err(Error::DegenerateParameter(format!("operator level {k} outside 1..={nn}")));
    }
    let ba = dual_alphas(al);
    let bz = dual_map_z(n, al);
    let alk = level_params(k, &bz, &ba);
    let zk = &bz[..k];
    let pref = ba.a(0) * al.q / ba.a(k + 1);
    let mut out = Vec::with_capacity(3usize.pow(k as u32));
    let mut tot = ZERO;
    for nu in signed_indices(k) {
        if is_zero(&nu) {
            continue;
        }
        let v = pref * 0.5 * cbar_coefficient(&nu, zk, &alk)
            .map_err(|e| Error::DegenerateParameter(format!("b-image at n = {n:?}: {e}")))?;
        tot += v;
        out.push(Coefficient { kind: Kind::of(&nu), shift: dual_map_shift(&nu, nn), nu, value: v });
    }
    let nu0 = vec![0i8; k];
    out.push(Coefficient {
        kind: Kind::A,
        shift: vec![0; nn],
        nu: nu0,
        value: (pref + pref.inv()) * 0.5 - tot,
    });
    Ok(out)
}

/// Single coefficient of the k = N table.
pub fn recurrence_coefficient(n: &[usize], nu: &[i8], al: &AlphaParams) -> Result<Coefficient> {
    let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
    recurrence_table(al.n(), &ni, al)?
        .into_iter()
        .find(|c| c.nu == nu)
        .ok_or_else(|| Error::DegenerateParameter(format!("no coefficient for nu = {nu:?}")))
}

/// D_n^(k) g at n.
pub fn apply_dn<G: Fn(&[i64]) -> C64>(k: usize, g: &G, n: &[i64], al: &AlphaParams) -> Result<C64> {
    let mut tot = ZERO;
    let mut m = vec![0i64; n.len()];
    for c in recurrence_table(k, n, al)? {
        for i in 0..n.len() {
            m[i] = n[i] + c.shift[i];
        }
        tot += c.value * 2.0 * g(&m);
    }
    Ok(tot)
}

/// Eigenvalue of D_n^(k) on Q-hat(n)(z): z_{N+1-k} + 1/z_{N+1-k}.
pub fn dn_eigenvalue(k: usize, z: &[C64]) -> C64 {
    let nn = z.len();
    let w = z[nn - k];
    w + w.inv()
}

/// The explicit N = 1 and N = 2 coefficient tables, used to cross-check
/// `recurrence_table`.
pub fn reference_coefficients(n: &[usize], al: &AlphaParams) -> Result<Vec<Coefficient>> {
    let q = al.q;
    let a = |j: usize| al.a(j);
    let p = |e: i64| qpow(q, e);
    let coef = |kind: Kind, nu: Vec<i8>, shift: Vec<i64>, value: C64| Coefficient {
        kind,
        nu,
        shift,
        value,
    };
    match al.n() {
        1 => {
            let m = n[0] as i64;
            let r20 = a(2) * a(2) / (a(0) * a(0));
            let b = a(1) / (a(2) * a(3)) * 0.5
                * (ONE - a(2) * a(3) * p(2 * m))
                * (ONE - a(2) * a(3) / (a(0) * a(0)) * p(2 * m))
                * (ONE - r20 * p(2 * m - 2))
                * (ONE - a(2) * a(2) / (a(1) * a(1)) * p(2 * m))
                / ((ONE - r20 * p(4 * m - 2)) * (ONE - r20 * p(4 * m)));
            let c = a(2) * a(3) / a(1) * 0.5
                * (ONE - p(2 * m))
                * (ONE - a(2) / a(3) * p(2 * m - 2))
                * (ONE - a(2) / (a(3) * a(0) * a(0)) * p(2 * m - 2))
                * (ONE - a(1) * a(1) / (a(0) * a(0)) * p(2 * m - 2))
                / ((ONE - r20 * p(4 * m - 2)) * (ONE - r20 * p(4 * m - 4)));
            let a0 = a(2) * a(3) / a(1) * 0.5 + a(1) / (a(2) * a(3)) * 0.5 - b - c;
            Ok(vec![
                coef(Kind::B, vec![1], vec![1], b),
                coef(Kind::C, vec![-1], vec![-1], c),
                coef(Kind::A, vec![0], vec![0], a0),
            ])
        }
        2 => {
            let (n1, n2) = (n[0] as i64, n[1] as i64);
            let t = n1 + n2;
            let sq = |x: C64| x * x;
            let a0s = sq(a(0));
            let r30 = sq(a(3)) / a0s;
            let r20 = sq(a(2)) / a0s;
            let pb = a(1) / (a(3) * a(4)) * 0.5;
            let pc = a(3) * a(4) / a(1) * 0.5;
            let lead_b = (ONE - a(3) * a(4) * p(2 * t)) * (ONE - a(3) * a(4) / a0s * p(2 * t));
            let den_b = (ONE - r30 * p(4 * t - 2)) * (ONE - r30 * p(4 * t));
            let lead_c = (ONE - a(3) / (a0s * a(4)) * p(2 * t - 2)) * (ONE - a(3) / a(4) * p(2 * t - 2));
            let den_c = (ONE - r30 * p(4 * t - 2)) * (ONE - r30 * p(4 * t - 4));
            let r02 = a0s / sq(a(2));
            let b10 = pb * lead_b
                * (ONE - r30 * p(4 * n1 + 2 * n2 - 2))
                * (ONE - r30 * p(4 * n1 + 2 * n2))
                * (ONE - r20 * p(2 * n1 - 2))
                * (ONE - sq(a(2)) / sq(a(1)) * p(2 * n1))
                / (den_b * (ONE - r20 * p(4 * n1 - 2)) * (ONE - r20 * p(4 * n1)));
            let bm12 = pb * lead_b
                * (ONE - sq(a(3)) / sq(a(2)) * p(2 * n2))
                * (ONE - sq(a(3)) / sq(a(2)) * p(2 * n2 + 2))
                * (ONE - p(-2 * n1))
                * (ONE - a0s / sq(a(1)) * p(2 - 2 * n1))
                / (den_b * (ONE - r02 * p(2 - 4 * n1)) * (ONE - r02 * p(4 - 4 * n1)));
            let b01 = pb * lead_b * (ONE - r30 * p(2 * t - 2)) * (ONE - sq(a(3)) / sq(a(1)) * p(2 * t))
                / den_b
                - b10
                - bm12;
            let cm10 = pc * lead_c
                * (ONE - r20 * p(4 * n1 + 2 * n2 - 2))
                * (ONE - r20 * p(4 * n1 + 2 * n2 - 4))
                * (ONE - p(2 * n1))
                * (ONE - sq(a(1)) / a0s * p(2 * n1 - 2))
                / (den_c * (ONE - r20 * p(4 * n1 - 2)) * (ONE - r20 * p(4 * n1 - 4)));
            let c1m2 = pc * lead_c
                * (ONE - p(2 * n2))
                * (ONE - p(2 * n2 - 2))
                * (ONE - r02 * p(2 - 2 * n1))
                * (ONE - sq(a(1)) / sq(a(2)) * p(-2 * n1))
                / (den_c * (ONE - r02 * p(2 - 4 * n1)) * (ONE - r02 * p(-4 * n1)));
            let c0m1 = pc * lead_c * (ONE - p(2 * t)) * (ONE - sq(a(1)) / a0s * p(2 * t - 2)) / den_c
                - cm10
                - c1m2;
            let a1m1 = pb
                * (ONE - r20 * p(2 * n1 - 2))
                * (ONE - sq(a(2)) / sq(a(1)) * p(2 * n1))
                * (ONE - a(3) * a(4) * p(2 * n1))
                * (ONE - a(3) * a(4) / a0s * p(2 * n1))
                / ((ONE - r20 * p(4 * n1 - 2)) * (ONE - r20 * p(4 * n1)))
                - b10
                - c1m2;
            let am11 = pc
                * (ONE - p(2 * n1))
                * (ONE - sq(a(1)) / a0s * p(2 * n1 - 2))
                * (ONE - sq(a(2)) / (a0s * a(3) * a(4)) * p(2 * n1 - 2))
                * (ONE - sq(a(2)) / (a(3) * a(4)) * p(2 * n1 - 2))
                / ((ONE - r20 * p(4 * n1 - 2)) * (ONE - r20 * p(4 * n1 - 4)))
                - cm10
                - bm12;
            let a00 = pc + pb - a1m1 - am11 - bm12 - b10 - b01 - c1m2 - cm10 - c0m1;
            Ok(vec![
                coef(Kind::B, vec![1, 1], vec![1, 0], b10),
                coef(Kind::B, vec![1, 0], vec![0, 1], b01),
                coef(Kind::B, vec![1, -1], vec![-1, 2], bm12),
                coef(Kind::C, vec![-1, -1], vec![-1, 0], cm10),
                coef(Kind::C, vec![-1, 0], vec![0, -1], c0m1),
                coef(Kind::C, vec![-1, 1], vec![1, -2], c1m2),
                coef(Kind::A, vec![0, 1], vec![1, -1], a1m1),
                coef(Kind::A, vec![0, -1], vec![-1, 1], am11),
                coef(Kind::A, vec![0, 0], vec![0, 0], a00),
            ])
        }
        other => Err(Error::DegenerateParameter(format!("reference tables exist for N = 1, 2, not {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Dstar,
    Dn,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommuteReport {
    pub max_residual: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Random Laurent polynomial in z.
fn laurent(s: &mut Sampler, nn: usize) -> Vec<(C64, Vec<i32>)> {
    (0..4)
        .map(|_| {
            let e = (0..nn).map(|_| s.index(5) as i32 - 2).collect();
            (s.complex(1.0), e)
        })
        .collect()
}

fn eval_laurent(terms: &[(C64, Vec<i32>)], z: &[C64]) -> C64 {
    terms
        .iter()
        .map(|(c, e)| z.iter().zip(e).fold(*c, |acc, (&zi, &ei)| acc * zi.powi(ei)))
        .sum()
}

/// Residual of [O_k, O_l] on random test functions at random points.
pub fn verify_commuting_family(
    family: Family,
    k: usize,
    l: usize,
    al: &AlphaParams,
    samples: usize,
    s: &mut Sampler,
) -> CommuteReport {
    let nn = al.n();
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for _ in 0..samples {
        let res = match family {
            Family::Dstar => {
                let terms = laurent(s, nn);
                let f = |z: &[C64]| eval_laurent(&terms, z);
                let z = s.points(nn);
                let inner = |i: usize| {
                    move |w: &[C64]| apply_dstar(i, &f, w, al, DstarForm::Cbar).unwrap_or(C64::new(f64::NAN, 0.0))
                };
                let kl = apply_dstar(k, &inner(l), &z, al, DstarForm::Cbar);
                let lk = apply_dstar(l, &inner(k), &z, al, DstarForm::Cbar);
                match (kl, lk) {
                    (Ok(a), Ok(b)) => Some((a - b).norm() / a.norm().max(b.norm()).max(1e-300)),
                    _ => None,
                }
            }
            Family::Dn => {
                let w: Vec<Vec<C64>> = (0..3).map(|_| s.points(nn)).collect();
                let cs: Vec<C64> = (0..3).map(|_| s.complex(1.0)).collect();
                let g = |m: &[i64]| -> C64 {
                    w.iter()
                        .zip(&cs)
                        .map(|(wt, &c)| wt.iter().zip(m).fold(c, |acc, (&b, &e)| acc * b.powi(e as i32)))
                        .sum()
                };
                let n: Vec<i64> = (0..nn).map(|_| 2 + s.index(3) as i64).collect();
                let inner = |i: usize| {
                    move |m: &[i64]| apply_dn(i, &g, m, al).unwrap_or(C64::new(f64::NAN, 0.0))
                };
                let kl = apply_dn(k, &inner(l), &n, al);
                let lk = apply_dn(l, &inner(k), &n, al);
                match (kl, lk) {
                    (Ok(a), Ok(b)) => Some((a - b).norm() / a.norm().max(b.norm()).max(1e-300)),
                    _ => None,
                }
            }
        };
        match res {
            Some(r) if r.is_finite() => worst = worst.max(r),
            _ => skipped += 1,
        }
    }
    CommuteReport { max_residual: worst, samples, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gr_poly::{normalized_qhat, normalized_qhat_signed};
    use crate::qcore::c;

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn signed_index_enumeration() {
        let v = signed_indices(2);
        assert_eq!(v.len(), 9);
        assert_eq!(v[0], vec![-1, -1]);
        assert_eq!(v[4], vec![0, 0]);
        assert_eq!(signed_indices(0), vec![Vec::<i8>::new()]);
    }

    #[test]
    fn one_variable_phi_is_askey_wilson_phi() {
        let mut s = Sampler::new(11);
        let al = s.alphas(1, c(0.7));
        let z = s.points(1)[0];
        let a = &al.alphas;
        let q2 = al.q * al.q;
        let want = (ONE - a[1] * z) * (ONE - a[1] / (a[0] * a[0]) * z) * (ONE - a[2] * a[3] / a[1] * z)
            * (ONE - a[2] / (a[3] * a[1]) * z)
            / ((ONE - z * z) * (ONE - q2 * z * z));
        assert!(rel(phi_nu(&[1], &[z], &al).unwrap(), want) < 1e-14);
        let inv = phi_nu(&[-1], &[z], &al).unwrap();
        assert!(rel(inv, phi_nu(&[1], &[z.inv()], &al).unwrap()) < 1e-14);
        assert!(rel(cbar_coefficient(&[1], &[z], &al).unwrap(), want) < 1e-13);
    }

    #[test]
    fn two_variable_phi11_verbatim() {
        let mut s = Sampler::new(12);
        let al = s.alphas(2, c(0.7));
        let z = s.points(2);
        let a = &al.alphas;
        let q2 = al.q * al.q;
        let (z1, z2) = (z[0], z[1]);
        let want = (ONE - a[1] * z1) * (ONE - a[1] / (a[0] * a[0]) * z1) * (ONE - a[2] / a[1] * z1 * z2)
            * (ONE - q2 * a[2] / a[1] * z1 * z2)
            * (ONE - a[3] * a[4] / a[2] * z2)
            * (ONE - a[3] / (a[4] * a[2]) * z2)
            / ((ONE - z1 * z1) * (ONE - q2 * z1 * z1) * (ONE - z2 * z2) * (ONE - q2 * z2 * z2));
        assert!(rel(phi_nu(&[1, 1], &z, &al).unwrap(), want) < 1e-14);
        let want10 = (ONE - a[1] * z1) * (ONE - a[1] / (a[0] * a[0]) * z1) * (ONE - a[3] * a[4] / a[1] * z1)
            * (ONE - a[3] / (a[4] * a[1]) * z1)
            / ((ONE - z1 * z1) * (ONE - q2 * z1 * z1));
        assert!(rel(phi_nu(&[1, 0], &z, &al).unwrap(), want10) < 1e-14);
    }

    #[test]
    fn b_table_involution_image() {
        let mut s = Sampler::new(13);
        let al = s.alphas(2, c(0.7));
        let z = s.points(2);
        let zz = vec![al.a(0), z[0], z[1], al.a(4)];
        let mut zi = zz.clone();
        zi[1] = zi[1].inv();
        let direct = b_table(1, -1, 1, &zz, &al);
        let image = b_table(1, 1, 1, &zi, &al);
        assert!(rel(direct, image) < 1e-14);
    }

    #[test]
    fn sum_rule_for_cbar() {
        let mut s = Sampler::new(14);
        for nn in 1..=3 {
            let al = s.alphas(nn, c(0.8));
            let z = s.points(nn);
            let q = al.q;
            let mut tot = ZERO;
            for nu in signed_indices(nn) {
                tot += cbar_coefficient(&nu, &z, &al).unwrap();
            }
            let a0 = al.a(0);
            let an1 = al.a(nn + 1);
            tot += an1 * 4.0 / (a0 * (q * q + 1.0)) * xof(a0) * xof(al.a(nn + 2));
            let want = ONE + an1 * an1 / (a0 * a0 * q * q);
            assert!(rel(tot, want) < 1e-11, "N = {nn}");
        }
    }

    #[test]
    fn constant_function() {
        let mut s = Sampler::new(15);
        let al = s.alphas(2, c(0.7));
        let z = s.points(2);
        let one = |_: &[C64]| ONE;
        let want = al.a(0) * al.q / al.a(3) + al.a(3) / (al.a(0) * al.q);
        for form in [DstarForm::Phi, DstarForm::Cbar] {
            assert!(rel(apply_dstar(2, &one, &z, &al, form).unwrap(), want) < 1e-12);
        }
        let n = [1i64, 2];
        let got = apply_dn(2, &|_: &[i64]| ONE, &n, &al).unwrap();
        let dual = al.a(1) / (al.a(3) * al.a(4));
        assert!(rel(got, dual + dual.inv()) < 1e-12);
    }

    #[test]
    fn dstar_eigen_equation() {
        let mut s = Sampler::new(16);
        let al = s.alphas(2, c(0.7));
        let z = s.points(2);
        for n in [[0usize, 0], [1, 0], [1, 2], [2, 1]] {
            let f = |w: &[C64]| normalized_qhat(&n, w, &al).unwrap();
            for k in 1..=2 {
                let lhs = apply_dstar(k, &f, &z, &al, DstarForm::Phi).unwrap();
                let rhs = dstar_eigenvalue(k, &n, &al) * f(&z);
                assert!(rel(lhs, rhs) < 1e-10, "n = {n:?}, k = {k}");
            }
        }
    }

    #[test]
    fn dn_eigen_equation() {
        let mut s = Sampler::new(17);
        let al = s.alphas(2, c(0.7));
        let z = s.points(2);
        let g = |m: &[i64]| normalized_qhat_signed(m, &z, &al).unwrap();
        for n in [[0i64, 0], [1, 0], [0, 2], [2, 1]] {
            for k in 1..=2 {
                let lhs = apply_dn(k, &g, &n, &al).unwrap();
                let rhs = dn_eigenvalue(k, &z) * g(&n);
                assert!(rel(lhs, rhs) < 1e-10, "n = {n:?}, k = {k}");
            }
        }
    }

    #[test]
    fn shift_patterns() {
        assert_eq!(dual_map_shift(&[1, 1], 2), vec![1, 0]);
        assert_eq!(dual_map_shift(&[1, 0], 2), vec![0, 1]);
        assert_eq!(dual_map_shift(&[1, -1], 2), vec![-1, 2]);
        assert_eq!(dual_map_shift(&[-1, 1], 2), vec![1, -2]);
        assert_eq!(dual_map_shift(&[1, 0, 1], 3), vec![1, -1, 1]);
    }

    #[test]
    fn dual_map_on_variables_matches_involution() {
        let mut s = Sampler::new(18);
        let al = s.alphas(3, c(0.7));
        let n = [1usize, 0, 2];
        let via_map = dual_map_z(&[1, 0, 2], &al);
        let via_f = crate::gr_poly::dual_points(&crate::gr_poly::degree_powers(&n, al.q), &al);
        for j in 0..3 {
            assert!(rel(via_map[j], via_f[j]) < 1e-14);
        }
    }

    #[test]
    fn support_has_three_to_the_n_patterns() {
        let mut s = Sampler::new(19);
        let al = s.alphas(3, c(0.7));
        let t = recurrence_table(3, &[1, 1, 1], &al).unwrap();
        assert_eq!(t.len(), 27);
        let mut shifts: Vec<_> = t.iter().map(|c| c.shift.clone()).collect();
        shifts.sort();
        shifts.dedup();
        assert_eq!(shifts.len(), 27);
        for c in &t {
            let d: i64 = c.shift.iter().sum();
            let want = match c.kind {
                Kind::B => 1,
                Kind::C => -1,
                Kind::A => 0,
            };
            assert_eq!(d, want);
        }
    }

    #[test]
    fn reference_tables_agree() {
        let mut s = Sampler::new(20);
        for nn in 1..=2 {
            for _ in 0..10 {
                let al = s.alphas(nn, C64::new(0.7, 0.05));
                let n = s.multi_index(nn, 4);
                let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
                let gen = recurrence_table(nn, &ni, &al).unwrap();
                for r in reference_coefficients(&n, &al).unwrap() {
                    let g = gen.iter().find(|c| c.shift == r.shift).unwrap();
                    assert_eq!(g.kind, r.kind);
                    let scale = gen.iter().map(|c| c.value.norm()).fold(0.0, f64::max);
                    assert!((g.value - r.value).norm() < 1e-10 * scale, "{:?} at {n:?}", r.shift);
                }
            }
        }
    }

    #[test]
    fn reference_factors() {
        let mut s = Sampler::new(21);
        let al = s.alphas(1, c(0.7));
        let c0 = reference_coefficients(&[0], &al).unwrap();
        assert_eq!(c0[1].value, ZERO);
        // b^{[10]} at n_1 = 0 carries (1 - alpha_2^2/alpha_1^2).
        let mut al2 = s.alphas(2, c(0.7));
        al2.alphas[2] = al2.a(1);
        let t = reference_coefficients(&[0, 0], &al2).unwrap();
        assert!(t[0].value.norm() < 1e-14);
    }

    #[test]
    fn commuting_families() {
        let mut s = Sampler::new(22);
        let al = s.alphas(2, c(0.7));
        let r = verify_commuting_family(Family::Dstar, 1, 1, &al, 2, &mut s);
        assert_eq!(r.max_residual, 0.0);
        let r = verify_commuting_family(Family::Dstar, 1, 2, &al, 5, &mut s);
        assert!(r.max_residual < 1e-10, "{r:?}");
        let al3 = s.alphas(3, c(0.7));
        for (k, l) in [(1, 2), (1, 3), (2, 3)] {
            let r = verify_commuting_family(Family::Dn, k, l, &al3, 3, &mut s);
            assert!(r.max_residual < 1e-10, "{k} {l}: {r:?}");
        }
    }

    #[test]
    fn appendix_b_images() {
        // b-images of the B-table entries against closed forms.
        let mut s = Sampler::new(23);
        let al = s.alphas(3, c(0.7));
        let n = [2usize, 1, 3];
        let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
        let ba = dual_alphas(&al);
        let bz = dual_map_z(&ni, &al);
        let nn = 3;
        let mut zz = vec![ba.a(0)];
        zz.extend_from_slice(&bz);
        zz.push(ba.a(nn + 2));
        let q = al.q;
        let p = |e: i64| qpow(q, e);
        let a = |j: usize| al.a(j);
        let sq = |x: C64| x * x;
        let s_ = crate::gr_poly::partial_sums(&n);
        for k in 1..nn {
            let m = n[nn - k] as i64;
            let ss = s_[nn - k] as i64;
            let (a2, a1, a0) = (sq(a(nn + 2 - k)), sq(a(nn + 1 - k)), sq(a(0)));
            let forms = [
                ((0, 1), (ONE - a2 / a0 * p(4 * ss + 2 * m - 2)) * (ONE - p(-2 * m))),
                ((1, 0), (ONE - a2 / a0 * p(4 * ss + 2 * m - 2)) * (ONE - a2 / a1 * p(2 * m))),
                ((0, -1), (ONE - a2 / a1 * p(2 * m)) * (ONE - a0 / a1 * p(-4 * ss - 2 * m + 2))),
                ((-1, 0), (ONE - p(-2 * m)) * (ONE - a0 / a1 * p(-4 * ss - 2 * m + 2))),
                ((1, -1), (ONE - a2 / a1 * p(2 * m)) * (ONE - a2 / a1 * p(2 * m + 2))),
                ((-1, 1), (ONE - p(-2 * m)) * (ONE - p(-2 * m + 2))),
            ];
            for ((x, y), want) in forms {
                let got = b_table(k, x, y, &zz, &ba);
                assert!((got - want).norm() < 1e-12 * want.norm().max(1.0), "k={k} ({x},{y})");
            }
        }
        let tn = s_[nn] as i64;
        let b0 = b_table(0, 0, 1, &zz, &ba);
        let w = (ONE - a(nn + 1) * a(nn + 2) * p(2 * tn)) * (ONE - a(nn + 1) * a(nn + 2) / sq(a(0)) * p(2 * tn));
        assert!((b0 - w).norm() < 1e-12 * w.norm().max(1.0));
        let b0m = b_table(0, 0, -1, &zz, &ba);
        let w = (ONE - a(nn + 2) * sq(a(0)) / a(nn + 1) * p(-2 * tn + 2)) * (ONE - a(nn + 2) / a(nn + 1) * p(-2 * tn + 2));
        assert!((b0m - w).norm() < 1e-12 * w.norm().max(1.0));
        let bn = b_table(nn, 1, 0, &zz, &ba);
        let w = (ONE - sq(a(2)) / sq(a(0)) * p(2 * n[0] as i64 - 2)) * (ONE - sq(a(2)) / sq(a(1)) * p(2 * n[0] as i64));
        assert!((bn - w).norm() < 1e-12 * w.norm().max(1.0));
        let bnm = b_table(nn, -1, 0, &zz, &ba);
        let w = (ONE - p(-2 * n[0] as i64)) * (ONE - sq(a(0)) / sq(a(1)) * p(-2 * n[0] as i64 + 2));
        assert!((bnm - w).norm() < 1e-12 * w.norm().max(1.0));
    }
}
