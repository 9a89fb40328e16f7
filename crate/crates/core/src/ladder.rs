//! Raising and lowering operators B+-(k) built from W_0 and the projectors
//! onto eigenspaces of the commuting family, evaluated on the q-lattice
//! through the ambient point.

use crate::error::{Error, Result};
use crate::gr_poly::{normalized_qhat, normalized_qhat_signed, xof, AlphaParams};
use crate::qcore::{qpow, C64, ZERO};
use crate::qdiff_ops::{dstar_stencil, level_params, recurrence_table};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};

/// theta*_l at the degrees m: (A q^{-2S} + q^{2S}/A)/2, A = alpha_0 q/alpha_{l+1}, S = m_1+..+m_l.
pub fn level_theta(l: usize, m: &[i64], al: &AlphaParams) -> C64 {
    let a = al.a(0) * al.q / al.a(l + 1);
    let s: i64 = m[..l].iter().sum();
    let p = qpow(al.q, 2 * s);
    (a / p + p / a) * 0.5
}

fn lattice_point(z0: &[C64], m: &[i32], q: C64) -> Vec<C64> {
    z0.iter().zip(m).map(|(&z, &e)| z * qpow(q, 2 * e as i64)).collect()
}

/// (level, theta) of each projector (W_1^(l) - theta), applied in order.
fn stages(sign: i64, k: usize, n: &[i64], al: &AlphaParams) -> Result<(Vec<(usize, C64)>, C64)> {
    let e = |l: usize, s: i64| {
        let mut v = n.to_vec();
        v[l - 1] += s;
        v
    };
    let th = |l: usize, m: &[i64]| level_theta(l, m, al);
    let tol = al.policy.degeneracy_threshold;
    let gap = |v: C64, l: usize| if v.norm() < tol { Err(Error::DegenerateGap(l)) } else { Ok(v) };
    let up = th(k, &e(k, sign));
    let mut st = vec![(k, th(k, &e(k, -sign))), (k, th(k, n))];
    let mut den = gap(up - th(k, &e(k, -sign)), k)? * gap(up - th(k, n), k)?;
    for l in 1..k {
        let here = th(l, n);
        let p = th(l, &e(l, 1));
        let m = th(l, &e(l, -1));
        st.push((l, p));
        st.push((l, m));
        den *= gap(here - p, l)? * gap(here - m, l)?;
    }
    Ok((st, den))
}

/// B+-(k) f at z for the degrees n, with W_0 acting as multiplication by x_1.
pub fn apply_bpm<F: Fn(&[C64]) -> C64>(
    sign: i8,
    k: usize,
    n: &[usize],
    f: &F,
    z: &[C64],
    al: &AlphaParams,
) -> Result<C64> {
    let nn = al.n();
    if k == 0 || k > nn || n.len() != nn || z.len() != nn {
        return Err(Error::DegenerateParameter(format!("ladder level {k} with N = {nn}")));
    }
    let s = if sign >= 0 { 1 } else { -1 };
    let ni: Vec<i64> = n.iter().map(|&v| v as i64).collect();
    let (st, den) = stages(s, k, &ni, al)?;
    let q = al.q;

    // Lattice offsets needed by each stage, innermost first.
    let mut needed: Vec<BTreeSet<Vec<i32>>> = vec![BTreeSet::from([vec![0; nn]])];
    for &(l, _) in st.iter().rev() {
        let mut next = BTreeSet::new();
        for m in needed.last().unwrap() {
            for nu in crate::qdiff_ops::signed_indices(l) {
                let mut w = m.clone();
                for i in 0..l {
                    w[i] += nu[i] as i32;
                }
                next.insert(w);
            }
        }
        needed.push(next);
    }
    needed.reverse();

    let mut vals: HashMap<Vec<i32>, C64> = needed[0]
        .iter()
        .map(|m| {
            let zm = lattice_point(z, m, q);
            (m.clone(), xof(zm[0]) * f(&zm))
        })
        .collect();
    for (stage, &(l, th)) in st.iter().enumerate() {
        let mut next = HashMap::with_capacity(needed[stage + 1].len());
        for m in &needed[stage + 1] {
            let zm = lattice_point(z, m, q);
            let mut acc = ZERO;
            for (nu, w) in dstar_stencil(l, &zm, al)? {
                let mut t = m.clone();
                for i in 0..l {
                    t[i] += nu[i] as i32;
                }
                acc += w * vals[&t];
            }
            next.insert(m.clone(), acc * 0.5 - th * vals[m]);
        }
        vals = next;
    }
    Ok(vals[&vec![0; nn]] / den)
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    pub k: usize,
    pub n: Vec<usize>,
    /// Relative residual of B+ Q-hat(n) = b Q-hat(n + e_k).
    pub raise: f64,
    /// Relative residual of the lowering identity, or the absolute size of
    /// B- Q-hat(n) when n_k = 0.
    pub lower: f64,
    pub raise_coefficient: C64,
}

/// The k-variable instance at the ambient point z: parameters
/// (alpha_0..alpha_{k+1}, z_{k+1}) and the first k variables.
pub fn level_instance(k: usize, z: &[C64], al: &AlphaParams) -> (AlphaParams, Vec<C64>) {
    if k == al.n() {
        (al.clone(), z.to_vec())
    } else {
        (level_params(k, z, al), z[..k].to_vec())
    }
}

/// Both ladder identities at the points given, on the k-variable instance.
pub fn verify_ladder(k: usize, n: &[usize], al: &AlphaParams, points: &[Vec<C64>]) -> Result<LadderReport> {
    let mut raise: f64 = 0.0;
    let mut lower: f64 = 0.0;
    let mut coef = ZERO;
    for z in points {
        let (alk, zk) = level_instance(k, z, al);
        let nk = &n[..k];
        let f = |w: &[C64]| normalized_qhat(nk, w, &alk).unwrap_or(C64::new(f64::NAN, 0.0));
        let nik: Vec<i64> = nk.iter().map(|&v| v as i64).collect();
        let table = recurrence_table(k, &nik, &alk)?;
        let find = |s: i64| {
            let mut e = vec![0i64; k];
            e[k - 1] = s;
            table.iter().find(|c| c.shift == e).map(|c| c.value).unwrap()
        };
        for sign in [1i8, -1] {
            let b = apply_bpm(sign, k, nk, &f, &zk, &alk)?;
            let c = find(sign as i64);
            let mut target = nik.clone();
            target[k - 1] += sign as i64;
            let rhs = c * normalized_qhat_signed(&target, &zk, &alk)?;
            let r = if target[k - 1] < 0 { b.norm() } else { (b - rhs).norm() / rhs.norm() };
            if !r.is_finite() {
                return Err(Error::DegenerateParameter(format!("non-finite ladder residual at n = {n:?}")));
            }
            if sign > 0 {
                raise = raise.max(r);
                coef = c;
            } else {
                lower = lower.max(r);
            }
        }
    }
    Ok(LadderReport { k, n: n.to_vec(), raise, lower, raise_coefficient: coef })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::c;
    use crate::qdiff_ops::{apply_dstar, DstarForm};
    use crate::sample::Sampler;

    fn points(s: &mut Sampler, nn: usize, count: usize) -> Vec<Vec<C64>> {
        (0..count).map(|_| s.arc_points(nn, 0.5, 2.6)).collect()
    }

    #[test]
    fn one_variable() {
        let mut s = Sampler::new(30);
        let al = s.alphas_near_unit(1, c(0.7));
        let pts = points(&mut s, 1, 3);
        for n in 0..4 {
            let r = verify_ladder(1, &[n], &al, &pts).unwrap();
            assert!(r.raise < 1e-9 && r.lower < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn two_variables() {
        let mut s = Sampler::new(31);
        let al = s.alphas_near_unit(2, c(0.7));
        let pts = points(&mut s, 2, 2);
        for n in [[0usize, 0], [1, 0], [0, 1], [1, 1], [2, 1]] {
            for k in 1..=2 {
                let r = verify_ladder(k, &n, &al, &pts).unwrap();
                assert!(r.raise < 1e-8 && r.lower < 1e-8, "{r:?}");
            }
        }
    }

    #[test]
    fn lowering_at_zero_degree_vanishes() {
        let mut s = Sampler::new(32);
        let al = s.alphas_near_unit(2, c(0.7));
        let pts = points(&mut s, 2, 2);
        let r = verify_ladder(2, &[1, 0], &al, &pts).unwrap();
        assert!(r.lower < 1e-10, "{r:?}");
    }

    #[test]
    fn raising_coefficient_is_w0_entry() {
        let mut s = Sampler::new(33);
        let al = s.alphas_near_unit(2, c(0.7));
        let pts = points(&mut s, 2, 1);
        let r = verify_ladder(2, &[1, 1], &al, &pts).unwrap();
        let b = crate::qdiff_ops::recurrence_coefficient(&[1, 1], &[1, 0], &al).unwrap();
        assert_eq!(b.shift, vec![0, 1]);
        assert!((b.value - r.raise_coefficient).norm() < 1e-14);
    }

    #[test]
    fn projector_annihilates() {
        let mut s = Sampler::new(34);
        let al = s.alphas_near_unit(2, c(0.7));
        let z = s.arc_points(2, 0.5, 2.6);
        let n = [1usize, 2];
        let f = |w: &[C64]| normalized_qhat(&n, w, &al).unwrap();
        for l in 1..=2 {
            let d = apply_dstar(l, &f, &z, &al, DstarForm::Cbar).unwrap();
            let ni = [1i64, 2];
            let th = level_theta(l, &ni, &al);
            assert!((d * 0.5 - th * f(&z)).norm() < 1e-10 * f(&z).norm());
        }
    }

    #[test]
    fn degenerate_gap() {
        let mut s = Sampler::new(35);
        let mut al = s.alphas_near_unit(1, c(0.7));
        // theta_1 at degrees -1 and 1 coincide when A^2 = 1.
        al.alphas[2] = al.a(0) * al.q;
        let f = |_: &[C64]| C64::new(1.0, 0.0);
        assert!(matches!(
            apply_bpm(1, 1, &[0], &f, &[C64::new(0.3, 0.9)], &al),
            Err(Error::DegenerateGap(1))
        ));
    }
}
