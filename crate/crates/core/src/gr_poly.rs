//! Askey-Wilson and Gasper-Rahman polynomials, their normalization, the
//! discrete-support restriction and the duality involution.

use crate::error::{Error, Result};
use crate::qcore::{qpochhammer, qpow, NumericPolicy, C64, ONE, ZERO};
use serde::{Deserialize, Serialize};

/// The N+3 parameters alpha_0..alpha_{N+2} with the deformation q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams {
    pub alphas: Vec<C64>,
    pub q: C64,
    #[serde(skip)]
    pub policy: NumericPolicy,
}

impl AlphaParams {
    pub fn new(alphas: Vec<C64>, q: C64) -> Result<Self> {
        Self::with_policy(alphas, q, NumericPolicy::default())
    }

    pub fn with_policy(alphas: Vec<C64>, q: C64, policy: NumericPolicy) -> Result<Self> {
        if alphas.len() < 4 {
            return Err(Error::DegenerateParameter(format!(
                "need at least 4 alphas, got {}",
                alphas.len()
            )));
        }
        if let Some(j) = alphas.iter().position(|a| a.norm() == 0.0 || !a.is_finite()) {
            return Err(Error::DegenerateParameter(format!("alpha_{j} must be nonzero")));
        }
        if q.norm() == 0.0 {
            return Err(Error::DegenerateParameter("q = 0".into()));
        }
        Ok(AlphaParams { alphas, q, policy })
    }

    /// Number of variables N.
    pub fn n(&self) -> usize {
        self.alphas.len() - 3
    }

    #[inline]
    pub fn a(&self, j: usize) -> C64 {
        self.alphas[j]
    }
}

/// Partial sums S[k] = n_1 + ... + n_k with S[0] = 0.
pub fn partial_sums(n: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(n.len() + 1);
    s.push(0);
    for &v in n {
        s.push(s.last().unwrap() + v);
    }
    s
}

#[inline]
pub fn xof(z: C64) -> C64 {
    (z + z.inv()) * 0.5
}

/// Askey-Wilson p_n(x; a, b, c, d | q) with x = (z + 1/z)/2.
pub fn askey_wilson_p(
    n: usize,
    z: C64,
    abcd: [C64; 4],
    q: C64,
    policy: &NumericPolicy,
) -> Result<C64> {
    let [a, b, c, d] = abcd;
    if n == 0 {
        return Ok(ONE);
    }
    // (ab, ac, ad; q)_n is absorbed into each term, so ab, ac or ad on
    // q^{-k} (equal spins on the grid) is not a pole.
    let num = [qpow(q, -(n as i64)), a * b * c * d * qpow(q, n as i64 - 1), a * z, a / z];
    let mut sum = ZERO;
    let mut head = ONE;
    let mut qk = ONE;
    for k in 0..=n {
        let tail = qpochhammer(a * b * qk, q, n - k) * qpochhammer(a * c * qk, q, n - k) * qpochhammer(a * d * qk, q, n - k);
        sum += head * tail;
        if k == n {
            break;
        }
        let f = ONE - qk * q;
        if f.norm() < policy.degeneracy_threshold {
            return Err(Error::DegenerateDenominator { term: k, modulus: f.norm() });
        }
        head *= num.iter().map(|&x| ONE - x * qk).product::<C64>() * q / f;
        qk *= q;
    }
    Ok(sum / a.powu(n as u32))
}

/// Gasper-Rahman Q^(N)(n; x; alpha), a product of base-q^2 Askey-Wilson factors.
pub fn gasper_rahman_q(n: &[usize], z: &[C64], al: &AlphaParams) -> Result<C64> {
    let nn = al.n();
    check_arity(n.len(), z.len(), nn)?;
    let q2 = al.q * al.q;
    let a0sq = al.a(0) * al.a(0);
    let mut r = ONE;
    let mut s = 0usize;
    for j in 1..=nn {
        let zn = if j < nn { z[j] } else { al.a(nn + 2) };
        let shift = q2.powu(s as u32);
        let ratio = al.a(j + 1) / al.a(j);
        let abcd = [al.a(j) * shift, al.a(j) / a0sq * shift, ratio * zn, ratio / zn];
        r *= askey_wilson_p(n[j - 1], z[j - 1], abcd, q2, &al.policy)?;
        s += n[j - 1];
    }
    Ok(r)
}

fn check_arity(n: usize, z: usize, nn: usize) -> Result<()> {
    if n != nn {
        return Err(Error::DimensionMismatch(n, nn));
    }
    if z != nn {
        return Err(Error::DimensionMismatch(z, nn));
    }
    Ok(())
}

/// Factor turning Q into Q-hat.
pub fn qhat_prefactor(n: &[usize], al: &AlphaParams) -> Result<C64> {
    let nn = al.n();
    let q2 = al.q * al.q;
    let total: usize = n.iter().sum();
    let a = al.a(nn + 1) * al.a(nn + 2);
    let a0sq = al.a(0) * al.a(0);
    let mut den = qpochhammer(a, q2, total) * qpochhammer(a / a0sq, q2, total);
    for j in 1..=nn {
        let r = al.a(j + 1) / al.a(j);
        den *= al.a(j).powu(n[j - 1] as u32) * qpochhammer(r * r, q2, n[j - 1]);
    }
    if den.norm() < al.policy.degeneracy_threshold * a.norm().powi(total as i32).max(1e-300) {
        return Err(Error::DegeneratePrefactor(format!("Q-hat normalization at n = {n:?}")));
    }
    Ok(a.powu(total as u32) / den)
}

/// Normalized polynomial Q-hat^(N).
pub fn normalized_qhat(n: &[usize], z: &[C64], al: &AlphaParams) -> Result<C64> {
    Ok(qhat_prefactor(n, al)? * gasper_rahman_q(n, z, al)?)
}

/// Like `normalized_qhat` but returns 0 for an index with a negative entry.
pub fn normalized_qhat_signed(n: &[i64], z: &[C64], al: &AlphaParams) -> Result<C64> {
    if n.iter().any(|&v| v < 0) {
        return Ok(ZERO);
    }
    let nu: Vec<usize> = n.iter().map(|&v| v as usize).collect();
    normalized_qhat(&nu, z, al)
}

/// Image of (n, z, alpha) under the duality involution.
#[derive(Debug, Clone)]
pub struct DualImage {
    /// q^(2 n~_j) for j = 1..N.
    pub n_pow: Vec<C64>,
    pub z: Vec<C64>,
    pub alpha: AlphaParams,
}

/// Dual parameters alpha~ (the involution on alphas, q included).
pub fn dual_alphas(al: &AlphaParams) -> AlphaParams {
    let nn = al.n();
    let q = al.q;
    let a0 = al.a(0);
    let top = a0 * al.a(nn + 1) * al.a(nn + 2) * q;
    let mut out = Vec::with_capacity(nn + 3);
    out.push(a0);
    for j in 1..=nn + 1 {
        out.push(top / al.a(nn + 2 - j));
    }
    out.push(al.a(1) / (a0 * q));
    AlphaParams { alphas: out, q, policy: al.policy }
}

/// Dual variables z~_j = alpha_{N+2-j}/(alpha_0 q) * prod_{i <= N+1-j} q^(2 n_i),
/// with the degrees given as q-powers u_i = q^(2 n_i).
pub fn dual_points(n_pow: &[C64], al: &AlphaParams) -> Vec<C64> {
    let nn = al.n();
    let mut prod = vec![ONE; nn + 1];
    for i in 0..nn {
        prod[i + 1] = prod[i] * n_pow[i];
    }
    (1..=nn)
        .map(|j| al.a(nn + 2 - j) / (al.a(0) * al.q) * prod[nn + 1 - j])
        .collect()
}

/// The involution f on (n, z, alpha).
pub fn involution_f(n_pow: &[C64], z: &[C64], al: &AlphaParams) -> Result<DualImage> {
    let nn = al.n();
    check_arity(n_pow.len(), z.len(), nn)?;
    let zz = |k: usize| if k == nn + 1 { al.a(nn + 2) } else { z[k - 1] };
    let n_pow_dual: Vec<C64> = (1..=nn)
        .map(|j| al.a(nn + 1 - j) * zz(nn + 1 - j) / (al.a(nn + 2 - j) * zz(nn + 2 - j)))
        .collect();
    Ok(DualImage { n_pow: n_pow_dual, z: dual_points(n_pow, al), alpha: dual_alphas(al) })
}

/// q^(2n) for integer degrees.
pub fn degree_powers(n: &[usize], q: C64) -> Vec<C64> {
    n.iter().map(|&v| (q * q).powu(v as u32)).collect()
}

/// Recover natural m from u = q^(2m), m <= max_m.
pub fn recover_degrees(u: &[C64], q: C64, tol: f64, max_m: usize) -> Result<Vec<usize>> {
    let q2 = q * q;
    u.iter()
        .map(|&v| {
            let mut p = ONE;
            for m in 0..=max_m {
                if (v - p).norm() <= tol * v.norm().max(1.0) {
                    return Ok(m);
                }
                p *= q2;
            }
            Err(Error::NonIntegerDualIndex(format!("{v}")))
        })
        .collect()
}

/// Discrete support point z_k = alpha_{N+1} alpha_{N+2}/alpha_k q^(2 N~_{N+1-k}).
pub fn grid_point(nt: &[usize], al: &AlphaParams) -> Vec<C64> {
    let nn = al.n();
    let s = partial_sums(nt);
    let q2 = al.q * al.q;
    let top = al.a(nn + 1) * al.a(nn + 2);
    (1..=nn).map(|k| top / al.a(k) * q2.powu(s[nn + 1 - k] as u32)).collect()
}

/// Q-tilde(n, n~): Q-hat evaluated on the discrete support.
pub fn restricted_qtilde(n: &[usize], nt: &[usize], al: &AlphaParams) -> Result<C64> {
    let z = grid_point(nt, al);
    for (k, zk) in z.iter().enumerate() {
        let d = (ONE - zk * zk).norm();
        if d < al.policy.degeneracy_threshold {
            return Err(Error::DegenerateGridPoint(format!("z_{} = {zk}", k + 1)));
        }
    }
    normalized_qhat(n, &z, al)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::c;
    use crate::sample::Sampler;
    use proptest::prelude::*;

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn degree_zero_is_one() {
        let mut s = Sampler::new(1);
        let al = s.alphas(2, c(0.7));
        let z = s.points(2);
        assert_eq!(gasper_rahman_q(&[0, 0], &z, &al).unwrap(), ONE);
        assert_eq!(normalized_qhat(&[0, 0], &z, &al).unwrap(), ONE);
        assert_eq!(restricted_qtilde(&[0, 0], &[1, 0], &al).unwrap(), ONE);
    }

    #[test]
    fn one_variable_reduces_to_askey_wilson() {
        let mut s = Sampler::new(2);
        let al = s.alphas(1, c(0.8));
        let z = s.points(1);
        let q2 = al.q * al.q;
        let a = al.alphas.clone();
        let abcd = [a[1], a[1] / (a[0] * a[0]), a[2] * a[3] / a[1], a[2] / (a[1] * a[3])];
        for n in 0..5 {
            let want = askey_wilson_p(n, z[0], abcd, q2, &al.policy).unwrap();
            let got = gasper_rahman_q(&[n], &z, &al).unwrap();
            assert!(rel(got, want) < 1e-13);
        }
    }

    #[test]
    fn askey_wilson_degree_one_by_hand() {
        // p_1 = (ab,ac,ad;q)_1/a * (1 + (1-q^-1)(1-abcd)(1-az)(1-a/z) q / ((1-q)(1-ab)(1-ac)(1-ad)))
        let q = c(0.6);
        let (a, b, cc, d) = (C64::new(0.3, 0.2), c(-0.4), C64::new(0.5, -0.1), c(0.9));
        let z = C64::from_polar(1.0, 0.7);
        let direct = (ONE - a * b) * (ONE - a * cc) * (ONE - a * d) / a
            + (ONE - q.inv()) * (ONE - a * b * cc * d) * (ONE - a * z) * (ONE - a / z) * q
                / ((ONE - q) * a);
        let got = askey_wilson_p(1, z, [a, b, cc, d], q, &NumericPolicy::default()).unwrap();
        assert!(rel(got, direct) < 1e-14);
    }

    #[test]
    fn two_variable_factorization() {
        let mut s = Sampler::new(3);
        let al = s.alphas(2, c(0.7));
        let z = s.points(2);
        let a = &al.alphas;
        let q2 = al.q * al.q;
        let p = NumericPolicy::default();
        let f1 = askey_wilson_p(
            1,
            z[0],
            [a[1], a[1] / (a[0] * a[0]), a[2] / a[1] * z[1], a[2] / (a[1] * z[1])],
            q2,
            &p,
        )
        .unwrap();
        let f2 = askey_wilson_p(
            1,
            z[1],
            [a[2] * q2, a[2] / (a[0] * a[0]) * q2, a[3] / a[2] * a[4], a[3] / (a[2] * a[4])],
            q2,
            &p,
        )
        .unwrap();
        let got = gasper_rahman_q(&[1, 1], &z, &al).unwrap();
        assert!(rel(got, f1 * f2) < 1e-13);
    }

    #[test]
    fn prefactor_at_total_degree_one() {
        let mut s = Sampler::new(4);
        let al = s.alphas(2, c(0.7));
        let a = &al.alphas;
        let q2 = al.q * al.q;
        let big = a[3] * a[4];
        let want = big
            / ((ONE - big) * (ONE - big / (a[0] * a[0])) * a[2] * (ONE - a[3] * a[3] / (a[2] * a[2])));
        let got = qhat_prefactor(&[0, 1], &al).unwrap();
        assert!(rel(got, want) < 1e-14);
        let _ = q2;
    }

    #[test]
    fn involution_squares_to_identity() {
        let mut s = Sampler::new(5);
        for nn in 1..=3 {
            let al = s.alphas(nn, C64::new(0.7, 0.1));
            let z = s.points(nn);
            let u: Vec<C64> = (0..nn).map(|_| s.unit()).collect();
            let once = involution_f(&u, &z, &al).unwrap();
            let twice = involution_f(&once.n_pow, &once.z, &once.alpha).unwrap();
            assert_eq!(once.alpha.a(0), al.a(0));
            for j in 0..nn + 3 {
                assert!(rel(twice.alpha.a(j), al.a(j)) < 1e-13);
            }
            for j in 0..nn {
                assert!(rel(twice.z[j], z[j]) < 1e-13);
                assert!(rel(twice.n_pow[j], u[j]) < 1e-13);
            }
        }
    }

    #[test]
    fn dual_degrees_on_grid_are_natural() {
        let mut s = Sampler::new(6);
        let al = s.alphas(3, c(0.7));
        let nt = [2, 0, 1];
        let z = grid_point(&nt, &al);
        let im = involution_f(&degree_powers(&[1, 1, 0], al.q), &z, &al).unwrap();
        assert_eq!(recover_degrees(&im.n_pow, al.q, 1e-10, 32).unwrap(), nt.to_vec());
        assert!(recover_degrees(&[c(0.123)], al.q, 1e-10, 32).is_err());
    }

    #[test]
    fn polynomial_in_each_x() {
        let mut s = Sampler::new(7);
        let al = s.alphas(3, c(0.7));
        let z = s.points(3);
        let base = normalized_qhat(&[1, 2, 1], &z, &al).unwrap();
        for j in 0..3 {
            let mut w = z.clone();
            w[j] = w[j].inv();
            let v = normalized_qhat(&[1, 2, 1], &w, &al).unwrap();
            assert!(rel(v, base) < 1e-11);
        }
    }

    #[test]
    fn total_degree_grading() {
        // Along z_j = t e^{i phi_j} with t large, Q-hat grows like t^{N_N}.
        let mut s = Sampler::new(8);
        let al = s.alphas(2, c(0.7));
        let phases = [0.4, 1.1];
        for n in [[1usize, 0], [0, 1], [2, 1], [1, 2]] {
            let at = |t: f64| {
                let z: Vec<C64> = phases.iter().map(|&p| C64::from_polar(t, p)).collect();
                normalized_qhat(&n, &z, &al).unwrap()
            };
            let (t1, t2) = (1e3, 2e3);
            let slope = (at(t2).norm() / at(t1).norm()).ln() / 2f64.ln();
            let deg = (n[0] + n[1]) as f64;
            assert!((slope - deg).abs() < 1e-2, "n = {n:?}, slope {slope}");
        }
    }

    #[test]
    fn restricted_matches_direct_substitution() {
        let mut s = Sampler::new(9);
        let al = s.alphas(2, c(0.7));
        let nt = [0, 0];
        let z: Vec<C64> = (1..=2)
            .map(|k| al.a(3) * al.a(4) / al.a(k))
            .collect();
        let want = qhat_prefactor(&[1, 0], &al).unwrap() * gasper_rahman_q(&[1, 0], &z, &al).unwrap();
        let got = restricted_qtilde(&[1, 0], &nt, &al).unwrap();
        assert!(rel(got, want) < 1e-14);
    }

    #[test]
    fn duality_on_discrete_support() {
        let mut s = Sampler::new(10);
        for nn in 1..=3 {
            let al = s.alphas(nn, c(0.7));
            let dual = dual_alphas(&al);
            for n in [vec![1; nn], vec![0; nn]] {
                let nt: Vec<usize> = (0..nn).map(|i| (i + 1) % 3).collect();
                let a = restricted_qtilde(&n, &nt, &al).unwrap();
                let b = restricted_qtilde(&nt, &n, &dual).unwrap();
                assert!(rel(a, b) < 1e-10, "{a} vs {b}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn invariant_under_inversion(seed in 0u64..10_000, n in 0usize..5) {
            let mut s = Sampler::new(seed);
            let al = s.alphas(1, c(0.75));
            let z = s.points(1);
            let a = askey_wilson_p(n, z[0], [al.a(0), al.a(1), al.a(2), al.a(3)], al.q, &al.policy);
            let b = askey_wilson_p(n, z[0].inv(), [al.a(0), al.a(1), al.a(2), al.a(3)], al.q, &al.policy);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!(rel(a, b) < 1e-9);
            }
        }
    }
}
