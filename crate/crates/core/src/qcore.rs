//! Scalar kernels: q-shifted factorials, terminating basic and ordinary
//! hypergeometric sums, and the numeric policy shared by everything else.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Tolerances and guards used by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericPolicy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// (a;q)_inf stops once |q|^K and |a q^K| drop below this.
    pub infinite_product_cutoff: f64,
    /// Smallest admissible modulus of a denominator factor.
    pub degeneracy_threshold: f64,
    pub rng_seed: u64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            infinite_product_cutoff: 1e-16,
            degeneracy_threshold: 1e-8,
            rng_seed: 0,
        }
    }
}

impl NumericPolicy {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("infinite_product_cutoff", self.infinite_product_cutoff),
            ("degeneracy_threshold", self.degeneracy_threshold),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.degeneracy_threshold <= self.abs_tol {
            return Err(Error::Config(
                "degeneracy_threshold must exceed abs_tol".into(),
            ));
        }
        Ok(())
    }
}

/// The deformation parameter, checked against roots of unity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QScalar {
    pub q: C64,
}

impl QScalar {
    pub fn new(q: C64, policy: &NumericPolicy, m_check: usize) -> Result<Self> {
        if q.norm() == 0.0 {
            return Err(Error::DegenerateParameter("q = 0".into()));
        }
        let mut p = ONE;
        for m in 1..=m_check {
            p *= q;
            if (p - ONE).norm() <= policy.degeneracy_threshold {
                return Err(Error::DegenerateParameter(format!(
                    "q is a root of unity of order {m}"
                )));
            }
        }
        Ok(QScalar { q })
    }
}

/// (a; q)_n for finite n.
pub fn qpochhammer(a: C64, q: C64, n: usize) -> C64 {
    let mut r = ONE;
    let mut t = a;
    for _ in 0..n {
        r *= ONE - t;
        t *= q;
    }
    r
}

/// (a; q)_inf truncated per policy.
pub fn qpochhammer_inf(a: C64, q: C64, policy: &NumericPolicy) -> Result<C64> {
    let qn = q.norm();
    if qn >= 1.0 {
        return Err(Error::NonConvergent(qn));
    }
    let cut = policy.infinite_product_cutoff;
    let mut r = ONE;
    let mut t = a;
    let mut qk = 1.0;
    while qk >= cut || t.norm() >= cut {
        r *= ONE - t;
        t *= q;
        qk *= qn;
    }
    Ok(r)
}

/// (a_1, ..., a_k; q)_n.
pub fn qpochhammer_multi(a: &[C64], q: C64, n: usize) -> C64 {
    a.iter().map(|&x| qpochhammer(x, q, n)).product()
}

/// Terminating r+1 phi r with an explicit termination index `n`.
/// Sums `n + 1` terms by incremental ratios.
pub fn phi_terminating(
    num: &[C64],
    den: &[C64],
    q: C64,
    z: C64,
    n: usize,
    policy: &NumericPolicy,
) -> Result<C64> {
    let mut sum = ZERO;
    let mut term = ONE;
    let mut qk = ONE;
    for k in 0..=n {
        sum += term;
        if k == n {
            break;
        }
        let mut r = z;
        for &a in num {
            r *= ONE - a * qk;
        }
        for &b in den {
            let f = ONE - b * qk;
            if f.norm() < policy.degeneracy_threshold {
                return Err(Error::DegenerateDenominator { term: k, modulus: f.norm() });
            }
            r /= f;
        }
        let f = ONE - qk * q;
        if f.norm() < policy.degeneracy_threshold {
            return Err(Error::DegenerateDenominator { term: k, modulus: f.norm() });
        }
        r /= f;
        term *= r;
        qk *= q;
    }
    Ok(sum)
}

/// 4phi3 [num; den; q, z], terminating after `n + 1` terms.
pub fn phi43_terminating(
    num: [C64; 4],
    den: [C64; 3],
    q: C64,
    z: C64,
    n: usize,
    policy: &NumericPolicy,
) -> Result<C64> {
    phi_terminating(&num, &den, q, z, n, policy)
}

/// Rising factorial (y)_n.
pub fn pochhammer(y: C64, n: usize) -> C64 {
    (0..n).fold(ONE, |acc, k| acc * (y + k as f64))
}

pub fn pochhammer_f64(y: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (y + k as f64))
}

/// Terminating pFq with an explicit termination index `n`.
pub fn hypergeometric_terminating(
    num: &[C64],
    den: &[C64],
    z: C64,
    n: usize,
    policy: &NumericPolicy,
) -> Result<C64> {
    let mut sum = ZERO;
    let mut term = ONE;
    for k in 0..=n {
        sum += term;
        if k == n {
            break;
        }
        let kf = k as f64;
        let mut r = z / (kf + 1.0);
        for &a in num {
            r *= a + kf;
        }
        for &b in den {
            let f = b + kf;
            if f.norm() < policy.degeneracy_threshold {
                return Err(Error::DegenerateDenominator { term: k, modulus: f.norm() });
            }
            r /= f;
        }
        term *= r;
    }
    Ok(sum)
}

/// Integer power of a complex number, negative exponents allowed.
#[inline]
pub fn qpow(q: C64, e: i64) -> C64 {
    if e >= 0 {
        q.powu(e as u32)
    } else {
        ONE / q.powu((-e) as u32)
    }
}

pub fn close(a: C64, b: C64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
}
