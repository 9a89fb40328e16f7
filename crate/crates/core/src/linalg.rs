//! Dense complex matrix helpers on top of nalgebra.

use crate::error::{Error, Result};
use crate::qcore::{C64, ONE, ZERO};
use nalgebra::{DMatrix, DVector};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// [A, B]_q = q AB - q^{-1} BA.
pub fn q_commutator(a: &CMat, b: &CMat, q: C64) -> CMat {
    a * b * q - b * a / q
}

pub fn check_square_pair(a: &CMat, b: &CMat) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(a.nrows(), a.ncols()));
    }
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(a.nrows(), b.nrows()));
    }
    Ok(())
}

/// max |a - b| / max(max|a|, max|b|).
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let s = max_abs(a).max(max_abs(b));
    if s == 0.0 {
        0.0
    } else {
        max_abs(&(a - b)) / s
    }
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolverFailure("non-finite matrix entry".into()));
    }
    let schur = m.clone().try_schur(f64::EPSILON, 10_000).ok_or_else(|| {
        Error::EigensolverFailure("Schur iteration did not converge".into())
    })?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Sort by real part, then imaginary part.
pub fn sort_spectrum(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Largest pairwise deviation between two spectra matched greedily, relative
/// to the spectral radius.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = a.iter().chain(b).map(|v| v.norm()).fold(1e-300, f64::max);
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst / scale
}

/// Groups of nearly equal eigenvalues: (representative, multiplicity).
pub fn cluster(eigs: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize, C64)> = Vec::new();
    for &e in eigs {
        match out.iter_mut().find(|(r, _, _)| (r - e).norm() <= tol) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 += e;
            }
            None => out.push((e, 1, e)),
        }
    }
    out.into_iter().map(|(_, m, s)| (s / m as f64, m)).collect()
}

/// Orthonormal basis of the numerical kernel of A - lambda I.
pub fn eigenspace(m: &CMat, lambda: C64, mult: usize) -> Result<Vec<CVec>> {
    let n = m.nrows();
    let shifted = m - CMat::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::EigensolverFailure("SVD without right vectors".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    Ok(order[..mult]
        .iter()
        .map(|&i| vt.row(i).adjoint().into_owned())
        .collect())
}

/// Scale so that the first component with modulus above `tol` times the
/// largest one equals 1.
pub fn normalize_first_nonzero(v: &mut CVec, tol: f64) {
    let big = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return;
    }
    if let Some(p) = v.iter().position(|x| x.norm() > tol * big) {
        let s = v[p];
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// prod_{r != p} (A - theta_r)/(theta_p - theta_r).
pub fn lagrange_projector(a: &CMat, thetas: &[C64], p: usize) -> CMat {
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let mut e = id.clone();
    for (r, &t) in thetas.iter().enumerate() {
        if r != p {
            e = e * (a - &id * t) / (thetas[p] - t);
        }
    }
    e
}

/// prod_p (A - theta_p); vanishes iff A is diagonalizable with these eigenvalues.
pub fn minimal_polynomial_defect(a: &CMat, thetas: &[C64]) -> f64 {
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let scale = max_abs(a).max(1e-300);
    let mut e = id.clone();
    for &t in thetas {
        e = e * (a - &id * t) / C64::new(scale, 0.0);
    }
    max_abs(&e)
}

pub fn diag(v: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(v))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn solve(a: &CMat, b: &CVec) -> Result<CVec> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::EigensolverFailure("singular linear system".into()))
}

/// Number of singular values below `rel` times the largest.
pub fn nullity(a: &CMat, rel: f64) -> usize {
    let s = a.clone().singular_values();
    let hi = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&v| v <= rel * hi).count()
}

/// Ratio of extreme singular values.
pub fn condition_number(a: &CMat) -> f64 {
    let s = a.clone().singular_values();
    let hi = s.iter().cloned().fold(0.0, f64::max);
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn is_zero_matrix(a: &CMat) -> bool {
    a.iter().all(|&v| v == ZERO)
}

pub fn scalar(n: usize, v: C64) -> CMat {
    CMat::identity(n, n) * v
}

pub fn unit(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;

    fn random(n: usize, s: &mut Sampler) -> CMat {
        CMat::from_fn(n, n, |_, _| s.complex(1.0))
    }

    #[test]
    fn schur_eigenvalues_of_triangular() {
        let mut s = Sampler::new(1);
        let mut m = random(5, &mut s);
        for i in 0..5 {
            for j in 0..i {
                m[(i, j)] = ZERO;
            }
        }
        let mut got = eigenvalues(&m).unwrap();
        let mut want: Vec<C64> = (0..5).map(|i| m[(i, i)]).collect();
        sort_spectrum(&mut got);
        sort_spectrum(&mut want);
        assert!(spectrum_distance(&got, &want) < 1e-12);
    }

    #[test]
    fn similarity_preserves_spectrum() {
        let mut s = Sampler::new(2);
        let d: Vec<C64> = (0..6).map(|_| s.complex(2.0)).collect();
        let p = random(6, &mut s);
        let pinv = p.clone().try_inverse().unwrap();
        let m = &p * diag(&d) * pinv;
        let got = eigenvalues(&m).unwrap();
        assert!(spectrum_distance(&got, &d) < 1e-10);
        for &l in &d {
            let v = &eigenspace(&m, l, 1).unwrap()[0];
            let r = (&m * v - v * l).norm() / v.norm();
            assert!(r < 1e-9);
        }
    }

    #[test]
    fn projectors_resolve_identity() {
        let d = [C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0), C64::new(-1.0, 0.5)];
        let a = diag(&d);
        let th: Vec<C64> = cluster(&d, 1e-9).into_iter().map(|c| c.0).collect();
        assert_eq!(th.len(), 3);
        let sum = (0..3).fold(CMat::zeros(4, 4), |acc, p| acc + lagrange_projector(&a, &th, p));
        assert!(rel_diff(&sum, &identity(4)) < 1e-14);
        assert!(minimal_polynomial_defect(&a, &th) < 1e-14);
    }

    #[test]
    fn jordan_block_has_defect() {
        let mut a = identity(2);
        a[(0, 1)] = ONE;
        assert!(minimal_polynomial_defect(&a, &[ONE]) > 0.1);
    }

    #[test]
    fn normalization() {
        let mut v = CVec::from_vec(vec![ZERO, C64::new(0.0, 2.0), ONE]);
        normalize_first_nonzero(&mut v, 1e-12);
        assert_eq!(v[1], ONE);
    }
}
