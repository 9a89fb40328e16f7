//! The q-difference operators in z and the recurrence operators in n,
//! applied to a single polynomial.

use qonsager::gr_poly::{normalized_qhat, normalized_qhat_signed, AlphaParams};
use qonsager::qcore::{c, C64};
use qonsager::qdiff_ops::{apply_dn, apply_dstar, dn_eigenvalue, dstar_eigenvalue, recurrence_table, DstarForm};

fn main() -> qonsager::Result<()> {
    let al = AlphaParams::new([1.1, 0.9, 0.8, 1.2, 0.75].map(c).to_vec(), c(0.7))?;
    let n = [2usize, 1];
    let ni = [2i64, 1];
    let z = vec![C64::new(0.4, 0.9), C64::new(1.3, -0.2)];
    let f = |w: &[C64]| normalized_qhat(&n, w, &al).unwrap();
    let g = |m: &[i64]| normalized_qhat_signed(m, &z, &al).unwrap();
    for k in 1..=al.n() {
        let lhs = apply_dstar(k, &f, &z, &al, DstarForm::Cbar)?;
        let rhs = dstar_eigenvalue(k, &n, &al) * f(&z);
        println!("D*_{k}: {lhs:.10} vs {rhs:.10}");
        let lhs = apply_dn(k, &g, &ni, &al)?;
        let rhs = dn_eigenvalue(k, &z) * g(&ni);
        println!("D_{k}:  {lhs:.10} vs {rhs:.10}");
    }
    for coef in recurrence_table(2, &ni, &al)? {
        println!("{} nu={:?} shift={:?} {:.10}", coef.kind.label(), coef.nu, coef.shift, coef.value);
    }
    Ok(())
}
