//! Multivariable Askey-Wilson polynomials and their duality on the grid.

use qonsager::gr_poly::{askey_wilson_p, dual_alphas, normalized_qhat, restricted_qtilde, AlphaParams};
use qonsager::qcore::{c, C64};

fn main() -> qonsager::Result<()> {
    let q = c(0.7);
    let al = AlphaParams::new([1.1, 0.9, 0.8, 1.2, 0.75].map(c).to_vec(), q)?;
    let z = [C64::new(0.4, 0.9), C64::new(1.3, -0.2)];
    for n in [[0usize, 0], [1, 0], [0, 1], [2, 1]] {
        println!("Q-hat{n:?}(z) = {:.6}", normalized_qhat(&n, &z, &al)?);
    }

    let abcd = [C64::new(0.3, 0.1), c(0.5), C64::new(-0.2, 0.4), C64::new(0.6, -0.3)];
    println!("p_2 one variable = {:.6}", askey_wilson_p(2, z[0], abcd, q, &al.policy)?);

    let dual = dual_alphas(&al);
    let (n, nt) = ([1usize, 2], [2usize, 0]);
    let lhs = restricted_qtilde(&n, &nt, &al)?;
    let rhs = restricted_qtilde(&nt, &n, &dual)?;
    println!("duality: {lhs:.12} vs {rhs:.12}");
    Ok(())
}
