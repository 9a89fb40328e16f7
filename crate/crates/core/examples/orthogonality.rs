//! Gram matrix of the one-variable polynomials under the continuous measure.

use qonsager::gr_poly::AlphaParams;
use qonsager::ortho::{check_conditions, gram_matrix};
use qonsager::qcore::c;

fn main() -> qonsager::Result<()> {
    let al = AlphaParams::new([1.3, 0.7, 0.4, 0.8].map(c).to_vec(), c(0.6))?;
    check_conditions(&al)?;
    let idx: Vec<Vec<usize>> = (0..=4).map(|n| vec![n]).collect();
    for nodes in [200, 1000] {
        let g = gram_matrix(&idx, &al, nodes)?;
        println!("{nodes} nodes: off-diagonal {:.2e}, norm deviation {:.2e}", g.max_offdiag, g.max_diag_dev);
    }
    Ok(())
}
