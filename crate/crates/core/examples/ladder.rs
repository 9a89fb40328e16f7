//! Raising and lowering operators acting on the polynomials.

use qonsager::gr_poly::AlphaParams;
use qonsager::ladder::verify_ladder;
use qonsager::qcore::{c, C64};

fn main() -> qonsager::Result<()> {
    let al = AlphaParams::new([1.05, 0.95, 1.1, 0.9, 1.02].map(c).to_vec(), c(0.7))?;
    let points = vec![vec![C64::from_polar(1.0, 0.7), C64::from_polar(1.0, 1.9)]];
    for n in [[0usize, 0], [1, 0], [1, 1], [0, 2]] {
        for k in 1..=al.n() {
            let r = verify_ladder(k, &n, &al, &points)?;
            println!("k={k} n={n:?}: raise {:.1e} lower {:.1e} b = {:.6}", r.raise, r.lower, r.raise_coefficient);
        }
    }
    Ok(())
}
