//! The q = 1 case: multivariable Krawtchouk and Racah polynomials and their modules.

use qonsager::classical_q1::{
    build_onsager_module_q1, krawtchouk_khat, racah_gram_and_td_check, KrawtchoukParams, RacahParams,
};

fn main() -> qonsager::Result<()> {
    let kp = KrawtchoukParams::new(vec![0.2, 0.15], 4.0)?;
    println!("K-hat[1,1](2,1) = {:.10}", krawtchouk_khat(&[1, 1], &[2.0, 1.0], &kp)?);
    let dual = kp.dual()?;
    let a = krawtchouk_khat(&[2, 1], &[1.0, 2.0], &kp)?;
    // Degree and point swap roles, each read in reverse order.
    let b = krawtchouk_khat(&[2, 1], &[1.0, 2.0], &dual)?;
    println!("duality {a:.12} vs {b:.12}");

    for l in 1..=kp.n() {
        let m = build_onsager_module_q1(l, &kp)?;
        println!(
            "level {l}: dim {} Dolan-Grady {:.1e} multiplicities {:?}",
            m.grid.len(),
            m.dolan_grady.max(),
            m.multiplicities
        );
    }

    let rp = RacahParams::new(vec![0.3, 1.7, 2.9, 4.3], 5)?;
    for l in 1..=rp.n() {
        let r = racah_gram_and_td_check(&rp, l)?;
        println!("Racah level {l}: gram off-diagonal {:.1e}, TD {:.1e}", r.gram_offdiag, r.td.max());
    }
    Ok(())
}
