//! A finite q-Onsager module built from spins, with its relations and spectra.

use qonsager::onsager_modules::{
    build_dual_pair, build_w0_blocktri, build_w1_diag, theta, theta_star, truncation_leak, verify_qdg,
    verify_td_pair, ModuleSpec, TdOptions,
};
use qonsager::qcore::{c, C64};

fn main() -> qonsager::Result<()> {
    let spec = ModuleSpec::new(vec![1.0, 0.5], C64::new(0.3, 0.2), C64::new(0.7, -0.1), c(0.7))?;
    let w0 = build_w0_blocktri(&spec)?;
    let w1 = build_w1_diag(&spec);
    println!("dimension {} (diameter {})", w0.dim(), spec.diameter());
    let r = verify_qdg(&w0.entries, &w1.entries, spec.alpha.q, spec.rho())?;
    println!("q-Dolan-Grady residuals {:.2e} {:.2e}", r.forward, r.backward);
    let (d0, d1) = build_dual_pair(&spec)?;
    println!("dual relations {:.2e}", verify_qdg(&d0.entries, &d1.entries, spec.alpha.q, spec.rho())?.max());
    println!("truncation leak {:.2e}", truncation_leak(&spec)?);
    for p in 0..=spec.diameter() {
        println!("grade {p}: theta {:.6} theta* {:.6}", theta(p, &spec.alpha), theta_star(p, &spec.alpha));
    }
    let td = verify_td_pair(&w0.entries, &w1.entries, &TdOptions::default())?;
    println!("tridiagonal pair: {} (d = {}, delta = {})", td.passed, td.d, td.delta);
    Ok(())
}
