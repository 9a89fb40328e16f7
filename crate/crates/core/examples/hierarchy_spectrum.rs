//! Commuting hierarchy on a module and the spectrum of I1.

use qonsager::hierarchy::{hierarchy_report, BoundaryParams, HamiltonianSpec};
use qonsager::onsager_modules::ModuleSpec;
use qonsager::qcore::{c, C64};

fn main() -> qonsager::Result<()> {
    let spec = ModuleSpec::new(vec![0.5, 0.5, 0.5], C64::new(0.3, 0.2), C64::new(0.7, -0.1), c(0.7))?;
    let bp = BoundaryParams::new(C64::new(0.4, 0.1), C64::new(-0.3, 0.2), C64::new(0.6, 0.0), C64::new(0.2, -0.5))?;
    let h = HamiltonianSpec { h0: c(1.0), h_minus1: c(0.5), offset: c(0.0) };
    let r = hierarchy_report(&spec, &bp, &h)?;
    println!("[I1, I3] = {:.2e}, [I1, H] = {:.2e}", r.commutator, r.h_commutator);
    println!("primal/dual spectra differ by {:.2e}", r.isospectral);
    for v in &r.spectrum {
        println!("{v:.8}");
    }
    Ok(())
}
