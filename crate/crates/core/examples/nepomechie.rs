//! Tune the boundary so a window of the module is invariant under I1.

use qonsager::hierarchy::{nepomechie_check, solve_nepomechie, window_report, BoundaryParams, InvariantWindow, WindowSide};
use qonsager::onsager_modules::ModuleSpec;
use qonsager::qcore::{c, C64};

fn main() -> qonsager::Result<()> {
    let spec = ModuleSpec::new(vec![1.5], C64::new(0.3, 0.2), C64::new(0.7, -0.1), c(0.7))?;
    let base = BoundaryParams::new(C64::new(0.4, 0.1), C64::new(-0.3, 0.2), C64::new(0.6, 0.0), C64::new(0.2, -0.5))?;
    for side in WindowSide::ALL {
        let w = InvariantWindow { side, cutoff: 1 };
        let before = window_report(&spec, w, &base)?;
        let bp = solve_nepomechie(w, &spec.alpha, &base);
        let after = window_report(&spec, w, &bp)?;
        let chk = nepomechie_check(w, &spec.alpha, &bp);
        println!(
            "{:<4} coupling {:.2e} -> {:.2e}, relation holds {} ({:.1e})",
            side.label(),
            before.coupling,
            after.coupling,
            chk.holds,
            chk.defect
        );
    }
    Ok(())
}
