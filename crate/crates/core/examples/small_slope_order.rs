//! Distance of computed profiles to the arctan references for small `s`,
//! the fitted power of `s`, and the `s`-derivative check.

use muskat_selfsim::continuation::{continue_branch, SolverSettings};
use muskat_selfsim::diagnostics::{derivative_distance, fit_order, h1_distance, Reference};

fn main() -> muskat_selfsim::Result<()> {
    let branch = continue_branch(0.4, 0.05, 129, &SolverSettings::default())?;
    let slopes = [0.05, 0.1, 0.2, 0.4];
    for reference in [Reference::KappaArctan, Reference::TheoremArctan] {
        let mut h1 = Vec::new();
        println!("reference {reference:?}");
        for &s in &slopes {
            let r = h1_distance(&branch.step(s)?.profile, reference)?;
            println!(
                "  s = {s:<5} H1 = {:.4e}  sup = {:.4e}",
                r.h1_distance, r.linf_distance
            );
            h1.push(r.h1_distance);
        }
        println!(
            "  fitted order {:.3}",
            fit_order(&slopes, &h1).unwrap_or(f64::NAN)
        );
    }
    for (a, b) in [(0.05, 0.1), (0.1, 0.2), (0.2, 0.3), (0.3, 0.4)] {
        let d = derivative_distance(&branch.step(a)?.profile, &branch.step(b)?.profile)?;
        println!(
            "(k_{b} - k_{a}) / {:.2} vs (2/pi) arctan y: H1 = {d:.4e}",
            b - a
        );
    }
    Ok(())
}
