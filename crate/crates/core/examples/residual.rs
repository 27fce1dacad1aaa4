//! Residual of the linear ansatz `k~ = (2/pi) s z` for a few slopes.
//!
//! The linear profile is exact to first order in `s`, so the maximal
//! residual should shrink like `s^3`.

use std::time::Instant;

use muskat_selfsim::analytic::SlopeParam;
use muskat_selfsim::residual::{residual_vector, ResidualConfig};
use muskat_selfsim::spline::{make_grid, Profile};

fn main() -> muskat_selfsim::Result<()> {
    let grid = make_grid(129)?;
    let cfg = ResidualConfig::default();
    let mut prev: Option<(f64, f64)> = None;
    for s in [0.05, 0.1, 0.2, 0.4] {
        let profile = Profile::linear(&grid, SlopeParam::new(s)?)?;
        let t = Instant::now();
        let r = residual_vector(&profile, &cfg)?;
        let max = r.max_interior();
        let order = prev.map(|(s0, r0)| (max / r0).ln() / (s / s0).ln());
        println!(
            "s = {s:<5} max |R| = {max:.3e}  local order = {}  ({:.1} ms)",
            order.map_or("-".to_string(), |o| format!("{o:.3}")),
            t.elapsed().as_secs_f64() * 1e3
        );
        prev = Some((s, max));
    }
    Ok(())
}
