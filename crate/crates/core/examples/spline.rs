//! Interpolation error of the profile spline on `k~ = sin z cos z`
//! (the image of `y / (1 + y^2)`) under grid refinement.

use muskat_selfsim::analytic::SlopeParam;
use muskat_selfsim::spline::{fit_spline, make_grid};

fn main() -> muskat_selfsim::Result<()> {
    let f = |z: f64| z.sin() * z.cos();
    let df = |z: f64| (2.0 * z).cos();
    let zero = SlopeParam::new(0.0)?;
    let mut prev: Option<(f64, f64)> = None;
    for n in [17, 33, 65, 129] {
        let grid = make_grid(n)?;
        let values: Vec<f64> = grid.nodes().iter().map(|&z| f(z)).collect();
        let profile = fit_spline(&grid, &values, zero)?;
        let (mut e0, mut e1) = (0.0_f64, 0.0_f64);
        for i in 0..=2000 {
            let z = std::f64::consts::FRAC_PI_2 * i as f64 / 2000.0;
            e0 = e0.max((profile.eval(z)? - f(z)).abs());
            e1 = e1.max((profile.eval_deriv(z)? - df(z)).abs());
        }
        let orders = prev.map_or("-".to_string(), |(p0, p1)| {
            format!("{:.2} / {:.2}", (p0 / e0).log2(), (p1 / e1).log2())
        });
        println!("N = {n:<4} value error = {e0:.3e}  slope error = {e1:.3e}  orders = {orders}");
        prev = Some((e0, e1));
    }
    Ok(())
}
