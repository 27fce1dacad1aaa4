//! The two integrators on a smooth and a singular integrand.

use std::f64::consts::PI;

use muskat_selfsim::quadrature::{gk15_adaptive, trapezoid, QuadConfig};

fn main() -> muskat_selfsim::Result<()> {
    println!("trapezoid on sin over [0, pi]");
    let mut prev: Option<f64> = None;
    for m in [9, 17, 33, 65, 129] {
        let err = (trapezoid(f64::sin, 0.0, PI, m)? - 2.0).abs();
        let ratio = prev.map_or("-".to_string(), |p| format!("{:.4}", p / err));
        println!("  nodes = {m:<4} error = {err:.3e}  ratio = {ratio}");
        prev = Some(err);
    }

    println!("adaptive Gauss-Kronrod");
    let cfg = QuadConfig::default();
    type Case = (&'static str, fn(f64) -> f64, f64, f64, f64);
    let cases: [Case; 3] = [
        (
            "1/(1+x^2) on [0, 1]",
            |x| 1.0 / (1.0 + x * x),
            0.0,
            1.0,
            PI / 4.0,
        ),
        ("sqrt(x) on [0, 1]", f64::sqrt, 0.0, 1.0, 2.0 / 3.0),
        ("-ln(x) on [0, 1]", |x| -x.ln(), 0.0, 1.0, 1.0),
    ];
    for (name, f, a, b, exact) in cases {
        let r = gk15_adaptive(f, a, b, &cfg)?;
        println!(
            "  {name:<22} error = {:.2e}  estimate = {:.2e}  panels = {}",
            (r.value - exact).abs(),
            r.error_estimate,
            r.subdivisions
        );
    }
    Ok(())
}
