//! The quadratic bricks on `L_s`: their worst ratio to the `s^2` shape
//! bounds, on refining lattices.

use muskat_selfsim::analytic::{
    delta_brick, fitted_delta_constant, fitted_j_constant, j_brick, kappa, SlopeParam,
};

fn main() -> muskat_selfsim::Result<()> {
    let id = |y: f64| y;
    println!(
        "f(y) = y at alpha = 0.5, y = 3: delta = {:.12}  J = {:.12}",
        delta_brick(&id, 0.5, 3.0)?,
        j_brick(&id, 0.5, 3.0)?
    );
    for s in [0.1, 0.5, 1.0] {
        let sp = SlopeParam::new(s)?;
        print!("s = {s:<4} kappa = {:.6}", kappa(sp));
        for n in [9, 17, 33] {
            print!(
                "  [{n}] C_delta = {:.4} C_J = {:.4}",
                fitted_delta_constant(sp, n)?,
                fitted_j_constant(sp, n)?
            );
        }
        println!();
    }
    Ok(())
}
