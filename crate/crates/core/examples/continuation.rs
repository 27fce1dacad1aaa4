//! March the branch from `s = 0` in increments of `ds` and print the
//! convergence history of every step.
//!
//! Usage: `cargo run --release --example continuation [s_max] [ds] [N]`

use std::time::Instant;

use muskat_selfsim::continuation::{continue_branch_with, SolverSettings};

fn main() -> muskat_selfsim::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let s_max = args.first().copied().unwrap_or(1.0);
    let ds = args.get(1).copied().unwrap_or(0.1);
    let n = args.get(2).map_or(129, |v| *v as usize);

    let settings = SolverSettings::default();
    let start = Instant::now();
    let branch = continue_branch_with(s_max, ds, n, &settings, |st| {
        println!(
            "s = {:>5.2}  iterations = {:>2}  max |R| = {:.2e}  k~(pi/4) = {:.6}{}  [{:.1} s]",
            st.s,
            st.report.iterations,
            st.report.residual_norm,
            st.profile
                .eval(std::f64::consts::FRAC_PI_4)
                .unwrap_or(f64::NAN),
            if st.halved { "  (halved)" } else { "" },
            start.elapsed().as_secs_f64()
        );
    })?;
    match &branch.failure {
        None => println!("reached s = {s_max} in {} steps", branch.len()),
        Some(f) => println!("stopped at s = {}: {}", f.s, f.message),
    }
    Ok(())
}
